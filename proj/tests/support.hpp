#pragma once
// Shared fixtures and independent oracles for the test suites.

#include "ledgerscope/corpus.hpp"
#include "ledgerscope/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace lstest {

using namespace ledgerscope;

inline std::string txid_hex(std::uint64_t salt, std::uint64_t n) {
    char buf[65];
    std::snprintf(buf, sizeof buf, "%016llx%048llx", static_cast<unsigned long long>(salt),
                  static_cast<unsigned long long>(n));
    return buf;
}

struct RandomCorpusSpec {
    std::uint64_t seed = 1;
    std::uint32_t addresses = 50;
    std::uint32_t transactions = 200;
    UnixSeconds start = 1'230'768'000;
    UnixSeconds span = 400 * kSecondsPerDay;
    std::uint32_t max_inputs = 4;
    std::uint32_t max_outputs = 3;
    double coinbase_fraction = 0.1;
    // Share of non-coinbase transactions with two or more inputs.
    double multi_input_fraction = 0.3;
};

// Unstructured random ledger: inputs and outputs are drawn uniformly from the
// address pool, so co-input components have arbitrary shapes.
inline std::vector<RawTransaction> random_corpus(const RandomCorpusSpec& s) {
    Rng rng(s.seed);
    std::vector<RawTransaction> out;
    out.reserve(s.transactions);
    auto addr = [&] { return "a" + std::to_string(rng.below(s.addresses)); };
    for (std::uint32_t i = 0; i < s.transactions; ++i) {
        RawTransaction tx;
        tx.txid = txid_hex(s.seed, i);
        tx.time = s.start + static_cast<UnixSeconds>(rng.below(static_cast<std::uint64_t>(s.span)));
        Satoshi budget = 0;
        if (rng.unit() >= s.coinbase_fraction) {
            const auto n_in = s.max_inputs > 1 && rng.unit() < s.multi_input_fraction ? 2 + rng.below(s.max_inputs - 1) : 1;
            for (std::uint64_t k = 0; k < n_in; ++k) {
                const Satoshi v = rng.between(1, 5'000'000'000LL);
                tx.vin.push_back({addr(), v});
                budget += v;
            }
        } else {
            budget = 5'000'000'000LL;
        }
        const auto n_out = 1 + rng.below(s.max_outputs);
        for (std::uint64_t k = 0; k < n_out; ++k) {
            const Satoshi v = k + 1 == n_out ? budget : rng.between(0, budget);
            tx.vout.push_back({addr(), v});
            budget -= v;
        }
        out.push_back(std::move(tx));
    }
    return out;
}

// Connected components of the co-input graph by explicit BFS, as a set of
// address-string sets. Output-only addresses are singletons.
inline std::set<std::set<std::string>> bfs_components(const std::vector<RawTransaction>& txs) {
    std::map<std::string, std::set<std::string>> adj;
    for (const auto& tx : txs) {
        for (const auto& a : tx.vin)
            for (const auto& b : tx.vin) adj[a.addr].insert(b.addr);
        for (const auto& o : tx.vout) adj[o.addr];
    }
    std::set<std::string> seen;
    std::set<std::set<std::string>> comps;
    for (const auto& [start, _] : adj) {
        if (seen.count(start)) continue;
        std::set<std::string> comp;
        std::vector<std::string> queue{start};
        seen.insert(start);
        for (std::size_t q = 0; q < queue.size(); ++q) {
            comp.insert(queue[q]);
            for (const auto& n : adj[queue[q]])
                if (seen.insert(n).second) queue.push_back(n);
        }
        comps.insert(std::move(comp));
    }
    return comps;
}

inline std::set<std::set<std::string>> index_partition(const EntityIndex& index, const TransactionStore& store) {
    std::set<std::set<std::string>> parts;
    for (EntityId e = 0; e < index.entity_count(); ++e) {
        std::set<std::string> p;
        for (auto a : index.members(e)) p.insert(store.address(a));
        parts.insert(std::move(p));
    }
    return parts;
}

// Direct raw-scan measures for one entity, given the address -> entity map.
// Works from the raw records so it shares no code with the slice path.
struct OracleMeasures {
    std::uint64_t n_sender = 0, n_receiver = 0, n_any = 0;
    UnixSeconds first = 0, last = 0;
    Satoshi rec_min = 0, rec_max = 0, sent_min = 0, sent_max = 0;
    long double rec_sum = 0, sent_sum = 0;
    std::uint32_t in_min = 0, in_max = 0, out_min = 0, out_max = 0;
    long double in_sum = 0, out_sum = 0;
};

// Folds one transaction's contribution into m; m.n_any == 0 means empty.
inline void oracle_add(OracleMeasures& m, UnixSeconds time, bool s, Satoshi sent, bool r, Satoshi rec,
                       std::uint32_t nin, std::uint32_t nout) {
    if (m.n_any == 0) {
        m.first = m.last = time;
        m.in_min = m.in_max = nin;
        m.out_min = m.out_max = nout;
    }
    m.first = std::min(m.first, time);
    m.last = std::max(m.last, time);
    m.in_min = std::min(m.in_min, nin);
    m.in_max = std::max(m.in_max, nin);
    m.out_min = std::min(m.out_min, nout);
    m.out_max = std::max(m.out_max, nout);
    m.in_sum += nin;
    m.out_sum += nout;
    ++m.n_any;
    if (s) {
        m.sent_min = m.n_sender ? std::min(m.sent_min, sent) : sent;
        m.sent_max = m.n_sender ? std::max(m.sent_max, sent) : sent;
        m.sent_sum += sent;
        ++m.n_sender;
    }
    if (r) {
        m.rec_min = m.n_receiver ? std::min(m.rec_min, rec) : rec;
        m.rec_max = m.n_receiver ? std::max(m.rec_max, rec) : rec;
        m.rec_sum += rec;
        ++m.n_receiver;
    }
}

inline std::optional<OracleMeasures> oracle_measures(const std::vector<RawTransaction>& txs,
                                                     const std::unordered_map<std::string, EntityId>& entity_of,
                                                     EntityId e, TimeRange range) {
    OracleMeasures m;
    for (const auto& tx : txs) {
        if (tx.time < range.from || tx.time >= range.to) continue;
        Satoshi sent = 0, rec = 0;
        bool s = false, r = false;
        for (const auto& i : tx.vin)
            if (entity_of.at(i.addr) == e) s = true, sent += i.value;
        for (const auto& o : tx.vout)
            if (entity_of.at(o.addr) == e) r = true, rec += o.value;
        if (!s && !r) continue;
        oracle_add(m, tx.time, s, sent, r, rec, static_cast<std::uint32_t>(tx.vin.size()),
                   static_cast<std::uint32_t>(tx.vout.size()));
    }
    if (m.n_any == 0) return std::nullopt;
    return m;
}

inline std::unordered_map<std::string, EntityId> address_entity_map(const EntityIndex& index,
                                                                    const TransactionStore& store) {
    std::unordered_map<std::string, EntityId> map;
    for (AddressId a = 0; a < store.address_count(); ++a) map[store.address(a)] = index.entity_of(a);
    return map;
}

inline bool close_rel(double a, double b, double rel = 1e-12) {
    return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

// Empty string when the library row agrees with the oracle, else a description.
inline std::string compare_measures(const ActivityMeasures& got, const OracleMeasures& want) {
    auto diff = [](const char* what, auto a, auto b) {
        return std::string(what) + ": got " + std::to_string(a) + " want " + std::to_string(b);
    };
    if (got.num_txs_sender != want.n_sender) return diff("num_txs_sender", got.num_txs_sender, want.n_sender);
    if (got.num_txs_receiver != want.n_receiver)
        return diff("num_txs_receiver", got.num_txs_receiver, want.n_receiver);
    if (got.num_txs_any != want.n_any) return diff("num_txs_any", got.num_txs_any, want.n_any);
    if (got.time_first != want.first) return diff("time_first", got.time_first, want.first);
    if (got.time_last != want.last) return diff("time_last", got.time_last, want.last);
    if (!close_rel(got.time_active_days, static_cast<double>(want.last - want.first) / 86400.0))
        return "time_active";
    if (got.amount_rec.has_value() != (want.n_receiver > 0)) return "amount_rec presence";
    if (got.amount_rec) {
        if (got.amount_rec->smallest != want.rec_min) return diff("amount_rec.smallest", got.amount_rec->smallest, want.rec_min);
        if (got.amount_rec->largest != want.rec_max) return diff("amount_rec.largest", got.amount_rec->largest, want.rec_max);
        if (!close_rel(got.amount_rec->average, static_cast<double>(want.rec_sum / want.n_receiver)))
            return diff("amount_rec.average", got.amount_rec->average, static_cast<double>(want.rec_sum / want.n_receiver));
    }
    if (got.amount_sent.has_value() != (want.n_sender > 0)) return "amount_sent presence";
    if (got.amount_sent) {
        if (got.amount_sent->smallest != want.sent_min) return diff("amount_sent.smallest", got.amount_sent->smallest, want.sent_min);
        if (got.amount_sent->largest != want.sent_max) return diff("amount_sent.largest", got.amount_sent->largest, want.sent_max);
        if (!close_rel(got.amount_sent->average, static_cast<double>(want.sent_sum / want.n_sender)))
            return "amount_sent.average";
    }
    if (got.num_inputs.smallest != want.in_min) return diff("num_inputs.smallest", got.num_inputs.smallest, want.in_min);
    if (got.num_inputs.largest != want.in_max) return diff("num_inputs.largest", got.num_inputs.largest, want.in_max);
    if (!close_rel(got.num_inputs.average, static_cast<double>(want.in_sum / want.n_any))) return "num_inputs.average";
    if (got.num_outputs.smallest != want.out_min) return diff("num_outputs.smallest", got.num_outputs.smallest, want.out_min);
    if (got.num_outputs.largest != want.out_max) return diff("num_outputs.largest", got.num_outputs.largest, want.out_max);
    if (!close_rel(got.num_outputs.average, static_cast<double>(want.out_sum / want.n_any))) return "num_outputs.average";
    return {};
}

// The Bob/Alice example: Bob spends X and Y (0.01 BTC each), pays Alice
// 0.015 BTC and sends 0.005 BTC change back to X.
inline std::vector<RawTransaction> bob_alice() {
    RawTransaction tx;
    tx.txid = std::string(64, 'b');
    tx.time = 1'300'000'000;
    tx.vin = {{"X", 1'000'000}, {"Y", 1'000'000}};
    tx.vout = {{"Alice", 1'500'000}, {"X", 500'000}};
    return {tx};
}

inline Corpus corpus_of(std::vector<RawTransaction> txs) { return build_corpus(TransactionStore::build(std::move(txs))); }

}  // namespace lstest
