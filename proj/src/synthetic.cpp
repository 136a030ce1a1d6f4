#include "ledgerscope/synthetic.hpp"
#include "ledgerscope/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace ledgerscope {

namespace {

std::string hex(std::uint64_t v, int width) {
    std::string s(static_cast<std::size_t>(width), '0');
    for (int i = width - 1; i >= 0 && v; --i, v >>= 4) s[static_cast<std::size_t>(i)] = "0123456789abcdef"[v & 15];
    return s;
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr Satoshi kBlockReward = 50 * kSatoshiPerBtc;

struct PlantedEntity {
    std::string profile;
    std::vector<std::string> addresses;
};

class Builder {
public:
    explicit Builder(const GeneratorConfig& cfg)
        : cfg_(cfg), rng_(cfg.seed), txid_prefix_(hex(splitmix(cfg.seed), 16)) {}

    SyntheticCorpus run() {
        const std::uint32_t n_one = cfg_.one_timer_count();
        const std::uint32_t n_regular = cfg_.n_entities - n_one - cfg_.n_miners - cfg_.n_exchanges - cfg_.n_high_activity;

        for (std::uint32_t i = 0; i < cfg_.n_exchanges; ++i) add_entity("exchange", 5 + rng_.below(16));
        for (std::uint32_t i = 0; i < cfg_.n_exchanges; ++i) plant_exchange(i);
        const std::uint32_t n_before = static_cast<std::uint32_t>(std::llround(cfg_.miner_before_fraction * cfg_.n_miners));
        const std::uint32_t n_after = static_cast<std::uint32_t>(std::llround(cfg_.miner_after_fraction * cfg_.n_miners));
        for (std::uint32_t i = 0; i < cfg_.n_miners; ++i) plant_miner(i < n_before ? 0 : i < n_before + n_after ? 1 : 2);
        for (std::uint32_t i = 0; i < cfg_.n_high_activity; ++i)
            plant_spender("high_activity", cfg_.high_payouts_min, cfg_.high_payouts_max, cfg_.high_sends_min,
                          cfg_.high_sends_max);
        for (std::uint32_t i = 0; i < n_regular; ++i)
            plant_spender("regular", cfg_.regular_payouts_min, cfg_.regular_payouts_max, cfg_.regular_sends_min,
                          cfg_.regular_sends_max);
        for (std::uint32_t i = 0; i < n_one; ++i) plant_one_timer();

        SyntheticCorpus out;
        std::sort(txs_.begin(), txs_.end(), [](const RawTransaction& a, const RawTransaction& b) {
            return a.time != b.time ? a.time < b.time : a.txid < b.txid;
        });
        out.transactions = std::move(txs_);
        out.tags_csv = "address,label,category\n";
        for (std::uint32_t e = 0; e < entities_.size(); ++e) {
            out.entity_profile.push_back(entities_[e].profile);
            for (const auto& a : entities_[e].addresses) out.truth.push_back({a, e, entities_[e].profile});
        }
        for (std::uint32_t i = 0; i < cfg_.n_exchanges; ++i) {
            const std::string label = i == 0 ? "MtGox" : "Exchange-" + std::to_string(i);
            for (const auto& a : entities_[i].addresses) out.tags_csv += a + "," + label + ",exchange\n";
        }
        return out;
    }

private:
    std::string next_txid() { return txid_prefix_ + hex(counter_++, 48); }
    UnixSeconds time_in(UnixSeconds lo, UnixSeconds hi) { return rng_.between(lo, hi - 1); }

    PlantedEntity& add_entity(std::string profile, std::size_t n_addresses) {
        const auto e = entities_.size();
        PlantedEntity ent{std::move(profile), {}};
        for (std::size_t k = 0; k < n_addresses; ++k) ent.addresses.push_back("1LS" + hex(e, 8) + "x" + hex(k, 4));
        entities_.push_back(std::move(ent));
        return entities_.back();
    }

    void payout(UnixSeconds t, const std::string& to, Satoshi amount) {
        const auto& ex = entities_[rng_.below(cfg_.n_exchanges)];
        RawTransaction tx{next_txid(), t, {}, {}};
        const std::size_t n_in = 1 + rng_.below(2);
        const Satoshi change = rng_.log_uniform(1'000, 100'000'000);
        const Satoshi fee = static_cast<Satoshi>(rng_.below(10'001));
        Satoshi remaining = amount + change + fee;
        for (std::size_t i = 0; i < n_in; ++i) {
            const Satoshi part = i + 1 == n_in ? remaining : remaining / 2;
            tx.vin.push_back({ex.addresses[rng_.below(ex.addresses.size())], part});
            remaining -= part;
        }
        tx.vout.push_back({to, amount});
        tx.vout.push_back({tx.vin.front().addr, change});
        txs_.push_back(std::move(tx));
    }

    void deposit(UnixSeconds t, const std::vector<std::string>& inputs) {
        RawTransaction tx{next_txid(), t, {}, {}};
        Satoshi total = 0;
        for (const auto& a : inputs) {
            const Satoshi v = rng_.log_uniform(10'000, 1'000'000'000);
            tx.vin.push_back({a, v});
            total += v;
        }
        const Satoshi fee = std::min<Satoshi>(total / 100, static_cast<Satoshi>(rng_.below(10'001)));
        const Satoshi sent = (total - fee) / 2 + static_cast<Satoshi>(rng_.below(static_cast<std::uint64_t>((total - fee) / 2 + 1)));
        tx.vout.push_back({random_exchange_address(), sent});
        if (total - fee - sent > 0) tx.vout.push_back({inputs.front(), total - fee - sent});
        txs_.push_back(std::move(tx));
    }

    void coinbase(UnixSeconds t, const std::string& to) {
        const bool halved = cfg_.event_time && t >= *cfg_.event_time;
        txs_.push_back({next_txid(), t, {}, {{to, halved ? kBlockReward / 2 : kBlockReward}}});
    }

    const std::string& random_exchange_address() {
        const auto& ex = entities_[rng_.below(cfg_.n_exchanges)];
        return ex.addresses[rng_.below(ex.addresses.size())];
    }

    std::vector<std::string> random_inputs(const std::vector<std::string>& addrs) {
        std::vector<std::string> in{addrs.front()};
        for (std::size_t k = 1; k < addrs.size(); ++k)
            if (rng_.below(2)) in.push_back(addrs[k]);
        return in;
    }

    void plant_exchange(std::size_t i) {
        const auto addrs = entities_[i].addresses;
        // One consolidation links every address of the exchange.
        deposit_to_self(time_in(cfg_.start_time, cfg_.end_time), addrs);
        for (std::uint32_t k = 0; k < cfg_.exchange_internal_txs; ++k)
            deposit_to_self(time_in(cfg_.start_time, cfg_.end_time), random_inputs(addrs));
    }

    void deposit_to_self(UnixSeconds t, const std::vector<std::string>& inputs) {
        RawTransaction tx{next_txid(), t, {}, {}};
        Satoshi total = 0;
        for (const auto& a : inputs) {
            const Satoshi v = rng_.log_uniform(100'000, 10'000'000'000);
            tx.vin.push_back({a, v});
            total += v;
        }
        tx.vout.push_back({inputs.front(), total - std::min<Satoshi>(total, 1'000)});
        txs_.push_back(std::move(tx));
    }

    // phase: 0 before event, 1 after event, 2 both sides.
    void plant_miner(std::uint32_t phase) {
        const bool phased = cfg_.event_time.has_value();
        const std::string profile = !phased ? "miner" : phase == 0 ? "miner_before" : phase == 1 ? "miner_after" : "miner_both";
        const std::uint32_t n_sells = cfg_.n_exchanges > 0 ? static_cast<std::uint32_t>(rng_.below(3)) : 0;
        const std::size_t n_addr = n_sells > 0 ? 1 + rng_.below(2) : 1;
        const auto addrs = add_entity(profile, n_addr).addresses;

        UnixSeconds lo = cfg_.start_time, hi = cfg_.end_time;
        if (phased && phase == 0) hi = *cfg_.event_time;
        if (phased && phase == 1) lo = *cfg_.event_time;

        const std::uint32_t n_coinbase = 2 + static_cast<std::uint32_t>(rng_.below(3));
        std::vector<UnixSeconds> times;
        for (std::uint32_t c = 0; c < n_coinbase; ++c) {
            UnixSeconds t = time_in(lo, hi);
            if (phased && phase == 2 && c == 0) t = time_in(cfg_.start_time, *cfg_.event_time);
            if (phased && phase == 2 && c == 1) t = time_in(*cfg_.event_time, cfg_.end_time);
            times.push_back(t);
            coinbase(t, addrs[c % addrs.size()]);
        }
        const UnixSeconds earliest = *std::min_element(times.begin(), times.end());
        for (std::uint32_t s = 0; s < n_sells; ++s)
            deposit(time_in(earliest, phased && phase == 0 ? *cfg_.event_time : cfg_.end_time),
                    s == 0 ? addrs : random_inputs(addrs));
    }

    void plant_spender(const std::string& profile, std::uint32_t pay_min, std::uint32_t pay_max, std::uint32_t send_min,
                       std::uint32_t send_max) {
        const auto n_pay = static_cast<std::uint32_t>(rng_.between(pay_min, pay_max));
        const auto n_send = static_cast<std::uint32_t>(rng_.between(send_min, send_max));
        const std::size_t n_addr = n_send > 0 ? 1 + rng_.below(std::min<std::uint32_t>(3, n_pay)) : 1;
        const auto addrs = add_entity(profile, n_addr).addresses;
        UnixSeconds earliest = cfg_.end_time;
        for (std::uint32_t p = 0; p < n_pay; ++p) {
            const UnixSeconds t = time_in(cfg_.start_time, cfg_.end_time);
            earliest = std::min(earliest, t);
            payout(t, addrs[p % addrs.size()], rng_.log_uniform(10'000, 10'000'000'000));
        }
        for (std::uint32_t s = 0; s < n_send; ++s)
            deposit(time_in(earliest, cfg_.end_time), s == 0 ? addrs : random_inputs(addrs));
    }

    void plant_one_timer() {
        const auto& addr = add_entity("one_timer", 1).addresses.front();
        payout(time_in(cfg_.start_time, cfg_.end_time), addr, rng_.log_uniform(10'000, 10'000'000'000));
    }

    const GeneratorConfig& cfg_;
    Rng rng_;
    std::string txid_prefix_;
    std::uint64_t counter_ = 0;
    std::vector<PlantedEntity> entities_;
    std::vector<RawTransaction> txs_;
};

}  // namespace

std::uint32_t GeneratorConfig::one_timer_count() const {
    return static_cast<std::uint32_t>(std::llround(one_timer_fraction * n_entities));
}

void GeneratorConfig::validate() const {
    if (!(one_timer_fraction >= 0.0 && one_timer_fraction <= 1.0))
        throw InvalidArgument("one_timer_fraction must be in [0, 1]");
    const std::uint64_t planted = std::uint64_t{one_timer_count()} + n_miners + n_exchanges + n_high_activity;
    if (planted > n_entities)
        throw InvalidArgument("planted profiles (" + std::to_string(planted) + ") exceed n_entities (" +
                              std::to_string(n_entities) + ")");
    if (n_exchanges == 0 && n_entities > n_miners)
        throw InvalidArgument("at least one exchange is required to pay non-miner entities");
    if (start_time < 0 || start_time >= end_time) throw InvalidArgument("start_time must be >= 0 and < end_time");
    if (event_time && (*event_time <= start_time || *event_time >= end_time))
        throw InvalidArgument("event_time must lie strictly inside (start_time, end_time)");
    if (miner_before_fraction < 0 || miner_after_fraction < 0 || miner_before_fraction + miner_after_fraction > 1.0)
        throw InvalidArgument("miner phase fractions must be non-negative and sum to at most 1");
    if (regular_payouts_min < 2 || regular_payouts_min > regular_payouts_max)
        throw InvalidArgument("regular payouts need 2 <= min <= max");
    if (high_payouts_min < 2 || high_payouts_min > high_payouts_max)
        throw InvalidArgument("high-activity payouts need 2 <= min <= max");
    if (regular_sends_min > regular_sends_max || high_sends_min > high_sends_max)
        throw InvalidArgument("send ranges need min <= max");
}

GeneratorConfig parse_generator_config(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(0, std::string("generator config: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(0, "generator config must be a JSON object");
    GeneratorConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "n_entities") c.n_entities = value.get<std::uint32_t>();
            else if (key == "one_timer_fraction") c.one_timer_fraction = value.get<double>();
            else if (key == "n_miners") c.n_miners = value.get<std::uint32_t>();
            else if (key == "n_exchanges") c.n_exchanges = value.get<std::uint32_t>();
            else if (key == "n_high_activity") c.n_high_activity = value.get<std::uint32_t>();
            else if (key == "start_time") c.start_time = value.get<UnixSeconds>();
            else if (key == "end_time") c.end_time = value.get<UnixSeconds>();
            else if (key == "event_time") c.event_time = value.get<UnixSeconds>();
            else if (key == "miner_before_fraction") c.miner_before_fraction = value.get<double>();
            else if (key == "miner_after_fraction") c.miner_after_fraction = value.get<double>();
            else if (key == "regular_payouts") {
                c.regular_payouts_min = value.at(0).get<std::uint32_t>();
                c.regular_payouts_max = value.at(1).get<std::uint32_t>();
            } else if (key == "regular_sends") {
                c.regular_sends_min = value.at(0).get<std::uint32_t>();
                c.regular_sends_max = value.at(1).get<std::uint32_t>();
            } else if (key == "high_payouts") {
                c.high_payouts_min = value.at(0).get<std::uint32_t>();
                c.high_payouts_max = value.at(1).get<std::uint32_t>();
            } else if (key == "high_sends") {
                c.high_sends_min = value.at(0).get<std::uint32_t>();
                c.high_sends_max = value.at(1).get<std::uint32_t>();
            } else if (key == "exchange_internal_txs") c.exchange_internal_txs = value.get<std::uint32_t>();
            else throw InvalidArgument("unknown generator config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("generator config: ") + e.what());
    }
    c.validate();
    return c;
}

SyntheticCorpus generate_synthetic(const GeneratorConfig& cfg) {
    cfg.validate();
    return Builder(cfg).run();
}

std::size_t SyntheticCorpus::count_profile(std::string_view prefix) const {
    return static_cast<std::size_t>(std::count_if(entity_profile.begin(), entity_profile.end(),
                                                  [&](const std::string& p) { return p.starts_with(prefix); }));
}

void write_ground_truth(std::ostream& out, const std::vector<GroundTruth>& truth) {
    for (const auto& g : truth) {
        nlohmann::ordered_json j;
        j["addr"] = g.addr;
        j["entity_gt"] = g.entity_gt;
        j["profile"] = g.profile;
        out << j.dump() << '\n';
    }
}

std::vector<GroundTruth> read_ground_truth(std::istream& in) {
    std::vector<GroundTruth> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            out.push_back({j.at("addr").get<std::string>(), j.at("entity_gt").get<std::uint32_t>(),
                           j.at("profile").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, std::string("ground truth: ") + e.what());
        }
    }
    return out;
}

}  // namespace ledgerscope
