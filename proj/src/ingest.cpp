#include "ledgerscope/ingest.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <unordered_set>

namespace ledgerscope {

using json = nlohmann::json;

std::string format_btc(Satoshi amount) {
    const bool neg = amount < 0;
    const auto mag = neg ? -static_cast<unsigned long long>(amount) : static_cast<unsigned long long>(amount);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%llu.%08llu", neg ? "-" : "", mag / kSatoshiPerBtc,
                  mag % kSatoshiPerBtc);
    return buf;
}

namespace {

Satoshi slot_total(const std::vector<Slot>& slots) {
    Satoshi total = 0;
    for (const auto& s : slots) total += s.amount;
    return total;
}

bool is_hex64(std::string_view s) {
    return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
               return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
           });
}

std::vector<RawSlot> parse_slots(const json& arr, const char* key, std::size_t line_no) {
    if (!arr.is_array()) throw ParseError(line_no, std::string("'") + key + "' must be an array");
    std::vector<RawSlot> out;
    out.reserve(arr.size());
    for (const auto& slot : arr) {
        if (!slot.is_object() || !slot.contains("addr") || !slot.contains("value"))
            throw ParseError(line_no, std::string("'") + key + "' entries need 'addr' and 'value'");
        const auto& addr = slot["addr"];
        const auto& value = slot["value"];
        if (!addr.is_string()) throw ParseError(line_no, "'addr' must be a string");
        if (!value.is_number_integer()) throw ParseError(line_no, "'value' must be an integer");
        RawSlot s{addr.get<std::string>(), 0};
        if (value.is_number_unsigned()) {
            const auto v = value.get<std::uint64_t>();
            if (v > static_cast<std::uint64_t>(std::numeric_limits<Satoshi>::max()))
                throw ValidationError(line_no, "amount out of range");
            s.value = static_cast<Satoshi>(v);
        } else {
            s.value = value.get<Satoshi>();
        }
        if (s.value < 0) throw ValidationError(line_no, "negative amount in '" + std::string(key) + "'");
        if (s.addr.empty()) throw ValidationError(line_no, "empty address");
        out.push_back(std::move(s));
    }
    return out;
}

// Sum with overflow detection; totals above int64 cannot be real ledgers.
Satoshi raw_total(const std::vector<RawSlot>& slots, std::size_t line_no) {
    Satoshi total = 0;
    for (const auto& s : slots)
        if (__builtin_add_overflow(total, s.value, &total))
            throw ValidationError(line_no, "amount total overflows");
    return total;
}

void validate(const RawTransaction& tx, std::size_t line_no) {
    if (!is_hex64(tx.txid)) throw ValidationError(line_no, "txid must be 64 hex characters");
    if (tx.time < 0) throw ValidationError(line_no, "negative timestamp");
    if (tx.vout.empty()) throw ValidationError(line_no, "transaction has no outputs");
    for (const auto& s : tx.vin)
        if (s.value < 0 || s.addr.empty()) throw ValidationError(line_no, "invalid input slot");
    for (const auto& s : tx.vout)
        if (s.value < 0 || s.addr.empty()) throw ValidationError(line_no, "invalid output slot");
    const Satoshi in = raw_total(tx.vin, line_no);
    const Satoshi out = raw_total(tx.vout, line_no);
    if (!tx.vin.empty() && in < out)
        throw ValidationError(line_no, "outputs (" + std::to_string(out) + ") exceed inputs (" +
                                           std::to_string(in) + ")");
}

}  // namespace

Satoshi Transaction::input_total() const { return slot_total(inputs); }
Satoshi Transaction::output_total() const { return slot_total(outputs); }

RawTransaction parse_transaction_line(std::string_view line, std::size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line_no, "record must be a JSON object");
    for (const char* key : {"txid", "time", "vin", "vout"})
        if (!j.contains(key)) throw ParseError(line_no, std::string("missing key '") + key + "'");
    if (j.size() != 4) throw ParseError(line_no, "unexpected keys; expected exactly txid, time, vin, vout");

    RawTransaction tx;
    if (!j["txid"].is_string()) throw ParseError(line_no, "'txid' must be a string");
    tx.txid = j["txid"].get<std::string>();
    if (!j["time"].is_number_integer()) throw ParseError(line_no, "'time' must be an integer");
    tx.time = j["time"].get<UnixSeconds>();
    tx.vin = parse_slots(j["vin"], "vin", line_no);
    tx.vout = parse_slots(j["vout"], "vout", line_no);
    validate(tx, line_no);
    return tx;
}

std::vector<RawTransaction> read_transactions(std::istream& in) {
    std::vector<RawTransaction> out;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto tx = parse_transaction_line(line, line_no);
        if (!seen.insert(tx.txid).second) throw DuplicateError(line_no, "duplicate txid " + tx.txid);
        out.push_back(std::move(tx));
    }
    if (in.bad()) throw Error("read failure on transaction stream");
    return out;
}

TransactionStore parse_transactions(std::istream& in) {
    return TransactionStore::build(read_transactions(in));
}

TransactionStore TransactionStore::build(std::vector<RawTransaction> records) {
    for (std::size_t i = 0; i < records.size(); ++i) validate(records[i], i + 1);

    std::sort(records.begin(), records.end(), [](const RawTransaction& a, const RawTransaction& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.txid < b.txid;
    });
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i].txid == records[i - 1].txid)
            throw DuplicateError(0, "duplicate txid " + records[i].txid);

    TransactionStore store;
    store.txs_.reserve(records.size());
    auto intern = [&store](std::string& addr) {
        auto [it, inserted] = store.address_ids_.try_emplace(addr, static_cast<AddressId>(store.addresses_.size()));
        if (inserted) store.addresses_.push_back(std::move(addr));
        return it->second;
    };
    for (auto& r : records) {
        Transaction tx;
        tx.tx_id = std::move(r.txid);
        tx.timestamp = r.time;
        tx.is_coinbase = r.vin.empty();
        tx.inputs.reserve(r.vin.size());
        tx.outputs.reserve(r.vout.size());
        for (auto& s : r.vin) tx.inputs.push_back({intern(s.addr), s.value});
        for (auto& s : r.vout) tx.outputs.push_back({intern(s.addr), s.value});
        store.txs_.push_back(std::move(tx));
    }
    store.index_addresses();
    return store;
}

void TransactionStore::index_addresses() {
    const std::size_t n = addresses_.size();
    if (address_ids_.size() != n) {
        address_ids_.clear();
        address_ids_.reserve(n);
        for (AddressId a = 0; a < n; ++a) address_ids_.emplace(addresses_[a], a);
    }

    // Two passes: count then fill, one posting per (address, tx, role).
    std::vector<std::uint64_t> counts(n + 1, 0);
    std::vector<TxIndex> last_seen(2 * n, std::numeric_limits<TxIndex>::max());
    auto visit = [&](auto&& emit) {
        for (TxIndex t = 0; t < txs_.size(); ++t) {
            for (const auto& s : txs_[t].inputs)
                if (last_seen[2 * s.address] != t) {
                    last_seen[2 * s.address] = t;
                    emit(s.address, Posting{t, Role::input});
                }
            for (const auto& s : txs_[t].outputs)
                if (last_seen[2 * s.address + 1] != t) {
                    last_seen[2 * s.address + 1] = t;
                    emit(s.address, Posting{t, Role::output});
                }
        }
    };
    visit([&](AddressId a, Posting) { ++counts[a + 1]; });
    for (std::size_t i = 0; i < n; ++i) counts[i + 1] += counts[i];
    posting_offsets_ = counts;
    postings_.assign(counts[n], Posting{});
    std::fill(last_seen.begin(), last_seen.end(), std::numeric_limits<TxIndex>::max());
    std::vector<std::uint64_t> cursor(counts.begin(), counts.end() - 1);
    visit([&](AddressId a, Posting p) { postings_[cursor[a]++] = p; });
}

std::optional<AddressId> TransactionStore::find_address(std::string_view addr) const {
    auto it = address_ids_.find(std::string(addr));
    if (it == address_ids_.end()) return std::nullopt;
    return it->second;
}

std::pair<TxIndex, TxIndex> TransactionStore::tx_span(const TimeRange& range) const {
    auto lo = std::lower_bound(txs_.begin(), txs_.end(), range.from,
                               [](const Transaction& t, UnixSeconds v) { return t.timestamp < v; });
    auto hi = std::lower_bound(lo, txs_.end(), range.to,
                               [](const Transaction& t, UnixSeconds v) { return t.timestamp < v; });
    return {static_cast<TxIndex>(lo - txs_.begin()), static_cast<TxIndex>(hi - txs_.begin())};
}

std::optional<TimeRange> TransactionStore::time_extent() const {
    if (txs_.empty()) return std::nullopt;
    return TimeRange{txs_.front().timestamp, txs_.back().timestamp + 1};
}

RawTransaction TransactionStore::to_raw(TxIndex i) const {
    const auto& t = txs_[i];
    RawTransaction r{t.tx_id, t.timestamp, {}, {}};
    for (const auto& s : t.inputs) r.vin.push_back({addresses_[s.address], s.amount});
    for (const auto& s : t.outputs) r.vout.push_back({addresses_[s.address], s.amount});
    return r;
}

void write_transaction(std::ostream& out, const RawTransaction& tx) {
    nlohmann::ordered_json j;
    j["txid"] = tx.txid;
    j["time"] = tx.time;
    auto slots = [](const std::vector<RawSlot>& v) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& s : v) arr.push_back({{"addr", s.addr}, {"value", s.value}});
        return arr;
    };
    j["vin"] = slots(tx.vin);
    j["vout"] = slots(tx.vout);
    out << j.dump() << '\n';
}

void write_transactions(std::ostream& out, const TransactionStore& store) {
    for (TxIndex i = 0; i < store.tx_count(); ++i) write_transaction(out, store.to_raw(i));
}

// ---------------------------------------------------------------------------

std::string_view to_string(TagCategory c) {
    switch (c) {
        case TagCategory::exchange: return "exchange";
        case TagCategory::wallet: return "wallet";
        case TagCategory::pool: return "pool";
        case TagCategory::payment: return "payment";
        case TagCategory::gambling: return "gambling";
        case TagCategory::other: return "other";
    }
    return "other";
}

std::optional<TagCategory> parse_category(std::string_view s) {
    if (s.empty()) return TagCategory::other;
    for (auto c : {TagCategory::exchange, TagCategory::wallet, TagCategory::pool, TagCategory::payment,
                   TagCategory::gambling, TagCategory::other})
        if (to_string(c) == s) return c;
    return std::nullopt;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        cols.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return cols;
}

}  // namespace

TagTable import_tags(std::istream& in) {
    TagTable table;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError(1, "tag file is empty; expected header address,label,category");
    ++line_no;
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split_csv(line) != std::vector<std::string>{"address", "label", "category"})
        throw ParseError(1, "missing columns; expected header address,label,category");

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = split_csv(line);
        if (cols.size() != 3) throw ParseError(line_no, "expected 3 columns, got " + std::to_string(cols.size()));
        if (cols[0].empty()) throw ValidationError(line_no, "empty address");
        if (cols[1].empty()) throw ValidationError(line_no, "empty label");
        auto category = parse_category(cols[2]);
        if (!category) throw ValidationError(line_no, "unknown category '" + cols[2] + "'");
        auto [it, inserted] = table.tags.try_emplace(std::move(cols[0]), Tag{std::move(cols[1]), *category});
        if (!inserted) ++table.duplicate_warnings;
    }
    if (in.bad()) throw Error("read failure on tag stream");
    return table;
}

}  // namespace ledgerscope
