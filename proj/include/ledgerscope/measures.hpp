#pragma once
// Entity activity measures over arbitrary time ranges.
//
// Role semantics per transaction T and entity E:
//   sender    iff at least one input slot of T belongs to E; sent = sum of those slots
//   receiver  iff at least one output slot belongs to E;  received = sum of those slots
// Change returned to the sender therefore counts as received. num_inputs and
// num_outputs are the slot counts of T and are aggregated over every
// transaction E takes part in, in either role; so are time_first/time_last.
//
// Per (entity, UTC day) partial aggregates are precomputed. A query merges the
// partials of fully covered days and scans raw transactions for the partially
// covered boundary days. Partials only hold counts, sums, minima, maxima and
// timestamps, so merging is exact and order-free; averages are derived last.

#include "ledgerscope/entities.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ledgerscope {

enum class MeasureKey : std::uint8_t {
    num_txs_sender,
    num_txs_receiver,
    time_first,
    time_last,
    time_active,
    amount_rec,
    amount_sent,
    num_inputs,
    num_outputs,
};

enum class Variant : std::uint8_t { none, smallest, average, largest };

bool has_variants(MeasureKey k);
std::string_view to_string(MeasureKey k);
std::string_view to_string(Variant v);
std::optional<MeasureKey> parse_measure_key(std::string_view s);
std::optional<Variant> parse_variant(std::string_view s);

// One selectable scalar series: a measure plus, for triplet measures, the
// smallest/average/largest variant.
struct SeriesKey {
    MeasureKey key = MeasureKey::num_txs_sender;
    Variant variant = Variant::none;

    bool operator==(const SeriesKey&) const = default;
    std::string name() const;  // "amount_rec.largest", "time_first"
};

// Throws InvalidArgument for unknown keys or a missing variant on a triplet
// measure. "num_txs" with variant "sender"/"receiver" is accepted as an alias.
// Variants given for scalar measures are ignored.
SeriesKey make_series(std::string_view key, std::string_view variant);
// Parses the dotted form produced by SeriesKey::name().
SeriesKey parse_series(std::string_view name);
// All 17 scalar series in a fixed order.
std::span<const SeriesKey> all_series();

// Count-valued series (log-transformed for clustering) vs time-valued ones.
bool is_time_series(MeasureKey k);
bool is_amount_series(MeasureKey k);

template <typename T>
struct Triplet {
    T smallest{};
    double average = 0.0;
    T largest{};
    bool operator==(const Triplet&) const = default;
};

struct ActivityMeasures {
    EntityId entity = 0;
    std::uint64_t num_txs_sender = 0;
    std::uint64_t num_txs_receiver = 0;
    // Distinct transactions in either role; the denominator of the
    // num_inputs/num_outputs averages.
    std::uint64_t num_txs_any = 0;
    UnixSeconds time_first = 0;
    UnixSeconds time_last = 0;
    double time_active_days = 0.0;
    std::optional<Triplet<Satoshi>> amount_rec;
    std::optional<Triplet<Satoshi>> amount_sent;
    Triplet<std::uint32_t> num_inputs;
    Triplet<std::uint32_t> num_outputs;

    bool operator==(const ActivityMeasures&) const = default;
};

std::optional<double> measure_value(const ActivityMeasures& m, SeriesKey s);
// Key/variant string form; throws InvalidArgument on unknown keys.
std::optional<double> measure_value(const ActivityMeasures& m, std::string_view key, std::string_view variant);

// One entity's participation in one transaction.
struct Contribution {
    UnixSeconds time = 0;
    bool sender = false;
    bool receiver = false;
    Satoshi sent = 0;
    Satoshi received = 0;
    std::uint32_t n_inputs = 0;
    std::uint32_t n_outputs = 0;
};

// Calls fn(entity, contribution) once per distinct entity taking part in tx.
template <typename Fn>
void for_each_contribution(const Transaction& tx, const EntityIndex& index, Fn&& fn);

// Mergeable aggregate of any number of contributions.
struct Partial {
    std::uint32_t n_sender = 0;
    std::uint32_t n_receiver = 0;
    std::uint32_t n_any = 0;
    std::uint32_t in_min = std::numeric_limits<std::uint32_t>::max();
    std::uint32_t in_max = 0;
    std::uint32_t out_min = std::numeric_limits<std::uint32_t>::max();
    std::uint32_t out_max = 0;
    std::uint64_t in_sum = 0;
    std::uint64_t out_sum = 0;
    Satoshi sent_min = std::numeric_limits<Satoshi>::max();
    Satoshi sent_sum = 0;
    Satoshi sent_max = std::numeric_limits<Satoshi>::min();
    Satoshi rec_min = std::numeric_limits<Satoshi>::max();
    Satoshi rec_sum = 0;
    Satoshi rec_max = std::numeric_limits<Satoshi>::min();
    UnixSeconds first = std::numeric_limits<UnixSeconds>::max();
    UnixSeconds last = std::numeric_limits<UnixSeconds>::min();

    bool empty() const { return n_any == 0; }
    void add(const Contribution& c);
    void merge(const Partial& o);
    ActivityMeasures finish(EntityId e) const;
    bool operator==(const Partial&) const = default;
};

struct SliceRecord {
    EntityId entity = 0;
    std::uint32_t day = 0;
    Partial partial;
    bool operator==(const SliceRecord&) const = default;
};

class SliceStore {
public:
    SliceStore() = default;

    std::size_t slice_count() const { return records_.size(); }
    std::size_t entity_count() const { return entity_offsets_.empty() ? 0 : entity_offsets_.size() - 1; }

    // Records ordered by (day, entity).
    std::span<const SliceRecord> records() const { return records_; }
    // Indices into records() for one entity, ordered by day.
    std::span<const std::uint32_t> entity_slices(EntityId e) const {
        return {by_entity_.data() + entity_offsets_[e], by_entity_.data() + entity_offsets_[e + 1]};
    }
    // Index range into records() covering days [first_day, last_day).
    std::pair<std::size_t, std::size_t> day_span(std::int64_t first_day, std::int64_t last_day) const;

    bool operator==(const SliceStore&) const = default;

private:
    friend SliceStore build_slices(const TransactionStore&, const EntityIndex&);
    friend class SliceSerializer;
    void index_entities(std::size_t n_entities);

    std::vector<SliceRecord> records_;
    std::vector<std::uint64_t> entity_offsets_;
    std::vector<std::uint32_t> by_entity_;
};

SliceStore build_slices(const TransactionStore& store, const EntityIndex& index);

// Measures keyed by entity, ascending.
class MeasureTable {
public:
    MeasureTable() = default;
    MeasureTable(std::vector<ActivityMeasures> rows, std::size_t entity_count);

    std::span<const ActivityMeasures> rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    const ActivityMeasures* find(EntityId e) const {
        return e < position_.size() && position_[e] != kAbsent ? &rows_[position_[e]] : nullptr;
    }
    // Ascending ids of the entities present.
    std::vector<EntityId> entities() const;

private:
    static constexpr std::uint32_t kAbsent = std::numeric_limits<std::uint32_t>::max();
    std::vector<ActivityMeasures> rows_;
    std::vector<std::uint32_t> position_;
};

enum class ScanStrategy { automatic, by_day, by_entity };

// Everything a query needs; all three must come from the same build.
struct MeasureSource {
    const TransactionStore& store;
    const EntityIndex& index;
    const SliceStore& slices;
};

// Entities with no transaction in [range.from, range.to) are left out.
// `entities` must be ascending and unique. Throws InvalidArgument on an empty
// or inverted range.
MeasureTable compute_measures(const MeasureSource& src, std::span<const EntityId> entities, const TimeRange& range,
                              ScanStrategy strategy = ScanStrategy::automatic);
// Every entity in the corpus.
MeasureTable compute_measures(const MeasureSource& src, const TimeRange& range,
                              ScanStrategy strategy = ScanStrategy::automatic);

// CSV with entity id, tag and all 17 series; undefined values are empty.
void write_measures_csv(std::ostream& out, const MeasureTable& table, const EntityIndex& index);

// ---------------------------------------------------------------------------

template <typename Fn>
void for_each_contribution(const Transaction& tx, const EntityIndex& index, Fn&& fn) {
    // Transactions rarely touch more than a handful of entities; a linear
    // scan over a small buffer beats hashing here.
    struct Slot {
        EntityId entity;
        Contribution c;
    };
    thread_local std::vector<Slot> seen;
    seen.clear();
    auto slot_for = [&](EntityId e) -> Contribution& {
        for (auto& s : seen)
            if (s.entity == e) return s.c;
        seen.push_back({e, Contribution{tx.timestamp, false, false, 0, 0, static_cast<std::uint32_t>(tx.inputs.size()),
                                        static_cast<std::uint32_t>(tx.outputs.size())}});
        return seen.back().c;
    };
    for (const auto& in : tx.inputs) {
        auto& c = slot_for(index.entity_of(in.address));
        c.sender = true;
        c.sent += in.amount;
    }
    for (const auto& out : tx.outputs) {
        auto& c = slot_for(index.entity_of(out.address));
        c.receiver = true;
        c.received += out.amount;
    }
    for (const auto& s : seen) fn(s.entity, s.c);
}

}  // namespace ledgerscope
