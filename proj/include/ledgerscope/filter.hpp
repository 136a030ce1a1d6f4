#pragma once
// Dynamic-query primitives: range predicates, histograms and transaction
// volume over time.

#include "ledgerscope/measures.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <span>
#include <vector>

namespace ledgerscope {

// Closed interval [lo, hi] on one series; a missing bound is unbounded.
// Entities whose series value is undefined never match.
struct Predicate {
    SeriesKey series;
    std::optional<double> lo;
    std::optional<double> hi;

    // Throws InvalidArgument when lo > hi.
    void validate() const;
    bool matches(std::optional<double> v) const {
        return v && (!lo || *v >= *lo) && (!hi || *v <= *hi);
    }
    bool operator==(const Predicate&) const = default;
};

// {key, variant, lo, hi}; null or missing bounds are unbounded.
nlohmann::json to_json(const Predicate& p);
Predicate predicate_from_json(const nlohmann::json& j);

enum class Scale { linear, log10, automatic };

std::string_view to_string(Scale s);
std::optional<Scale> parse_scale(std::string_view s);

inline constexpr std::uint32_t kDefaultBins = 50;

struct Histogram {
    SeriesKey series;
    std::vector<double> edges;  // ascending, counts.size() + 1
    std::vector<std::uint64_t> counts;
    std::uint64_t undefined = 0;
    Scale scale = Scale::linear;  // the scale actually used

    std::uint64_t total() const;
};

// Builds equal-width bins (linear or log10) over [min, max] of the defined
// values. Bin i holds edges[i] <= v < edges[i+1]; the maximum lands in the
// last bin. A degenerate range uses a single bin [v, v + 1).
Histogram histogram(std::span<const std::optional<double>> values, SeriesKey series, std::uint32_t bins = kDefaultBins,
                    Scale scale = Scale::automatic);

// Values of `series` for `entities`, absent when the entity has no activity
// in the table or the series is undefined for it.
std::vector<std::optional<double>> series_values(const MeasureTable& table, std::span<const EntityId> entities,
                                                 SeriesKey series);

Histogram histogram(const MeasureTable& table, std::span<const EntityId> entities, SeriesKey series,
                    std::uint32_t bins = kDefaultBins, Scale scale = Scale::automatic);

struct Split {
    std::vector<EntityId> match;
    std::vector<EntityId> remainder;
};

// Partitions `entities` (ascending) by the predicate evaluated against the
// measure table of the active range.
Split apply_filter(std::span<const EntityId> entities, const Predicate& p, const MeasureTable& table);

enum class Bucket { day, month };

std::optional<Bucket> parse_bucket(std::string_view s);
std::string_view to_string(Bucket b);

struct VolumePoint {
    UnixSeconds bucket_start = 0;
    std::uint64_t transactions = 0;
    bool operator==(const VolumePoint&) const = default;
};

// Start of the day/month (UTC) containing t.
UnixSeconds bucket_start(UnixSeconds t, Bucket b);
UnixSeconds next_bucket(UnixSeconds start, Bucket b);

// Transactions in range with at least one participant in `entities`, counted
// once per transaction. Buckets cover the range contiguously, empty ones
// included. `entities` must be ascending.
std::vector<VolumePoint> tx_volume(const TransactionStore& store, const EntityIndex& index,
                                   std::span<const EntityId> entities, const TimeRange& range, Bucket bucket);

}  // namespace ledgerscope
