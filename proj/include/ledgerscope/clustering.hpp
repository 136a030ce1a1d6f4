#pragma once
// k-means profiling of entity sets.
//
// Features are chosen from the scalar measure series. By default count and
// amount features are mapped through log10(1 + x) (time features are left
// as is) and every feature is then min-max scaled to [0, 1]. Seeding is
// k-means++ from an explicit seed, followed by Lloyd iterations. Summaries
// are reported on raw measure values.

#include "ledgerscope/measures.hpp"

#include <array>
#include <optional>
#include <span>
#include <stop_token>
#include <vector>

namespace ledgerscope {

class Cancelled : public Error {
public:
    Cancelled() : Error("operation cancelled") {}
};

// The eight axes of the star glyph, one per activity measure. The num_txs
// axis is the sender plus receiver count, so a self-change transaction
// contributes twice; triplet measures use their average.
enum class GlyphAxis : std::uint8_t {
    num_txs,
    time_first,
    time_last,
    time_active,
    amount_rec,
    amount_sent,
    num_inputs,
    num_outputs,
};
inline constexpr std::size_t kGlyphAxes = 8;

std::string_view to_string(GlyphAxis a);
std::optional<double> glyph_value(const ActivityMeasures& m, GlyphAxis a);

// Per-axis [min, max] over an entity set, used to place values on the glyph.
struct AxisRanges {
    std::array<std::optional<double>, kGlyphAxes> min{};
    std::array<std::optional<double>, kGlyphAxes> max{};

    static AxisRanges over(const MeasureTable& table, std::span<const EntityId> entities);
    // (v - min) / (max - min); 0.5 on a degenerate axis; absent without data.
    std::optional<double> normalize(GlyphAxis a, std::optional<double> v) const;
};

struct Preprocessing {
    bool log_counts = true;  // log10(1 + x) on count and amount features
    bool min_max = true;
};

struct ClusterRequest {
    std::vector<SeriesKey> features;
    std::uint32_t k = 2;
    std::uint64_t seed = 0;
    std::uint32_t max_iterations = 300;
    double tolerance = 1e-6;
    Preprocessing preprocessing;

    bool operator==(const ClusterRequest& o) const {
        return features == o.features && k == o.k && seed == o.seed && max_iterations == o.max_iterations &&
               tolerance == o.tolerance && preprocessing.log_counts == o.preprocessing.log_counts &&
               preprocessing.min_max == o.preprocessing.min_max;
    }
};

struct SeriesStats {
    std::uint64_t defined = 0;
    std::optional<double> min, mean, max;
};

struct ClusterSummary {
    std::uint32_t id = 0;
    std::uint64_t count = 0;
    // Indexed like all_series().
    std::vector<SeriesStats> series;
    // Indexed by GlyphAxis.
    std::array<SeriesStats, kGlyphAxes> axis_stats{};
    // Cluster mean placed within the node's axis range.
    std::array<std::optional<double>, kGlyphAxes> axes{};
};

struct ClusterResult {
    ClusterRequest request;
    std::vector<ClusterSummary> clusters;  // by descending size
    // Included entities (ascending) and their cluster ids.
    std::vector<EntityId> entities;
    std::vector<std::uint32_t> assignment;
    // Node entities left out because a feature is undefined for them.
    std::vector<EntityId> excluded;
    std::uint32_t iterations = 0;
    bool converged = false;
    // Within-cluster sum of squares after every assignment step.
    std::vector<double> wcss;

    std::vector<EntityId> members(std::uint32_t cluster) const;
};

// Throws InvalidArgument on an empty feature list, k < 2 or k larger than the
// number of usable entities; Cancelled when the stop token fires.
ClusterResult cluster(const MeasureTable& table, std::span<const EntityId> entities, const ClusterRequest& request,
                      std::stop_token stop = {});

}  // namespace ledgerscope
