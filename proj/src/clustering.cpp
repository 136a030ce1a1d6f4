#include "ledgerscope/clustering.hpp"
#include "ledgerscope/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ledgerscope {

std::string_view to_string(GlyphAxis a) {
    switch (a) {
        case GlyphAxis::num_txs: return "num_txs";
        case GlyphAxis::time_first: return "time_first";
        case GlyphAxis::time_last: return "time_last";
        case GlyphAxis::time_active: return "time_active";
        case GlyphAxis::amount_rec: return "amount_rec";
        case GlyphAxis::amount_sent: return "amount_sent";
        case GlyphAxis::num_inputs: return "num_inputs";
        case GlyphAxis::num_outputs: return "num_outputs";
    }
    return "?";
}

std::optional<double> glyph_value(const ActivityMeasures& m, GlyphAxis a) {
    switch (a) {
        case GlyphAxis::num_txs: return static_cast<double>(m.num_txs_sender + m.num_txs_receiver);
        case GlyphAxis::time_first: return static_cast<double>(m.time_first);
        case GlyphAxis::time_last: return static_cast<double>(m.time_last);
        case GlyphAxis::time_active: return m.time_active_days;
        case GlyphAxis::amount_rec:
            return m.amount_rec ? std::optional<double>(m.amount_rec->average) : std::nullopt;
        case GlyphAxis::amount_sent:
            return m.amount_sent ? std::optional<double>(m.amount_sent->average) : std::nullopt;
        case GlyphAxis::num_inputs: return m.num_inputs.average;
        case GlyphAxis::num_outputs: return m.num_outputs.average;
    }
    return std::nullopt;
}

AxisRanges AxisRanges::over(const MeasureTable& table, std::span<const EntityId> entities) {
    AxisRanges r;
    for (auto e : entities) {
        const auto* m = table.find(e);
        if (!m) continue;
        for (std::size_t a = 0; a < kGlyphAxes; ++a) {
            const auto v = glyph_value(*m, static_cast<GlyphAxis>(a));
            if (!v) continue;
            r.min[a] = r.min[a] ? std::min(*r.min[a], *v) : *v;
            r.max[a] = r.max[a] ? std::max(*r.max[a], *v) : *v;
        }
    }
    return r;
}

std::optional<double> AxisRanges::normalize(GlyphAxis a, std::optional<double> v) const {
    const auto i = static_cast<std::size_t>(a);
    if (!v || !min[i] || !max[i]) return std::nullopt;
    if (*max[i] == *min[i]) return 0.5;
    return std::clamp((*v - *min[i]) / (*max[i] - *min[i]), 0.0, 1.0);
}

std::vector<EntityId> ClusterResult::members(std::uint32_t c) const {
    std::vector<EntityId> out;
    for (std::size_t i = 0; i < entities.size(); ++i)
        if (assignment[i] == c) out.push_back(entities[i]);
    return out;
}

namespace {

struct Points {
    std::size_t n = 0, d = 0;
    std::vector<double> x;  // row-major n x d
    const double* row(std::size_t i) const { return x.data() + i * d; }
};

double dist2(const double* a, const double* b, std::size_t d) {
    double s = 0;
    for (std::size_t j = 0; j < d; ++j) {
        const double t = a[j] - b[j];
        s += t * t;
    }
    return s;
}

std::vector<double> seed_centroids(const Points& p, std::uint32_t k, Rng& rng) {
    std::vector<double> c;
    c.reserve(k * p.d);
    std::vector<char> chosen(p.n, 0);
    auto take = [&](std::size_t i) {
        chosen[i] = 1;
        c.insert(c.end(), p.row(i), p.row(i) + p.d);
    };
    take(rng.below(p.n));
    std::vector<double> best(p.n);
    for (std::size_t i = 0; i < p.n; ++i) best[i] = dist2(p.row(i), c.data(), p.d);
    while (c.size() < k * p.d) {
        const double total = std::accumulate(best.begin(), best.end(), 0.0);
        std::size_t pick = p.n;
        if (total > 0) {
            const double r = rng.unit() * total;
            double cum = 0;
            for (std::size_t i = 0; i < p.n; ++i) {
                cum += best[i];
                if (best[i] > 0 && cum > r) {
                    pick = i;
                    break;
                }
            }
            // Rounding can leave r above the final cumulative sum.
            if (pick == p.n)
                for (std::size_t i = p.n; i-- > 0;)
                    if (best[i] > 0) {
                        pick = i;
                        break;
                    }
        } else {
            // Fewer distinct points than k: fall back to the first unused one.
            for (std::size_t i = 0; i < p.n && pick == p.n; ++i)
                if (!chosen[i]) pick = i;
        }
        take(pick);
        const double* centre = c.data() + c.size() - p.d;
        for (std::size_t i = 0; i < p.n; ++i) best[i] = std::min(best[i], dist2(p.row(i), centre, p.d));
    }
    return c;
}

// Nearest centroid per point (ties to the lower index); returns the WCSS.
double assign(const Points& p, const std::vector<double>& c, std::uint32_t k, std::vector<std::uint32_t>& labels) {
    double wcss = 0;
    for (std::size_t i = 0; i < p.n; ++i) {
        std::uint32_t best = 0;
        double best_d = dist2(p.row(i), c.data(), p.d);
        for (std::uint32_t j = 1; j < k; ++j) {
            const double dj = dist2(p.row(i), c.data() + j * p.d, p.d);
            if (dj < best_d) {
                best_d = dj;
                best = j;
            }
        }
        labels[i] = best;
        wcss += best_d;
    }
    return wcss;
}

}  // namespace

ClusterResult cluster(const MeasureTable& table, std::span<const EntityId> entities, const ClusterRequest& request,
                      std::stop_token stop) {
    if (request.features.empty()) throw InvalidArgument("clustering needs at least one feature");
    if (request.k < 2) throw InvalidArgument("k must be at least 2");
    if (request.max_iterations == 0) throw InvalidArgument("max_iterations must be positive");
    if (!(request.tolerance >= 0)) throw InvalidArgument("tolerance must be non-negative");
    for (const auto& f : request.features)
        if (has_variants(f.key) && f.variant == Variant::none)
            throw InvalidArgument(std::string(to_string(f.key)) + " needs a variant");

    ClusterResult result;
    result.request = request;

    Points pts;
    pts.d = request.features.size();
    std::vector<double> row(pts.d);
    for (auto e : entities) {
        const auto* m = table.find(e);
        bool ok = m != nullptr;
        for (std::size_t j = 0; ok && j < pts.d; ++j) {
            const auto v = measure_value(*m, request.features[j]);
            if (!v) ok = false;
            else row[j] = *v;
        }
        if (!ok) {
            result.excluded.push_back(e);
            continue;
        }
        result.entities.push_back(e);
        pts.x.insert(pts.x.end(), row.begin(), row.end());
    }
    pts.n = result.entities.size();
    if (request.k > pts.n)
        throw InvalidArgument("k (" + std::to_string(request.k) + ") exceeds the " + std::to_string(pts.n) +
                              " entities with all features defined");

    for (std::size_t j = 0; j < pts.d; ++j) {
        const auto key = request.features[j].key;
        if (request.preprocessing.log_counts && !is_time_series(key))
            for (std::size_t i = 0; i < pts.n; ++i) pts.x[i * pts.d + j] = std::log10(1.0 + pts.x[i * pts.d + j]);
        if (request.preprocessing.min_max) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t i = 0; i < pts.n; ++i) {
                lo = std::min(lo, pts.x[i * pts.d + j]);
                hi = std::max(hi, pts.x[i * pts.d + j]);
            }
            for (std::size_t i = 0; i < pts.n; ++i) {
                auto& v = pts.x[i * pts.d + j];
                v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
            }
        }
    }

    const std::uint32_t k = request.k;
    Rng rng(request.seed);
    auto centroids = seed_centroids(pts, k, rng);
    std::vector<std::uint32_t> labels(pts.n, 0);
    std::vector<double> next(k * pts.d);
    std::vector<std::uint64_t> sizes(k);

    while (result.iterations < request.max_iterations) {
        if (stop.stop_requested()) throw Cancelled();
        ++result.iterations;
        result.wcss.push_back(assign(pts, centroids, k, labels));

        std::fill(next.begin(), next.end(), 0.0);
        std::fill(sizes.begin(), sizes.end(), 0);
        for (std::size_t i = 0; i < pts.n; ++i) {
            ++sizes[labels[i]];
            for (std::size_t j = 0; j < pts.d; ++j) next[labels[i] * pts.d + j] += pts.row(i)[j];
        }
        for (std::uint32_t c = 0; c < k; ++c)
            if (sizes[c] > 0)
                for (std::size_t j = 0; j < pts.d; ++j) next[c * pts.d + j] /= static_cast<double>(sizes[c]);

        // Empty clusters move to the point farthest from its own centroid.
        std::vector<char> used(pts.n, 0);
        for (std::uint32_t c = 0; c < k; ++c) {
            if (sizes[c] > 0) continue;
            std::size_t far = pts.n;
            double far_d = -1;
            for (std::size_t i = 0; i < pts.n; ++i) {
                if (used[i]) continue;
                const double di = dist2(pts.row(i), next.data() + labels[i] * pts.d, pts.d);
                if (di > far_d) {
                    far_d = di;
                    far = i;
                }
            }
            if (far == pts.n) {
                std::copy_n(centroids.begin() + c * pts.d, pts.d, next.begin() + c * pts.d);
                continue;
            }
            used[far] = 1;
            std::copy_n(pts.row(far), pts.d, next.begin() + c * pts.d);
        }

        double movement = 0;
        for (std::uint32_t c = 0; c < k; ++c)
            movement = std::max(movement, std::sqrt(dist2(centroids.data() + c * pts.d, next.data() + c * pts.d, pts.d)));
        centroids.swap(next);
        if (movement < request.tolerance) {
            result.converged = true;
            break;
        }
    }
    result.wcss.push_back(assign(pts, centroids, k, labels));

    // Renumber clusters by descending size, then by smallest member.
    std::vector<std::uint64_t> count(k, 0);
    std::vector<EntityId> first(k, kNoEntity);
    for (std::size_t i = 0; i < pts.n; ++i) {
        ++count[labels[i]];
        first[labels[i]] = std::min(first[labels[i]], result.entities[i]);
    }
    std::vector<std::uint32_t> order(k);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (count[a] != count[b]) return count[a] > count[b];
        return first[a] < first[b];
    });
    std::vector<std::uint32_t> rank(k);
    for (std::uint32_t r = 0; r < k; ++r) rank[order[r]] = r;
    result.assignment.resize(pts.n);
    for (std::size_t i = 0; i < pts.n; ++i) result.assignment[i] = rank[labels[i]];

    const auto ranges = AxisRanges::over(table, entities);
    const auto series = all_series();
    result.clusters.resize(k);
    std::vector<std::vector<double>> sums(k, std::vector<double>(series.size(), 0.0));
    std::vector<std::array<double, kGlyphAxes>> axis_sums(k);
    for (std::uint32_t c = 0; c < k; ++c) {
        result.clusters[c].id = c;
        result.clusters[c].series.resize(series.size());
        axis_sums[c].fill(0.0);
    }
    auto accumulate_stat = [](SeriesStats& s, double& sum, std::optional<double> v) {
        if (!v) return;
        ++s.defined;
        sum += *v;
        s.min = s.min ? std::min(*s.min, *v) : *v;
        s.max = s.max ? std::max(*s.max, *v) : *v;
    };
    for (std::size_t i = 0; i < pts.n; ++i) {
        auto& summary = result.clusters[result.assignment[i]];
        ++summary.count;
        const auto& m = *table.find(result.entities[i]);
        for (std::size_t s = 0; s < series.size(); ++s)
            accumulate_stat(summary.series[s], sums[result.assignment[i]][s], measure_value(m, series[s]));
        for (std::size_t a = 0; a < kGlyphAxes; ++a)
            accumulate_stat(summary.axis_stats[a], axis_sums[result.assignment[i]][a],
                            glyph_value(m, static_cast<GlyphAxis>(a)));
    }
    for (std::uint32_t c = 0; c < k; ++c) {
        auto& summary = result.clusters[c];
        for (std::size_t s = 0; s < series.size(); ++s)
            if (summary.series[s].defined) {
                // Keep min <= mean <= max despite rounding in the sum.
                const double mean = sums[c][s] / static_cast<double>(summary.series[s].defined);
                summary.series[s].mean = std::clamp(mean, *summary.series[s].min, *summary.series[s].max);
            }
        for (std::size_t a = 0; a < kGlyphAxes; ++a) {
            auto& st = summary.axis_stats[a];
            if (!st.defined) continue;
            st.mean = std::clamp(axis_sums[c][a] / static_cast<double>(st.defined), *st.min, *st.max);
            summary.axes[a] = ranges.normalize(static_cast<GlyphAxis>(a), st.mean);
        }
    }
    return result;
}

}  // namespace ledgerscope
