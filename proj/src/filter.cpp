#include "ledgerscope/filter.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace ledgerscope {

void Predicate::validate() const {
    if (lo && hi && *lo > *hi) throw InvalidArgument("predicate lower bound exceeds upper bound");
    if ((lo && std::isnan(*lo)) || (hi && std::isnan(*hi))) throw InvalidArgument("predicate bound is NaN");
}

nlohmann::json to_json(const Predicate& p) {
    nlohmann::json j;
    j["key"] = std::string(to_string(p.series.key));
    j["variant"] = std::string(to_string(p.series.variant));
    j["lo"] = p.lo ? nlohmann::json(*p.lo) : nlohmann::json(nullptr);
    j["hi"] = p.hi ? nlohmann::json(*p.hi) : nlohmann::json(nullptr);
    return j;
}

Predicate predicate_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("key") || !j["key"].is_string())
        throw InvalidArgument("predicate needs a string 'key'");
    std::string variant;
    if (j.contains("variant") && !j["variant"].is_null()) {
        if (!j["variant"].is_string()) throw InvalidArgument("predicate 'variant' must be a string");
        variant = j["variant"].get<std::string>();
    }
    Predicate p{make_series(j["key"].get<std::string>(), variant), std::nullopt, std::nullopt};
    auto bound = [&](const char* name) -> std::optional<double> {
        if (!j.contains(name) || j[name].is_null()) return std::nullopt;
        if (!j[name].is_number()) throw InvalidArgument(std::string("predicate '") + name + "' must be a number or null");
        return j[name].get<double>();
    };
    p.lo = bound("lo");
    p.hi = bound("hi");
    p.validate();
    return p;
}

std::string_view to_string(Scale s) {
    switch (s) {
        case Scale::linear: return "linear";
        case Scale::log10: return "log10";
        case Scale::automatic: return "auto";
    }
    return "?";
}

std::optional<Scale> parse_scale(std::string_view s) {
    if (s.empty() || s == "auto") return Scale::automatic;
    if (s == "linear") return Scale::linear;
    if (s == "log10" || s == "log") return Scale::log10;
    return std::nullopt;
}

std::uint64_t Histogram::total() const {
    std::uint64_t t = undefined;
    for (auto c : counts) t += c;
    return t;
}

Histogram histogram(std::span<const std::optional<double>> values, SeriesKey series, std::uint32_t bins, Scale scale) {
    if (bins == 0) throw InvalidArgument("histogram needs at least one bin");
    Histogram h;
    h.series = series;

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t defined = 0;
    for (const auto& v : values) {
        if (!v) {
            ++h.undefined;
            continue;
        }
        ++defined;
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
    }

    if (scale == Scale::automatic) scale = defined > 0 && lo > 0 && hi / lo > 1e3 ? Scale::log10 : Scale::linear;
    if (scale == Scale::log10 && defined > 0 && lo <= 0)
        throw InvalidArgument("log10 scale needs strictly positive values");
    h.scale = scale;

    if (defined == 0) {
        lo = 0;
        hi = 1;
    }
    if (lo == hi) {
        h.edges = {lo, lo + 1};
    } else {
        h.edges.resize(bins + 1);
        if (scale == Scale::log10) {
            const double llo = std::log10(lo), lhi = std::log10(hi);
            for (std::uint32_t i = 0; i <= bins; ++i) h.edges[i] = std::pow(10.0, llo + (lhi - llo) * i / bins);
        } else {
            for (std::uint32_t i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * i / bins;
        }
        h.edges.front() = lo;
        h.edges.back() = hi;
        for (std::size_t i = 1; i < h.edges.size(); ++i)
            if (!(h.edges[i] > h.edges[i - 1]))
                throw InvalidArgument("value range too narrow for " + std::to_string(bins) + " bins");
    }

    h.counts.assign(h.edges.size() - 1, 0);
    const auto last = h.counts.size() - 1;
    for (const auto& v : values) {
        if (!v) continue;
        const auto it = std::upper_bound(h.edges.begin(), h.edges.end(), *v);
        const auto bin = static_cast<std::size_t>(it - h.edges.begin()) - 1;
        ++h.counts[std::min(bin, last)];
    }
    return h;
}

std::vector<std::optional<double>> series_values(const MeasureTable& table, std::span<const EntityId> entities,
                                                 SeriesKey series) {
    std::vector<std::optional<double>> values;
    values.reserve(entities.size());
    for (auto e : entities) {
        const auto* m = table.find(e);
        values.push_back(m ? measure_value(*m, series) : std::nullopt);
    }
    return values;
}

Histogram histogram(const MeasureTable& table, std::span<const EntityId> entities, SeriesKey series,
                    std::uint32_t bins, Scale scale) {
    const auto values = series_values(table, entities, series);
    return histogram(values, series, bins, scale);
}

Split apply_filter(std::span<const EntityId> entities, const Predicate& p, const MeasureTable& table) {
    p.validate();
    Split out;
    for (auto e : entities) {
        const auto* m = table.find(e);
        const auto v = m ? measure_value(*m, p.series) : std::nullopt;
        (p.matches(v) ? out.match : out.remainder).push_back(e);
    }
    return out;
}

std::optional<Bucket> parse_bucket(std::string_view s) {
    if (s.empty() || s == "month") return Bucket::month;
    if (s == "day") return Bucket::day;
    return std::nullopt;
}

std::string_view to_string(Bucket b) { return b == Bucket::day ? "day" : "month"; }

UnixSeconds bucket_start(UnixSeconds t, Bucket b) {
    using namespace std::chrono;
    const auto day = day_of(t);
    if (b == Bucket::day) return day * kSecondsPerDay;
    const year_month_day ymd{sys_days{days{day}}};
    return sys_days{ymd.year() / ymd.month() / 1}.time_since_epoch().count() * kSecondsPerDay;
}

UnixSeconds next_bucket(UnixSeconds start, Bucket b) {
    using namespace std::chrono;
    if (b == Bucket::day) return start + kSecondsPerDay;
    const year_month_day ymd{sys_days{days{day_of(start)}}};
    const year_month next = ymd.year() / ymd.month() + months{1};
    return sys_days{next / 1}.time_since_epoch().count() * kSecondsPerDay;
}

std::vector<VolumePoint> tx_volume(const TransactionStore& store, const EntityIndex& index,
                                   std::span<const EntityId> entities, const TimeRange& range, Bucket bucket) {
    require_valid(range);
    std::vector<VolumePoint> out;
    const auto extent = store.time_extent();
    if (!extent) return out;
    // Buckets span the part of the range that overlaps the data.
    const UnixSeconds from = std::max(range.from, extent->from);
    const UnixSeconds to = std::min(range.to, extent->to);
    if (from >= to) return out;

    std::vector<char> member(index.entity_count(), 0);
    for (auto e : entities) {
        if (e >= member.size()) throw NotFound("unknown entity " + std::to_string(e));
        member[e] = 1;
    }

    for (UnixSeconds b = bucket_start(from, bucket); b < to; b = next_bucket(b, bucket)) out.push_back({b, 0});
    auto [lo, hi] = store.tx_span({from, to});
    std::size_t cursor = 0;
    for (TxIndex t = lo; t < hi; ++t) {
        const auto& tx = store.tx(t);
        while (cursor + 1 < out.size() && out[cursor + 1].bucket_start <= tx.timestamp) ++cursor;
        bool hit = false;
        for (const auto& s : tx.inputs) hit = hit || member[index.entity_of(s.address)];
        for (const auto& s : tx.outputs) hit = hit || member[index.entity_of(s.address)];
        if (hit) ++out[cursor].transactions;
    }
    return out;
}

}  // namespace ledgerscope
