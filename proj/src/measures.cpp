#include "ledgerscope/measures.hpp"

#include <algorithm>
#include <array>
#include <ostream>

namespace ledgerscope {

namespace {

constexpr std::array<MeasureKey, 9> kKeys{MeasureKey::num_txs_sender, MeasureKey::num_txs_receiver,
                                          MeasureKey::time_first,     MeasureKey::time_last,
                                          MeasureKey::time_active,    MeasureKey::amount_rec,
                                          MeasureKey::amount_sent,    MeasureKey::num_inputs,
                                          MeasureKey::num_outputs};

const std::vector<SeriesKey>& series_table() {
    static const std::vector<SeriesKey> table = [] {
        std::vector<SeriesKey> v;
        for (auto k : kKeys) {
            if (has_variants(k))
                for (auto var : {Variant::smallest, Variant::average, Variant::largest}) v.push_back({k, var});
            else
                v.push_back({k, Variant::none});
        }
        return v;
    }();
    return table;
}

// Timestamps are non-negative; clamping keeps day arithmetic overflow-free.
constexpr UnixSeconds kMaxTime = UnixSeconds{1} << 52;

}  // namespace

bool has_variants(MeasureKey k) {
    return k == MeasureKey::amount_rec || k == MeasureKey::amount_sent || k == MeasureKey::num_inputs ||
           k == MeasureKey::num_outputs;
}

bool is_time_series(MeasureKey k) {
    return k == MeasureKey::time_first || k == MeasureKey::time_last || k == MeasureKey::time_active;
}

bool is_amount_series(MeasureKey k) { return k == MeasureKey::amount_rec || k == MeasureKey::amount_sent; }

std::string_view to_string(MeasureKey k) {
    switch (k) {
        case MeasureKey::num_txs_sender: return "num_txs_sender";
        case MeasureKey::num_txs_receiver: return "num_txs_receiver";
        case MeasureKey::time_first: return "time_first";
        case MeasureKey::time_last: return "time_last";
        case MeasureKey::time_active: return "time_active";
        case MeasureKey::amount_rec: return "amount_rec";
        case MeasureKey::amount_sent: return "amount_sent";
        case MeasureKey::num_inputs: return "num_inputs";
        case MeasureKey::num_outputs: return "num_outputs";
    }
    return "?";
}

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::none: return "n/a";
        case Variant::smallest: return "smallest";
        case Variant::average: return "average";
        case Variant::largest: return "largest";
    }
    return "?";
}

std::optional<MeasureKey> parse_measure_key(std::string_view s) {
    for (auto k : kKeys)
        if (to_string(k) == s) return k;
    return std::nullopt;
}

std::optional<Variant> parse_variant(std::string_view s) {
    if (s.empty() || s == "n/a" || s == "none") return Variant::none;
    for (auto v : {Variant::smallest, Variant::average, Variant::largest})
        if (to_string(v) == s) return v;
    return std::nullopt;
}

std::string SeriesKey::name() const {
    std::string n(to_string(key));
    if (variant != Variant::none) {
        n += '.';
        n += to_string(variant);
    }
    return n;
}

SeriesKey make_series(std::string_view key, std::string_view variant) {
    if (key == "num_txs") {
        if (variant == "sender") return {MeasureKey::num_txs_sender, Variant::none};
        if (variant == "receiver") return {MeasureKey::num_txs_receiver, Variant::none};
        throw InvalidArgument("num_txs needs variant 'sender' or 'receiver'");
    }
    auto k = parse_measure_key(key);
    if (!k) throw InvalidArgument("unknown measure key '" + std::string(key) + "'");
    if (!has_variants(*k)) return {*k, Variant::none};
    auto v = parse_variant(variant);
    if (!v) throw InvalidArgument("unknown variant '" + std::string(variant) + "'");
    if (*v == Variant::none)
        throw InvalidArgument(std::string(key) + " needs a variant: smallest, average or largest");
    return {*k, *v};
}

SeriesKey parse_series(std::string_view name) {
    auto dot = name.find('.');
    if (dot == std::string_view::npos) return make_series(name, "");
    return make_series(name.substr(0, dot), name.substr(dot + 1));
}

std::span<const SeriesKey> all_series() { return series_table(); }

namespace {

template <typename T>
double pick(const Triplet<T>& t, Variant v) {
    switch (v) {
        case Variant::smallest: return static_cast<double>(t.smallest);
        case Variant::largest: return static_cast<double>(t.largest);
        default: return t.average;
    }
}

}  // namespace

std::optional<double> measure_value(const ActivityMeasures& m, SeriesKey s) {
    if (has_variants(s.key) && s.variant == Variant::none)
        throw InvalidArgument(std::string(to_string(s.key)) + " needs a variant");
    switch (s.key) {
        case MeasureKey::num_txs_sender: return static_cast<double>(m.num_txs_sender);
        case MeasureKey::num_txs_receiver: return static_cast<double>(m.num_txs_receiver);
        case MeasureKey::time_first: return static_cast<double>(m.time_first);
        case MeasureKey::time_last: return static_cast<double>(m.time_last);
        case MeasureKey::time_active: return m.time_active_days;
        case MeasureKey::amount_rec:
            if (!m.amount_rec) return std::nullopt;
            return pick(*m.amount_rec, s.variant);
        case MeasureKey::amount_sent:
            if (!m.amount_sent) return std::nullopt;
            return pick(*m.amount_sent, s.variant);
        case MeasureKey::num_inputs: return pick(m.num_inputs, s.variant);
        case MeasureKey::num_outputs: return pick(m.num_outputs, s.variant);
    }
    return std::nullopt;
}

std::optional<double> measure_value(const ActivityMeasures& m, std::string_view key, std::string_view variant) {
    return measure_value(m, make_series(key, variant));
}

// ---------------------------------------------------------------------------

void Partial::add(const Contribution& c) {
    ++n_any;
    if (c.sender) {
        ++n_sender;
        sent_min = std::min(sent_min, c.sent);
        sent_max = std::max(sent_max, c.sent);
        sent_sum += c.sent;
    }
    if (c.receiver) {
        ++n_receiver;
        rec_min = std::min(rec_min, c.received);
        rec_max = std::max(rec_max, c.received);
        rec_sum += c.received;
    }
    in_min = std::min(in_min, c.n_inputs);
    in_max = std::max(in_max, c.n_inputs);
    in_sum += c.n_inputs;
    out_min = std::min(out_min, c.n_outputs);
    out_max = std::max(out_max, c.n_outputs);
    out_sum += c.n_outputs;
    first = std::min(first, c.time);
    last = std::max(last, c.time);
}

void Partial::merge(const Partial& o) {
    n_sender += o.n_sender;
    n_receiver += o.n_receiver;
    n_any += o.n_any;
    in_min = std::min(in_min, o.in_min);
    in_max = std::max(in_max, o.in_max);
    in_sum += o.in_sum;
    out_min = std::min(out_min, o.out_min);
    out_max = std::max(out_max, o.out_max);
    out_sum += o.out_sum;
    sent_min = std::min(sent_min, o.sent_min);
    sent_max = std::max(sent_max, o.sent_max);
    sent_sum += o.sent_sum;
    rec_min = std::min(rec_min, o.rec_min);
    rec_max = std::max(rec_max, o.rec_max);
    rec_sum += o.rec_sum;
    first = std::min(first, o.first);
    last = std::max(last, o.last);
}

ActivityMeasures Partial::finish(EntityId e) const {
    ActivityMeasures m;
    m.entity = e;
    m.num_txs_sender = n_sender;
    m.num_txs_receiver = n_receiver;
    m.num_txs_any = n_any;
    m.time_first = first;
    m.time_last = last;
    m.time_active_days = static_cast<double>(last - first) / static_cast<double>(kSecondsPerDay);
    if (n_receiver > 0)
        m.amount_rec = Triplet<Satoshi>{rec_min, static_cast<double>(rec_sum) / n_receiver, rec_max};
    if (n_sender > 0)
        m.amount_sent = Triplet<Satoshi>{sent_min, static_cast<double>(sent_sum) / n_sender, sent_max};
    m.num_inputs = {in_min, static_cast<double>(in_sum) / n_any, in_max};
    m.num_outputs = {out_min, static_cast<double>(out_sum) / n_any, out_max};
    return m;
}

// ---------------------------------------------------------------------------

SliceStore build_slices(const TransactionStore& store, const EntityIndex& index) {
    SliceStore slices;
    // Transactions are time-ordered, so each day is one contiguous run. Within
    // a day, partials are gathered per entity and emitted in entity order.
    std::vector<std::uint32_t> slot_of(index.entity_count(), std::numeric_limits<std::uint32_t>::max());
    std::vector<SliceRecord> day_records;
    auto flush = [&] {
        std::sort(day_records.begin(), day_records.end(),
                  [](const SliceRecord& a, const SliceRecord& b) { return a.entity < b.entity; });
        for (auto& r : day_records) {
            slot_of[r.entity] = std::numeric_limits<std::uint32_t>::max();
            slices.records_.push_back(r);
        }
        day_records.clear();
    };

    std::int64_t current_day = -1;
    for (const auto& tx : store.transactions()) {
        const auto day = day_of(tx.timestamp);
        if (day != current_day) {
            flush();
            current_day = day;
        }
        for_each_contribution(tx, index, [&](EntityId e, const Contribution& c) {
            if (slot_of[e] == std::numeric_limits<std::uint32_t>::max()) {
                slot_of[e] = static_cast<std::uint32_t>(day_records.size());
                day_records.push_back({e, static_cast<std::uint32_t>(day), Partial{}});
            }
            day_records[slot_of[e]].partial.add(c);
        });
    }
    flush();
    slices.index_entities(index.entity_count());
    return slices;
}

void SliceStore::index_entities(std::size_t n_entities) {
    entity_offsets_.assign(n_entities + 1, 0);
    for (const auto& r : records_) ++entity_offsets_[r.entity + 1];
    for (std::size_t e = 0; e < n_entities; ++e) entity_offsets_[e + 1] += entity_offsets_[e];
    by_entity_.resize(records_.size());
    std::vector<std::uint64_t> cursor(entity_offsets_.begin(), entity_offsets_.end() - 1);
    // records_ is day-major, so each entity's list comes out day-ordered.
    for (std::uint32_t i = 0; i < records_.size(); ++i) by_entity_[cursor[records_[i].entity]++] = i;
}

std::pair<std::size_t, std::size_t> SliceStore::day_span(std::int64_t first_day, std::int64_t last_day) const {
    auto by_day = [](const SliceRecord& r, std::int64_t d) { return static_cast<std::int64_t>(r.day) < d; };
    auto lo = std::lower_bound(records_.begin(), records_.end(), first_day, by_day);
    auto hi = std::lower_bound(lo, records_.end(), last_day, by_day);
    return {static_cast<std::size_t>(lo - records_.begin()), static_cast<std::size_t>(hi - records_.begin())};
}

MeasureTable::MeasureTable(std::vector<ActivityMeasures> rows, std::size_t entity_count)
    : rows_(std::move(rows)), position_(entity_count, kAbsent) {
    for (std::uint32_t i = 0; i < rows_.size(); ++i) position_[rows_[i].entity] = i;
}

std::vector<EntityId> MeasureTable::entities() const {
    std::vector<EntityId> ids;
    ids.reserve(rows_.size());
    for (const auto& r : rows_) ids.push_back(r.entity);
    return ids;
}

namespace {

struct QueryPlan {
    // Fully covered days [first_day, last_day); empty when first_day >= last_day.
    std::int64_t first_day = 0;
    std::int64_t last_day = 0;
    // Raw-scan intervals for the uncovered edges.
    std::vector<TimeRange> raw;
};

QueryPlan plan(const TimeRange& range) {
    const UnixSeconds from = std::clamp<UnixSeconds>(range.from, 0, kMaxTime);
    const UnixSeconds to = std::clamp<UnixSeconds>(range.to, 0, kMaxTime);
    QueryPlan p;
    if (from >= to) return p;
    p.first_day = (from + kSecondsPerDay - 1) / kSecondsPerDay;
    p.last_day = to / kSecondsPerDay;
    if (p.first_day >= p.last_day) {
        p.first_day = p.last_day = 0;
        p.raw.push_back({from, to});
        return p;
    }
    if (from < p.first_day * kSecondsPerDay) p.raw.push_back({from, p.first_day * kSecondsPerDay});
    if (p.last_day * kSecondsPerDay < to) p.raw.push_back({p.last_day * kSecondsPerDay, to});
    return p;
}

Contribution contribution_for(const Transaction& tx, const EntityIndex& index, EntityId e) {
    Contribution c{tx.timestamp, false, false, 0, 0, static_cast<std::uint32_t>(tx.inputs.size()),
                   static_cast<std::uint32_t>(tx.outputs.size())};
    for (const auto& in : tx.inputs)
        if (index.entity_of(in.address) == e) {
            c.sender = true;
            c.sent += in.amount;
        }
    for (const auto& out : tx.outputs)
        if (index.entity_of(out.address) == e) {
            c.receiver = true;
            c.received += out.amount;
        }
    return c;
}

MeasureTable scan_by_day(const MeasureSource& src, std::span<const EntityId> entities, bool everyone,
                         const QueryPlan& p) {
    const std::size_t n = src.index.entity_count();
    std::vector<char> member;
    if (!everyone) {
        member.assign(n, 0);
        for (auto e : entities) member[e] = 1;
    }
    auto wanted = [&](EntityId e) { return everyone || member[e]; };

    // Sparse accumulation: a window touches far fewer entities than the corpus holds.
    constexpr std::uint32_t kUnseen = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> slot(n, kUnseen);
    std::vector<EntityId> touched;
    std::vector<Partial> acc;
    auto partial = [&](EntityId e) -> Partial& {
        if (slot[e] == kUnseen) {
            slot[e] = static_cast<std::uint32_t>(acc.size());
            touched.push_back(e);
            acc.emplace_back();
        }
        return acc[slot[e]];
    };
    std::pair<std::size_t, std::size_t> days{0, 0};
    if (p.first_day < p.last_day) days = src.slices.day_span(p.first_day, p.last_day);
    std::vector<std::pair<TxIndex, TxIndex>> edges;
    std::size_t estimate = days.second - days.first;
    for (const auto& r : p.raw) {
        edges.push_back(src.store.tx_span(r));
        estimate += 2 * (edges.back().second - edges.back().first);
    }
    estimate = std::min(estimate, n);
    touched.reserve(estimate);
    acc.reserve(estimate);

    const auto records = src.slices.records();
    for (std::size_t i = days.first; i < days.second; ++i)
        if (wanted(records[i].entity)) partial(records[i].entity).merge(records[i].partial);
    for (const auto& [lo, hi] : edges) {
        for (TxIndex t = lo; t < hi; ++t)
            for_each_contribution(src.store.tx(t), src.index, [&](EntityId e, const Contribution& c) {
                if (wanted(e)) partial(e).add(c);
            });
    }

    std::sort(touched.begin(), touched.end());
    std::vector<ActivityMeasures> rows;
    rows.reserve(touched.size());
    for (auto e : touched)
        if (!acc[slot[e]].empty()) rows.push_back(acc[slot[e]].finish(e));
    return MeasureTable(std::move(rows), n);
}

MeasureTable scan_by_entity(const MeasureSource& src, std::span<const EntityId> entities, const QueryPlan& p) {
    const auto records = src.slices.records();
    std::vector<ActivityMeasures> rows;
    std::vector<TxIndex> txs;
    for (auto e : entities) {
        Partial acc;
        if (p.first_day < p.last_day) {
            const auto idx = src.slices.entity_slices(e);
            auto it = std::lower_bound(idx.begin(), idx.end(), p.first_day, [&](std::uint32_t i, std::int64_t d) {
                return static_cast<std::int64_t>(records[i].day) < d;
            });
            for (; it != idx.end() && static_cast<std::int64_t>(records[*it].day) < p.last_day; ++it)
                acc.merge(records[*it].partial);
        }
        for (const auto& r : p.raw) {
            auto [lo, hi] = src.store.tx_span(r);
            if (lo == hi) continue;
            txs.clear();
            for (auto a : src.index.members(e)) {
                const auto posts = src.store.postings(a);
                auto it = std::lower_bound(posts.begin(), posts.end(), lo,
                                           [](const Posting& ps, TxIndex t) { return ps.tx < t; });
                for (; it != posts.end() && it->tx < hi; ++it) txs.push_back(it->tx);
            }
            std::sort(txs.begin(), txs.end());
            txs.erase(std::unique(txs.begin(), txs.end()), txs.end());
            for (auto t : txs) acc.add(contribution_for(src.store.tx(t), src.index, e));
        }
        if (!acc.empty()) rows.push_back(acc.finish(e));
    }
    return MeasureTable(std::move(rows), src.index.entity_count());
}

}  // namespace

MeasureTable compute_measures(const MeasureSource& src, std::span<const EntityId> entities, const TimeRange& range,
                              ScanStrategy strategy) {
    require_valid(range);
    for (std::size_t i = 0; i < entities.size(); ++i) {
        if (entities[i] >= src.index.entity_count())
            throw NotFound("unknown entity " + std::to_string(entities[i]));
        if (i > 0 && entities[i] <= entities[i - 1])
            throw InvalidArgument("entity ids must be ascending and unique");
    }
    const auto p = plan(range);
    if (strategy == ScanStrategy::automatic)
        strategy = entities.size() * 16 >= src.index.entity_count() ? ScanStrategy::by_day : ScanStrategy::by_entity;
    if (strategy == ScanStrategy::by_day)
        return scan_by_day(src, entities, entities.size() == src.index.entity_count(), p);
    return scan_by_entity(src, entities, p);
}

MeasureTable compute_measures(const MeasureSource& src, const TimeRange& range, ScanStrategy strategy) {
    require_valid(range);
    const auto p = plan(range);
    if (strategy == ScanStrategy::by_entity) {
        std::vector<EntityId> all(src.index.entity_count());
        for (EntityId e = 0; e < all.size(); ++e) all[e] = e;
        return scan_by_entity(src, all, p);
    }
    return scan_by_day(src, {}, true, p);
}

void write_measures_csv(std::ostream& out, const MeasureTable& table, const EntityIndex& index) {
    out << "entity_id,label,category";
    for (const auto& s : all_series()) out << ',' << s.name();
    out << '\n';
    const auto old_precision = out.precision(17);
    for (const auto& m : table.rows()) {
        out << m.entity << ',';
        if (const auto& t = index.tag(m.entity)) out << t->label << ',' << to_string(t->category);
        else out << ',';
        for (const auto& s : all_series()) {
            out << ',';
            if (auto v = measure_value(m, s)) out << *v;
        }
        out << '\n';
    }
    out.precision(old_precision);
}

}  // namespace ledgerscope
