#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ledgerscope/clustering.hpp"
#include "ledgerscope/synthetic.hpp"
#include "support.hpp"

using namespace ledgerscope;

namespace {

ActivityMeasures row(EntityId e, std::uint64_t sent, std::uint64_t recv, UnixSeconds first = 1'300'000'000) {
    ActivityMeasures m;
    m.entity = e;
    m.num_txs_sender = sent;
    m.num_txs_receiver = recv;
    m.num_txs_any = sent + recv;
    m.time_first = first;
    m.time_last = first + 86400 * static_cast<UnixSeconds>(e % 7);
    m.time_active_days = static_cast<double>(m.time_last - m.time_first) / 86400.0;
    m.num_inputs = {1, 1.0, 1};
    m.num_outputs = {2, 2.0, 2};
    if (recv) m.amount_rec = Triplet<Satoshi>{100, 100.0 + e, static_cast<Satoshi>(200 + e)};
    return m;
}

const std::vector<SeriesKey> kCounts{make_series("num_txs_receiver", ""), make_series("num_txs_sender", "")};

// Low population around (3, 2), high around (400, 200).
MeasureTable two_populations(std::size_t n_low, std::size_t n_high, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ActivityMeasures> rows;
    EntityId e = 0;
    for (std::size_t i = 0; i < n_low; ++i) rows.push_back(row(e++, 1 + rng.below(3), 2 + rng.below(3)));
    for (std::size_t i = 0; i < n_high; ++i) rows.push_back(row(e++, 190 + rng.below(20), 390 + rng.below(20)));
    return MeasureTable(std::move(rows), e);
}

}  // namespace

TEST_CASE("two separated populations are recovered at k=2") {
    const auto table = two_populations(300, 40, 7);
    const auto ids = table.entities();
    ClusterRequest req;
    req.features = kCounts;
    req.k = 2;
    req.seed = 42;
    const auto r = cluster(table, ids, req);
    REQUIRE(r.clusters.size() == 2);
    CHECK(r.clusters[0].count == 300);
    CHECK(r.clusters[1].count == 40);
    for (std::size_t i = 0; i < r.entities.size(); ++i) CHECK(r.assignment[i] == (r.entities[i] < 300 ? 0u : 1u));
    CHECK(r.converged);
    CHECK(r.excluded.empty());
}

TEST_CASE("same seed gives the same result") {
    const auto table = lstest::corpus_of(lstest::random_corpus({.seed = 5, .addresses = 3000, .transactions = 1500}));
    const auto m = compute_measures(table.source(), kAllTime);
    ClusterRequest req;
    req.features = {make_series("num_txs_receiver", ""), make_series("amount_rec", "average"),
                    make_series("time_first", "")};
    req.k = 4;
    req.seed = 9;
    const auto a = cluster(m, m.entities(), req);
    for (int i = 0; i < 5; ++i) {
        const auto b = cluster(m, m.entities(), req);
        CHECK(a.assignment == b.assignment);
        CHECK(a.wcss == b.wcss);
    }
    CHECK(a.excluded.size() + a.entities.size() == m.size());
}

TEST_CASE("within-cluster sum of squares never increases") {
    const auto c = lstest::corpus_of(lstest::random_corpus({.seed = 15, .addresses = 6000, .transactions = 3000}));
    const auto m = compute_measures(c.source(), kAllTime);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ClusterRequest req;
        req.features = {make_series("num_outputs", "average"), make_series("num_inputs", "average"),
                        make_series("time_last", "")};
        req.k = 6;
        req.seed = seed;
        const auto r = cluster(m, m.entities(), req);
        REQUIRE(r.wcss.size() >= 2);
        // Relative slack of 1e-12 absorbs summation-order rounding only.
        for (std::size_t i = 1; i < r.wcss.size(); ++i) CHECK(r.wcss[i] <= r.wcss[i - 1] * (1 + 1e-12));
    }
}

TEST_CASE("k equal to the entity count gives singletons") {
    std::vector<ActivityMeasures> rows;
    for (EntityId e = 0; e < 12; ++e) rows.push_back(row(e, e * e + 1, 3 * e + 2));
    const MeasureTable table(rows, 12);
    ClusterRequest req;
    req.features = kCounts;
    req.k = 12;
    const auto r = cluster(table, table.entities(), req);
    for (const auto& s : r.clusters) CHECK(s.count == 1);
    CHECK(r.wcss.back() == 0.0);
    std::set<std::uint32_t> distinct(r.assignment.begin(), r.assignment.end());
    CHECK(distinct.size() == 12);
}

TEST_CASE("request validation and exclusion of undefined features") {
    std::vector<ActivityMeasures> rows{row(0, 1, 0), row(1, 2, 1), row(2, 3, 4), row(3, 1, 2)};
    const MeasureTable table(rows, 4);
    ClusterRequest req;
    req.features = {make_series("amount_rec", "average")};
    req.k = 2;
    const auto r = cluster(table, table.entities(), req);
    CHECK(r.excluded == std::vector<EntityId>{0});
    CHECK(r.entities.size() == 3);

    req.k = 4;
    CHECK_THROWS_AS(cluster(table, table.entities(), req), InvalidArgument);
    req.k = 1;
    CHECK_THROWS_AS(cluster(table, table.entities(), req), InvalidArgument);
    req.k = 2;
    req.features.clear();
    CHECK_THROWS_AS(cluster(table, table.entities(), req), InvalidArgument);
}

TEST_CASE("cancellation") {
    const auto table = two_populations(200, 20, 3);
    std::stop_source src;
    src.request_stop();
    ClusterRequest req;
    req.features = kCounts;
    CHECK_THROWS_AS(cluster(table, table.entities(), req, src.get_token()), Cancelled);
}

TEST_CASE("summaries use raw values and glyph axes stay in [0, 1]") {
    const auto table = two_populations(50, 10, 11);
    ClusterRequest req;
    req.features = kCounts;
    const auto r = cluster(table, table.entities(), req);
    const auto series = all_series();
    const auto recv_idx = static_cast<std::size_t>(
        std::find(series.begin(), series.end(), make_series("num_txs_receiver", "")) - series.begin());
    const auto& high = r.clusters[1].series[recv_idx];
    CHECK(*high.min >= 390);
    CHECK(*high.max <= 409);
    CHECK(*high.mean >= *high.min);
    for (const auto& c : r.clusters)
        for (const auto& a : c.axes)
            if (a) CHECK((*a >= 0.0 && *a <= 1.0));

    std::set<EntityId> seen;
    for (std::uint32_t c = 0; c < r.clusters.size(); ++c)
        for (auto e : r.members(c)) CHECK(seen.insert(e).second);
    CHECK(seen.size() == r.entities.size());
}

TEST_CASE("glyph normalization") {
    std::vector<ActivityMeasures> rows{row(0, 1, 1), row(1, 3, 5)};
    const MeasureTable table(rows, 2);
    const auto ranges = AxisRanges::over(table, table.entities());
    CHECK(glyph_value(rows[1], GlyphAxis::num_txs) == 8.0);
    CHECK(ranges.normalize(GlyphAxis::num_txs, 2.0) == 0.0);
    CHECK(ranges.normalize(GlyphAxis::num_txs, 8.0) == 1.0);
    CHECK(ranges.normalize(GlyphAxis::num_txs, 5.0) == 0.5);
    CHECK(ranges.normalize(GlyphAxis::num_inputs, 1.0) == 0.5);
    CHECK_FALSE(ranges.normalize(GlyphAxis::amount_sent, std::nullopt));
}
