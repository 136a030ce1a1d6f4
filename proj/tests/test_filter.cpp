#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ledgerscope/filter.hpp"
#include "ledgerscope/synthetic.hpp"
#include "support.hpp"

#include <nlohmann/json.hpp>

using namespace ledgerscope;

namespace {

const SeriesKey kRecv = make_series("num_txs_receiver", "");

std::vector<std::optional<double>> vals(std::initializer_list<double> v) { return {v.begin(), v.end()}; }

std::vector<EntityId> all_ids(const MeasureTable& t) { return t.entities(); }

}  // namespace

TEST_CASE("equal-width bins put the maximum in the last bin") {
    const auto h = histogram(vals({1, 1, 1, 5}), kRecv, 2, Scale::linear);
    CHECK(h.counts == std::vector<std::uint64_t>{3, 1});
    CHECK(h.edges == std::vector<double>{1, 3, 5});
    CHECK(h.total() == 4);
}

TEST_CASE("degenerate range gives one bin [v, v+1)") {
    const auto h = histogram(vals({7, 7, 7}), kRecv, 10, Scale::automatic);
    CHECK(h.counts == std::vector<std::uint64_t>{3});
    CHECK(h.edges == std::vector<double>{7, 8});
}

TEST_CASE("undefined values are counted separately and empty input is allowed") {
    std::vector<std::optional<double>> v{1.0, std::nullopt, 2.0};
    const auto h = histogram(v, kRecv, 4, Scale::linear);
    CHECK(h.undefined == 1);
    CHECK(h.counts[0] + h.counts[3] == 2);
    CHECK(h.total() == 3);
    const auto e = histogram(std::vector<std::optional<double>>{}, kRecv, 4, Scale::linear);
    CHECK(e.total() == 0);
    CHECK(e.counts.size() == 4);
    CHECK_THROWS_AS(histogram(v, kRecv, 0, Scale::linear), InvalidArgument);
}

TEST_CASE("log10 histogram matches an independent binning pass") {
    GeneratorConfig cfg;
    cfg.n_entities = 800;
    cfg.n_miners = 30;
    cfg.n_high_activity = 5;
    const auto syn = generate_synthetic(cfg);
    const auto c = build_corpus(TransactionStore::build(syn.transactions));
    const auto table = compute_measures(c.source(), kAllTime);
    const auto series = make_series("amount_sent", "average");
    const auto ids = all_ids(table);
    const std::uint32_t bins = 25;
    const auto h = histogram(table, ids, series, bins, Scale::automatic);
    CHECK(h.scale == Scale::log10);

    std::vector<double> v;
    std::uint64_t undefined = 0;
    for (const auto& r : table.rows()) {
        if (r.amount_sent) v.push_back(r.amount_sent->average);
        else ++undefined;
    }
    const double lo = std::log10(*std::min_element(v.begin(), v.end()));
    const double hi = std::log10(*std::max_element(v.begin(), v.end()));
    std::vector<std::uint64_t> counts(bins, 0);
    for (double x : v) {
        // Assign against the histogram's own edges so the comparison is about
        // counting, with the edges checked separately below.
        auto it = std::upper_bound(h.edges.begin(), h.edges.end(), x);
        std::size_t b = std::min<std::size_t>(bins - 1, static_cast<std::size_t>(it - h.edges.begin()) - 1);
        ++counts[b];
    }
    CHECK(h.counts == counts);
    CHECK(h.undefined == undefined);
    for (std::uint32_t i = 0; i <= bins; ++i)
        CHECK(std::log10(h.edges[i]) == doctest::Approx(lo + (hi - lo) * i / bins).epsilon(1e-9));
}

TEST_CASE("filter partitions, is idempotent, and rejects bad predicates") {
    const auto c = lstest::corpus_of(lstest::random_corpus({.seed = 3, .addresses = 2000, .transactions = 900}));
    const auto table = compute_measures(c.source(), kAllTime);
    const auto ids = all_ids(table);
    Rng rng(17);
    for (int i = 0; i < 50; ++i) {
        const auto& s = all_series()[rng.below(all_series().size())];
        const auto values = series_values(table, ids, s);
        std::vector<double> defined;
        for (auto v : values)
            if (v) defined.push_back(*v);
        if (defined.empty()) continue;
        double a = defined[rng.below(defined.size())], b = defined[rng.below(defined.size())];
        Predicate p{s, std::min(a, b), std::max(a, b)};
        const auto split = apply_filter(ids, p, table);
        std::vector<EntityId> merged;
        std::merge(split.match.begin(), split.match.end(), split.remainder.begin(), split.remainder.end(),
                   std::back_inserter(merged));
        CHECK(merged == ids);
        std::vector<EntityId> both;
        std::set_intersection(split.match.begin(), split.match.end(), split.remainder.begin(), split.remainder.end(),
                              std::back_inserter(both));
        CHECK(both.empty());
        const auto again = apply_filter(split.match, p, table);
        CHECK(again.match == split.match);
        CHECK(again.remainder.empty());
    }
    Predicate unbounded{make_series("amount_sent", "largest"), std::nullopt, std::nullopt};
    const auto u = apply_filter(ids, unbounded, table);
    for (auto e : u.match) CHECK(table.find(e)->amount_sent.has_value());
    for (auto e : u.remainder) CHECK_FALSE(table.find(e)->amount_sent.has_value());

    Predicate bad{kRecv, 5.0, 1.0};
    CHECK_THROWS_AS(apply_filter(ids, bad, table), InvalidArgument);
}

TEST_CASE("bin-aligned filter counts equal histogram counts") {
    const auto c = lstest::corpus_of(lstest::random_corpus({.seed = 13, .addresses = 4000, .transactions = 2000}));
    const auto table = compute_measures(c.source(), kAllTime);
    const auto ids = all_ids(table);
    for (const auto& s : all_series()) {
        const auto h = histogram(table, ids, s, 20, Scale::automatic);
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
            // [edge_b, edge_{b+1}) on a closed predicate: take the largest
            // double below the upper edge, except for the last bin.
            const double hi = b + 1 == h.counts.size() ? h.edges[b + 1] : std::nextafter(h.edges[b + 1], -INFINITY);
            const auto split = apply_filter(ids, Predicate{s, h.edges[b], hi}, table);
            CHECK_MESSAGE(split.match.size() == h.counts[b], s.name() << " bin " << b);
        }
    }
}

TEST_CASE("predicate JSON round-trip") {
    Predicate p{make_series("amount_rec", "largest"), 0.0, 10.0 * kSatoshiPerBtc};
    CHECK(predicate_from_json(to_json(p)) == p);
    Predicate open{kRecv, 1.0, std::nullopt};
    CHECK(predicate_from_json(to_json(open)) == open);
    CHECK_THROWS(predicate_from_json(nlohmann::json{{"key", "nope"}}));
}

TEST_CASE("volume counts each transaction once") {
    const std::vector<RawTransaction> txs{
        {lstest::txid_hex(0, 1), 1'300'000'000, {{"A", 10}}, {{"B", 10}}},
    };
    const auto c = lstest::corpus_of(txs);
    std::vector<EntityId> both{0, 1};
    const auto v = tx_volume(c.store, c.index, both, kAllTime, Bucket::day);
    REQUIRE(v.size() == 1);
    CHECK(v[0].transactions == 1);
    const auto none = tx_volume(c.store, c.index, {}, kAllTime, Bucket::day);
    for (const auto& p : none) CHECK(p.transactions == 0);
}

TEST_CASE("full-set volume equals per-bucket transaction counts") {
    const auto raw = lstest::random_corpus({.seed = 44, .addresses = 3000, .transactions = 1500});
    const auto c = lstest::corpus_of(raw);
    const auto ids = all_ids(compute_measures(c.source(), kAllTime));
    for (auto bucket : {Bucket::month, Bucket::day}) {
        const auto v = tx_volume(c.store, c.index, ids, kAllTime, bucket);
        std::map<UnixSeconds, std::uint64_t> want;
        for (const auto& tx : raw) ++want[bucket_start(tx.time, bucket)];
        std::uint64_t total = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) CHECK(v[i].bucket_start == next_bucket(v[i - 1].bucket_start, bucket));
            const auto it = want.find(v[i].bucket_start);
            CHECK(v[i].transactions == (it == want.end() ? 0 : it->second));
            total += v[i].transactions;
        }
        CHECK(total == raw.size());
    }
}

TEST_CASE("calendar buckets") {
    // 2012-02-29T13:00:00Z
    const UnixSeconds t = 1'330'520'400;
    CHECK(bucket_start(t, Bucket::day) == 1'330'473'600);
    CHECK(bucket_start(t, Bucket::month) == 1'328'054'400);
    CHECK(next_bucket(1'328'054'400, Bucket::month) == 1'330'560'000);
}
