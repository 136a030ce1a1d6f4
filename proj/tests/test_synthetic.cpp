#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ledgerscope/synthetic.hpp"
#include "support.hpp"

#include <sstream>

using namespace ledgerscope;

namespace {

std::string jsonl(const SyntheticCorpus& s) {
    std::ostringstream out;
    for (const auto& tx : s.transactions) write_transaction(out, tx);
    return out.str();
}

std::map<std::string, std::uint32_t> truth_map(const SyntheticCorpus& s) {
    std::map<std::string, std::uint32_t> m;
    for (const auto& g : s.truth) m[g.addr] = g.entity_gt;
    return m;
}

}  // namespace

TEST_CASE("same config gives byte-identical output") {
    GeneratorConfig cfg;
    cfg.one_timer_fraction = 0.85;
    cfg.n_miners = 10;
    const auto a = generate_synthetic(cfg);
    const auto b = generate_synthetic(cfg);
    CHECK(jsonl(a) == jsonl(b));
    CHECK(a.truth == b.truth);
    cfg.seed = 2;
    CHECK(jsonl(generate_synthetic(cfg)) != jsonl(a));
}

TEST_CASE("85% one-timers have exactly one receiving transaction") {
    GeneratorConfig cfg;
    cfg.seed = 1;
    cfg.one_timer_fraction = 0.85;
    cfg.n_entities = 1000;
    const auto s = generate_synthetic(cfg);
    const auto owner = truth_map(s);
    std::vector<std::uint32_t> receives(s.entity_profile.size(), 0), sends(s.entity_profile.size(), 0);
    for (const auto& tx : s.transactions) {
        std::set<std::uint32_t> r, snd;
        for (const auto& o : tx.vout) r.insert(owner.at(o.addr));
        for (const auto& i : tx.vin) snd.insert(owner.at(i.addr));
        for (auto e : r) ++receives[e];
        for (auto e : snd) ++sends[e];
    }
    std::size_t single = 0;
    for (std::size_t e = 0; e < receives.size(); ++e)
        if (receives[e] == 1 && sends[e] == 0) ++single;
    CHECK(s.count_profile("one_timer") == 850);
    CHECK(single == 850);
}

TEST_CASE("planted miners are exactly the coinbase recipients") {
    GeneratorConfig cfg;
    cfg.n_entities = 200;
    cfg.n_miners = 10;
    const auto s = generate_synthetic(cfg);
    const auto owner = truth_map(s);
    std::set<std::uint32_t> recipients;
    for (const auto& tx : s.transactions)
        if (tx.vin.empty())
            for (const auto& o : tx.vout) recipients.insert(owner.at(o.addr));
    CHECK(recipients.size() == 10);
    for (auto e : recipients) CHECK(s.entity_profile[e].rfind("miner", 0) == 0);
}

TEST_CASE("event-time miner phases") {
    GeneratorConfig cfg;
    cfg.n_entities = 300;
    cfg.n_miners = 100;
    cfg.event_time = 1'293'840'000;  // 2011-01-01
    const auto s = generate_synthetic(cfg);
    CHECK(s.count_profile("miner_before") == 40);
    CHECK(s.count_profile("miner_after") == 30);
    CHECK(s.count_profile("miner_both") == 30);
}

TEST_CASE("config parsing and validation") {
    std::istringstream ok(R"({"seed": 3, "n_entities": 50, "one_timer_fraction": 0.5,
                             "regular_payouts": [2, 4], "event_time": 1300000000})");
    const auto cfg = parse_generator_config(ok);
    CHECK(cfg.seed == 3);
    CHECK(cfg.n_entities == 50);
    CHECK(cfg.regular_payouts_max == 4);
    CHECK(cfg.event_time == 1'300'000'000);

    std::istringstream unknown(R"({"sed": 3})");
    CHECK_THROWS_AS(parse_generator_config(unknown), InvalidArgument);

    GeneratorConfig bad;
    bad.n_entities = 10;
    bad.n_miners = 20;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = {};
    bad.one_timer_fraction = 1.5;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("ground truth round-trips") {
    GeneratorConfig cfg;
    cfg.n_entities = 40;
    const auto s = generate_synthetic(cfg);
    std::stringstream io;
    write_ground_truth(io, s.truth);
    CHECK(read_ground_truth(io) == s.truth);
}

TEST_CASE("generated ledger parses and tags the exchange") {
    GeneratorConfig cfg;
    cfg.n_entities = 60;
    const auto s = generate_synthetic(cfg);
    std::istringstream in(jsonl(s));
    const auto store = parse_transactions(in);
    CHECK(store.tx_count() == s.transactions.size());
    std::istringstream tags(s.tags_csv);
    const auto table = import_tags(tags);
    CHECK_FALSE(table.tags.empty());
    for (const auto& [addr, tag] : table.tags) CHECK(tag.label == "MtGox");
}
