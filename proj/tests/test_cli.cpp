#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ledgerscope/synthetic.hpp"
#include "ledgerscope/timefmt.hpp"
#include "support.hpp"

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <fstream>
#include <sstream>

using namespace ledgerscope;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct Workdir {
    fs::path dir = fs::temp_directory_path() / ("ledgerscope_cli_" + std::to_string(::getpid()));
    Workdir() {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workdir() { fs::remove_all(dir); }

    Run run(const std::string& args) const {
        const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
        const auto cmd = std::string(LEDGERSCOPE_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("gen, ingest and export") {
    Workdir w;
    {
        std::ofstream spec(w.path("spec.json"));
        spec << R"({"seed": 3, "n_entities": 250, "one_timer_fraction": 0.8, "n_miners": 6})";
    }
    auto r = w.run("gen --spec " + w.path("spec.json") + " --output " + w.path("ledger.jsonl") + " --json");
    REQUIRE(r.code == 0);
    CHECK(fs::exists(w.path("ledger.truth.jsonl")));
    CHECK(fs::exists(w.path("ledger.tags.csv")));

    std::ifstream truth_in(w.path("ledger.truth.jsonl"));
    std::set<std::uint32_t> gt;
    for (const auto& g : read_ground_truth(truth_in)) gt.insert(g.entity_gt);

    r = w.run("ingest --input " + w.path("ledger.jsonl") + " --corpus " + w.path("corpus") + " --tags " +
              w.path("ledger.tags.csv") + " --json");
    REQUIRE(r.code == 0);
    const auto summary = nlohmann::json::parse(r.out);
    CHECK(summary["entities"] == gt.size());
    CHECK(summary["tagged_entities"] == 1);

    r = w.run("ingest --input " + w.path("ledger.jsonl") + " --corpus " + w.path("corpus2") + " --json");
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["corpus_id"] == summary["corpus_id"]);

    r = w.run("export-measures --corpus " + w.path("corpus") + " --from 2010-01-01 --to 2011-01-01 --output " +
              w.path("m.csv") + " --json");
    REQUIRE(r.code == 0);
    const auto c = load_corpus(w.path("corpus"));
    const auto expected = compute_measures(c.source(), TimeRange{parse_time("2010-01-01"), parse_time("2011-01-01")}).size();
    std::istringstream csv(slurp(w.path("m.csv")));
    std::string line;
    std::getline(csv, line);
    CHECK(line.rfind("entity_id,label,category,", 0) == 0);
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        std::stringstream fields(line);
        std::string cell;
        std::size_t n = 0;
        while (std::getline(fields, cell, ',')) ++n;
        CHECK(n >= 19);
        ++rows;
    }
    CHECK(rows == expected);

    r = w.run("export-measures --corpus " + w.path("corpus") + " --from 2011-01-01 --to 2010-01-01");
    CHECK(r.code == 1);

    r = w.run("tags --corpus " + w.path("corpus2") + " --tags " + w.path("ledger.tags.csv") + " --json");
    REQUIRE(r.code == 0);
    CHECK(load_corpus(w.path("corpus2")).index.tagged_count() == 1);
}

TEST_CASE("empty and malformed input") {
    Workdir w;
    { std::ofstream(w.path("empty.jsonl")); }
    auto r = w.run("ingest --input " + w.path("empty.jsonl") + " --corpus " + w.path("e") + " --json");
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["transactions"] == 0);

    {
        std::ofstream bad(w.path("bad.jsonl"));
        bad << R"({"txid":")" << std::string(64, 'a') << R"(","time":1,"vin":[],"vout":[{"addr":"A","value":1}]})"
            << "\n{broken\n";
    }
    r = w.run("ingest --input " + w.path("bad.jsonl") + " --corpus " + w.path("b"));
    CHECK(r.code == 1);
    CHECK(r.err.find("line 2") != std::string::npos);

    CHECK(w.run("ingest --input " + w.path("missing.jsonl") + " --corpus " + w.path("m")).code == 1);
    CHECK(w.run("export-measures --corpus " + w.path("nowhere")).code == 1);
}
