// Operator entry points: ingest, tags, gen, export-measures, serve.
#include "ledgerscope/corpus.hpp"
#include "ledgerscope/http_server.hpp"
#include "ledgerscope/synthetic.hpp"
#include "ledgerscope/timefmt.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

using namespace ledgerscope;
using json = nlohmann::json;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitInternal = 2;

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write '" + path + "'");
    return out;
}

void report(bool as_json, const json& summary) {
    if (as_json) {
        std::cout << summary.dump() << '\n';
        return;
    }
    for (const auto& [k, v] : summary.items())
        std::cout << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
}

std::pair<std::string, int> split_listen(const std::string& listen) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw InvalidArgument("--listen must be host:port");
    int port = 0;
    try {
        port = std::stoi(listen.substr(colon + 1));
    } catch (const std::exception&) {
        throw InvalidArgument("bad port in --listen '" + listen + "'");
    }
    if (port < 0 || port > 65535) throw InvalidArgument("bad port in --listen '" + listen + "'");
    return {listen.substr(0, colon), port};
}

HttpServer* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ledgerscope: entity-level exploration of a Bitcoin transaction ledger"};
    app.require_subcommand(1);
    app.fallthrough();
    bool as_json = false;
    app.add_flag("--json", as_json, "Print a machine-readable summary on stdout");

    std::string input, corpus_dir, tags_path, from, to, listen = "127.0.0.1:8080", output, spec, static_dir;
    std::optional<std::uint64_t> seed;

    auto* ingest = app.add_subcommand("ingest", "Parse a JSONL ledger and build a corpus directory");
    ingest->add_option("--input", input, "Transaction JSONL file")->required();
    ingest->add_option("--corpus", corpus_dir, "Output corpus directory")->required();
    ingest->add_option("--tags", tags_path, "Optional tag CSV to attach");

    auto* tags = app.add_subcommand("tags", "Attach a known-address CSV to an existing corpus");
    tags->add_option("--corpus", corpus_dir, "Corpus directory")->required();
    tags->add_option("--tags", tags_path, "Tag CSV (address,label,category)")->required();

    auto* gen = app.add_subcommand("gen", "Generate a synthetic ledger with ground truth");
    gen->add_option("--spec", spec, "Generator config JSON (defaults when omitted)");
    gen->add_option("--output", output, "Output JSONL path; writes <stem>.truth.jsonl and <stem>.tags.csv alongside")
        ->required();
    gen->add_option("--seed", seed, "Override the config seed");

    auto* exportm = app.add_subcommand("export-measures", "Write per-entity activity measures as CSV");
    exportm->add_option("--corpus", corpus_dir, "Corpus directory")->required();
    exportm->add_option("--from", from, "Range start (ISO-8601 or unix seconds)");
    exportm->add_option("--to", to, "Range end, exclusive");
    exportm->add_option("--output", output, "CSV path (stdout when omitted)");

    auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
    serve->add_option("--corpus", corpus_dir, "Corpus directory")->required();
    serve->add_option("--listen", listen, "host:port")->capture_default_str();
    serve->add_option("--static", static_dir, "Directory with the browser client");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            auto in = open_in(input);
            Corpus c = build_corpus(parse_transactions(in));
            const auto now = format_iso8601(now_unix());
            auto m = save_corpus(c, corpus_dir, now);
            json summary{{"corpus_id", c.id},
                         {"transactions", c.store.tx_count()},
                         {"addresses", c.store.address_count()},
                         {"entities", c.index.entity_count()}};
            if (!tags_path.empty()) {
                auto tin = open_in(tags_path);
                const auto table = import_tags(tin);
                auto att = attach_tags(c.index, c.store, table);
                c.index = std::move(att.index);
                m = save_entities(c, corpus_dir, now);
                summary["tagged_entities"] = att.tagged_entities;
                summary["unknown_tag_addresses"] = att.unknown_addresses;
                summary["duplicate_tag_rows"] = table.duplicate_warnings;
            }
            report(as_json, summary);
        } else if (*tags) {
            Corpus c = load_corpus(corpus_dir);
            auto tin = open_in(tags_path);
            const auto table = import_tags(tin);
            auto att = attach_tags(c.index, c.store, table);
            c.index = std::move(att.index);
            save_entities(c, corpus_dir, format_iso8601(now_unix()));
            report(as_json, json{{"corpus_id", c.id},
                                 {"tag_rows", table.tags.size()},
                                 {"duplicate_tag_rows", table.duplicate_warnings},
                                 {"unknown_tag_addresses", att.unknown_addresses},
                                 {"tagged_entities", att.tagged_entities}});
        } else if (*gen) {
            GeneratorConfig cfg;
            if (!spec.empty()) {
                auto sin = open_in(spec);
                cfg = parse_generator_config(sin);
            }
            if (seed) cfg.seed = *seed;
            const auto corpus = generate_synthetic(cfg);
            std::filesystem::path out_path(output);
            auto stem = out_path;
            stem.replace_extension();
            const auto truth_path = stem.string() + ".truth.jsonl";
            const auto tags_out = stem.string() + ".tags.csv";
            {
                auto out = open_out(output);
                for (const auto& tx : corpus.transactions) write_transaction(out, tx);
            }
            {
                auto out = open_out(truth_path);
                write_ground_truth(out, corpus.truth);
            }
            {
                auto out = open_out(tags_out);
                out << corpus.tags_csv;
            }
            report(as_json, json{{"transactions", corpus.transactions.size()},
                                 {"entities", corpus.entity_profile.size()},
                                 {"addresses", corpus.truth.size()},
                                 {"output", output},
                                 {"truth", truth_path},
                                 {"tags", tags_out}});
        } else if (*exportm) {
            const Corpus c = load_corpus(corpus_dir);
            TimeRange range = c.store.time_extent().value_or(TimeRange{0, 1});
            if (!from.empty()) range.from = parse_time(from);
            if (!to.empty()) range.to = parse_time(to);
            if (!range.valid())
                throw InvalidArgument("empty range: --from must be earlier than --to");
            const auto table = compute_measures(c.source(), range);
            if (output.empty()) {
                write_measures_csv(std::cout, table, c.index);
            } else {
                auto out = open_out(output);
                write_measures_csv(out, table, c.index);
                report(as_json, json{{"rows", table.size()}, {"from", range.from}, {"to", range.to}, {"output", output}});
            }
        } else if (*serve) {
            auto c = std::make_shared<const Corpus>(load_corpus(corpus_dir));
            Service service;
            service.add_corpus(c);
            HttpServer server(service);
            if (!static_dir.empty() && !server.mount_static(static_dir))
                throw InvalidArgument("cannot serve static directory '" + static_dir + "'");
            const auto [host, port] = split_listen(listen);
            const int bound = server.bind(host, port);
            if (bound < 0) throw InvalidArgument("cannot listen on " + listen);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            report(as_json, json{{"corpus_id", c->id}, {"listen", host + ":" + std::to_string(bound)}});
            std::cout.flush();
            server.run();
            g_server = nullptr;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return 0;
}
