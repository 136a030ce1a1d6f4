#pragma once
// A corpus is the immutable bundle every query runs against: transactions,
// entity index (with tags) and day slices, identified by a content hash of
// the transaction data.
//
// On disk it is a directory:
//   manifest.json      format version, corpus id, file hashes, record counts
//   transactions.bin   magic "LSTX"
//   entities.bin       magic "LSEN"
//   slices.bin         magic "LSSL"
// Each binary file starts with a 4-byte magic and a u32 format version;
// loading rejects a wrong magic, a newer version or a hash mismatch.

#include "ledgerscope/measures.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <string>

namespace ledgerscope {

inline constexpr std::uint32_t kCorpusFormatVersion = 1;

struct Corpus {
    std::string id;
    TransactionStore store;
    EntityIndex index;
    SliceStore slices;

    MeasureSource source() const { return {store, index, slices}; }
};

// Runs entity resolution and slicing; the id is derived from the store.
Corpus build_corpus(TransactionStore store);

// Hex FNV-1a 64 of the serialized transaction store.
std::string content_hash(const TransactionStore& store);

struct CorpusManifest {
    std::uint32_t format_version = kCorpusFormatVersion;
    std::string corpus_id;
    struct File {
        std::string path;
        std::string hash;
        std::uint64_t bytes = 0;
    };
    File transactions, entities, slices;
    std::uint64_t tx_count = 0;
    std::uint64_t address_count = 0;
    std::uint64_t entity_count = 0;
    std::uint64_t tagged_entity_count = 0;
    std::uint64_t slice_count = 0;
    std::string built_at;
    std::string tags_attached_at;
};

nlohmann::json to_json(const CorpusManifest& m);
CorpusManifest manifest_from_json(const nlohmann::json& j);

// Writes the directory (created if needed) and returns the manifest.
CorpusManifest save_corpus(const Corpus& corpus, const std::filesystem::path& dir, const std::string& built_at);
// Rewrites entities.bin and the manifest after tags change.
CorpusManifest save_entities(const Corpus& corpus, const std::filesystem::path& dir, const std::string& when);

CorpusManifest read_manifest(const std::filesystem::path& dir);
// Throws Error on missing files, bad magic/version or hash mismatch.
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace ledgerscope
