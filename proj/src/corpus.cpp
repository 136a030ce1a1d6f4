#include "ledgerscope/corpus.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>
#include <sstream>

namespace ledgerscope {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr char kTxMagic[4] = {'L', 'S', 'T', 'X'};
constexpr char kEntityMagic[4] = {'L', 'S', 'E', 'N'};
constexpr char kSliceMagic[4] = {'L', 'S', 'S', 'L'};

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Little-endian fixed-width encoding, independent of struct layout.
class Writer {
public:
    explicit Writer(const char (&magic)[4]) {
        buf_.append(magic, 4);
        u32(kCorpusFormatVersion);
    }
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void str(std::string_view s) {
        u64(s.size());
        buf_.append(s);
    }
    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(std::string bytes, const char (&magic)[4], const std::string& what) : buf_(std::move(bytes)), what_(what) {
        if (buf_.size() < 8 || std::memcmp(buf_.data(), magic, 4) != 0)
            throw Error(what_ + ": not a ledgerscope file (bad magic)");
        pos_ = 4;
        const auto version = u32();
        if (version != kCorpusFormatVersion)
            throw Error(what_ + ": unsupported format version " + std::to_string(version));
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf_[pos_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(buf_[pos_++])} << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<unsigned char>(buf_[pos_++])} << (8 * i);
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    std::string str() {
        const auto n = u64();
        need(n);
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint64_t count(std::size_t min_bytes_each) {
        const auto n = u64();
        if (min_bytes_each && n > (buf_.size() - pos_) / min_bytes_each) throw Error(what_ + ": truncated");
        return n;
    }
    void finish() const {
        if (pos_ != buf_.size()) throw Error(what_ + ": trailing bytes");
    }

private:
    void need(std::uint64_t n) const {
        if (n > buf_.size() - pos_) throw Error(what_ + ": truncated");
    }
    std::string buf_;
    std::string what_;
    std::size_t pos_ = 0;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file(const fs::path& p, const std::string& bytes) {
    const auto tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("write failed for " + tmp);
    }
    fs::rename(tmp, p);
}

void write_partial(Writer& w, const Partial& p) {
    w.u32(p.n_sender);
    w.u32(p.n_receiver);
    w.u32(p.n_any);
    w.u32(p.in_min);
    w.u32(p.in_max);
    w.u32(p.out_min);
    w.u32(p.out_max);
    w.u64(p.in_sum);
    w.u64(p.out_sum);
    w.i64(p.sent_min);
    w.i64(p.sent_sum);
    w.i64(p.sent_max);
    w.i64(p.rec_min);
    w.i64(p.rec_sum);
    w.i64(p.rec_max);
    w.i64(p.first);
    w.i64(p.last);
}

Partial read_partial(Reader& r) {
    Partial p;
    p.n_sender = r.u32();
    p.n_receiver = r.u32();
    p.n_any = r.u32();
    p.in_min = r.u32();
    p.in_max = r.u32();
    p.out_min = r.u32();
    p.out_max = r.u32();
    p.in_sum = r.u64();
    p.out_sum = r.u64();
    p.sent_min = r.i64();
    p.sent_sum = r.i64();
    p.sent_max = r.i64();
    p.rec_min = r.i64();
    p.rec_sum = r.i64();
    p.rec_max = r.i64();
    p.first = r.i64();
    p.last = r.i64();
    return p;
}

}  // namespace

class StoreSerializer {
public:
    static std::string encode(const TransactionStore& s) {
        Writer w(kTxMagic);
        w.u64(s.addresses_.size());
        for (const auto& a : s.addresses_) w.str(a);
        w.u64(s.txs_.size());
        for (const auto& tx : s.txs_) {
            w.str(tx.tx_id);
            w.i64(tx.timestamp);
            w.u64(tx.inputs.size());
            for (const auto& in : tx.inputs) {
                w.u32(in.address);
                w.i64(in.amount);
            }
            w.u64(tx.outputs.size());
            for (const auto& out : tx.outputs) {
                w.u32(out.address);
                w.i64(out.amount);
            }
        }
        return w.bytes();
    }

    static TransactionStore decode(std::string bytes) {
        Reader r(std::move(bytes), kTxMagic, "transactions.bin");
        TransactionStore s;
        const auto n_addr = r.count(8);
        s.addresses_.reserve(n_addr);
        for (std::uint64_t i = 0; i < n_addr; ++i) s.addresses_.push_back(r.str());
        const auto n_tx = r.count(8);
        s.txs_.reserve(n_tx);
        auto slot = [&] {
            Slot sl{r.u32(), r.i64()};
            if (sl.address >= n_addr) throw Error("transactions.bin: address id out of range");
            return sl;
        };
        for (std::uint64_t i = 0; i < n_tx; ++i) {
            Transaction tx;
            tx.tx_id = r.str();
            tx.timestamp = r.i64();
            const auto n_in = r.count(12);
            for (std::uint64_t k = 0; k < n_in; ++k) tx.inputs.push_back(slot());
            const auto n_out = r.count(12);
            for (std::uint64_t k = 0; k < n_out; ++k) tx.outputs.push_back(slot());
            tx.is_coinbase = tx.inputs.empty();
            s.txs_.push_back(std::move(tx));
        }
        r.finish();
        s.index_addresses();
        return s;
    }
};

class EntitySerializer {
public:
    static std::string encode(const EntityIndex& e) {
        Writer w(kEntityMagic);
        w.u64(e.address_entity_.size());
        for (auto v : e.address_entity_) w.u32(v);
        w.u64(e.member_offsets_.size());
        for (auto v : e.member_offsets_) w.u64(v);
        w.u64(e.members_.size());
        for (auto v : e.members_) w.u32(v);
        w.u64(e.tags_.size());
        for (const auto& t : e.tags_) {
            w.u8(t ? 1 : 0);
            if (t) {
                w.str(t->label);
                w.u8(static_cast<std::uint8_t>(t->category));
            }
        }
        return w.bytes();
    }

    static EntityIndex decode(std::string bytes, std::size_t n_addresses) {
        Reader r(std::move(bytes), kEntityMagic, "entities.bin");
        EntityIndex e;
        e.address_entity_.resize(r.count(4));
        for (auto& v : e.address_entity_) v = r.u32();
        e.member_offsets_.resize(r.count(8));
        for (auto& v : e.member_offsets_) v = r.u64();
        e.members_.resize(r.count(4));
        for (auto& v : e.members_) v = r.u32();
        e.tags_.resize(r.count(1));
        for (auto& t : e.tags_)
            if (r.u8()) {
                Tag tag;
                tag.label = r.str();
                const auto c = r.u8();
                if (c > static_cast<std::uint8_t>(TagCategory::other)) throw Error("entities.bin: bad tag category");
                tag.category = static_cast<TagCategory>(c);
                t = std::move(tag);
            }
        r.finish();
        const auto n_entities = e.member_offsets_.empty() ? 0 : e.member_offsets_.size() - 1;
        if (e.address_entity_.size() != n_addresses || e.members_.size() != n_addresses ||
            e.tags_.size() != n_entities || e.member_offsets_.empty() || e.member_offsets_.back() != n_addresses)
            throw Error("entities.bin does not match transactions.bin");
        for (auto v : e.address_entity_)
            if (v >= n_entities) throw Error("entities.bin: entity id out of range");
        return e;
    }
};

class SliceSerializer {
public:
    static std::string encode(const SliceStore& s) {
        Writer w(kSliceMagic);
        w.u64(s.entity_count());
        w.u64(s.records_.size());
        for (const auto& rec : s.records_) {
            w.u32(rec.entity);
            w.u32(rec.day);
            write_partial(w, rec.partial);
        }
        return w.bytes();
    }

    static SliceStore decode(std::string bytes, std::size_t n_entities) {
        Reader r(std::move(bytes), kSliceMagic, "slices.bin");
        SliceStore s;
        if (r.u64() != n_entities) throw Error("slices.bin does not match entities.bin");
        const auto n = r.count(8);
        s.records_.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            SliceRecord rec;
            rec.entity = r.u32();
            rec.day = r.u32();
            if (rec.entity >= n_entities) throw Error("slices.bin: entity id out of range");
            rec.partial = read_partial(r);
            s.records_.push_back(rec);
        }
        r.finish();
        s.index_entities(n_entities);
        return s;
    }
};

std::string content_hash(const TransactionStore& store) { return fnv1a_hex(StoreSerializer::encode(store)); }

Corpus build_corpus(TransactionStore store) {
    Corpus c;
    c.store = std::move(store);
    c.id = content_hash(c.store);
    c.index = build_entities(c.store);
    c.slices = build_slices(c.store, c.index);
    return c;
}

json to_json(const CorpusManifest& m) {
    auto file = [](const CorpusManifest::File& f) { return json{{"path", f.path}, {"hash", f.hash}, {"bytes", f.bytes}}; };
    return json{{"format_version", m.format_version},
                {"corpus_id", m.corpus_id},
                {"files", {{"transactions", file(m.transactions)}, {"entities", file(m.entities)}, {"slices", file(m.slices)}}},
                {"counts",
                 {{"transactions", m.tx_count},
                  {"addresses", m.address_count},
                  {"entities", m.entity_count},
                  {"tagged_entities", m.tagged_entity_count},
                  {"slices", m.slice_count}}},
                {"built_at", m.built_at},
                {"tags_attached_at", m.tags_attached_at}};
}

CorpusManifest manifest_from_json(const json& j) {
    CorpusManifest m;
    try {
        m.format_version = j.at("format_version").get<std::uint32_t>();
        m.corpus_id = j.at("corpus_id").get<std::string>();
        auto file = [](const json& f) {
            return CorpusManifest::File{f.at("path").get<std::string>(), f.at("hash").get<std::string>(),
                                        f.at("bytes").get<std::uint64_t>()};
        };
        m.transactions = file(j.at("files").at("transactions"));
        m.entities = file(j.at("files").at("entities"));
        m.slices = file(j.at("files").at("slices"));
        const auto& c = j.at("counts");
        m.tx_count = c.at("transactions").get<std::uint64_t>();
        m.address_count = c.at("addresses").get<std::uint64_t>();
        m.entity_count = c.at("entities").get<std::uint64_t>();
        m.tagged_entity_count = c.at("tagged_entities").get<std::uint64_t>();
        m.slice_count = c.at("slices").get<std::uint64_t>();
        m.built_at = j.value("built_at", std::string{});
        m.tags_attached_at = j.value("tags_attached_at", std::string{});
    } catch (const json::exception& e) {
        throw Error(std::string("malformed manifest: ") + e.what());
    }
    if (m.format_version != kCorpusFormatVersion)
        throw Error("unsupported corpus format version " + std::to_string(m.format_version));
    return m;
}

namespace {

void write_manifest(const fs::path& dir, const CorpusManifest& m) { write_file(dir / "manifest.json", to_json(m).dump(2) + "\n"); }

CorpusManifest::File store_file(const fs::path& dir, const std::string& name, const std::string& bytes) {
    write_file(dir / name, bytes);
    return {name, fnv1a_hex(bytes), bytes.size()};
}

void fill_counts(CorpusManifest& m, const Corpus& c) {
    m.corpus_id = c.id;
    m.tx_count = c.store.tx_count();
    m.address_count = c.store.address_count();
    m.entity_count = c.index.entity_count();
    m.tagged_entity_count = c.index.tagged_count();
    m.slice_count = c.slices.slice_count();
}

}  // namespace

CorpusManifest save_corpus(const Corpus& corpus, const fs::path& dir, const std::string& built_at) {
    fs::create_directories(dir);
    CorpusManifest m;
    fill_counts(m, corpus);
    m.transactions = store_file(dir, "transactions.bin", StoreSerializer::encode(corpus.store));
    m.entities = store_file(dir, "entities.bin", EntitySerializer::encode(corpus.index));
    m.slices = store_file(dir, "slices.bin", SliceSerializer::encode(corpus.slices));
    m.built_at = built_at;
    write_manifest(dir, m);
    return m;
}

CorpusManifest save_entities(const Corpus& corpus, const fs::path& dir, const std::string& when) {
    auto m = read_manifest(dir);
    fill_counts(m, corpus);
    m.entities = store_file(dir, "entities.bin", EntitySerializer::encode(corpus.index));
    m.tags_attached_at = when;
    write_manifest(dir, m);
    return m;
}

CorpusManifest read_manifest(const fs::path& dir) {
    const auto path = dir / "manifest.json";
    if (!fs::exists(path)) throw Error("no corpus at " + dir.string() + " (manifest.json missing)");
    try {
        return manifest_from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
        throw Error(std::string("malformed manifest: ") + e.what());
    }
}

Corpus load_corpus(const fs::path& dir) {
    const auto m = read_manifest(dir);
    auto checked = [&](const CorpusManifest::File& f) {
        auto bytes = read_file(dir / f.path);
        if (fnv1a_hex(bytes) != f.hash) throw Error(f.path + ": content hash does not match manifest");
        return bytes;
    };
    if (m.transactions.hash != m.corpus_id) throw Error("manifest corpus_id does not match transactions.bin");
    Corpus c;
    c.store = StoreSerializer::decode(checked(m.transactions));
    c.id = m.corpus_id;
    c.index = EntitySerializer::decode(checked(m.entities), c.store.address_count());
    c.slices = SliceSerializer::decode(checked(m.slices), c.index.entity_count());
    return c;
}

}  // namespace ledgerscope
