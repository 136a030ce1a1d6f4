#pragma once
// Transaction ingestion.
//
// Records arrive as JSONL, one transaction per line:
//   {"txid": "<64 hex>", "time": 1231006505,
//    "vin":  [{"addr": "...", "value": 1000000}, ...],
//    "vout": [{"addr": "...", "value": 1500000}, ...]}
// An empty vin marks a coinbase transaction. Amounts are integer satoshis.
//
// The store keeps transactions sorted by (time, txid) and interns address
// strings into dense ids assigned in first-appearance order over that sorted
// sequence, so the store is independent of the input line order.

#include "ledgerscope/types.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ledgerscope {

struct RawSlot {
    std::string addr;
    Satoshi value = 0;
    bool operator==(const RawSlot&) const = default;
};

// One transaction with string addresses, as read from or written to JSONL.
struct RawTransaction {
    std::string txid;
    UnixSeconds time = 0;
    std::vector<RawSlot> vin;
    std::vector<RawSlot> vout;
    bool operator==(const RawTransaction&) const = default;
};

struct Slot {
    AddressId address = 0;
    Satoshi amount = 0;
    bool operator==(const Slot&) const = default;
};

struct Transaction {
    std::string tx_id;
    UnixSeconds timestamp = 0;
    std::vector<Slot> inputs;
    std::vector<Slot> outputs;
    bool is_coinbase = false;

    Satoshi input_total() const;
    Satoshi output_total() const;
    // Derived, never stored. Zero for coinbase transactions.
    Satoshi fee() const { return is_coinbase ? 0 : input_total() - output_total(); }
    bool operator==(const Transaction&) const = default;
};

enum class Role : std::uint8_t { input = 0, output = 1 };

struct Posting {
    TxIndex tx = 0;
    Role role = Role::input;
    bool operator==(const Posting&) const = default;
};

class TransactionStore {
public:
    TransactionStore() = default;

    // Validates, sorts and interns. Throws DuplicateError on a repeated txid
    // and ValidationError on invariant violations (line = index + 1).
    static TransactionStore build(std::vector<RawTransaction> records);

    std::span<const Transaction> transactions() const { return txs_; }
    const Transaction& tx(TxIndex i) const { return txs_[i]; }
    std::size_t tx_count() const { return txs_.size(); }

    std::size_t address_count() const { return addresses_.size(); }
    const std::string& address(AddressId id) const { return addresses_[id]; }
    std::optional<AddressId> find_address(std::string_view addr) const;

    // Postings of one address, ordered by transaction index (= time order).
    // An address appearing twice on the same side of a transaction has one
    // posting for that side.
    std::span<const Posting> postings(AddressId id) const {
        return {postings_.data() + posting_offsets_[id],
                postings_.data() + posting_offsets_[id + 1]};
    }

    // Index range [first, last) of transactions with timestamp in range.
    std::pair<TxIndex, TxIndex> tx_span(const TimeRange& range) const;

    // [earliest, latest + 1); nullopt for an empty store.
    std::optional<TimeRange> time_extent() const;

    RawTransaction to_raw(TxIndex i) const;

    bool operator==(const TransactionStore& o) const {
        return txs_ == o.txs_ && addresses_ == o.addresses_ &&
               posting_offsets_ == o.posting_offsets_ && postings_ == o.postings_;
    }

private:
    friend class StoreSerializer;
    void index_addresses();

    std::vector<Transaction> txs_;
    std::vector<std::string> addresses_;
    std::unordered_map<std::string, AddressId> address_ids_;
    std::vector<std::uint64_t> posting_offsets_{0};
    std::vector<Posting> postings_;
};

// Parses one JSONL line. line_no is used for error messages only.
RawTransaction parse_transaction_line(std::string_view line, std::size_t line_no);

// Reads every non-blank line of a JSONL stream.
std::vector<RawTransaction> read_transactions(std::istream& in);

TransactionStore parse_transactions(std::istream& in);

void write_transaction(std::ostream& out, const RawTransaction& tx);
void write_transactions(std::ostream& out, const TransactionStore& store);

// ---------------------------------------------------------------------------
// Known-address tags

enum class TagCategory : std::uint8_t { exchange, wallet, pool, payment, gambling, other };

std::string_view to_string(TagCategory c);
std::optional<TagCategory> parse_category(std::string_view s);

struct Tag {
    std::string label;
    TagCategory category = TagCategory::other;
    bool operator==(const Tag&) const = default;
    auto operator<=>(const Tag& o) const {
        if (auto c = label <=> o.label; c != 0) return c;
        return category <=> o.category;
    }
};

struct TagTable {
    // Address string -> tag. At most one per address.
    std::unordered_map<std::string, Tag> tags;
    // Rows dropped because their address was already tagged.
    std::size_t duplicate_warnings = 0;

    std::size_t size() const { return tags.size(); }
};

// CSV with header `address,label,category`. Blank category maps to other.
TagTable import_tags(std::istream& in);

}  // namespace ledgerscope
