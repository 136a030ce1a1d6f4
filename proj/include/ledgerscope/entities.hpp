#pragma once
// Entity resolution with the input-address heuristic.
//
// All input addresses of a transaction are assumed to be controlled by one
// actor; the relation is closed transitively with a disjoint-set forest.
// Output co-occurrence never links addresses, and output-only addresses end
// up as singleton entities.
//
// Entity ids are dense and canonical: entities are numbered by ascending
// smallest member address id, so a fixed corpus always yields the same ids.

#include "ledgerscope/ingest.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace ledgerscope {

// Union by size with path compression (path halving).
class UnionFind {
public:
    explicit UnionFind(std::size_t n);

    std::uint32_t find(std::uint32_t x);
    // Returns true when two distinct sets were merged.
    bool unite(std::uint32_t a, std::uint32_t b);
    std::size_t size() const { return parent_.size(); }
    std::size_t set_size(std::uint32_t x) { return size_[find(x)]; }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> size_;
};

struct TagAttachment;

class EntityIndex {
public:
    EntityIndex() = default;

    std::size_t entity_count() const { return member_offsets_.size() - 1; }
    std::size_t address_count() const { return address_entity_.size(); }

    EntityId entity_of(AddressId a) const { return address_entity_[a]; }
    std::span<const EntityId> address_entities() const { return address_entity_; }

    // Member address ids, ascending.
    std::span<const AddressId> members(EntityId e) const {
        return {members_.data() + member_offsets_[e], members_.data() + member_offsets_[e + 1]};
    }

    const std::optional<Tag>& tag(EntityId e) const { return tags_[e]; }
    std::size_t tagged_count() const;

    bool operator==(const EntityIndex&) const = default;

private:
    friend EntityIndex build_entities(const TransactionStore&);
    friend struct TagAttachment;
    friend TagAttachment attach_tags(const EntityIndex&, const TransactionStore&, const TagTable&);
    friend class EntitySerializer;

    std::vector<EntityId> address_entity_;
    std::vector<std::uint64_t> member_offsets_{0};
    std::vector<AddressId> members_;
    std::vector<std::optional<Tag>> tags_;
};

EntityIndex build_entities(const TransactionStore& store);

std::optional<EntityId> entity_of(const EntityIndex& index, const TransactionStore& store,
                                  std::string_view address);

struct TagAttachment {
    EntityIndex index;
    // Tag rows whose address does not occur in the corpus.
    std::size_t unknown_addresses = 0;
    std::size_t tagged_entities = 0;
};

// Majority vote over member address tags; ties go to the smallest label
// (then category). Untagged entities keep no tag.
TagAttachment attach_tags(const EntityIndex& index, const TransactionStore& store, const TagTable& tags);

// `entity_id,address` rows, one per member.
void write_entity_members_csv(std::ostream& out, const EntityIndex& index, const TransactionStore& store);
// `entity_id,label,category` rows for tagged entities.
void write_entity_tags_csv(std::ostream& out, const EntityIndex& index);

}  // namespace ledgerscope
