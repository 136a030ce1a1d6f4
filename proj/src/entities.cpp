#include "ledgerscope/entities.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>

namespace ledgerscope {

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0u);
}

std::uint32_t UnionFind::find(std::uint32_t x) {
    while (parent_[x] != x) {
        parent_[x] = parent_[parent_[x]];
        x = parent_[x];
    }
    return x;
}

bool UnionFind::unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
}

std::size_t EntityIndex::tagged_count() const {
    return static_cast<std::size_t>(std::count_if(tags_.begin(), tags_.end(), [](const auto& t) { return t.has_value(); }));
}

EntityIndex build_entities(const TransactionStore& store) {
    const std::size_t n = store.address_count();
    UnionFind uf(n);
    for (const auto& tx : store.transactions()) {
        if (tx.inputs.size() < 2) continue;
        const AddressId first = tx.inputs.front().address;
        for (std::size_t i = 1; i < tx.inputs.size(); ++i) uf.unite(first, tx.inputs[i].address);
    }

    // Scanning addresses in ascending order visits each root for the first
    // time at its smallest member, which yields the canonical numbering.
    EntityIndex index;
    index.address_entity_.assign(n, kNoEntity);
    std::vector<EntityId> root_entity(n, kNoEntity);
    std::vector<std::uint64_t> sizes;
    for (AddressId a = 0; a < n; ++a) {
        const auto root = uf.find(a);
        if (root_entity[root] == kNoEntity) {
            root_entity[root] = static_cast<EntityId>(sizes.size());
            sizes.push_back(0);
        }
        const EntityId e = root_entity[root];
        index.address_entity_[a] = e;
        ++sizes[e];
    }

    index.member_offsets_.assign(sizes.size() + 1, 0);
    for (std::size_t e = 0; e < sizes.size(); ++e) index.member_offsets_[e + 1] = index.member_offsets_[e] + sizes[e];
    index.members_.resize(n);
    std::vector<std::uint64_t> cursor(index.member_offsets_.begin(), index.member_offsets_.end() - 1);
    for (AddressId a = 0; a < n; ++a) index.members_[cursor[index.address_entity_[a]]++] = a;
    index.tags_.assign(sizes.size(), std::nullopt);
    return index;
}

std::optional<EntityId> entity_of(const EntityIndex& index, const TransactionStore& store, std::string_view address) {
    auto id = store.find_address(address);
    if (!id || *id >= index.address_count()) return std::nullopt;
    return index.entity_of(*id);
}

TagAttachment attach_tags(const EntityIndex& index, const TransactionStore& store, const TagTable& tags) {
    TagAttachment result{index, 0, 0};
    std::vector<std::map<Tag, std::size_t>> votes(index.entity_count());
    for (const auto& [addr, tag] : tags.tags) {
        auto e = entity_of(index, store, addr);
        if (!e) {
            ++result.unknown_addresses;
            continue;
        }
        ++votes[*e][tag];
    }
    auto& out = result.index.tags_;
    out.assign(index.entity_count(), std::nullopt);
    for (EntityId e = 0; e < votes.size(); ++e) {
        if (votes[e].empty()) continue;
        // std::map iterates in (label, category) order, so the first maximum wins ties.
        const Tag* best = nullptr;
        std::size_t best_count = 0;
        for (const auto& [tag, count] : votes[e])
            if (count > best_count) {
                best = &tag;
                best_count = count;
            }
        out[e] = *best;
        ++result.tagged_entities;
    }
    return result;
}

void write_entity_members_csv(std::ostream& out, const EntityIndex& index, const TransactionStore& store) {
    out << "entity_id,address\n";
    for (EntityId e = 0; e < index.entity_count(); ++e)
        for (auto a : index.members(e)) out << e << ',' << store.address(a) << '\n';
}

void write_entity_tags_csv(std::ostream& out, const EntityIndex& index) {
    out << "entity_id,label,category\n";
    for (EntityId e = 0; e < index.entity_count(); ++e)
        if (const auto& t = index.tag(e)) out << e << ',' << t->label << ',' << to_string(t->category) << '\n';
}

}  // namespace ledgerscope
