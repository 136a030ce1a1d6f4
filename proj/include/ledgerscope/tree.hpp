#pragma once
// Hierarchical classification of entities.
//
// Each split turns a leaf into two children: the entities that satisfy a
// range predicate (match) and everything else (remainder). A split can also
// come from a k-means result, in which case the match child holds one
// cluster's members. Node sets are kept as ascending id vectors.
//
// Node ids are never reused. Deleting a child removes its sibling and both
// subtrees, turning the parent back into a leaf.

#include "ledgerscope/clustering.hpp"
#include "ledgerscope/filter.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ledgerscope {

using NodeId = std::uint32_t;

enum class NodeKind : std::uint8_t { root, match, remainder };
std::string_view to_string(NodeKind k);

// Split by membership in one cluster of a deterministic k-means run.
struct ClusterSplit {
    ClusterRequest request;
    std::uint32_t cluster = 0;
    bool operator==(const ClusterSplit&) const = default;
};

struct TreeNode {
    NodeId id = 0;
    std::optional<NodeId> parent;
    std::string label;
    NodeKind kind = NodeKind::root;
    // Set on match nodes only; remainder nodes are defined by their sibling.
    std::optional<Predicate> predicate;
    std::optional<ClusterSplit> cluster;
    std::vector<EntityId> entities;
    std::optional<std::pair<NodeId, NodeId>> children;  // (match, remainder)

    bool is_leaf() const { return !children; }
    std::size_t count() const { return entities.size(); }
};

class ClassificationTree {
public:
    explicit ClassificationTree(std::vector<EntityId> root_entities, std::string root_label = "all entities");

    NodeId root() const { return 0; }
    NodeId selected() const { return selected_; }
    bool contains(NodeId id) const { return nodes_.count(id) != 0; }
    // Throws NotFound for unknown or deleted nodes.
    const TreeNode& node(NodeId id) const;
    // Live nodes in creation order; parents always precede their children.
    std::vector<NodeId> node_ids() const;
    std::size_t size() const { return nodes_.size(); }

    // Bumped whenever the node's subtree structure or entity set changes.
    std::uint64_t revision(NodeId id) const;

    // Throws StateError if the node already has children.
    std::pair<NodeId, NodeId> split(NodeId id, const Predicate& p, const MeasureTable& table,
                                    std::string match_label, std::string remainder_label);
    // Match child = cluster's members; remainder = the rest of the node.
    std::pair<NodeId, NodeId> split_cluster(NodeId id, const ClusterResult& result, std::uint32_t cluster,
                                            std::string match_label, std::string remainder_label);

    void select(NodeId id);
    void relabel(NodeId id, std::string label);
    // Removes the node, its sibling and their subtrees. Throws StateError on the root.
    void delete_split(NodeId id);

    // Child indices from the root, 0 = match, 1 = remainder.
    std::vector<std::uint32_t> path(NodeId id) const;
    NodeId at_path(std::span<const std::uint32_t> path) const;

    // Re-evaluates every node top-down against a new root set and measure
    // table (a new time range). Structure, ids and labels are kept. Cluster
    // splits are re-run; one that can no longer run gets an empty match set
    // and its node id is reported.
    std::vector<NodeId> recompute(std::vector<EntityId> root_entities, const MeasureTable& table);

private:
    TreeNode& mutable_node(NodeId id);
    std::pair<NodeId, NodeId> attach(NodeId parent, Split split, std::optional<Predicate> p,
                                     std::optional<ClusterSplit> c, std::string match_label,
                                     std::string remainder_label);
    void touch(NodeId id);

    std::map<NodeId, TreeNode> nodes_;
    std::map<NodeId, std::uint64_t> revisions_;
    NodeId next_id_ = 0;
    NodeId selected_ = 0;
    std::uint64_t clock_ = 0;
};

// ---------------------------------------------------------------------------
// Portable tree definition

struct SplitSpec {
    std::vector<std::uint32_t> path;
    std::optional<Predicate> predicate;
    std::optional<ClusterSplit> cluster;
    std::string match_label;
    std::string remainder_label;
    bool operator==(const SplitSpec&) const = default;
};

struct TreeDocument {
    int version = 1;
    std::string corpus_id;
    TimeRange range{};
    std::string created;  // ISO-8601 UTC
    std::string root_label = "all entities";
    std::vector<SplitSpec> splits;
};

nlohmann::json to_json(const TreeDocument& doc);
// Throws ParseError on malformed documents.
TreeDocument tree_document_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ClusterRequest& r);
ClusterRequest cluster_request_from_json(const nlohmann::json& j);

TreeDocument export_tree(const ClassificationTree& tree, std::string corpus_id, TimeRange range,
                         std::string created);

// Replays the splits in order against a root set and measure table.
ClassificationTree import_tree(const TreeDocument& doc, std::vector<EntityId> root_entities,
                               const MeasureTable& table);

}  // namespace ledgerscope
