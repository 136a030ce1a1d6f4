#include "ledgerscope/tree.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace ledgerscope {

using json = nlohmann::json;

std::string_view to_string(NodeKind k) {
    switch (k) {
        case NodeKind::root: return "root";
        case NodeKind::match: return "match";
        case NodeKind::remainder: return "remainder";
    }
    return "?";
}

ClassificationTree::ClassificationTree(std::vector<EntityId> root_entities, std::string root_label) {
    if (root_label.empty()) throw InvalidArgument("label must not be empty");
    TreeNode root;
    root.id = next_id_++;
    root.label = std::move(root_label);
    root.kind = NodeKind::root;
    root.entities = std::move(root_entities);
    nodes_.emplace(root.id, std::move(root));
    touch(0);
}

const TreeNode& ClassificationTree::node(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw NotFound("unknown tree node " + std::to_string(id));
    return it->second;
}

TreeNode& ClassificationTree::mutable_node(NodeId id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw NotFound("unknown tree node " + std::to_string(id));
    return it->second;
}

std::vector<NodeId> ClassificationTree::node_ids() const {
    std::vector<NodeId> ids;
    ids.reserve(nodes_.size());
    for (const auto& [id, _] : nodes_) ids.push_back(id);
    return ids;
}

std::uint64_t ClassificationTree::revision(NodeId id) const {
    node(id);
    return revisions_.at(id);
}

void ClassificationTree::touch(NodeId id) { revisions_[id] = ++clock_; }

std::pair<NodeId, NodeId> ClassificationTree::attach(NodeId parent, Split split, std::optional<Predicate> p,
                                                     std::optional<ClusterSplit> c, std::string match_label,
                                                     std::string remainder_label) {
    if (match_label.empty() || remainder_label.empty()) throw InvalidArgument("label must not be empty");
    TreeNode match;
    match.id = next_id_++;
    match.parent = parent;
    match.label = std::move(match_label);
    match.kind = NodeKind::match;
    match.predicate = std::move(p);
    match.cluster = std::move(c);
    match.entities = std::move(split.match);

    TreeNode rest;
    rest.id = next_id_++;
    rest.parent = parent;
    rest.label = std::move(remainder_label);
    rest.kind = NodeKind::remainder;
    rest.entities = std::move(split.remainder);

    const std::pair ids{match.id, rest.id};
    mutable_node(parent).children = ids;
    nodes_.emplace(match.id, std::move(match));
    nodes_.emplace(rest.id, std::move(rest));
    touch(parent);
    touch(ids.first);
    touch(ids.second);
    return ids;
}

std::pair<NodeId, NodeId> ClassificationTree::split(NodeId id, const Predicate& p, const MeasureTable& table,
                                                    std::string match_label, std::string remainder_label) {
    const auto& n = node(id);
    if (!n.is_leaf()) throw StateError("node " + std::to_string(id) + " is already split");
    if (match_label.empty() || remainder_label.empty()) throw InvalidArgument("label must not be empty");
    auto parts = apply_filter(n.entities, p, table);
    return attach(id, std::move(parts), p, std::nullopt, std::move(match_label), std::move(remainder_label));
}

std::pair<NodeId, NodeId> ClassificationTree::split_cluster(NodeId id, const ClusterResult& result,
                                                            std::uint32_t cluster, std::string match_label,
                                                            std::string remainder_label) {
    const auto& n = node(id);
    if (!n.is_leaf()) throw StateError("node " + std::to_string(id) + " is already split");
    if (cluster >= result.clusters.size()) throw NotFound("unknown cluster " + std::to_string(cluster));
    if (match_label.empty() || remainder_label.empty()) throw InvalidArgument("label must not be empty");
    Split parts;
    parts.match = result.members(cluster);
    std::set_difference(n.entities.begin(), n.entities.end(), parts.match.begin(), parts.match.end(),
                        std::back_inserter(parts.remainder));
    if (parts.match.size() + parts.remainder.size() != n.entities.size())
        throw StateError("cluster result does not belong to node " + std::to_string(id));
    return attach(id, std::move(parts), std::nullopt, ClusterSplit{result.request, cluster}, std::move(match_label),
                  std::move(remainder_label));
}

void ClassificationTree::select(NodeId id) {
    node(id);
    selected_ = id;
}

void ClassificationTree::relabel(NodeId id, std::string label) {
    if (label.empty()) throw InvalidArgument("label must not be empty");
    mutable_node(id).label = std::move(label);
}

void ClassificationTree::delete_split(NodeId id) {
    const auto& n = node(id);
    if (n.kind == NodeKind::root) throw StateError("the root cannot be deleted");
    const NodeId parent = *n.parent;
    const auto [a, b] = *node(parent).children;

    std::vector<NodeId> doomed{a, b};
    for (std::size_t i = 0; i < doomed.size(); ++i)
        if (const auto& c = node(doomed[i]).children) {
            doomed.push_back(c->first);
            doomed.push_back(c->second);
        }
    const bool moves = std::find(doomed.begin(), doomed.end(), selected_) != doomed.end();
    for (auto d : doomed) {
        nodes_.erase(d);
        revisions_.erase(d);
    }
    mutable_node(parent).children.reset();
    touch(parent);
    if (moves) selected_ = parent;
}

std::vector<std::uint32_t> ClassificationTree::path(NodeId id) const {
    std::vector<std::uint32_t> p;
    for (const auto* n = &node(id); n->parent; n = &node(*n->parent)) p.push_back(n->kind == NodeKind::match ? 0 : 1);
    std::reverse(p.begin(), p.end());
    return p;
}

NodeId ClassificationTree::at_path(std::span<const std::uint32_t> path) const {
    NodeId cur = root();
    for (auto step : path) {
        const auto& n = node(cur);
        if (!n.children || step > 1) throw NotFound("tree path does not exist");
        cur = step == 0 ? n.children->first : n.children->second;
    }
    return cur;
}

std::vector<NodeId> ClassificationTree::recompute(std::vector<EntityId> root_entities, const MeasureTable& table) {
    std::vector<NodeId> failed;
    mutable_node(root()).entities = std::move(root_entities);
    touch(root());
    // Creation order visits every parent before its children.
    for (auto& [id, n] : nodes_) {
        if (!n.children) continue;
        auto& match = mutable_node(n.children->first);
        auto& rest = mutable_node(n.children->second);
        Split parts;
        if (match.predicate) {
            parts = apply_filter(n.entities, *match.predicate, table);
        } else if (match.cluster) {
            try {
                const auto result = ledgerscope::cluster(table, n.entities, match.cluster->request);
                if (match.cluster->cluster < result.clusters.size()) parts.match = result.members(match.cluster->cluster);
            } catch (const InvalidArgument&) {
                failed.push_back(match.id);
            }
            std::set_difference(n.entities.begin(), n.entities.end(), parts.match.begin(), parts.match.end(),
                                std::back_inserter(parts.remainder));
        }
        match.entities = std::move(parts.match);
        rest.entities = std::move(parts.remainder);
        touch(match.id);
        touch(rest.id);
    }
    return failed;
}

// ---------------------------------------------------------------------------

json to_json(const ClusterRequest& r) {
    json features = json::array();
    for (const auto& f : r.features) features.push_back(f.name());
    return json{{"features", features},
                {"k", r.k},
                {"seed", r.seed},
                {"max_iterations", r.max_iterations},
                {"tolerance", r.tolerance},
                {"log_counts", r.preprocessing.log_counts},
                {"min_max", r.preprocessing.min_max}};
}

ClusterRequest cluster_request_from_json(const json& j) {
    if (!j.is_object()) throw InvalidArgument("cluster request must be an object");
    ClusterRequest r;
    try {
        if (!j.contains("features") || !j["features"].is_array())
            throw InvalidArgument("cluster request needs a 'features' array");
        for (const auto& f : j["features"]) {
            if (f.is_string()) r.features.push_back(parse_series(f.get<std::string>()));
            else if (f.is_object())
                r.features.push_back(make_series(f.at("key").get<std::string>(), f.value("variant", std::string{})));
            else throw InvalidArgument("features must be series names or {key, variant} objects");
        }
        r.k = j.value("k", r.k);
        r.seed = j.value("seed", r.seed);
        r.max_iterations = j.value("max_iterations", r.max_iterations);
        r.tolerance = j.value("tolerance", r.tolerance);
        r.preprocessing.log_counts = j.value("log_counts", r.preprocessing.log_counts);
        r.preprocessing.min_max = j.value("min_max", r.preprocessing.min_max);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("cluster request: ") + e.what());
    }
    if (r.features.empty()) throw InvalidArgument("clustering needs at least one feature");
    if (r.k < 2) throw InvalidArgument("k must be at least 2");
    return r;
}

json to_json(const TreeDocument& doc) {
    json splits = json::array();
    for (const auto& s : doc.splits) {
        json js{{"path", s.path}, {"match_label", s.match_label}, {"remainder_label", s.remainder_label}};
        if (s.predicate) js["predicate"] = to_json(*s.predicate);
        if (s.cluster) {
            js["cluster"] = to_json(s.cluster->request);
            js["cluster"]["index"] = s.cluster->cluster;
        }
        splits.push_back(std::move(js));
    }
    return json{{"version", doc.version},
                {"corpus_id", doc.corpus_id},
                {"range", {{"from", doc.range.from}, {"to", doc.range.to}}},
                {"created", doc.created},
                {"root_label", doc.root_label},
                {"splits", std::move(splits)}};
}

TreeDocument tree_document_from_json(const json& j) {
    TreeDocument doc;
    try {
        if (!j.is_object()) throw ParseError(0, "tree document must be a JSON object");
        doc.version = j.at("version").get<int>();
        if (doc.version != 1) throw ParseError(0, "unsupported tree document version " + std::to_string(doc.version));
        doc.corpus_id = j.value("corpus_id", std::string{});
        if (j.contains("range")) {
            doc.range.from = j["range"].at("from").get<UnixSeconds>();
            doc.range.to = j["range"].at("to").get<UnixSeconds>();
        }
        doc.created = j.value("created", std::string{});
        doc.root_label = j.value("root_label", doc.root_label);
        for (const auto& js : j.at("splits")) {
            SplitSpec s;
            s.path = js.at("path").get<std::vector<std::uint32_t>>();
            s.match_label = js.at("match_label").get<std::string>();
            s.remainder_label = js.at("remainder_label").get<std::string>();
            if (js.contains("predicate")) s.predicate = predicate_from_json(js["predicate"]);
            if (js.contains("cluster")) {
                s.cluster = ClusterSplit{cluster_request_from_json(js["cluster"]),
                                         js["cluster"].at("index").get<std::uint32_t>()};
            }
            if (s.predicate.has_value() == s.cluster.has_value())
                throw ParseError(0, "each split needs exactly one of 'predicate' or 'cluster'");
            doc.splits.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw ParseError(0, std::string("malformed tree document: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ParseError(0, std::string("malformed tree document: ") + e.what());
    }
    return doc;
}

TreeDocument export_tree(const ClassificationTree& tree, std::string corpus_id, TimeRange range,
                         std::string created) {
    TreeDocument doc;
    doc.corpus_id = std::move(corpus_id);
    doc.range = range;
    doc.created = std::move(created);
    doc.root_label = tree.node(tree.root()).label;
    for (auto id : tree.node_ids()) {
        const auto& n = tree.node(id);
        if (!n.children) continue;
        const auto& match = tree.node(n.children->first);
        const auto& rest = tree.node(n.children->second);
        doc.splits.push_back({tree.path(id), match.predicate, match.cluster, match.label, rest.label});
    }
    return doc;
}

ClassificationTree import_tree(const TreeDocument& doc, std::vector<EntityId> root_entities,
                               const MeasureTable& table) {
    ClassificationTree tree(std::move(root_entities), doc.root_label.empty() ? "all entities" : doc.root_label);
    for (const auto& s : doc.splits) {
        NodeId target;
        try {
            target = tree.at_path(s.path);
        } catch (const NotFound&) {
            throw ParseError(0, "split path refers to a node that does not exist yet");
        }
        if (s.predicate) {
            tree.split(target, *s.predicate, table, s.match_label, s.remainder_label);
        } else {
            const auto result = cluster(table, tree.node(target).entities, s.cluster->request);
            if (s.cluster->cluster >= result.clusters.size())
                throw ParseError(0, "cluster index out of range in tree document");
            tree.split_cluster(target, result, s.cluster->cluster, s.match_label, s.remainder_label);
        }
    }
    return tree;
}

}  // namespace ledgerscope
