#include "mplasso/tree_groups.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace mplasso {

ResponseTree::ResponseTree(int num_responses, std::vector<TreeNode> nodes)
    : num_responses_(num_responses), nodes_(std::move(nodes)) {
    if (num_responses_ < 1) throw ValidationError("tree must cover at least one response");
    if (nodes_.empty()) throw ValidationError("tree has no nodes");

    std::vector<int> leaf_count(num_responses_, 0);
    std::vector<int> parent_count(nodes_.size(), 0);
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
        auto& node = nodes_[n];
        if (node.weight && !(*node.weight > 0.0)) throw ValidationError("tree node weights must be positive");
        if (!(node.height >= 0.0)) throw ValidationError("tree node heights must be nonnegative");
        if (node.children.empty()) {
            node.kind = NodeKind::leaf;
            if (node.members.size() != 1) throw ValidationError("leaf nodes must hold exactly one response");
            const int d = node.members.front();
            if (d < 0 || d >= num_responses_) throw ValidationError("leaf member out of range");
            ++leaf_count[d];
            continue;
        }
        node.kind = NodeKind::internal;
        if (node.children.size() < 2) throw ValidationError("internal nodes need at least two children");
        std::vector<int> from_children;
        for (int c : node.children) {
            if (c < 0 || static_cast<std::size_t>(c) >= n) {
                throw ValidationError("children must precede their parent in node order");
            }
            ++parent_count[c];
            const auto& cm = nodes_[c].members;
            from_children.insert(from_children.end(), cm.begin(), cm.end());
        }
        std::vector<int> own = node.members;
        std::sort(own.begin(), own.end());
        std::sort(from_children.begin(), from_children.end());
        if (own != from_children) {
            throw ValidationError("internal node members must be the disjoint union of its children's");
        }
    }
    for (int d = 0; d < num_responses_; ++d) {
        if (leaf_count[d] != 1) throw ValidationError("every response must appear in exactly one leaf");
    }
    for (std::size_t n = 0; n + 1 < nodes_.size(); ++n) {
        if (parent_count[n] != 1) throw ValidationError("every non-root node needs exactly one parent");
    }
    if (parent_count.back() != 0) throw ValidationError("root must be the last node");
    if (static_cast<int>(nodes_.back().members.size()) != num_responses_) {
        throw ValidationError("root must contain every response");
    }
}

ResponseTree ResponseTree::flat(int num_responses) {
    std::vector<TreeNode> nodes;
    for (int d = 0; d < num_responses; ++d) nodes.push_back(TreeNode{{d}, 0.0, NodeKind::leaf, std::nullopt, {}});
    if (num_responses > 1) {
        TreeNode root;
        root.kind = NodeKind::internal;
        for (int d = 0; d < num_responses; ++d) {
            root.members.push_back(d);
            root.children.push_back(d);
        }
        nodes.push_back(std::move(root));
    }
    return {num_responses, std::move(nodes)};
}

std::vector<int> ResponseTree::internal_nodes() const {
    std::vector<int> out;
    for (std::size_t n = 0; n < nodes_.size(); ++n)
        if (nodes_[n].kind == NodeKind::internal) out.push_back(static_cast<int>(n));
    return out;
}

std::vector<int> ResponseTree::leaf_nodes() const {
    std::vector<int> out;
    for (std::size_t n = 0; n < nodes_.size(); ++n)
        if (nodes_[n].kind == NodeKind::leaf) out.push_back(static_cast<int>(n));
    return out;
}

ResponseTree ResponseTree::relabel(const std::vector<int>& perm) const {
    if (static_cast<int>(perm.size()) != num_responses_) throw ValidationError("permutation has wrong length");
    auto nodes = nodes_;
    for (auto& node : nodes)
        for (int& m : node.members) m = perm.at(m);
    return {num_responses_, std::move(nodes)};
}

namespace {

nlohmann::json node_to_json(const std::vector<TreeNode>& nodes, int n) {
    const auto& node = nodes[n];
    nlohmann::json out;
    out["members"] = node.members;
    out["height"] = node.height;
    if (node.weight) out["weight"] = *node.weight;
    auto children = nlohmann::json::array();
    for (int c : node.children) children.push_back(node_to_json(nodes, c));
    out["children"] = std::move(children);
    return out;
}

int node_from_json(const nlohmann::json& doc, std::vector<TreeNode>& nodes) {
    if (!doc.is_object()) throw ValidationError("tree node must be a JSON object");
    TreeNode node;
    if (!doc.contains("members") || !doc["members"].is_array()) {
        throw ValidationError("tree node is missing its members array");
    }
    for (const auto& m : doc["members"]) {
        if (!m.is_number_integer()) throw ValidationError("tree members must be integers");
        node.members.push_back(m.get<int>());
    }
    if (doc.contains("height")) node.height = doc["height"].get<double>();
    if (doc.contains("weight") && !doc["weight"].is_null()) node.weight = doc["weight"].get<double>();
    if (doc.contains("children")) {
        if (!doc["children"].is_array()) throw ValidationError("tree children must be an array");
        for (const auto& c : doc["children"]) node.children.push_back(node_from_json(c, nodes));
    }
    node.kind = node.children.empty() ? NodeKind::leaf : NodeKind::internal;
    nodes.push_back(std::move(node));
    return static_cast<int>(nodes.size()) - 1;
}

} // namespace

nlohmann::json ResponseTree::to_json() const { return node_to_json(nodes_, root()); }

ResponseTree ResponseTree::from_json(const nlohmann::json& doc) {
    std::vector<TreeNode> nodes;
    node_from_json(doc, nodes);
    const int D = static_cast<int>(nodes.back().members.size());
    return {D, std::move(nodes)};
}

ResponseTree cluster_responses(const Matrix& columns) {
    const int D = static_cast<int>(columns.cols());
    if (D < 2) throw ValidationError("clustering needs at least two responses");
    if (!columns.allFinite()) throw ValidationError("clustering input contains non-finite entries");

    Matrix dist(D, D);
    for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b) dist(a, b) = (columns.col(a) - columns.col(b)).norm();

    std::vector<TreeNode> nodes;
    for (int d = 0; d < D; ++d) nodes.push_back(TreeNode{{d}, 0.0, NodeKind::leaf, std::nullopt, {}});

    // Active clusters keyed by their smallest member; node index of each.
    std::vector<int> active_key(D), active_node(D);
    for (int d = 0; d < D; ++d) {
        active_key[d] = d;
        active_node[d] = d;
    }
    auto linkage = [&](int na, int nb) {
        double worst = 0.0;
        for (int a : nodes[na].members)
            for (int b : nodes[nb].members) worst = std::max(worst, dist(a, b));
        return worst;
    };

    while (active_node.size() > 1) {
        // active_key is kept sorted, so scanning (a < b) in order visits pairs lexicographically.
        double best = std::numeric_limits<double>::infinity();
        std::size_t ba = 0, bb = 1;
        for (std::size_t a = 0; a < active_node.size(); ++a) {
            for (std::size_t b = a + 1; b < active_node.size(); ++b) {
                const double l = linkage(active_node[a], active_node[b]);
                if (l < best) {
                    best = l;
                    ba = a;
                    bb = b;
                }
            }
        }
        TreeNode merged;
        merged.kind = NodeKind::internal;
        merged.height = best;
        merged.children = {active_node[ba], active_node[bb]};
        merged.members = nodes[active_node[ba]].members;
        const auto& other = nodes[active_node[bb]].members;
        merged.members.insert(merged.members.end(), other.begin(), other.end());
        std::sort(merged.members.begin(), merged.members.end());
        nodes.push_back(std::move(merged));
        active_node[ba] = static_cast<int>(nodes.size()) - 1;
        active_node.erase(active_node.begin() + static_cast<std::ptrdiff_t>(bb));
        active_key.erase(active_key.begin() + static_cast<std::ptrdiff_t>(bb));
    }
    return {D, std::move(nodes)};
}

TreeGroups derive_groups(const ResponseTree& tree, WeightRule rule) {
    TreeGroups out;
    out.num_responses = tree.num_responses();
    out.leaves.resize(tree.num_responses());
    for (const auto& node : tree.nodes()) {
        const double size = static_cast<double>(node.members.size());
        double w = 1.0;
        if (node.kind == NodeKind::internal) {
            w = rule == WeightRule::unit ? 1.0 : std::sqrt(size);
        }
        if (rule == WeightRule::explicit_weights && node.weight) w = *node.weight;
        ResponseGroup g{node.members, w};
        if (node.kind == NodeKind::internal) {
            out.internal.push_back(std::move(g));
        } else {
            out.leaves[node.members.front()] = std::move(g);
        }
    }
    return out;
}

WeightRule parse_weight_rule(const std::string& name) {
    if (name == "sqrt_size") return WeightRule::sqrt_size;
    if (name == "unit") return WeightRule::unit;
    if (name == "explicit") return WeightRule::explicit_weights;
    throw ValidationError("unknown weight rule '" + name + "'");
}

std::string to_string(WeightRule rule) {
    switch (rule) {
    case WeightRule::sqrt_size: return "sqrt_size";
    case WeightRule::unit: return "unit";
    case WeightRule::explicit_weights: return "explicit";
    }
    return "?";
}

} // namespace mplasso
