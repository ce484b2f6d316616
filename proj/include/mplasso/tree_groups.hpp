#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mplasso/types.hpp"

namespace mplasso {

enum class NodeKind { internal, leaf };

struct TreeNode {
    std::vector<int> members;   // response column indices, 0-based
    double height = 0.0;
    NodeKind kind = NodeKind::leaf;
    std::optional<double> weight;  // explicit weight, used by WeightRule::explicit_weights
    std::vector<int> children;  // indices into ResponseTree::nodes()
};

/**
 * Hierarchy over the D response columns.
 *
 * Leaves are singletons covering {0..D-1} exactly once; each internal node's
 * member set is the union of its children's. Nodes are stored children-first
 * so a forward scan visits every node after all of its descendants; the root
 * is the last node.
 */
class ResponseTree {
public:
    ResponseTree() = default;

    /// Validates the invariants; throws ValidationError on violation.
    ResponseTree(int num_responses, std::vector<TreeNode> nodes);

    /// A tree with one internal root over all D leaves (D == 1 gives a bare leaf).
    static ResponseTree flat(int num_responses);

    int num_responses() const noexcept { return num_responses_; }
    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    int root() const noexcept { return static_cast<int>(nodes_.size()) - 1; }
    std::vector<int> internal_nodes() const;
    std::vector<int> leaf_nodes() const;

    /// Relabels every member d as perm[d]; node order and member order are kept.
    ResponseTree relabel(const std::vector<int>& perm) const;

    /// Nested {members, height, weight, children} document rooted at the root.
    nlohmann::json to_json() const;
    static ResponseTree from_json(const nlohmann::json& doc);

private:
    int num_responses_ = 0;
    std::vector<TreeNode> nodes_;
};

struct ResponseGroup {
    std::vector<int> members;
    double weight = 1.0;
};

/// Penalty groups derived from a tree: internal groups feed the lambda1 term,
/// leaf groups (one per response, ordered by response index) the lambda2 term.
struct TreeGroups {
    int num_responses = 0;
    std::vector<ResponseGroup> internal;
    std::vector<ResponseGroup> leaves;
};

enum class WeightRule {
    sqrt_size,         // internal w_m = sqrt(|G_m|), leaves 1
    unit,              // every weight 1
    explicit_weights,  // node weights from the tree; missing ones fall back to sqrt_size
};

/**
 * Complete-linkage agglomerative clustering of the columns of `columns` under
 * Euclidean distance. Among equal minimal distances the pair of clusters with
 * the lexicographically smallest (min-member) indices is merged first.
 */
ResponseTree cluster_responses(const Matrix& columns);

TreeGroups derive_groups(const ResponseTree& tree, WeightRule rule = WeightRule::sqrt_size);

WeightRule parse_weight_rule(const std::string& name);
std::string to_string(WeightRule rule);

} // namespace mplasso
