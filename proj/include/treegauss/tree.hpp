#pragma once

// Rooted trees: explicit arenas plus implicit depth-truncated chains and
// binary trees that are never materialized.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace treegauss {

enum class TreeKind { kExplicit, kChain, kBinary };

enum class IntervalKind { kClosed, kLeftOpen };

// Handle to a node. `key` is the dense index of the node inside its tree:
// arena slot for explicit trees, level k for chains and the level-order
// index (heap code - 1) for binary trees. For binary trees the root-to-node
// bit path is recoverable from the key, see Tree::bit_path.
struct NodeRef {
  std::uint64_t key = 0;
  std::uint64_t tree_id = 0;

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

class Tree {
 public:
  static constexpr unsigned kDefaultMaterializeCap = 22;
  static constexpr unsigned kMaxImplicitBinaryDepth = 62;

  // Chain 0 -> 1 -> ... -> depth.
  static Tree chain(std::uint64_t depth);
  // Full binary tree of the given depth, addressed by bit paths.
  static Tree binary(unsigned depth);
  // Explicit arena copy of a binary tree; node indices are preserved.
  static Tree binary_explicit(unsigned depth,
                              unsigned cap = kDefaultMaterializeCap);
  // Root with `leaves` children.
  static Tree star(std::size_t leaves);
  // parents[i] is the arena index of the parent of node i, nullopt for the
  // root. Children keep the order in which they appear.
  static Tree from_parents(std::span<const std::optional<std::size_t>> parents);
  // {"nodes":[{"id":0,"parent":null},{"id":1,"parent":0},...]}
  static Tree from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  TreeKind kind() const noexcept { return kind_; }
  std::uint64_t id() const noexcept { return id_; }
  std::uint64_t size() const noexcept { return size_; }
  // Largest node depth present.
  std::uint64_t height() const noexcept { return height_; }

  NodeRef root() const noexcept { return {0, id_}; }
  NodeRef node(std::uint64_t index) const;
  std::uint64_t index(NodeRef t) const;
  std::uint64_t depth(NodeRef t) const;
  std::optional<NodeRef> parent(NodeRef t) const;
  std::vector<NodeRef> children(NodeRef t) const;
  std::size_t child_count(NodeRef t) const;
  bool is_leaf(NodeRef t) const { return child_count(t) == 0; }

  // External id of an explicit node (JSON id); the index otherwise.
  std::uint64_t label(NodeRef t) const;
  // Root-to-node path bits (0 = first child); binary trees only.
  std::uint64_t bit_path(NodeRef t) const;

  // t ⪯ s
  bool precedes(NodeRef t, NodeRef s) const;
  bool is_comparable(NodeRef t, NodeRef s) const;
  NodeRef meet(NodeRef t, NodeRef s) const;
  // Ancestor of t at the given depth (<= depth(t)).
  NodeRef ancestor_at(NodeRef t, std::uint64_t level) const;
  // Root-to-t, inclusive.
  std::vector<NodeRef> ancestors(NodeRef t) const;
  // [t,s] or (t,s] in root-to-leaf order; requires t ⪯ s.
  std::vector<NodeRef> order_interval(NodeRef t, NodeRef s,
                                      IntervalKind kind) const;

  // Preorder visit of every node, children in order. Uses an explicit
  // stack so implicit binary trees are streamed.
  template <class Visitor>
  void for_each_preorder(Visitor&& visit) const;

  // All nodes in dense-index order.
  std::vector<NodeRef> nodes() const;

 private:
  Tree(TreeKind kind, std::uint64_t size, std::uint64_t height);

  void check_owned(NodeRef t) const;

  TreeKind kind_;
  std::uint64_t id_;
  std::uint64_t size_;
  std::uint64_t height_;

  // Explicit arena (CSR children).
  std::vector<std::int64_t> parent_;
  std::vector<std::uint64_t> depth_;
  std::vector<std::uint64_t> child_offset_;
  std::vector<std::uint64_t> child_list_;
  std::vector<std::uint64_t> labels_;
};

template <class Visitor>
void Tree::for_each_preorder(Visitor&& visit) const {
  switch (kind_) {
    case TreeKind::kChain:
      for (std::uint64_t k = 0; k < size_; ++k) visit(NodeRef{k, id_});
      return;
    case TreeKind::kBinary: {
      // key = heap code - 1; children of code c are 2c, 2c+1.
      std::vector<std::uint64_t> stack{1};
      stack.reserve(height_ + 2);
      const std::uint64_t limit = std::uint64_t{1} << height_;
      while (!stack.empty()) {
        const std::uint64_t code = stack.back();
        stack.pop_back();
        visit(NodeRef{code - 1, id_});
        if (code < limit) {
          stack.push_back(2 * code + 1);
          stack.push_back(2 * code);
        }
      }
      return;
    }
    case TreeKind::kExplicit: {
      std::vector<std::uint64_t> stack{0};
      while (!stack.empty()) {
        const std::uint64_t v = stack.back();
        stack.pop_back();
        visit(NodeRef{v, id_});
        for (std::uint64_t i = child_offset_[v + 1]; i > child_offset_[v];
             --i) {
          stack.push_back(child_list_[i - 1]);
        }
      }
      return;
    }
  }
}

}  // namespace treegauss
