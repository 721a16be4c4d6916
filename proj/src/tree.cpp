#include "treegauss/tree.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "treegauss/error.hpp"

namespace treegauss {

namespace {

std::uint64_t next_tree_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

inline std::uint64_t heap_depth(std::uint64_t key) {
  return static_cast<std::uint64_t>(std::bit_width(key + 1)) - 1;
}

}  // namespace

Tree::Tree(TreeKind kind, std::uint64_t size, std::uint64_t height)
    : kind_(kind), id_(next_tree_id()), size_(size), height_(height) {}

Tree Tree::chain(std::uint64_t depth) {
  return Tree(TreeKind::kChain, depth + 1, depth);
}

Tree Tree::binary(unsigned depth) {
  if (depth > kMaxImplicitBinaryDepth) {
    throw cap_exceeded("binary tree depth " + std::to_string(depth) +
                       " exceeds the addressable limit " +
                       std::to_string(kMaxImplicitBinaryDepth));
  }
  return Tree(TreeKind::kBinary, (std::uint64_t{2} << depth) - 1, depth);
}

Tree Tree::binary_explicit(unsigned depth, unsigned cap) {
  if (depth > cap) {
    throw cap_exceeded("materializing a binary tree of depth " +
                       std::to_string(depth) + " exceeds the cap " +
                       std::to_string(cap));
  }
  const std::uint64_t n = (std::uint64_t{2} << depth) - 1;
  std::vector<std::optional<std::size_t>> parents(n);
  for (std::uint64_t i = 1; i < n; ++i) parents[i] = (i - 1) / 2;
  return from_parents(parents);
}

Tree Tree::star(std::size_t leaves) {
  std::vector<std::optional<std::size_t>> parents(leaves + 1);
  for (std::size_t i = 1; i <= leaves; ++i) parents[i] = 0;
  return from_parents(parents);
}

Tree Tree::from_parents(std::span<const std::optional<std::size_t>> parents) {
  const std::size_t n = parents.size();
  if (n == 0) throw invalid_argument("a tree needs at least one node");
  if (parents[0].has_value()) {
    throw invalid_argument("node 0 must be the root");
  }

  Tree tree(TreeKind::kExplicit, n, 0);
  tree.parent_.assign(n, -1);
  tree.labels_.resize(n);
  std::vector<std::uint64_t> counts(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    tree.labels_[i] = i;
    if (i == 0) continue;
    if (!parents[i]) {
      throw invalid_argument("more than one root (node " + std::to_string(i) +
                             ")");
    }
    const std::size_t p = *parents[i];
    if (p >= n || p == i) {
      throw invalid_argument("node " + std::to_string(i) +
                             " has an invalid parent");
    }
    tree.parent_[i] = static_cast<std::int64_t>(p);
    ++counts[p + 1];
  }
  tree.child_offset_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    tree.child_offset_[i + 1] = tree.child_offset_[i] + counts[i + 1];
  }
  tree.child_list_.resize(n - 1);
  std::vector<std::uint64_t> fill(tree.child_offset_.begin(),
                                  tree.child_offset_.end() - 1);
  for (std::size_t i = 1; i < n; ++i) {
    tree.child_list_[fill[*parents[i]]++] = i;
  }

  // Depths by BFS from the root; anything unreached sits on a cycle.
  tree.depth_.assign(n, 0);
  std::vector<std::uint64_t> queue{0};
  queue.reserve(n);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::uint64_t v = queue[head];
    for (std::uint64_t c = tree.child_offset_[v]; c < tree.child_offset_[v + 1];
         ++c) {
      const std::uint64_t w = tree.child_list_[c];
      tree.depth_[w] = tree.depth_[v] + 1;
      tree.height_ = std::max(tree.height_, tree.depth_[w]);
      queue.push_back(w);
    }
  }
  if (queue.size() != n) {
    throw invalid_argument("parent links contain a cycle");
  }
  return tree;
}

Tree Tree::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw invalid_argument("tree document needs a \"nodes\" array");
  }
  const auto& nodes = doc["nodes"];
  std::unordered_map<std::uint64_t, std::size_t> slot;
  std::vector<std::uint64_t> ids;
  std::vector<std::optional<std::uint64_t>> parent_ids;
  std::optional<std::size_t> root_pos;
  for (const auto& entry : nodes) {
    if (!entry.contains("id") || !entry["id"].is_number_unsigned()) {
      throw invalid_argument("node ids must be non-negative integers");
    }
    const auto id = entry["id"].get<std::uint64_t>();
    if (!slot.emplace(id, ids.size()).second) {
      throw invalid_argument("duplicate node id " + std::to_string(id));
    }
    ids.push_back(id);
    if (!entry.contains("parent") || entry["parent"].is_null()) {
      if (root_pos) throw invalid_argument("more than one root");
      root_pos = ids.size() - 1;
      parent_ids.emplace_back();
    } else if (entry["parent"].is_number_unsigned()) {
      parent_ids.emplace_back(entry["parent"].get<std::uint64_t>());
    } else {
      throw invalid_argument("parent must be null or a node id");
    }
  }
  if (!root_pos) throw invalid_argument("tree has no root");

  // Arena order: root first, then document order.
  std::vector<std::size_t> order{*root_pos};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i != *root_pos) order.push_back(i);
  }
  std::vector<std::size_t> arena_of(ids.size());
  for (std::size_t a = 0; a < order.size(); ++a) arena_of[order[a]] = a;

  std::vector<std::optional<std::size_t>> parents(ids.size());
  for (std::size_t a = 1; a < order.size(); ++a) {
    const auto pid = *parent_ids[order[a]];
    const auto it = slot.find(pid);
    if (it == slot.end()) {
      throw invalid_argument("unknown parent id " + std::to_string(pid));
    }
    parents[a] = arena_of[it->second];
  }
  Tree tree = from_parents(parents);
  for (std::size_t a = 0; a < order.size(); ++a) tree.labels_[a] = ids[order[a]];
  return tree;
}

nlohmann::json Tree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const NodeRef t : this->nodes()) {
    const auto p = parent(t);
    nodes.push_back({{"id", label(t)},
                     {"parent", p ? nlohmann::json(label(*p)) : nlohmann::json(nullptr)}});
  }
  return {{"nodes", std::move(nodes)}};
}

void Tree::check_owned(NodeRef t) const {
  if (t.tree_id != id_) throw invalid_argument("node belongs to another tree");
  if (t.key >= size_) throw invalid_argument("node index out of range");
}

NodeRef Tree::node(std::uint64_t index) const {
  if (index >= size_) throw invalid_argument("node index out of range");
  return {index, id_};
}

std::uint64_t Tree::index(NodeRef t) const {
  check_owned(t);
  return t.key;
}

std::uint64_t Tree::depth(NodeRef t) const {
  check_owned(t);
  switch (kind_) {
    case TreeKind::kChain:
      return t.key;
    case TreeKind::kBinary:
      return heap_depth(t.key);
    case TreeKind::kExplicit:
      return depth_[t.key];
  }
  return 0;
}

std::optional<NodeRef> Tree::parent(NodeRef t) const {
  check_owned(t);
  if (t.key == 0) return std::nullopt;
  switch (kind_) {
    case TreeKind::kChain:
      return NodeRef{t.key - 1, id_};
    case TreeKind::kBinary:
      return NodeRef{(t.key - 1) / 2, id_};
    case TreeKind::kExplicit:
      return NodeRef{static_cast<std::uint64_t>(parent_[t.key]), id_};
  }
  return std::nullopt;
}

std::size_t Tree::child_count(NodeRef t) const {
  check_owned(t);
  switch (kind_) {
    case TreeKind::kChain:
      return t.key < height_ ? 1 : 0;
    case TreeKind::kBinary:
      return heap_depth(t.key) < height_ ? 2 : 0;
    case TreeKind::kExplicit:
      return child_offset_[t.key + 1] - child_offset_[t.key];
  }
  return 0;
}

std::vector<NodeRef> Tree::children(NodeRef t) const {
  check_owned(t);
  std::vector<NodeRef> out;
  switch (kind_) {
    case TreeKind::kChain:
      if (t.key < height_) out.push_back({t.key + 1, id_});
      break;
    case TreeKind::kBinary:
      if (heap_depth(t.key) < height_) {
        out.push_back({2 * t.key + 1, id_});
        out.push_back({2 * t.key + 2, id_});
      }
      break;
    case TreeKind::kExplicit:
      for (std::uint64_t c = child_offset_[t.key]; c < child_offset_[t.key + 1];
           ++c) {
        out.push_back({child_list_[c], id_});
      }
      break;
  }
  return out;
}

std::uint64_t Tree::label(NodeRef t) const {
  check_owned(t);
  return kind_ == TreeKind::kExplicit ? labels_[t.key] : t.key;
}

std::uint64_t Tree::bit_path(NodeRef t) const {
  check_owned(t);
  if (kind_ != TreeKind::kBinary) {
    throw invalid_argument("bit paths exist for binary trees only");
  }
  const std::uint64_t code = t.key + 1;
  return code ^ (std::uint64_t{1} << heap_depth(t.key));
}

NodeRef Tree::ancestor_at(NodeRef t, std::uint64_t level) const {
  const std::uint64_t dt = depth(t);
  if (level > dt) throw invalid_argument("ancestor level below the node");
  switch (kind_) {
    case TreeKind::kChain:
      return {level, id_};
    case TreeKind::kBinary:
      return {((t.key + 1) >> (dt - level)) - 1, id_};
    case TreeKind::kExplicit: {
      std::uint64_t v = t.key;
      for (std::uint64_t d = dt; d > level; --d) {
        v = static_cast<std::uint64_t>(parent_[v]);
      }
      return {v, id_};
    }
  }
  return t;
}

bool Tree::precedes(NodeRef t, NodeRef s) const {
  const std::uint64_t dt = depth(t);
  const std::uint64_t ds = depth(s);
  if (dt > ds) return false;
  return ancestor_at(s, dt) == t;
}

bool Tree::is_comparable(NodeRef t, NodeRef s) const {
  return precedes(t, s) || precedes(s, t);
}

NodeRef Tree::meet(NodeRef t, NodeRef s) const {
  const std::uint64_t dt = depth(t);
  const std::uint64_t ds = depth(s);
  switch (kind_) {
    case TreeKind::kChain:
      return dt <= ds ? t : s;
    case TreeKind::kBinary: {
      std::uint64_t a = t.key + 1;
      std::uint64_t b = s.key + 1;
      if (dt > ds) a >>= dt - ds;
      if (ds > dt) b >>= ds - dt;
      // Codes at equal depth share a prefix; strip the differing suffix.
      const int shift = std::bit_width(a ^ b);
      return {(a >> shift) - 1, id_};
    }
    case TreeKind::kExplicit: {
      std::uint64_t a = t.key;
      std::uint64_t b = s.key;
      while (depth_[a] > depth_[b]) a = static_cast<std::uint64_t>(parent_[a]);
      while (depth_[b] > depth_[a]) b = static_cast<std::uint64_t>(parent_[b]);
      while (a != b) {
        a = static_cast<std::uint64_t>(parent_[a]);
        b = static_cast<std::uint64_t>(parent_[b]);
      }
      return {a, id_};
    }
  }
  return root();
}

std::vector<NodeRef> Tree::ancestors(NodeRef t) const {
  const std::uint64_t dt = depth(t);
  std::vector<NodeRef> path(dt + 1);
  NodeRef v = t;
  for (std::uint64_t i = dt + 1; i-- > 0;) {
    path[i] = v;
    if (i > 0) v = *parent(v);
  }
  return path;
}

std::vector<NodeRef> Tree::order_interval(NodeRef t, NodeRef s,
                                          IntervalKind kind) const {
  if (!precedes(t, s)) {
    throw invalid_argument("order interval needs t to precede s");
  }
  const std::uint64_t dt = depth(t);
  const std::uint64_t ds = depth(s);
  const std::uint64_t first = kind == IntervalKind::kClosed ? dt : dt + 1;
  if (first > ds) return {};
  std::vector<NodeRef> out(ds - first + 1);
  NodeRef v = s;
  for (std::uint64_t i = out.size(); i-- > 0;) {
    out[i] = v;
    if (i > 0) v = *parent(v);
  }
  return out;
}

std::vector<NodeRef> Tree::nodes() const {
  std::vector<NodeRef> out(size_);
  for (std::uint64_t i = 0; i < size_; ++i) out[i] = {i, id_};
  return out;
}

}  // namespace treegauss
