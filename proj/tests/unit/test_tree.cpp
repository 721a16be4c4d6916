#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "support.hpp"
#include "treegauss/error.hpp"
#include "treegauss/tree_spec.hpp"

using namespace treegauss;

TEST_CASE("chain structure") {
  const Tree t = Tree::chain(5);
  CHECK(t.size() == 6);
  CHECK(t.height() == 5);
  CHECK(t.depth(t.node(3)) == 3);
  CHECK(t.parent(t.node(3))->key == 2);
  CHECK_FALSE(t.parent(t.root()).has_value());
  CHECK(t.precedes(t.node(1), t.node(4)));
  CHECK_FALSE(t.precedes(t.node(4), t.node(1)));
  CHECK(t.meet(t.node(2), t.node(5)).key == 2);
  CHECK(t.is_leaf(t.node(5)));
  CHECK(t.order_interval(t.node(1), t.node(4), IntervalKind::kLeftOpen).size() == 3);
  CHECK(t.order_interval(t.node(1), t.node(4), IntervalKind::kClosed).size() == 4);
}

TEST_CASE("binary tree addressing") {
  const Tree t = Tree::binary(3);
  CHECK(t.size() == 15);
  // level order: 0 | 1 2 | 3 4 5 6 | 7..14
  const NodeRef a = t.node(9);   // code 10 = 0b1010: path 0,1,0
  const NodeRef b = t.node(10);  // code 11 = 0b1011: path 0,1,1
  CHECK(t.depth(a) == 3);
  CHECK(t.bit_path(a) == 0b010);
  CHECK(t.bit_path(b) == 0b011);
  CHECK(t.meet(a, b).key == 4);
  CHECK(t.meet(a, t.node(14)).key == 0);
  CHECK(t.ancestor_at(a, 1).key == 1);
  const auto anc = t.ancestors(a);
  REQUIRE(anc.size() == 4);
  CHECK(anc[0].key == 0);
  CHECK(anc[3].key == 9);
  CHECK(t.children(t.node(4)).size() == 2);
  CHECK(t.is_leaf(a));
}

TEST_CASE("explicit binary copy agrees with the implicit tree") {
  const Tree imp = Tree::binary(6);
  const Tree exp = Tree::binary_explicit(6);
  REQUIRE(exp.size() == imp.size());
  for (std::uint64_t i = 0; i < imp.size(); ++i) {
    CHECK(exp.depth(exp.node(i)) == imp.depth(imp.node(i)));
    const auto pi = imp.parent(imp.node(i));
    const auto pe = exp.parent(exp.node(i));
    CHECK(pi.has_value() == pe.has_value());
    if (pi) CHECK(pi->key == pe->key);
  }
  CHECK(exp.meet(exp.node(40), exp.node(50)).key == imp.meet(imp.node(40), imp.node(50)).key);
}

TEST_CASE("materialization cap") {
  try {
    (void)Tree::binary_explicit(23);
    FAIL("expected a cap error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCapExceeded);
  }
}

TEST_CASE("preorder visits parents first and every node once") {
  std::mt19937_64 rng(7);
  for (const Tree& t : {Tree::binary(5), Tree::chain(9), Tree::star(6),
                        testing::random_tree(rng, 40)}) {
    std::vector<char> seen(t.size(), 0);
    std::size_t count = 0;
    t.for_each_preorder([&](NodeRef v) {
      if (const auto p = t.parent(v)) CHECK(seen[p->key]);
      CHECK_FALSE(seen[v.key]);
      seen[v.key] = 1;
      ++count;
    });
    CHECK(count == t.size());
  }
}

TEST_CASE("explicit tree from parent links") {
  std::vector<std::optional<std::size_t>> parents = {std::nullopt, 0, 0, 1, 1, 2};
  const Tree t = Tree::from_parents(parents);
  CHECK(t.height() == 2);
  CHECK(t.meet(t.node(3), t.node(4)).key == 1);
  CHECK(t.meet(t.node(3), t.node(5)).key == 0);
  CHECK(t.precedes(t.node(2), t.node(5)));
  CHECK_FALSE(t.is_comparable(t.node(3), t.node(5)));

  std::vector<std::optional<std::size_t>> cycle = {std::nullopt, 2, 1};
  CHECK_THROWS_AS(Tree::from_parents(cycle), Error);
  std::vector<std::optional<std::size_t>> two_roots = {std::nullopt, std::nullopt};
  CHECK_THROWS_AS(Tree::from_parents(two_roots), Error);
}

TEST_CASE("json round trip keeps labels and shape") {
  const nlohmann::json doc = nlohmann::json::parse(R"({"nodes":[
    {"id":10,"parent":7},{"id":7,"parent":null},{"id":3,"parent":7},{"id":4,"parent":10}]})");
  const Tree t = Tree::from_json(doc);
  CHECK(t.size() == 4);
  CHECK(t.label(t.root()) == 7);
  const Tree back = Tree::from_json(t.to_json());
  CHECK(back.size() == 4);
  CHECK(back.height() == t.height());
  std::set<std::uint64_t> labels;
  for (const NodeRef v : back.nodes()) labels.insert(back.label(v));
  CHECK(labels == std::set<std::uint64_t>{3, 4, 7, 10});
  CHECK_THROWS_AS(Tree::from_json(nlohmann::json::parse(R"({"nodes":[{"id":1,"parent":5}]})")),
                  Error);
}

TEST_CASE("tree specs") {
  CHECK(tree_from_spec({{"kind", "chain"}, {"depth", 4}}).size() == 5);
  CHECK(tree_from_spec({{"kind", "binary"}, {"depth", 4}}).size() == 31);
  CHECK(tree_from_spec({{"kind", "binary"}, {"depth", 4}}, 2).size() == 7);
  CHECK(tree_from_spec({{"kind", "star"}, {"leaves", 3}}).size() == 4);
  CHECK_THROWS_AS(tree_from_spec({{"kind", "bush"}}), Error);
  CHECK_THROWS_AS(tree_from_spec({{"kind", "binary"}, {"depth", 70}}), Error);
}

TEST_CASE("nodes of another tree are rejected") {
  const Tree a = Tree::chain(3);
  const Tree b = Tree::chain(3);
  CHECK_THROWS_AS((void)a.depth(b.node(1)), Error);
}
