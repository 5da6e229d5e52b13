#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "clueqa/taxonomy.hpp"
#include "clueqa/world.hpp"
#include "doctest.h"

using namespace clueqa;

namespace {

Taxonomy sample_tree() {
  // root
  //   thing
  //     container
  //       cup
  //       bottle
  //     tool
  //       hammer
  //   action
  //     take
  Taxonomy t;
  int root = t.add_node("root", -1);
  int thing = t.add_node("thing", root);
  int container = t.add_node("container", thing);
  t.add_node("cup", container);
  t.add_node("bottle", container);
  int tool = t.add_node("tool", thing);
  t.add_node("hammer", tool);
  int action = t.add_node("action", root);
  t.add_node("take", action);
  return t;
}

// Independent LCA: walk both ancestor chains and take the deepest shared node.
int lca_by_paths(const Taxonomy& t, int a, int b) {
  std::set<int> chain;
  for (int n = a; n != -1; n = t.parent(n)) chain.insert(n);
  int best = -1;
  for (int n = b; n != -1; n = t.parent(n)) {
    if (chain.count(n)) {
      if (best == -1 || t.depth(n) > t.depth(best)) best = n;
    }
  }
  return best;
}

std::string write_temp(const std::string& body) {
  std::string path = "tax_test_tmp.txt";
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("depth counts nodes from the root") {
  Taxonomy t = sample_tree();
  CHECK(t.depth(t.index_of("root")) == 1);
  CHECK(t.depth(t.index_of("thing")) == 2);
  CHECK(t.depth(t.index_of("container")) == 3);
  CHECK(t.depth(t.index_of("cup")) == 4);
}

TEST_CASE("index_of and contains") {
  Taxonomy t = sample_tree();
  CHECK(t.index_of("hammer") >= 0);
  CHECK(t.name(t.index_of("hammer")) == "hammer");
  CHECK(t.index_of("no-such") == -1);
  CHECK(t.contains("take"));
  CHECK_FALSE(t.contains("leave"));
}

TEST_CASE("add_node rejects bad parents, duplicates and late roots") {
  Taxonomy t;
  CHECK_THROWS_AS(t.add_node("x", 0), ValidationError);  // parent absent
  t.add_node("root", -1);
  CHECK_THROWS_AS(t.add_node("second-root", -1), ValidationError);
  t.add_node("a", 0);
  CHECK_THROWS_AS(t.add_node("a", 0), ValidationError);  // duplicate name
  CHECK_THROWS_AS(t.add_node("b", 5), ValidationError);  // out of range
}

TEST_CASE("lca matches path-walking on every pair of the sample tree") {
  Taxonomy t = sample_tree();
  for (int a = 0; a < t.size(); ++a)
    for (int b = 0; b < t.size(); ++b) CHECK(t.lca(a, b) == lca_by_paths(t, a, b));
}

TEST_CASE("lca matches path-walking on the generated answer hierarchy") {
  WorldConfig cfg;
  Taxonomy t = build_taxonomy(cfg);
  REQUIRE(t.size() > 5);
  for (int a = 0; a < t.size(); ++a)
    for (int b = 0; b < t.size(); ++b) CHECK(t.lca(a, b) == lca_by_paths(t, a, b));
}

TEST_CASE("lca special cases") {
  Taxonomy t = sample_tree();
  int cup = t.index_of("cup");
  int bottle = t.index_of("bottle");
  int container = t.index_of("container");
  int take = t.index_of("take");
  CHECK(t.lca(cup, cup) == cup);
  CHECK(t.lca(cup, bottle) == container);
  CHECK(t.lca(cup, container) == container);  // ancestor case
  CHECK(t.lca(cup, take) == t.index_of("root"));
  CHECK(t.lca(cup, bottle) == t.lca(bottle, cup));
}

TEST_CASE("siblings are leaf children of the parent, excluding self") {
  Taxonomy t = sample_tree();
  int cup = t.index_of("cup");
  auto sib = t.siblings(cup);
  REQUIRE(sib.size() == 1);
  CHECK(t.name(sib[0]) == "bottle");
  // 'container' has sibling subtree 'tool', but 'tool' is not a leaf member
  // list for 'thing': siblings of container are leaf children of thing.
  int container = t.index_of("container");
  CHECK(t.siblings(container).empty());  // tool has children, so no leaves
  CHECK(t.siblings(t.index_of("root")).empty());
}

TEST_CASE("is_leaf") {
  Taxonomy t = sample_tree();
  CHECK(t.is_leaf(t.index_of("cup")));
  CHECK_FALSE(t.is_leaf(t.index_of("container")));
  CHECK_FALSE(t.is_leaf(t.index_of("root")));
}

TEST_CASE("save and load round trip") {
  Taxonomy t = sample_tree();
  t.save("tax_roundtrip_tmp.txt");
  Taxonomy back = Taxonomy::load("tax_roundtrip_tmp.txt");
  CHECK(back == t);
  std::remove("tax_roundtrip_tmp.txt");
}

TEST_CASE("load round trips the generated hierarchy") {
  Taxonomy t = build_taxonomy(WorldConfig{});
  t.save("tax_world_tmp.txt");
  CHECK(Taxonomy::load("tax_world_tmp.txt") == t);
  std::remove("tax_world_tmp.txt");
}

TEST_CASE("load rejects malformed files") {
  auto expect_format_error = [](const std::string& body) {
    std::string path = write_temp(body);
    CHECK_THROWS_AS(Taxonomy::load(path), IoError);
    std::remove(path.c_str());
  };
  expect_format_error("");                                   // no header
  expect_format_error("format_version: 2\nroot\n");          // wrong version
  expect_format_error("format_version: 1\n");                // no root
  expect_format_error("format_version: 1\nroot\nother\n");   // two roots
  expect_format_error("format_version: 1\n  a\n");           // indented root
  expect_format_error("format_version: 1\nroot\n   a\n");    // odd indent
  expect_format_error("format_version: 1\nroot\n    a\n");   // skipped level
  expect_format_error("format_version: 1\nroot\n  a\n  a\n");  // duplicate
  std::string path = write_temp("format_version: 1\nroot\n  a\n    b\n  c\n");
  Taxonomy t = Taxonomy::load(path);
  CHECK(t.size() == 4);
  CHECK(t.parent(t.index_of("b")) == t.index_of("a"));
  CHECK(t.parent(t.index_of("c")) == t.index_of("root"));
  std::remove(path.c_str());
  CHECK_THROWS_AS(Taxonomy::load("no-such-file-anywhere.txt"), IoError);
}
