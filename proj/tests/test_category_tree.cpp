#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "adlens/category_tree.hpp"
#include "adlens/rng.hpp"

using namespace adlens;

namespace {

CategoryTree tree_of(std::vector<std::string> ids) {
  std::vector<std::string> lines;
  for (auto& id : ids) lines.push_back(id + "\t" + id);
  return CategoryTree::parse(lines);
}

}  // namespace

TEST_CASE("three-row chain builds root -> A -> {B, C}") {
  CategoryTree t = tree_of({"A", "A/B", "A/C"});
  REQUIRE(t.nodes().size() == 3);
  CHECK(t.node("A").level == 1);
  CHECK_FALSE(t.node("A").parent_id.has_value());
  CHECK(t.node("A/B").level == 2);
  CHECK(t.node("A/B").parent_id == "A");
  CHECK(t.node("A/C").parent_id == "A");
}

TEST_CASE("packaged taxonomy loads and holds known nodes") {
  CategoryTree t = CategoryTree::load_file(std::string(ADLENS_DATA_DIR) + "/taxonomy.tsv");
  REQUIRE(t.nodes().size() >= 60);
  CHECK(t.node("Health/Pediatrics").level == 2);
  CHECK(t.node("Health/Pediatrics").parent_id == "Health");
  CHECK(t.max_depth() == 3);
  CHECK(t.ids_at_level(2).size() >= 40);
}

TEST_CASE("load is order independent") {
  CategoryTree shuffled = tree_of({"A/B", "A", "A/B/D", "A/C"});
  CategoryTree ordered = tree_of({"A", "A/B", "A/C", "A/B/D"});
  for (const auto& n : ordered.nodes()) {
    const auto& m = shuffled.node(n.id);
    CHECK(m.level == n.level);
    CHECK(m.parent_id == n.parent_id);
    CHECK(m.display_name == n.display_name);
  }
}

TEST_CASE("load rejects malformed trees") {
  CHECK_THROWS_AS(tree_of({"A", "A"}), DuplicateId);
  CHECK_THROWS_AS(tree_of({"A/B"}), DanglingParent);
  std::vector<CategoryTree::Row> cyclic = {
      {"X", "X", std::optional<std::string>("Y")},
      {"Y", "Y", std::optional<std::string>("X")},
  };
  CHECK_THROWS_AS(CategoryTree::from_rows(cyclic), CycleDetected);
}

TEST_CASE("is_relevant follows the subtree rule") {
  CategoryTree t = CategoryTree::load_file(std::string(ADLENS_DATA_DIR) + "/taxonomy.tsv");
  SECTION("identity") { CHECK(t.is_relevant("Health", "Health")); }
  SECTION("descendant") { CHECK(t.is_relevant("Health", "Health/Pediatrics")); }
  SECTION("direct parent of a level-3 node is irrelevant") {
    CHECK_FALSE(t.is_relevant("Pets & Animals/Pets/Dogs", "Pets & Animals/Pets"));
    CHECK_FALSE(t.is_relevant("Pets & Animals/Pets/Dogs", "Pets & Animals"));
  }
  SECTION("unrelated") { CHECK_FALSE(t.is_relevant("Health", "Autos")); }
  SECTION("unknown node") {
    CHECK_THROWS_AS(t.is_relevant("Health", "NoSuch"), UnknownNode);
    CHECK_THROWS_AS(t.is_relevant("NoSuch", "Health"), UnknownNode);
  }
}

TEST_CASE("relevance_fraction counts subtree members") {
  CategoryTree t = tree_of({"A", "A/B", "A/B/C", "A/D", "E", "E/F", "G", "H"});
  SECTION("assigned = {target} gives 1.0") {
    CHECK(t.relevance_fraction("A", {"A"}) == 1.0);
  }
  SECTION("level-3 target with only ancestors gives 0.0") {
    CHECK(t.relevance_fraction("A/B/C", {"A/B", "A"}) == 0.0);
  }
  SECTION("8 assigned with 2 descendants gives 0.25") {
    // By hand: relevant = {A/B, A/B/C}; the other six are outside A/B.
    std::vector<std::string> assigned = {"A/B", "A/B/C", "A", "A/D", "E", "E/F", "G", "H"};
    CHECK(t.relevance_fraction("A/B", assigned) == 0.25);
  }
  SECTION("empty assigned set is an error") {
    CHECK_THROWS_AS(t.relevance_fraction("A", {}), EmptyAssignedSet);
  }
  SECTION("permutation invariance") {
    std::vector<std::string> assigned = {"A/B", "A/B/C", "A", "A/D", "E", "E/F", "G", "H"};
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
      rng.shuffle(assigned);
      CHECK(t.relevance_fraction("A/B", assigned) == 0.25);
    }
  }
}

TEST_CASE("relevance is transitive along ancestry") {
  CategoryTree t = CategoryTree::load_file(std::string(ADLENS_DATA_DIR) + "/taxonomy.tsv");
  for (const auto& target : t.nodes()) {
    for (const auto& cand : t.nodes()) {
      if (!t.is_relevant(target.id, cand.id)) continue;
      // Every descendant of a relevant node is relevant too.
      for (const auto& child : t.nodes()) {
        if (child.parent_id == cand.id) CHECK(t.is_relevant(target.id, child.id));
      }
    }
  }
}

TEST_CASE("is_relevant agrees with the slash-prefix oracle on random trees") {
  Rng rng(42);
  for (int trial = 0; trial < 25; ++trial) {
    // Random tree over short path alphabets.
    std::vector<std::string> ids;
    for (char a = 'a'; a <= 'e'; ++a) {
      std::string top(1, a);
      ids.push_back(top);
      uint64_t kids = rng.below(4);
      for (uint64_t k = 0; k < kids; ++k) {
        std::string mid = top + "/" + std::string(1, static_cast<char>('m' + k));
        ids.push_back(mid);
        if (rng.below(2)) ids.push_back(mid + "/z");
      }
    }
    rng.shuffle(ids);
    CategoryTree t = tree_of(ids);
    auto prefix_oracle = [](const std::string& target, const std::string& cand) {
      return cand == target || cand.rfind(target + "/", 0) == 0;
    };
    for (const auto& target : ids)
      for (const auto& cand : ids)
        REQUIRE(t.is_relevant(target, cand) == prefix_oracle(target, cand));
  }
}
