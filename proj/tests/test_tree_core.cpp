#include <doctest.h>

#include <map>

#include "splitvor/error.hpp"
#include "splitvor/reference.hpp"
#include "splitvor/split_tree.hpp"
#include "splitvor/statistics.hpp"

using namespace splitvor;

namespace {

SplitLaw two_atom_law() {
  return SplitLaw{ExplicitFinite::from_atoms({{{0.2, 0.8}, 0.5}, {{0.6, 0.4}, 0.5}})};
}

// Shape histograms of the two generators at size n.
std::pair<std::map<std::string, std::uint64_t>, std::map<std::string, std::uint64_t>> shape_counts(
    const SplitLaw& law, std::size_t n, std::size_t reps, std::uint64_t seed) {
  std::map<std::string, std::uint64_t> fast, ref;
  for (std::size_t i = 0; i < reps; ++i) {
    SplitTree a(law, replicate_seed(seed, 1, i));
    a.grow_to(n);
    ++fast[a.shape_key()];
    SplitTree b(law, replicate_seed(seed, 2, i));
    while (b.size() < n) b.insert_next_reference();
    ++ref[b.shape_key()];
  }
  return {fast, ref};
}

ChiSquareResult homogeneity(const std::map<std::string, std::uint64_t>& a,
                            const std::map<std::string, std::uint64_t>& b) {
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> cells;
  for (const auto& [k, v] : a) cells[k].first = v;
  for (const auto& [k, v] : b) cells[k].second = v;
  std::vector<std::uint64_t> x, y;
  for (const auto& [k, v] : cells) {
    x.push_back(v.first);
    y.push_back(v.second);
  }
  return chi_square_homogeneity(x, y);
}

}  // namespace

TEST_CASE("new trees hold only the root") {
  SplitTree t(SplitLaw::bst(), 42);
  CHECK(t.size() == 1);
  CHECK(t.height(kRoot) == 0);
  CHECK(t.subtree_size(kRoot) == 1);
  CHECK_FALSE(t.parent(kRoot).has_value());

  SplitTree g(SplitLaw::recursive_tree(), 7);
  CHECK(g.size() == 1);
  CHECK(g.cached_sticks(kRoot) == 0);
}

TEST_CASE("a point mass at a coordinate vector is rejected naming A1-i") {
  const SplitLaw bad{ExplicitFinite::point_mass({1.0, 0.0})};
  try {
    SplitTree t(bad, 1);
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("A1-i") != std::string::npos);
  }
}

TEST_CASE("a fixed root split routes the first insertion with its probabilities") {
  int first = 0;
  const int reps = 40000;
  for (int i = 0; i < reps; ++i) {
    SplitTree t(SplitLaw::bst(), replicate_seed(3, 0, i));
    t.set_split(kRoot, {0.65, 0.35});
    const NodeId v = t.insert_next();
    first += t.child_label(v) == 1;
  }
  const double p = double(first) / reps;
  CHECK(std::abs(p - 0.65) < 4.0 * std::sqrt(0.65 * 0.35 / reps));
}

TEST_CASE("first child of a fresh BST is label 1 about half the time") {
  int first = 0;
  const int reps = 100000;
  for (int i = 0; i < reps; ++i) {
    SplitTree t(SplitLaw::bst(), replicate_seed(4, 0, i));
    first += t.child_label(t.insert_next()) == 1;
  }
  CHECK(std::abs(double(first) / reps - 0.5) < 0.01);
}

TEST_CASE("slot 32 of the worked ternary configuration has weight .08") {
  auto make = [](std::uint64_t seed) {
    SplitTree t = SplitTree::from_words(SplitLaw::mary(3), {"", "3"}, seed);
    t.set_split(kRoot, {0.5, 0.3, 0.2});
    t.set_split(*t.find("3"), {0.1, 0.4, 0.5});
    return t;
  };
  SplitTree t = make(0);
  double w32 = -1.0, total = 0.0;
  for (const LeafSlot& s : t.leaf_slots()) {
    total += s.weight;
    if (s.parent == *t.find("3") && s.child_label == 2) w32 = s.weight;
  }
  CHECK(w32 == doctest::Approx(0.08).epsilon(1e-12));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  const int reps = 40000;
  int fast = 0, ref = 0;
  for (int i = 0; i < reps; ++i) {
    SplitTree a = make(replicate_seed(5, 0, i));
    fast += a.word_string(a.insert_next()) == "32";
    SplitTree b = make(replicate_seed(5, 1, i));
    ref += b.word_string(b.insert_next_reference()) == "32";
  }
  const double se = std::sqrt(0.08 * 0.92 / reps);
  CHECK(std::abs(double(fast) / reps - 0.08) < 4 * se);
  CHECK(std::abs(double(ref) / reps - 0.08) < 4 * se);
}

TEST_CASE("leaf slots number (m-1)n+1 and their weights sum to one") {
  for (std::uint32_t m : {2u, 3u, 5u}) {
    SplitTree t(SplitLaw::mary(m), m);
    for (std::size_t n : {1, 2, 7, 40, 300}) {
      t.grow_to(n);
      const auto slots = t.leaf_slots();
      CHECK(slots.size() == (m - 1) * n + 1);
      double s = 0.0;
      for (const auto& x : slots) {
        s += x.weight;
        CHECK_FALSE(t.child(x.parent, x.child_label).has_value());
      }
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("reference insertion is unsupported for infinite arity") {
  SplitTree t(SplitLaw::recursive_tree(), 1);
  CHECK_THROWS_AS(t.insert_next_reference(), UnsupportedError);
  CHECK_THROWS_AS(t.leaf_slots(), UnsupportedError);
}

TEST_CASE("grow_to") {
  SplitTree t(SplitLaw::bst(), 9);
  t.grow_to(1);
  CHECK(t.size() == 1);
  t.grow_to(100);
  CHECK_THROWS_AS(t.grow_to(50), ContractError);
  t.grow_to(1000);

  SplitTree once(SplitLaw::bst(), 9);
  once.grow_to(1000);
  REQUIRE(once.size() == t.size());
  for (std::uint32_t v = 1; v < t.size(); ++v) {
    CHECK(t.parent_of(NodeId{v}) == once.parent_of(NodeId{v}));
    CHECK(t.child_label(NodeId{v}) == once.child_label(NodeId{v}));
  }
}

TEST_CASE("million-node BST has the right root subtree size") {
  SplitTree t(SplitLaw::bst(), 2024);
  t.grow_to(1u << 20);
  CHECK(t.size() == (1u << 20));
  CHECK(t.subtree_size(kRoot) == (1u << 20));
}

TEST_CASE("ancestor_at_height") {
  const SplitTree t = SplitTree::from_words(SplitLaw::mary(3), {"", "1", "2", "3", "31", "32", "312", "313"});
  const NodeId v = *t.find("312");
  CHECK(t.ancestor_at_height(v, 0) == kRoot);
  CHECK(t.ancestor_at_height(v, t.height(v)) == v);
  CHECK(t.ancestor_at_height(v, 10) == v);
  CHECK(t.ancestor_at_height(v, 1) == *t.find("3"));
  CHECK(t.ancestor_at_height(v, 2) == *t.find("31"));
  CHECK(t.word_string(v) == "312");
}

TEST_CASE("structural invariants hold for every law") {
  const std::vector<SplitLaw> laws{SplitLaw::bst(), SplitLaw::mary(4), SplitLaw::recursive_tree(),
                                   SplitLaw::preferential_attachment(), two_atom_law()};
  for (const auto& law : laws) {
    CAPTURE(law.describe());
    SplitTree t(law, 77);
    for (std::size_t n : {2, 10, 1000, 20000}) {
      t.grow_to(n);
      CHECK(t.check_invariants().empty());
    }
    for (std::uint32_t i = 1; i < t.size(); ++i) {
      CHECK(t.height(NodeId{i}) >= 1);
      CHECK(t.height(NodeId{i}) <= i);
    }
    if (law.arity()) {
      for (std::uint32_t i = 1; i < t.size(); ++i) CHECK(t.child_label(NodeId{i}) <= *law.arity());
    }
  }
}

TEST_CASE("same law and seed give identical trees, different seeds do not") {
  for (const auto& law : {SplitLaw::bst(), SplitLaw::preferential_attachment()}) {
    SplitTree a(law, 11), b(law, 11), c(law, 12);
    a.grow_to(5000);
    b.grow_to(5000);
    c.grow_to(5000);
    CHECK(a.shape_key() == b.shape_key());
    CHECK(a.shape_key() != c.shape_key());
  }
}

TEST_CASE("words round-trip, including labels above nine") {
  SplitTree t(SplitLaw::recursive_tree(), 5);
  t.grow_to(3000);
  for (std::uint32_t v = 0; v < t.size(); v += 7) {
    const auto w = t.word_string(NodeId{v});
    CHECK(t.find(w) == NodeId{v});
  }
  const SplitTree f = SplitTree::from_words(SplitLaw::recursive_tree(), {"", "[12]", "[12]3"});
  CHECK(f.child_label(*f.find("[12]")) == 12);
  CHECK(f.height(*f.find("[12]3")) == 2);
}

TEST_CASE("both generators give the same shape law for n <= 6") {
  const std::vector<SplitLaw> laws{SplitLaw::bst(), SplitLaw::mary(3), two_atom_law()};
  for (const auto& law : laws) {
    for (std::size_t n : {3, 6}) {
      CAPTURE(law.describe());
      CAPTURE(n);
      const auto [fast, ref] = shape_counts(law, n, 100000, 31 + n);
      const auto r = homogeneity(fast, ref);
      CHECK(r.p_value > 0.001);
    }
  }
}

TEST_CASE("BST shapes match brute-force insertion of all key orders") {
  // n = 3 by hand: the balanced shape has probability 1/3, each path 1/6.
  const auto p3 = bst_shape_probabilities(3);
  CHECK(p3.size() == 5);
  CHECK(p3.at("|1|2") == doctest::Approx(1.0 / 3.0));
  CHECK(p3.at("|1|11") == doctest::Approx(1.0 / 6.0));

  for (std::size_t n : {3, 4, 5}) {
    const auto exact = bst_shape_probabilities(n);
    std::map<std::string, std::uint64_t> seen;
    const std::size_t reps = 100000;
    for (std::size_t i = 0; i < reps; ++i) {
      SplitTree t(SplitLaw::bst(), replicate_seed(99, n, i));
      t.grow_to(n);
      ++seen[t.shape_key()];
    }
    std::vector<std::uint64_t> obs;
    std::vector<double> prob;
    std::uint64_t matched = 0;
    for (const auto& [k, p] : exact) {
      obs.push_back(seen[k]);
      prob.push_back(p);
      matched += seen[k];
    }
    CHECK(matched == reps);
    CHECK(chi_square_gof(obs, prob).p_value > 0.001);
  }
}
