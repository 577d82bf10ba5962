#pragma once

// Random split trees grown one node at a time.
//
// Nodes are addressed by insertion order: the root is 0 and the node added
// by the i-th insertion is i. Each node keeps its parent, its Ulam-Harris
// letter (child label, 1-based), its height and its subtree size. Split
// vectors are drawn lazily the first time a node has to route an insertion
// and are kept, since every later insertion through that node reuses them.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splitvor/laws.hpp"
#include "splitvor/rng.hpp"

namespace splitvor {

struct NodeId {
  std::uint32_t index = 0;

  friend constexpr bool operator==(NodeId, NodeId) = default;
  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

inline constexpr NodeId kRoot{0};

/// An unoccupied child position of a tree node, weighted by the product of
/// split components along its path.
struct LeafSlot {
  NodeId parent;
  std::uint32_t child_label = 1;
  double weight = 0.0;
};

class SplitTree {
 public:
  /// Tree with only the root. Throws ConfigError when the law fails the
  /// split-law assumptions.
  SplitTree(SplitLaw law, std::uint64_t seed);

  /// Fixed-shape tree from Ulam-Harris words ("" is the root, "31" the
  /// first child of the third child). Parents must be listed before their
  /// children; insertion order follows the list. Labels above 9 are not
  /// expressible in this notation.
  static SplitTree from_words(SplitLaw law, const std::vector<std::string>& words,
                              std::uint64_t seed = 0);

  /// Route one insertion from the root, picking child label i with
  /// probability Y_i of the visited node, until an unoccupied slot is hit.
  NodeId insert_next();

  /// Same contract as insert_next, by enumerating every leaf slot with its
  /// weight and choosing the slot whose subinterval of [0,1) contains one
  /// uniform variate. O(size) per call; finite arity only.
  NodeId insert_next_reference();

  /// Insert until the tree has n nodes. n must be at least size().
  SplitTree& grow_to(std::size_t n);

  std::size_t size() const noexcept { return nodes_.size(); }
  const SplitLaw& law() const noexcept { return law_; }
  std::optional<std::uint32_t> arity() const noexcept { return arity_; }

  std::optional<NodeId> parent(NodeId v) const {
    const auto p = nodes_[v.index].parent;
    if (p == kNone) return std::nullopt;
    return NodeId{p};
  }
  /// Parent of a non-root node.
  NodeId parent_of(NodeId v) const { return NodeId{nodes_[v.index].parent}; }
  std::uint32_t child_label(NodeId v) const { return nodes_[v.index].label; }
  std::uint32_t height(NodeId v) const { return nodes_[v.index].height; }
  std::uint32_t subtree_size(NodeId v) const { return nodes_[v.index].subtree_size; }
  std::optional<NodeId> child(NodeId v, std::uint32_t label) const;
  /// Children of v in increasing label order.
  std::vector<NodeId> children(NodeId v) const;

  template <class F>
  void for_each_child(NodeId v, F&& f) const {
    if (arity_) {
      const std::uint32_t* k = kids_.data() + std::size_t(v.index) * *arity_;
      for (std::uint32_t i = 0; i < *arity_; ++i) {
        if (k[i] != kNone) f(NodeId{k[i]});
      }
    } else {
      for (auto c : sticks_[v.index].kids) {
        if (c != kNone) f(NodeId{c});
      }
    }
  }

  /// Ancestor of v at height h; v itself when h >= height(v).
  NodeId ancestor_at_height(NodeId v, std::uint32_t h) const;

  /// Ulam-Harris word of v as labels from the root.
  std::vector<std::uint32_t> word(NodeId v) const;
  /// Word as a string ("" for the root, "312"); labels above 9 are written
  /// in brackets, e.g. "2[14]".
  std::string word_string(NodeId v) const;
  std::optional<NodeId> find(std::string_view word) const;

  /// Canonical text for the labelled shape: sorted words, '|' separated.
  std::string shape_key() const;

  /// Split vector of a node, drawing it if it has not been used yet.
  /// Finite arity only.
  std::span<const double> split(NodeId v);
  /// Overwrite the split vector of a node (diagnostics and worked examples).
  void set_split(NodeId v, std::vector<double> y);

  /// All leaf slots with their weights; draws any missing split vectors.
  /// Finite arity only.
  std::vector<LeafSlot> leaf_slots();

  /// Number of sticks materialized at v (infinite arity), 0 otherwise.
  std::size_t cached_sticks(NodeId v) const;

  /// Verifies every structural invariant; returns a description of the
  /// first failure or an empty string.
  std::string check_invariants() const;

 private:
  struct NodeRecord {
    std::uint32_t parent;  // kNone for the root
    std::uint32_t label;
    std::uint32_t height;
    std::uint32_t subtree_size;
  };

  struct StickState {
    std::vector<double> cumulative;  // cumulative stick masses, increasing
    std::vector<std::uint32_t> kids; // kids[i] is child with label i+1
  };

  static constexpr std::uint32_t kNone = 0xFFFFFFFFu;

  std::uint32_t add_node(std::uint32_t parent, std::uint32_t label);
  void ensure_split(std::uint32_t v);
  std::uint32_t route_label(std::uint32_t v);
  std::uint32_t child_raw(std::uint32_t v, std::uint32_t label) const;

  SplitLaw law_;
  std::optional<std::uint32_t> arity_;
  Rng rng_;
  std::vector<NodeRecord> nodes_;

  // Finite arity: flat tables of width arity_.
  std::vector<std::uint32_t> kids_;
  std::vector<double> split_;
  std::vector<bool> has_split_;

  // Infinite arity.
  std::vector<StickState> sticks_;
};

}  // namespace splitvor
