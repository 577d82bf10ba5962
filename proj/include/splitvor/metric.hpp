#pragma once

// Edge-length metric on a split tree: d_L(u, v) is the sum of the lengths
// of the edges on the path between u and v, where the edge above a node w
// has length L_w.

#include <cstdint>
#include <vector>

#include "splitvor/laws.hpp"
#include "splitvor/split_tree.hpp"

namespace splitvor {

/// Realized edge lengths over a tree. The tree must outlive the view and
/// must not grow while the view is in use.
///
/// Lattice views (unit lengths, or unit lengths rescaled by a constant)
/// store every length as an integer multiple of a common step, so sums and
/// differences are exact and distance ties are detected exactly.
class MetricView {
 public:
  /// `lengths[0]` (the root) is ignored. All other entries must be > 0.
  MetricView(const SplitTree& tree, std::vector<double> lengths);

  /// Lattice view: every edge has length `step`.
  static MetricView lattice(const SplitTree& tree, double step = 1.0);

  const SplitTree& tree() const noexcept { return *tree_; }
  std::size_t size() const noexcept { return tree_->size(); }

  /// True for lattice views; distances are then step * integer.
  bool exact_integers() const noexcept { return lattice_; }
  double step() const noexcept { return step_; }

  double length(NodeId v) const { return step_ * base_length(v); }
  /// |v|_L, the distance from the root.
  double cumulative(NodeId v) const { return step_ * cum_[v.index]; }

  /// Lengths and distances in lattice units (integers stored in doubles,
  /// exact below 2^53) for lattice views; plain lengths otherwise.
  double base_length(NodeId v) const { return v.index == 0 ? 0.0 : len_[v.index]; }
  double base_cumulative(NodeId v) const { return cum_[v.index]; }
  double base_distance(NodeId u, NodeId v) const;

  NodeId lca(NodeId u, NodeId v) const;
  double distance(NodeId u, NodeId v) const { return step_ * base_distance(u, v); }

  /// Ancestor a of v (possibly v) of minimal height with
  /// cumulative(a) >= min(x, cumulative(v)). x <= 0 gives the root.
  NodeId ancestor_at_distance(NodeId v, double x) const;

  /// Every edge length multiplied by c > 0.
  MetricView scaled(double c) const;

 private:
  MetricView(const SplitTree& tree, std::vector<double> lengths, bool lattice, double step);
  void accumulate();

  const SplitTree* tree_;
  std::vector<double> len_;
  std::vector<double> cum_;
  bool lattice_ = false;
  double step_ = 1.0;
};

/// One i.i.d. length per non-root node, drawn in insertion order. Unit
/// lengths produce a lattice view.
MetricView assign_lengths(const SplitTree& tree, const EdgeLengthLaw& law, Rng& rng);

}  // namespace splitvor
