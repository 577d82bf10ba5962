#include "splitvor/metric.hpp"

#include <string>

#include "splitvor/error.hpp"

namespace splitvor {

MetricView::MetricView(const SplitTree& tree, std::vector<double> lengths)
    : MetricView(tree, std::move(lengths), false, 1.0) {}

MetricView::MetricView(const SplitTree& tree, std::vector<double> lengths, bool lattice,
                       double step)
    : tree_(&tree), len_(std::move(lengths)), lattice_(lattice), step_(step) {
  if (len_.size() != tree.size()) {
    throw ContractError("metric view needs one length per node (" + std::to_string(tree.size()) +
                        "), got " + std::to_string(len_.size()));
  }
  if (!(step_ > 0.0)) throw ContractError("lattice step must be positive");
  len_[0] = 0.0;
  for (std::size_t v = 1; v < len_.size(); ++v) {
    if (!(len_[v] > 0.0)) throw ContractError("edge length of node " + std::to_string(v) + " is not positive");
  }
  accumulate();
}

MetricView MetricView::lattice(const SplitTree& tree, double step) {
  return MetricView(tree, std::vector<double>(tree.size(), 1.0), true, step);
}

void MetricView::accumulate() {
  // Parents precede children in insertion order.
  cum_.assign(len_.size(), 0.0);
  for (std::uint32_t v = 1; v < len_.size(); ++v) {
    cum_[v] = cum_[tree_->parent_of(NodeId{v}).index] + len_[v];
  }
}

NodeId MetricView::lca(NodeId u, NodeId v) const {
  const SplitTree& t = *tree_;
  while (t.height(u) > t.height(v)) u = t.parent_of(u);
  while (t.height(v) > t.height(u)) v = t.parent_of(v);
  while (u != v) {
    u = t.parent_of(u);
    v = t.parent_of(v);
  }
  return u;
}

double MetricView::base_distance(NodeId u, NodeId v) const {
  if (u == v) return 0.0;
  const NodeId a = lca(u, v);
  return cum_[u.index] + cum_[v.index] - 2.0 * cum_[a.index];
}

NodeId MetricView::ancestor_at_distance(NodeId v, double x) const {
  if (x <= 0.0) return kRoot;
  // Compare in base units so lattice views stay exact.
  const double target = x / step_;
  while (v != kRoot) {
    const NodeId p = tree_->parent_of(v);
    if (cum_[p.index] >= target) {
      v = p;
    } else {
      break;
    }
  }
  return v;
}

MetricView MetricView::scaled(double c) const {
  if (!(c > 0.0)) throw ContractError("scale factor must be positive");
  if (lattice_) return MetricView(*tree_, len_, true, step_ * c);
  std::vector<double> l(len_.size());
  for (std::size_t v = 1; v < l.size(); ++v) l[v] = len_[v] * c;
  l[0] = 1.0;
  return MetricView(*tree_, std::move(l), false, step_);
}

MetricView assign_lengths(const SplitTree& tree, const EdgeLengthLaw& law, Rng& rng) {
  if (law.is_unit()) return MetricView::lattice(tree, 1.0);
  std::vector<double> l(tree.size());
  l[0] = 1.0;
  for (std::size_t v = 1; v < l.size(); ++v) l[v] = law.sample(rng);
  return MetricView(tree, std::move(l));
}

}  // namespace splitvor
