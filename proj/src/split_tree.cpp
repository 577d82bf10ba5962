#include "splitvor/split_tree.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <sstream>

#include "splitvor/error.hpp"

namespace splitvor {

namespace {

std::optional<std::vector<std::uint32_t>> parse_word(std::string_view w) {
  std::vector<std::uint32_t> out;
  std::size_t i = 0;
  while (i < w.size()) {
    const char c = w[i];
    if (c >= '1' && c <= '9') {
      out.push_back(static_cast<std::uint32_t>(c - '0'));
      ++i;
    } else if (c == '[') {
      const auto close = w.find(']', i);
      if (close == std::string_view::npos) return std::nullopt;
      std::uint32_t label = 0;
      auto [p, ec] = std::from_chars(w.data() + i + 1, w.data() + close, label);
      if (ec != std::errc{} || p != w.data() + close || label == 0) return std::nullopt;
      out.push_back(label);
      i = close + 1;
    } else {
      return std::nullopt;
    }
  }
  return out;
}

}  // namespace

SplitTree::SplitTree(SplitLaw law, std::uint64_t seed)
    : law_(std::move(law)), arity_(law_.arity()), rng_(seed) {
  const auto report = validate_split_law(law_, 1000, seed);
  if (const auto* bad = report.first_violation()) {
    throw ConfigError("split law " + law_.describe() + " violates " + bad->name + ": " +
                      bad->detail);
  }
  nodes_.push_back({kNone, 0, 0, 1});
  if (arity_) {
    kids_.assign(*arity_, kNone);
    split_.assign(*arity_, 0.0);
    has_split_.assign(1, false);
  } else {
    sticks_.emplace_back();
  }
}

SplitTree SplitTree::from_words(SplitLaw law, const std::vector<std::string>& words,
                                std::uint64_t seed) {
  SplitTree t(std::move(law), seed);
  bool root_seen = false;
  for (const auto& w : words) {
    const auto parsed = parse_word(w);
    if (!parsed) throw ContractError("malformed Ulam-Harris word '" + w + "'");
    if (parsed->empty()) {
      if (root_seen) throw ContractError("root listed twice");
      root_seen = true;
      continue;
    }
    std::uint32_t v = 0;
    for (std::size_t i = 0; i + 1 < parsed->size(); ++i) {
      v = t.child_raw(v, (*parsed)[i]);
      if (v == kNone) throw ContractError("word '" + w + "' listed before its parent");
    }
    const std::uint32_t label = parsed->back();
    if (t.arity_ && label > *t.arity_) throw ContractError("label exceeds arity in '" + w + "'");
    if (t.child_raw(v, label) != kNone) throw ContractError("word '" + w + "' listed twice");
    for (std::uint32_t a = v; a != kNone; a = t.nodes_[a].parent) ++t.nodes_[a].subtree_size;
    t.add_node(v, label);
  }
  return t;
}

std::uint32_t SplitTree::child_raw(std::uint32_t v, std::uint32_t label) const {
  if (arity_) {
    if (label == 0 || label > *arity_) return kNone;
    return kids_[std::size_t(v) * *arity_ + (label - 1)];
  }
  const auto& kids = sticks_[v].kids;
  if (label == 0 || label > kids.size()) return kNone;
  return kids[label - 1];
}

std::uint32_t SplitTree::add_node(std::uint32_t parent, std::uint32_t label) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  if (id == kNone) throw std::length_error("split tree node index space exhausted");
  nodes_.push_back({parent, label, nodes_[parent].height + 1, 1});
  if (arity_) {
    kids_[std::size_t(parent) * *arity_ + (label - 1)] = id;
    kids_.resize(kids_.size() + *arity_, kNone);
    split_.resize(split_.size() + *arity_, 0.0);
    has_split_.push_back(false);
  } else {
    auto& kids = sticks_[parent].kids;
    if (kids.size() < label) kids.resize(label, kNone);
    kids[label - 1] = id;
    sticks_.emplace_back();
  }
  return id;
}

void SplitTree::ensure_split(std::uint32_t v) {
  if (has_split_[v]) return;
  const std::size_t m = *arity_;
  law_.draw_split(rng_, std::span<double>(split_.data() + v * m, m));
  has_split_[v] = true;
}

std::uint32_t SplitTree::route_label(std::uint32_t v) {
  if (arity_) {
    ensure_split(v);
    const std::size_t m = *arity_;
    const double* y = split_.data() + v * m;
    const double u = uniform01(rng_);
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      cum += y[i];
      if (u < cum) return static_cast<std::uint32_t>(i + 1);
    }
    // Rounding can leave cum slightly below 1; the remainder belongs to the
    // last positive component.
    for (std::size_t i = m; i-- > 0;) {
      if (y[i] > 0.0) return static_cast<std::uint32_t>(i + 1);
    }
    return static_cast<std::uint32_t>(m);
  }
  auto& st = sticks_[v];
  const double u = uniform01(rng_);
  std::size_t i = static_cast<std::size_t>(
      std::upper_bound(st.cumulative.begin(), st.cumulative.end(), u) - st.cumulative.begin());
  while (i == st.cumulative.size()) {
    const double before = st.cumulative.empty() ? 0.0 : st.cumulative.back();
    const double b = law_.draw_stick(st.cumulative.size() + 1, rng_);
    st.cumulative.push_back(std::min(1.0, before + b * (1.0 - before)));
    if (u >= st.cumulative.back()) ++i;
  }
  return static_cast<std::uint32_t>(i) + 1;
}

NodeId SplitTree::insert_next() {
  std::uint32_t v = 0;
  while (true) {
    ++nodes_[v].subtree_size;
    const std::uint32_t label = route_label(v);
    const std::uint32_t c = child_raw(v, label);
    if (c == kNone) return NodeId{add_node(v, label)};
    v = c;
  }
}

std::vector<LeafSlot> SplitTree::leaf_slots() {
  if (!arity_) throw UnsupportedError("leaf slots of an infinite-arity tree are not enumerable");
  const std::size_t m = *arity_;
  std::vector<double> path_weight(nodes_.size());
  std::vector<LeafSlot> slots;
  slots.reserve((m - 1) * nodes_.size() + 1);
  for (std::uint32_t v = 0; v < nodes_.size(); ++v) {
    ensure_split(v);
    const auto& rec = nodes_[v];
    path_weight[v] = rec.parent == kNone ? 1.0 : path_weight[rec.parent] * split_[rec.parent * m + rec.label - 1];
    for (std::uint32_t label = 1; label <= m; ++label) {
      if (child_raw(v, label) == kNone) {
        slots.push_back({NodeId{v}, label, path_weight[v] * split_[v * m + label - 1]});
      }
    }
  }
  return slots;
}

NodeId SplitTree::insert_next_reference() {
  if (!arity_) throw UnsupportedError("the interval-subdivision generator needs finite arity");
  const auto slots = leaf_slots();
  const double x = uniform01(rng_);
  // Half-open subintervals [a, b) in enumeration order.
  double acc = 0.0;
  const LeafSlot* chosen = nullptr;
  for (const auto& s : slots) {
    acc += s.weight;
    if (x < acc) {
      chosen = &s;
      break;
    }
  }
  if (chosen == nullptr) {
    for (auto it = slots.rbegin(); it != slots.rend(); ++it) {
      if (it->weight > 0.0) {
        chosen = &*it;
        break;
      }
    }
  }
  const std::uint32_t parent = chosen->parent.index;
  for (std::uint32_t a = parent; a != kNone; a = nodes_[a].parent) ++nodes_[a].subtree_size;
  return NodeId{add_node(parent, chosen->child_label)};
}

SplitTree& SplitTree::grow_to(std::size_t n) {
  if (n < size()) {
    throw ContractError("grow_to(" + std::to_string(n) + ") below current size " +
                        std::to_string(size()));
  }
  nodes_.reserve(n);
  if (arity_) {
    kids_.reserve(n * *arity_);
    split_.reserve(n * *arity_);
  } else {
    sticks_.reserve(n);
  }
  while (size() < n) insert_next();
  assert(check_invariants().empty());
  return *this;
}

std::optional<NodeId> SplitTree::child(NodeId v, std::uint32_t label) const {
  const auto c = child_raw(v.index, label);
  if (c == kNone) return std::nullopt;
  return NodeId{c};
}

std::vector<NodeId> SplitTree::children(NodeId v) const {
  std::vector<NodeId> out;
  if (arity_) {
    for (std::uint32_t l = 1; l <= *arity_; ++l) {
      if (auto c = child_raw(v.index, l); c != kNone) out.push_back(NodeId{c});
    }
  } else {
    for (auto c : sticks_[v.index].kids) {
      if (c != kNone) out.push_back(NodeId{c});
    }
  }
  return out;
}

NodeId SplitTree::ancestor_at_height(NodeId v, std::uint32_t h) const {
  std::uint32_t x = v.index;
  while (nodes_[x].height > h) x = nodes_[x].parent;
  return NodeId{x};
}

std::vector<std::uint32_t> SplitTree::word(NodeId v) const {
  std::vector<std::uint32_t> w(nodes_[v.index].height);
  for (std::uint32_t x = v.index; nodes_[x].parent != kNone; x = nodes_[x].parent) {
    w[nodes_[x].height - 1] = nodes_[x].label;
  }
  return w;
}

std::string SplitTree::word_string(NodeId v) const {
  std::string s;
  for (auto l : word(v)) {
    if (l <= 9) {
      s.push_back(static_cast<char>('0' + l));
    } else {
      s += "[" + std::to_string(l) + "]";
    }
  }
  return s;
}

std::optional<NodeId> SplitTree::find(std::string_view w) const {
  const auto parsed = parse_word(w);
  if (!parsed) return std::nullopt;
  std::uint32_t v = 0;
  for (auto l : *parsed) {
    v = child_raw(v, l);
    if (v == kNone) return std::nullopt;
  }
  return NodeId{v};
}

std::string SplitTree::shape_key() const {
  std::vector<std::string> words;
  words.reserve(size());
  for (std::uint32_t v = 0; v < size(); ++v) words.push_back(word_string(NodeId{v}));
  std::sort(words.begin(), words.end());
  std::string key;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) key.push_back('|');
    key += words[i];
  }
  return key;
}

std::span<const double> SplitTree::split(NodeId v) {
  if (!arity_) throw UnsupportedError("split vectors of infinite-arity nodes are materialized lazily");
  ensure_split(v.index);
  return {split_.data() + std::size_t(v.index) * *arity_, *arity_};
}

void SplitTree::set_split(NodeId v, std::vector<double> y) {
  if (!arity_) throw UnsupportedError("set_split needs finite arity");
  if (y.size() != *arity_) throw ContractError("split vector size differs from arity");
  std::copy(y.begin(), y.end(), split_.begin() + std::ptrdiff_t(v.index) * *arity_);
  has_split_[v.index] = true;
}

std::size_t SplitTree::cached_sticks(NodeId v) const {
  return arity_ ? 0 : sticks_[v.index].cumulative.size();
}

std::string SplitTree::check_invariants() const {
  const std::size_t n = nodes_.size();
  if (n == 0) return "empty tree";
  if (nodes_[0].parent != kNone || nodes_[0].height != 0) return "malformed root";
  std::vector<std::uint64_t> sizes(n, 1);
  for (std::size_t v = n; v-- > 1;) {
    const auto& r = nodes_[v];
    if (r.parent >= v) return "node " + std::to_string(v) + " precedes its parent";
    if (r.height != nodes_[r.parent].height + 1) return "height mismatch at " + std::to_string(v);
    if (r.label == 0 || (arity_ && r.label > *arity_)) return "bad label at " + std::to_string(v);
    if (child_raw(r.parent, r.label) != v) return "child table mismatch at " + std::to_string(v);
    sizes[r.parent] += sizes[v];
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (sizes[v] != nodes_[v].subtree_size) {
      return "subtree size mismatch at " + std::to_string(v);
    }
  }
  if (!arity_) {
    for (std::size_t v = 0; v < n; ++v) {
      const auto& c = sticks_[v].cumulative;
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] > 1.0 || (i > 0 && c[i] < c[i - 1])) return "stick prefix not monotone at " + std::to_string(v);
      }
    }
  }
  return {};
}

}  // namespace splitvor
