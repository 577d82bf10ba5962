#include "splitvor/reference.hpp"

#include <algorithm>
#include <numeric>

#include "splitvor/error.hpp"

namespace splitvor {

namespace {

struct Key {
  double d;
  std::uint32_t src;
  std::uint32_t via = kUnowned;  // neighbour the label came from
};

}  // namespace

std::map<std::string, double> bst_shape_probabilities(std::size_t n) {
  if (n == 0 || n > 9) throw ContractError("brute-force BST shapes need 1 <= n <= 9");
  std::vector<int> keys(n);
  std::iota(keys.begin(), keys.end(), 0);
  std::map<std::string, std::uint64_t> count;
  std::uint64_t total = 0;
  do {
    // word of each key in the search tree built by inserting `keys` in order
    std::vector<std::string> word(n);
    std::vector<int> left(n, -1), right(n, -1);
    for (std::size_t i = 1; i < n; ++i) {
      int cur = keys[0];
      std::string w;
      while (true) {
        int& next = keys[i] < cur ? left[cur] : right[cur];
        w.push_back(keys[i] < cur ? '1' : '2');
        if (next < 0) {
          next = keys[i];
          break;
        }
        cur = next;
      }
      word[keys[i]] = w;
    }
    std::sort(word.begin(), word.end());
    std::string key;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) key.push_back('|');
      key += word[i];
    }
    ++count[key];
    ++total;
  } while (std::next_permutation(keys.begin(), keys.end()));

  std::map<std::string, double> p;
  for (const auto& [k, c] : count) p[k] = static_cast<double>(c) / static_cast<double>(total);
  return p;
}

DpTerritories earliest_arrival_dp(const MetricView& view, const CompetitionSpec& spec) {
  const std::size_t n = view.size();
  spec.validate(n);
  const SplitTree& t = view.tree();
  const bool exact = view.exact_integers();

  auto earlier = [&](const Key& a, const Key& b) {
    if (b.src == kUnowned) return a.src != kUnowned;
    if (a.src == kUnowned) return false;
    const Speed& sa = spec.speeds[a.src];
    const Speed& sb = spec.speeds[b.src];
    if (exact) {
      const __int128 l = __int128(static_cast<std::int64_t>(a.d)) * sa.den * sb.num;
      const __int128 r = __int128(static_cast<std::int64_t>(b.d)) * sb.den * sa.num;
      if (l != r) return l < r;
    } else {
      const double ta = a.d / sa.value();
      const double tb = b.d / sb.value();
      if (ta != tb) return ta < tb;
    }
    return a.src < b.src;
  };

  // A node's label is recomputed from scratch: its own source start, if any,
  // and one offer per neighbour from that neighbour's current label. A
  // faster epidemic cannot pass through a node held by another one, so a
  // stale offer must not survive once the neighbour changes hands. Offers
  // never travel back along the edge they arrived by, so labels stay simple
  // paths and cannot count upwards between two nodes.
  std::vector<Key> start(n, Key{0.0, kUnowned});
  for (std::uint32_t i = 0; i < spec.k(); ++i) {
    const Key cand{0.0, i};
    auto& cur = start[spec.sources[i].index];
    if (earlier(cand, cur)) cur = cand;
  }
  std::vector<Key> best = start;

  auto relax = [&](std::uint32_t w) {
    Key label = start[w];
    auto offer = [&](std::uint32_t x, double edge) {
      if (best[x].src == kUnowned || best[x].via == w) return;
      const Key cand{best[x].d + edge, best[x].src, x};
      if (earlier(cand, label)) label = cand;
    };
    const NodeId v{w};
    if (v != kRoot) offer(t.parent_of(v).index, view.base_length(v));
    t.for_each_child(v, [&](NodeId c) { offer(c.index, view.base_length(c)); });
    const bool changed = label.src != best[w].src || label.d != best[w].d || label.via != best[w].via;
    best[w] = label;
    return changed;
  };

  DpTerritories out;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::uint32_t w = 0; w < n; ++w) changed |= relax(w);
    for (std::uint32_t w = static_cast<std::uint32_t>(n); w-- > 0;) changed |= relax(w);
    if (++out.sweeps > 8 * n + 64) throw ContractError("earliest-arrival DP did not settle");
  }
  out.owner.resize(n);
  out.distance.resize(n);
  for (std::size_t w = 0; w < n; ++w) {
    out.owner[w] = best[w].src;
    out.distance[w] = view.step() * best[w].d;
  }
  return out;
}

}  // namespace splitvor
