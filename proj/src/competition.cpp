#include "splitvor/competition.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <queue>
#include <unordered_set>

#include "splitvor/error.hpp"

namespace splitvor {

namespace {

using i128 = __int128;

std::int64_t parse_int(std::string_view s, std::string_view whole) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw ConfigError("bad speed '" + std::string(whole) + "'");
  }
  return v;
}

// Speed ratio s_i / s_max, reduced, for every source.
std::vector<Speed> speed_ratios(const std::vector<Speed>& speeds) {
  Speed top = speeds.front();
  for (const Speed& s : speeds) {
    if (i128(s.num) * top.den > i128(top.num) * s.den) top = s;
  }
  std::vector<Speed> r;
  r.reserve(speeds.size());
  for (const Speed& s : speeds) r.emplace_back(s.num * top.den, s.den * top.num);
  return r;
}

void tally(CompetitionResult& res, std::size_t k) {
  res.cell_sizes.assign(k, 0);
  for (auto o : res.owner) {
    if (o != kUnowned) ++res.cell_sizes[o];
  }
  res.sorted_sizes = res.cell_sizes;
  std::sort(res.sorted_sizes.begin(), res.sorted_sizes.end(), std::greater<>());
}

// Fills lca_cum[w] = base cumulative of lca(u, w) for every node w.
void lca_cumulatives(const MetricView& view, NodeId u, std::vector<std::uint8_t>& on_path,
                     std::vector<double>& lca_cum) {
  const SplitTree& t = view.tree();
  const std::size_t n = t.size();
  for (NodeId a = u;; a = t.parent_of(a)) {
    on_path[a.index] = 1;
    if (a == kRoot) break;
  }
  lca_cum.resize(n);
  lca_cum[0] = 0.0;
  for (std::uint32_t w = 1; w < n; ++w) {
    lca_cum[w] = on_path[w] ? view.base_cumulative(NodeId{w})
                            : lca_cum[t.parent_of(NodeId{w}).index];
  }
  for (NodeId a = u;; a = t.parent_of(a)) {
    on_path[a.index] = 0;
    if (a == kRoot) break;
  }
}

inline double path_length(double cum_u, double cum_w, double cum_top) {
  return cum_u + cum_w - 2.0 * cum_top;
}

struct Event {
  double d;          // base distance from the source
  std::uint32_t src;
  std::uint32_t node;
  double top;        // base cumulative of lca(source, node)
};

// Orders by (d / ratio[src], src, node); the top of the heap is the minimum.
struct ExactLater {
  const std::vector<Speed>* ratio;
  bool operator()(const Event& a, const Event& b) const {
    const Speed& ra = (*ratio)[a.src];
    const Speed& rb = (*ratio)[b.src];
    const i128 lhs = i128(static_cast<std::int64_t>(a.d)) * ra.den * rb.num;
    const i128 rhs = i128(static_cast<std::int64_t>(b.d)) * rb.den * ra.num;
    if (lhs != rhs) return lhs > rhs;
    if (a.src != b.src) return a.src > b.src;
    return a.node > b.node;
  }
};

struct FloatLater {
  const std::vector<double>* ratio;
  bool operator()(const Event& a, const Event& b) const {
    const double ka = a.d / (*ratio)[a.src];
    const double kb = b.d / (*ratio)[b.src];
    if (ka != kb) return ka > kb;
    if (a.src != b.src) return a.src > b.src;
    return a.node > b.node;
  }
};

template <class Later>
void spread(const MetricView& view, const CompetitionSpec& spec, Later later,
            CompetitionResult& res) {
  const SplitTree& t = view.tree();
  std::priority_queue<Event, std::vector<Event>, Later> pq(later);
  for (std::uint32_t i = 0; i < spec.k(); ++i) {
    const NodeId u = spec.sources[i];
    pq.push(Event{0.0, i, u.index, view.base_cumulative(u)});
  }
  std::vector<double> speed(spec.k());
  for (std::size_t i = 0; i < spec.k(); ++i) speed[i] = spec.speeds[i].value();

  while (!pq.empty()) {
    const Event e = pq.top();
    pq.pop();
    if (res.owner[e.node] != kUnowned) continue;
    res.owner[e.node] = e.src;
    res.arrival_time[e.node] = view.step() * e.d / speed[e.src];

    const double cum_u = view.base_cumulative(spec.sources[e.src]);
    const NodeId v{e.node};
    if (v != kRoot) {
      // An unclaimed parent is necessarily an ancestor of the source.
      const NodeId p = t.parent_of(v);
      if (res.owner[p.index] == kUnowned) {
        const double cp = view.base_cumulative(p);
        pq.push(Event{path_length(cum_u, cp, cp), e.src, p.index, cp});
      }
    }
    t.for_each_child(v, [&](NodeId c) {
      if (res.owner[c.index] != kUnowned) return;
      pq.push(Event{path_length(cum_u, view.base_cumulative(c), e.top), e.src, c.index, e.top});
    });
  }
}

}  // namespace

Speed::Speed(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (den == 0) throw ContractError("speed with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

Speed Speed::parse(std::string_view text) {
  std::int64_t num = 0, den = 1;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    num = parse_int(text.substr(0, slash), text);
    den = parse_int(text.substr(slash + 1), text);
  } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
    const auto whole = text.substr(0, dot);
    const auto frac = text.substr(dot + 1);
    if (frac.size() > 15 || frac.empty() || (!frac.empty() && frac.front() == '-')) {
      throw ConfigError("bad speed '" + std::string(text) + "'");
    }
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::int64_t w = whole.empty() ? 0 : parse_int(whole, text);
    if (w < 0 || (!whole.empty() && whole.front() == '-')) num = -1;
    else num = w * den + parse_int(frac, text);
  } else {
    num = parse_int(text, text);
  }
  if (num <= 0 || den <= 0) throw ConfigError("speed must be positive: '" + std::string(text) + "'");
  return Speed(num, den);
}

std::string Speed::to_string() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

std::string_view to_string(SamplingMode mode) {
  return mode == SamplingMode::Distinct ? "distinct" : "with_replacement";
}

SamplingMode parse_sampling_mode(std::string_view text) {
  if (text == "distinct") return SamplingMode::Distinct;
  if (text == "with_replacement" || text == "iid") return SamplingMode::WithReplacement;
  throw ConfigError("unknown sampling mode '" + std::string(text) + "'");
}

CompetitionSpec CompetitionSpec::equal_speeds(std::vector<NodeId> sources, SamplingMode mode) {
  CompetitionSpec s;
  s.speeds.assign(sources.size(), Speed(1));
  s.sources = std::move(sources);
  s.mode = mode;
  return s;
}

void CompetitionSpec::validate(std::size_t tree_size) const {
  if (sources.empty()) throw ContractError("need at least one source");
  if (speeds.size() != sources.size()) {
    throw ContractError("got " + std::to_string(speeds.size()) + " speeds for " +
                        std::to_string(sources.size()) + " sources");
  }
  for (const Speed& s : speeds) {
    if (s.num <= 0) throw ContractError("speeds must be positive, got " + s.to_string());
  }
  for (const NodeId u : sources) {
    if (u.index >= tree_size) throw ContractError("source " + std::to_string(u.index) + " is not in the tree");
  }
  if (mode == SamplingMode::Distinct) {
    std::vector<NodeId> s = sources;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) {
      throw ContractError("repeated source in distinct sampling mode");
    }
  }
}

std::vector<NodeId> sample_sources(std::size_t n, std::size_t k, SamplingMode mode, Rng& rng) {
  if (n == 0) throw ContractError("cannot sample sources from an empty tree");
  std::vector<NodeId> out;
  out.reserve(k);
  std::uniform_int_distribution<std::uint64_t> pick(0, n - 1);
  if (mode == SamplingMode::WithReplacement) {
    for (std::size_t i = 0; i < k; ++i) out.push_back(NodeId{static_cast<std::uint32_t>(pick(rng))});
    return out;
  }
  if (k > n) {
    throw ContractError("cannot pick " + std::to_string(k) + " distinct sources from " +
                        std::to_string(n) + " nodes");
  }
  if (2 * k <= n) {
    std::unordered_set<std::uint64_t> seen;
    while (out.size() < k) {
      const auto v = pick(rng);
      if (seen.insert(v).second) out.push_back(NodeId{static_cast<std::uint32_t>(v)});
    }
    return out;
  }
  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::uint64_t> rest(i, n - 1);
    std::swap(all[i], all[rest(rng)]);
    out.push_back(NodeId{all[i]});
  }
  return out;
}

CompetitionResult voronoi_cells(const MetricView& view, const CompetitionSpec& spec) {
  const std::size_t n = view.size();
  spec.validate(n);
  CompetitionResult res;
  res.owner.assign(n, kUnowned);
  std::vector<double> best(n);
  std::vector<std::uint8_t> on_path(n, 0);
  std::vector<double> lca_cum;
  for (std::uint32_t i = 0; i < spec.k(); ++i) {
    const NodeId u = spec.sources[i];
    lca_cumulatives(view, u, on_path, lca_cum);
    const double cum_u = view.base_cumulative(u);
    for (std::uint32_t w = 0; w < n; ++w) {
      const double d = path_length(cum_u, view.base_cumulative(NodeId{w}), lca_cum[w]);
      if (i == 0 || d < best[w]) {
        best[w] = d;
        res.owner[w] = i;
      }
    }
  }
  tally(res, spec.k());
  if (spec.k() >= 2) res.meeting_heights = separation_diagnostics(view, spec).meeting_heights;
  return res;
}

CompetitionResult simulate_epidemics(const MetricView& view, const CompetitionSpec& spec) {
  const std::size_t n = view.size();
  spec.validate(n);
  CompetitionResult res;
  res.owner.assign(n, kUnowned);
  res.arrival_time.assign(n, std::numeric_limits<double>::infinity());
  const std::vector<Speed> ratio = speed_ratios(spec.speeds);
  if (view.exact_integers()) {
    spread(view, spec, ExactLater{&ratio}, res);
  } else {
    std::vector<double> r(ratio.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = ratio[i].value();
    spread(view, spec, FloatLater{&r}, res);
  }
  tally(res, spec.k());
  if (spec.k() >= 2) res.meeting_heights = separation_diagnostics(view, spec).meeting_heights;
  return res;
}

std::vector<std::uint32_t> literal_inequality_territories(const MetricView& view,
                                                          const CompetitionSpec& spec,
                                                          InequalityFactor factor) {
  const std::size_t n = view.size();
  const std::size_t k = spec.k();
  spec.validate(n);
  std::vector<double> dist(n * k);
  std::vector<std::uint8_t> on_path(n, 0);
  std::vector<double> lca_cum;
  for (std::size_t i = 0; i < k; ++i) {
    lca_cumulatives(view, spec.sources[i], on_path, lca_cum);
    const double cum_u = view.base_cumulative(spec.sources[i]);
    for (std::uint32_t w = 0; w < n; ++w) {
      dist[w * k + i] = path_length(cum_u, view.base_cumulative(NodeId{w}), lca_cum[w]);
    }
  }
  std::vector<std::uint32_t> owner(n, kUnowned);
  for (std::size_t w = 0; w < n; ++w) {
    const double* d = dist.data() + w * k;
    for (std::size_t i = 0; i < k && owner[w] == kUnowned; ++i) {
      const double si = spec.speeds[i].value();
      bool ok = true;
      for (std::size_t j = 0; j < k && ok; ++j) {
        if (j == i) continue;
        const double sj = spec.speeds[j].value();
        const double c = factor == InequalityFactor::SumOverSelf ? (si + sj) / si : si / sj;
        const double bound = c * d[j];
        ok = j < i ? d[i] <= bound : d[i] < bound;
      }
      if (ok) owner[w] = static_cast<std::uint32_t>(i);
    }
  }
  return owner;
}

SeparationDiagnostics separation_diagnostics(const MetricView& view, const CompetitionSpec& spec) {
  const SplitTree& t = view.tree();
  const std::size_t k = spec.k();
  spec.validate(view.size());
  SeparationDiagnostics out;
  out.delta.assign(k, std::vector<double>(k, 0.0));
  out.meeting_time.assign(k, std::vector<double>(k, 0.0));

  std::vector<std::vector<NodeId>> meet(k, std::vector<NodeId>(k, kRoot));
  double base_K = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const NodeId a = view.lca(spec.sources[i], spec.sources[j]);
      meet[i][j] = meet[j][i] = a;
      base_K = std::max(base_K, view.base_cumulative(a));
      out.H = std::max(out.H, t.height(a));
      const double d = view.distance(spec.sources[i], spec.sources[j]);
      out.delta[i][j] = out.delta[j][i] = d;
      const double tm = d / (spec.speeds[i].value() + spec.speeds[j].value());
      out.meeting_time[i][j] = out.meeting_time[j][i] = tm;
    }
  }
  out.K = view.step() * base_K;

  out.S.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.S[i] = t.subtree_size(t.ancestor_at_height(spec.sources[i], out.H));
  }

  out.event_E = true;
  for (std::size_t i = 0; i < k && out.event_E; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double gap = std::abs(view.cumulative(spec.sources[i]) - view.cumulative(spec.sources[j]));
      if (view.cumulative(meet[i][j]) + std::ceil(gap / 2.0) < out.K) {
        out.event_E = false;
        break;
      }
    }
  }

  out.event_A = true;
  for (std::size_t i = 0; i < k && out.event_A; ++i) {
    for (std::size_t l = i + 1; l < k; ++l) {
      bool holds;
      if (view.exact_integers()) {
        // (|U_l| - K)(s_i + s_l) >= s_i * delta, cleared of denominators.
        const Speed& a = spec.speeds[i];
        const Speed& b = spec.speeds[l];
        const auto lhs = i128(static_cast<std::int64_t>(view.base_cumulative(spec.sources[l]) - base_K)) *
                         (i128(a.num) * b.den + i128(b.num) * a.den);
        const auto rhs = i128(a.num) * b.den *
                         static_cast<std::int64_t>(view.base_distance(spec.sources[i], spec.sources[l]));
        holds = lhs >= rhs;
      } else {
        holds = view.cumulative(spec.sources[l]) - spec.speeds[i].value() * out.meeting_time[i][l] >= out.K;
      }
      if (!holds) {
        out.event_A = false;
        break;
      }
    }
  }

  std::uint32_t kappa = 0;
  for (std::uint32_t i = 1; i < k; ++i) {
    const Speed& a = spec.speeds[i];
    const Speed& b = spec.speeds[kappa];
    const i128 cmp = i128(a.num) * b.den - i128(b.num) * a.den;
    if (cmp > 0 || (cmp == 0 && view.base_cumulative(spec.sources[i]) <
                                    view.base_cumulative(spec.sources[kappa]))) {
      kappa = i;
    }
  }
  out.kappa = kappa;
  out.meeting_heights.assign(k, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < k; ++i) {
    if (i == kappa) continue;
    out.meeting_heights[i] =
        view.cumulative(spec.sources[i]) - spec.speeds[i].value() * out.meeting_time[i][kappa];
  }
  return out;
}

CellSummary cell_size_statistics(const CompetitionResult& result, std::uint64_t n) {
  if (n == 0) throw ContractError("cell statistics need n > 0");
  CellSummary s;
  s.n = n;
  s.sorted_sizes = result.sorted_sizes;
  for (auto v : s.sorted_sizes) {
    const double f = static_cast<double>(v) / static_cast<double>(n);
    s.fractions.push_back(f);
    s.log_ratios.push_back(v == 0 ? -std::numeric_limits<double>::infinity() : std::log(f));
    if (v == 0) ++s.empty_cells;
  }
  s.largest_fraction = s.fractions.empty() ? 0.0 : s.fractions.front();
  return s;
}

}  // namespace splitvor
