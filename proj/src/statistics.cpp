#include "splitvor/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "splitvor/error.hpp"

namespace splitvor {

namespace {

double log_n(double n) {
  if (!(n >= 2.0)) throw ContractError("standardization needs n >= 2");
  return std::log(n);
}

ChiSquareResult chi_square_p(double stat, double dof) {
  ChiSquareResult r{stat, dof, 1.0};
  if (dof >= 1.0) {
    boost::math::chi_squared dist(dof);
    r.p_value = boost::math::cdf(boost::math::complement(dist, stat));
  }
  return r;
}

}  // namespace

LimitLawSpec LimitLawSpec::from_moments(const MomentConstants& m) {
  LimitLawSpec s;
  s.mu = m.mu;
  s.sigma2 = m.sigma2;
  s.EL = m.EL;
  s.VarL = m.VarL;
  if (m.finite_variance()) {
    s.kind = Kind::Gaussian;
    s.alpha = 2.0;
    s.variance = m.VarL + m.sigma2 * m.EL * m.EL;
  } else {
    s.kind = Kind::Stable;
    s.alpha = m.alpha;
    s.variance = std::numeric_limits<double>::infinity();
  }
  s.validate();
  return s;
}

void LimitLawSpec::validate() const {
  if (!(mu > 0.0)) throw ContractError("limit law needs mu > 0");
  if (!(EL > 0.0)) throw ContractError("limit law needs EL > 0");
  if (kind == Kind::Gaussian) {
    if (alpha != 2.0) throw ContractError("Gaussian limit law with alpha != 2");
    if (!(variance >= 0.0) || !std::isfinite(variance)) {
      throw ContractError("Gaussian limit variance must be finite and non-negative");
    }
    if (variance == 0.0 && !(VarL == 0.0 && sigma2 == 0.0)) {
      throw ContractError("Gaussian limit variance is 0 although Var(L) or sigma^2 is not");
    }
  } else {
    if (!(alpha > 1.0 && alpha < 2.0)) throw ContractError("stable limit law needs alpha in (1, 2)");
    if (std::isfinite(VarL)) throw ContractError("stable limit law with finite Var(L)");
    if (!(scale >= 0.0)) throw ContractError("stable scale must be non-negative");
  }
}

double LimitLawSpec::frak_v() const {
  return kind == Kind::Gaussian ? 1.0 / std::sqrt(mu) : std::pow(mu, 1.0 - 1.0 / alpha);
}

double LimitLawSpec::v_n(double n) const {
  const double l = log_n(n);
  return kind == Kind::Gaussian ? std::sqrt(l / (mu * mu * mu)) : std::pow(l / mu, 1.0 / alpha);
}

double LimitLawSpec::height_center(double n) const { return log_n(n) / mu; }
double LimitLawSpec::height_scale(double n) const { return std::sqrt(log_n(n) / (mu * mu * mu)); }
double LimitLawSpec::root_center(double n) const { return log_n(n) * EL / mu; }
double LimitLawSpec::root_scale(double n) const { return EL * v_n(n); }

double ProfileHistogram::mean_height() const {
  if (n == 0) return 0.0;
  double s = 0.0;
  for (std::size_t h = 0; h < counts.size(); ++h) s += static_cast<double>(h) * static_cast<double>(counts[h]);
  return s / static_cast<double>(n);
}

double ProfileHistogram::ks_to(const std::function<double(double)>& cdf) const {
  if (n == 0) throw ContractError("empty profile");
  double below = 0.0;
  double ks = 0.0;
  for (std::size_t h = 0; h < counts.size(); ++h) {
    if (counts[h] == 0) continue;
    const double F = cdf(z(h));
    const double above = below + static_cast<double>(counts[h]) / static_cast<double>(n);
    ks = std::max({ks, std::abs(F - below), std::abs(above - F)});
    below = above;
  }
  return ks;
}

void ProfileHistogram::merge(const ProfileHistogram& other) {
  if (other.counts.size() > counts.size()) counts.resize(other.counts.size(), 0);
  for (std::size_t h = 0; h < other.counts.size(); ++h) counts[h] += other.counts[h];
  n += other.n;
}

ProfileHistogram profile(const SplitTree& tree, double mu) {
  ProfileHistogram p;
  p.n = tree.size();
  for (std::uint32_t v = 0; v < tree.size(); ++v) {
    const auto h = tree.height(NodeId{v});
    if (h >= p.counts.size()) p.counts.resize(h + 1, 0);
    ++p.counts[h];
  }
  if (mu > 0.0 && p.n >= 2) {
    const double l = std::log(static_cast<double>(p.n));
    p.center = l / mu;
    p.scale = std::sqrt(l / (mu * mu * mu));
  }
  return p;
}

void StatSample::push(double v) {
  if (std::isfinite(v)) {
    values.push_back(v);
  } else {
    ++excluded;
  }
}

void StatSample::merge(const StatSample& other) {
  values.insert(values.end(), other.values.begin(), other.values.end());
  seeds.insert(seeds.end(), other.seeds.begin(), other.seeds.end());
  excluded += other.excluded;
}

StatSample uniform_height_sample(const SplitTree& tree, std::size_t count, const LimitLawSpec& spec,
                                 Rng& rng) {
  const double n = static_cast<double>(tree.size());
  const double c = spec.height_center(n);
  const double s = spec.height_scale(n);
  StatSample out;
  out.label = "height";
  out.n = tree.size();
  out.values.reserve(count);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(tree.size() - 1));
  for (std::size_t i = 0; i < count; ++i) {
    out.push((static_cast<double>(tree.height(NodeId{pick(rng)})) - c) / s);
  }
  return out;
}

StatSample root_distance_sample(const MetricView& view, std::size_t count, const LimitLawSpec& spec,
                                Rng& rng) {
  const double n = static_cast<double>(view.size());
  const double c = spec.root_center(n);
  const double s = spec.root_scale(n);
  StatSample out;
  out.label = "root_distance";
  out.n = view.size();
  out.values.reserve(count);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(view.size() - 1));
  for (std::size_t i = 0; i < count; ++i) {
    out.push((view.cumulative(NodeId{pick(rng)}) - c) / s);
  }
  return out;
}

void LcaSummary::add(const SeparationDiagnostics& d, std::uint64_t n) {
  H.push_back(d.H);
  for (auto s : d.S) S_fraction.push_back(static_cast<double>(s) / static_cast<double>(n));
}

void LcaSummary::merge(const LcaSummary& other) {
  H.insert(H.end(), other.H.begin(), other.H.end());
  S_fraction.insert(S_fraction.end(), other.S_fraction.begin(), other.S_fraction.end());
}

double LcaSummary::p_zero() const {
  if (H.empty()) throw ContractError("no LCA observations");
  return static_cast<double>(std::count(H.begin(), H.end(), 0u)) / static_cast<double>(H.size());
}

double LcaSummary::quantile(double p) const {
  if (H.empty()) throw ContractError("no LCA observations");
  return splitvor::quantile(std::vector<double>(H.begin(), H.end()), p);
}

SeparationDiagnostics lca_statistics(const MetricView& view, const CompetitionSpec& spec) {
  if (spec.k() < 2) throw ContractError("LCA statistics need at least two sources");
  return separation_diagnostics(view, spec);
}

double FringeRule::f(double n) const {
  const double l = n > 1.0 ? std::log(n) : 0.0;
  if (kind == Kind::Log) return l;
  return std::ceil(std::pow(l, gamma));
}

std::string FringeRule::describe() const {
  if (kind == Kind::Log) return "log";
  return "olog:" + std::to_string(gamma);
}

std::uint64_t fringe_size(const MetricView& view, NodeId v, double x, const FringeRule& rule,
                          const MomentConstants& moments) {
  if (!(x > 0.0)) throw ContractError("fringe depth factor x must be positive");
  if (rule.kind == FringeRule::Kind::Log) {
    const double bound = moments.EL / moments.mu;
    if (!(x < bound)) {
      throw ContractError("fringe depth factor x = " + std::to_string(x) +
                          " must be below C(f) = EL/mu = " + std::to_string(bound) + " for f = log n");
    }
  } else if (!(rule.gamma > 0.0 && rule.gamma < 1.0)) {
    throw ContractError("o(log n) rule needs an exponent in (0, 1)");
  }
  const double depth = x * rule.f(static_cast<double>(view.size()));
  return view.tree().subtree_size(view.ancestor_at_distance(v, depth));
}

std::vector<std::vector<double>> limit_reference_sample(const LimitLawSpec& spec, std::size_t k,
                                                        std::size_t replicates, Rng& rng) {
  spec.validate();
  if (k < 2) throw ContractError("reference gaps need k >= 2");
  const double pre = spec.prefactor();
  const double sd = spec.kind == LimitLawSpec::Kind::Gaussian ? std::sqrt(spec.variance) : 0.0;
  std::vector<std::vector<double>> out(replicates);
  std::vector<double> psi(k);
  for (auto& row : out) {
    for (auto& p : psi) {
      p = spec.kind == LimitLawSpec::Kind::Gaussian ? sd * standard_normal(rng)
                                                    : sample_stable(spec.alpha, spec.skew, spec.scale, rng);
    }
    std::sort(psi.begin(), psi.end());
    row.resize(k - 1);
    for (std::size_t i = 1; i < k; ++i) row[i - 1] = pre * (psi[0] - psi[i]);
  }
  return out;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ContractError("KS distance of an empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

double ks_distance(std::span<const double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw ContractError("KS distance of an empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size();) {
    std::size_t j = i;
    while (j < x.size() && x[j] == x[i]) ++j;
    const double F = cdf(x[i]);
    d = std::max({d, std::abs(F - static_cast<double>(i) / n), std::abs(static_cast<double>(j) / n - F)});
    i = j;
  }
  return d;
}

double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed,
                               std::span<const double> probabilities) {
  if (observed.size() != probabilities.size() || observed.empty()) {
    throw ContractError("chi-square needs matching non-empty cells");
  }
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
  double stat = 0.0;
  std::size_t cells = 0;
  double pooled_obs = 0.0;
  double pooled_exp = 0.0;
  for (std::size_t c = 0; c < observed.size(); ++c) {
    const double e = total * probabilities[c];
    const double o = static_cast<double>(observed[c]);
    if (e < 5.0) {
      pooled_obs += o;
      pooled_exp += e;
      continue;
    }
    stat += (o - e) * (o - e) / e;
    ++cells;
  }
  if (pooled_exp > 0.0) {
    stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  } else if (pooled_obs > 0.0) {
    stat = std::numeric_limits<double>::infinity();
  }
  return chi_square_p(stat, static_cast<double>(cells) - 1.0);
}

ChiSquareResult chi_square_homogeneity(std::span<const std::uint64_t> a,
                                       std::span<const std::uint64_t> b) {
  if (a.size() != b.size() || a.empty()) throw ContractError("chi-square needs matching non-empty cells");
  const double na = std::accumulate(a.begin(), a.end(), 0.0);
  const double nb = std::accumulate(b.begin(), b.end(), 0.0);
  if (na == 0.0 || nb == 0.0) throw ContractError("chi-square homogeneity of an empty sample");
  const double n = na + nb;
  double stat = 0.0;
  std::size_t cells = 0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double col = static_cast<double>(a[c] + b[c]);
    if (col == 0.0) continue;
    const double ea = col * na / n;
    const double eb = col * nb / n;
    stat += (a[c] - ea) * (a[c] - ea) / ea + (b[c] - eb) * (b[c] - eb) / eb;
    ++cells;
  }
  return chi_square_p(stat, static_cast<double>(cells) - 1.0);
}

double mean(std::span<const double> x) {
  if (x.empty()) throw ContractError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw ContractError("variance needs two observations");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double excess_kurtosis(std::span<const double> x) {
  if (x.size() < 2) throw ContractError("kurtosis needs two observations");
  const double m = mean(x);
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : x) {
    const double d2 = (v - m) * (v - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(x.size());
  m4 /= static_cast<double>(x.size());
  return m4 / (m2 * m2) - 3.0;
}

double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw ContractError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ContractError("quantile level must lie in [0, 1]");
  std::sort(x.begin(), x.end());
  const double h = p * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  const double t = h - static_cast<double>(lo);
  if (t == 0.0 || x[lo] == x[hi]) return x[lo];
  if (!std::isfinite(x[lo]) || !std::isfinite(x[hi])) return t < 0.5 ? x[lo] : x[hi];
  return x[lo] + t * (x[hi] - x[lo]);
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

}  // namespace splitvor
