#pragma once

// Observables measured on simulated trees and the distances used to compare
// them with their limit laws.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "splitvor/competition.hpp"
#include "splitvor/laws.hpp"
#include "splitvor/metric.hpp"
#include "splitvor/split_tree.hpp"

namespace splitvor {

/// Centering and scaling of heights, root distances and cell log-ratios
/// for one (split law, edge law) pair.
struct LimitLawSpec {
  enum class Kind { Gaussian, Stable };

  Kind kind = Kind::Gaussian;
  double mu = 0.0;
  double sigma2 = 0.0;
  double EL = 1.0;
  double VarL = 0.0;
  double variance = 0.0;  // Var(L) + sigma^2 EL^2, Gaussian case
  double alpha = 2.0;     // stable case
  double skew = 1.0;
  double scale = 1.0;     // not determined by theory; self-consistency only

  static LimitLawSpec from_moments(const MomentConstants& m);

  /// Throws ContractError when the fields disagree with each other.
  void validate() const;

  /// mu^{-1/2} (finite variance) or mu^{1 - 1/alpha}.
  double frak_v() const;
  /// frak_v / (2 EL).
  double prefactor() const { return frak_v() / (2.0 * EL); }
  /// sqrt(log n / mu^3) (finite variance) or (log n / mu)^{1/alpha}.
  double v_n(double n) const;

  double height_center(double n) const;
  double height_scale(double n) const;
  /// (log n) EL / mu.
  double root_center(double n) const;
  /// EL * v_n: dividing by EL makes the standardized distance invariant
  /// under L -> cL.
  double root_scale(double n) const;
};

/// Empirical distribution of node heights (the profile).
struct ProfileHistogram {
  std::vector<std::uint64_t> counts;  // counts[h] nodes at height h
  std::uint64_t n = 0;
  double center = 0.0;
  double scale = 1.0;

  std::uint64_t at(std::size_t h) const { return h < counts.size() ? counts[h] : 0; }
  double mean_height() const;
  /// Standardized position of height h.
  double z(std::size_t h) const { return (static_cast<double>(h) - center) / scale; }
  /// Sup distance between the standardized empirical CDF and `cdf`, taken
  /// on both sides of every atom.
  double ks_to(const std::function<double(double)>& cdf) const;
  void merge(const ProfileHistogram& other);
};

/// Exact height counts. The standardization is filled when `mu` > 0 and
/// the tree has at least two nodes.
ProfileHistogram profile(const SplitTree& tree, double mu = 0.0);

struct StatSample {
  std::string label;
  std::uint64_t n = 0;
  std::vector<double> values;       // finite values only
  std::vector<std::uint64_t> seeds;
  std::size_t excluded = 0;         // non-finite values dropped

  /// Appends v, or counts it as excluded when not finite.
  void push(double v);
  void merge(const StatSample& other);
};

/// Standardized heights (|U| - log n / mu) / sqrt(log n / mu^3) of `count`
/// independently drawn uniform nodes. Needs n >= 2.
StatSample uniform_height_sample(const SplitTree& tree, std::size_t count, const LimitLawSpec& spec,
                                 Rng& rng);

/// Standardized root distances (|U|_L - log n EL / mu) / (EL v_n).
StatSample root_distance_sample(const MetricView& view, std::size_t count, const LimitLawSpec& spec,
                                Rng& rng);

/// Replicate-level collection of LCA diagnostics.
struct LcaSummary {
  std::vector<std::uint32_t> H;
  std::vector<double> S_fraction;  // S_i / n, all sources of all replicates

  void add(const SeparationDiagnostics& d, std::uint64_t n);
  void merge(const LcaSummary& other);
  double p_zero() const;
  double quantile(double p) const;
};

/// LCA diagnostics of one instance; needs k >= 2.
SeparationDiagnostics lca_statistics(const MetricView& view, const CompetitionSpec& spec);

struct FringeRule {
  enum class Kind { OLog, Log };
  Kind kind = Kind::Log;
  double gamma = 0.5;  // OLog exponent in (0, 1)

  static FringeRule log() { return {Kind::Log, 0.0}; }
  static FringeRule olog(double gamma) { return {Kind::OLog, gamma}; }

  /// ceil((log n)^gamma) or log n.
  double f(double n) const;
  std::string describe() const;
};

/// Size of the subtree rooted at the shallowest ancestor a of v with
/// |a|_L >= min(x f(n), |v|_L). For the log rule x must stay below EL / mu.
std::uint64_t fringe_size(const MetricView& view, NodeId v, double x, const FringeRule& rule,
                          const MomentConstants& moments);

/// One row per replicate: (prefactor)(Psi_(1) - Psi_(i)) for i = 2..k,
/// with Psi_(1) <= ... <= Psi_(k) the sorted i.i.d. limit variables.
std::vector<std::vector<double>> limit_reference_sample(const LimitLawSpec& spec, std::size_t k,
                                                        std::size_t replicates, Rng& rng);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(std::span<const double> a, std::span<const double> b);
/// One-sample statistic against a continuous CDF.
double ks_distance(std::span<const double> a, const std::function<double(double)>& cdf);

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Goodness of fit of observed counts to probabilities summing to 1.
/// Cells with expected count below 5 are pooled into one.
ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed,
                               std::span<const double> probabilities);
/// Homogeneity of two count vectors over the same cells.
ChiSquareResult chi_square_homogeneity(std::span<const std::uint64_t> a,
                                       std::span<const std::uint64_t> b);

double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);
/// Sample excess kurtosis m4 / m2^2 - 3.
double excess_kurtosis(std::span<const double> x);
/// Linear interpolation between order statistics; infinite neighbours are
/// returned as is.
double quantile(std::vector<double> x, double p);
double median(std::vector<double> x);

}  // namespace splitvor
