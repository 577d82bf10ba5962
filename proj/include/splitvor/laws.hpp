#pragma once

// Split-vector laws, edge-length laws, their moment constants, and the
// reference samplers (alpha-stable) used by the limit-law checks.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "splitvor/rng.hpp"

namespace splitvor {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Split laws

/// (Y, 1-Y) with Y uniform: the random binary search tree.
struct BinaryUniform {};

/// Uniform law on the m-simplex: the random m-ary search tree.
struct MArySearch {
  std::uint32_t m = 2;
};

/// Griffiths-Engen-McCloskey stick breaking, B_i ~ Beta(1 - alpha, theta + i*alpha).
/// GEM(0, 1) gives the random recursive tree, GEM(1/2, 1/2) the preferential
/// attachment tree.
struct Gem {
  double alpha = 0.0;
  double theta = 1.0;
};

/// A finite-arity law given by a sampler. When built from atoms the support
/// is known exactly and moments are computed analytically.
struct ExplicitFinite {
  struct Atom {
    std::vector<double> y;
    double probability = 1.0;
  };

  std::uint32_t arity = 2;
  std::function<void(Rng&, std::span<double>)> draw;
  std::vector<Atom> atoms;  // empty when only the sampler is known
  std::string description;

  static ExplicitFinite point_mass(std::vector<double> y);
  static ExplicitFinite from_atoms(std::vector<Atom> atoms);
  static ExplicitFinite from_sampler(std::uint32_t arity,
                                     std::function<void(Rng&, std::span<double>)> draw,
                                     std::string description);
};

class SplitLaw {
 public:
  using Variant = std::variant<BinaryUniform, MArySearch, Gem, ExplicitFinite>;

  SplitLaw(Variant v) : v_(std::move(v)) {}  // NOLINT(google-explicit-constructor)

  static SplitLaw bst() { return SplitLaw{BinaryUniform{}}; }
  static SplitLaw mary(std::uint32_t m) { return SplitLaw{MArySearch{m}}; }
  static SplitLaw gem(double alpha, double theta) { return SplitLaw{Gem{alpha, theta}}; }
  static SplitLaw recursive_tree() { return gem(0.0, 1.0); }
  static SplitLaw preferential_attachment() { return gem(0.5, 0.5); }

  const Variant& variant() const noexcept { return v_; }

  /// Number of split components, or nullopt for infinite arity.
  std::optional<std::uint32_t> arity() const;
  bool infinite() const noexcept { return std::holds_alternative<Gem>(v_); }

  /// Draw one split vector into `out` (size == arity). Finite arity only.
  void draw_split(Rng& rng, std::span<double> out) const;

  /// Draw the i-th stick B_i (i >= 1). Infinite arity only.
  double draw_stick(std::uint64_t i, Rng& rng) const;

  /// The grammar string this law parses from ("bst", "mary:3", ...).
  std::string describe() const;

 private:
  Variant v_;
};

// ---------------------------------------------------------------------------
// Edge-length laws

struct UnitLength {};

struct ExponentialLength {
  double rate = 1.0;
};

/// Any finite-variance law supplied as a sampler together with its moments.
struct CustomFiniteVariance {
  std::function<double(Rng&)> draw;
  double mean = 1.0;
  double variance = 0.0;
  std::string description;
};

/// Pure power tail: P(L >= x) = (x / scale)^(-alpha) for x >= scale.
struct ParetoLength {
  double alpha = 1.5;
  double scale = 1.0;
};

class EdgeLengthLaw {
 public:
  using Variant = std::variant<UnitLength, ExponentialLength, CustomFiniteVariance, ParetoLength>;

  EdgeLengthLaw(Variant v) : v_(std::move(v)) {}  // NOLINT(google-explicit-constructor)

  static EdgeLengthLaw unit() { return EdgeLengthLaw{UnitLength{}}; }
  static EdgeLengthLaw exponential(double rate) { return EdgeLengthLaw{ExponentialLength{rate}}; }
  static EdgeLengthLaw pareto(double alpha, double scale) {
    return EdgeLengthLaw{ParetoLength{alpha, scale}};
  }

  const Variant& variant() const noexcept { return v_; }
  bool is_unit() const noexcept { return std::holds_alternative<UnitLength>(v_); }

  /// Tail index; 2 for every finite-variance law.
  double tail_index() const;

  /// One strictly positive length. Unit returns exactly 1.
  double sample(Rng& rng) const;

  std::string describe() const;

 private:
  Variant v_;
};

inline double sample_edge_length(const EdgeLengthLaw& law, Rng& rng) { return law.sample(rng); }

// ---------------------------------------------------------------------------
// Grammar

/// "bst" | "mary:m" | "gem:alpha,theta" | "fixed:y1,...,ym"
SplitLaw parse_split_law(std::string_view text);
/// "unit" | "exp:rate" | "pareto:alpha,scale"
EdgeLengthLaw parse_edge_law(std::string_view text);

// ---------------------------------------------------------------------------
// Assumptions and constants

enum class Verdict { Satisfied, Violated, Unknown };

std::string_view to_string(Verdict v);

struct AssumptionCheck {
  std::string name;  // "A1-i", "A1-ii", "A2"
  Verdict verdict = Verdict::Unknown;
  std::string detail;
  std::uint64_t mc_samples = 0;  // nonzero when decided by simulation
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;

  bool ok() const;  // no check violated
  std::string summary() const;
  /// First violated check, if any.
  const AssumptionCheck* first_violation() const;
};

/// Checks A1-i and A1-ii only (split law alone).
ValidationReport validate_split_law(const SplitLaw& split, std::uint64_t mc_samples = 10'000,
                                    std::uint64_t seed = 0x5eed);
ValidationReport validate_law(const SplitLaw& split, const EdgeLengthLaw& edge,
                              std::uint64_t mc_samples = 10'000, std::uint64_t seed = 0x5eed);

struct MomentConstants {
  double mu = 0.0;      // E[log 1/Ybar]
  double sigma2 = 0.0;  // Var(log Ybar)
  double EL = 1.0;
  double VarL = 0.0;    // +inf for heavy tails
  double alpha = 2.0;
  double estimation_error = 0.0;  // standard error of mu, 0 when analytic

  bool finite_variance() const noexcept { return VarL < kInfinity; }
};

/// log of the size-biased marginal: one split vector Y and an independent
/// uniform U pick the component whose cumulative interval contains U.
/// Zero-valued picks are redrawn; `resamples` (if given) counts them.
double sample_size_biased_log(const SplitLaw& split, Rng& rng, std::uint64_t* resamples = nullptr);

/// Analytic constants where closed forms exist; otherwise Monte Carlo until
/// the standard error of mu is at most `precision` or `max_draws` is spent
/// (then BudgetError carrying the best estimate).
MomentConstants moment_constants(const SplitLaw& split, const EdgeLengthLaw& edge,
                                 double precision = 1e-3, std::uint64_t max_draws = 1'000'000,
                                 std::uint64_t seed = 0xC0FFEE);

/// Centered alpha-stable variate (Chambers-Mallows-Stuck), alpha in (1, 2].
/// scale = 0 gives 0. At alpha = 2 the variance is 2 * scale^2.
double sample_stable(double alpha, double skew, double scale, Rng& rng);

}  // namespace splitvor
