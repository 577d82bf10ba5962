#pragma once

// Voronoi cells and competing-epidemic territories of k sources on a
// metric split tree.
//
// Source indices are 0-based (source 0 is U_1);
// the order of the sources is the tie-break priority: at equal distance or
// equal arrival time the smaller index wins.

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "splitvor/metric.hpp"
#include "splitvor/split_tree.hpp"

namespace splitvor {

/// Positive rational speed. Arrival-time comparisons on lattice views are
/// carried out exactly in these rationals.
struct Speed {
  std::int64_t num = 1;
  std::int64_t den = 1;

  Speed() = default;
  Speed(std::int64_t n, std::int64_t d = 1);  // NOLINT(google-explicit-constructor)

  /// "2", "3/2" or a finite decimal such as "2.5" (read exactly as 5/2).
  static Speed parse(std::string_view text);

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  std::string to_string() const;

  friend bool operator==(const Speed&, const Speed&) = default;
};

enum class SamplingMode { WithReplacement, Distinct };

std::string_view to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(std::string_view text);

struct CompetitionSpec {
  std::vector<NodeId> sources;
  std::vector<Speed> speeds;
  SamplingMode mode = SamplingMode::WithReplacement;

  static CompetitionSpec equal_speeds(std::vector<NodeId> sources,
                                      SamplingMode mode = SamplingMode::WithReplacement);

  std::size_t k() const noexcept { return sources.size(); }
  /// Throws ContractError on k = 0, speed/source count mismatch,
  /// non-positive speeds, or repeated sources in distinct mode.
  void validate(std::size_t tree_size) const;
};

inline constexpr std::uint32_t kUnowned = std::numeric_limits<std::uint32_t>::max();

struct CompetitionResult {
  std::vector<std::uint32_t> owner;          // source index per node
  std::vector<std::uint64_t> cell_sizes;     // per source
  std::vector<std::uint64_t> sorted_sizes;   // decreasing
  std::vector<double> arrival_time;          // epidemics only
  std::vector<double> meeting_heights;       // d_i(n); NaN where undefined
};

struct SeparationDiagnostics {
  double K = 0.0;                 // max pairwise |U_i ^ U_j|_L
  std::uint32_t H = 0;            // max pairwise height of U_i ^ U_j
  bool event_E = false;
  bool event_A = false;           // as stated, assumes s_1 >= ... >= s_k
  std::vector<std::vector<double>> delta;          // pairwise d_L(U_i, U_l)
  std::vector<std::vector<double>> meeting_time;   // delta / (s_i + s_l)
  std::vector<std::uint64_t> S;   // subtree sizes at the height-H ancestors
  std::uint32_t kappa = 0;        // fastest source closest to the root
  std::vector<double> meeting_heights;  // |U_i|_L - s_i t_{i,kappa}; NaN at kappa
};

/// k uniform node indices out of [0, n): i.i.d. or without replacement.
std::vector<NodeId> sample_sources(std::size_t n, std::size_t k, SamplingMode mode, Rng& rng);

/// Owner of w is the smallest index attaining min_i d_L(w, U_i). O(n k).
CompetitionResult voronoi_cells(const MetricView& view, const CompetitionSpec& spec);

/// Earliest-arrival growth with blocking: a node belongs to the first
/// epidemic to reach it; ties go to the smaller source index.
CompetitionResult simulate_epidemics(const MetricView& view, const CompetitionSpec& spec);

enum class InequalityFactor {
  SumOverSelf,  // (s_i + s_j) / s_i, as displayed
  SpeedRatio,   // s_i / s_j
};

/// The inequality-based territory definition, read verbatim: w goes to
/// the first i with d(w, U_i) <= c_ij d(w, U_j) for j < i and < for j > i.
/// Read this way an exact tie goes to the larger index, the opposite of
/// voronoi_cells. Diagnostic only; it ignores blocking. Nodes matching no
/// index get kUnowned.
std::vector<std::uint32_t> literal_inequality_territories(
    const MetricView& view, const CompetitionSpec& spec,
    InequalityFactor factor = InequalityFactor::SumOverSelf);

SeparationDiagnostics separation_diagnostics(const MetricView& view, const CompetitionSpec& spec);

struct CellSummary {
  std::uint64_t n = 0;
  std::vector<std::uint64_t> sorted_sizes;
  std::vector<double> fractions;   // sorted_sizes / n
  std::vector<double> log_ratios;  // log(sorted_sizes / n); -inf for empty cells
  double largest_fraction = 0.0;
  std::size_t empty_cells = 0;
};

CellSummary cell_size_statistics(const CompetitionResult& result, std::uint64_t n);

}  // namespace splitvor
