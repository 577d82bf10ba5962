#pragma once

// Slow reference computations for small instances, used by the `oracle`
// subcommand and by the test suites.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "splitvor/competition.hpp"
#include "splitvor/metric.hpp"

namespace splitvor {

/// Exact distribution of the binary search tree shape on n keys, obtained
/// by inserting all n! key orders. Keys are shape_key() strings. n <= 9.
std::map<std::string, double> bst_shape_probabilities(std::size_t n);

struct DpTerritories {
  std::vector<std::uint32_t> owner;
  std::vector<double> distance;  // path length from the owning source
  std::size_t sweeps = 0;
};

/// Earliest-arrival territories by label correction: alternating top-down
/// and bottom-up sweeps relax every edge with the (time, source index) key
/// until nothing changes. Times on lattice views are compared exactly.
DpTerritories earliest_arrival_dp(const MetricView& view, const CompetitionSpec& spec);

}  // namespace splitvor
