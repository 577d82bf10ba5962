#pragma once

// Config-driven experiment runner: replicates over an n-grid, deterministic
// parallel execution and CSV / JSON-lines / summary output.
//
// Config files are flat `key = value` lines; `#` starts a comment. See
// README.md for the grammar.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "splitvor/competition.hpp"
#include "splitvor/laws.hpp"
#include "splitvor/statistics.hpp"

namespace splitvor {

enum class OutputFormat { Csv, Jsonl, Both };

struct Observable {
  enum class Kind { Voronoi, Territories, Profile, Heights, RootDistances, Lca, Fringe };
  Kind kind = Kind::Voronoi;
  double x = 0.0;    // fringe only
  FringeRule rule;   // fringe only

  static Observable parse(std::string_view text);
  /// Canonical text, also used as the `observable` column (lca emits
  /// lca_H and lca_S).
  std::string label() const;
  bool needs_sources() const;
};

struct ExperimentConfig {
  std::string experiment_id = "experiment";
  std::string split = "bst";
  std::string edge = "unit";
  std::vector<std::uint64_t> n_grid;
  std::size_t k = 2;
  std::vector<Speed> speeds;  // empty means all 1
  std::uint64_t replicates = 1;
  std::uint64_t master_seed = 0;
  SamplingMode sampling_mode = SamplingMode::WithReplacement;
  std::vector<Observable> observables;
  std::size_t draws = 1000;             // per tree, heights / root_distances
  std::size_t reference_draws = 100000; // limit-law reference sample size
  std::filesystem::path output = "results";
  std::size_t workers = 1;
  OutputFormat format = OutputFormat::Csv;
  std::vector<std::uint64_t> fail_replicates;  // fault injection

  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Throws ConfigError on any violation, including failed law
  /// assumptions and fringe factors at or above C(f).
  void validate() const;
  std::vector<Speed> effective_speeds() const;
  nlohmann::json to_json() const;
};

struct ResultRow {
  std::string experiment_id;
  std::uint64_t n = 0;
  std::uint64_t replicate = 0;
  std::uint64_t seed = 0;
  std::string observable;
  std::int64_t index = 0;
  double value = 0.0;
  double wall_time = 0.0;  // seconds for this (n, replicate); not written to files

  /// Equality over the emitted columns.
  bool same_columns(const ResultRow& other) const;
};

struct ReplicateFailure {
  std::uint64_t replicate = 0;
  std::string message;
};

struct ResultSet {
  std::vector<ResultRow> rows;  // ordered by (n, replicate), then generation order
  std::vector<ReplicateFailure> failures;
  double wall_seconds = 0.0;
};

/// FNV-1a hash of the experiment id, fed to replicate_seed.
std::uint64_t experiment_key(std::string_view experiment_id);
std::uint64_t config_replicate_seed(const ExperimentConfig& config, std::uint64_t replicate);

ResultSet run_experiment(const ExperimentConfig& config);

inline constexpr std::string_view kCsvHeader = "experiment_id,n,replicate,seed,observable,index,value";

/// Shortest round-trip text; non-finite values as inf, -inf, nan.
std::string format_value(double v);
std::string to_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_csv(std::string_view text);
std::string to_jsonl(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_jsonl(std::string_view text);

/// Per-(n, observable) aggregates plus the standardization constants.
nlohmann::json summarize(const ExperimentConfig& config, const std::vector<ResultRow>& rows,
                         const std::vector<ReplicateFailure>& failures);

/// Writes results.csv and/or results.jsonl and summary.json under
/// config.output. Throws IoError naming the path on failure.
void emit(const ExperimentConfig& config, const ResultSet& results);

/// Reads back the rows written by emit (CSV preferred).
std::vector<ResultRow> load_rows(const ExperimentConfig& config);

}  // namespace splitvor
