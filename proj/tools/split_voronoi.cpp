// split-voronoi: command-line front end for the experiment harness.
//
//   split-voronoi validate|run|summarize|oracle --config <path> [--workers N] [--seed S]
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failures.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "splitvor/error.hpp"
#include "splitvor/harness.hpp"
#include "splitvor/reference.hpp"

using namespace splitvor;

namespace {

struct Options {
  std::string config;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  std::size_t instances = 200;
  std::size_t samples = 20000;
};

ExperimentConfig load_config(const Options& o) {
  ExperimentConfig c = ExperimentConfig::load(o.config);
  if (o.workers) c.workers = *o.workers;
  if (o.seed) c.master_seed = *o.seed;
  return c;
}

int cmd_validate(const Options& o) {
  const ExperimentConfig c = load_config(o);
  const SplitLaw split = parse_split_law(c.split);
  const EdgeLengthLaw edge = parse_edge_law(c.edge);
  std::cout << "split: " << split.describe() << "\nedge:  " << edge.describe() << "\n";
  std::cout << validate_law(split, edge).summary() << "\n";
  c.validate();
  const MomentConstants m = moment_constants(split, edge);
  std::printf("mu = %.6g  sigma^2 = %.6g  EL = %.6g  Var(L) = %.6g  alpha = %.6g\n", m.mu, m.sigma2, m.EL,
              m.VarL, m.alpha);
  std::cout << "config ok\n";
  return 0;
}

int cmd_run(const Options& o) {
  const ExperimentConfig c = load_config(o);
  const ResultSet r = run_experiment(c);
  emit(c, r);
  std::fprintf(stderr, "%zu rows, %zu failed replicates, %.2f s\n", r.rows.size(), r.failures.size(),
               r.wall_seconds);
  return r.failures.empty() ? 0 : 2;
}

int cmd_summarize(const Options& o) {
  const ExperimentConfig c = load_config(o);
  c.validate();
  const auto rows = load_rows(c);
  std::vector<ReplicateFailure> failures;
  const auto summary_path = c.output / "summary.json";
  if (std::filesystem::exists(summary_path)) {
    std::ifstream in(summary_path);
    const auto old = nlohmann::json::parse(in, nullptr, false);
    if (!old.is_discarded() && old.contains("failed_replicates")) {
      for (const auto& f : old["failed_replicates"]) {
        failures.push_back({f.at("replicate").get<std::uint64_t>(), f.at("message").get<std::string>()});
      }
    }
  }
  const auto s = summarize(c, rows, failures);
  std::ofstream out(summary_path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + summary_path.string());
  out << s.dump(2) << "\n";
  std::fprintf(stderr, "summarized %zu rows\n", rows.size());
  return failures.empty() ? 0 : 2;
}

// Small-n cross-checks of the fast code paths against the reference ones.
int cmd_oracle(const Options& o) {
  const ExperimentConfig c = load_config(o);
  c.validate();
  const SplitLaw split = parse_split_law(c.split);
  const EdgeLengthLaw edge = parse_edge_law(c.edge);
  bool ok = true;

  if (split.arity()) {
    const std::size_t n = 5;
    std::map<std::string, std::uint64_t> fast, ref;
    for (std::size_t i = 0; i < o.samples; ++i) {
      const std::uint64_t s = replicate_seed(c.master_seed, 1, i);
      SplitTree a(split, s);
      a.grow_to(n);
      ++fast[a.shape_key()];
      SplitTree b(split, stream_seed(s, 1));
      while (b.size() < n) b.insert_next_reference();
      ++ref[b.shape_key()];
    }
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> cells;
    for (const auto& [k, v] : fast) cells[k].first = v;
    for (const auto& [k, v] : ref) cells[k].second = v;
    std::vector<std::uint64_t> fa, rb;
    for (const auto& [k, v] : cells) {
      fa.push_back(v.first);
      rb.push_back(v.second);
    }
    const auto h = chi_square_homogeneity(fa, rb);
    std::printf("generator vs interval reference (n=5, %zu samples): chi2 = %.2f, dof = %.0f, p = %.4g\n",
                o.samples, h.statistic, h.dof, h.p_value);
    ok &= h.p_value > 0.001;
    if (c.split == "bst") {
      const auto exact = bst_shape_probabilities(n);
      std::vector<std::uint64_t> obs;
      std::vector<double> prob;
      std::uint64_t outside = 0;
      for (const auto& [k, p] : exact) {
        obs.push_back(fast.count(k) ? fast[k] : 0);
        prob.push_back(p);
      }
      for (const auto& [k, v] : fast) {
        if (!exact.count(k)) outside += v;
      }
      const auto g = chi_square_gof(obs, prob);
      std::printf("generator vs exact BST shapes: chi2 = %.2f, dof = %.0f, p = %.4g, impossible shapes = %llu\n",
                  g.statistic, g.dof, g.p_value, static_cast<unsigned long long>(outside));
      ok &= g.p_value > 0.001 && outside == 0;
    }
  }

  std::size_t dp_mismatch = 0, vor_mismatch = 0;
  const auto speeds = c.effective_speeds();
  for (std::size_t i = 0; i < o.instances; ++i) {
    const std::uint64_t s = replicate_seed(c.master_seed, 2, i);
    Rng rng(s);
    SplitTree t(split, stream_seed(s, 1));
    t.grow_to(2 + rng() % 49);
    const MetricView view = assign_lengths(t, edge, rng);
    CompetitionSpec spec;
    spec.sources = sample_sources(t.size(), c.k, SamplingMode::WithReplacement, rng);
    spec.speeds = speeds;
    if (simulate_epidemics(view, spec).owner != earliest_arrival_dp(view, spec).owner) ++dp_mismatch;
    const CompetitionSpec eq = CompetitionSpec::equal_speeds(spec.sources);
    if (simulate_epidemics(view, eq).owner != voronoi_cells(view, eq).owner) ++vor_mismatch;
  }
  std::printf("epidemics vs earliest-arrival DP: %zu / %zu mismatches\n", dp_mismatch, o.instances);
  std::printf("equal-speed epidemics vs Voronoi: %zu / %zu mismatches\n", vor_mismatch, o.instances);
  ok &= dp_mismatch == 0 && vor_mismatch == 0;
  std::cout << (ok ? "oracle checks passed\n" : "oracle checks FAILED\n");
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voronoi cells and competing epidemics on random split trees"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option_function<std::size_t>("--workers", [&](std::size_t w) { o.workers = w; }, "worker threads");
    sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { o.seed = s; }, "master seed override");
  };
  auto* validate = app.add_subcommand("validate", "check a config and report the law assumptions");
  auto* run = app.add_subcommand("run", "run an experiment and write results");
  auto* summarize_cmd = app.add_subcommand("summarize", "recompute summary.json from written rows");
  auto* oracle = app.add_subcommand("oracle", "cross-check fast code paths against reference ones");
  for (auto* s : {validate, run, summarize_cmd, oracle}) add_common(s);
  oracle->add_option("--instances", o.instances, "random competition instances");
  oracle->add_option("--samples", o.samples, "trees per generator");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*run) return cmd_run(o);
    if (*summarize_cmd) return cmd_summarize(o);
    if (*oracle) return cmd_oracle(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ContractError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
