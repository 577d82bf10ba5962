#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "splitvor/error.hpp"
#include "splitvor/harness.hpp"

using namespace splitvor;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("splitvor_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig config(const std::string& body) {
  auto c = ExperimentConfig::parse(body);
  c.validate();
  return c;
}

}  // namespace

TEST_CASE("config grammar") {
  const auto c = config(R"(# comment
experiment_id = demo
split = mary:3   # trailing comment
edge = exp:2
n_grid = 2^4, 100
k = 3
speeds = 2, 3/2, 1
replicates = 5
master_seed = 99
sampling_mode = distinct
observables = voronoi, territories, fringe:0.5:log, fringe:2:olog:0.5
format = both
)");
  CHECK(c.experiment_id == "demo");
  CHECK(c.n_grid == std::vector<std::uint64_t>{16, 100});
  CHECK(c.speeds[1] == Speed(3, 2));
  CHECK(c.sampling_mode == SamplingMode::Distinct);
  CHECK(c.observables.size() == 4);
  CHECK(c.observables[2].label() == "fringe:0.5:log");
  CHECK(c.observables[3].rule.gamma == 0.5);
  CHECK(c.format == OutputFormat::Both);
  CHECK(c.to_json()["k"] == 3);

  CHECK(config("n_grid = 8\nobservables = profile\n").effective_speeds() == std::vector<Speed>{1, 1});
}

TEST_CASE("config errors are reported before any work") {
  const std::vector<std::string> bad{
      "n_grid = 8\nobservables = profile\nn_grid = 9\n",               // duplicate key
      "n_grid = 8\nobservables = profile\ncolour = red\n",             // unknown key
      "n_grid = 8\nobservables = profile\njust text\n",                // no '='
      "n_grid = 8, 8\nobservables = profile\n",                        // not increasing
      "n_grid = 8\nobservables = profile\nreplicates = 0\n",
      "n_grid = 8\nobservables = voronoi\nk = 2\nspeeds = 1\n",        // speeds length
      "n_grid = 8\nobservables = voronoi\nspeeds = 1, 0\n",
      "n_grid = 8\nobservables = nonsense\n",
      "n_grid = 8\nobservables = profile\nsplit = fixed:1,0\n",        // A1-i
      "n_grid = 8\nobservables = profile\nedge = pareto:0.9,1\n",      // A2
      "n_grid = 8\nobservables = fringe:2:log\n",                      // x at C(f)
      "n_grid = 2\nobservables = voronoi\nk = 3\nsampling_mode = distinct\n",
      "n_grid = 1\nobservables = heights\n",
      "n_grid = 8\n",
      "observables = profile\n",
      "n_grid = 8\nobservables = profile\nformat = xml\n",
  };
  for (const auto& text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(config(text), ConfigError);
  }
  try {
    config("n_grid = 8\nobservables = profile\nsplit = fixed:1,0\n");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("A1-i") != std::string::npos);
  }
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/dir/config.txt"), IoError);
}

TEST_CASE("a single-node profile gives one row") {
  auto c = config("n_grid = 1\nobservables = profile\nreplicates = 1\n");
  const auto r = run_experiment(c);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].observable == "profile");
  CHECK(r.rows[0].index == 0);
  CHECK(r.rows[0].value == 1.0);
  CHECK(r.failures.empty());
}

TEST_CASE("Voronoi rows partition every tree") {
  auto c = config("n_grid = 2^10\nobservables = voronoi\nk = 2\nreplicates = 100\nmaster_seed = 4\n");
  const auto r = run_experiment(c);
  std::map<std::uint64_t, double> total;
  for (const auto& row : r.rows) {
    CHECK(row.observable == "voronoi");
    CHECK(row.n == 1024);
    total[row.replicate] += row.value;
  }
  CHECK(total.size() == 100);
  for (const auto& [rep, sum] : total) CHECK(sum == 1024.0);
}

TEST_CASE("k = 3 gives three sorted cell rows per replicate") {
  auto c = config("n_grid = 50\nobservables = voronoi\nk = 3\nreplicates = 1\n");
  const auto r = run_experiment(c);
  REQUIRE(r.rows.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(r.rows[i].index == i + 1);
  CHECK(r.rows[0].value >= r.rows[1].value);
  CHECK(r.rows[1].value >= r.rows[2].value);
  const auto csv = to_csv(r.rows);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("output is identical across runs and worker counts") {
  const std::string body =
      "experiment_id = det\nsplit = gem:0.2,1\nedge = exp:1\nn_grid = 64, 300\nk = 3\nspeeds = 2, 1, 1\n"
      "replicates = 12\nmaster_seed = 17\nobservables = voronoi, territories, profile, heights, root_distances, "
      "lca, fringe:0.3:log\ndraws = 50\nreference_draws = 2000\nformat = both\n";
  std::vector<std::string> csv, jsonl, summary;
  for (std::size_t w : {1, 1, 3, 8}) {
    auto c = config(body);
    c.workers = w;
    c.output = scratch("det" + std::to_string(w) + "_" + std::to_string(csv.size()));
    emit(c, run_experiment(c));
    csv.push_back(slurp(c.output / "results.csv"));
    jsonl.push_back(slurp(c.output / "results.jsonl"));
    summary.push_back(slurp(c.output / "summary.json"));
    fs::remove_all(c.output);
  }
  for (std::size_t i = 1; i < csv.size(); ++i) {
    CHECK(csv[i] == csv[0]);
    CHECK(jsonl[i] == jsonl[0]);
    CHECK(summary[i] == summary[0]);
  }
  CHECK(csv[0].rfind(std::string(kCsvHeader) + "\n", 0) == 0);
}

TEST_CASE("empty result set gives a header-only CSV") {
  CHECK(to_csv({}) == std::string(kCsvHeader) + "\n");
  CHECK(parse_csv(to_csv({})).empty());
  CHECK(to_jsonl({}).empty());
}

TEST_CASE("CSV and JSON lines round-trip random rows") {
  Rng rng(12);
  const double specials[] = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                             0.0, -0.0, 5e-324, 1.7976931348623157e308, 0.1};
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<ResultRow> rows(rep);
    for (auto& r : rows) {
      r.experiment_id = rep % 2 ? "exp-" + std::to_string(rng() % 100) : "plain";
      r.n = rng() >> 30;
      r.replicate = rng() % 1000;
      r.seed = rng();
      r.observable = rep % 3 ? "fringe:0.5:olog:0.25" : "lca_S";
      r.index = std::int64_t(rng() % 20) - 1;
      r.value = rng() % 4 ? std::ldexp(standard_normal(rng), int(rng() % 200) - 100) : specials[rng() % 7];
    }
    const auto a = parse_csv(to_csv(rows));
    const auto b = parse_jsonl(to_jsonl(rows));
    REQUIRE(a.size() == rows.size());
    REQUIRE(b.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(a[i].same_columns(rows[i]));
      CHECK(b[i].same_columns(rows[i]));
      CHECK(std::signbit(a[i].value) == std::signbit(rows[i].value));
    }
  }
  std::vector<ResultRow> nan_row(1);
  nan_row[0].value = std::nan("");
  CHECK(format_value(nan_row[0].value) == "nan");
  CHECK(std::isnan(parse_csv(to_csv(nan_row))[0].value));
  CHECK_THROWS_AS(parse_csv("wrong,header\n"), IoError);
  CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\na,1,2\n"), IoError);
}

TEST_CASE("replicate seeds are distinct and depend on the experiment") {
  ExperimentConfig c;
  c.master_seed = 7;
  std::unordered_set<std::uint64_t> seen;
  const std::uint64_t count = 1u << 21;
  for (std::uint64_t r = 0; r < count; ++r) seen.insert(config_replicate_seed(c, r));
  CHECK(seen.size() == count);

  // spot-check the top of the 2^32 range
  std::unordered_set<std::uint64_t> top;
  for (std::uint64_t r = (1ull << 32) - 100000; r < (1ull << 32); ++r) top.insert(config_replicate_seed(c, r));
  CHECK(top.size() == 100000);

  ExperimentConfig d = c;
  d.experiment_id = "other";
  CHECK(config_replicate_seed(d, 0) != config_replicate_seed(c, 0));
  d = c;
  d.master_seed = 8;
  CHECK(config_replicate_seed(d, 0) != config_replicate_seed(c, 0));
  CHECK(experiment_key("a") != experiment_key("b"));
  CHECK(config_replicate_seed(c, 5) == config_replicate_seed(c, 5));
}

TEST_CASE("a failing replicate removes exactly its rows") {
  const std::string body = "n_grid = 100, 200\nobservables = voronoi, profile\nk = 2\nreplicates = 6\nmaster_seed = 3\n";
  auto ok = config(body);
  auto bad = config(body + "fail_replicates = 4\n");
  const auto a = run_experiment(ok);
  const auto b = run_experiment(bad);
  std::size_t rows_of_4 = 0;
  std::vector<ResultRow> expect;
  for (const auto& r : a.rows) {
    if (r.replicate == 4) {
      ++rows_of_4;
    } else {
      expect.push_back(r);
    }
  }
  CHECK(rows_of_4 > 0);
  CHECK(a.failures.empty());
  REQUIRE(b.failures.size() == 1);
  CHECK(b.failures[0].replicate == 4);
  REQUIRE(b.rows.size() == a.rows.size() - rows_of_4);
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(b.rows[i].same_columns(expect[i]));

  bad.output = scratch("fail");
  emit(bad, b);
  const auto s = nlohmann::json::parse(slurp(bad.output / "summary.json"));
  CHECK(s["failures"] == 1);
  fs::remove_all(bad.output);
}

TEST_CASE("emitted rows load back and summaries carry constants") {
  auto c = config("n_grid = 2^8, 2^10\nobservables = voronoi, heights, profile, lca\nk = 2\nreplicates = 20\n"
                  "draws = 100\nreference_draws = 5000\nformat = jsonl\n");
  c.output = scratch("load");
  const auto r = run_experiment(c);
  emit(c, r);
  CHECK_FALSE(fs::exists(c.output / "results.csv"));
  const auto back = load_rows(c);
  REQUIRE(back.size() == r.rows.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i].same_columns(r.rows[i]));

  const auto s = summarize(c, back, {});
  CHECK(s["constants"]["mu"].get<double>() == doctest::Approx(0.5));
  CHECK(s["groups"].size() >= 8);
  for (const auto& g : s["groups"]) {
    CHECK(g.contains("n"));
    CHECK(g.contains("observable"));
  }
  fs::remove_all(c.output);

  c.output = "/proc/definitely/not/writable";
  CHECK_THROWS_AS(emit(c, r), IoError);
}
