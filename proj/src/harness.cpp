#include "splitvor/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "splitvor/error.hpp"
#include "splitvor/metric.hpp"
#include "splitvor/split_tree.hpp"

namespace splitvor {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view s, std::string_view key) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw ConfigError("bad value '" + std::string(s) + "' for " + std::string(key));
  }
  return v;
}

std::uint64_t parse_size(std::string_view s, std::string_view key) {
  if (auto caret = s.find('^'); caret != std::string_view::npos) {
    const auto base = parse_number<std::uint64_t>(trim(s.substr(0, caret)), key);
    const auto exp = parse_number<std::uint64_t>(trim(s.substr(caret + 1)), key);
    std::uint64_t v = 1;
    for (std::uint64_t i = 0; i < exp; ++i) {
      if (v > (std::uint64_t(1) << 40)) throw ConfigError("value too large for " + std::string(key));
      v *= base;
    }
    return v;
  }
  return parse_number<std::uint64_t>(s, key);
}

bool valid_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

double parse_value(std::string_view s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  return parse_number<double>(s, "value");
}

struct Laws {
  SplitLaw split;
  EdgeLengthLaw edge;
  MomentConstants moments;
};

Laws resolve_laws(const ExperimentConfig& c) {
  Laws l{parse_split_law(c.split), parse_edge_law(c.edge), {}};
  try {
    l.moments = moment_constants(l.split, l.edge);
  } catch (const BudgetError& e) {
    throw ConfigError(std::string("moment constants unavailable: ") + e.what());
  }
  return l;
}

std::vector<ResultRow> run_replicate(const ExperimentConfig& c, const Laws& laws,
                                     const std::vector<Speed>& speeds, std::uint64_t r) {
  const std::uint64_t seed = config_replicate_seed(c, r);
  if (std::find(c.fail_replicates.begin(), c.fail_replicates.end(), r) != c.fail_replicates.end()) {
    throw std::runtime_error("injected failure");
  }
  const bool any_sources = std::any_of(c.observables.begin(), c.observables.end(),
                                       [](const Observable& o) { return o.needs_sources(); });
  std::vector<ResultRow> rows;
  SplitTree tree(laws.split, stream_seed(seed, 0));
  for (const std::uint64_t n : c.n_grid) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t first = rows.size();
    tree.grow_to(n);
    Rng rng(stream_seed(seed, n));
    const MetricView view = assign_lengths(tree, laws.edge, rng);
    CompetitionSpec spec;
    if (any_sources) {
      spec.sources = sample_sources(n, c.k, c.sampling_mode, rng);
      spec.speeds.assign(c.k, Speed(1));
      spec.mode = c.sampling_mode;
    }
    auto emit = [&](const std::string& label, std::int64_t index, double value) {
      rows.push_back(ResultRow{c.experiment_id, n, r, seed, label, index, value, 0.0});
    };
    for (const Observable& o : c.observables) {
      const std::string label = o.label();
      switch (o.kind) {
        case Observable::Kind::Voronoi: {
          const auto res = voronoi_cells(view, spec);
          for (std::size_t i = 0; i < res.sorted_sizes.size(); ++i) {
            emit(label, static_cast<std::int64_t>(i + 1), static_cast<double>(res.sorted_sizes[i]));
          }
          break;
        }
        case Observable::Kind::Territories: {
          CompetitionSpec s = spec;
          s.speeds = speeds;
          const auto res = simulate_epidemics(view, s);
          for (std::size_t i = 0; i < res.sorted_sizes.size(); ++i) {
            emit(label, static_cast<std::int64_t>(i + 1), static_cast<double>(res.sorted_sizes[i]));
          }
          break;
        }
        case Observable::Kind::Profile: {
          const auto p = profile(tree);
          for (std::size_t h = 0; h < p.counts.size(); ++h) {
            emit(label, static_cast<std::int64_t>(h), static_cast<double>(p.counts[h]));
          }
          break;
        }
        case Observable::Kind::Heights: {
          const auto spec_l = LimitLawSpec::from_moments(laws.moments);
          const auto s = uniform_height_sample(tree, c.draws, spec_l, rng);
          for (std::size_t i = 0; i < s.values.size(); ++i) emit(label, static_cast<std::int64_t>(i), s.values[i]);
          break;
        }
        case Observable::Kind::RootDistances: {
          const auto spec_l = LimitLawSpec::from_moments(laws.moments);
          const auto s = root_distance_sample(view, c.draws, spec_l, rng);
          for (std::size_t i = 0; i < s.values.size(); ++i) emit(label, static_cast<std::int64_t>(i), s.values[i]);
          break;
        }
        case Observable::Kind::Lca: {
          const auto d = lca_statistics(view, spec);
          emit("lca_H", 0, static_cast<double>(d.H));
          for (std::size_t i = 0; i < d.S.size(); ++i) {
            emit("lca_S", static_cast<std::int64_t>(i + 1), static_cast<double>(d.S[i]) / static_cast<double>(n));
          }
          break;
        }
        case Observable::Kind::Fringe: {
          for (std::size_t i = 0; i < spec.sources.size(); ++i) {
            const auto D = fringe_size(view, spec.sources[i], o.x, o.rule, laws.moments);
            emit(label, static_cast<std::int64_t>(i + 1), static_cast<double>(D));
          }
          break;
        }
      }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (std::size_t i = first; i < rows.size(); ++i) rows[i].wall_time = secs;
  }
  return rows;
}

nlohmann::json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return format_value(v);
}

nlohmann::json describe_values(std::vector<double> v) {
  nlohmann::json j;
  std::vector<double> finite;
  for (double x : v) {
    if (std::isfinite(x)) finite.push_back(x);
  }
  j["count"] = v.size();
  j["non_finite"] = v.size() - finite.size();
  if (!v.empty()) {
    j["median"] = number_or_string(median(v));
    j["q05"] = number_or_string(quantile(v, 0.05));
    j["q95"] = number_or_string(quantile(v, 0.95));
  }
  if (!finite.empty()) j["mean"] = mean(finite);
  return j;
}

}  // namespace

Observable Observable::parse(std::string_view text) {
  text = trim(text);
  Observable o;
  if (text == "voronoi") {
    o.kind = Kind::Voronoi;
  } else if (text == "territories") {
    o.kind = Kind::Territories;
  } else if (text == "profile") {
    o.kind = Kind::Profile;
  } else if (text == "heights") {
    o.kind = Kind::Heights;
  } else if (text == "root_distances") {
    o.kind = Kind::RootDistances;
  } else if (text == "lca") {
    o.kind = Kind::Lca;
  } else if (text.starts_with("fringe:")) {
    // fringe:x:log or fringe:x:olog:gamma
    const auto parts = split_list(text, ':');
    o.kind = Kind::Fringe;
    if (parts.size() < 3) throw ConfigError("fringe observable needs fringe:x:log or fringe:x:olog:gamma");
    o.x = parse_number<double>(parts[1], "fringe x");
    if (parts[2] == "log" && parts.size() == 3) {
      o.rule = FringeRule::log();
    } else if (parts[2] == "olog" && parts.size() == 4) {
      o.rule = FringeRule::olog(parse_number<double>(parts[3], "fringe gamma"));
    } else {
      throw ConfigError("fringe growth rule must be log or olog:gamma, got '" + std::string(text) + "'");
    }
  } else {
    throw ConfigError("unknown observable '" + std::string(text) + "'");
  }
  return o;
}

std::string Observable::label() const {
  switch (kind) {
    case Kind::Voronoi: return "voronoi";
    case Kind::Territories: return "territories";
    case Kind::Profile: return "profile";
    case Kind::Heights: return "heights";
    case Kind::RootDistances: return "root_distances";
    case Kind::Lca: return "lca";
    case Kind::Fringe: {
      std::string s = "fringe:" + format_value(x) + ":";
      if (rule.kind == FringeRule::Kind::Log) return s + "log";
      return s + "olog:" + format_value(rule.gamma);
    }
  }
  return "?";
}

bool Observable::needs_sources() const {
  return kind == Kind::Voronoi || kind == Kind::Territories || kind == Kind::Lca || kind == Kind::Fringe;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? end : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " + key);

    if (key == "experiment_id") {
      c.experiment_id = std::string(value);
    } else if (key == "split") {
      c.split = std::string(value);
    } else if (key == "edge") {
      c.edge = std::string(value);
    } else if (key == "n_grid") {
      c.n_grid.clear();
      for (auto t : split_list(value, ',')) c.n_grid.push_back(parse_size(t, key));
    } else if (key == "k") {
      c.k = parse_number<std::size_t>(value, key);
    } else if (key == "speeds") {
      c.speeds.clear();
      for (auto t : split_list(value, ',')) c.speeds.push_back(Speed::parse(t));
    } else if (key == "replicates") {
      c.replicates = parse_size(value, key);
    } else if (key == "master_seed") {
      c.master_seed = parse_number<std::uint64_t>(value, key);
    } else if (key == "sampling_mode") {
      c.sampling_mode = parse_sampling_mode(value);
    } else if (key == "observables") {
      c.observables.clear();
      for (auto t : split_list(value, ',')) c.observables.push_back(Observable::parse(t));
    } else if (key == "draws") {
      c.draws = parse_size(value, key);
    } else if (key == "reference_draws") {
      c.reference_draws = parse_size(value, key);
    } else if (key == "output") {
      c.output = std::string(value);
    } else if (key == "workers") {
      c.workers = parse_number<std::size_t>(value, key);
    } else if (key == "format") {
      if (value == "csv") {
        c.format = OutputFormat::Csv;
      } else if (value == "jsonl") {
        c.format = OutputFormat::Jsonl;
      } else if (value == "both") {
        c.format = OutputFormat::Both;
      } else {
        throw ConfigError("format must be csv, jsonl or both");
      }
    } else if (key == "fail_replicates") {
      c.fail_replicates.clear();
      if (!value.empty()) {
        for (auto t : split_list(value, ',')) c.fail_replicates.push_back(parse_number<std::uint64_t>(t, key));
      }
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key " + key);
    }
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

std::vector<Speed> ExperimentConfig::effective_speeds() const {
  if (speeds.empty()) return std::vector<Speed>(k, Speed(1));
  return speeds;
}

void ExperimentConfig::validate() const {
  if (!valid_id(experiment_id)) {
    throw ConfigError("experiment_id must be non-empty and use only letters, digits, '_', '-', '.'");
  }
  if (n_grid.empty()) throw ConfigError("n_grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1) throw ConfigError("tree sizes must be at least 1");
    if (n_grid[i] > (std::uint64_t(1) << 31)) throw ConfigError("tree size above 2^31");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw ConfigError("n_grid must be strictly increasing");
  }
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (observables.empty()) throw ConfigError("no observables requested");

  const bool any_sources = std::any_of(observables.begin(), observables.end(),
                                       [](const Observable& o) { return o.needs_sources(); });
  if (any_sources && k < 1) throw ConfigError("k must be at least 1");
  if (!speeds.empty() && speeds.size() != k) {
    throw ConfigError("speeds lists " + std::to_string(speeds.size()) + " values for k = " + std::to_string(k));
  }
  for (const Speed& s : speeds) {
    if (s.num <= 0) throw ConfigError("speeds must be positive");
  }
  if (any_sources && sampling_mode == SamplingMode::Distinct && k > n_grid.front()) {
    throw ConfigError("cannot place " + std::to_string(k) + " distinct sources in a tree of " +
                      std::to_string(n_grid.front()) + " nodes");
  }

  const Laws laws = resolve_laws(*this);
  const ValidationReport report = validate_law(laws.split, laws.edge);
  if (const AssumptionCheck* bad = report.first_violation()) {
    throw ConfigError("assumption " + bad->name + " violated: " + bad->detail);
  }
  for (const Observable& o : observables) {
    switch (o.kind) {
      case Observable::Kind::Heights:
      case Observable::Kind::RootDistances:
        if (n_grid.front() < 2) throw ConfigError(o.label() + " needs every tree size >= 2");
        if (draws < 1) throw ConfigError("draws must be at least 1");
        break;
      case Observable::Kind::Lca:
        if (k < 2) throw ConfigError("lca needs k >= 2");
        break;
      case Observable::Kind::Fringe:
        if (!(o.x > 0.0)) throw ConfigError("fringe x must be positive");
        if (o.rule.kind == FringeRule::Kind::Log && !(o.x < laws.moments.EL / laws.moments.mu)) {
          throw ConfigError("fringe x = " + format_value(o.x) + " must be below C(f) = EL/mu = " +
                            format_value(laws.moments.EL / laws.moments.mu) + " for f = log n");
        }
        if (o.rule.kind == FringeRule::Kind::OLog && !(o.rule.gamma > 0.0 && o.rule.gamma < 1.0)) {
          throw ConfigError("olog exponent must lie in (0, 1)");
        }
        break;
      default:
        break;
    }
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["experiment_id"] = experiment_id;
  j["split"] = split;
  j["edge"] = edge;
  j["n_grid"] = n_grid;
  j["k"] = k;
  std::vector<std::string> sp;
  for (const Speed& s : effective_speeds()) sp.push_back(s.to_string());
  j["speeds"] = sp;
  j["replicates"] = replicates;
  j["master_seed"] = master_seed;
  j["sampling_mode"] = std::string(to_string(sampling_mode));
  std::vector<std::string> obs;
  for (const Observable& o : observables) obs.push_back(o.label());
  j["observables"] = obs;
  j["draws"] = draws;
  j["reference_draws"] = reference_draws;
  return j;
}

bool ResultRow::same_columns(const ResultRow& o) const {
  const bool values_equal = (std::isnan(value) && std::isnan(o.value)) || value == o.value;
  return experiment_id == o.experiment_id && n == o.n && replicate == o.replicate && seed == o.seed &&
         observable == o.observable && index == o.index && values_equal;
}

std::uint64_t experiment_key(std::string_view id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_replicate_seed(const ExperimentConfig& c, std::uint64_t replicate) {
  return replicate_seed(c.master_seed, experiment_key(c.experiment_id), replicate);
}

ResultSet run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Laws laws = resolve_laws(config);
  const std::vector<Speed> speeds = config.effective_speeds();
  const auto start = std::chrono::steady_clock::now();

  struct Slot {
    std::vector<ResultRow> rows;
    bool failed = false;
    std::string message;
  };
  std::vector<Slot> slots(config.replicates);
  std::atomic<std::uint64_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    while (true) {
      const std::uint64_t r = next.fetch_add(1);
      if (r >= config.replicates) return;
      try {
        slots[r].rows = run_replicate(config, laws, speeds, r);
      } catch (const std::exception& e) {
        slots[r].rows.clear();
        slots[r].failed = true;
        slots[r].message = e.what();
        std::lock_guard lock(log_mutex);
        std::cerr << "replicate " << r << " failed: " << e.what() << "\n";
      }
    }
  };

  const std::size_t nthreads =
      static_cast<std::size_t>(std::min<std::uint64_t>(config.workers, config.replicates));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < nthreads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ResultSet out;
  for (std::uint64_t r = 0; r < config.replicates; ++r) {
    if (slots[r].failed) {
      out.failures.push_back({r, slots[r].message});
      continue;
    }
    std::move(slots[r].rows.begin(), slots[r].rows.end(), std::back_inserter(out.rows));
  }
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return a.n != b.n ? a.n < b.n : a.replicate < b.replicate;
  });
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string to_csv(const std::vector<ResultRow>& rows) {
  std::string s(kCsvHeader);
  s.push_back('\n');
  for (const ResultRow& r : rows) {
    s += r.experiment_id;
    s += ',' + std::to_string(r.n) + ',' + std::to_string(r.replicate) + ',' + std::to_string(r.seed) + ',';
    s += r.observable;
    s += ',' + std::to_string(r.index) + ',' + format_value(r.value) + '\n';
  }
  return s;
}

std::vector<ResultRow> parse_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  std::size_t start = 0;
  bool header = true;
  std::size_t line_no = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? end : end - start);
    start = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      if (line != kCsvHeader) throw IoError("unexpected CSV header");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_list(line, ',');
    if (f.size() != 7) throw IoError("CSV line " + std::to_string(line_no) + " has " + std::to_string(f.size()) + " fields");
    ResultRow r;
    r.experiment_id = std::string(f[0]);
    r.n = parse_number<std::uint64_t>(f[1], "n");
    r.replicate = parse_number<std::uint64_t>(f[2], "replicate");
    r.seed = parse_number<std::uint64_t>(f[3], "seed");
    r.observable = std::string(f[4]);
    r.index = parse_number<std::int64_t>(f[5], "index");
    r.value = parse_value(f[6]);
    rows.push_back(std::move(r));
  }
  if (header) throw IoError("CSV header missing");
  return rows;
}

std::string to_jsonl(const std::vector<ResultRow>& rows) {
  std::string s;
  for (const ResultRow& r : rows) {
    nlohmann::ordered_json j;
    j["experiment_id"] = r.experiment_id;
    j["n"] = r.n;
    j["replicate"] = r.replicate;
    j["seed"] = r.seed;
    j["observable"] = r.observable;
    j["index"] = r.index;
    j["value"] = number_or_string(r.value);
    s += j.dump();
    s.push_back('\n');
  }
  return s;
}

std::vector<ResultRow> parse_jsonl(std::string_view text) {
  std::vector<ResultRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    ResultRow r;
    r.experiment_id = j.at("experiment_id").get<std::string>();
    r.n = j.at("n").get<std::uint64_t>();
    r.replicate = j.at("replicate").get<std::uint64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.observable = j.at("observable").get<std::string>();
    r.index = j.at("index").get<std::int64_t>();
    const auto& v = j.at("value");
    r.value = v.is_string() ? parse_value(v.get<std::string>()) : v.get<double>();
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::json summarize(const ExperimentConfig& config, const std::vector<ResultRow>& rows,
                         const std::vector<ReplicateFailure>& failures) {
  const Laws laws = resolve_laws(config);
  const LimitLawSpec limit = LimitLawSpec::from_moments(laws.moments);

  nlohmann::json out;
  out["experiment_id"] = config.experiment_id;
  out["config"] = config.to_json();
  out["rows"] = rows.size();
  out["failures"] = failures.size();
  nlohmann::json failed = nlohmann::json::array();
  for (const auto& f : failures) failed.push_back({{"replicate", f.replicate}, {"message", f.message}});
  out["failed_replicates"] = failed;
  out["constants"] = {{"mu", laws.moments.mu},
                      {"sigma2", laws.moments.sigma2},
                      {"EL", laws.moments.EL},
                      {"VarL", number_or_string(laws.moments.VarL)},
                      {"alpha", laws.moments.alpha},
                      {"mu_std_error", laws.moments.estimation_error},
                      {"limit_kind", limit.kind == LimitLawSpec::Kind::Gaussian ? "gaussian" : "stable"},
                      {"limit_variance", number_or_string(limit.variance)},
                      {"frak_v", limit.frak_v()},
                      {"prefactor", limit.prefactor()}};

  // (n, observable) -> replicate -> index -> value, in emitted order.
  std::map<std::pair<std::uint64_t, std::string>, std::map<std::uint64_t, std::vector<std::pair<std::int64_t, double>>>> groups;
  for (const ResultRow& r : rows) groups[{r.n, r.observable}][r.replicate].emplace_back(r.index, r.value);

  std::vector<double> reference_gap;
  Rng ref_rng(stream_seed(config.master_seed, 0x5eedULL));

  nlohmann::json gs = nlohmann::json::array();
  for (const auto& [key, reps] : groups) {
    const auto& [n, obs] = key;
    const double nd = static_cast<double>(n);
    nlohmann::json g;
    g["n"] = n;
    g["observable"] = obs;
    g["replicates"] = reps.size();
    if (n >= 2) {
      g["standardization"] = {{"height_center", limit.height_center(nd)},
                              {"height_scale", limit.height_scale(nd)},
                              {"root_center", limit.root_center(nd)},
                              {"root_scale", limit.root_scale(nd)},
                              {"v_n", limit.v_n(nd)}};
    }
    std::vector<double> all;
    std::map<std::int64_t, std::vector<double>> by_index;
    for (const auto& [rep, vals] : reps) {
      for (const auto& [i, v] : vals) {
        all.push_back(v);
        by_index[i].push_back(v);
      }
    }

    if (obs == "profile") {
      std::vector<double> ks;
      for (const auto& [rep, vals] : reps) {
        ProfileHistogram p;
        for (const auto& [h, c] : vals) {
          if (static_cast<std::size_t>(h) >= p.counts.size()) p.counts.resize(h + 1, 0);
          p.counts[h] = static_cast<std::uint64_t>(c);
          p.n += static_cast<std::uint64_t>(c);
        }
        if (n >= 2) {
          p.center = limit.height_center(nd);
          p.scale = limit.height_scale(nd);
          ks.push_back(p.ks_to([](double x) { return normal_cdf(x); }));
        }
        g["mean_height"] = p.mean_height();
      }
      if (!ks.empty()) g["ks_standard_normal"] = describe_values(ks);
    } else if (obs == "heights" || obs == "root_distances") {
      g["values"] = describe_values(all);
      std::vector<double> finite;
      for (double v : all) {
        if (std::isfinite(v)) finite.push_back(v);
      }
      if (finite.size() >= 2) {
        g["variance"] = variance(finite);
        g["excess_kurtosis"] = excess_kurtosis(finite);
      }
      if (!finite.empty()) {
        double sd = -1.0;
        if (obs == "heights") {
          sd = std::sqrt(limit.sigma2);
        } else if (limit.kind == LimitLawSpec::Kind::Gaussian) {
          sd = std::sqrt(limit.variance) / limit.EL;
        }
        if (sd > 0.0) g["ks_limit_gaussian"] = ks_distance(finite, [sd](double x) { return normal_cdf(x, 0.0, sd); });
      }
    } else {
      g["values"] = describe_values(all);
      nlohmann::json per = nlohmann::json::array();
      for (const auto& [i, v] : by_index) {
        nlohmann::json e = describe_values(v);
        e["index"] = i;
        if (obs == "voronoi" || obs == "territories") {
          std::vector<double> logs;
          for (double s : v) logs.push_back(s > 0 ? std::log(s / nd) : -std::numeric_limits<double>::infinity());
          e["log_ratio"] = describe_values(logs);
        }
        per.push_back(e);
      }
      g["per_index"] = per;
      if (obs == "voronoi" && config.k >= 2 && n >= 2 && by_index.count(2)) {
        if (reference_gap.empty()) {
          for (const auto& row : limit_reference_sample(limit, 2, config.reference_draws, ref_rng)) {
            reference_gap.push_back(row[0]);
          }
        }
        std::vector<double> second;
        std::size_t empty = 0;
        for (double s : by_index[2]) {
          if (s > 0) {
            second.push_back(std::log(s / nd) / std::sqrt(std::log(nd)));
          } else {
            ++empty;
          }
        }
        if (!second.empty()) g["ks_second_cell_vs_limit"] = ks_distance(second, reference_gap);
        g["empty_second_cells"] = empty;
      }
    }
    gs.push_back(g);
  }
  out["groups"] = gs;
  return out;
}

void emit(const ExperimentConfig& config, const ResultSet& results) {
  std::error_code ec;
  std::filesystem::create_directories(config.output, ec);
  if (ec) throw IoError("cannot create " + config.output.string() + ": " + ec.message());
  if (config.format != OutputFormat::Jsonl) write_file(config.output / "results.csv", to_csv(results.rows));
  if (config.format != OutputFormat::Csv) write_file(config.output / "results.jsonl", to_jsonl(results.rows));
  write_file(config.output / "summary.json", summarize(config, results.rows, results.failures).dump(2) + "\n");
}

std::vector<ResultRow> load_rows(const ExperimentConfig& config) {
  const auto csv = config.output / "results.csv";
  if (std::filesystem::exists(csv)) return parse_csv(read_file(csv));
  const auto jsonl = config.output / "results.jsonl";
  if (std::filesystem::exists(jsonl)) return parse_jsonl(read_file(jsonl));
  throw IoError("no results under " + config.output.string());
}

}  // namespace splitvor
