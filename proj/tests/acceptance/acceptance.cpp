// Acceptance checks. `acceptance <1..12> [data.json]` prints one PASS/FAIL
// line and exits 0 on pass. Criteria 5-12 read the samples written by
// `acceptance simulate <data.json>`, which grows one BST per replicate
// through n = 2^10, 2^12, 2^16, 2^20.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include <json.hpp>

#include "splitvor/competition.hpp"
#include "splitvor/reference.hpp"
#include "splitvor/statistics.hpp"

using namespace splitvor;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSeed = 20240611;
constexpr int kReplicates = 300;
constexpr std::uint32_t kSmall = 1u << 10, kMid = 1u << 12, kTail = 1u << 16, kBig = 1u << 20;

int report(int id, bool pass, const std::string& detail) {
  std::printf("AC%d %s %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  return pass ? 0 : 1;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

SplitLaw law_of(int i) {
  switch (i % 4) {
    case 0: return SplitLaw::bst();
    case 1: return SplitLaw::mary(3);
    case 2: return SplitLaw::gem(0.0, 1.0);
    default: return SplitLaw{ExplicitFinite::from_atoms({{{0.2, 0.8}, 0.5}, {{0.6, 0.4}, 0.5}})};
  }
}

EdgeLengthLaw edge_of(int i) {
  switch (i % 3) {
    case 0: return EdgeLengthLaw::unit();
    case 1: return EdgeLengthLaw::exponential(1.0);
    default: return EdgeLengthLaw::pareto(1.5, 1.0);
  }
}

std::map<std::string, std::uint64_t> count_shapes(std::size_t n, std::size_t reps, bool reference) {
  std::map<std::string, std::uint64_t> out;
  for (std::size_t i = 0; i < reps; ++i) {
    SplitTree t(SplitLaw::bst(), replicate_seed(kSeed, reference ? 11 : 10, i));
    if (reference) {
      while (t.size() < n) t.insert_next_reference();
    } else {
      t.grow_to(n);
    }
    ++out[t.shape_key()];
  }
  return out;
}

int ac1() {
  const auto exact = bst_shape_probabilities(5);
  const auto fast = count_shapes(5, 100000, false);
  const auto ref = count_shapes(5, 100000, true);
  std::vector<std::uint64_t> f, r;
  std::vector<double> p;
  std::uint64_t matched = 0;
  for (const auto& [key, prob] : exact) {
    const auto get = [&](const auto& m) { auto it = m.find(key); return it == m.end() ? 0 : it->second; };
    f.push_back(get(fast));
    r.push_back(get(ref));
    p.push_back(prob);
    matched += get(fast);
  }
  const auto a = chi_square_homogeneity(f, r);
  const auto b = chi_square_gof(f, p);
  const bool pass = a.p_value > 0.001 && b.p_value > 0.001 && matched == 100000;
  return report(1, pass,
                "shapes=" + std::to_string(exact.size()) + fmt(" p(fast vs reference)=%.4g", a.p_value) +
                    fmt(" p(fast vs 120 orderings)=%.4g", b.p_value));
}

struct Instance {
  std::unique_ptr<SplitTree> tree;
  MetricView view;
  CompetitionSpec spec;
};

Instance make_instance(std::uint64_t stream, int i, std::size_t n, std::size_t k, bool equal) {
  Rng rng(replicate_seed(kSeed, stream, i));
  auto tree = std::make_unique<SplitTree>(law_of(i), rng());
  tree->grow_to(n);
  MetricView view = assign_lengths(*tree, edge_of(i / 4), rng);
  auto spec = CompetitionSpec::equal_speeds(sample_sources(n, k, SamplingMode::WithReplacement, rng));
  if (!equal) {
    for (auto& s : spec.speeds) {
      s = Speed(std::uniform_int_distribution<int>(1, 9)(rng), std::uniform_int_distribution<int>(1, 4)(rng));
    }
  }
  return Instance{std::move(tree), std::move(view), std::move(spec)};
}

int ac2() {
  const std::size_t ks[] = {2, 3, 5};
  int same = 0;
  const int total = 1000;
  for (int i = 0; i < total; ++i) {
    const auto in = make_instance(20, i, 500, ks[(i / 12) % 3], true);
    same += voronoi_cells(in.view, in.spec).owner == simulate_epidemics(in.view, in.spec).owner;
  }
  return report(2, same == total, "identical owner vectors in " + std::to_string(same) + "/" + std::to_string(total));
}

int ac3() {
  int same = 0;
  double worst = 0.0;
  const int total = 500;
  for (int i = 0; i < total; ++i) {
    Rng pick(replicate_seed(kSeed, 31, i));
    const std::size_t n = 2 + pick() % 49;
    const std::size_t k = 2 + pick() % 4;
    const auto in = make_instance(30, i, n, k, false);
    const auto dp = earliest_arrival_dp(in.view, in.spec);
    const auto q = simulate_epidemics(in.view, in.spec);
    same += dp.owner == q.owner;
    for (std::size_t v = 0; v < n; ++v) {
      const double t = dp.distance[v] / in.spec.speeds[dp.owner[v]].value();
      worst = std::max(worst, std::abs(t - q.arrival_time[v]) / std::max(1.0, t));
    }
  }
  return report(3, same == total,
                "owner vectors equal to the DP oracle in " + std::to_string(same) + "/" + std::to_string(total) +
                    fmt(", max relative arrival-time gap %.2g", worst));
}

int ac4() {
  int same_len = 0, same_speed = 0;
  const int total = 100;
  for (int i = 0; i < total; ++i) {
    const auto in = make_instance(40, i, 500, 2 + i % 4, false);
    const auto base = simulate_epidemics(in.view, in.spec).owner;
    same_len += simulate_epidemics(in.view.scaled(7.3), in.spec).owner == base;
    auto faster = in.spec;
    for (auto& s : faster.speeds) s = Speed(s.num * 5, s.den * 2);
    same_speed += simulate_epidemics(in.view, faster).owner == base;
  }
  return report(4, same_len == total && same_speed == total,
                "lengths x7.3: " + std::to_string(same_len) + "/100 identical, speeds x2.5: " +
                    std::to_string(same_speed) + "/100 identical");
}

// ---- shared simulation for criteria 5-12 ----

void simulate(const std::string& path) {
  const auto unit = LimitLawSpec::from_moments(moment_constants(SplitLaw::bst(), EdgeLengthLaw::unit()));
  const auto exp = LimitLawSpec::from_moments(moment_constants(SplitLaw::bst(), EdgeLengthLaw::exponential(1.0)));
  const auto par = LimitLawSpec::from_moments(moment_constants(SplitLaw::bst(), EdgeLengthLaw::pareto(1.5, 1.0)));
  const auto moments = moment_constants(SplitLaw::bst(), EdgeLengthLaw::unit());
  json out;
  auto& stage = out["stages"];
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < kReplicates; ++r) {
    SplitTree t(SplitLaw::bst(), replicate_seed(kSeed, 50, r));
    for (std::uint32_t n : {kSmall, kMid, kTail, kBig}) {
      t.grow_to(n);
      auto& s = stage[std::to_string(n)];
      Rng rng(stream_seed(replicate_seed(kSeed, 51, r), n));
      const auto lattice = MetricView::lattice(t);
      const double ln = std::log(double(n));

      // Voronoi, k = 2
      const auto vor = voronoi_cells(lattice, CompetitionSpec::equal_speeds(
                                                  sample_sources(n, 2, SamplingMode::WithReplacement, rng)));
      s["V1"].push_back(double(vor.sorted_sizes[0]) / n);
      s["V2"].push_back(std::log(double(vor.sorted_sizes[1]) / n) / std::sqrt(ln));

      if (n == kTail) {
        if (r < 100) {
          const auto pv = assign_lengths(t, EdgeLengthLaw::pareto(1.5, 1.0), rng);
          for (double v : root_distance_sample(pv, 100, par, rng).values) s["pareto"].push_back(v);
        }
        continue;
      }
      if (n == kSmall) continue;

      // epidemics, speeds (2, 1)
      auto spec = CompetitionSpec::equal_speeds(sample_sources(n, 2, SamplingMode::WithReplacement, rng));
      spec.speeds = {Speed(2), Speed(1)};
      const auto ter = simulate_epidemics(lattice, spec);
      s["W2"].push_back(std::log(double(ter.sorted_sizes[1]) / n) / ln);

      // LCA, k = 3
      s["H3"].push_back(lca_statistics(lattice, CompetitionSpec::equal_speeds(
                                                    sample_sources(n, 3, SamplingMode::WithReplacement, rng)))
                            .H);

      if (r < 100) {
        const auto prof = profile(t, unit.mu);
        s["profile_ks"].push_back(prof.ks_to([](double z) { return normal_cdf(z); }));
        s["profile_ks_sigma"].push_back(prof.ks_to([&](double z) { return normal_cdf(z, 0.0, std::sqrt(unit.sigma2)); }));
      }
      if (n != kBig) continue;

      if (r < 100) {
        for (int j = 0; j < 100; ++j) {
          const NodeId u = sample_sources(n, 1, SamplingMode::WithReplacement, rng)[0];
          s["height_ratio"].push_back(t.height(u) / ln);
          s["height_z"].push_back((t.height(u) - unit.height_center(n)) / unit.height_scale(n));
        }
        const auto pv = assign_lengths(t, EdgeLengthLaw::pareto(1.5, 1.0), rng);
        for (double v : root_distance_sample(pv, 100, par, rng).values) s["pareto"].push_back(v);
        const auto ev = assign_lengths(t, EdgeLengthLaw::exponential(1.0), rng);
        for (double v : root_distance_sample(ev, 100, exp, rng).values) s["exponential"].push_back(v);
      }
      if (r < 200) {
        const NodeId u = sample_sources(n, 1, SamplingMode::WithReplacement, rng)[0];
        const auto D = fringe_size(lattice, u, 0.5, FringeRule::log(), moments);
        s["fringe"].push_back(std::log(double(D) / n) / (0.5 * ln));
      }
    }
    if ((r + 1) % 25 == 0) {
      const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::fprintf(stderr, "simulate: %d/%d replicates, %.0f s\n", r + 1, kReplicates, el);
    }
  }
  Rng ref(replicate_seed(kSeed, 60, 0));
  for (const auto& row : limit_reference_sample(unit, 2, 100000, ref)) out["reference_gap"].push_back(row[0]);
  std::ofstream f(path);
  f << out.dump() << "\n";
  if (!f) throw std::runtime_error("cannot write " + path);
}

// -inf is stored as null by the JSON writer.
std::vector<double> values(const json& a) {
  std::vector<double> v;
  for (const auto& x : a) v.push_back(x.is_null() ? -std::numeric_limits<double>::infinity() : x.get<double>());
  return v;
}

std::vector<double> finite(std::vector<double> v) {
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  return v;
}

int evaluate(int id, const json& d) {
  const auto& st = d["stages"];
  const auto at = [&](std::uint32_t n, const char* key) { return values(st[std::to_string(n)][key]); };
  switch (id) {
    case 5: {
      const double m = mean(at(kBig, "height_ratio"));
      const double ks = ks_distance(at(kBig, "height_z"), [](double z) { return normal_cdf(z, 0.0, 0.5); });
      return report(5, m >= 1.96 && m <= 2.04 && ks <= 0.08,
                    fmt("mean |U|/ln n = %.4f (need [1.96, 2.04]);", m) +
                        fmt(" KS vs N(0, 0.25) = %.4f (need <= 0.08);", ks) +
                        " draws=" + std::to_string(at(kBig, "height_z").size()));
    }
    case 6: {
      const auto big = at(kBig, "profile_ks");
      const auto mid = at(kMid, "profile_ks");
      int better = 0;
      for (std::size_t i = 0; i < big.size(); ++i) better += big[i] < mid[i];
      const auto sig = at(kBig, "profile_ks_sigma");
      return report(6, big[0] <= 0.08 && better >= 80,
                    fmt("KS vs N(0,1) at 2^20 = %.4f (need <= 0.08);", big[0]) + " smaller at 2^20 than 2^12 in " +
                        std::to_string(better) + "/" + std::to_string(big.size()) + " (need >= 80);" +
                        fmt(" diagnostic KS vs N(0, sigma^2) at 2^20 = %.4f", sig[0]));
    }
    case 7: {
      const double m20 = median(at(kBig, "V1"));
      const double m10 = median(at(kSmall, "V1"));
      return report(7, m20 >= 0.6 && m20 > m10,
                    fmt("median V1/n at 2^20 = %.4f (need >= 0.6);", m20) + fmt(" at 2^10 = %.4f", m10));
    }
    case 8: {
      const auto ref = values(d["reference_gap"]);
      const auto big = at(kBig, "V2"), mid = at(kMid, "V2");
      const double ks20 = ks_distance(finite(big), ref);
      const double ks12 = ks_distance(finite(mid), ref);
      const auto empties = big.size() - finite(big).size();
      return report(8, ks20 <= 0.15 && ks20 < ks12,
                    fmt("KS at 2^20 = %.4f (need <= 0.15);", ks20) + fmt(" KS at 2^12 = %.4f;", ks12) +
                        " empty second cells at 2^20: " + std::to_string(empties));
    }
    case 9: {
      const double m20 = median(at(kBig, "W2"));
      const double m12 = median(at(kMid, "W2"));
      const double target = -1.0 / 3.0;
      return report(9, std::abs(m20 - target) <= 0.12 && std::abs(m20 - target) < std::abs(m12 - target),
                    fmt("median log(W2/n)/log n at 2^20 = %.4f (need -1/3 +- 0.12);", m20) +
                        fmt(" at 2^12 = %.4f", m12));
    }
    case 10: {
      const auto f = at(kBig, "fringe");
      const double m = median(f);
      return report(10, std::abs(m + 0.5) <= 0.1,
                    fmt("median log(D/n)/(x log n) = %.4f (need -0.5 +- 0.1);", m) +
                        " replicates=" + std::to_string(f.size()));
    }
    case 11: {
      const auto p16 = at(kTail, "pareto"), p20 = at(kBig, "pareto"), e20 = at(kBig, "exponential");
      const double ks = ks_distance(p16, p20);
      const double kp = excess_kurtosis(p20), ke = excess_kurtosis(e20);
      return report(11, ks <= 0.1 && kp >= 3 * ke,
                    fmt("KS(2^16, 2^20) = %.4f (need <= 0.1);", ks) + fmt(" excess kurtosis Pareto = %.3f,", kp) +
                        fmt(" exponential = %.3f (need ratio >= 3)", ke));
    }
    case 12: {
      const double q20 = quantile(at(kBig, "H3"), 0.95);
      const double q12 = quantile(at(kMid, "H3"), 0.95);
      return report(12, q20 - q12 <= 1.0,
                    fmt("0.95-quantile of H at 2^20 = %.2f,", q20) + fmt(" at 2^12 = %.2f (need difference <= 1)", q12));
    }
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <1..12> [data.json] | acceptance simulate <data.json>\n");
    return 2;
  }
  const std::string what = argv[1];
  try {
    if (what == "simulate") {
      if (argc < 3) return 2;
      simulate(argv[2]);
      return 0;
    }
    const int id = std::stoi(what);
    switch (id) {
      case 1: return ac1();
      case 2: return ac2();
      case 3: return ac3();
      case 4: return ac4();
      default: break;
    }
    if (id < 5 || id > 12 || argc < 3) return 2;
    std::ifstream in(argv[2]);
    if (!in) {
      std::fprintf(stderr, "cannot read %s\n", argv[2]);
      return 2;
    }
    return evaluate(id, json::parse(in));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
