#include "splitvor/laws.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "splitvor/error.hpp"

namespace splitvor {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string fmt_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

bool is_coordinate_vector(std::span<const double> y) {
  int ones = 0;
  for (double v : y) {
    if (v == 1.0) {
      ++ones;
    } else if (v != 0.0) {
      return false;
    }
  }
  return ones == 1;
}

double parse_number(std::string_view s, std::string_view context) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("cannot parse number '" + std::string(s) + "' in '" + std::string(context) +
                      "'");
  }
  return x;
}

std::vector<double> parse_list(std::string_view s, std::string_view context) {
  std::vector<double> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(parse_number(s.substr(0, comma), context));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Moments of the size-biased marginal of a finite atomic law.
std::pair<double, double> atom_log_moments(const std::vector<ExplicitFinite::Atom>& atoms) {
  double m1 = 0.0;
  double m2 = 0.0;
  for (const auto& a : atoms) {
    for (double y : a.y) {
      if (y <= 0.0) continue;
      const double l = std::log(y);
      m1 += a.probability * y * l;
      m2 += a.probability * y * l * l;
    }
  }
  return {-m1, m2 - m1 * m1};
}

}  // namespace

// ---------------------------------------------------------------------------

ExplicitFinite ExplicitFinite::point_mass(std::vector<double> y) {
  return from_atoms({Atom{std::move(y), 1.0}});
}

ExplicitFinite ExplicitFinite::from_atoms(std::vector<Atom> atoms) {
  if (atoms.empty()) throw ConfigError("explicit split law needs at least one atom");
  const auto arity = static_cast<std::uint32_t>(atoms.front().y.size());
  double total = 0.0;
  for (const auto& a : atoms) {
    if (a.y.size() != arity) throw ConfigError("explicit split atoms differ in arity");
    if (a.probability < 0.0) throw ConfigError("explicit split atom with negative probability");
    double s = 0.0;
    for (double v : a.y) {
      if (v < 0.0 || v > 1.0) throw ConfigError("explicit split component outside [0,1]");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ConfigError("explicit split atom does not sum to 1");
    total += a.probability;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("explicit split atom probabilities do not sum to 1");

  ExplicitFinite law;
  law.arity = arity;
  law.atoms = atoms;
  law.draw = [atoms = std::move(atoms)](Rng& rng, std::span<double> out) {
    std::size_t pick = 0;
    if (atoms.size() > 1) {
      const double u = uniform01(rng);
      double acc = 0.0;
      pick = atoms.size() - 1;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        acc += atoms[i].probability;
        if (u < acc) {
          pick = i;
          break;
        }
      }
    }
    std::copy(atoms[pick].y.begin(), atoms[pick].y.end(), out.begin());
  };
  std::ostringstream os;
  if (law.atoms.size() == 1) {
    os << "fixed:";
    for (std::size_t i = 0; i < law.atoms[0].y.size(); ++i) {
      os << (i ? "," : "") << fmt_double(law.atoms[0].y[i]);
    }
  } else {
    os << "atoms(" << law.atoms.size() << ")";
  }
  law.description = os.str();
  return law;
}

ExplicitFinite ExplicitFinite::from_sampler(std::uint32_t arity,
                                            std::function<void(Rng&, std::span<double>)> draw,
                                            std::string description) {
  ExplicitFinite law;
  law.arity = arity;
  law.draw = std::move(draw);
  law.description = std::move(description);
  return law;
}

std::optional<std::uint32_t> SplitLaw::arity() const {
  return std::visit(overloaded{
                        [](const BinaryUniform&) -> std::optional<std::uint32_t> { return 2; },
                        [](const MArySearch& m) -> std::optional<std::uint32_t> { return m.m; },
                        [](const Gem&) -> std::optional<std::uint32_t> { return std::nullopt; },
                        [](const ExplicitFinite& e) -> std::optional<std::uint32_t> { return e.arity; },
                    },
                    v_);
}

void SplitLaw::draw_split(Rng& rng, std::span<double> out) const {
  std::visit(overloaded{
                 [&](const BinaryUniform&) {
                   const double y = uniform01(rng);
                   out[0] = y;
                   out[1] = 1.0 - y;
                 },
                 [&](const MArySearch&) {
                   // Normalized exponential spacings are flat-Dirichlet.
                   double total = 0.0;
                   for (double& v : out) {
                     v = standard_exponential(rng);
                     total += v;
                   }
                   for (double& v : out) v /= total;
                 },
                 [&](const Gem&) { throw UnsupportedError("draw_split on an infinite-arity law"); },
                 [&](const ExplicitFinite& e) { e.draw(rng, out); },
             },
             v_);
}

double SplitLaw::draw_stick(std::uint64_t i, Rng& rng) const {
  const auto* g = std::get_if<Gem>(&v_);
  if (g == nullptr) throw UnsupportedError("draw_stick on a finite-arity law");
  return sample_beta(1.0 - g->alpha, g->theta + static_cast<double>(i) * g->alpha, rng);
}

std::string SplitLaw::describe() const {
  return std::visit(overloaded{
                        [](const BinaryUniform&) { return std::string("bst"); },
                        [](const MArySearch& m) { return "mary:" + std::to_string(m.m); },
                        [](const Gem& g) {
                          return "gem:" + fmt_double(g.alpha) + "," + fmt_double(g.theta);
                        },
                        [](const ExplicitFinite& e) { return e.description; },
                    },
                    v_);
}

double EdgeLengthLaw::tail_index() const {
  if (const auto* p = std::get_if<ParetoLength>(&v_)) return p->alpha;
  return 2.0;
}

double EdgeLengthLaw::sample(Rng& rng) const {
  return std::visit(overloaded{
                        [](const UnitLength&) { return 1.0; },
                        [&](const ExponentialLength& e) { return standard_exponential(rng) / e.rate; },
                        [&](const CustomFiniteVariance& c) { return c.draw(rng); },
                        [&](const ParetoLength& p) {
                          return p.scale * std::pow(uniform01_open_low(rng), -1.0 / p.alpha);
                        },
                    },
                    v_);
}

std::string EdgeLengthLaw::describe() const {
  return std::visit(overloaded{
                        [](const UnitLength&) { return std::string("unit"); },
                        [](const ExponentialLength& e) { return "exp:" + fmt_double(e.rate); },
                        [](const CustomFiniteVariance& c) { return c.description; },
                        [](const ParetoLength& p) {
                          return "pareto:" + fmt_double(p.alpha) + "," + fmt_double(p.scale);
                        },
                    },
                    v_);
}

// ---------------------------------------------------------------------------

SplitLaw parse_split_law(std::string_view text) {
  text = trim(text);
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view args =
      colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (head == "bst" && args.empty()) return SplitLaw::bst();
  if (head == "mary" && !args.empty()) {
    const double m = parse_number(args, text);
    if (m < 2 || m != std::floor(m) || m > 1e6) throw ConfigError("mary arity must be an integer >= 2");
    return SplitLaw::mary(static_cast<std::uint32_t>(m));
  }
  if (head == "gem" && !args.empty()) {
    const auto v = parse_list(args, text);
    if (v.size() != 2) throw ConfigError("gem expects 'gem:alpha,theta'");
    return SplitLaw::gem(v[0], v[1]);
  }
  if (head == "fixed" && !args.empty()) {
    return SplitLaw{ExplicitFinite::point_mass(parse_list(args, text))};
  }
  throw ConfigError("unknown split law '" + std::string(text) +
                    "' (expected bst | mary:m | gem:alpha,theta | fixed:y1,...,ym)");
}

EdgeLengthLaw parse_edge_law(std::string_view text) {
  text = trim(text);
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view args =
      colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (head == "unit" && args.empty()) return EdgeLengthLaw::unit();
  if (head == "exp" && !args.empty()) {
    const double rate = parse_number(args, text);
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("exp rate must be positive");
    return EdgeLengthLaw::exponential(rate);
  }
  if (head == "pareto" && !args.empty()) {
    const auto v = parse_list(args, text);
    if (v.size() != 2) throw ConfigError("pareto expects 'pareto:alpha,scale'");
    return EdgeLengthLaw::pareto(v[0], v[1]);
  }
  throw ConfigError("unknown edge law '" + std::string(text) +
                    "' (expected unit | exp:rate | pareto:alpha,scale)");
}

// ---------------------------------------------------------------------------

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Satisfied: return "satisfied";
    case Verdict::Violated: return "violated";
    case Verdict::Unknown: return "unknown";
  }
  return "unknown";
}

bool ValidationReport::ok() const { return first_violation() == nullptr; }

const AssumptionCheck* ValidationReport::first_violation() const {
  for (const auto& c : checks) {
    if (c.verdict == Verdict::Violated) return &c;
  }
  return nullptr;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << c.name << ": " << to_string(c.verdict);
    if (!c.detail.empty()) os << " (" << c.detail << ")";
    if (c.mc_samples) os << " [monte carlo, " << c.mc_samples << " draws]";
    os << '\n';
  }
  return os.str();
}

ValidationReport validate_split_law(const SplitLaw& split, std::uint64_t mc_samples,
                                    std::uint64_t seed) {
  ValidationReport report;
  AssumptionCheck support{"A1-i", Verdict::Satisfied, "", 0};
  AssumptionCheck moments{"A1-ii", Verdict::Satisfied, "", 0};

  std::visit(
      overloaded{
          [&](const BinaryUniform&) {},
          [&](const MArySearch& m) {
            if (m.m < 2) {
              support = {"A1-i", Verdict::Violated, "m-ary search tree needs m >= 2", 0};
            }
          },
          [&](const Gem& g) {
            if (!(g.alpha >= 0.0 && g.alpha < 1.0) || !(g.theta > 0.0)) {
              // alpha = 1 makes every stick vanish: no split vector at all.
              support = {"A1-i", Verdict::Violated,
                         "GEM needs alpha in [0,1) and theta > 0, got alpha=" +
                             fmt_double(g.alpha) + " theta=" + fmt_double(g.theta),
                         0};
            }
          },
          [&](const ExplicitFinite& e) {
            if (!e.atoms.empty()) {
              const bool spread = std::any_of(e.atoms.begin(), e.atoms.end(), [](const auto& a) {
                return a.probability > 0.0 && !is_coordinate_vector(a.y);
              });
              if (!spread) {
                support = {"A1-i", Verdict::Violated,
                           "support contained in the coordinate vectors e_1..e_m", 0};
              }
              return;
            }
            Rng rng(seed);
            std::vector<double> y(e.arity);
            bool spread = false;
            for (std::uint64_t i = 0; i < mc_samples; ++i) {
              e.draw(rng, y);
              double s = 0.0;
              for (double v : y) s += v;
              if (std::abs(s - 1.0) > 1e-12) {
                support = {"A1-i", Verdict::Violated, "sampled split vector does not sum to 1",
                           i + 1};
                return;
              }
              if (!is_coordinate_vector(y)) {
                spread = true;
                support = {"A1-i", Verdict::Satisfied, "non-coordinate draw observed", i + 1};
                break;
              }
            }
            if (!spread) {
              support = {"A1-i", Verdict::Unknown,
                         "every sampled split vector was a coordinate vector", mc_samples};
            }
          },
      },
      split.variant());

  report.checks.push_back(support);
  if (support.verdict == Verdict::Violated) {
    moments = {"A1-ii", Verdict::Unknown, "not evaluated", 0};
  } else {
    try {
      const auto mc = moment_constants(split, EdgeLengthLaw::unit(), 1e-3, mc_samples, seed);
      if (!(mc.mu > 0.0) || !std::isfinite(mc.sigma2)) {
        moments = {"A1-ii", Verdict::Violated,
                   "mu=" + fmt_double(mc.mu) + " sigma2=" + fmt_double(mc.sigma2), 0};
      } else {
        moments.detail = "mu=" + fmt_double(mc.mu) + " sigma2=" + fmt_double(mc.sigma2);
      }
      if (mc.estimation_error > 0.0) moments.mc_samples = mc_samples;
    } catch (const BudgetError& err) {
      moments = {"A1-ii", err.estimate() > 0.0 ? Verdict::Unknown : Verdict::Violated,
                 std::string(err.what()), mc_samples};
    }
  }
  report.checks.push_back(moments);
  return report;
}

ValidationReport validate_law(const SplitLaw& split, const EdgeLengthLaw& edge,
                              std::uint64_t mc_samples, std::uint64_t seed) {
  ValidationReport report = validate_split_law(split, mc_samples, seed);
  AssumptionCheck tail{"A2", Verdict::Satisfied, "", 0};
  std::visit(overloaded{
                 [&](const UnitLength&) { tail.detail = "Var(L)=0"; },
                 [&](const ExponentialLength& e) {
                   if (!(e.rate > 0.0) || !std::isfinite(e.rate)) {
                     tail = {"A2", Verdict::Violated, "exponential rate must be positive", 0};
                   }
                 },
                 [&](const CustomFiniteVariance& c) {
                   if (!(c.mean > 0.0) || !(c.variance >= 0.0) || !std::isfinite(c.variance)) {
                     tail = {"A2", Verdict::Violated, "declared mean/variance out of range", 0};
                   }
                 },
                 [&](const ParetoLength& p) {
                   if (!(p.alpha > 1.0 && p.alpha < 2.0)) {
                     tail = {"A2", Verdict::Violated,
                             "Pareto tail index " + fmt_double(p.alpha) + " not in (1,2)", 0};
                   } else if (!(p.scale > 0.0)) {
                     tail = {"A2", Verdict::Violated, "Pareto scale must be positive", 0};
                   }
                 },
             },
             edge.variant());
  report.checks.push_back(tail);
  return report;
}

// ---------------------------------------------------------------------------

double sample_size_biased_log(const SplitLaw& split, Rng& rng, std::uint64_t* resamples) {
  if (const auto* g = std::get_if<Gem>(&split.variant())) {
    (void)g;
    while (true) {
      const double u = uniform01(rng);
      double cum = 0.0;
      for (std::uint64_t i = 1;; ++i) {
        const double a = split.draw_stick(i, rng) * (1.0 - cum);
        cum += a;
        if (u < cum || cum >= 1.0) {
          if (a > 0.0) return std::log(a);
          break;
        }
      }
      if (resamples) ++*resamples;
    }
  }
  const std::uint32_t m = *split.arity();
  std::vector<double> y(m);
  while (true) {
    split.draw_split(rng, y);
    const double u = uniform01(rng);
    double cum = 0.0;
    std::size_t pick = m - 1;
    for (std::size_t i = 0; i < m; ++i) {
      cum += y[i];
      if (u < cum) {
        pick = i;
        break;
      }
    }
    if (y[pick] > 0.0) return std::log(y[pick]);
    if (resamples) ++*resamples;
  }
}

MomentConstants moment_constants(const SplitLaw& split, const EdgeLengthLaw& edge,
                                 double precision, std::uint64_t max_draws, std::uint64_t seed) {
  MomentConstants mc;

  std::visit(overloaded{
                 [&](const UnitLength&) {
                   mc.EL = 1.0;
                   mc.VarL = 0.0;
                 },
                 [&](const ExponentialLength& e) {
                   mc.EL = 1.0 / e.rate;
                   mc.VarL = 1.0 / (e.rate * e.rate);
                 },
                 [&](const CustomFiniteVariance& c) {
                   mc.EL = c.mean;
                   mc.VarL = c.variance;
                 },
                 [&](const ParetoLength& p) {
                   mc.EL = p.alpha > 1.0 ? p.alpha * p.scale / (p.alpha - 1.0) : kInfinity;
                   mc.VarL = kInfinity;
                   mc.alpha = p.alpha;
                 },
             },
             edge.variant());

  bool analytic = true;
  std::visit(overloaded{
                 [&](const BinaryUniform&) {
                   mc.mu = 0.5;
                   mc.sigma2 = 0.25;
                 },
                 [&](const MArySearch& m) {
                   // Ybar ~ Beta(2, m-1): mu = H_m - 1, sigma2 = sum_{j=2}^m 1/j^2.
                   double h = 0.0;
                   double s2 = 0.0;
                   for (std::uint32_t j = 1; j <= m.m; ++j) {
                     h += 1.0 / j;
                     if (j >= 2) s2 += 1.0 / (double(j) * j);
                   }
                   mc.mu = h - 1.0;
                   mc.sigma2 = s2;
                 },
                 [&](const Gem& g) {
                   // GEM is invariant under size-biased permutation, so the
                   // size-biased pick has the law of B_1 ~ Beta(1-alpha, theta+alpha).
                   if (!(g.alpha >= 0.0 && g.alpha < 1.0) || !(g.theta > 0.0)) {
                     mc.mu = kInfinity;
                     mc.sigma2 = kInfinity;
                     return;
                   }
                   using boost::math::digamma;
                   using boost::math::trigamma;
                   mc.mu = digamma(1.0 + g.theta) - digamma(1.0 - g.alpha);
                   mc.sigma2 = trigamma(1.0 - g.alpha) - trigamma(1.0 + g.theta);
                 },
                 [&](const ExplicitFinite& e) {
                   if (!e.atoms.empty()) {
                     std::tie(mc.mu, mc.sigma2) = atom_log_moments(e.atoms);
                   } else {
                     analytic = false;
                   }
                 },
             },
             split.variant());
  if (analytic) return mc;

  Rng rng(seed);
  double mean = 0.0;
  double m2 = 0.0;
  std::uint64_t count = 0;
  double se = kInfinity;
  constexpr std::uint64_t kMinDraws = 1000;
  while (count < max_draws) {
    const double x = -sample_size_biased_log(split, rng);
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
    if (count >= kMinDraws && (count & 1023) == 0) {
      se = std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
      if (se <= precision) break;
    }
  }
  const double var = count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  se = count > 1 ? std::sqrt(var / static_cast<double>(count)) : kInfinity;
  if (se > precision) {
    throw BudgetError("moment estimation stopped at " + std::to_string(count) +
                          " draws with standard error " + fmt_double(se),
                      mean, se);
  }
  mc.mu = mean;
  mc.sigma2 = var;
  mc.estimation_error = se;
  return mc;
}

double sample_stable(double alpha, double skew, double scale, Rng& rng) {
  if (scale == 0.0) return 0.0;
  if (!(alpha > 1.0 && alpha <= 2.0) || !(skew >= -1.0 && skew <= 1.0) || !(scale > 0.0)) {
    throw ContractError("sample_stable: parameters out of range");
  }
  constexpr double pi = std::numbers::pi;
  const double v = pi * (uniform01(rng) - 0.5);
  const double w = standard_exponential(rng);
  const double t = skew * std::tan(pi * alpha / 2.0);
  const double b = std::atan(t) / alpha;
  const double s = std::pow(1.0 + t * t, 1.0 / (2.0 * alpha));
  const double x = s * std::sin(alpha * (v + b)) / std::pow(std::cos(v), 1.0 / alpha) *
                   std::pow(std::cos(v - alpha * (v + b)) / w, (1.0 - alpha) / alpha);
  return scale * x;
}

}  // namespace splitvor
