// Acceptance checks. One line per criterion; exits nonzero if any fails.

#include "condu/cli.hpp"
#include "condu/config.hpp"
#include "condu/estimator.hpp"
#include "condu/harness.hpp"
#include "condu/hoeffding.hpp"
#include "condu/numeric.hpp"
#include "condu/rng.hpp"
#include "condu/ucore.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace condu;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
  bool pass = false;
  std::string detail;
};

struct Criterion
{
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> body;
};

std::string
fmt(const char* f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ExperimentConfig
load(const std::string& name)
{
  std::ifstream in(fs::path(CONDU_CONFIG_DIR) / name);
  if (!in)
    throw IoError("missing config " + name);
  return parse_config(json::parse(in));
}

std::string
slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

//! Random symmetric kernel of m arguments, symmetrized from a fixed-shape
//! asymmetric one with random coefficients.
PairKernel
random_kernel(CounterRng& rng, std::size_t m)
{
  const double a0 = rng.uniform(-1, 1), a1 = rng.uniform(-1, 1), a2 = rng.uniform(-1, 1), a3 = rng.uniform(-1, 1);
  const double w = rng.uniform(0.5, 3.0);
  PairKernel H = [=](std::span<const double> x, std::span<const double> y) {
    double prod = 1.0;
    for (double v : y)
      prod *= v;
    const double tail = m > 1 ? y[1] : 1.0;
    return a0 * y[0] * x[m - 1] + a1 * std::sin(x[0] + w * y[m - 1]) + a2 * prod +
           a3 * std::exp(-x[0] * x[0]) * tail;
  };
  return symmetrize(H, m);
}

ReferenceMeasure
random_measure(CounterRng& rng, std::size_t atoms)
{
  std::vector<double> x(atoms), y(atoms), w(atoms);
  double total = 0.0;
  for (std::size_t i = 0; i < atoms; ++i) {
    x[i] = rng.uniform(-1, 1);
    y[i] = rng.normal();
    w[i] = rng.uniform(0.1, 1.0);
    total += w[i];
  }
  double rest = 1.0;
  for (std::size_t i = 0; i + 1 < atoms; ++i) {
    w[i] /= total;
    rest -= w[i];
  }
  w.back() = rest;
  return ReferenceMeasure(std::move(x), std::move(y), std::move(w));
}

Sample
random_sample(CounterRng& rng, std::size_t n)
{
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform();
    y[i] = std::sin(3.0 * x[i]) + 0.5 * rng.normal();
  }
  return Sample(std::move(x), std::move(y));
}

std::vector<ProjectionProbe>
random_probes(CounterRng& rng, const ReferenceMeasure& Q, std::size_t k, std::size_t count)
{
  std::vector<ProjectionProbe> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i].x.resize(k);
    out[i].y.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      // Half the coordinates sit on atoms, half off them.
      if (rng.below(2)) {
        const auto a = rng.below(Q.size());
        out[i].x[j] = Q.x[a];
        out[i].y[j] = Q.y[a];
      } else {
        out[i].x[j] = rng.uniform(-1, 1);
        out[i].y[j] = rng.normal();
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome
oracle_equivalence()
{
  constexpr double tol = 1e-12;
  CounterRng rng(derive_key(101, {}));
  const std::size_t ns[] = { 10, 25, 50 };
  const Kernel1D kernels[] = { Kernel1D::uniform(), Kernel1D::epanechnikov(), Kernel1D::triweight() };
  double worst = 0.0;
  int failures = 0;
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = ns[rng.below(3)];
    const std::size_t m = 1 + rng.below(3);
    const Sample s = random_sample(rng, n);
    std::vector<double> t(m);
    for (auto& v : t)
      v = rng.uniform();
    FunctionSpec g = FunctionSpec::one(m);
    switch (rng.below(7)) {
      case 0: g = FunctionSpec::sum(m); break;
      case 1: g = FunctionSpec::product(m); break;
      case 2: g = FunctionSpec::max(m); break;
      case 3: g = FunctionSpec::indicator_leq(m, rng.uniform(-1, 1)); break;
      case 4: g = FunctionSpec::identity(m, 1 + rng.below(m)); break;
      case 5: g = FunctionSpec::sum_clipped(m, rng.uniform(0.2, 2.0)); break;
      default: g = FunctionSpec::one(m); break;
    }
    const UKernelSpec spec{ g, rng.uniform(0.05, 1.0), t, kernels[rng.below(3)] };
    const double b = u_stat_brute(spec, s, m).value;
    const double w = u_stat_windowed(spec, s, make_sorted_index(s)).value;
    const double rel = w == b ? 0.0 : std::abs(w - b) / std::max(std::abs(b), 1e-300);
    worst = std::max(worst, rel);
    failures += rel > tol;
  }
  return { failures == 0, fmt("200 configs, worst relative gap %.3g (tol %.0e)", worst, tol) };
}

Outcome
decomposition_identity()
{
  constexpr double tol = 1e-10;
  CounterRng rng(derive_key(102, {}));
  double worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t m = c % 2 ? 3 : 2;
    const std::size_t n = m + rng.below(m == 2 ? 19 : 10); // n <= 20 resp. n <= 12
    const Sample s = random_sample(rng, n);
    const auto Q = random_measure(rng, 3 + rng.below(4));
    worst = std::max(worst, decomposition_check(random_kernel(rng, m), m, s, Q));
  }
  return { worst <= tol, fmt("50 cases, worst residual %.3g (tol %.0e)", worst, tol) };
}

Outcome
projection_properties()
{
  constexpr double deg_tol = 1e-12, nest_tol = 1e-10, ineq_tol = 1e-12;
  CounterRng rng(derive_key(103, {}));
  double deg = 0.0, nest_lower = 0.0, nest_same = 0.0, ineq = 0.0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t m = 2 + rng.below(2);
    const auto L = random_kernel(rng, m);
    const auto Q = random_measure(rng, 3 + rng.below(4));
    const auto scale = kernel_scale(L, random_probes(rng, Q, m, 20));

    const std::size_t k = 1 + rng.below(m);
    deg = std::max(deg, degeneracy_check(project(L, m, k, Q), Q) / scale);

    // Literal composition rule pi_k(pi_l L) = pi_k L for k < l, and the
    // idempotent case k = l.
    const std::size_t l = 2 + rng.below(m - 1);
    const std::size_t kl = 1 + rng.below(l - 1);
    nest_lower = std::max(nest_lower, nesting_check(L, m, kl, l, Q, random_probes(rng, Q, kl, 10)) / scale);
    nest_same = std::max(nest_same, nesting_check(L, m, l, l, Q, random_probes(rng, Q, l, 10)) / scale);

    const auto pv = projection_variance_check(L, m, k, Q);
    const double sq = scale * scale;
    ineq = std::max({ ineq, (pv.lhs - pv.mid) / sq, (pv.mid - pv.rhs) / sq });
  }
  const bool ok = deg <= deg_tol && nest_same <= nest_tol && nest_lower <= nest_tol && ineq <= ineq_tol;
  return { ok, fmt("degeneracy %.3g (tol %.0e); nesting k=l %.3g, k<l %.3g (tol %.0e); "
                   "variance chain excess %.3g (tol %.0e)",
                   deg, deg_tol, nest_same, nest_lower, nest_tol, std::max(ineq, 0.0), ineq_tol) };
}

Outcome
variance_bound()
{
  const auto smooth = load("smooth.json");
  const auto beta = load("determinism.json");
  std::string detail;
  bool ok = true;
  std::uint64_t seed = 104;
  for (const DgpSpec* dgp : { &smooth.dgp, &beta.dgp })
    for (std::size_t m : { 1u, 2u })
      for (std::size_t n : { 50u, 200u }) {
        const std::vector<double> t(m, 0.5);
        const UKernelSpec spec{ FunctionSpec::sum(m), 0.3, t, Kernel1D::epanechnikov() };
        const auto r = variance_bound_check(spec, m, *dgp, n, 2000, ++seed);
        ok = ok && r.pass;
        detail += fmt("%s%s m=%zu n=%zu var %.3g <= %.3g+3*%.2g", detail.empty() ? "" : "; ", dgp->id.c_str(), m, n,
                      r.emp_var, r.bound, r.mc_se);
      }
  return { ok, detail };
}

Outcome
convolution_engine()
{
  constexpr double tol = 1e-10;
  CounterRng rng(derive_key(105, {}));
  const auto cosine = [](std::span<const double> x) { return std::cos(x[0]); };
  double worst = 0.0, worst_const = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double h = rng.uniform(0.01, 2.0);
    const std::vector<double> z{ rng.uniform(-3, 3) };
    const double exact = 2.0 * std::sin(h / 2.0) * std::cos(z[0]) / h;
    worst = std::max(worst, std::abs(convolve(cosine, Kernel1D::uniform(), h, z) - exact));
    for (const auto& k : { Kernel1D::uniform(), Kernel1D::epanechnikov(), Kernel1D::triweight() })
      worst_const = std::max(worst_const, std::abs(convolve([](auto) { return 1.75; }, k, h, z) - 1.75));
  }
  auto sup_gap = [&](double h) {
    double s = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const std::vector<double> z{ i / 200.0 };
      s = std::max(s, std::abs(convolve(cosine, Kernel1D::uniform(), h, z) - std::cos(z[0])));
    }
    return s;
  };
  const double factor = sup_gap(0.2) / sup_gap(0.1);
  const bool ok = worst <= tol && worst_const == 0.0 && factor >= 3.5 && factor <= 4.5;
  return { ok, fmt("closed-form gap %.3g (tol %.0e); constant gap %.3g (exact); halving factor %.4f in [3.5, 4.5]", worst, tol,
                   worst_const, factor) };
}

Outcome
centering_exactness()
{
  constexpr double tol = 1e-8;
  CounterRng rng(derive_key(106, {}));
  const DgpSpec lin{ "lin", MarginalX::uniform(), Regression::polynomial({ 0.3, -1.2 }), Noise::gaussian(0.4) };
  const DgpSpec quad{ "quad", MarginalX::uniform(), Regression::polynomial({ 0.0, 0.0, 1.0 }), Noise::gaussian(0.4) };
  bool ones_exact = true;
  double lin_gap = 0.0, quad_gap = 0.0;
  for (int i = 0; i < 40; ++i) {
    const std::size_t m = 1 + rng.below(3);
    const double h = rng.uniform(0.02, 0.3);
    std::vector<double> t(m);
    for (auto& v : t)
      v = rng.uniform(h, 1.0 - h);
    const auto k = i % 2 ? Kernel1D::epanechnikov() : Kernel1D::triweight();
    ones_exact = ones_exact && centering(FunctionSpec::one(m), h, t, lin, k) == 1.0;
    for (const auto& phi : { FunctionSpec::sum(m), FunctionSpec::identity(m, 1) })
      lin_gap = std::max(lin_gap, std::abs(centering(phi, h, t, lin, k) - true_regression(lin, phi, t)));
    const std::vector<double> t1{ t[0] };
    const double q = centering(FunctionSpec::identity(1, 1), h, t1, quad, Kernel1D::uniform());
    quad_gap = std::max(quad_gap, std::abs(q - (t1[0] * t1[0] + h * h / 12.0)));
  }
  const bool ok = ones_exact && lin_gap <= tol && quad_gap <= tol;
  return { ok, fmt("phi=1 exact: %s; linear gap %.3g; quadratic gap %.3g (tol %.0e)", ones_exact ? "yes" : "no",
                   lin_gap, quad_gap, tol) };
}

std::string
series(const std::vector<double>& v)
{
  std::string s;
  for (double x : v)
    s += fmt("%s%.4g", s.empty() ? "" : " ", x);
  return s;
}

Outcome
bias_decreases()
{
  auto cfg = load("smooth.json");
  if (cfg.grids.cap != CapRule::decaying)
    throw InvalidArgument("smooth config must use the decaying cap");
  auto& e = cfg.experiment;
  e.process = e.estimator = e.remainder = false;
  e.bias = true;
  const auto out = rate_experiment(cfg, 1);
  std::vector<double> b;
  for (const auto& s : out.report.per_n)
    b.push_back(*s.bias_sup);
  bool ok = b.size() == 4;
  for (std::size_t i = 1; i < b.size(); ++i)
    ok = ok && b[i] <= b[i - 1] + 1e-10;
  return { ok, "bias_sup over n_list: " + series(b) };
}

Outcome
process_bounded()
{
  std::string detail;
  bool ok = true;
  for (const char* name : { "bounded.json", "unbounded.json" }) {
    const auto cfg = load(name);
    const auto out = rate_experiment(cfg, default_threads());
    std::vector<double> s;
    for (const auto& r : out.report.per_n)
      s.push_back(*r.sup_normalized_process);
    if (s.size() != 4)
      throw InvalidArgument(std::string(name) + " must list four sample sizes");
    const double low = std::max(s[0], s[1]), high = std::max(s[2], s[3]);
    ok = ok && high <= 1.5 * low;
    detail += fmt("%s%s sups %s, top/bottom %.3f (<= 1.5)", detail.empty() ? "" : "; ", name, series(s).c_str(),
                  high / low);
  }
  return { ok, detail };
}

Outcome
consistency()
{
  auto cfg = load("smooth.json");
  auto& e = cfg.experiment;
  e.process = e.bias = e.remainder = false;
  e.estimator = true;
  cfg.grids.n_list = { 500, 4000 };
  const auto out = rate_experiment(cfg, default_threads());
  const double a = *out.report.per_n[0].sup_consistency, b = *out.report.per_n[1].sup_consistency;
  return { b <= 0.5 * a, fmt("sup_consistency n=500 %.4g, n=4000 %.4g, ratio %.3f (<= 0.5)", a, b, b / a) };
}

Outcome
remainder_negligible()
{
  const auto cfg = load("remainder.json");
  if (cfg.grids.n_list.size() != 5)
    throw InvalidArgument("remainder config must span four doublings");
  const auto out = rate_experiment(cfg, default_threads());
  const auto& p = out.report.per_n;
  std::vector<double> means;
  bool ok = true;
  double worst_excess = -INFINITY;
  for (std::size_t i = 0; i < p.size(); ++i) {
    means.push_back(*p[i].remainder_mean);
    if (i == 0)
      continue;
    const double noise = std::sqrt(std::pow(*p[i - 1].remainder_se, 2) + std::pow(*p[i].remainder_se, 2) +
                                   std::pow(*p[i - 1].remainder_oracle_se, 2) + std::pow(*p[i].remainder_oracle_se, 2));
    const double excess = *p[i].remainder_mean - *p[i - 1].remainder_mean - 2.0 * noise;
    worst_excess = std::max(worst_excess, excess);
    ok = ok && excess <= 0.0;
  }
  return { ok, fmt("mean remainder sup over n_list: %s; worst step excess over 2x noise %.3g", series(means).c_str(),
                   worst_excess) };
}

Outcome
determinism()
{
  const fs::path root = fs::temp_directory_path() / "condu_acceptance_determinism";
  fs::remove_all(root);
  const fs::path cfg = fs::path(CONDU_CONFIG_DIR) / "determinism.json";
  const char* const runs[][2] = { { "a", "1" }, { "b", "1" }, { "c", "3" } };
  for (const auto& r : runs) {
    fs::create_directories(root / r[0]);
    const std::string cmd = std::string(CONDU_CLI_PATH) + " rates --config " + cfg.string() + " --out " +
                            (root / r[0]).string() + " --threads " + r[1] + " > /dev/null";
    const int status = std::system(cmd.c_str());
    if (status != 0)
      return { false, fmt("rates run %s exited with status %d", r[0], WEXITSTATUS(status)) };
  }
  bool ok = true;
  std::size_t bytes = 0;
  for (const char* f : { "deviations.csv", "report.json" }) {
    const auto ref = slurp(root / "a" / f);
    bytes += ref.size();
    ok = ok && !ref.empty() && ref == slurp(root / "b" / f) && ref == slurp(root / "c" / f);
  }
  fs::remove_all(root);
  return { ok, fmt("three runs (threads 1, 1, 3), %zu bytes compared, identical: %s", bytes, ok ? "yes" : "no") };
}

} // namespace

int
main()
{
  const std::vector<Criterion> criteria = {
    { 1, "windowed U equals brute force", 60, oracle_equivalence },
    { 2, "Hoeffding decomposition identity", 120, decomposition_identity },
    { 3, "degeneracy, nesting and projection variance", 60, projection_properties },
    { 4, "variance bound", 120, variance_bound },
    { 5, "convolution engine", 30, convolution_engine },
    { 6, "centering exactness", 30, centering_exactness },
    { 7, "bias decreases with n", 120, bias_decreases },
    { 8, "normalized process stays bounded", 600, process_bounded },
    { 9, "estimator consistency", 600, consistency },
    { 10, "remainder negligibility", 300, remainder_negligible },
    { 11, "byte-identical rates output", 300, determinism },
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = { false, std::string("threw: ") + e.what() };
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s criterion %2d (%s): %s; %.1f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
