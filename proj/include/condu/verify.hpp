#pragma once

#include "condu/bandwidth.hpp"
#include "condu/dgp.hpp"
#include "condu/estimator.hpp"
#include "condu/function_class.hpp"
#include "condu/harness.hpp"
#include "condu/hoeffding.hpp"
#include "condu/kernels.hpp"
#include "condu/rng.hpp"
#include "condu/ucore.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace condu {

//! One property-suite record; serialized as {check, residual, tolerance, pass}.
struct CheckResult
{
  std::string check;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline nlohmann::json
to_json(const CheckResult& r)
{
  return { { "check", r.check }, { "residual", r.residual }, { "tolerance", r.tolerance }, { "pass", r.pass } };
}

namespace detail {

inline CheckResult
bound_check(std::string name, double residual, double tolerance)
{
  return { std::move(name), residual, tolerance, residual <= tolerance };
}

inline Sample
random_sample(CounterRng& rng, std::size_t n, double y_lo = -1.0, double y_hi = 1.0)
{
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform();
    y[i] = rng.uniform(y_lo, y_hi);
  }
  return Sample(std::move(x), std::move(y));
}

inline FunctionSpec
random_member(CounterRng& rng, std::size_t m)
{
  switch (rng.below(5)) {
    case 0:
      return FunctionSpec::sum(m);
    case 1:
      return FunctionSpec::product(m);
    case 2:
      return FunctionSpec::max(m);
    case 3:
      return FunctionSpec::indicator_leq(m, rng.uniform(-0.5, 0.5));
    default:
      return FunctionSpec::sum_clipped(m, rng.uniform(0.2, 1.5));
  }
}

inline Kernel1D
random_kernel(CounterRng& rng)
{
  switch (rng.below(3)) {
    case 0:
      return Kernel1D::uniform();
    case 1:
      return Kernel1D::epanechnikov();
    default:
      return Kernel1D::triweight();
  }
}

//! Symmetric polynomial kernel in the y coordinates with a mild x term, used
//! by the projection checks.
inline PairKernel
random_symmetric_kernel(CounterRng& rng, std::size_t m)
{
  const double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.0, 1.0), c = rng.uniform(-1.0, 1.0);
  PairKernel raw = [a, b, c](std::span<const double> x, std::span<const double> y) {
    double prod = 1.0, sum = 0.0, xs = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      prod *= y[j];
      sum += y[j] * y[j];
      xs += x[j] * y[j];
    }
    return a * prod + b * sum + c * xs;
  };
  return symmetrize(raw, m);
}

inline ReferenceMeasure
random_measure(CounterRng& rng, std::size_t atoms)
{
  std::vector<double> x(atoms), y(atoms), w(atoms);
  double total = 0.0;
  for (std::size_t i = 0; i < atoms; ++i) {
    x[i] = rng.uniform();
    y[i] = rng.uniform(-1.0, 1.0);
    w[i] = 0.1 + rng.uniform();
    total += w[i];
  }
  for (auto& v : w)
    v /= total;
  // Absorb the rounding of the normalization into the last weight.
  CompensatedSum s;
  for (std::size_t i = 0; i + 1 < atoms; ++i)
    s.add(w[i]);
  w.back() = 1.0 - s.value();
  return ReferenceMeasure(std::move(x), std::move(y), std::move(w));
}

inline std::vector<ProjectionProbe>
random_probes(CounterRng& rng, std::size_t k, std::size_t count)
{
  std::vector<ProjectionProbe> out(count);
  for (auto& p : out) {
    p.x.resize(k);
    p.y.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      p.x[j] = rng.uniform();
      p.y[j] = rng.uniform(-1.0, 1.0);
    }
  }
  return out;
}

} // namespace detail

//! Named invariant suites of every module. `filter` keeps the checks whose
//! name contains it.
inline std::vector<CheckResult>
run_property_suite(const std::string& filter = {})
{
  using Suite = std::pair<std::string, std::function<std::vector<CheckResult>()>>;
  std::vector<Suite> suites;

  suites.emplace_back("kernels", [] {
    std::vector<CheckResult> out;
    for (const auto& k : { Kernel1D::uniform(), Kernel1D::epanechnikov(), Kernel1D::triweight() }) {
      const auto r = validate_kernel(k);
      out.push_back(detail::bound_check("kernels.validate." + k.name(), std::abs(r.integral - 1.0), 1e-10));
    }
    const auto wide = validate_kernel(Kernel1D::custom("wide", [](double u) { return std::abs(u) <= 1.0 ? 0.5 : 0.0; }, 0.5, { -1.0, 1.0 }));
    out.push_back({ "kernels.validate.rejects_wide_support", static_cast<double>(wide.pass), 0.0, !wide.pass });
    CounterRng rng(derive_key(11, { 1 }));
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const auto k = detail::random_kernel(rng);
      const double h = rng.uniform(0.05, 1.0), t = rng.uniform(-1, 1), x = rng.uniform(-1, 1);
      const double a = eval_product({ k, 1 }, h, std::vector<double>{ t }, std::vector<double>{ x });
      worst = std::max(worst, std::abs(a - eval_scaled(k, h, t - x)));
    }
    out.push_back(detail::bound_check("kernels.product_m1_equals_scaled", worst, 0.0));
    return out;
  });

  suites.emplace_back("function_class", [] {
    std::vector<CheckResult> out;
    FunctionClass fc({ FunctionSpec::sum(2), FunctionSpec::product(2) }, Envelope::pointwise_max(),
                     UnboundedRegime{ 3.0, std::nullopt });
    CounterRng rng(derive_key(11, { 2 }));
    std::vector<std::vector<double>> probes;
    double perm = 0.0, lower = 0.0;
    for (int i = 0; i < 200; ++i) {
      std::vector<double> y{ rng.uniform(-2, 2), rng.uniform(-2, 2) };
      std::vector<double> yr{ y[1], y[0] };
      const double kappa = 1.5;
      perm = std::max(perm, std::abs(envelope_tilde(fc, kappa, y) - envelope_tilde(fc, kappa, yr)));
      lower = std::max(lower, kappa * kappa * fc.envelope_at(y) - envelope_tilde(fc, kappa, y));
      probes.push_back(std::move(y));
    }
    const auto rep = envelope_check(fc, probes);
    out.push_back(detail::bound_check("function_class.envelope_dominates", std::max(0.0, rep.max_violation), 0.0));
    out.push_back(detail::bound_check("function_class.envelope_tilde_permutation_invariant", perm, 1e-12));
    out.push_back(detail::bound_check("function_class.envelope_tilde_lower_bound", std::max(0.0, lower), 1e-12));
    return out;
  });

  suites.emplace_back("ucore", [] {
    std::vector<CheckResult> out;
    CounterRng rng(derive_key(11, { 3 }));
    double worst = 0.0, sym = 0.0;
    for (int i = 0; i < 40; ++i) {
      const std::size_t n = 10 + rng.below(21), m = 1 + rng.below(3);
      const Sample s = detail::random_sample(rng, n);
      std::vector<double> t(m);
      for (auto& v : t)
        v = rng.uniform();
      UKernelSpec spec{ detail::random_member(rng, m), rng.uniform(0.1, 0.9), t, detail::random_kernel(rng) };
      const double b = u_stat_brute(spec, s, m).value;
      const double w = u_stat_windowed(spec, s, make_sorted_index(s)).value;
      worst = std::max(worst, std::abs(w - b) / (1.0 + std::abs(b)));
      PairKernel G = [spec](std::span<const double> x, std::span<const double> y) { return spec(x, y); };
      sym = std::max(sym, std::abs(u_stat_brute(symmetrize(G, m), s, m).value - b) / (1.0 + std::abs(b)));
    }
    out.push_back(detail::bound_check("ucore.windowed_equals_brute", worst, 1e-12));
    out.push_back(detail::bound_check("ucore.symmetrization_invariance", sym, 1e-12));
    const Sample s = detail::random_sample(rng, 12);
    const double c = u_stat_brute([](auto, auto) { return 0.7; }, s, 3).value;
    out.push_back(detail::bound_check("ucore.constant_kernel", std::abs(c - 0.7), 0.0));
    return out;
  });

  suites.emplace_back("hoeffding", [] {
    std::vector<CheckResult> out;
    CounterRng rng(derive_key(11, { 4 }));
    double dec = 0.0, deg = 0.0, idem = 0.0, orth = 0.0, ineq = 0.0;
    for (int i = 0; i < 10; ++i) {
      const std::size_t m = 2 + rng.below(2);
      const std::size_t n = m == 2 ? 8 + rng.below(8) : 6 + rng.below(4);
      const auto L = detail::random_symmetric_kernel(rng, m);
      const auto Q = detail::random_measure(rng, 3 + rng.below(3));
      const Sample s = detail::random_sample(rng, n);
      const double u = u_stat_brute(L, s, m).value;
      dec = std::max(dec, decomposition_check(L, m, s, Q) / (1.0 + std::abs(u)));
      const std::size_t k = 1 + rng.below(m);
      const auto probes = detail::random_probes(rng, m, 8);
      const double scale = kernel_scale(L, probes);
      deg = std::max(deg, degeneracy_check(project(L, m, k, Q), Q) / scale);
      const auto kp = detail::random_probes(rng, k, 8);
      idem = std::max(idem, nesting_check(L, m, k, k, Q, kp) / scale);
      if (k < m) {
        // Canonical projections are orthogonal across orders: pi_k pi_l L = 0.
        const auto nested = project(project(L, m, m, Q).as_kernel(), m, k, Q);
        for (const auto& p : kp)
          orth = std::max(orth, std::abs(nested(p.x, p.y)) / scale);
      }
      const auto pv = projection_variance_check(L, m, k, Q);
      ineq = std::max({ ineq, pv.lhs - pv.mid, pv.mid - pv.rhs });
    }
    out.push_back(detail::bound_check("hoeffding.decomposition_identity", dec, 1e-10));
    out.push_back(detail::bound_check("hoeffding.degeneracy", deg, 1e-12));
    out.push_back(detail::bound_check("hoeffding.idempotence", idem, 1e-10));
    out.push_back(detail::bound_check("hoeffding.orthogonality_across_orders", orth, 1e-10));
    out.push_back(detail::bound_check("hoeffding.projection_variance_inequalities", std::max(0.0, ineq), 1e-12));
    return out;
  });

  suites.emplace_back("estimator", [] {
    std::vector<CheckResult> out;
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double h = 0.05 + 0.01 * i, z = -1.0 + 0.04 * i;
      const double got = convolve([](std::span<const double> x) { return std::cos(x[0]); }, Kernel1D::uniform(), h,
                                  std::vector<double>{ z });
      worst = std::max(worst, std::abs(got - 2.0 * std::sin(0.5 * h) * std::cos(z) / h));
    }
    out.push_back(detail::bound_check("estimator.convolve_cos_closed_form", worst, 1e-10));
    DgpSpec dgp{ "quad", MarginalX::uniform(), Regression::polynomial({ 0.0, 1.0 }), Noise::none() };
    const auto sq = FunctionSpec::polynomial(1, { { 1.0, { 2 } } }, "square");
    double quad = 0.0;
    for (double h : { 0.2, 0.1, 0.05 })
      for (double t : { 0.3, 0.5, 0.7 })
        quad = std::max(quad, std::abs(centering(sq, h, std::vector<double>{ t }, dgp, Kernel1D::uniform()) -
                                       (t * t + h * h / 12.0)));
    out.push_back(detail::bound_check("estimator.centering_quadratic", quad, 1e-8));
    const double one = centering(FunctionSpec::one(2), 0.2, std::vector<double>{ 0.4, 0.6 }, dgp, Kernel1D::epanechnikov());
    out.push_back(detail::bound_check("estimator.centering_constant", std::abs(one - 1.0), 0.0));
    return out;
  });

  suites.emplace_back("bandwidth", [] {
    std::vector<CheckResult> out;
    double ratio = 0.0;
    for (std::size_t m = 1; m <= 3; ++m) {
      const auto g = dyadic_grid(RateRegime::bounded(0.5, m, 0.6), 12);
      for (std::size_t j = 1; j < g.anchors.size(); ++j)
        ratio = std::max(ratio, std::abs(std::pow(g.anchors[j] / g.anchors[j - 1], double(m)) - 2.0));
    }
    out.push_back(detail::bound_check("bandwidth.anchor_ratio", ratio, 1e-12));
    double count = 0.0;
    for (std::size_t ell = 8; ell <= 24; ++ell) {
      const auto g = dyadic_grid(RateRegime::bounded(1.0, 1, 0.9), ell);
      count = std::max(count, static_cast<double>(g.L) - 2.0 * std::log(static_cast<double>(g.n_ell)));
    }
    out.push_back(detail::bound_check("bandwidth.block_count", std::max(0.0, count), 0.0));
    const auto split = truncate_split([](auto, std::span<const double> y) { return y[0] * y[1]; },
                                      [](std::span<const double> y) { return std::abs(y[0] * y[1]); }, 0.5);
    CounterRng rng(derive_key(11, { 5 }));
    double part = 0.0, disjoint = 0.0;
    for (int i = 0; i < 200; ++i) {
      std::vector<double> x{ 0, 0 }, y{ rng.uniform(-1, 1), rng.uniform(-1, 1) };
      const double a = split.truncated(x, y), b = split.remainder(x, y);
      part = std::max(part, std::abs(a + b - y[0] * y[1]));
      disjoint = std::max(disjoint, std::abs(a * b));
    }
    out.push_back(detail::bound_check("bandwidth.truncation_partition", part, 1e-14));
    out.push_back(detail::bound_check("bandwidth.truncation_disjoint", disjoint, 0.0));
    return out;
  });

  suites.emplace_back("harness", [] {
    std::vector<CheckResult> out;
    DgpSpec dgp{ "smoke", MarginalX::uniform(), Regression::sine(1.0, 6.0), Noise::gaussian(0.3) };
    const Sample a = simulate(dgp, 200, 5), b = simulate(dgp, 200, 5);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      diff = std::max({ diff, std::abs(a.x[i] - b.x[i]), std::abs(a.y[i] - b.y[i]) });
    out.push_back(detail::bound_check("harness.simulate_deterministic", diff, 0.0));
    return out;
  });

  std::vector<CheckResult> results;
  for (const auto& [name, run] : suites) {
    if (!filter.empty() && name.find(filter) == std::string::npos) {
      // A filter may also name a single check inside the suite.
      for (auto& r : run())
        if (r.check.find(filter) != std::string::npos)
          results.push_back(std::move(r));
      continue;
    }
    for (auto& r : run())
      results.push_back(std::move(r));
  }
  return results;
}

} // namespace condu
