#pragma once

#include "condu/dgp.hpp"
#include "condu/errors.hpp"
#include "condu/numeric.hpp"
#include "condu/rng.hpp"
#include "condu/ucore.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace condu {

//! Finite probability measure on pairs (x, y).
struct ReferenceMeasure
{
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;

  ReferenceMeasure() = default;
  ReferenceMeasure(std::vector<double> x_, std::vector<double> y_, std::vector<double> w_)
    : x(std::move(x_))
    , y(std::move(y_))
    , w(std::move(w_))
  {
    validate();
  }

  std::size_t size() const noexcept { return w.size(); }

  void validate() const
  {
    if (w.empty())
      throw InvalidArgument("reference measure needs at least one atom");
    if (x.size() != w.size() || y.size() != w.size())
      throw DimensionMismatch("reference measure: atoms and weights differ in length");
    CompensatedSum total;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
        throw InvalidArgument("reference measure atom " + std::to_string(i + 1) + " is not finite");
      if (!(w[i] >= 0.0))
        throw InvalidArgument("reference measure weights must be non-negative");
      total.add(w[i]);
    }
    if (std::abs(total.value() - 1.0) > 1e-12)
      throw InvalidArgument("reference measure weights sum to " + std::to_string(total.value()));
  }

  //! Uniform weights on the given atoms.
  static ReferenceMeasure uniform(std::vector<double> x, std::vector<double> y)
  {
    const std::size_t n = x.size();
    if (n == 0)
      throw InvalidArgument("reference measure needs at least one atom");
    return ReferenceMeasure(std::move(x), std::move(y),
                            std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  //! The empirical measure of a sample.
  static ReferenceMeasure empirical(const Sample& s) { return uniform(s.x, s.y); }
};

//! Exact finite-atom expansions need |Q|^m kernel evaluations at most.
inline constexpr double projection_budget = 1e7;

namespace detail {

inline void
check_budget(std::size_t atoms, std::size_t m)
{
  if (std::pow(static_cast<double>(atoms), static_cast<double>(m)) > projection_budget)
    throw MeasureTooLarge("|Q|^m = " + std::to_string(atoms) + "^" + std::to_string(m) +
                          " exceeds the 1e7 evaluation budget");
}

//! Integrates L over the coordinates whose `fixed` flag is false, each under
//! Q; fixed coordinates keep the values already stored in xs/ys.
inline double
integrate_free(const PairKernel& L, const ReferenceMeasure& Q, std::vector<double>& xs,
               std::vector<double>& ys, const std::vector<char>& fixed)
{
  const std::size_t m = xs.size();
  std::vector<std::size_t> free;
  for (std::size_t j = 0; j < m; ++j)
    if (!fixed[j])
      free.push_back(j);
  if (free.empty())
    return L(xs, ys);
  const std::size_t q = Q.size();
  std::vector<std::size_t> idx(free.size(), 0);
  CompensatedSum s;
  while (true) {
    double weight = 1.0;
    for (std::size_t a = 0; a < free.size(); ++a) {
      xs[free[a]] = Q.x[idx[a]];
      ys[free[a]] = Q.y[idx[a]];
      weight *= Q.w[idx[a]];
    }
    if (weight != 0.0)
      s.add(weight * L(xs, ys));
    std::size_t a = free.size();
    while (a > 0) {
      --a;
      if (++idx[a] < q)
        break;
      idx[a] = 0;
      if (a == 0)
        return s.value();
    }
  }
}

} // namespace detail

//! pi_k L: the k-th Hoeffding projection of an m-argument kernel against Q,
//! (delta_z1 - Q) x ... x (delta_zk - Q) x Q^{m-k} (L), expanded over the
//! 2^k subsets of fixed coordinates.
class ProjectedKernel
{
public:
  ProjectedKernel(PairKernel L, std::size_t m, std::size_t k, ReferenceMeasure Q)
    : L_(std::move(L))
    , m_(m)
    , k_(k)
    , Q_(std::move(Q))
  {
    if (m_ == 0)
      throw InvalidArgument("project: m must be >= 1");
    if (k_ < 1 || k_ > m_)
      throw InvalidProjectionOrder("project: need 1 <= k <= m (k=" + std::to_string(k_) +
                                   ", m=" + std::to_string(m_) + ")");
    Q_.validate();
    detail::check_budget(Q_.size(), m_);
    std::vector<double> xs(m_), ys(m_);
    full_mean_ = detail::integrate_free(L_, Q_, xs, ys, std::vector<char>(m_, 0));
  }

  std::size_t m() const noexcept { return m_; }
  std::size_t k() const noexcept { return k_; }
  const ReferenceMeasure& measure() const noexcept { return Q_; }
  const PairKernel& base() const noexcept { return L_; }
  //! Q^m L.
  double full_mean() const noexcept { return full_mean_; }

  double operator()(std::span<const double> x, std::span<const double> y) const
  {
    if (x.size() != k_ || y.size() != k_)
      throw DimensionMismatch("projected kernel expects " + std::to_string(k_) + " arguments");
    std::vector<double> xs(m_), ys(m_);
    std::vector<char> fixed(m_, 0);
    CompensatedSum s;
    const std::size_t subsets = std::size_t{1} << k_;
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      std::size_t size = 0;
      for (std::size_t j = 0; j < k_; ++j) {
        fixed[j] = static_cast<char>((mask >> j) & 1u);
        if (fixed[j]) {
          xs[j] = x[j];
          ys[j] = y[j];
          ++size;
        }
      }
      const double sign = ((k_ - size) % 2 == 0) ? 1.0 : -1.0;
      const double part = size == 0 ? full_mean_ : detail::integrate_free(L_, Q_, xs, ys, fixed);
      s.add(sign * part);
    }
    return s.value();
  }

  //! As a PairKernel, for feeding back into u_stat_brute or project.
  PairKernel as_kernel() const
  {
    auto self = std::make_shared<const ProjectedKernel>(*this);
    return [self](std::span<const double> x, std::span<const double> y) { return (*self)(x, y); };
  }

private:
  PairKernel L_;
  std::size_t m_;
  std::size_t k_;
  ReferenceMeasure Q_;
  double full_mean_ = 0.0;
};

inline ProjectedKernel
project(PairKernel L, std::size_t m, std::size_t k, const ReferenceMeasure& Q)
{
  return ProjectedKernel(std::move(L), m, k, Q);
}

//! |U_n^(m)(L) - Q^m L - sum_k C(m,k) U_n^(k)(pi_k L)|; zero up to rounding for
//! symmetric L and any Q.
inline double
decomposition_check(const PairKernel& L, std::size_t m, const Sample& s, const ReferenceMeasure& Q)
{
  const double lhs = u_stat_brute(L, s, m).value;
  CompensatedSum rhs;
  std::optional<double> qm;
  for (std::size_t k = 1; k <= m; ++k) {
    const auto pk = project(L, m, k, Q);
    if (!qm) {
      qm = pk.full_mean();
      rhs.add(*qm);
    }
    rhs.add(binomial(static_cast<int>(m), static_cast<int>(k)) * u_stat_brute(pk, s, k).value);
  }
  return std::abs(lhs - rhs.value());
}

//! Largest |E_Q pi_k L(Z, z_2, ..., z_k)| over all atom assignments of the
//! trailing k-1 coordinates.
inline double
degeneracy_check(const ProjectedKernel& pk, const ReferenceMeasure& Q)
{
  const std::size_t k = pk.k();
  detail::check_budget(Q.size(), k);
  const std::size_t q = Q.size();
  std::vector<std::size_t> tail(k - 1, 0);
  std::vector<double> xs(k), ys(k);
  double worst = 0.0;
  while (true) {
    for (std::size_t j = 1; j < k; ++j) {
      xs[j] = Q.x[tail[j - 1]];
      ys[j] = Q.y[tail[j - 1]];
    }
    CompensatedSum s;
    for (std::size_t a = 0; a < q; ++a) {
      xs[0] = Q.x[a];
      ys[0] = Q.y[a];
      s.add(Q.w[a] * pk(xs, ys));
    }
    worst = std::max(worst, std::abs(s.value()));
    std::size_t j = tail.size();
    bool done = true;
    while (j > 0) {
      --j;
      if (++tail[j] < q) {
        done = false;
        break;
      }
      tail[j] = 0;
    }
    if (done)
      return worst;
  }
}

//! One probe for projected kernels: k (x, y) pairs.
struct ProjectionProbe
{
  std::vector<double> x;
  std::vector<double> y;
};

//! max over probes of |pi_k(pi_l L) - pi_k L|, where pi_k acts on pi_l L as an
//! l-argument kernel.
inline double
nesting_check(const PairKernel& L, std::size_t m, std::size_t k, std::size_t l,
              const ReferenceMeasure& Q, std::span<const ProjectionProbe> probes)
{
  if (!(k <= l && l <= m))
    throw InvalidProjectionOrder("nesting_check: need k <= l <= m");
  const auto inner = project(L, m, l, Q);
  const auto nested = project(inner.as_kernel(), l, k, Q);
  const auto direct = project(L, m, k, Q);
  double worst = 0.0;
  for (const auto& p : probes)
    worst = std::max(worst, std::abs(nested(p.x, p.y) - direct(p.x, p.y)));
  return worst;
}

//! max(1, max |L|) over probes of m arguments; the scale used by the relative
//! tolerances of the projection checks.
inline double
kernel_scale(const PairKernel& L, std::span<const ProjectionProbe> probes)
{
  double s = 1.0;
  for (const auto& p : probes)
    s = std::max(s, std::abs(L(p.x, p.y)));
  return s;
}

struct ProjectionVariance
{
  double lhs = 0.0; // E_{Q^k} (pi_k L)^2
  double mid = 0.0; // E_{Q^m} (L - Q^m L)^2
  double rhs = 0.0; // E_{Q^m} L^2
};

inline ProjectionVariance
projection_variance_check(const PairKernel& L, std::size_t m, std::size_t k, const ReferenceMeasure& Q)
{
  const auto pk = project(L, m, k, Q);
  const double mean = pk.full_mean();
  ProjectionVariance out;
  std::vector<double> xs(m), ys(m);
  const std::vector<char> none(m, 0);
  PairKernel centred_sq = [&](std::span<const double> x, std::span<const double> y) {
    const double d = L(x, y) - mean;
    return d * d;
  };
  PairKernel sq = [&](std::span<const double> x, std::span<const double> y) {
    const double v = L(x, y);
    return v * v;
  };
  out.mid = detail::integrate_free(centred_sq, Q, xs, ys, none);
  out.rhs = detail::integrate_free(sq, Q, xs, ys, none);
  std::vector<double> xk(k), yk(k);
  PairKernel proj_sq = [&](std::span<const double> x, std::span<const double> y) {
    const double v = pk(x, y);
    return v * v;
  };
  out.lhs = detail::integrate_free(proj_sq, Q, xk, yk, std::vector<char>(k, 0));
  return out;
}

//! S_{g,h,t}(x, y) = sum_j K((t_j - x)/h) E[g(Y with Y_j = y) prod_{i != j} K((t_i - X_i)/h)],
//! the inner expectation taken by tensor Gauss-Legendre over the kernel
//! windows of the other coordinates against fX.
inline double
eval_linear_kernel(const UKernelSpec& spec, const DgpSpec& dgp, double x, double y, int quad_order = 64)
{
  const std::size_t m = spec.m();
  if (spec.t.size() != m)
    throw DimensionMismatch("eval_linear_kernel: t must have length m");
  const double h = spec.h;
  if (!(h > 0.0) || !std::isfinite(h))
    throw InvalidBandwidth("bandwidth must be positive and finite");
  const Kernel1D& K = spec.kernel;

  // Per-axis rules over window ∩ support, split at the kernel's own breaks.
  std::vector<AxisRule> rules(m);
  std::vector<char> empty_axis(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    const double lo = std::max(spec.t[i] - 0.5 * h, dgp.x.support_lo());
    const double hi = std::min(spec.t[i] + 0.5 * h, dgp.x.support_hi());
    if (!(hi > lo)) {
      empty_axis[i] = 1;
      continue;
    }
    std::vector<double> cuts;
    for (double b : K.breakpoints())
      cuts.push_back(spec.t[i] - h * b);
    rules[i] = composite_rule(lo, hi, quad_order, cuts);
  }

  CompensatedSum total;
  std::vector<double> xs(m);
  std::vector<std::optional<double>> fixed(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double outer = K((spec.t[j] - x) / h);
    if (std::abs(spec.t[j] - x) > 0.5 * h || outer == 0.0)
      continue;
    if (m == 1) {
      total.add(outer * spec.g(std::span<const double>(&y, 1)));
      continue;
    }
    bool skip = false;
    std::vector<AxisRule> axes;
    std::vector<std::size_t> which;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == j)
        continue;
      if (empty_axis[i]) {
        skip = true;
        break;
      }
      axes.push_back(rules[i]);
      which.push_back(i);
    }
    if (skip)
      continue;
    std::fill(fixed.begin(), fixed.end(), std::nullopt);
    fixed[j] = y;
    xs[j] = x;
    const double inner = integrate_tensor(axes, [&](std::span<const double> u) {
      double weight = 1.0;
      for (std::size_t a = 0; a < u.size(); ++a) {
        const std::size_t i = which[a];
        xs[i] = u[a];
        weight *= K((spec.t[i] - u[a]) / h) * dgp.fx(u[a]);
      }
      if (weight == 0.0)
        return 0.0;
      return weight * conditional_expectation(spec.g, dgp, xs, fixed);
    });
    total.add(outer * inner);
  }
  return total.value();
}

struct VarianceBound
{
  double emp_var = 0.0;
  double bound = 0.0;
  double mc_se = 0.0;
  bool pass = false;
};

//! Checks Var U_n^(m)(L) <= (m/n) E L^2 by simulation: `reps` samples of
//! size n give the empirical variance, and an independent Monte Carlo run of
//! E L^2 gives the bound. mc_se combines the standard errors of both.
inline VarianceBound
variance_bound_check(const PairKernel& L, std::size_t m, const DgpSpec& dgp, std::size_t n,
                     std::size_t reps, std::uint64_t seed, std::size_t moment_draws = 200000)
{
  if (reps < 500)
    throw InvalidArgument("variance_bound_check: reps must be >= 500");
  if (n < m)
    throw DegenerateSample("variance_bound_check: n must be >= m");
  std::vector<double> stats(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    CounterRng rng(derive_key(seed, { 1, r }));
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i)
      std::tie(x[i], y[i]) = dgp.draw(rng);
    stats[r] = u_stat_brute(L, Sample(std::move(x), std::move(y)), m).value;
  }
  const MeanSe u = mean_se(stats);
  // Standard error of the sample variance from the fourth central moment.
  std::vector<double> dev2(reps);
  for (std::size_t r = 0; r < reps; ++r)
    dev2[r] = (stats[r] - u.mean) * (stats[r] - u.mean);
  const double se_var = mean_se(dev2).se;

  CounterRng rng(derive_key(seed, { 2 }));
  std::vector<double> sq(moment_draws);
  std::vector<double> xs(m), ys(m);
  for (std::size_t d = 0; d < moment_draws; ++d) {
    for (std::size_t j = 0; j < m; ++j)
      std::tie(xs[j], ys[j]) = dgp.draw(rng);
    const double v = L(xs, ys);
    sq[d] = v * v;
  }
  const MeanSe l2 = mean_se(sq);
  const double scale = static_cast<double>(m) / static_cast<double>(n);

  VarianceBound out;
  out.emp_var = u.variance;
  out.bound = scale * l2.mean;
  out.mc_se = std::sqrt(se_var * se_var + scale * scale * l2.se * l2.se);
  out.pass = out.emp_var <= out.bound + 3.0 * out.mc_se;
  return out;
}

} // namespace condu
