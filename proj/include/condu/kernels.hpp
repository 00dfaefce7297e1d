#pragma once

#include "condu/errors.hpp"
#include "condu/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace condu {

enum class KernelId
{
  uniform,
  epanechnikov,
  triweight,
  user_table,
  custom
};

//! Scalar smoothing kernel with support in [-1/2, 1/2] (closed), bounded by
//! kappa and integrating to one. Built-ins are evaluated inline; tables and
//! custom kernels go through a stored function.
class Kernel1D
{
public:
  static Kernel1D uniform() { return Kernel1D(KernelId::uniform, "uniform", 1.0); }

  //! (3/2)(1 - 4u^2) on [-1/2, 1/2].
  static Kernel1D epanechnikov()
  {
    return Kernel1D(KernelId::epanechnikov, "epanechnikov", 1.5);
  }

  //! (35/16)(1 - 4u^2)^3 on [-1/2, 1/2].
  static Kernel1D triweight()
  {
    return Kernel1D(KernelId::triweight, "triweight", 35.0 / 16.0);
  }

  //! Piecewise-linear kernel through (u_i, k_i); zero outside [u_0, u_last].
  //! When kappa <= 0 the declared bound defaults to max |k_i|.
  static Kernel1D from_table(std::vector<double> u, std::vector<double> k, double kappa = 0.0)
  {
    if (u.size() != k.size() || u.size() < 2)
      throw SchemaError("kernel table needs at least two (u, k) rows of equal length");
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!std::isfinite(u[i]) || !std::isfinite(k[i]))
        throw SchemaError("kernel table row " + std::to_string(i + 1) + " is not finite");
      if (u[i] < -0.5 || u[i] > 0.5)
        throw SchemaError("kernel table row " + std::to_string(i + 1) + ": u outside [-0.5, 0.5]");
      if (i > 0 && !(u[i] > u[i - 1]))
        throw SchemaError("kernel table row " + std::to_string(i + 1) + ": u not strictly increasing");
    }
    if (kappa <= 0.0)
      for (double v : k)
        kappa = std::max(kappa, std::abs(v));
    auto table = std::make_shared<const std::pair<std::vector<double>, std::vector<double>>>(u, k);
    Kernel1D out(KernelId::user_table, "table", kappa);
    out.breakpoints_ = u;
    out.fn_ = [table](double x) {
      const auto& [us, ks] = *table;
      if (x < us.front() || x > us.back())
        return 0.0;
      auto it = std::upper_bound(us.begin(), us.end(), x);
      if (it == us.end())
        return ks.back();
      const auto i = static_cast<std::size_t>(it - us.begin());
      const double w = (x - us[i - 1]) / (us[i] - us[i - 1]);
      return (1.0 - w) * ks[i - 1] + w * ks[i];
    };
    return out;
  }

  //! Arbitrary kernel function; used to exercise validation.
  static Kernel1D custom(std::string name, std::function<double(double)> fn, double kappa,
                         std::vector<double> breakpoints = {})
  {
    Kernel1D out(KernelId::custom, std::move(name), kappa);
    out.fn_ = std::move(fn);
    out.breakpoints_ = std::move(breakpoints);
    return out;
  }

  double operator()(double u) const
  {
    switch (id_) {
      case KernelId::uniform:
        return std::abs(u) <= 0.5 ? 1.0 : 0.0;
      case KernelId::epanechnikov:
        return std::abs(u) <= 0.5 ? 1.5 * (1.0 - 4.0 * u * u) : 0.0;
      case KernelId::triweight: {
        if (std::abs(u) > 0.5)
          return 0.0;
        const double v = 1.0 - 4.0 * u * u;
        return (35.0 / 16.0) * v * v * v;
      }
      default:
        return fn_(u);
    }
  }

  KernelId id() const noexcept { return id_; }
  const std::string& name() const noexcept { return name_; }
  double kappa() const noexcept { return kappa_; }
  double support_halfwidth() const noexcept { return 0.5; }
  //! Points in [-1/2, 1/2] where the kernel may be non-smooth.
  std::span<const double> breakpoints() const noexcept { return breakpoints_; }

private:
  Kernel1D(KernelId id, std::string name, double kappa)
    : id_(id)
    , name_(std::move(name))
    , kappa_(kappa)
  {}

  KernelId id_;
  std::string name_;
  double kappa_;
  std::vector<double> breakpoints_;
  std::function<double(double)> fn_;
};

//! Looks up a built-in kernel by its config id.
inline Kernel1D
builtin_kernel(const std::string& id)
{
  if (id == "uniform")
    return Kernel1D::uniform();
  if (id == "epanechnikov" || id == "epanechnikov-rescaled")
    return Kernel1D::epanechnikov();
  if (id == "triweight" || id == "triweight-rescaled")
    return Kernel1D::triweight();
  throw InvalidArgument("unknown kernel id '" + id + "'");
}

struct KernelValidationReport
{
  bool pass = false;
  double integral = 0.0;
  double measured_sup = 0.0;
  double kappa = 0.0;
  bool integral_ok = false;
  bool bound_ok = false;
  bool support_ok = false;
  bool is_signed = false; // accepted, but estimator denominators may vanish
  std::vector<double> support_violations;
};

//! Checks support, sup-bound and unit mass. Probes are spread evenly over
//! [-1, 1], so there are points both inside and outside the support.
inline KernelValidationReport
validate_kernel(const Kernel1D& k, std::size_t probe_points = 1001, int quad_order = 64)
{
  if (probe_points < 100)
    throw InvalidArgument("validate_kernel: probe_points must be >= 100");
  if (quad_order < 16)
    throw InvalidArgument("validate_kernel: quad_order must be >= 16");

  KernelValidationReport r;
  r.kappa = k.kappa();
  for (std::size_t i = 0; i < probe_points; ++i) {
    const double u = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(probe_points - 1);
    const double v = k(u);
    r.measured_sup = std::max(r.measured_sup, std::abs(v));
    if (v < 0.0)
      r.is_signed = true;
    if (std::abs(u) > 0.5 && v != 0.0)
      r.support_violations.push_back(u);
  }
  r.integral = integrate(-0.5, 0.5, quad_order, [&k](double u) { return k(u); }, k.breakpoints());
  r.integral_ok = std::abs(r.integral - 1.0) <= 1e-10;
  r.bound_ok = r.measured_sup <= r.kappa * (1.0 + 1e-12);
  r.support_ok = r.support_violations.empty();
  r.pass = r.integral_ok && r.bound_ok && r.support_ok;
  return r;
}

//! K_h(z) = K(z/h)/h; zero whenever |z| > h/2.
inline double
eval_scaled(const Kernel1D& k, double h, double z)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw InvalidBandwidth("bandwidth must be positive and finite, got " + std::to_string(h));
  if (std::abs(z) > 0.5 * h)
    return 0.0;
  return k(z / h) / h;
}

//! Product kernel of order m built from a scalar kernel.
struct ProductKernel
{
  Kernel1D base;
  std::size_t m = 1;
};

//! h^{-m} prod_j K((t_j - x_j)/h), evaluated as the ordered product of
//! eval_scaled factors so that m = 1 coincides with eval_scaled exactly.
inline double
eval_product(const ProductKernel& pk, double h, std::span<const double> t, std::span<const double> x)
{
  if (t.size() != pk.m || x.size() != pk.m)
    throw DimensionMismatch("eval_product: expected vectors of length " + std::to_string(pk.m));
  double out = 1.0;
  for (std::size_t j = 0; j < pk.m; ++j)
    out *= eval_scaled(pk.base, h, t[j] - x[j]);
  return out;
}

} // namespace condu
