#pragma once

#include "condu/dgp.hpp"
#include "condu/errors.hpp"
#include "condu/function_class.hpp"
#include "condu/kernels.hpp"
#include "condu/numeric.hpp"
#include "condu/ucore.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace condu {

enum class CellStatus
{
  ok,
  empty_window,
  nonpositive_denominator
};

inline const char*
to_string(CellStatus s) noexcept
{
  switch (s) {
    case CellStatus::ok:
      return "ok";
    case CellStatus::empty_window:
      return "empty_window";
    case CellStatus::nonpositive_denominator:
      return "nonpositive_denominator";
  }
  return "";
}

struct EstimateCell
{
  std::vector<double> t;
  double h = 0.0;
  std::string phi;
  std::optional<double> mhat;
  double numerator = 0.0;
  double denominator = 0.0;
  CellStatus status = CellStatus::empty_window;
};

namespace detail {

inline EstimateCell
make_cell(const FunctionSpec& phi, double h, std::span<const double> t, double num, double den)
{
  EstimateCell c;
  c.t.assign(t.begin(), t.end());
  c.h = h;
  c.phi = phi.id();
  c.numerator = num;
  c.denominator = den;
  if (den > 0.0) {
    c.status = CellStatus::ok;
    // U_n(c) = c U_n(1) exactly in real arithmetic; keep the ratio exact too.
    c.mhat = phi.kind() == PhiKind::constant ? phi.param() : num / den;
  } else if (den == 0.0) {
    c.status = CellStatus::empty_window;
  } else {
    c.status = CellStatus::nonpositive_denominator;
  }
  return c;
}

} // namespace detail

//! m-hat for several members at one (h, t), sharing the coordinate windows.
//! Every member's numerator is accumulated on its own, so the values agree
//! with separate u_stat_windowed calls bit for bit.
inline std::vector<EstimateCell>
estimate_members(std::span<const FunctionSpec> members, double h, std::span<const double> t,
                 const Sample& s, const SortedIndex& sorted, const Kernel1D& k)
{
  if (members.empty())
    return {};
  const std::size_t m = members.front().m();
  if (t.size() != m)
    throw DimensionMismatch("estimate: t must have length m");
  if (m > s.size())
    throw DegenerateSample("estimate: m exceeds the sample size");
  std::vector<CoordinateWindow> windows;
  windows.reserve(m);
  for (std::size_t j = 0; j < m; ++j)
    windows.push_back(make_window(s, sorted, k, h, t[j]));

  static const auto one = [](std::span<const double>) { return 1.0; };
  std::vector<std::function<double(std::span<const double>)>> fns;
  fns.emplace_back(one);
  for (const auto& phi : members) {
    if (phi.m() != m)
      throw DimensionMismatch("estimate: members differ in arity");
    fns.emplace_back([&phi](std::span<const double> y) { return phi(y); });
  }
  using Fn = std::function<double(std::span<const double>)>;
  const auto sums = windowed_accumulate<Fn>(windows, fns);
  const std::uint64_t total = count_indices(s.size(), m);
  const double den = sums.mean(0, total);
  std::vector<EstimateCell> out;
  out.reserve(members.size());
  for (std::size_t f = 0; f < members.size(); ++f)
    out.push_back(detail::make_cell(members[f], h, t, sums.mean(f + 1, total), den));
  return out;
}

//! m-hat_{n,phi}(t, h) = U_n(phi, h, t) / U_n(1, h, t).
inline EstimateCell
estimate(const FunctionSpec& phi, double h, std::span<const double> t, const Sample& s,
         const SortedIndex& sorted, const Kernel1D& k)
{
  return estimate_members(std::span<const FunctionSpec>(&phi, 1), h, t, s, sorted, k).front();
}

inline EstimateCell
estimate(const FunctionSpec& phi, double h, std::span<const double> t, const Sample& s, const Kernel1D& k)
{
  return estimate(phi, h, t, s, make_sorted_index(s), k);
}

//! f-tilde(t) = prod_j fX(t_j).
inline double
product_density(const DgpSpec& dgp, std::span<const double> t)
{
  double p = 1.0;
  for (double v : t)
    p *= dgp.fx(v);
  return p;
}

//! m_phi(t) = E[phi(Y_1..Y_m) | X = t] from the closed-form table.
inline double
true_regression(const DgpSpec& dgp, const FunctionSpec& phi, std::span<const double> t)
{
  if (t.size() != phi.m())
    throw DimensionMismatch("true_regression: t must have length m");
  return conditional_expectation(phi, dgp, t);
}

using Box = std::vector<std::pair<double, double>>;

namespace detail {

//! Per-axis rules over [z_j - h/2, z_j + h/2] intersected with `box`, split
//! at the kernel breakpoints. Returns false when some axis is empty.
inline bool
window_rules(const Kernel1D& k, double h, std::span<const double> z, const Box& box, int order,
             std::vector<AxisRule>& rules)
{
  rules.assign(z.size(), AxisRule{});
  for (std::size_t j = 0; j < z.size(); ++j) {
    double lo = z[j] - 0.5 * h, hi = z[j] + 0.5 * h;
    if (!box.empty()) {
      lo = std::max(lo, box[j].first);
      hi = std::min(hi, box[j].second);
    }
    if (!(hi > lo))
      return false;
    std::vector<double> cuts;
    for (double b : k.breakpoints())
      cuts.push_back(z[j] - h * b);
    rules[j] = composite_rule(lo, hi, order, cuts);
  }
  return true;
}

} // namespace detail

namespace detail {

//! Neumaier summation in extended precision.
class WideSum
{
public:
  void add(long double v) noexcept
  {
    const long double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  long double value() const noexcept { return sum_ + comp_; }

private:
  long double sum_ = 0.0L;
  long double comp_ = 0.0L;
};

} // namespace detail

//! h^{-d} int phi(x) prod_j K((z_j - x_j)/h) dx by tensor Gauss-Legendre over
//! the kernel window, optionally restricted to `box` (outside of which phi is
//! taken to vanish). The result is divided by the quadrature mass of the
//! kernel over the full window, so constants come back exactly.
template <class Phi>
double
convolve(Phi&& phi, const Kernel1D& k, double h, std::span<const double> z, int quad_order = 64,
         const Box& box = {})
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw InvalidBandwidth("convolve: bandwidth must be positive and finite");
  if (!box.empty() && box.size() != z.size())
    throw DimensionMismatch("convolve: box must match the dimension of z");
  std::vector<AxisRule> rules;
  if (!detail::window_rules(k, h, z, box, quad_order, rules))
    return 0.0;
  detail::WideSum acc, mass;
  for_each_tensor_node(std::span<const AxisRule>(rules), [&](std::span<const double> x, double node_w) {
    double w = node_w;
    for (std::size_t j = 0; j < x.size(); ++j)
      w *= eval_scaled(k, h, z[j] - x[j]);
    mass.add(w);
    if (w != 0.0)
      acc.add(static_cast<long double>(w) * static_cast<long double>(phi(x)));
  });
  long double total = mass.value();
  if (!box.empty()) {
    std::vector<AxisRule> full;
    detail::window_rules(k, h, z, {}, quad_order, full);
    total = 1.0L;
    for (std::size_t j = 0; j < z.size(); ++j) {
      detail::WideSum axis;
      for (std::size_t i = 0; i < full[j].nodes.size(); ++i)
        axis.add(static_cast<long double>(full[j].weights[i]) * eval_scaled(k, h, z[j] - full[j].nodes[i]));
      total *= axis.value();
    }
  }
  if (total == 0.0L)
    throw InvalidArgument("convolve: kernel has no mass on the window");
  return static_cast<double>(acc.value() / total);
}

//! Support box of the product density, one interval per coordinate.
inline Box
support_box(const DgpSpec& dgp, std::size_t m)
{
  return Box(m, { dgp.x.support_lo(), dgp.x.support_hi() });
}

//! (f-tilde * K-tilde_h)(t) and (m_phi f-tilde * K-tilde_h)(t) for several
//! members in one tensor pass.
struct CenteringParts
{
  double density = 0.0;
  std::vector<double> weighted;
};

inline CenteringParts
centering_parts(std::span<const FunctionSpec> members, double h, std::span<const double> t,
                const DgpSpec& dgp, const Kernel1D& k, int quad_order = 64)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw InvalidBandwidth("centering: bandwidth must be positive and finite");
  const std::size_t m = t.size();
  CenteringParts out;
  out.weighted.assign(members.size(), 0.0);
  std::vector<AxisRule> rules;
  if (!detail::window_rules(k, h, t, support_box(dgp, m), quad_order, rules))
    return out;
  // Walk the tensor grid once and keep one compensated sum per member.
  CompensatedSum dens;
  std::vector<CompensatedSum> acc(members.size());
  for_each_tensor_node(std::span<const AxisRule>(rules), [&](std::span<const double> x, double node_w) {
    double w = node_w;
    for (std::size_t j = 0; j < m; ++j)
      w *= eval_scaled(k, h, t[j] - x[j]) * dgp.fx(x[j]);
    if (w == 0.0)
      return;
    dens.add(w);
    for (std::size_t f = 0; f < members.size(); ++f)
      acc[f].add(w * conditional_expectation(members[f], dgp, x));
  });
  out.density = dens.value();
  for (std::size_t f = 0; f < members.size(); ++f)
    out.weighted[f] = acc[f].value();
  return out;
}

//! E-hat m-hat = [(m_phi f-tilde) * K-tilde_h](t) / [f-tilde * K-tilde_h](t).
inline double
centering(const FunctionSpec& phi, double h, std::span<const double> t, const DgpSpec& dgp,
          const Kernel1D& k, int quad_order = 64)
{
  if (t.size() != phi.m())
    throw DimensionMismatch("centering: t must have length m");
  const auto parts = centering_parts(std::span<const FunctionSpec>(&phi, 1), h, t, dgp, k, quad_order);
  if (!(parts.density > 1e-14))
    throw ZeroDensityWindow("centering: density convolution vanishes at this (h, t)");
  if (phi.kind() == PhiKind::constant)
    return phi.param();
  return parts.weighted[0] / parts.density;
}

//! max over members and grid points of |E-hat m-hat - m_phi|.
inline double
bias_sup(const DgpSpec& dgp, const FunctionClass& fc, double h,
         std::span<const std::vector<double>> t_grid, const Kernel1D& k, int quad_order = 64)
{
  double worst = 0.0;
  for (const auto& t : t_grid)
    for (const auto& phi : fc.members())
      worst = std::max(worst, std::abs(centering(phi, h, t, dgp, k, quad_order) - true_regression(dgp, phi, t)));
  return worst;
}

} // namespace condu
