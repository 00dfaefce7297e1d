#pragma once

#include "condu/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

namespace condu {

//! Neumaier-compensated running sum. Adding an exact zero leaves the state
//! untouched, so sums that skip zero terms agree bit-for-bit with sums that
//! include them.
class CompensatedSum
{
public:
  void add(double v) noexcept
  {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }

  double value() const noexcept { return sum_ + comp_; }

  //! Sum divided by `count`, with the two parts combined in extended
  //! precision so that averaging a constant returns it exactly.
  double mean(std::uint64_t count) const noexcept
  {
    const long double total = static_cast<long double>(sum_) + static_cast<long double>(comp_);
    return static_cast<double>(total / static_cast<long double>(count));
  }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double
compensated_sum(std::span<const double> values)
{
  CompensatedSum s;
  for (double v : values)
    s.add(v);
  return s.value();
}

//! n!/(n-k)!, the number of ordered k-tuples of distinct indices out of n.
//! Saturates at the largest uint64 on overflow.
inline std::uint64_t
falling_factorial(std::uint64_t n, std::uint64_t k) noexcept
{
  if (k > n)
    return 0;
  std::uint64_t out = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    const std::uint64_t f = n - i;
    if (out > std::numeric_limits<std::uint64_t>::max() / f)
      return std::numeric_limits<std::uint64_t>::max();
    out *= f;
  }
  return out;
}

inline std::uint64_t
factorial(std::uint64_t m) noexcept
{
  return falling_factorial(m, m);
}

inline double
binomial(int n, int k) noexcept
{
  if (k < 0 || k > n)
    return 0.0;
  double out = 1.0;
  for (int i = 1; i <= k; ++i)
    out = out * (n - k + i) / i;
  return std::round(out);
}

//! All permutations of {0,...,m-1} in lexicographic order.
inline std::vector<std::vector<std::size_t>>
all_permutations(std::size_t m)
{
  std::vector<std::size_t> p(m);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature
// ---------------------------------------------------------------------------

struct GaussLegendreRule
{
  std::vector<double> nodes;   // on [-1, 1], ascending
  std::vector<double> weights;
};

namespace detail {

inline GaussLegendreRule
compute_gauss_legendre(int order)
{
  GaussLegendreRule rule;
  rule.nodes.assign(order, 0.0);
  rule.weights.assign(order, 2.0);
  if (order == 1)
    return rule;
  // P_n and P_n' at x via the three-term recurrence.
  auto legendre = [order](double x, double& deriv) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    deriv = order * (x * p1 - p0) / (x * x - 1.0);
    return p1;
  };
  for (int i = 0; i < order / 2; ++i) {
    // Tricomi initial guess, then Newton.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      const double dx = legendre(x, dp) / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    legendre(x, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[order - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[order - 1 - i] = w;
    rule.weights[i] = w;
  }
  if (order % 2 == 1) {
    double dp = 0.0;
    legendre(0.0, dp);
    rule.weights[order / 2] = 2.0 / (dp * dp);
  }
  return rule;
}

} // namespace detail

//! Cached Gauss-Legendre rule of the given order (1 <= order <= 512).
inline const GaussLegendreRule&
gauss_legendre(int order)
{
  if (order < 1 || order > 512)
    throw InvalidArgument("gauss_legendre: order must lie in [1, 512]");
  static std::mutex mutex;
  static std::map<int, GaussLegendreRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end())
    it = cache.emplace(order, detail::compute_gauss_legendre(order)).first;
  return it->second;
}

//! Nodes and weights of a one-dimensional composite rule.
struct AxisRule
{
  std::vector<double> nodes;
  std::vector<double> weights;
};

//! Composite Gauss-Legendre rule on [a, b]; each panel between consecutive
//! breakpoints (those strictly inside (a, b)) gets `order` nodes.
inline AxisRule
composite_rule(double a, double b, int order, std::span<const double> breakpoints = {})
{
  AxisRule out;
  if (!(b > a))
    return out;
  std::vector<double> cuts{ a };
  std::vector<double> inner(breakpoints.begin(), breakpoints.end());
  std::sort(inner.begin(), inner.end());
  for (double c : inner)
    if (c > a && c < b && c > cuts.back())
      cuts.push_back(c);
  cuts.push_back(b);
  const auto& rule = gauss_legendre(order);
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double lo = cuts[p], hi = cuts[p + 1];
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (int i = 0; i < order; ++i) {
      out.nodes.push_back(mid + half * rule.nodes[i]);
      out.weights.push_back(half * rule.weights[i]);
    }
  }
  return out;
}

template <class F>
double
integrate(const AxisRule& rule, F&& f)
{
  CompensatedSum s;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    s.add(rule.weights[i] * f(rule.nodes[i]));
  return s.value();
}

template <class F>
double
integrate(double a, double b, int order, F&& f, std::span<const double> breakpoints = {})
{
  return integrate(composite_rule(a, b, order, breakpoints), std::forward<F>(f));
}

//! Visits every node of a tensor-product rule in lexicographic order (last
//! axis fastest), passing the point and its product weight.
template <class F>
void
for_each_tensor_node(std::span<const AxisRule> axes, F&& f)
{
  const std::size_t d = axes.size();
  if (d == 0) {
    f(std::span<const double>{}, 1.0);
    return;
  }
  for (const auto& a : axes)
    if (a.nodes.empty())
      return;
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> point(d);
  while (true) {
    double w = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      point[j] = axes[j].nodes[idx[j]];
      w *= axes[j].weights[idx[j]];
    }
    f(std::span<const double>(point), w);
    std::size_t j = d;
    while (j > 0) {
      --j;
      if (++idx[j] < axes[j].nodes.size())
        break;
      idx[j] = 0;
      if (j == 0)
        return;
    }
  }
}

//! Tensor-product quadrature over per-axis rules, reproducible node order.
template <class F>
double
integrate_tensor(std::span<const AxisRule> axes, F&& f)
{
  CompensatedSum s;
  for_each_tensor_node(axes, [&](std::span<const double> x, double w) { s.add(w * f(x)); });
  return s.value();
}

// ---------------------------------------------------------------------------
// Normal distribution helpers
// ---------------------------------------------------------------------------

inline double
normal_pdf(double z) noexcept
{
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double
normal_cdf(double z) noexcept
{
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

//! Sample mean and standard error of the mean.
struct MeanSe
{
  double mean = 0.0;
  double variance = 0.0; // unbiased sample variance
  double se = 0.0;
};

inline MeanSe
mean_se(std::span<const double> v)
{
  MeanSe out;
  const auto n = v.size();
  if (n == 0)
    return out;
  out.mean = compensated_sum(v) / static_cast<double>(n);
  if (n < 2)
    return out;
  CompensatedSum ss;
  for (double x : v)
    ss.add((x - out.mean) * (x - out.mean));
  out.variance = ss.value() / static_cast<double>(n - 1);
  out.se = std::sqrt(out.variance / static_cast<double>(n));
  return out;
}

} // namespace condu
