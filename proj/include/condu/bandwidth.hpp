#pragma once

#include "condu/errors.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace condu {

struct RateRegime
{
  enum class Kind
  {
    bounded,
    unbounded
  };

  Kind kind = Kind::bounded;
  double c = 1.0;
  std::size_t m = 1;
  double p = 0.0; // used only when unbounded
  double b0 = 0.5;
  // Unbounded classes swept from a_n instead of a_n'; a diagnostic run only.
  bool plain_anchor = false;

  static RateRegime bounded(double c, std::size_t m, double b0 = 0.5)
  {
    RateRegime r{ Kind::bounded, c, m, 0.0, b0 };
    r.validate();
    return r;
  }
  static RateRegime unbounded(double c, std::size_t m, double p, double b0 = 0.5)
  {
    RateRegime r{ Kind::unbounded, c, m, p, b0 };
    r.validate();
    return r;
  }

  void validate() const
  {
    if (!(c > 0.0))
      throw InvalidArgument("rate regime: c must be positive");
    if (m == 0)
      throw InvalidArgument("rate regime: m must be >= 1");
    if (kind == Kind::unbounded && !(p > 2.0))
      throw InvalidArgument("rate regime: unbounded classes need p > 2");
    if (!(b0 > 0.0 && b0 < 1.0))
      throw InvalidArgument("rate regime: b0 must lie in (0, 1)");
  }
};

//! a_n = c (ln n / n)^{1/m} for bounded classes, and
//! a_n' = c ((ln n / n)^{1 - 2/p})^{1/m} for unbounded ones unless the
//! regime asks for the plain anchor.
inline double
lower_bandwidth(const RateRegime& regime, std::uint64_t n)
{
  if (n < 3)
    throw SampleTooSmall("lower_bandwidth: n must be >= 3, got " + std::to_string(n));
  const double nd = static_cast<double>(n);
  double base = std::log(nd) / nd;
  if (regime.kind == RateRegime::Kind::unbounded && !regime.plain_anchor)
    base = std::pow(base, 1.0 - 2.0 / regime.p);
  return regime.c * std::pow(base, 1.0 / static_cast<double>(regime.m));
}

struct DyadicGrid
{
  std::size_t ell = 0;
  std::uint64_t n_ell = 0;
  std::vector<double> anchors; // h_{ell,0..L}
  std::size_t L = 0;
};

//! h_{ell,j}^m = 2^j a_{n_ell}^m for j = 0..L with L = max{j : h_{ell,j} <= 2 b0}.
inline DyadicGrid
dyadic_grid(const RateRegime& regime, std::size_t ell)
{
  if (ell < 2 || ell > 62)
    throw InvalidArgument("dyadic_grid: ell must lie in [2, 62]");
  regime.validate();
  DyadicGrid g;
  g.ell = ell;
  g.n_ell = std::uint64_t{1} << ell;
  const double a0 = lower_bandwidth(regime, g.n_ell);
  if (a0 > regime.b0)
    throw EmptyBandwidthRange("dyadic_grid: a_n = " + std::to_string(a0) + " exceeds b0 = " +
                              std::to_string(regime.b0));
  const double md = static_cast<double>(regime.m);
  const double a0m = std::pow(a0, md);
  for (std::size_t j = 0;; ++j) {
    const double hj = j == 0 ? a0 : std::pow(std::ldexp(a0m, static_cast<int>(j)), 1.0 / md);
    if (hj > 2.0 * regime.b0)
      break;
    g.anchors.push_back(hj);
  }
  g.L = g.anchors.size() - 1;
  return g;
}

struct GammaThreshold
{
  double gamma = 0.0;
  double threshold = 0.0;
};

//! gamma_ell = n_ell / ln n_ell with n_ell = 2^ell; threshold = eps * gamma^{1/p}.
inline GammaThreshold
gamma_threshold(std::size_t ell, double epsilon, double p)
{
  if (ell < 2)
    throw InvalidArgument("gamma_threshold: ell must be >= 2");
  if (!(epsilon > 0.0))
    throw InvalidArgument("gamma_threshold: epsilon must be positive");
  if (!(p > 2.0))
    throw InvalidArgument("gamma_threshold: p must exceed 2");
  GammaThreshold g;
  g.gamma = std::ldexp(1.0, static_cast<int>(ell)) / (static_cast<double>(ell) * std::numbers::ln2);
  g.threshold = epsilon * std::pow(g.gamma, 1.0 / p);
  return g;
}

//! sqrt(n h^m) / sqrt(max(|ln h|, ln ln max(n, 16))).
inline double
normalizer(std::uint64_t n, double h, std::size_t m)
{
  if (n < 3)
    throw SampleTooSmall("normalizer: n must be >= 3");
  if (!(h > 0.0))
    throw InvalidBandwidth("normalizer: h must be positive");
  if (h >= 1.0)
    throw BandwidthOutOfRange("normalizer: h must be below 1, got " + std::to_string(h));
  const double nd = static_cast<double>(n);
  const double loglog = std::log(std::log(std::max(nd, 16.0)));
  const double denom = std::max(std::abs(std::log(h)), loglog);
  return std::sqrt(nd * std::pow(h, static_cast<double>(m))) / std::sqrt(denom);
}

using SplitKernel = std::function<double(std::span<const double>, std::span<const double>)>;

//! Gbar = truncated + remainder, split on Ftilde(y) <= threshold.
struct TruncationSplit
{
  double threshold = 0.0;
  SplitKernel truncated;
  SplitKernel remainder;
};

inline TruncationSplit
truncate_split(SplitKernel gbar, std::function<double(std::span<const double>)> ftilde, double threshold)
{
  if (!(threshold > 0.0))
    throw InvalidArgument("truncate_split: threshold must be positive");
  TruncationSplit s;
  s.threshold = threshold;
  s.truncated = [gbar, ftilde, threshold](std::span<const double> x, std::span<const double> y) {
    return ftilde(y) <= threshold ? gbar(x, y) : 0.0;
  };
  s.remainder = [gbar, ftilde, threshold](std::span<const double> x, std::span<const double> y) {
    return ftilde(y) > threshold ? gbar(x, y) : 0.0;
  };
  return s;
}

} // namespace condu
