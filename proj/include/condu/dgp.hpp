#pragma once

#include "condu/errors.hpp"
#include "condu/function_spec.hpp"
#include "condu/numeric.hpp"
#include "condu/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace condu {

//! Marginal law of X.
struct MarginalX
{
  enum class Kind
  {
    uniform, // on [lo, hi]
    normal,  // N(mean, sd^2)
    beta22   // Beta(2,2) rescaled to [lo, hi]
  };
  Kind kind = Kind::uniform;
  double lo = 0.0;
  double hi = 1.0;
  double mean = 0.0;
  double sd = 1.0;

  static MarginalX uniform(double lo = 0.0, double hi = 1.0) { return { Kind::uniform, lo, hi }; }
  static MarginalX normal(double mean = 0.0, double sd = 1.0)
  {
    return { Kind::normal, -std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(), mean, sd };
  }
  static MarginalX beta22(double lo = 0.0, double hi = 1.0) { return { Kind::beta22, lo, hi }; }

  double pdf(double x) const noexcept
  {
    switch (kind) {
      case Kind::uniform:
        return (x >= lo && x <= hi) ? 1.0 / (hi - lo) : 0.0;
      case Kind::normal:
        return normal_pdf((x - mean) / sd) / sd;
      case Kind::beta22: {
        if (x < lo || x > hi)
          return 0.0;
        const double w = hi - lo, u = (x - lo) / w;
        return 6.0 * u * (1.0 - u) / w;
      }
    }
    return 0.0;
  }

  double cdf(double x) const noexcept
  {
    switch (kind) {
      case Kind::uniform:
        return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
      case Kind::normal:
        return normal_cdf((x - mean) / sd);
      case Kind::beta22: {
        const double u = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
        return u * u * (3.0 - 2.0 * u);
      }
    }
    return 0.0;
  }

  double sample(CounterRng& rng) const noexcept
  {
    switch (kind) {
      case Kind::uniform:
        return rng.uniform(lo, hi);
      case Kind::normal:
        return mean + sd * rng.normal();
      case Kind::beta22: {
        // Median of three uniforms is Beta(2,2).
        const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
        const double med = std::max(std::min(a, b), std::min(std::max(a, b), c));
        return lo + (hi - lo) * med;
      }
    }
    return 0.0;
  }

  //! Interval outside of which the density is (numerically) zero.
  double support_lo() const noexcept { return kind == Kind::normal ? mean - 12.0 * sd : lo; }
  double support_hi() const noexcept { return kind == Kind::normal ? mean + 12.0 * sd : hi; }
  //! True when the density has jumps at the support ends.
  bool bounded_support() const noexcept { return kind != Kind::normal; }
};

//! Regression link r with Y = r(X) + noise.
struct Regression
{
  enum class Kind
  {
    polynomial, // sum_i coef[i] x^i
    sine        // amplitude * sin(2 pi frequency x + phase) + offset
  };
  Kind kind = Kind::polynomial;
  std::vector<double> coef{ 0.0, 1.0 };
  double amplitude = 1.0;
  double frequency = 1.0;
  double phase = 0.0;
  double offset = 0.0;

  static Regression polynomial(std::vector<double> c) { return { Kind::polynomial, std::move(c) }; }
  static Regression sine(double amplitude, double frequency, double phase = 0.0, double offset = 0.0)
  {
    return { Kind::sine, {}, amplitude, frequency, phase, offset };
  }

  double operator()(double x) const noexcept
  {
    if (kind == Kind::sine)
      return amplitude * std::sin(2.0 * std::numbers::pi * frequency * x + phase) + offset;
    double r = 0.0;
    for (auto it = coef.rbegin(); it != coef.rend(); ++it)
      r = r * x + *it;
    return r;
  }
};

//! Centered additive noise.
struct Noise
{
  enum class Kind
  {
    none,
    gaussian, // N(0, sigma^2)
    uniform   // U[-a, a]
  };
  Kind kind = Kind::none;
  double scale = 0.0; // sigma or a

  static Noise none() { return {}; }
  static Noise gaussian(double sigma) { return { Kind::gaussian, sigma }; }
  static Noise uniform(double a) { return { Kind::uniform, a }; }

  double sample(CounterRng& rng) const noexcept
  {
    switch (kind) {
      case Kind::none:
        return 0.0;
      case Kind::gaussian:
        return scale * rng.normal();
      case Kind::uniform:
        return rng.uniform(-scale, scale);
    }
    return 0.0;
  }

  //! E[eps^k].
  double raw_moment(int k) const noexcept
  {
    if (k == 0)
      return 1.0;
    if (kind == Kind::none || k % 2 == 1)
      return 0.0;
    if (kind == Kind::gaussian) {
      double df = 1.0; // (k-1)!!
      for (int i = k - 1; i > 1; i -= 2)
        df *= i;
      return df * FunctionSpec::ipow(scale, k);
    }
    return FunctionSpec::ipow(scale, k) / (k + 1);
  }

  double cdf(double z) const noexcept
  {
    switch (kind) {
      case Kind::none:
        return z >= 0.0 ? 1.0 : 0.0;
      case Kind::gaussian:
        return normal_cdf(z / scale);
      case Kind::uniform:
        return std::clamp((z + scale) / (2.0 * scale), 0.0, 1.0);
    }
    return 0.0;
  }
};

//! Fully specified joint law of (X, Y) used as simulation ground truth.
struct DgpSpec
{
  std::string id = "dgp";
  MarginalX x;
  Regression r;
  Noise noise;

  double fx(double x_) const noexcept { return x.pdf(x_); }

  //! Checks that fX integrates to one over its support within 1e-8.
  void validate() const
  {
    if (x.kind == MarginalX::Kind::normal ? !(x.sd > 0.0) : !(x.hi > x.lo))
      throw InvalidArgument("dgp '" + id + "': degenerate X law");
    if (noise.kind != Noise::Kind::none && !(noise.scale > 0.0))
      throw InvalidArgument("dgp '" + id + "': noise scale must be positive");
    std::vector<double> cuts;
    if (x.kind == MarginalX::Kind::normal)
      for (int k = -11; k <= 11; ++k)
        cuts.push_back(x.mean + k * x.sd);
    const double mass =
      integrate(x.support_lo(), x.support_hi(), 64, [this](double v) { return fx(v); }, cuts);
    if (std::abs(mass - 1.0) > 1e-8)
      throw InvalidArgument("dgp '" + id + "': fX integrates to " + std::to_string(mass));
  }

  //! One draw of (X, Y).
  std::pair<double, double> draw(CounterRng& rng) const noexcept
  {
    const double xv = x.sample(rng);
    return { xv, r(xv) + noise.sample(rng) };
  }

  //! Y | X = x_ draw.
  double draw_y(double x_, CounterRng& rng) const noexcept { return r(x_) + noise.sample(rng); }
};

namespace detail {

//! E[clamp(S, -c, c)] for S = mu + sum of k iid U[-a, a] (Irwin-Hall), by
//! Gauss-Legendre on the polynomial pieces.
inline double
expected_clip_uniform_sum(double mu, int k, double a, double c)
{
  if (k == 0)
    return std::clamp(mu, -c, c);
  // V = sum (U_i + a) / (2a) ~ Irwin-Hall(k); S = mu - k a + 2 a V.
  auto ih_pdf = [k](double v) {
    if (v < 0.0 || v > k)
      return 0.0;
    double s = 0.0, fact = 1.0;
    for (int i = 2; i < k; ++i)
      fact *= i;
    for (int j = 0; j <= static_cast<int>(std::floor(v)); ++j)
      s += ((j % 2) ? -1.0 : 1.0) * binomial(k, j) * FunctionSpec::ipow(v - j, k - 1);
    return s / fact;
  };
  std::vector<double> cuts;
  for (int j = 1; j < k; ++j)
    cuts.push_back(j);
  cuts.push_back((-c - mu + k * a) / (2.0 * a));
  cuts.push_back((c - mu + k * a) / (2.0 * a));
  return integrate(0.0, static_cast<double>(k), 32,
                   [&](double v) { return std::clamp(mu - k * a + 2.0 * a * v, -c, c) * ih_pdf(v); },
                   cuts);
}

//! E[clamp(S, lo, hi)] for S ~ N(mu, s^2).
inline double
expected_clip_normal(double mu, double s, double lo, double hi)
{
  if (s == 0.0)
    return std::clamp(mu, lo, hi);
  const double a = (lo - mu) / s, b = (hi - mu) / s;
  return lo * normal_cdf(a) + hi * (1.0 - normal_cdf(b)) + mu * (normal_cdf(b) - normal_cdf(a)) +
         s * (normal_pdf(a) - normal_pdf(b));
}

} // namespace detail

//! E[phi(Y_1..Y_m)] where coordinate j is the fixed value `fixed[j]` when
//! present and Y_j = r(x_j) + eps_j otherwise, with independent noise. This
//! is the closed-form table behind m_phi and the linear Hoeffding kernel.
//! Unsupported (phi, noise) pairs signal NoClosedFormConditional.
inline double
conditional_expectation(const FunctionSpec& phi, const DgpSpec& dgp, std::span<const double> x,
                        std::span<const std::optional<double>> fixed = {})
{
  const std::size_t m = phi.m();
  if (x.size() != m || (!fixed.empty() && fixed.size() != m))
    throw DimensionMismatch("conditional_expectation: expected " + std::to_string(m) + " coordinates");
  auto is_fixed = [&](std::size_t j) { return !fixed.empty() && fixed[j].has_value(); };
  std::vector<double> centre(m);
  int free = 0;
  for (std::size_t j = 0; j < m; ++j) {
    centre[j] = is_fixed(j) ? *fixed[j] : dgp.r(x[j]);
    if (!is_fixed(j))
      ++free;
  }
  const Noise& eps = dgp.noise;
  if (eps.kind == Noise::Kind::none || free == 0)
    return phi(centre);

  switch (phi.kind()) {
    case PhiKind::constant:
      return phi.param();
    case PhiKind::sum: {
      double s = 0.0;
      for (double v : centre)
        s += v;
      return s;
    }
    case PhiKind::product: {
      double p = 1.0;
      for (double v : centre)
        p *= v;
      return p;
    }
    case PhiKind::identity_j:
      return centre[phi.index()];
    case PhiKind::polynomial: {
      double s = 0.0;
      for (const auto& term : phi.terms()) {
        double p = term.coef;
        for (std::size_t j = 0; j < m; ++j) {
          const int pw = term.powers[j];
          if (is_fixed(j)) {
            p *= FunctionSpec::ipow(centre[j], pw);
            continue;
          }
          double mom = 0.0; // E[(r + eps)^pw]
          for (int i = 0; i <= pw; ++i)
            mom += binomial(pw, i) * FunctionSpec::ipow(centre[j], pw - i) * eps.raw_moment(i);
          p *= mom;
        }
        s += p;
      }
      return s;
    }
    case PhiKind::indicator_leq: {
      double p = 1.0;
      for (std::size_t j = 0; j < m; ++j)
        p *= is_fixed(j) ? (centre[j] <= phi.param() ? 1.0 : 0.0) : eps.cdf(phi.param() - centre[j]);
      return p;
    }
    case PhiKind::sum_clipped: {
      double mu = 0.0;
      for (double v : centre)
        mu += v;
      const double c = phi.param();
      if (eps.kind == Noise::Kind::gaussian)
        return detail::expected_clip_normal(mu, eps.scale * std::sqrt(static_cast<double>(free)), -c, c);
      return detail::expected_clip_uniform_sum(mu, free, eps.scale, c);
    }
    case PhiKind::max: {
      if (eps.kind != Noise::Kind::uniform)
        break;
      // E[max] = lo + int_lo^hi (1 - prod_j F_j(z)) dz over a range holding all Y_j.
      const double a = eps.scale;
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      std::vector<double> cuts;
      for (std::size_t j = 0; j < m; ++j) {
        const double l = is_fixed(j) ? centre[j] : centre[j] - a;
        const double h = is_fixed(j) ? centre[j] : centre[j] + a;
        lo = std::min(lo, l);
        hi = std::max(hi, h);
        cuts.push_back(l);
        cuts.push_back(h);
      }
      auto survival = [&](double z) {
        double cdf = 1.0;
        for (std::size_t j = 0; j < m; ++j)
          cdf *= is_fixed(j) ? (z >= centre[j] ? 1.0 : 0.0) : eps.cdf(z - centre[j]);
        return 1.0 - cdf;
      };
      return lo + integrate(lo, hi, 16, survival, cuts);
    }
    case PhiKind::custom:
      break;
  }
  throw NoClosedFormConditional("no closed-form conditional mean for phi '" + phi.id() +
                                "' under this noise law");
}

} // namespace condu
