#pragma once

#include "condu/dgp.hpp"
#include "condu/errors.hpp"
#include "condu/function_spec.hpp"
#include "condu/numeric.hpp"
#include "condu/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace condu {

struct BoundedRegime
{
  double M = 1.0;
};

struct UnboundedRegime
{
  double p = 3.0;
  std::optional<double> mu_p; // unknown unless estimated or declared
};

using ClassRegime = std::variant<BoundedRegime, UnboundedRegime>;

//! Envelope F >= sup_phi |phi|.
class Envelope
{
public:
  enum class Kind
  {
    pointwise_max, // max over members of |phi(y)|
    abs_sum,       // sum_j |y_j|
    abs_product,   // prod_j |y_j|
    constant,
    custom
  };

  static Envelope pointwise_max() { return Envelope(Kind::pointwise_max); }
  static Envelope abs_sum() { return Envelope(Kind::abs_sum); }
  static Envelope abs_product() { return Envelope(Kind::abs_product); }
  static Envelope constant(double c)
  {
    Envelope e(Kind::constant);
    e.c_ = c;
    return e;
  }
  static Envelope custom(std::function<double(std::span<const double>)> fn)
  {
    Envelope e(Kind::custom);
    e.fn_ = std::move(fn);
    return e;
  }

  double operator()(std::span<const FunctionSpec> members, std::span<const double> y) const
  {
    switch (kind_) {
      case Kind::pointwise_max: {
        double out = 0.0;
        for (const auto& f : members)
          out = std::max(out, std::abs(f(y)));
        return out;
      }
      case Kind::abs_sum: {
        double s = 0.0;
        for (double v : y)
          s += std::abs(v);
        return s;
      }
      case Kind::abs_product: {
        double p = 1.0;
        for (double v : y)
          p *= std::abs(v);
        return p;
      }
      case Kind::constant:
        return c_;
      case Kind::custom:
        return fn_(y);
    }
    return 0.0;
  }

  Kind kind() const noexcept { return kind_; }
  std::string name() const
  {
    switch (kind_) {
      case Kind::pointwise_max:
        return "pointwise_max";
      case Kind::abs_sum:
        return "abs_sum";
      case Kind::abs_product:
        return "abs_product";
      case Kind::constant:
        return "const";
      case Kind::custom:
        return "custom";
    }
    return "";
  }

private:
  explicit Envelope(Kind k)
    : kind_(k)
  {}
  Kind kind_;
  double c_ = 0.0;
  std::function<double(std::span<const double>)> fn_;
};

//! Finite family of m-argument functions with an envelope and a boundedness
//! regime. The sup over the class is a max over `members`.
class FunctionClass
{
public:
  FunctionClass(std::vector<FunctionSpec> members, Envelope envelope, ClassRegime regime)
    : members_(std::move(members))
    , envelope_(std::move(envelope))
    , regime_(regime)
  {
    if (members_.empty())
      throw InvalidArgument("function class needs at least one member");
    m_ = members_.front().m();
    for (const auto& f : members_)
      if (f.m() != m_)
        throw DimensionMismatch("all members of a function class must share the arity m");
    if (const auto* b = std::get_if<BoundedRegime>(&regime_); b && !(b->M > 0.0))
      throw InvalidArgument("bounded regime needs M > 0");
    if (const auto* u = std::get_if<UnboundedRegime>(&regime_); u && !(u->p > 2.0))
      throw InvalidArgument("unbounded regime needs p > 2");
  }

  std::size_t m() const noexcept { return m_; }
  const std::vector<FunctionSpec>& members() const noexcept { return members_; }
  const Envelope& envelope() const noexcept { return envelope_; }
  const ClassRegime& regime() const noexcept { return regime_; }
  bool bounded() const noexcept { return std::holds_alternative<BoundedRegime>(regime_); }

  double envelope_at(std::span<const double> y) const { return envelope_(members_, y); }

private:
  std::vector<FunctionSpec> members_;
  Envelope envelope_;
  ClassRegime regime_;
  std::size_t m_ = 1;
};

struct EnvelopeReport
{
  bool pass = false;
  double max_violation = -std::numeric_limits<double>::infinity();
  std::string member;
  std::vector<double> point;
  //! max over probes of F(y) - M; only meaningful for bounded classes.
  double bound_violation = -std::numeric_limits<double>::infinity();
};

//! violation = max over probes and members of |phi(y)| - F(y).
inline EnvelopeReport
envelope_check(const FunctionClass& fc, std::span<const std::vector<double>> probes)
{
  if (probes.empty())
    throw InvalidArgument("envelope_check: probes must be nonempty");
  EnvelopeReport r;
  const auto* bounded = std::get_if<BoundedRegime>(&fc.regime());
  for (const auto& y : probes) {
    if (y.size() != fc.m())
      throw DimensionMismatch("envelope_check: probe of wrong length");
    const double env = fc.envelope_at(y);
    for (const auto& phi : fc.members()) {
      const double v = std::abs(phi(y)) - env;
      if (v > r.max_violation) {
        r.max_violation = v;
        r.member = phi.id();
        r.point = y;
      }
    }
    if (bounded)
      r.bound_violation = std::max(r.bound_violation, env - bounded->M);
  }
  r.pass = r.max_violation <= 0.0 && (!bounded || r.bound_violation <= 0.0);
  return r;
}

//! kappa^m * sum over all permutations sigma of F(y_sigma).
inline double
envelope_tilde(const FunctionClass& fc, double kappa, std::span<const double> y)
{
  if (y.size() != fc.m())
    throw DimensionMismatch("envelope_tilde: expected length " + std::to_string(fc.m()));
  CompensatedSum s;
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<double> ys(y.size());
  do {
    for (std::size_t j = 0; j < y.size(); ++j)
      ys[j] = y[idx[j]];
    s.add(fc.envelope_at(ys));
  } while (std::next_permutation(idx.begin(), idx.end()));
  return std::pow(kappa, static_cast<double>(fc.m())) * s.value();
}

//! Monte Carlo estimate of mu_p = sup_x E[F^p(Y) | X = x], the sup taken over
//! the supplied grid only.
inline double
conditional_moment_estimate(const FunctionClass& fc, const DgpSpec& dgp, double p,
                            std::span<const std::vector<double>> x_grid, std::size_t mc_reps,
                            std::uint64_t seed)
{
  if (!(p > 2.0))
    throw InvalidArgument("conditional_moment_estimate: p must exceed 2");
  if (mc_reps < 1000)
    throw InvalidArgument("conditional_moment_estimate: mc_reps must be >= 1000");
  if (x_grid.empty())
    throw InvalidArgument("conditional_moment_estimate: x_grid must be nonempty");
  double best = 0.0;
  std::vector<double> y(fc.m());
  for (std::size_t g = 0; g < x_grid.size(); ++g) {
    const auto& x = x_grid[g];
    if (x.size() != fc.m())
      throw DimensionMismatch("conditional_moment_estimate: grid point of wrong length");
    CounterRng rng(derive_key(seed, { g }));
    CompensatedSum s;
    for (std::size_t r = 0; r < mc_reps; ++r) {
      for (std::size_t j = 0; j < fc.m(); ++j)
        y[j] = dgp.draw_y(x[j], rng);
      s.add(std::pow(fc.envelope_at(y), p));
    }
    best = std::max(best, s.value() / static_cast<double>(mc_reps));
  }
  return best;
}

} // namespace condu
