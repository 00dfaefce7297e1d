#pragma once

#include "condu/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace condu {

enum class PhiKind
{
  constant,
  sum,
  product,
  max,
  indicator_leq, // prod_j 1{y_j <= c}
  identity_j,    // y_j
  sum_clipped,   // clamp(sum_j y_j, -c, c)
  polynomial,    // sum_terms coef * prod_j y_j^{p_j}
  custom
};

struct PolyTerm
{
  double coef = 0.0;
  std::vector<int> powers;
};

//! One member phi: R^m -> R of a function class. Built-in kinds are
//! evaluated through a switch so the hot loops of the U-statistic sums stay
//! free of indirect calls.
class FunctionSpec
{
public:
  static FunctionSpec constant(std::size_t m, double c)
  {
    FunctionSpec f("const:" + fmt_param(c), m, PhiKind::constant);
    f.param_ = c;
    return f;
  }
  static FunctionSpec one(std::size_t m)
  {
    FunctionSpec f("one", m, PhiKind::constant);
    f.param_ = 1.0;
    return f;
  }
  static FunctionSpec sum(std::size_t m) { return FunctionSpec("sum", m, PhiKind::sum); }
  static FunctionSpec product(std::size_t m) { return FunctionSpec("product", m, PhiKind::product); }
  static FunctionSpec max(std::size_t m) { return FunctionSpec("max", m, PhiKind::max); }
  static FunctionSpec indicator_leq(std::size_t m, double c)
  {
    FunctionSpec f("indicator_leq:" + fmt_param(c), m, PhiKind::indicator_leq);
    f.param_ = c;
    return f;
  }
  //! y_j with j 1-based, matching the config syntax `identity_j:j`.
  static FunctionSpec identity(std::size_t m, std::size_t j)
  {
    if (j < 1 || j > m)
      throw InvalidArgument("identity_j: index " + std::to_string(j) + " outside 1.." + std::to_string(m));
    FunctionSpec f("identity_j:" + std::to_string(j), m, PhiKind::identity_j);
    f.index_ = j - 1;
    return f;
  }
  static FunctionSpec sum_clipped(std::size_t m, double c)
  {
    if (!(c > 0.0))
      throw InvalidArgument("sum_clipped: clip level must be positive");
    FunctionSpec f("sum_clipped:" + fmt_param(c), m, PhiKind::sum_clipped);
    f.param_ = c;
    return f;
  }
  static FunctionSpec polynomial(std::size_t m, std::vector<PolyTerm> terms, std::string id = "poly")
  {
    for (const auto& t : terms) {
      if (t.powers.size() != m)
        throw DimensionMismatch("polynomial term needs " + std::to_string(m) + " powers");
      for (int p : t.powers)
        if (p < 0)
          throw InvalidArgument("polynomial powers must be non-negative");
    }
    FunctionSpec f(std::move(id), m, PhiKind::polynomial);
    f.terms_ = std::move(terms);
    return f;
  }
  static FunctionSpec custom(std::string id, std::size_t m, std::function<double(std::span<const double>)> fn)
  {
    FunctionSpec f(std::move(id), m, PhiKind::custom);
    f.fn_ = std::move(fn);
    return f;
  }

  double operator()(std::span<const double> y) const
  {
    switch (kind_) {
      case PhiKind::constant:
        return param_;
      case PhiKind::sum: {
        double s = 0.0;
        for (double v : y)
          s += v;
        return s;
      }
      case PhiKind::product: {
        double p = 1.0;
        for (double v : y)
          p *= v;
        return p;
      }
      case PhiKind::max:
        return *std::max_element(y.begin(), y.end());
      case PhiKind::indicator_leq:
        for (double v : y)
          if (!(v <= param_))
            return 0.0;
        return 1.0;
      case PhiKind::identity_j:
        return y[index_];
      case PhiKind::sum_clipped: {
        double s = 0.0;
        for (double v : y)
          s += v;
        return std::clamp(s, -param_, param_);
      }
      case PhiKind::polynomial: {
        double s = 0.0;
        for (const auto& t : terms_) {
          double p = t.coef;
          for (std::size_t j = 0; j < y.size(); ++j)
            p *= ipow(y[j], t.powers[j]);
          s += p;
        }
        return s;
      }
      case PhiKind::custom:
        return fn_(y);
    }
    return 0.0;
  }

  const std::string& id() const noexcept { return id_; }
  std::size_t m() const noexcept { return m_; }
  PhiKind kind() const noexcept { return kind_; }
  double param() const noexcept { return param_; }
  std::size_t index() const noexcept { return index_; }
  const std::vector<PolyTerm>& terms() const noexcept { return terms_; }

  static double ipow(double x, int p) noexcept
  {
    double r = 1.0;
    for (int i = 0; i < p; ++i)
      r *= x;
    return r;
  }

private:
  FunctionSpec(std::string id, std::size_t m, PhiKind kind)
    : id_(std::move(id))
    , m_(m)
    , kind_(kind)
  {
    if (m_ == 0)
      throw InvalidArgument("function arity m must be >= 1");
  }

  static std::string fmt_param(double c)
  {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), c);
    return std::string(buf, res.ptr);
  }

  std::string id_;
  std::size_t m_;
  PhiKind kind_;
  double param_ = 0.0;
  std::size_t index_ = 0;
  std::vector<PolyTerm> terms_;
  std::function<double(std::span<const double>)> fn_;
};

//! Parses a built-in member id: `one`, `const:c`, `sum`, `product`, `max`,
//! `indicator_leq:c`, `identity_j:j`, `sum_clipped:c`.
inline FunctionSpec
parse_function_spec(const std::string& text, std::size_t m)
{
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string() : text.substr(colon + 1);
  auto number = [&]() {
    double v = 0.0;
    auto res = std::from_chars(arg.data(), arg.data() + arg.size(), v);
    if (arg.empty() || res.ec != std::errc() || res.ptr != arg.data() + arg.size())
      throw InvalidArgument("member '" + text + "' needs a numeric argument");
    return v;
  };
  if (name == "one")
    return FunctionSpec::one(m);
  if (name == "const")
    return FunctionSpec::constant(m, number());
  if (name == "sum")
    return FunctionSpec::sum(m);
  if (name == "product")
    return FunctionSpec::product(m);
  if (name == "max")
    return FunctionSpec::max(m);
  if (name == "indicator_leq")
    return FunctionSpec::indicator_leq(m, number());
  if (name == "sum_clipped")
    return FunctionSpec::sum_clipped(m, number());
  if (name == "identity_j") {
    const double j = number();
    if (j != std::floor(j) || j < 1)
      throw InvalidArgument("identity_j needs a positive integer index");
    return FunctionSpec::identity(m, static_cast<std::size_t>(j));
  }
  throw InvalidArgument("unknown function id '" + text + "'");
}

} // namespace condu
