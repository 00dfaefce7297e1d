#pragma once

#include "condu/bandwidth.hpp"
#include "condu/dgp.hpp"
#include "condu/errors.hpp"
#include "condu/function_class.hpp"
#include "condu/kernels.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace condu {

using json = nlohmann::json;

//! Cap on the bandwidth range: b0, or b0 / ln n.
enum class CapRule
{
  fixed,
  decaying
};

struct GridSpec
{
  std::vector<std::uint64_t> n_list;
  double lo = 0.25; // interval I = [lo, hi]
  double hi = 0.75;
  std::size_t points_per_axis = 21;
  double eta = 0.25;
  CapRule cap = CapRule::fixed;
  //! Explicit bandwidths for `estimate`; sweeps use the dyadic grid instead.
  std::vector<double> h_list;
};

struct RemainderSpec
{
  double epsilon = 1.0;
  std::size_t oracle_draws = 50000;
  //! Coarser t-grid for the remainder diagnostic; 0 means the main grid.
  std::size_t points_per_axis = 0;
};

struct ExperimentSpec
{
  std::size_t reps = 1;
  std::uint64_t seed = 0;
  int quad_order = 64;
  bool process = true;
  bool estimator = true;
  bool bias = true;
  bool remainder = false;
  RemainderSpec rem;
};

struct ExperimentConfig
{
  DgpSpec dgp;
  std::string kernel_id = "uniform";
  Kernel1D kernel = Kernel1D::uniform();
  std::vector<std::string> member_ids;
  std::string envelope_id = "pointwise_max";
  FunctionClass fc{ { FunctionSpec::one(1) }, Envelope::pointwise_max(), BoundedRegime{ 1.0 } };
  RateRegime regime;
  GridSpec grids;
  ExperimentSpec experiment;
  bool experiment_seed_given = false;
  json source; // the document as parsed, echoed into every output directory

  std::size_t m() const noexcept { return fc.m(); }
};

namespace detail {

inline const json&
require(const json& j, const std::string& key, const std::string& path)
{
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(path + key, "missing required field '" + path + key + "'");
  return j.at(key);
}

template <class T>
T
read(const json& j, const std::string& key, const std::string& path)
{
  const json& v = require(j, key, path);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + key, "field '" + path + key + "' has the wrong type");
  }
}

template <class T>
T
read_or(const json& j, const std::string& key, const std::string& path, T fallback)
{
  if (!j.is_object() || !j.contains(key))
    return fallback;
  return read<T>(j, key, path);
}

inline MarginalX
parse_marginal(const json& j)
{
  const auto law = read<std::string>(j, "law", "dgp.x.");
  if (law == "uniform")
    return MarginalX::uniform(read_or(j, "lo", "dgp.x.", 0.0), read_or(j, "hi", "dgp.x.", 1.0));
  if (law == "normal")
    return MarginalX::normal(read_or(j, "mean", "dgp.x.", 0.0), read_or(j, "sd", "dgp.x.", 1.0));
  if (law == "beta22")
    return MarginalX::beta22(read_or(j, "lo", "dgp.x.", 0.0), read_or(j, "hi", "dgp.x.", 1.0));
  throw ConfigError("dgp.x.law", "unknown X law '" + law + "'");
}

inline Regression
parse_regression(const json& j)
{
  const auto kind = read<std::string>(j, "kind", "dgp.regression.");
  if (kind == "polynomial")
    return Regression::polynomial(read<std::vector<double>>(j, "coef", "dgp.regression."));
  if (kind == "sine")
    return Regression::sine(read_or(j, "amplitude", "dgp.regression.", 1.0),
                            read_or(j, "frequency", "dgp.regression.", 1.0),
                            read_or(j, "phase", "dgp.regression.", 0.0),
                            read_or(j, "offset", "dgp.regression.", 0.0));
  throw ConfigError("dgp.regression.kind", "unknown regression kind '" + kind + "'");
}

inline Noise
parse_noise(const json& j)
{
  const auto kind = read<std::string>(j, "kind", "dgp.noise.");
  if (kind == "none")
    return Noise::none();
  if (kind == "gaussian")
    return Noise::gaussian(read<double>(j, "scale", "dgp.noise."));
  if (kind == "uniform")
    return Noise::uniform(read<double>(j, "scale", "dgp.noise."));
  throw ConfigError("dgp.noise.kind", "unknown noise kind '" + kind + "'");
}

inline Envelope
parse_envelope(const std::string& id)
{
  if (id == "pointwise_max")
    return Envelope::pointwise_max();
  if (id == "abs_sum")
    return Envelope::abs_sum();
  if (id == "abs_product")
    return Envelope::abs_product();
  if (id.rfind("const:", 0) == 0) {
    try {
      return Envelope::constant(std::stod(id.substr(6)));
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("function_class.envelope", "unknown envelope '" + id + "'");
}

} // namespace detail

inline DgpSpec
parse_dgp(const json& j)
{
  DgpSpec d;
  d.id = detail::read_or<std::string>(j, "id", "dgp.", "dgp");
  d.x = detail::parse_marginal(detail::require(j, "x", "dgp."));
  d.r = detail::parse_regression(detail::require(j, "regression", "dgp."));
  d.noise = j.contains("noise") ? detail::parse_noise(j.at("noise")) : Noise::none();
  try {
    d.validate();
  } catch (const Error& e) {
    throw ConfigError("dgp", e.what());
  }
  return d;
}

//! Kernel section: {"id": "uniform" | "epanechnikov-rescaled" | ...}, or
//! {"id": "user-table", "u": [...], "k": [...], "kappa": ...}. Tables read
//! from CSV are resolved by the CLI before this point.
inline Kernel1D
parse_kernel(const json& j)
{
  const auto id = detail::read<std::string>(j, "id", "kernel.");
  if (id == "user-table") {
    auto u = detail::read<std::vector<double>>(j, "u", "kernel.");
    auto k = detail::read<std::vector<double>>(j, "k", "kernel.");
    return Kernel1D::from_table(std::move(u), std::move(k), detail::read_or(j, "kappa", "kernel.", 0.0));
  }
  try {
    return builtin_kernel(id);
  } catch (const InvalidArgument& e) {
    throw ConfigError("kernel.id", e.what());
  }
}

//! Parses and validates a full experiment document.
inline ExperimentConfig
parse_config(const json& doc)
{
  using detail::read;
  using detail::read_or;
  using detail::require;
  if (!doc.is_object())
    throw ConfigError("", "config must be a JSON object");
  ExperimentConfig cfg;
  cfg.source = doc;

  if (doc.contains("dgp"))
    cfg.dgp = parse_dgp(doc.at("dgp"));

  const json& kj = require(doc, "kernel", "");
  cfg.kernel_id = read<std::string>(kj, "id", "kernel.");
  cfg.kernel = parse_kernel(kj);
  const auto report = validate_kernel(cfg.kernel);
  if (!report.pass)
    throw ConfigError("kernel", "kernel '" + cfg.kernel_id + "' fails validation");

  const json& fj = require(doc, "function_class", "");
  const auto m = read<std::size_t>(fj, "m", "function_class.");
  if (m < 1 || m > 4)
    throw ConfigError("function_class.m", "m must lie in 1..4");
  cfg.member_ids = read<std::vector<std::string>>(fj, "members", "function_class.");
  if (cfg.member_ids.empty())
    throw ConfigError("function_class.members", "function class needs at least one member");
  std::vector<FunctionSpec> members;
  for (const auto& id : cfg.member_ids) {
    try {
      members.push_back(parse_function_spec(id, m));
    } catch (const Error& e) {
      throw ConfigError("function_class.members", e.what());
    }
  }
  cfg.envelope_id = read_or<std::string>(fj, "envelope", "function_class.", "pointwise_max");

  const json& rj = require(doc, "regime", "");
  const auto kind = read<std::string>(rj, "kind", "regime.");
  const double c = read_or(rj, "c", "regime.", 1.0);
  const double b0 = read_or(rj, "b0", "regime.", 0.5);
  ClassRegime class_regime;
  try {
    if (kind == "bounded") {
      const double M = read<double>(rj, "M", "regime.");
      class_regime = BoundedRegime{ M };
      cfg.regime = RateRegime::bounded(c, m, b0);
    } else if (kind == "unbounded") {
      const double p = read<double>(rj, "p", "regime.");
      UnboundedRegime u{ p, std::nullopt };
      if (rj.contains("mu_p"))
        u.mu_p = read<double>(rj, "mu_p", "regime.");
      class_regime = u;
      cfg.regime = RateRegime::unbounded(c, m, p, b0);
      if (rj.contains("anchor")) {
        const auto anchor = read<std::string>(rj, "anchor", "regime.");
        if (anchor != "a_n" && anchor != "a_n_prime")
          throw ConfigError("regime.anchor", "anchor must be 'a_n' or 'a_n_prime'");
        cfg.regime.plain_anchor = anchor == "a_n";
      }
    } else {
      throw ConfigError("regime.kind", "regime kind must be 'bounded' or 'unbounded'");
    }
    cfg.fc = FunctionClass(std::move(members), detail::parse_envelope(cfg.envelope_id), class_regime);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("regime", e.what());
  }

  if (doc.contains("grids")) {
    const json& gj = doc.at("grids");
    cfg.grids.n_list = read_or<std::vector<std::uint64_t>>(gj, "n_list", "grids.", {});
    if (gj.contains("interval")) {
      const auto iv = read<std::vector<double>>(gj, "interval", "grids.");
      if (iv.size() != 2 || !(iv[1] > iv[0]))
        throw ConfigError("grids.interval", "interval must be [lo, hi] with lo < hi");
      cfg.grids.lo = iv[0];
      cfg.grids.hi = iv[1];
    }
    cfg.grids.points_per_axis = read_or<std::size_t>(gj, "points_per_axis", "grids.", 21);
    if (cfg.grids.points_per_axis < 1)
      throw ConfigError("grids.points_per_axis", "need at least one point per axis");
    cfg.grids.eta = read_or(gj, "eta", "grids.", 0.25);
    const auto cap = read_or<std::string>(gj, "b_rule", "grids.", "fixed");
    if (cap == "fixed")
      cfg.grids.cap = CapRule::fixed;
    else if (cap == "decaying")
      cfg.grids.cap = CapRule::decaying;
    else
      throw ConfigError("grids.b_rule", "b_rule must be 'fixed' or 'decaying'");
    cfg.grids.h_list = read_or<std::vector<double>>(gj, "h_list", "grids.", {});
    for (double h : cfg.grids.h_list)
      if (!(h > 0.0))
        throw ConfigError("grids.h_list", "bandwidths must be positive");
    for (std::size_t i = 1; i < cfg.grids.n_list.size(); ++i)
      if (!(cfg.grids.n_list[i] > cfg.grids.n_list[i - 1]))
        throw ConfigError("grids.n_list", "n_list must be strictly ascending");
  }
  if (doc.contains("dgp")) {
    const double lo = cfg.grids.lo - cfg.grids.eta, hi = cfg.grids.hi + cfg.grids.eta;
    const double s_lo = cfg.dgp.x.support_lo(), s_hi = cfg.dgp.x.support_hi();
    if (lo < s_lo || hi > s_hi)
      throw ConfigError("grids.eta", "the eta-enlarged interval leaves the support of X");
  }

  if (doc.contains("experiment")) {
    const json& ej = doc.at("experiment");
    auto& e = cfg.experiment;
    e.reps = read_or<std::size_t>(ej, "reps", "experiment.", 1);
    if (e.reps < 1)
      throw ConfigError("experiment.reps", "reps must be >= 1");
    cfg.experiment_seed_given = ej.contains("seed");
    e.seed = read_or<std::uint64_t>(ej, "seed", "experiment.", 0);
    e.quad_order = read_or(ej, "quad_order", "experiment.", 64);
    if (e.quad_order < 4 || e.quad_order > 512)
      throw ConfigError("experiment.quad_order", "quad_order must lie in 4..512");
    if (ej.contains("statistics")) {
      const auto stats = read<std::vector<std::string>>(ej, "statistics", "experiment.");
      e.process = e.estimator = e.bias = e.remainder = false;
      for (const auto& s : stats) {
        if (s == "process")
          e.process = true;
        else if (s == "estimator")
          e.estimator = true;
        else if (s == "bias")
          e.bias = true;
        else if (s == "remainder")
          e.remainder = true;
        else
          throw ConfigError("experiment.statistics", "unknown statistic '" + s + "'");
      }
    }
    if (ej.contains("remainder")) {
      const json& rem = ej.at("remainder");
      e.rem.epsilon = read_or(rem, "epsilon", "experiment.remainder.", 1.0);
      if (!(e.rem.epsilon > 0.0))
        throw ConfigError("experiment.remainder.epsilon", "epsilon must be positive");
      e.rem.oracle_draws = read_or<std::size_t>(rem, "oracle_draws", "experiment.remainder.", 50000);
      e.rem.points_per_axis = read_or<std::size_t>(rem, "points_per_axis", "experiment.remainder.", 0);
    }
  }
  return cfg;
}

} // namespace condu
