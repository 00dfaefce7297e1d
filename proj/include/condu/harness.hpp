#pragma once

#include "condu/bandwidth.hpp"
#include "condu/config.hpp"
#include "condu/errors.hpp"
#include "condu/estimator.hpp"
#include "condu/function_class.hpp"
#include "condu/io.hpp"
#include "condu/numeric.hpp"
#include "condu/parallel.hpp"
#include "condu/rng.hpp"
#include "condu/ucore.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace condu {

//! n i.i.d. draws of (X, Y) from one counter-based stream keyed by (seed, n).
inline Sample
simulate(const DgpSpec& dgp, std::uint64_t n, std::uint64_t seed)
{
  if (n < 1)
    throw InvalidArgument("simulate: n must be >= 1");
  CounterRng rng(derive_key(seed, { 0x51u, n }));
  std::vector<double> x(n), y(n);
  for (std::uint64_t i = 0; i < n; ++i)
    std::tie(x[i], y[i]) = dgp.draw(rng);
  return Sample(std::move(x), std::move(y));
}

//! Sample used for replication `rep` at size n.
inline Sample
replicate_sample(const ExperimentConfig& cfg, std::uint64_t n, std::size_t rep)
{
  return simulate(cfg.dgp, n, derive_key(cfg.experiment.seed, { 0x7265u, rep }));
}

//! Cartesian grid of `points` equispaced values per axis over [lo, hi]^m,
//! lexicographic with the last coordinate fastest.
inline std::vector<std::vector<double>>
make_t_grid(double lo, double hi, std::size_t points, std::size_t m)
{
  std::vector<double> axis(points);
  for (std::size_t i = 0; i < points; ++i)
    axis[i] = points == 1 ? 0.5 * (lo + hi)
                          : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> idx(m, 0);
  while (true) {
    std::vector<double> t(m);
    for (std::size_t j = 0; j < m; ++j)
      t[j] = axis[idx[j]];
    out.push_back(std::move(t));
    std::size_t j = m;
    while (j > 0) {
      --j;
      if (++idx[j] < points)
        break;
      idx[j] = 0;
      if (j == 0)
        return out;
    }
  }
}

inline std::vector<std::vector<double>>
make_t_grid(const ExperimentConfig& cfg, std::size_t points = 0)
{
  return make_t_grid(cfg.grids.lo, cfg.grids.hi, points ? points : cfg.grids.points_per_axis, cfg.m());
}

//! b0 for the fixed rule, b0 / ln n for the decaying one.
inline double
bandwidth_cap(const ExperimentConfig& cfg, std::uint64_t n)
{
  const double b0 = cfg.regime.b0;
  return cfg.grids.cap == CapRule::fixed ? b0 : b0 / std::log(static_cast<double>(n));
}

//! Dyadic bandwidths h_j^m = 2^j a_n^m that do not exceed the cap, followed
//! by the cap itself, so the largest admissible bandwidth is always probed.
inline std::vector<double>
sweep_bandwidths(const ExperimentConfig& cfg, std::uint64_t n)
{
  const double a = lower_bandwidth(cfg.regime, n);
  const double cap = bandwidth_cap(cfg, n);
  if (a > cap)
    throw EmptyBandwidthRange("n = " + std::to_string(n) + ": lower bandwidth " + std::to_string(a) +
                              " exceeds the cap " + std::to_string(cap));
  const double md = static_cast<double>(cfg.m());
  const double am = std::pow(a, md);
  std::vector<double> hs;
  for (int j = 0;; ++j) {
    const double h = j == 0 ? a : std::pow(std::ldexp(am, j), 1.0 / md);
    if (h >= cap)
      break;
    hs.push_back(h);
  }
  hs.push_back(cap);
  return hs;
}

struct DeviationRow
{
  std::uint64_t n = 0;
  std::size_t rep = 0;
  std::string statistic; // process | estimator_centering | estimator_truth | remainder
  double h = 0.0;
  std::vector<double> t;
  std::string phi;
  std::optional<double> raw_dev;
  std::optional<double> normalized_dev;
  std::string status = "ok";
};

//! Canonical order of persisted rows: (n, rep, h, t, phi, statistic).
inline void
sort_rows(std::vector<DeviationRow>& rows)
{
  std::stable_sort(rows.begin(), rows.end(), [](const DeviationRow& a, const DeviationRow& b) {
    return std::tie(a.n, a.rep, a.h, a.t, a.phi, a.statistic) <
           std::tie(b.n, b.rep, b.h, b.t, b.phi, b.statistic);
  });
}

//! Population quantities for one sample size: the bandwidth and location
//! grids, the density and regression convolutions at every (h, t), and the
//! true regression values. Shared by all replications at that n.
struct SweepContext
{
  std::uint64_t n = 0;
  std::vector<double> hs;
  std::vector<std::vector<double>> ts;
  std::vector<CenteringParts> parts; // index h * |ts| + t
  std::vector<double> truth;         // index t * |members| + f
  std::vector<double> norm;          // normalizer per h

  const CenteringParts& at(std::size_t hi, std::size_t ti) const { return parts[hi * ts.size() + ti]; }
};

inline SweepContext
make_context(const ExperimentConfig& cfg, std::uint64_t n, std::size_t threads)
{
  if (n < cfg.m())
    throw DegenerateSample("sweep: n = " + std::to_string(n) + " is below m");
  SweepContext ctx;
  ctx.n = n;
  ctx.hs = sweep_bandwidths(cfg, n);
  ctx.ts = make_t_grid(cfg);
  const auto& members = cfg.fc.members();
  ctx.parts.resize(ctx.hs.size() * ctx.ts.size());
  parallel_for(ctx.parts.size(), threads, [&](std::size_t i) {
    const std::size_t hi = i / ctx.ts.size(), ti = i % ctx.ts.size();
    ctx.parts[i] = centering_parts(members, ctx.hs[hi], ctx.ts[ti], cfg.dgp, cfg.kernel,
                                   cfg.experiment.quad_order);
  });
  ctx.truth.resize(ctx.ts.size() * members.size());
  for (std::size_t ti = 0; ti < ctx.ts.size(); ++ti)
    for (std::size_t f = 0; f < members.size(); ++f)
      ctx.truth[ti * members.size() + f] = true_regression(cfg.dgp, members[f], ctx.ts[ti]);
  for (double h : ctx.hs)
    ctx.norm.push_back(normalizer(n, h, cfg.m()));
  return ctx;
}

namespace detail {

inline double
centering_value(const FunctionSpec& phi, const CenteringParts& parts, std::size_t f)
{
  if (!(parts.density > 1e-14))
    throw ZeroDensityWindow("centering: density convolution vanishes inside the t-grid");
  return phi.kind() == PhiKind::constant ? phi.param() : parts.weighted[f] / parts.density;
}

} // namespace detail

//! Process and estimator rows for one replication. Every (h, t) cell is
//! independent; rows land in preallocated slots.
inline std::vector<DeviationRow>
sweep_cells(const ExperimentConfig& cfg, const SweepContext& ctx, const Sample& s, std::size_t rep,
            bool process, bool estimator, std::size_t threads)
{
  const auto& members = cfg.fc.members();
  const std::size_t nf = members.size();
  const std::size_t per_cell = nf * ((process ? 1 : 0) + (estimator ? 2 : 0));
  const std::size_t cells = ctx.hs.size() * ctx.ts.size();
  std::vector<DeviationRow> rows(cells * per_cell);
  if (per_cell == 0)
    return rows;
  const SortedIndex sorted = make_sorted_index(s);
  parallel_for(cells, threads, [&](std::size_t c) {
    const std::size_t hi = c / ctx.ts.size(), ti = c % ctx.ts.size();
    const double h = ctx.hs[hi];
    const auto& t = ctx.ts[ti];
    const auto est = estimate_members(members, h, t, s, sorted, cfg.kernel);
    const auto& parts = ctx.at(hi, ti);
    std::size_t slot = c * per_cell;
    auto base = [&](const char* stat, std::size_t f) -> DeviationRow& {
      DeviationRow& r = rows[slot++];
      r.n = ctx.n;
      r.rep = rep;
      r.statistic = stat;
      r.h = h;
      r.t = t;
      r.phi = members[f].id();
      return r;
    };
    for (std::size_t f = 0; f < nf; ++f) {
      if (process) {
        auto& r = base("process", f);
        r.raw_dev = std::abs(est[f].numerator - parts.weighted[f]);
        r.normalized_dev = ctx.norm[hi] * *r.raw_dev;
      }
      if (estimator) {
        const double centre = detail::centering_value(members[f], parts, f);
        const double truth = ctx.truth[ti * nf + f];
        auto& rc = base("estimator_centering", f);
        auto& rt = base("estimator_truth", f);
        rc.status = rt.status = to_string(est[f].status);
        if (est[f].status == CellStatus::ok) {
          rc.raw_dev = std::abs(*est[f].mhat - centre);
          rc.normalized_dev = ctx.norm[hi] * *rc.raw_dev;
          rt.raw_dev = std::abs(*est[f].mhat - truth);
          rt.normalized_dev = ctx.norm[hi] * *rt.raw_dev;
        }
      }
    }
  });
  return rows;
}

//! sqrt(n h^m)|U_n(phi,h,t) - E U_n(phi,h,t)| / sqrt(|ln h| v ln ln n) rows
//! for one replication, E U_n by quadrature.
inline std::vector<DeviationRow>
sweep_process(const ExperimentConfig& cfg, std::uint64_t n, std::size_t rep, std::size_t threads = 1)
{
  const auto ctx = make_context(cfg, n, threads);
  return sweep_cells(cfg, ctx, replicate_sample(cfg, n, rep), rep, true, false, threads);
}

//! |m-hat - E-hat m-hat| and |m-hat - m_phi| rows for one replication.
inline std::vector<DeviationRow>
sweep_estimator(const ExperimentConfig& cfg, std::uint64_t n, std::size_t rep, std::size_t threads = 1)
{
  const auto ctx = make_context(cfg, n, threads);
  return sweep_cells(cfg, ctx, replicate_sample(cfg, n, rep), rep, false, true, threads);
}

// ---------------------------------------------------------------------------
// Remainder diagnostic
// ---------------------------------------------------------------------------

struct RemainderOracle
{
  std::uint64_t n = 0;
  std::size_t ell = 0;
  double threshold = 0.0;
  std::vector<double> hs;
  std::vector<std::vector<double>> ts;
  std::vector<double> mean; // index (h * |ts| + t) * |members| + f
  std::vector<double> se;
  double max_se = 0.0;
};

//! E U_n of the remainder part at every (h, t, phi). With u uniform on
//! [-1/2, 1/2]^m and x = t - h u, the expectation equals
//! E[prod K(u_j) prod fX(x_j) phi(Y) 1{F~(Y) > threshold}], Y drawn given x.
inline RemainderOracle
remainder_oracle(const ExperimentConfig& cfg, std::uint64_t n, std::size_t ell, std::size_t threads)
{
  const auto* ub = std::get_if<UnboundedRegime>(&cfg.fc.regime());
  const double kappa = cfg.kernel.kappa();
  const std::size_t m = cfg.m();
  const double p = ub ? ub->p : 3.0;
  RemainderOracle o;
  o.n = n;
  o.ell = ell;
  o.threshold = gamma_threshold(ell, cfg.experiment.rem.epsilon, p).threshold;
  if (const auto* b = std::get_if<BoundedRegime>(&cfg.fc.regime())) {
    const double bound = std::pow(kappa, static_cast<double>(m)) * static_cast<double>(factorial(m)) * b->M;
    if (o.threshold >= bound)
      throw BoundedClassHasNoRemainder("threshold " + std::to_string(o.threshold) +
                                       " is at or above the envelope bound " + std::to_string(bound));
  }
  o.hs = sweep_bandwidths(cfg, n);
  o.ts = make_t_grid(cfg, cfg.experiment.rem.points_per_axis);
  const auto& members = cfg.fc.members();
  const std::size_t nf = members.size();
  const std::size_t cells = o.hs.size() * o.ts.size();
  o.mean.assign(cells * nf, 0.0);
  o.se.assign(cells * nf, 0.0);
  const std::size_t draws = cfg.experiment.rem.oracle_draws;
  parallel_for(cells, threads, [&](std::size_t c) {
    const double h = o.hs[c / o.ts.size()];
    const auto& t = o.ts[c % o.ts.size()];
    CounterRng rng(derive_key(cfg.experiment.seed, { 0x4f52u, n, c }));
    std::vector<std::vector<double>> vals(nf, std::vector<double>(draws));
    std::vector<double> y(m);
    for (std::size_t d = 0; d < draws; ++d) {
      double w = 1.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double u = rng.uniform() - 0.5;
        const double x = t[j] - h * u;
        w *= cfg.kernel(u) * cfg.dgp.fx(x);
        y[j] = cfg.dgp.draw_y(x, rng);
      }
      const bool tail = w != 0.0 && envelope_tilde(cfg.fc, kappa, y) > o.threshold;
      for (std::size_t f = 0; f < nf; ++f)
        vals[f][d] = tail ? w * members[f](y) : 0.0;
    }
    for (std::size_t f = 0; f < nf; ++f) {
      const auto ms = mean_se(vals[f]);
      o.mean[c * nf + f] = ms.mean;
      o.se[c * nf + f] = ms.se;
    }
  });
  for (double v : o.se)
    o.max_se = std::max(o.max_se, v);
  return o;
}

struct RemainderResult
{
  double sup = 0.0;
  std::vector<DeviationRow> rows;
};

//! sup over the grid of normalizer * |U_n(remainder) - E U_n(remainder)|.
//! U_n of the symmetrized kernel equals U_n of the kernel itself, and F~ is
//! permutation invariant, so the remainder statistic is the windowed sum of
//! phi(y) 1{F~(y) > threshold} K~_h(t - x).
inline RemainderResult
remainder_diagnostic(const ExperimentConfig& cfg, const RemainderOracle& o, const Sample& s,
                     std::size_t rep, std::size_t threads)
{
  const auto& members = cfg.fc.members();
  const std::size_t nf = members.size();
  const std::size_t m = cfg.m();
  const double kappa = cfg.kernel.kappa();
  const SortedIndex sorted = make_sorted_index(s);
  const std::size_t cells = o.hs.size() * o.ts.size();
  const std::uint64_t total = count_indices(s.size(), m);
  RemainderResult out;
  out.rows.resize(cells * nf);
  using Fn = std::function<double(std::span<const double>)>;
  std::vector<Fn> fns;
  for (const auto& phi : members)
    fns.emplace_back([&phi, &cfg, kappa, thr = o.threshold](std::span<const double> y) {
      return envelope_tilde(cfg.fc, kappa, y) > thr ? phi(y) : 0.0;
    });
  parallel_for(cells, threads, [&](std::size_t c) {
    const std::size_t hi = c / o.ts.size();
    const double h = o.hs[hi];
    const auto& t = o.ts[c % o.ts.size()];
    std::vector<CoordinateWindow> windows;
    for (std::size_t j = 0; j < m; ++j)
      windows.push_back(make_window(s, sorted, cfg.kernel, h, t[j]));
    const auto sums = windowed_accumulate<Fn>(windows, fns);
    const double norm = normalizer(s.size(), h, m);
    for (std::size_t f = 0; f < nf; ++f) {
      DeviationRow& r = out.rows[c * nf + f];
      r.n = s.size();
      r.rep = rep;
      r.statistic = "remainder";
      r.h = h;
      r.t = t;
      r.phi = members[f].id();
      r.raw_dev = std::abs(sums.mean(f, total) - o.mean[c * nf + f]);
      r.normalized_dev = norm * *r.raw_dev;
    }
  });
  for (const auto& r : out.rows)
    out.sup = std::max(out.sup, *r.normalized_dev);
  return out;
}

//! Convenience entry point: one replication at size n with ell = ceil(log2 n).
inline double
remainder_diagnostic(const ExperimentConfig& cfg, std::uint64_t n, std::size_t ell, std::size_t rep,
                     std::size_t threads = 1)
{
  const auto o = remainder_oracle(cfg, n, ell, threads);
  return remainder_diagnostic(cfg, o, replicate_sample(cfg, n, rep), rep, threads).sup;
}

inline std::size_t
ceil_log2(std::uint64_t n)
{
  std::size_t ell = 0;
  while ((std::uint64_t{ 1 } << ell) < n)
    ++ell;
  return ell;
}

// ---------------------------------------------------------------------------
// Rate experiment
// ---------------------------------------------------------------------------

struct RateSummary
{
  std::uint64_t n = 0;
  double a_n = 0.0;
  double cap = 0.0;
  std::vector<double> h_grid;
  std::optional<double> sup_consistency;
  std::optional<double> sup_normalized_process;
  std::optional<double> sup_normalized_estimator;
  std::optional<double> bias_sup;
  std::optional<double> remainder_sup;
  std::vector<double> remainder_by_rep;
  std::optional<double> remainder_mean;
  std::optional<double> remainder_se;
  std::optional<double> remainder_oracle_se;
  std::optional<double> remainder_threshold;
  std::size_t cells = 0;
  std::size_t excluded_cells = 0;
  double excluded_fraction_smallest_h = 0.0;
};

struct RateReport
{
  std::vector<RateSummary> per_n;
  json metadata;
};

struct RateOutput
{
  RateReport report;
  std::vector<DeviationRow> rows;
};

inline double
max_or_zero(const std::optional<double>& v)
{
  return v.value_or(0.0);
}

//! Sweeps every (n, rep) of the config and aggregates per-n suprema (max
//! over replications). Deterministic given the config and seed.
inline RateOutput
rate_experiment(const ExperimentConfig& cfg, std::size_t threads = 1)
{
  if (cfg.grids.n_list.empty())
    throw ConfigError("grids.n_list", "rate experiment needs a nonempty n_list");
  const auto& e = cfg.experiment;
  RateOutput out;
  for (std::uint64_t n : cfg.grids.n_list) {
    RateSummary sum;
    sum.n = n;
    sum.a_n = lower_bandwidth(cfg.regime, n);
    sum.cap = bandwidth_cap(cfg, n);
    const SweepContext ctx = make_context(cfg, n, threads);
    sum.h_grid = ctx.hs;

    if (e.bias) {
      double b = 0.0;
      const auto& members = cfg.fc.members();
      for (std::size_t hi = 0; hi < ctx.hs.size(); ++hi)
        for (std::size_t ti = 0; ti < ctx.ts.size(); ++ti)
          for (std::size_t f = 0; f < members.size(); ++f) {
            const double centre = detail::centering_value(members[f], ctx.at(hi, ti), f);
            b = std::max(b, std::abs(centre - ctx.truth[ti * members.size() + f]));
          }
      sum.bias_sup = b;
    }

    std::optional<RemainderOracle> oracle;
    if (e.remainder) {
      oracle = remainder_oracle(cfg, n, ceil_log2(n), threads);
      sum.remainder_threshold = oracle->threshold;
      sum.remainder_oracle_se = oracle->max_se;
    }

    std::size_t smallest_total = 0, smallest_excluded = 0;
    for (std::size_t rep = 0; rep < e.reps; ++rep) {
      const Sample s = replicate_sample(cfg, n, rep);
      if (e.process || e.estimator) {
        auto rows = sweep_cells(cfg, ctx, s, rep, e.process, e.estimator, threads);
        for (const auto& r : rows) {
          if (r.statistic == "process") {
            sum.sup_normalized_process = std::max(max_or_zero(sum.sup_normalized_process), *r.normalized_dev);
          } else if (r.statistic == "estimator_centering") {
            ++sum.cells;
            const bool small = r.h == ctx.hs.front();
            smallest_total += small;
            if (!r.raw_dev) {
              ++sum.excluded_cells;
              smallest_excluded += small;
              continue;
            }
            sum.sup_normalized_estimator =
              std::max(max_or_zero(sum.sup_normalized_estimator), *r.normalized_dev);
          } else if (r.statistic == "estimator_truth" && r.raw_dev) {
            sum.sup_consistency = std::max(max_or_zero(sum.sup_consistency), *r.raw_dev);
          }
        }
        out.rows.insert(out.rows.end(), std::make_move_iterator(rows.begin()),
                        std::make_move_iterator(rows.end()));
      }
      if (oracle) {
        auto res = remainder_diagnostic(cfg, *oracle, s, rep, threads);
        sum.remainder_by_rep.push_back(res.sup);
        sum.remainder_sup = std::max(max_or_zero(sum.remainder_sup), res.sup);
        out.rows.insert(out.rows.end(), std::make_move_iterator(res.rows.begin()),
                        std::make_move_iterator(res.rows.end()));
      }
    }
    if (smallest_total > 0)
      sum.excluded_fraction_smallest_h =
        static_cast<double>(smallest_excluded) / static_cast<double>(smallest_total);
    if (!sum.remainder_by_rep.empty()) {
      const auto ms = mean_se(sum.remainder_by_rep);
      sum.remainder_mean = ms.mean;
      sum.remainder_se = ms.se;
    }
    out.report.per_n.push_back(std::move(sum));
  }
  sort_rows(out.rows);

  json meta;
  meta["t_grid"] = { { "interval", { cfg.grids.lo, cfg.grids.hi } },
                     { "points_per_axis", cfg.grids.points_per_axis },
                     { "m", cfg.m() },
                     { "eta", cfg.grids.eta } };
  meta["bandwidth"] = { { "regime", cfg.regime.kind == RateRegime::Kind::bounded ? "bounded" : "unbounded" },
                        { "c", cfg.regime.c },
                        { "b0", cfg.regime.b0 },
                        { "anchor", cfg.regime.kind == RateRegime::Kind::bounded || cfg.regime.plain_anchor
                                      ? "a_n"
                                      : "a_n_prime" },
                        { "b_rule", cfg.grids.cap == CapRule::fixed ? "fixed" : "decaying" },
                        { "grid", "dyadic h^m = 2^j a_n^m below the cap, plus the cap" } };
  meta["notes"] = {
    "suprema are maxima over the finite t-grid and bandwidth grid, hence lower bounds of the continuous suprema",
    "ln ln n is evaluated at max(n, 16)",
    "centering and E U_n use closed-form DGP densities and tensor Gauss-Legendre quadrature",
    "equicontinuity of the regression class is assumed, not checked",
    "cells with empty windows are excluded from estimator suprema and counted in excluded_cells",
  };
  meta["seed"] = cfg.experiment.seed;
  meta["reps"] = cfg.experiment.reps;
  meta["quad_order"] = cfg.experiment.quad_order;
  meta["kernel"] = cfg.kernel_id;
  meta["members"] = cfg.member_ids;
  meta["envelope"] = cfg.envelope_id;
  out.report.metadata = std::move(meta);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline std::string
rows_to_csv(const std::vector<DeviationRow>& rows, std::size_t m)
{
  std::string out = "n,rep,statistic,h";
  for (std::size_t j = 1; j <= m; ++j)
    out += ",t_" + std::to_string(j);
  out += ",phi,raw_dev,normalized_dev,status\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + std::to_string(r.rep) + "," + r.statistic + "," + format_double(r.h);
    for (double v : r.t)
      out += "," + format_double(v);
    out += "," + r.phi + ",";
    out += r.raw_dev ? format_double(*r.raw_dev) : "";
    out += ",";
    out += r.normalized_dev ? format_double(*r.normalized_dev) : "";
    out += "," + r.status + "\n";
  }
  return out;
}

inline json
report_to_json(const RateReport& report)
{
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json per_n = json::array();
  for (const auto& s : report.per_n) {
    per_n.push_back({ { "n", s.n },
                      { "a_n", s.a_n },
                      { "cap", s.cap },
                      { "h_grid", s.h_grid },
                      { "sup_consistency", opt(s.sup_consistency) },
                      { "sup_normalized_process", opt(s.sup_normalized_process) },
                      { "sup_normalized_estimator", opt(s.sup_normalized_estimator) },
                      { "bias_sup", opt(s.bias_sup) },
                      { "remainder_sup", opt(s.remainder_sup) },
                      { "remainder_by_rep", s.remainder_by_rep },
                      { "remainder_mean", opt(s.remainder_mean) },
                      { "remainder_se", opt(s.remainder_se) },
                      { "remainder_oracle_se", opt(s.remainder_oracle_se) },
                      { "remainder_threshold", opt(s.remainder_threshold) },
                      { "cells", s.cells },
                      { "excluded_cells", s.excluded_cells },
                      { "excluded_fraction_smallest_h", s.excluded_fraction_smallest_h } });
  }
  return { { "per_n", per_n }, { "metadata", report.metadata } };
}

//! deviations.csv, report.json and config_echo.json under `dir`.
inline void
write_rate_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RateOutput& out)
{
  write_atomic(dir / "deviations.csv", rows_to_csv(out.rows, cfg.m()));
  write_atomic(dir / "report.json", report_to_json(out.report).dump(2) + "\n");
  write_atomic(dir / "config_echo.json", cfg.source.dump(2) + "\n");
}

} // namespace condu
