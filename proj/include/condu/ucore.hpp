#pragma once

#include "condu/errors.hpp"
#include "condu/function_spec.hpp"
#include "condu/kernels.hpp"
#include "condu/numeric.hpp"
#include "condu/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace condu {

//! Paired i.i.d. observations (x_i, y_i).
struct Sample
{
  std::vector<double> x;
  std::vector<double> y;

  Sample() = default;
  Sample(std::vector<double> x_, std::vector<double> y_)
    : x(std::move(x_))
    , y(std::move(y_))
  {
    validate();
  }

  std::size_t size() const noexcept { return x.size(); }

  void validate() const
  {
    if (x.size() != y.size())
      throw DimensionMismatch("sample x and y differ in length");
    if (x.empty())
      throw DegenerateSample("sample must hold at least one observation");
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
        throw SchemaError("sample row " + std::to_string(i + 1) + " is not finite");
  }
};

//! Stable sort permutation of x (ties broken by original index) together
//! with the sorted x values used for window lookups.
struct SortedIndex
{
  std::vector<std::size_t> perm;
  std::vector<double> xs;
};

inline SortedIndex
make_sorted_index(const Sample& s)
{
  SortedIndex out;
  out.perm.resize(s.size());
  std::iota(out.perm.begin(), out.perm.end(), std::size_t{0});
  std::stable_sort(out.perm.begin(), out.perm.end(),
                   [&s](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
  out.xs.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    out.xs[i] = s.x[out.perm[i]];
  return out;
}

//! |I_n^k| = n!/(n-k)!, zero when k > n.
inline std::uint64_t
count_indices(std::uint64_t n, std::uint64_t k) noexcept
{
  return falling_factorial(n, k);
}

//! G_{g,h,t}(x, y) = g(y) * prod_j K_h(t_j - x_j).
struct UKernelSpec
{
  FunctionSpec g;
  double h = 1.0;
  std::vector<double> t;
  Kernel1D kernel = Kernel1D::uniform();

  std::size_t m() const noexcept { return g.m(); }

  double operator()(std::span<const double> x, std::span<const double> y) const
  {
    return g(y) * eval_product(ProductKernel{ kernel, g.m() }, h, t, x);
  }
};

enum class UStatMode
{
  brute,
  windowed,
  incomplete
};

inline const char*
to_string(UStatMode mode) noexcept
{
  switch (mode) {
    case UStatMode::brute:
      return "brute";
    case UStatMode::windowed:
      return "windowed";
    case UStatMode::incomplete:
      return "incomplete";
  }
  return "";
}

struct UStatResult
{
  double value = 0.0;
  std::uint64_t tuples_evaluated = 0;
  std::uint64_t tuples_total = 0;
  UStatMode mode = UStatMode::brute;
};

//! Kernel signature for general U-statistics: H((x_i1..x_ik), (y_i1..y_ik)).
using PairKernel = std::function<double(std::span<const double>, std::span<const double>)>;

//! Largest n^k the brute-force path accepts.
inline constexpr double brute_force_budget = 1e8;

//! Visits every ordered k-tuple of distinct indices in [0, n) in
//! lexicographic order.
template <class Visit>
void
for_each_tuple(std::size_t n, std::size_t k, Visit&& visit)
{
  if (k == 0 || k > n)
    return;
  std::vector<std::size_t> tuple(k, 0);
  std::vector<char> used(n, 0);
  std::size_t depth = 0;
  tuple[0] = 0;
  // Iterative depth-first search; tuple[depth] is the next candidate.
  while (true) {
    std::size_t& cand = tuple[depth];
    while (cand < n && used[cand])
      ++cand;
    if (cand >= n) {
      if (depth == 0)
        return;
      --depth;
      used[tuple[depth]] = 0;
      ++tuple[depth];
      continue;
    }
    if (depth + 1 == k) {
      visit(std::span<const std::size_t>(tuple));
      ++cand;
      continue;
    }
    used[cand] = 1;
    ++depth;
    tuple[depth] = 0;
  }
}

//! U_n^{(k)}(H) by enumerating all of I_n^k with compensated summation.
template <class H>
UStatResult
u_stat_brute(H&& kernel, const Sample& s, std::size_t k)
{
  const std::size_t n = s.size();
  if (k == 0 || k > n)
    throw DegenerateSample("u_stat_brute: need 1 <= k <= n (k=" + std::to_string(k) +
                           ", n=" + std::to_string(n) + ")");
  if (std::pow(static_cast<double>(n), static_cast<double>(k)) > brute_force_budget)
    throw ComplexityBudgetExceeded("u_stat_brute: n^k exceeds 1e8 evaluations; use the windowed "
                                   "or incomplete modes");
  std::vector<double> xs(k), ys(k);
  CompensatedSum sum;
  std::uint64_t count = 0;
  for_each_tuple(n, k, [&](std::span<const std::size_t> idx) {
    for (std::size_t j = 0; j < k; ++j) {
      xs[j] = s.x[idx[j]];
      ys[j] = s.y[idx[j]];
    }
    sum.add(kernel(std::span<const double>(xs), std::span<const double>(ys)));
    ++count;
  });
  UStatResult r;
  r.tuples_total = count_indices(n, k);
  r.tuples_evaluated = count;
  r.value = sum.mean(r.tuples_total);
  r.mode = UStatMode::brute;
  return r;
}

//! Hbar(x, y) = (m!)^{-1} sum_sigma H(x_sigma, y_sigma), permuting the
//! (x, y) pairs jointly.
inline PairKernel
symmetrize(PairKernel H, std::size_t m)
{
  if (m == 0)
    throw InvalidArgument("symmetrize: m must be >= 1");
  if (m == 1)
    return H;
  auto perms = all_permutations(m);
  return [H = std::move(H), perms = std::move(perms), m](std::span<const double> x,
                                                          std::span<const double> y) {
    std::vector<double> xp(m), yp(m);
    CompensatedSum s;
    for (const auto& p : perms) {
      for (std::size_t j = 0; j < m; ++j) {
        xp[j] = x[p[j]];
        yp[j] = y[p[j]];
      }
      s.add(H(xp, yp));
    }
    return s.value() / static_cast<double>(perms.size());
  };
}

// ---------------------------------------------------------------------------
// Windowed enumeration
// ---------------------------------------------------------------------------

//! Observations inside the closed window |t_j - x_i| <= h/2 for one
//! coordinate, ascending in original index, with their kernel weights.
struct CoordinateWindow
{
  std::vector<std::size_t> index;
  std::vector<double> weight; // K_h(t_j - x_i)
  std::vector<double> y;
};

inline CoordinateWindow
make_window(const Sample& s, const SortedIndex& sorted, const Kernel1D& k, double h, double t)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw InvalidBandwidth("bandwidth must be positive and finite, got " + std::to_string(h));
  const double half = 0.5 * h;
  // fl(t - x) is monotone in x, so both predicates partition the sorted array.
  auto first = std::partition_point(sorted.xs.begin(), sorted.xs.end(),
                                    [&](double x) { return t - x > half; });
  auto last = std::partition_point(first, sorted.xs.end(),
                                   [&](double x) { return x - t <= half; });
  CoordinateWindow w;
  const auto lo = static_cast<std::size_t>(first - sorted.xs.begin());
  const auto hi = static_cast<std::size_t>(last - sorted.xs.begin());
  w.index.assign(sorted.perm.begin() + lo, sorted.perm.begin() + hi);
  std::sort(w.index.begin(), w.index.end());
  w.weight.resize(w.index.size());
  w.y.resize(w.index.size());
  for (std::size_t i = 0; i < w.index.size(); ++i) {
    w.weight[i] = eval_scaled(k, h, t - s.x[w.index[i]]);
    w.y[i] = s.y[w.index[i]];
  }
  return w;
}

//! Raw sums over window tuples for several functions at once:
//! sums[f] = sum over distinct-index tuples of phi_f(y) * prod_j w_j.
struct WindowedSums
{
  std::vector<double> sums;
  std::vector<CompensatedSum> acc;
  std::uint64_t tuples = 0;

  double mean(std::size_t f, std::uint64_t total) const { return acc[f].mean(total); }
};

//! Enumerates the Cartesian product of the coordinate windows in
//! lexicographic order of original indices, skipping tuples with repeated
//! indices. Each function has its own compensated accumulator, so the result
//! for one function does not depend on which others are evaluated with it.
template <class Fn>
WindowedSums
windowed_accumulate(std::span<const CoordinateWindow> windows, std::span<const Fn> functions)
{
  const std::size_t m = windows.size();
  const std::size_t nf = functions.size();
  WindowedSums out;
  out.sums.assign(nf, 0.0);
  out.acc.assign(nf, CompensatedSum{});
  auto& acc = out.acc;
  for (const auto& w : windows)
    if (w.index.empty())
      return out;

  std::vector<double> y(m);
  auto emit = [&](double weight) {
    for (std::size_t f = 0; f < nf; ++f)
      acc[f].add(functions[f](std::span<const double>(y)) * weight);
    ++out.tuples;
  };

  if (m == 1) {
    const auto& w0 = windows[0];
    for (std::size_t a = 0; a < w0.index.size(); ++a) {
      y[0] = w0.y[a];
      emit(1.0 * w0.weight[a]);
    }
  } else if (m == 2) {
    const auto &w0 = windows[0], &w1 = windows[1];
    for (std::size_t a = 0; a < w0.index.size(); ++a) {
      const std::size_t ia = w0.index[a];
      const double wa = 1.0 * w0.weight[a];
      y[0] = w0.y[a];
      for (std::size_t b = 0; b < w1.index.size(); ++b) {
        if (w1.index[b] == ia)
          continue;
        y[1] = w1.y[b];
        emit(wa * w1.weight[b]);
      }
    }
  } else {
    std::vector<std::size_t> pos(m, 0);
    std::vector<double> partial(m + 1, 1.0);
    std::size_t depth = 0;
    while (true) {
      if (pos[depth] >= windows[depth].index.size()) {
        if (depth == 0)
          break;
        --depth;
        ++pos[depth];
        continue;
      }
      const std::size_t idx = windows[depth].index[pos[depth]];
      bool clash = false;
      for (std::size_t j = 0; j < depth; ++j)
        if (windows[j].index[pos[j]] == idx) {
          clash = true;
          break;
        }
      if (clash) {
        ++pos[depth];
        continue;
      }
      partial[depth + 1] = partial[depth] * windows[depth].weight[pos[depth]];
      y[depth] = windows[depth].y[pos[depth]];
      if (depth + 1 == m) {
        emit(partial[m]);
        ++pos[depth];
      } else {
        ++depth;
        pos[depth] = 0;
      }
    }
  }
  for (std::size_t f = 0; f < nf; ++f)
    out.sums[f] = acc[f].value();
  return out;
}

//! U_n(g, h, t) enumerating only tuples inside the kernel window. Agrees
//! with u_stat_brute on G_{g,h,t} term for term.
inline UStatResult
u_stat_windowed(const UKernelSpec& spec, const Sample& s, const SortedIndex& sorted)
{
  const std::size_t m = spec.m();
  if (spec.t.size() != m)
    throw DimensionMismatch("u_stat_windowed: t must have length m");
  if (m > s.size())
    throw DegenerateSample("u_stat_windowed: m exceeds the sample size");
  if (sorted.perm.size() != s.size())
    throw InvalidArgument("u_stat_windowed: sort permutation does not match the sample");
  std::vector<CoordinateWindow> windows;
  windows.reserve(m);
  for (std::size_t j = 0; j < m; ++j)
    windows.push_back(make_window(s, sorted, spec.kernel, spec.h, spec.t[j]));
  const FunctionSpec* g = &spec.g;
  auto call = [g](std::span<const double> y) { return (*g)(y); };
  std::array<decltype(call), 1> fns{ call };
  const auto sums = windowed_accumulate<decltype(call)>(windows, fns);
  UStatResult r;
  r.tuples_total = count_indices(s.size(), m);
  r.tuples_evaluated = sums.tuples;
  r.value = sums.mean(0, r.tuples_total);
  r.mode = UStatMode::windowed;
  return r;
}

//! sqrt(n) * (U_n(g,h,t) - expected).
inline double
u_process(const UKernelSpec& spec, const Sample& s, const SortedIndex& sorted, double expected)
{
  const double u = u_stat_windowed(spec, s, sorted).value;
  return std::sqrt(static_cast<double>(s.size())) * (u - expected);
}

//! Maps a lexicographic rank in [0, |I_n^k|) to its index tuple.
inline void
unrank_tuple(std::uint64_t rank, std::size_t n, std::size_t k, std::span<std::size_t> out)
{
  std::vector<char> used(n, 0);
  for (std::size_t j = 0; j < k; ++j) {
    const std::uint64_t weight = falling_factorial(n - j - 1, k - j - 1);
    std::uint64_t digit = rank / weight;
    rank %= weight;
    std::size_t i = 0;
    for (;; ++i) {
      if (used[i])
        continue;
      if (digit == 0)
        break;
      --digit;
    }
    used[i] = 1;
    out[j] = i;
  }
}

//! Incomplete U-statistic: average of G over `budget` tuples drawn uniformly
//! without replacement from I_n^m (Floyd's algorithm on tuple ranks), summed
//! in ascending rank order.
inline UStatResult
incomplete_u(const UKernelSpec& spec, const Sample& s, std::uint64_t budget, std::uint64_t seed)
{
  const std::size_t m = spec.m();
  const std::size_t n = s.size();
  if (m > n)
    throw DegenerateSample("incomplete_u: m exceeds the sample size");
  if (budget == 0)
    throw InvalidArgument("incomplete_u: budget must be >= 1");
  const std::uint64_t population = count_indices(n, m);
  if (budget > population)
    throw BudgetExceedsPopulation("incomplete_u: budget " + std::to_string(budget) +
                                  " exceeds |I_n^m| = " + std::to_string(population));
  CounterRng rng(derive_key(seed, { 0x1c0u }));
  std::vector<std::uint64_t> ranks;
  ranks.reserve(budget);
  if (budget == population) {
    ranks.resize(population);
    std::iota(ranks.begin(), ranks.end(), std::uint64_t{0});
  } else {
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(budget * 2);
    for (std::uint64_t j = population - budget; j < population; ++j) {
      const std::uint64_t r = rng.below(j + 1);
      const std::uint64_t pick = chosen.insert(r).second ? r : j;
      if (pick == j)
        chosen.insert(j);
      ranks.push_back(pick);
    }
    std::sort(ranks.begin(), ranks.end());
  }
  std::vector<std::size_t> idx(m);
  std::vector<double> xs(m), ys(m);
  CompensatedSum sum;
  for (std::uint64_t r : ranks) {
    unrank_tuple(r, n, m, idx);
    for (std::size_t j = 0; j < m; ++j) {
      xs[j] = s.x[idx[j]];
      ys[j] = s.y[idx[j]];
    }
    sum.add(spec(xs, ys));
  }
  UStatResult out;
  out.value = sum.mean(budget);
  out.tuples_evaluated = budget;
  out.tuples_total = population;
  out.mode = UStatMode::incomplete;
  return out;
}

} // namespace condu
