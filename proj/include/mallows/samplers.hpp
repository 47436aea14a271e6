/**
 * @brief Markov kernels for the L1 and L2 Mallows models.
 *
 * Both hit-and-run kernels have the same two parts:
 *
 *  1. Thresholds. Each place i gets an independent auxiliary uniform that turns
 *     into a threshold b_i:
 *       L1: u_i ~ U[0, exp(-2 beta (sigma(i)-i)_+)],  b_i = i - log(u_i) / (2 beta)
 *       L2: u_i ~ U[0, exp(2 beta i sigma(i))],       b_i = log(u_i) / (2 beta i)
 *     The uniforms are drawn in log form, log u_i = (log of the upper end) + log U
 *     with U ~ U(0, 1], so nothing overflows for large beta * n^2.
 *
 *  2. Placement. The new state is uniform on {tau : tau(i) <= b_i} (L1) or
 *     {tau : tau(i) >= b_i} (L2). Symbols are placed one at a time (n down to 1
 *     for L1, 1 up to n for L2), each at a uniform place among those still free
 *     whose threshold admits it. The eligible set only ever grows as the symbol
 *     sweeps, so places are bucketed by the first symbol that admits them and a
 *     swap-and-pop pool gives O(1) uniform pick-and-delete. A step is O(n).
 *
 * The L2 resampling kernel redraws only the points of sigma inside S_X x S_Y,
 * with i_t - t0 in place of i in the threshold. Sweeping it over sliding windows
 * gives a chain that still moves when beta is so large that the hit-and-run
 * thresholds of bulk places hardly drop below sigma(i).
 */
#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "csv.hpp"
#include "models.hpp"
#include "permutation.hpp"
#include "rng.hpp"

namespace mallows {

/// Optional record of one kernel step.
struct StepTrace {
  std::vector<double> b;           ///< thresholds, b[i-1] for place i
  std::vector<int> placements;     ///< placements[s-1] = place that received symbol s
  std::vector<int> pool_sizes;     ///< pool_sizes[s-1] = number of eligible free places when s was placed
};

namespace detail {

/// Reusable buffers so that a running chain does not allocate per step.
struct KernelScratch {
  std::vector<double> b;
  std::vector<int> level;
  std::vector<int> bucket_start;
  std::vector<int> by_level;
  std::vector<int> cursor;
  std::vector<int> pool;

  void resize(std::size_t n) {
    b.resize(n);
    level.resize(n);
    bucket_start.assign(n + 2, 0);
    by_level.resize(n);
    pool.clear();
    pool.reserve(n);
  }
};

// Counting sort of places (0-based) by level in [1, n].
inline void bucket_places(KernelScratch& s, int n) {
  std::fill(s.bucket_start.begin(), s.bucket_start.end(), 0);
  for (int i = 0; i < n; ++i) ++s.bucket_start[static_cast<std::size_t>(s.level[i]) + 1];
  for (int l = 1; l <= n + 1; ++l) s.bucket_start[l] += s.bucket_start[l - 1];
  s.cursor.assign(s.bucket_start.begin(), s.bucket_start.end() - 1);
  for (int i = 0; i < n; ++i) s.by_level[static_cast<std::size_t>(s.cursor[s.level[i]]++)] = i;
}

inline int pick_and_remove(std::vector<int>& pool, Rng& rng) {
  const auto k = static_cast<std::size_t>(uniform_below(rng, pool.size()));
  const int place = pool[k];
  pool[k] = pool.back();
  pool.pop_back();
  return place;
}

inline void record(StepTrace* trace, int symbol, int place, std::size_t pool_size) {
  if (!trace) return;
  trace->placements[static_cast<std::size_t>(symbol - 1)] = place + 1;
  trace->pool_sizes[static_cast<std::size_t>(symbol - 1)] = static_cast<int>(pool_size);
}

inline void start_trace(StepTrace* trace, std::span<const double> b) {
  if (!trace) return;
  trace->b.assign(b.begin(), b.end());
  trace->placements.assign(b.size(), 0);
  trace->pool_sizes.assign(b.size(), 0);
}

inline void l1_thresholds(std::span<const int> image, double beta, Rng& rng, std::span<double> b) {
  const double scale = 1.0 / (2.0 * beta);
  for (std::size_t k = 0; k < image.size(); ++k) {
    const int i = static_cast<int>(k) + 1;
    b[k] = static_cast<double>(std::max(i, image[k])) - std::log(uniform_positive_unit(rng)) * scale;
  }
}

inline void l2_thresholds(std::span<const int> image, double beta, Rng& rng, std::span<double> b) {
  for (std::size_t k = 0; k < image.size(); ++k) {
    const double i = static_cast<double>(k + 1);
    b[k] = static_cast<double>(image[k]) + std::log(uniform_positive_unit(rng)) / (2.0 * beta * i);
  }
}

// Placement for "tau(i) <= b_i": symbols n..1, place i admits s once s <= floor(b_i).
inline void place_below_thresholds(std::span<int> image, KernelScratch& s, Rng& rng, StepTrace* trace) {
  const int n = static_cast<int>(image.size());
  for (int i = 0; i < n; ++i) {
    const double b = s.b[static_cast<std::size_t>(i)];
    s.level[static_cast<std::size_t>(i)] = b >= n ? n : static_cast<int>(std::floor(b));
  }
  bucket_places(s, n);
  s.pool.clear();
  for (int symbol = n; symbol >= 1; --symbol) {
    for (int k = s.bucket_start[symbol]; k < s.bucket_start[symbol + 1]; ++k) s.pool.push_back(s.by_level[k]);
    if (s.pool.empty()) throw std::logic_error("hit-and-run placement: no eligible place (infeasible thresholds)");
    const std::size_t pool_size = s.pool.size();
    const int place = pick_and_remove(s.pool, rng);
    image[static_cast<std::size_t>(place)] = symbol;
    record(trace, symbol, place, pool_size);
  }
}

// Placement for "tau(i) >= b_i": symbols 1..n, place i admits s once s >= ceil(b_i).
inline void place_above_thresholds(std::span<int> image, KernelScratch& s, Rng& rng, StepTrace* trace) {
  const int n = static_cast<int>(image.size());
  for (int i = 0; i < n; ++i) {
    const double b = s.b[static_cast<std::size_t>(i)];
    s.level[static_cast<std::size_t>(i)] = b <= 1.0 ? 1 : std::min(n, static_cast<int>(std::ceil(b)));
  }
  bucket_places(s, n);
  s.pool.clear();
  for (int symbol = 1; symbol <= n; ++symbol) {
    for (int k = s.bucket_start[symbol]; k < s.bucket_start[symbol + 1]; ++k) s.pool.push_back(s.by_level[k]);
    if (s.pool.empty()) throw std::logic_error("hit-and-run placement: no eligible place (infeasible thresholds)");
    const std::size_t pool_size = s.pool.size();
    const int place = pick_and_remove(s.pool, rng);
    image[static_cast<std::size_t>(place)] = symbol;
    record(trace, symbol, place, pool_size);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Chain state
// ---------------------------------------------------------------------------

struct ChainState {
  ModelParams params;
  Permutation current;
  Rng rng;
  std::uint64_t seed = 0;
  std::uint64_t step_count = 0;
  detail::KernelScratch scratch;

  static ChainState start(const ModelParams& params, Permutation initial, std::uint64_t seed) {
    params.validate();
    if (initial.size() != params.n) throw std::invalid_argument("ChainState: initial permutation has the wrong size");
    ChainState s;
    s.params = params;
    s.current = std::move(initial);
    s.rng.seed(seed);
    s.seed = seed;
    return s;
  }

  static ChainState at_identity(const ModelParams& params, std::uint64_t seed) {
    return start(params, Permutation::identity(params.n), seed);
  }
};

/// One hit-and-run step for the L1 model; the chain's law is stationary.
inline void har_step_l1(ChainState& state, StepTrace* trace = nullptr) {
  if (state.params.kind != ModelKind::L1) throw std::invalid_argument("har_step_l1: chain is not an L1 model");
  auto& image = state.current.mutable_one_line();
  state.scratch.resize(image.size());
  detail::l1_thresholds(image, state.params.beta, state.rng, state.scratch.b);
  detail::start_trace(trace, state.scratch.b);
  detail::place_below_thresholds(image, state.scratch, state.rng, trace);
#ifndef NDEBUG
  for (std::size_t k = 0; k < image.size(); ++k) assert(image[k] <= state.scratch.b[k]);
  assert(state.current.is_valid());
#endif
  ++state.step_count;
}

/// One hit-and-run step for the L2 model.
inline void har_step_l2(ChainState& state, StepTrace* trace = nullptr) {
  if (state.params.kind != ModelKind::L2) throw std::invalid_argument("har_step_l2: chain is not an L2 model");
  auto& image = state.current.mutable_one_line();
  state.scratch.resize(image.size());
  detail::l2_thresholds(image, state.params.beta, state.rng, state.scratch.b);
  detail::start_trace(trace, state.scratch.b);
  detail::place_above_thresholds(image, state.scratch, state.rng, trace);
#ifndef NDEBUG
  for (std::size_t k = 0; k < image.size(); ++k) assert(image[k] >= state.scratch.b[k]);
  assert(state.current.is_valid());
#endif
  ++state.step_count;
}

/// Advances by the hit-and-run kernel matching the chain's model.
inline void step(ChainState& state) {
  if (state.params.kind == ModelKind::L1)
    har_step_l1(state);
  else
    har_step_l2(state);
}

// ---------------------------------------------------------------------------
// Reference placement, O(n^2)
// ---------------------------------------------------------------------------

/// Straight transcription of the placement rule: for each symbol, scan all
/// places in index order and take a uniform one among the free eligible ones.
/// `below` selects tau(i) <= b_i (L1) versus tau(i) >= b_i (L2). Kept to
/// cross-check the bucketed placement; returns the new one-line form.
inline std::vector<int> reference_placement(std::span<const double> b, bool below, Rng& rng,
                                            std::vector<int>* pool_sizes = nullptr) {
  const int n = static_cast<int>(b.size());
  std::vector<int> out(b.size(), 0);
  if (pool_sizes) pool_sizes->assign(b.size(), 0);
  for (int t = 0; t < n; ++t) {
    const int symbol = below ? n - t : t + 1;
    std::vector<int> eligible;
    for (int i = 0; i < n; ++i) {
      if (out[static_cast<std::size_t>(i)] != 0) continue;
      const double bi = b[static_cast<std::size_t>(i)];
      if (below ? symbol <= bi : symbol >= bi) eligible.push_back(i);
    }
    if (eligible.empty()) throw std::logic_error("reference_placement: infeasible thresholds");
    if (pool_sizes) (*pool_sizes)[static_cast<std::size_t>(symbol - 1)] = static_cast<int>(eligible.size());
    out[static_cast<std::size_t>(eligible[uniform_below(rng, eligible.size())])] = symbol;
  }
  return out;
}

/// Hit-and-run step built on reference_placement.
inline void har_step_reference(ChainState& state) {
  auto& image = state.current.mutable_one_line();
  std::vector<double> b(image.size());
  if (state.params.kind == ModelKind::L1)
    detail::l1_thresholds(image, state.params.beta, state.rng, b);
  else
    detail::l2_thresholds(image, state.params.beta, state.rng, b);
  image = reference_placement(b, state.params.kind == ModelKind::L1, state.rng);
  ++state.step_count;
}

// ---------------------------------------------------------------------------
// L2 resampling kernel
// ---------------------------------------------------------------------------

struct ResampleSpec {
  std::vector<int> set_x;  ///< S_X, 1-based places
  std::vector<int> set_y;  ///< S_Y, 1-based values
  double t0 = 0.0;         ///< strictly below min(S_X)

  void validate(int n) const {
    if (set_x.empty() || set_y.empty()) throw std::invalid_argument("ResampleSpec: S_X and S_Y must be nonempty");
    for (int v : set_x)
      if (v < 1 || v > n) throw std::invalid_argument("ResampleSpec: S_X element outside [1, n]");
    for (int v : set_y)
      if (v < 1 || v > n) throw std::invalid_argument("ResampleSpec: S_Y element outside [1, n]");
    if (!(t0 < *std::ranges::min_element(set_x))) throw std::invalid_argument("ResampleSpec: t0 must be below min(S_X)");
  }
};

/// Redraws sigma on S(sigma) ∩ (S_X × S_Y); every other point of sigma is kept.
/// The law of the L2 model is preserved (the kernel is reversible for it).
inline Permutation resample_l2(const Permutation& p, const ResampleSpec& spec, const ModelParams& params, Rng& rng,
                               StepTrace* trace = nullptr) {
  if (params.kind != ModelKind::L2) throw std::invalid_argument("resample_l2: model is not L2");
  params.validate();
  const int n = p.size();
  spec.validate(n);
  std::vector<char> in_x(static_cast<std::size_t>(n) + 1, 0), in_y(static_cast<std::size_t>(n) + 1, 0);
  for (int v : spec.set_x) in_x[v] = 1;
  for (int v : spec.set_y) in_y[v] = 1;

  std::vector<int> places;   // i_1 < ... < i_k
  std::vector<int> symbols;  // j_1 < ... < j_k
  for (int i = 1; i <= n; ++i)
    if (in_x[i] && in_y[p(i)]) {
      places.push_back(i);
      symbols.push_back(p(i));
    }
  std::ranges::sort(symbols);
  const std::size_t k = places.size();

  std::vector<double> b(k);
  for (std::size_t t = 0; t < k; ++t) {
    const double lever = static_cast<double>(places[t]) - spec.t0;
    b[t] = static_cast<double>(p(places[t])) + std::log(uniform_positive_unit(rng)) / (2.0 * params.beta * lever);
  }
  if (trace) {
    trace->b = b;
    trace->placements.assign(k, 0);
    trace->pool_sizes.assign(k, 0);
  }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::sort(order, [&](std::size_t a, std::size_t c) { return b[a] < b[c]; });

  std::vector<int> out(p.one_line().begin(), p.one_line().end());
  std::vector<std::size_t> pool;
  std::size_t next = 0;
  for (std::size_t s = 0; s < k; ++s) {
    const int symbol = symbols[s];
    while (next < k && b[order[next]] <= symbol) pool.push_back(order[next++]);
    if (pool.empty()) throw std::logic_error("resample_l2: no eligible place (infeasible thresholds)");
    const auto pick = static_cast<std::size_t>(uniform_below(rng, pool.size()));
    const std::size_t t = pool[pick];
    if (trace) {
      trace->placements[s] = places[t];
      trace->pool_sizes[s] = static_cast<int>(pool.size());
    }
    pool[pick] = pool.back();
    pool.pop_back();
    out[static_cast<std::size_t>(places[t] - 1)] = symbol;
  }
  return Permutation::from_trusted(std::move(out));
}

/// resample_l2 with S_X = S_Y = {lo, ..., hi} and t0 = lo - 1, in place and
/// without O(n) work: only the points of sigma inside the window are touched.
inline void resample_window_l2(Permutation& p, int lo, int hi, double beta, Rng& rng) {
  const int n = p.size();
  if (lo < 1 || hi > n || lo > hi) throw std::invalid_argument("resample_window_l2: bad window");
  auto& image = p.mutable_one_line();
  const double t0 = lo - 1;
  struct Slot {
    double b;
    int place;
  };
  thread_local std::vector<Slot> slots;
  thread_local std::vector<int> symbols;
  thread_local std::vector<int> pool;
  slots.clear();
  symbols.clear();
  for (int i = lo; i <= hi; ++i) {
    const int v = image[static_cast<std::size_t>(i - 1)];
    if (v < lo || v > hi) continue;
    symbols.push_back(v);
    slots.push_back({v + std::log(uniform_positive_unit(rng)) / (2.0 * beta * (i - t0)), i});
  }
  std::ranges::sort(symbols);
  std::ranges::sort(slots, [](const Slot& a, const Slot& c) { return a.b < c.b; });
  pool.clear();
  std::size_t next = 0;
  for (int symbol : symbols) {
    while (next < slots.size() && slots[next].b <= symbol) pool.push_back(slots[next++].place);
    if (pool.empty()) throw std::logic_error("resample_window_l2: no eligible place (infeasible thresholds)");
    image[static_cast<std::size_t>(detail::pick_and_remove(pool, rng) - 1)] = symbol;
  }
}

/// One sweep of windowed resampling: windows {s, ..., s + width - 1} for s = 1, 2, ...
/// (clipped at n). Each window update preserves the L2 law, so the sweep does too.
inline void resample_sweep_l2(ChainState& state, int width) {
  if (state.params.kind != ModelKind::L2) throw std::invalid_argument("resample_sweep_l2: chain is not an L2 model");
  if (width < 2) throw std::invalid_argument("resample_sweep_l2: width must be at least 2");
  const int n = state.params.n;
  for (int lo = 1; lo < n; ++lo) resample_window_l2(state.current, lo, std::min(n, lo + width - 1), state.params.beta, state.rng);
  ++state.step_count;
}

// ---------------------------------------------------------------------------
// Uniform baseline
// ---------------------------------------------------------------------------

/// Fisher-Yates.
inline Permutation uniform_perm(int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("uniform_perm: n must be >= 1");
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 1);
  for (std::size_t i = v.size() - 1; i > 0; --i) std::swap(v[i], v[uniform_below(rng, i + 1)]);
  return Permutation::from_trusted(std::move(v));
}

// ---------------------------------------------------------------------------
// Chain driving
// ---------------------------------------------------------------------------

struct ChainSchedule {
  std::uint64_t burn_in = 0;
  std::uint64_t samples = 0;
  std::uint64_t thin = 1;

  static ChainSchedule defaults_for(int n, std::uint64_t samples) {
    return {50ULL * static_cast<std::uint64_t>(n), samples, std::max<std::uint64_t>(1, static_cast<std::uint64_t>(n) / 10)};
  }
};

/// Runs burn_in steps, then `samples` times: advance `thin` steps and record
/// observer(state). Deterministic given the chain's seed.
template <class Observer>
  requires std::invocable<Observer&, const ChainState&>
auto run_chain(ChainState& state, const ChainSchedule& schedule, Observer&& observer)
    -> std::vector<std::invoke_result_t<Observer&, const ChainState&>> {
  std::vector<std::invoke_result_t<Observer&, const ChainState&>> out;
  out.reserve(schedule.samples);
  for (std::uint64_t t = 0; t < schedule.burn_in; ++t) step(state);
  for (std::uint64_t s = 0; s < schedule.samples; ++s) {
    for (std::uint64_t t = 0; t < schedule.thin; ++t) step(state);
    out.push_back(observer(state));
  }
  return out;
}

struct Observation {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::size_t lis = 0;
  double energy = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

inline Observation observe(const ChainState& state) {
  return {state.seed, state.step_count, lis(state.current), energy(state.params.kind, state.current)};
}

inline void write_observation_header(std::ostream& out) { out << "seed,step,lis,energy\n"; }

inline void write_observation(std::ostream& out, const Observation& o) {
  out << o.seed << ',' << o.step << ',' << o.lis << ',' << format_real(o.energy) << '\n';
  out.flush();
}

}  // namespace mallows
