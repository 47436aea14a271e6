/**
 * @brief Refined lattice paths through a T1 x T2 grid of sub-rectangles and the
 * LIS sandwich they give.
 *
 * The rectangle (A1, A2] x (B1, B2] is cut into cells R_{k,k'} of size
 * delta1 x delta2. A basic path walks from cell (1,1) to (T1,T2) by unit right
 * or up steps. A refined path additionally picks, for every step l, one of K0
 * equal sub-intervals r_l of the shared cell edge; along straight runs the
 * choices may not decrease. The chosen sub-interval I_l has midpoint (x_l, y_l)
 * and endpoints (a_l, b_l) <= (c_l, d_l).
 *
 * For any refined path, the LIS inside the box (kappa + alpha A, kappa + gamma B]
 * is at least the sum of the LIS over the half-open midpoint rectangles, and at
 * most the maximum over all refined paths of the sum of the LIS over the closed
 * endpoint rectangles.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "permutation.hpp"

namespace mallows {

struct PathSpec {
  double a1 = 0.0, a2 = 1.0;
  double b1 = 0.0, b2 = 1.0;
  int t1 = 2, t2 = 2;
  int k0 = 1;

  double delta1() const { return (a2 - a1) / t1; }
  double delta2() const { return (b2 - b1) / t2; }
  int length() const { return t1 + t2 - 1; }  ///< number of cells on a path

  void validate() const {
    if (!(0.0 <= a1 && a1 < a2 && a2 <= 1.0)) throw std::invalid_argument("PathSpec: need 0 <= a1 < a2 <= 1");
    if (!(0.0 <= b1 && b1 < b2 && b2 <= 1.0)) throw std::invalid_argument("PathSpec: need 0 <= b1 < b2 <= 1");
    if (std::min(t1, t2) < 2) throw std::invalid_argument("PathSpec: need min(t1, t2) >= 2");
    if (k0 < 1) throw std::invalid_argument("PathSpec: need k0 >= 1");
  }

  static PathSpec unit_square(int t, int k0) { return {0.0, 1.0, 0.0, 1.0, t, t, k0}; }
};

struct Cell {
  int i = 1;
  int j = 1;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct RefinedPath {
  std::vector<Cell> cells;        ///< t1 + t2 - 1 cells
  std::vector<int> refinements;   ///< t1 + t2 - 2 values in [1, k0]

  friend bool operator==(const RefinedPath&, const RefinedPath&) = default;
  friend auto operator<=>(const RefinedPath&, const RefinedPath&) = default;
};

/// Why `path` is not a refined path for `spec`, or an empty string when it is.
inline std::string path_violation(const RefinedPath& path, const PathSpec& spec) {
  const auto len = static_cast<std::size_t>(spec.length());
  if (path.cells.size() != len) return "wrong number of cells";
  if (path.refinements.size() + 1 != len) return "wrong number of refinements";
  if (path.cells.front() != Cell{1, 1}) return "does not start at (1,1)";
  if (path.cells.back() != Cell{spec.t1, spec.t2}) return "does not end at (t1,t2)";
  for (std::size_t l = 0; l + 1 < len; ++l) {
    const int di = path.cells[l + 1].i - path.cells[l].i;
    const int dj = path.cells[l + 1].j - path.cells[l].j;
    if (!((di == 1 && dj == 0) || (di == 0 && dj == 1))) return "step " + std::to_string(l + 1) + " is not a unit right/up step";
  }
  for (int r : path.refinements)
    if (r < 1 || r > spec.k0) return "refinement outside [1, k0]";
  for (std::size_t l = 0; l + 2 < len; ++l) {
    const bool straight = (path.cells[l].i == path.cells[l + 1].i && path.cells[l + 1].i == path.cells[l + 2].i) ||
                          (path.cells[l].j == path.cells[l + 1].j && path.cells[l + 1].j == path.cells[l + 2].j);
    if (straight && path.refinements[l + 1] < path.refinements[l]) return "refinement decreases along a straight run";
  }
  return {};
}

inline bool is_valid_path(const RefinedPath& path, const PathSpec& spec) { return path_violation(path, spec).empty(); }

inline constexpr double kDefaultPathGuard = 1e7;

/// binom(t1+t2-2, t1-1) * k0^(t1+t2-2), the number of (basic path, refinement) tuples before the monotonicity filter.
inline double path_enumeration_bound(const PathSpec& spec) {
  const int steps = spec.t1 + spec.t2 - 2;
  double binom = 1.0;
  for (int k = 1; k <= spec.t1 - 1; ++k) binom = binom * (steps - (spec.t1 - 1) + k) / k;
  return binom * std::pow(static_cast<double>(spec.k0), steps);
}

/// Calls visit(path) for every refined path, in lexicographic order of
/// (cells, refinements). Throws std::length_error if the enumeration bound exceeds `guard`.
template <class Visitor>
  requires std::invocable<Visitor&, const RefinedPath&>
void for_each_refined_path(const PathSpec& spec, Visitor&& visit, double guard = kDefaultPathGuard) {
  spec.validate();
  if (path_enumeration_bound(spec) > guard)
    throw std::length_error("for_each_refined_path: path count exceeds the enumeration guard");
  const int len = spec.length();
  RefinedPath path;
  path.cells.resize(static_cast<std::size_t>(len));
  path.refinements.resize(static_cast<std::size_t>(len - 1));
  path.cells[0] = {1, 1};

  std::function<void(int)> refine = [&](int l) {
    if (l == len - 1) {
      visit(std::as_const(path));
      return;
    }
    int lowest = 1;
    if (l >= 1) {
      const Cell& p = path.cells[static_cast<std::size_t>(l - 1)];
      const Cell& c = path.cells[static_cast<std::size_t>(l)];
      const Cell& q = path.cells[static_cast<std::size_t>(l + 1)];
      if ((p.i == c.i && c.i == q.i) || (p.j == c.j && c.j == q.j)) lowest = path.refinements[static_cast<std::size_t>(l - 1)];
    }
    for (int r = lowest; r <= spec.k0; ++r) {
      path.refinements[static_cast<std::size_t>(l)] = r;
      refine(l + 1);
    }
  };

  // (i, j+1) precedes (i+1, j) lexicographically, so up steps are tried first.
  std::function<void(int)> walk = [&](int l) {
    if (l == len - 1) {
      refine(0);
      return;
    }
    const Cell c = path.cells[static_cast<std::size_t>(l)];
    if (c.j < spec.t2) {
      path.cells[static_cast<std::size_t>(l + 1)] = {c.i, c.j + 1};
      walk(l + 1);
    }
    if (c.i < spec.t1) {
      path.cells[static_cast<std::size_t>(l + 1)] = {c.i + 1, c.j};
      walk(l + 1);
    }
  };
  walk(0);
}

inline std::vector<RefinedPath> enumerate_refined_paths(const PathSpec& spec, double guard = kDefaultPathGuard) {
  std::vector<RefinedPath> out;
  for_each_refined_path(spec, [&](const RefinedPath& p) { out.push_back(p); }, guard);
  return out;
}

/// Midpoints and endpoints of the chosen edge intervals, indexed 0..t1+t2-1;
/// index 0 is the corner (A1, B1) and index t1+t2-1 the corner (A2, B2).
struct PathGeometry {
  std::vector<double> x, y;
  std::vector<double> a, b, c, d;
};

inline PathGeometry geometry(const RefinedPath& path, const PathSpec& spec) {
  if (const auto why = path_violation(path, spec); !why.empty()) throw std::invalid_argument("geometry: " + why);
  const int len = spec.length();
  const double d1 = spec.delta1(), d2 = spec.delta2();
  PathGeometry g;
  const auto size = static_cast<std::size_t>(len + 1);
  g.x.resize(size);
  g.y.resize(size);
  g.a.resize(size);
  g.b.resize(size);
  g.c.resize(size);
  g.d.resize(size);
  g.x[0] = g.a[0] = g.c[0] = spec.a1;
  g.y[0] = g.b[0] = g.d[0] = spec.b1;
  for (int l = 1; l <= len - 1; ++l) {
    const Cell& cur = path.cells[static_cast<std::size_t>(l - 1)];
    const Cell& nxt = path.cells[static_cast<std::size_t>(l)];
    const int r = path.refinements[static_cast<std::size_t>(l - 1)];
    const auto L = static_cast<std::size_t>(l);
    if (nxt.i == cur.i + 1) {
      // right step: vertical edge x = A1 + i delta1
      const double x = spec.a1 + cur.i * d1;
      const double base = spec.b1 + (cur.j - 1) * d2;
      g.a[L] = g.c[L] = g.x[L] = x;
      g.b[L] = base + (r - 1) * d2 / spec.k0;
      g.d[L] = base + r * d2 / spec.k0;
      g.y[L] = 0.5 * (g.b[L] + g.d[L]);
    } else {
      // up step: horizontal edge y = B1 + j delta2
      const double y = spec.b1 + cur.j * d2;
      const double base = spec.a1 + (cur.i - 1) * d1;
      g.b[L] = g.d[L] = g.y[L] = y;
      g.a[L] = base + (r - 1) * d1 / spec.k0;
      g.c[L] = base + r * d1 / spec.k0;
      g.x[L] = 0.5 * (g.a[L] + g.c[L]);
    }
  }
  const auto last = static_cast<std::size_t>(len);
  g.x[last] = g.a[last] = g.c[last] = spec.a2;
  g.y[last] = g.b[last] = g.d[last] = spec.b2;
  return g;
}

/// Placement of the unit-square picture into the permutation's coordinates:
/// x -> kappa + alpha x, y -> kappa + gamma y.
struct Embedding {
  double kappa = 0.0;
  double alpha = 1.0;
  double gamma = 1.0;

  double px(double x) const { return kappa + alpha * x; }
  double py(double y) const { return kappa + gamma * y; }
};

/// LIS of sigma restricted to the half-open box spanned by `spec`.
inline std::size_t lis_in_spec_box(const Permutation& p, const PathSpec& spec, const Embedding& e) {
  return lis_in_box(p, Box{Interval::half_open(e.px(spec.a1), e.px(spec.a2)), Interval::half_open(e.py(spec.b1), e.py(spec.b2))});
}

/// Sum over l of the LIS in (px(x_{l-1}), px(x_l)] x (py(y_{l-1}), py(y_l)].
inline std::size_t lower_bound_lis(const Permutation& p, const RefinedPath& path, const PathSpec& spec,
                                   const Embedding& e) {
  if (!(e.alpha > 0.0 && e.gamma > 0.0)) throw std::invalid_argument("lower_bound_lis: alpha and gamma must be positive");
  const PathGeometry g = geometry(path, spec);
  std::size_t total = 0;
  for (std::size_t l = 1; l < g.x.size(); ++l)
    total += lis_in_box(p, Box{Interval::half_open(e.px(g.x[l - 1]), e.px(g.x[l])),
                               Interval::half_open(e.py(g.y[l - 1]), e.py(g.y[l]))});
  return total;
}

/// Sum over l of the LIS in the closed box [px(a_{l-1}), px(c_l)] x [py(b_{l-1}), py(d_l)].
inline std::size_t closed_path_sum(const Permutation& p, const RefinedPath& path, const PathSpec& spec,
                                   const Embedding& e) {
  const PathGeometry g = geometry(path, spec);
  std::size_t total = 0;
  for (std::size_t l = 1; l < g.x.size(); ++l)
    total += lis_in_box(p, Box{Interval::closed_between(e.px(g.a[l - 1]), e.px(g.c[l])),
                               Interval::closed_between(e.py(g.b[l - 1]), e.py(g.d[l]))});
  return total;
}

/// Maximum of closed_path_sum over every refined path.
inline std::size_t upper_bound_lis(const Permutation& p, const PathSpec& spec, const Embedding& e,
                                   double guard = kDefaultPathGuard) {
  if (!(e.alpha > 0.0 && e.gamma > 0.0)) throw std::invalid_argument("upper_bound_lis: alpha and gamma must be positive");
  std::size_t best = 0;
  for_each_refined_path(spec, [&](const RefinedPath& path) { best = std::max(best, closed_path_sum(p, path, spec, e)); },
                        guard);
  return best;
}

/// The staircase (1,1),(2,1),(2,2),(3,2),...,(T,T) with every refinement (K0+1)/2; K0 odd.
inline RefinedPath staircase_path(int t, int k0) {
  if (t < 2 || k0 < 1 || k0 % 2 == 0) throw std::invalid_argument("staircase_path: need t >= 2 and odd k0");
  RefinedPath path;
  path.cells.push_back({1, 1});
  for (int k = 1; k < t; ++k) {
    path.cells.push_back({k + 1, k});
    path.cells.push_back({k + 1, k + 1});
  }
  path.refinements.assign(path.cells.size() - 1, (k0 + 1) / 2);
  return path;
}

// ---------------------------------------------------------------------------
// Block decomposition
// ---------------------------------------------------------------------------

/// Which strips complete the diagonal blocks to a cover of (0, n]^2.
enum class BlockCovering {
  LowerLeft,   ///< R'_s = (0, t_{s-1}] x I_s and R''_s = I_s x (0, t_{s-1}], s >= 2
  UpperRight,  ///< R'_s = (t_s, n] x I_s and R''_s = I_s x (t_s, n], s <= m-1
};

struct BlockBounds {
  std::size_t lower = 0;
  std::size_t upper = 0;
};

/// With I_s = (t_{s-1}, t_s]: lower = sum_s LIS(sigma on I_s x I_s); upper adds
/// the LIS of both strips of every block under the chosen covering.
inline BlockBounds block_bounds(const Permutation& p, const std::vector<double>& boundaries,
                                BlockCovering covering = BlockCovering::LowerLeft) {
  const double n = p.size();
  if (boundaries.size() < 2 || boundaries.front() != 0.0 || boundaries.back() != n)
    throw std::invalid_argument("block_bounds: boundaries must run from 0 to n");
  for (std::size_t s = 1; s < boundaries.size(); ++s)
    if (!(boundaries[s - 1] < boundaries[s])) throw std::invalid_argument("block_bounds: boundaries must increase");
  const std::size_t m = boundaries.size() - 1;
  BlockBounds out;
  for (std::size_t s = 1; s <= m; ++s) {
    const Interval block = Interval::half_open(boundaries[s - 1], boundaries[s]);
    out.lower += lis_in_box(p, Box{block, block});
  }
  out.upper = out.lower;
  for (std::size_t s = 1; s <= m; ++s) {
    const Interval block = Interval::half_open(boundaries[s - 1], boundaries[s]);
    if (covering == BlockCovering::LowerLeft) {
      if (s == 1) continue;
      const Interval below = Interval::half_open(0.0, boundaries[s - 1]);
      out.upper += lis_in_box(p, Box{below, block}) + lis_in_box(p, Box{block, below});
    } else {
      if (s == m) continue;
      const Interval above = Interval::half_open(boundaries[s], n);
      out.upper += lis_in_box(p, Box{above, block}) + lis_in_box(p, Box{block, above});
    }
  }
  return out;
}

}  // namespace mallows
