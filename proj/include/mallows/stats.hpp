/**
 * @brief Empirical measures of permutation graphs, test-function integration
 * against the local limits, total variation, and displacement tails.
 *
 * Local limits of the recentred, rescaled graph:
 *   L1: (1/2) exp(-|x - y|) dx dy
 *   L2: pi^{-1/2} exp(-(x - y)^2) dx dy
 */
#pragma once

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "csv.hpp"
#include "density.hpp"
#include "models.hpp"
#include "permutation.hpp"
#include "rng.hpp"

namespace mallows {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// A uniform-weight planar point set.
struct EmpiricalMeasure2D {
  std::vector<Point2> points;
  double point_weight = 0.0;

  double total_mass() const { return point_weight * static_cast<double>(points.size()); }
};

/// Points (i/n, sigma(i)/n), weight 1/n.
inline EmpiricalMeasure2D nu_measure(const Permutation& p) {
  EmpiricalMeasure2D m;
  const double n = p.size();
  m.point_weight = 1.0 / n;
  m.points.reserve(static_cast<std::size_t>(p.size()));
  for (int i = 1; i <= p.size(); ++i) m.points.push_back({i / n, p(i) / n});
  return m;
}

/// Scale of the local picture: beta for L1, sqrt(beta) for L2.
inline double local_scale(ModelKind kind, double beta) { return kind == ModelKind::L1 ? beta : std::sqrt(beta); }

/// Points (s (i - t0), s (sigma(i) - t0)) with weight s, s = local_scale(kind, beta).
inline EmpiricalMeasure2D mu_local(const Permutation& p, int t0, double beta, ModelKind kind) {
  if (t0 < 1 || t0 > p.size()) throw std::out_of_range("mu_local: t0 outside [1, n]");
  if (!(beta > 0.0)) throw std::invalid_argument("mu_local: beta must be positive");
  const double s = local_scale(kind, beta);
  EmpiricalMeasure2D m;
  m.point_weight = s;
  m.points.reserve(static_cast<std::size_t>(p.size()));
  for (int i = 1; i <= p.size(); ++i) m.points.push_back({s * (i - t0), s * (p(i) - t0)});
  return m;
}

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

struct TestFunction {
  std::function<double(double, double)> eval;
  double support_radius = 0.0;          ///< support within [-K, K]^2
  double lip_bound = 1.0;
  double sup_bound = 1.0;
  std::vector<double> breakpoints;      ///< coordinates (either axis) where f may fail to be smooth
  std::function<void(double, std::vector<double>&)> inner_breaks;  ///< extra y-breakpoints along the line at x

  double operator()(double x, double y) const { return eval(x, y); }

  static TestFunction zero(double k) { return {[](double, double) { return 0.0; }, k, 0.0, 0.0, {}, {}}; }
};

/// Sum over points of weight * f(point).
inline double integrate(const EmpiricalMeasure2D& m, const TestFunction& f) {
  const double k = f.support_radius;
  double s = 0.0;
  for (const Point2& pt : m.points)
    if (std::abs(pt.x) <= k && std::abs(pt.y) <= k) s += f(pt.x, pt.y);
  return s * m.point_weight;
}

inline double local_limit_density(ModelKind kind, double x, double y) {
  const double d = x - y;
  return kind == ModelKind::L1 ? 0.5 * std::exp(-std::abs(d)) : std::exp(-d * d) / std::sqrt(std::numbers::pi);
}

class QuadratureNotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// \int\int f(x, y) density(x, y) dy dx over [-K, K]^2 by nested adaptive
/// Gauss-Kronrod (61 points). The inner integral is split at y = x, at the
/// breakpoints and at inner_breaks(x); the outer one at the breakpoints.
inline double reference_integral(const TestFunction& f, ModelKind kind, double tol = 1e-10) {
  using boost::math::quadrature::gauss_kronrod;
  const double k = f.support_radius;
  if (!(k > 0.0)) return 0.0;
  std::vector<double> cuts{-k, k};
  for (double b : f.breakpoints)
    if (b > -k && b < k) cuts.push_back(b);
  std::ranges::sort(cuts);
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  constexpr unsigned kMaxDepth = 10;
  double worst_error = 0.0;
  auto integrate_pieces = [&](const std::vector<double>& at, auto&& g) {
    double total = 0.0;
    for (std::size_t s = 1; s < at.size(); ++s) {
      if (!(at[s] > at[s - 1])) continue;
      double err = 0.0;
      total += gauss_kronrod<double, 61>::integrate(g, at[s - 1], at[s], kMaxDepth, tol, &err);
      worst_error = std::max(worst_error, err);
    }
    return total;
  };

  auto inner = [&](double x) {
    std::vector<double> at = cuts;
    at.push_back(x);
    if (f.inner_breaks) f.inner_breaks(x, at);
    std::erase_if(at, [k](double v) { return !(v >= -k && v <= k); });
    std::ranges::sort(at);
    return integrate_pieces(at, [&](double y) { return f(x, y) * local_limit_density(kind, x, y); });
  };
  const double value = integrate_pieces(cuts, inner);
  const double scale = std::max(1.0, std::abs(value));
  if (worst_error > 1e3 * tol * scale)
    throw QuadratureNotConverged("reference_integral: error estimate " + format_real(worst_error) + " above tolerance");
  return value;
}

/// A C^1 bump with a linear taper to the support box:
///   f(x, y) = sign * amp * (1 - r^2/w^2)_+^2 * tau(x) tau(y),  tau(t) = clamp(K - |t|, 0, 1),
/// r the distance to the centre. (1 - q^2)^2 has slope at most 8/(3 sqrt 3) < 1.54 in q,
/// and tau(x) tau(y) has gradient norm at most sqrt 2, so amp = 1/(1.54/w + sqrt 2) keeps
/// the Lipschitz constant at most 1; the sup is amp < 1.
inline TestFunction tapered_bump(double k, double cx, double cy, double w, double sign) {
  if (!(k > 0.0 && w > 0.0)) throw std::invalid_argument("tapered_bump: K and width must be positive");
  const double amp = sign / (1.54 / w + std::numbers::sqrt2);
  auto tau = [k](double t) { return std::clamp(k - std::abs(t), 0.0, 1.0); };
  TestFunction f;
  f.eval = [=](double x, double y) {
    const double q2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (w * w);
    if (q2 >= 1.0) return 0.0;
    const double bump = (1.0 - q2) * (1.0 - q2);
    return amp * bump * tau(x) * tau(y);
  };
  f.support_radius = k;
  f.lip_bound = 1.0;
  f.sup_bound = std::abs(amp);
  f.breakpoints = {-k + 1.0, k - 1.0, cx - w, cx + w, cy - w, cy + w};
  f.inner_breaks = [=](double x, std::vector<double>& at) {
    const double h2 = w * w - (x - cx) * (x - cx);
    if (h2 <= 0.0) return;
    at.push_back(cy - std::sqrt(h2));
    at.push_back(cy + std::sqrt(h2));
  };
  return f;
}

/// `count` random members of B_K: centres uniform in [-K, K]^2, widths uniform in [2, 2K]
/// (at least 2), random sign.
inline std::vector<TestFunction> bk_functions(double k, int count, Rng& rng) {
  if (!(k > 0.0)) throw std::invalid_argument("bk_functions: K must be positive");
  std::vector<TestFunction> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int c = 0; c < count; ++c) {
    const double cx = -k + 2.0 * k * uniform_unit(rng);
    const double cy = -k + 2.0 * k * uniform_unit(rng);
    const double w = 2.0 + std::max(0.0, 2.0 * k - 2.0) * uniform_unit(rng);
    const double sign = (rng() >> 63) ? 1.0 : -1.0;
    out.push_back(tapered_bump(k, cx, cy, w, sign));
  }
  return out;
}

/// Randomised check of membership in B_K: |f| <= 1 on samples, f = 0 outside
/// [-K, K]^2, and |f(u) - f(v)| <= |u - v| on random near and far pairs.
/// Returns a description of the first violation, or an empty string.
inline std::string audit_bk(const TestFunction& f, double k, Rng& rng, int samples = 20000) {
  const double slack = 1e-12;
  auto draw = [&](double half) {
    return Point2{-half + 2.0 * half * uniform_unit(rng), -half + 2.0 * half * uniform_unit(rng)};
  };
  for (int s = 0; s < samples; ++s) {
    const Point2 u = draw(k + 1.0);
    const double fu = f(u.x, u.y);
    if (std::abs(fu) > 1.0 + slack) return "sup norm above 1 at (" + format_real(u.x) + ", " + format_real(u.y) + ")";
    if ((std::abs(u.x) > k || std::abs(u.y) > k) && fu != 0.0)
      return "nonzero outside the support at (" + format_real(u.x) + ", " + format_real(u.y) + ")";
    const double h = (s % 2 == 0) ? 1e-3 : 1.0;
    const Point2 v{u.x + h * (2.0 * uniform_unit(rng) - 1.0), u.y + h * (2.0 * uniform_unit(rng) - 1.0)};
    const double dist = std::hypot(u.x - v.x, u.y - v.y);
    if (std::abs(fu - f(v.x, v.y)) > dist * (1.0 + 1e-9) + slack)
      return "Lipschitz constant above 1 near (" + format_real(u.x) + ", " + format_real(u.y) + ")";
  }
  return {};
}

// ---------------------------------------------------------------------------
// Distances and summaries
// ---------------------------------------------------------------------------

/// (1/2) sum |p - q|. Both vectors must have the same length and sum to 1 within 1e-9.
inline double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance: vectors have different supports");
  double sp = 0.0, sq = 0.0, d = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    sp += p[k];
    sq += q[k];
    d += std::abs(p[k] - q[k]);
  }
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
    throw std::invalid_argument("tv_distance: inputs are not probability vectors");
  return 0.5 * d;
}

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

/// Sample mean and standard error of the mean (zero when fewer than two values).
inline MeanStderr summarize(std::span<const double> v) {
  MeanStderr r;
  r.count = v.size();
  if (v.empty()) return r;
  double s = 0.0;
  for (double x : v) s += x;
  r.mean = s / static_cast<double>(v.size());
  if (v.size() < 2) return r;
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.std_error = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return r;
}

// ---------------------------------------------------------------------------
// Displacement tails
// ---------------------------------------------------------------------------

/// Empirical survival function u -> P(|D_i| >= u).
struct DisplacementTail {
  std::vector<std::size_t> at_least;  ///< at_least[u] = #samples with |D_i| >= u
  std::size_t samples = 0;

  double at(std::size_t u) const {
    if (u >= at_least.size()) return 0.0;
    return static_cast<double>(at_least[u]) / static_cast<double>(samples);
  }
  /// Binomial standard error sqrt(p (1 - p) / samples).
  double standard_error(std::size_t u) const {
    const double p = at(u);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  }
};

inline DisplacementTail displacement_tail(std::span<const Permutation> samples, int i) {
  if (samples.empty()) throw std::invalid_argument("displacement_tail: no samples");
  std::vector<int> counts;
  counts.reserve(samples.size());
  for (const Permutation& p : samples) counts.push_back(displacement_count(p, i));
  DisplacementTail t;
  t.samples = samples.size();
  t.at_least.assign(static_cast<std::size_t>(*std::ranges::max_element(counts)) + 2, 0);
  for (int c : counts) ++t.at_least[static_cast<std::size_t>(c)];
  for (std::size_t u = t.at_least.size() - 1; u-- > 0;) t.at_least[u] += t.at_least[u + 1];
  return t;
}

inline double displacement_tail_bound(double u) { return 3.0 * std::exp(-u / 4.0); }

/// CSV "u,empirical_tail,paper_bound" at the requested u values.
inline void write_tail_csv(std::ostream& out, const DisplacementTail& t, std::span<const std::size_t> us) {
  out << "u,empirical_tail,paper_bound\n";
  for (std::size_t u : us)
    out << u << ',' << format_real(t.at(u)) << ',' << format_real(displacement_tail_bound(static_cast<double>(u))) << '\n';
}

// ---------------------------------------------------------------------------
// Histograms of nu against the limiting density
// ---------------------------------------------------------------------------

/// Mass of nu_{n,sigma} in the cells ((k-1)/g, k/g] x ((l-1)/g, l/g], row-major with x first.
inline constexpr int kDefaultHistogramGrid = 32;

inline std::vector<double> nu_histogram(const Permutation& p, int g = kDefaultHistogramGrid) {
  if (g < 1) throw std::invalid_argument("nu_histogram: g must be positive");
  const long long n = p.size();
  std::vector<double> mass(static_cast<std::size_t>(g) * g, 0.0);
  for (int i = 1; i <= p.size(); ++i) {
    const long long cx = (i * static_cast<long long>(g) + n - 1) / n - 1;
    const long long cy = (p(i) * static_cast<long long>(g) + n - 1) / n - 1;
    mass[static_cast<std::size_t>(cx * g + cy)] += 1.0 / static_cast<double>(n);
  }
  return mass;
}

inline double sup_discrepancy(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("sup_discrepancy: size mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  return worst;
}

/// CSV "cell_x,cell_y,mass" with 1-based cell indices.
inline void write_histogram_csv(std::ostream& out, std::span<const double> mass, int g) {
  out << "cell_x,cell_y,mass\n";
  for (int k = 0; k < g; ++k)
    for (int l = 0; l < g; ++l)
      out << k + 1 << ',' << l + 1 << ',' << format_real(mass[static_cast<std::size_t>(k) * g + l]) << '\n';
}

}  // namespace mallows
