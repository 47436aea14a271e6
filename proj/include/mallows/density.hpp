/**
 * @brief Limiting densities of the scaled permutation graph in the theta regimes
 * (beta = theta/n for L1, beta = theta/n^2 for L2).
 *
 * The density has the form rho(x, y) = exp(-c(x, y) + a(x) + a(y)) on [0,1]^2 with
 * c(x, y) = theta |x - y| (L1) or theta (x - y)^2 (L2), and a is fixed by requiring
 * both marginals of rho to be uniform:
 *
 *     a(x) = -log \int_0^1 exp(-c(x, y) + a(y)) dy.
 *
 * solve_density discretizes [0,1] into m cells, evaluates the integral by the
 * midpoint rule, and runs symmetric Sinkhorn scaling: A <- T(a), B <- T(A),
 * a <- (A + B) / 2, followed by a <- (a + a reversed) / 2, where T is the right
 * hand side above. It stops once every row/column mass of rho is within tol of 1.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "csv.hpp"
#include "models.hpp"

namespace mallows {

struct DensityGrid {
  ModelKind kind = ModelKind::L1;
  double theta = 0.0;
  int m = 0;
  std::vector<double> a;  ///< a at the cell midpoints (k + 1/2) / m
  double marginal_error = 0.0;
  int iterations = 0;
  bool converged = false;

  double midpoint(int k) const { return (k + 0.5) / m; }
  double cell_width() const { return 1.0 / m; }
};

struct DensityOptions {
  int m = 1024;
  double tol = 1e-10;
  int max_iter = 100000;
};

class DensityNotConverged : public std::runtime_error {
 public:
  explicit DensityNotConverged(DensityGrid grid)
      : std::runtime_error("solve_density: no convergence within max_iter; marginal error " +
                           format_real(grid.marginal_error)),
        grid_(std::move(grid)) {}
  const DensityGrid& grid() const { return grid_; }

 private:
  DensityGrid grid_;
};

inline double kernel_cost(ModelKind kind, double theta, double x, double y) {
  const double d = x - y;
  return kind == ModelKind::L1 ? theta * std::abs(d) : theta * d * d;
}

namespace detail {

/// out_k = h * sum_l exp(-c(x_k, x_l)) v_l on the midpoint grid.
class KernelOperator {
 public:
  KernelOperator(ModelKind kind, double theta, int m) : kind_(kind), m_(m), h_(1.0 / m) {
    if (kind == ModelKind::L1) {
      ratio_ = std::exp(-theta * h_);
    } else {
      dense_.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l)
          dense_[static_cast<std::size_t>(k) * m + l] = std::exp(-kernel_cost(kind, theta, (k + 0.5) * h_, (l + 0.5) * h_));
    }
  }

  void apply(std::span<const double> v, std::span<double> out) const {
    const auto m = static_cast<std::size_t>(m_);
    if (kind_ == ModelKind::L1) {
      // exp(-theta h |k - l|) is a two-sided geometric filter: one sweep each way.
      double run = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        run = v[k] + ratio_ * run;
        out[k] = run;
      }
      run = 0.0;
      for (std::size_t k = m; k-- > 0;) {
        out[k] += ratio_ * run;
        run = v[k] + ratio_ * run;
      }
    } else {
      for (std::size_t k = 0; k < m; ++k) {
        const double* row = dense_.data() + k * m;
        double s = 0.0;
        for (std::size_t l = 0; l < m; ++l) s += row[l] * v[l];
        out[k] = s;
      }
    }
    for (std::size_t k = 0; k < m; ++k) out[k] *= h_;
  }

 private:
  ModelKind kind_;
  int m_;
  double h_;
  double ratio_ = 0.0;
  std::vector<double> dense_;
};

// T(a)_k = -log(h sum_l K_kl exp(a_l)).
inline void scaling_map(const KernelOperator& op, std::span<const double> a, std::span<double> out,
                        std::vector<double>& buf) {
  buf.resize(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) buf[k] = std::exp(a[k]);
  op.apply(buf, out);
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = -std::log(out[k]);
}

inline double marginal_deviation(const KernelOperator& op, std::span<const double> a, std::vector<double>& buf,
                                 std::vector<double>& out) {
  buf.resize(a.size());
  out.resize(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) buf[k] = std::exp(a[k]);
  op.apply(buf, out);
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(buf[k] * out[k] - 1.0));
  return worst;
}

inline void symmetrize(std::vector<double>& a) {
  const std::size_t m = a.size();
  for (std::size_t k = 0; k < m / 2; ++k) {
    const double avg = 0.5 * (a[k] + a[m - 1 - k]);
    a[k] = avg;
    a[m - 1 - k] = avg;
  }
}

}  // namespace detail

/// Throws DensityNotConverged (carrying the last iterate) when max_iter sweeps do not reach tol.
inline DensityGrid solve_density(ModelKind kind, double theta, const DensityOptions& opt = {}) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw std::invalid_argument("solve_density: theta must be positive");
  if (opt.m < 16) throw std::invalid_argument("solve_density: grid resolution must be at least 16");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("solve_density: tol must be positive");

  DensityGrid g;
  g.kind = kind;
  g.theta = theta;
  g.m = opt.m;
  g.a.assign(static_cast<std::size_t>(opt.m), 0.0);

  const detail::KernelOperator op(kind, theta, opt.m);
  std::vector<double> A(g.a.size()), B(g.a.size()), buf, out;
  g.marginal_error = detail::marginal_deviation(op, g.a, buf, out);
  while (g.marginal_error >= opt.tol && g.iterations < opt.max_iter) {
    detail::scaling_map(op, g.a, A, buf);
    detail::scaling_map(op, A, B, buf);
    for (std::size_t k = 0; k < g.a.size(); ++k) g.a[k] = 0.5 * (A[k] + B[k]);
    detail::symmetrize(g.a);
    ++g.iterations;
    g.marginal_error = detail::marginal_deviation(op, g.a, buf, out);
  }
  g.converged = g.marginal_error < opt.tol;
  if (!g.converged) throw DensityNotConverged(std::move(g));
  return g;
}

/// Largest |row mass - 1| of rho on the grid; by symmetry also the largest column deviation.
inline double max_marginal_deviation(const DensityGrid& g) {
  const detail::KernelOperator op(g.kind, g.theta, g.m);
  std::vector<double> buf, out;
  return detail::marginal_deviation(op, g.a, buf, out);
}

/// max_k |a_k - T(a)_k|, how far the grid is from solving the fixed-point equation.
inline double fixed_point_residual(const DensityGrid& g) {
  const detail::KernelOperator op(g.kind, g.theta, g.m);
  std::vector<double> image(g.a.size()), buf;
  detail::scaling_map(op, g.a, image, buf);
  double worst = 0.0;
  for (std::size_t k = 0; k < g.a.size(); ++k) worst = std::max(worst, std::abs(g.a[k] - image[k]));
  return worst;
}

/// a(x) by linear interpolation between midpoints, extended linearly past the outer midpoints.
inline double a_at(const DensityGrid& g, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::out_of_range("a_at: x outside [0, 1]");
  const double pos = x * g.m - 0.5;
  if (g.m >= 3 && (pos < 0.0 || pos > g.m - 1)) {
    // quadratic through the three outermost midpoints
    const bool left = pos < 0.0;
    const std::size_t e = left ? 0 : static_cast<std::size_t>(g.m) - 1;
    const double t = left ? -pos : pos - (g.m - 1);
    const double a0 = g.a[e], a1 = g.a[left ? e + 1 : e - 1], a2 = g.a[left ? e + 2 : e - 2];
    return a0 * (1.0 + t) * (2.0 + t) / 2.0 - a1 * t * (2.0 + t) + a2 * t * (1.0 + t) / 2.0;
  }
  int k = static_cast<int>(std::floor(pos));
  k = std::clamp(k, 0, g.m - 2);
  const double t = pos - k;
  return (1.0 - t) * g.a[static_cast<std::size_t>(k)] + t * g.a[static_cast<std::size_t>(k) + 1];
}

inline double rho_at(const DensityGrid& g, double x, double y) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) throw std::out_of_range("rho_at: point outside [0, 1]^2");
  return std::exp(-kernel_cost(g.kind, g.theta, x, y) + a_at(g, x) + a_at(g, y));
}

/// 2 \int_0^1 sqrt(rho(x, x)) dx by the midpoint rule; sqrt(rho(x, x)) = exp(a(x)).
inline double lln_constant(const DensityGrid& g) {
  double s = 0.0;
  for (double ak : g.a) s += std::exp(ak);
  return 2.0 * s / g.m;
}

struct DensityBounds {
  double min_rho = 0.0;
  double max_rho = 0.0;
};

/// Extremes of rho over the grid midpoints together with the edges x = 0 and
/// x = 1, where a is extended linearly; the maximum sits at a corner.
inline DensityBounds density_bounds(const DensityGrid& g) {
  std::vector<double> xs{0.0}, as{a_at(g, 0.0)};
  for (int k = 0; k < g.m; ++k) {
    xs.push_back(g.midpoint(k));
    as.push_back(g.a[static_cast<std::size_t>(k)]);
  }
  xs.push_back(1.0);
  as.push_back(a_at(g, 1.0));
  DensityBounds b{INFINITY, 0.0};
  for (std::size_t k = 0; k < xs.size(); ++k)
    for (std::size_t l = 0; l < xs.size(); ++l) {
      const double r = std::exp(-kernel_cost(g.kind, g.theta, xs[k], xs[l]) + as[k] + as[l]);
      b.min_rho = std::min(b.min_rho, r);
      b.max_rho = std::max(b.max_rho, r);
    }
  return b;
}

/// Mass of rho in each cell of a cells x cells partition of [0,1]^2, row-major
/// with the x index first; `sub` midpoint nodes per cell side.
inline std::vector<double> cell_masses(const DensityGrid& g, int cells, int sub = 8) {
  if (cells < 1 || sub < 1) throw std::invalid_argument("cell_masses: cells and sub must be positive");
  std::vector<double> mass(static_cast<std::size_t>(cells) * cells, 0.0);
  const int per_side = cells * sub;
  const double h = 1.0 / per_side;
  std::vector<double> ax(static_cast<std::size_t>(per_side));
  for (int k = 0; k < per_side; ++k) ax[static_cast<std::size_t>(k)] = a_at(g, (k + 0.5) * h);
  for (int k = 0; k < per_side; ++k)
    for (int l = 0; l < per_side; ++l) {
      const double r = std::exp(-kernel_cost(g.kind, g.theta, (k + 0.5) * h, (l + 0.5) * h) +
                                ax[static_cast<std::size_t>(k)] + ax[static_cast<std::size_t>(l)]);
      mass[static_cast<std::size_t>(k / sub) * cells + l / sub] += r * h * h;
    }
  return mass;
}

/// CSV "x,a".
inline void write_grid_csv(std::ostream& out, const DensityGrid& g) {
  out << "x,a\n";
  for (int k = 0; k < g.m; ++k) out << format_real(g.midpoint(k)) << ',' << format_real(g.a[static_cast<std::size_t>(k)]) << '\n';
}

/// CSV "x,rho" along the diagonal.
inline void write_diagonal_csv(std::ostream& out, const DensityGrid& g) {
  out << "x,rho\n";
  for (int k = 0; k < g.m; ++k)
    out << format_real(g.midpoint(k)) << ',' << format_real(std::exp(2.0 * g.a[static_cast<std::size_t>(k)])) << '\n';
}

}  // namespace mallows
