/**
 * @brief Mallows models with L1 (footrule) and L2 (rank correlation) distance to
 * the identity: energies, log-weights, and exact distributions by enumeration.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "csv.hpp"
#include "permutation.hpp"
#include "rng.hpp"

namespace mallows {

enum class ModelKind { L1, L2 };

inline std::string_view to_string(ModelKind kind) { return kind == ModelKind::L1 ? "l1" : "l2"; }

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "l1" || s == "L1") return ModelKind::L1;
  if (s == "l2" || s == "L2") return ModelKind::L2;
  throw std::invalid_argument("unknown model kind: " + std::string(s));
}

struct ModelParams {
  int n = 1;
  double beta = 1.0;
  ModelKind kind = ModelKind::L1;

  void validate() const {
    if (n < 1) throw std::invalid_argument("ModelParams: n must be >= 1");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("ModelParams: beta must be positive and finite");
  }
};

/// Integer energy: sum |sigma(i)-i| for L1, sum (sigma(i)-i)^2 for L2.
inline std::int64_t energy_exact(ModelKind kind, const Permutation& p) {
  std::int64_t e = 0;
  for (int i = 1; i <= p.size(); ++i) {
    const std::int64_t d = p(i) - i;
    e += kind == ModelKind::L1 ? (d < 0 ? -d : d) : d * d;
  }
  return e;
}

inline double energy(ModelKind kind, const Permutation& p) { return static_cast<double>(energy_exact(kind, p)); }

inline double log_weight(const ModelParams& params, const Permutation& p) {
  return -params.beta * energy(params.kind, p);
}

inline constexpr int kMaxEnumerationSize = 8;

/// Lexicographic rank of p among all permutations of its size (Lehmer code).
inline std::size_t lexicographic_rank(const Permutation& p) {
  const int n = p.size();
  std::size_t rank = 0;
  std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    int smaller_unused = 0;
    for (int v = 1; v < p(i); ++v)
      if (!used[v]) ++smaller_unused;
    used[p(i)] = 1;
    rank = rank * static_cast<std::size_t>(n - i + 1) + static_cast<std::size_t>(smaller_unused);
  }
  return rank;
}

/// The full law of a small model. perms[k] is the permutation of lexicographic rank k.
struct ExactDistribution {
  ModelParams params;
  std::vector<Permutation> perms;
  std::vector<double> probs;
  std::vector<double> energies;
  std::vector<double> cumulative;  ///< running sums of probs, last entry 1
  double log_z = 0.0;

  std::size_t index_of(const Permutation& p) const { return lexicographic_rank(p); }
  double prob(const Permutation& p) const { return probs[index_of(p)]; }
  std::size_t size() const { return perms.size(); }
};

/// Enumerates S_n (n <= kMaxEnumerationSize) in log-space with the maximum log-weight subtracted.
inline ExactDistribution exact_distribution(const ModelParams& params) {
  params.validate();
  if (params.n > kMaxEnumerationSize)
    throw std::length_error("exact_distribution: n exceeds the enumeration guard of " +
                            std::to_string(kMaxEnumerationSize));
  ExactDistribution d;
  d.params = params;
  std::vector<int> v(static_cast<std::size_t>(params.n));
  std::iota(v.begin(), v.end(), 1);
  std::vector<double> logw;
  do {
    d.perms.push_back(Permutation::from_trusted(v));
    d.energies.push_back(energy(params.kind, d.perms.back()));
    logw.push_back(-params.beta * d.energies.back());
  } while (std::next_permutation(v.begin(), v.end()));

  const double shift = *std::ranges::max_element(logw);
  double total = 0.0;
  for (double lw : logw) total += std::exp(lw - shift);
  d.log_z = shift + std::log(total);
  d.probs.reserve(logw.size());
  d.cumulative.reserve(logw.size());
  double running = 0.0;
  for (double lw : logw) {
    d.probs.push_back(std::exp(lw - d.log_z));
    running += d.probs.back();
    d.cumulative.push_back(running);
  }
  d.cumulative.back() = 1.0;
  return d;
}

/// Inverse-CDF draw.
inline const Permutation& exact_sample(const ExactDistribution& dist, Rng& rng) {
  const double u = uniform_unit(rng);
  auto it = std::upper_bound(dist.cumulative.begin(), dist.cumulative.end(), u);
  if (it == dist.cumulative.end()) --it;
  return dist.perms[static_cast<std::size_t>(it - dist.cumulative.begin())];
}

/// CSV with header "perm,prob,energy"; probabilities at 12 significant digits.
inline void write_csv(std::ostream& out, const ExactDistribution& dist) {
  out << "perm,prob,energy\n";
  for (std::size_t k = 0; k < dist.size(); ++k)
    out << to_string(dist.perms[k]) << ',' << format_real(dist.probs[k]) << ',' << format_real(dist.energies[k]) << '\n';
}

}  // namespace mallows
