/**
 * @brief Permutations of [n], partial bijections, rectangle restrictions and
 * longest increasing subsequences.
 *
 * All public indices and values are 1-based: for a Permutation p of size n,
 * p(i) is defined for 1 <= i <= n and takes values in {1..n}.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <iterator>
#include <limits>
#include <numeric>
#include <ranges>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mallows {

struct Box;

class Permutation {
 public:
  Permutation() = default;

  /// Takes the one-line form sigma(1) ... sigma(n); throws unless it is a bijection of {1..n}.
  explicit Permutation(std::vector<int> one_line) : image_(std::move(one_line)) {
    std::vector<char> seen(image_.size() + 1, 0);
    const int n = size();
    for (int v : image_) {
      if (v < 1 || v > n || seen[v]) throw std::invalid_argument("Permutation: one-line form is not a bijection of [n]");
      seen[v] = 1;
    }
  }

  static Permutation identity(int n) {
    if (n < 0) throw std::invalid_argument("Permutation::identity: negative size");
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 1);
    return from_trusted(std::move(v));
  }

  /// The anti-diagonal i -> n+1-i.
  static Permutation reversal(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[i] = n - i;
    return from_trusted(std::move(v));
  }

  /// Skips validation; the caller guarantees a bijection.
  static Permutation from_trusted(std::vector<int> one_line) {
    Permutation p;
    p.image_ = std::move(one_line);
    return p;
  }

  int size() const { return static_cast<int>(image_.size()); }
  bool empty() const { return image_.empty(); }

  /// sigma(i), 1-based.
  int operator()(int i) const { return image_[static_cast<std::size_t>(i - 1)]; }

  std::span<const int> one_line() const { return image_; }

  /// Mutable access for kernels that rewrite the state in place.
  std::vector<int>& mutable_one_line() { return image_; }

  bool is_valid() const {
    std::vector<char> seen(image_.size() + 1, 0);
    for (int v : image_) {
      if (v < 1 || v > size() || seen[v]) return false;
      seen[v] = 1;
    }
    return true;
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation& a, const Permutation& b) { return a.image_ <=> b.image_; }

 private:
  std::vector<int> image_;
};

/// A bijection between two finite subsets of [n], stored as (domain point, value)
/// pairs in strictly increasing domain order.
class PartialBijection {
 public:
  using Pair = std::pair<int, int>;

  PartialBijection() = default;

  explicit PartialBijection(std::vector<Pair> pairs) : pairs_(std::move(pairs)) {
    std::ranges::sort(pairs_);
    for (std::size_t k = 1; k < pairs_.size(); ++k)
      if (pairs_[k].first == pairs_[k - 1].first)
        throw std::invalid_argument("PartialBijection: repeated domain point");
    std::vector<int> values;
    values.reserve(pairs_.size());
    for (const auto& pr : pairs_) values.push_back(pr.second);
    std::ranges::sort(values);
    if (std::ranges::adjacent_find(values) != values.end())
      throw std::invalid_argument("PartialBijection: repeated value");
  }

  static PartialBijection from_permutation(const Permutation& p) {
    PartialBijection b;
    b.pairs_.reserve(static_cast<std::size_t>(p.size()));
    for (int i = 1; i <= p.size(); ++i) b.pairs_.emplace_back(i, p(i));
    return b;
  }

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  std::span<const Pair> pairs() const { return pairs_; }

  /// Values listed in domain order; the LIS of the bijection is the LIS of this sequence.
  std::vector<int> values() const {
    std::vector<int> v;
    v.reserve(pairs_.size());
    for (const auto& pr : pairs_) v.push_back(pr.second);
    return v;
  }

  friend bool operator==(const PartialBijection&, const PartialBijection&) = default;

 private:
  friend PartialBijection restrict_to(const Permutation&, const Box&);
  std::vector<Pair> pairs_;
};

// ---------------------------------------------------------------------------
// Longest increasing subsequence
// ---------------------------------------------------------------------------

/// Patience sorting, O(k log k) for a sequence of k distinct values.
template <std::ranges::input_range R>
  requires std::totally_ordered<std::ranges::range_value_t<R>>
std::size_t lis_of_sequence(R&& values) {
  std::vector<std::ranges::range_value_t<R>> tails;
  for (auto&& v : values) {
    auto it = std::lower_bound(tails.begin(), tails.end(), v);
    if (it == tails.end())
      tails.push_back(v);
    else
      *it = v;
  }
  return tails.size();
}

inline std::size_t lis(const Permutation& p) { return lis_of_sequence(p.one_line()); }

/// LIS of a partial bijection; 0 for the empty mapping.
inline std::size_t lis(const PartialBijection& b) {
  return lis_of_sequence(b.pairs() | std::views::values);
}

inline constexpr std::size_t kBruteForceLisLimit = 22;

/// Exhaustive oracle: walks every increasing subsequence by depth-first
/// extension. Exponential; throws std::length_error above kBruteForceLisLimit pairs.
inline std::size_t lis_bruteforce(const PartialBijection& b) {
  if (b.size() > kBruteForceLisLimit)
    throw std::length_error("lis_bruteforce: bijection larger than the enumeration guard");
  const std::vector<int> v = b.values();
  const std::size_t k = v.size();
  std::size_t best = 0;
  std::function<void(std::size_t, int, std::size_t)> extend = [&](std::size_t from, int last, std::size_t len) {
    best = std::max(best, len);
    for (std::size_t j = from; j < k; ++j)
      if (v[j] > last) extend(j + 1, v[j], len + 1);
  };
  extend(0, std::numeric_limits<int>::min(), 0);
  return best;
}

inline std::size_t lis_bruteforce(const Permutation& p) {
  return lis_bruteforce(PartialBijection::from_permutation(p));
}

/// O(k^2) dynamic-programming LIS; exact at any size, independent of patience sorting.
inline std::size_t lis_quadratic(std::span<const int> v) {
  std::vector<std::size_t> ending(v.size(), 1);
  std::size_t best = 0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i)
      if (v[i] < v[j]) ending[j] = std::max(ending[j], ending[i] + 1);
    best = std::max(best, ending[j]);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Restrictions to rectangles
// ---------------------------------------------------------------------------

/// A real interval, either (lo, hi] (the default) or [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool closed = false;

  static Interval half_open(double lo, double hi) { return {lo, hi, false}; }
  static Interval closed_between(double lo, double hi) { return {lo, hi, true}; }
};

namespace detail {

// Boundaries are computed as kappa + alpha * (grid fraction); when such a value
// lands within round-off of an integer it is that integer, so snapping keeps
// lattice points from flipping sides between half-open and closed rectangles.
inline constexpr double kBoundarySlack = 1e-12;

inline double snap_to_lattice(double v) {
  const double r = std::round(v);
  return std::abs(v - r) <= kBoundarySlack * std::max(1.0, std::abs(v)) ? r : v;
}

/// Smallest and largest integers of the interval clamped to [1, n]; empty when first > last.
inline std::pair<long long, long long> integer_span(const Interval& iv, int n) {
  const double lo = snap_to_lattice(iv.lo);
  const double hi = snap_to_lattice(iv.hi);
  double first = iv.closed ? std::ceil(lo) : std::floor(lo) + 1.0;
  double last = std::floor(hi);
  first = std::max(first, 1.0);
  last = std::min(last, static_cast<double>(n));
  if (!(first <= last)) return {1, 0};
  return {static_cast<long long>(first), static_cast<long long>(last)};
}

}  // namespace detail

struct Box {
  Interval x;
  Interval y;
};

/// The bijection sigma restricted to points (i, sigma(i)) lying in the box.
inline PartialBijection restrict_to(const Permutation& p, const Box& box) {
  PartialBijection out;
  const int n = p.size();
  const auto [x0, x1] = detail::integer_span(box.x, n);
  const auto [y0, y1] = detail::integer_span(box.y, n);
  if (x0 > x1 || y0 > y1) return out;
  for (long long i = x0; i <= x1; ++i) {
    const int v = p(static_cast<int>(i));
    if (v >= y0 && v <= y1) out.pairs_.emplace_back(static_cast<int>(i), v);
  }
  return out;
}

inline PartialBijection restrict_to(const Permutation& p, double x_lo, double x_hi, double y_lo, double y_hi,
                                    bool closed_x = false, bool closed_y = false) {
  if (x_lo > x_hi || y_lo > y_hi) throw std::invalid_argument("restrict_to: interval with lo > hi");
  return restrict_to(p, Box{{x_lo, x_hi, closed_x}, {y_lo, y_hi, closed_y}});
}

/// LIS of the restriction without materializing the pairs.
inline std::size_t lis_in_box(const Permutation& p, const Box& box) {
  const int n = p.size();
  const auto [x0, x1] = detail::integer_span(box.x, n);
  const auto [y0, y1] = detail::integer_span(box.y, n);
  if (x0 > x1 || y0 > y1) return 0;
  std::vector<int> tails;
  for (long long i = x0; i <= x1; ++i) {
    const int v = p(static_cast<int>(i));
    if (v < y0 || v > y1) continue;
    auto it = std::lower_bound(tails.begin(), tails.end(), v);
    if (it == tails.end())
      tails.push_back(v);
    else
      *it = v;
  }
  return tails.size();
}

// ---------------------------------------------------------------------------
// Symmetries and displacement
// ---------------------------------------------------------------------------

inline Permutation inverse(const Permutation& p) {
  std::vector<int> inv(static_cast<std::size_t>(p.size()));
  for (int i = 1; i <= p.size(); ++i) inv[static_cast<std::size_t>(p(i) - 1)] = i;
  return Permutation::from_trusted(std::move(inv));
}

/// i -> n+1-sigma(n+1-i).
inline Permutation reverse_complement(const Permutation& p) {
  const int n = p.size();
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) out[static_cast<std::size_t>(i - 1)] = n + 1 - p(n + 1 - i);
  return Permutation::from_trusted(std::move(out));
}

inline Permutation compose(const Permutation& outer, const Permutation& inner) {
  if (outer.size() != inner.size()) throw std::invalid_argument("compose: size mismatch");
  std::vector<int> out(static_cast<std::size_t>(inner.size()));
  for (int i = 1; i <= inner.size(); ++i) out[static_cast<std::size_t>(i - 1)] = outer(inner(i));
  return Permutation::from_trusted(std::move(out));
}

/// |{j <= i : sigma(j) >= i+1}|, the number of crossings of level i from below.
inline int displacement_count(const Permutation& p, int i) {
  if (i < 1 || i > p.size()) throw std::out_of_range("displacement_count: index outside [1, n]");
  int count = 0;
  for (int j = 1; j <= i; ++j)
    if (p(j) >= i + 1) ++count;
  return count;
}

/// |{j >= i+1 : sigma(j) <= i}|; equal to displacement_count for every i.
inline int displacement_count_primed(const Permutation& p, int i) {
  if (i < 1 || i > p.size()) throw std::out_of_range("displacement_count_primed: index outside [1, n]");
  int count = 0;
  for (int j = i + 1; j <= p.size(); ++j)
    if (p(j) <= i) ++count;
  return count;
}

// ---------------------------------------------------------------------------
// One-line text form: "sigma(1) sigma(2) ... sigma(n)"
// ---------------------------------------------------------------------------

inline std::string to_string(const Permutation& p) {
  std::string s;
  for (int i = 1; i <= p.size(); ++i) {
    if (i > 1) s.push_back(' ');
    s += std::to_string(p(i));
  }
  return s;
}

inline Permutation parse_permutation(const std::string& line) {
  std::istringstream in(line);
  std::vector<int> v;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(tok, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("parse_permutation: not an integer: " + tok);
    }
    if (used != tok.size()) throw std::invalid_argument("parse_permutation: not an integer: " + tok);
    v.push_back(value);
  }
  return Permutation(std::move(v));
}

inline Permutation read_permutation(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) return parse_permutation(line);
  }
  throw std::invalid_argument("read_permutation: no permutation line in input");
}

}  // namespace mallows
