#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mallows/harness.hpp"
#include "mallows/paths.hpp"
#include "mallows/samplers.hpp"

using namespace mallows;

namespace {

// Counts refined paths by filtering every (step word, refinement tuple) pair directly.
std::size_t filtered_count(int t1, int t2, int k0) {
  const int steps = t1 + t2 - 2;
  std::size_t count = 0;
  for (std::uint32_t word = 0; word < (1u << steps); ++word) {  // bit set = right step
    if (std::popcount(word) != t1 - 1) continue;
    std::vector<int> r(static_cast<std::size_t>(steps), 1);
    for (;;) {
      bool ok = true;
      for (int l = 0; l + 1 < steps && ok; ++l) {
        const bool same = ((word >> l) & 1u) == ((word >> (l + 1)) & 1u);
        if (same && r[l + 1] < r[l]) ok = false;
      }
      if (ok) ++count;
      int pos = 0;
      while (pos < steps && r[pos] == k0) r[pos++] = 1;
      if (pos == steps) break;
      ++r[pos];
    }
  }
  return count;
}

std::size_t exact_lis(const PartialBijection& b) {
  return b.size() <= kBruteForceLisLimit ? lis_bruteforce(b) : lis_quadratic(b.values());
}

}  // namespace

TEST(PathSpec, Validation) {
  EXPECT_THROW((PathSpec{0, 1, 0, 1, 1, 3, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((PathSpec{0.5, 0.5, 0, 1, 2, 2, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((PathSpec{0, 1, 0, 1.5, 2, 2, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((PathSpec{0, 1, 0, 1, 2, 2, 0}.validate()), std::invalid_argument);
}

TEST(Enumeration, TwoByTwoUnrefined) {
  const auto paths = enumerate_refined_paths(PathSpec::unit_square(2, 1));
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].cells, (std::vector<Cell>{{1, 1}, {1, 2}, {2, 2}}));
  EXPECT_EQ(paths[1].cells, (std::vector<Cell>{{1, 1}, {2, 1}, {2, 2}}));
}

TEST(Enumeration, CountsMatchIndependentFilter) {
  for (int t1 = 2; t1 <= 4; ++t1)
    for (int t2 = 2; t2 <= 4; ++t2)
      for (int k0 = 1; k0 <= 3; ++k0) {
        const PathSpec spec{0, 1, 0, 1, t1, t2, k0};
        const auto paths = enumerate_refined_paths(spec);
        ASSERT_EQ(paths.size(), filtered_count(t1, t2, k0)) << t1 << ' ' << t2 << ' ' << k0;
        ASSERT_TRUE(std::ranges::is_sorted(paths));
        ASSERT_EQ(std::ranges::adjacent_find(paths), paths.end());
        for (const auto& p : paths) ASSERT_TRUE(is_valid_path(p, spec)) << path_violation(p, spec);
      }
}

TEST(Enumeration, Guard) {
  EXPECT_THROW(enumerate_refined_paths(PathSpec::unit_square(10, 3)), std::length_error);
  EXPECT_THROW(enumerate_refined_paths(PathSpec::unit_square(3, 3), 10.0), std::length_error);
}

TEST(Validator, RejectsBrokenPaths) {
  const PathSpec spec = PathSpec::unit_square(3, 2);
  RefinedPath p = staircase_path(3, 1);
  EXPECT_TRUE(is_valid_path(p, spec));
  p.cells[2] = {3, 3};
  EXPECT_FALSE(is_valid_path(p, spec));
  RefinedPath straight{{{1, 1}, {2, 1}, {3, 1}}, {2, 1}};
  EXPECT_EQ(path_violation(straight, {0, 1, 0, 1, 3, 1, 2}), "refinement decreases along a straight run");
  EXPECT_THROW(geometry(straight, {0, 1, 0, 1, 3, 2, 2}), std::invalid_argument);
}

TEST(Geometry, StaircaseMidpoints) {
  for (int t : {2, 3, 5})
    for (int k0 : {1, 3, 5}) {
      const PathSpec spec = PathSpec::unit_square(t, k0);
      const PathGeometry g = geometry(staircase_path(t, k0), spec);
      ASSERT_EQ(g.x.size(), static_cast<std::size_t>(2 * t));
      for (int l = 1; l <= 2 * t - 2; ++l) {
        EXPECT_NEAR(g.x[l], (l + 1.0) / (2.0 * t), 1e-15);
        EXPECT_NEAR(g.y[l], l / (2.0 * t), 1e-15);
      }
    }
}

TEST(Geometry, Invariants) {
  const PathSpec spec{0.1, 0.7, 0.2, 0.95, 3, 4, 3};
  for (const auto& path : enumerate_refined_paths(spec)) {
    const PathGeometry g = geometry(path, spec);
    EXPECT_EQ(g.x.front(), spec.a1);
    EXPECT_EQ(g.y.front(), spec.b1);
    EXPECT_EQ(g.x.back(), spec.a2);
    EXPECT_EQ(g.y.back(), spec.b2);
    for (std::size_t l = 0; l < g.x.size(); ++l) {
      ASSERT_LE(g.a[l], g.c[l]);
      ASSERT_LE(g.b[l], g.d[l]);
      ASSERT_TRUE(g.a[l] <= g.x[l] && g.x[l] <= g.c[l]);
      ASSERT_TRUE(g.b[l] <= g.y[l] && g.y[l] <= g.d[l]);
      if (l > 0) {
        ASSERT_LE(g.x[l - 1], g.x[l]);
        ASSERT_LE(g.y[l - 1], g.y[l]);
      }
    }
  }
}

TEST(Geometry, EndpointGapsOnTheSquare) {
  for (int t : {2, 3})
    for (int k0 : {1, 2, 3}) {
      const PathSpec spec = PathSpec::unit_square(t, k0);
      for (const auto& path : enumerate_refined_paths(spec)) {
        const PathGeometry g = geometry(path, spec);
        for (std::size_t l = 0; l < g.x.size(); ++l) {
          ASSERT_LE(std::abs(g.c[l] - g.x[l]), 1.0 / (2.0 * k0 * t) + 1e-15);
          ASSERT_LE(std::abs(g.d[l] - g.y[l]), 1.0 / (2.0 * k0 * t) + 1e-15);
        }
      }
    }
}

TEST(Sandwich, IdentityOnTheStaircase) {
  const int n = 30;
  const auto id = Permutation::identity(n);
  const PathSpec spec = PathSpec::unit_square(3, 3);
  const Embedding e{0.0, static_cast<double>(n), static_cast<double>(n)};
  EXPECT_LE(lower_bound_lis(id, staircase_path(3, 3), spec, e), static_cast<std::size_t>(n));
  EXPECT_GE(upper_bound_lis(id, spec, e), static_cast<std::size_t>(n));
}

TEST(Sandwich, SizeOneIsExact) {
  const auto p = Permutation::identity(1);
  for (int k0 = 1; k0 <= 3; ++k0) {
    const PathSpec spec = PathSpec::unit_square(2, k0);
    const Embedding e{0.0, 1.0, 1.0};
    for (const auto& path : enumerate_refined_paths(spec)) EXPECT_EQ(lower_bound_lis(p, path, spec, e), 1u);
    EXPECT_EQ(upper_bound_lis(p, spec, e), 1u);
  }
}

TEST(Sandwich, DegenerateBoxGivesZero) {
  const auto p = Permutation::identity(5);
  const PathSpec spec = PathSpec::unit_square(2, 2);
  const Embedding e{2.1, 0.5, 0.5};  // (2.1, 2.6] holds no integer
  for (const auto& path : enumerate_refined_paths(spec)) EXPECT_EQ(lower_bound_lis(p, path, spec, e), 0u);
  EXPECT_EQ(upper_bound_lis(p, spec, e), 0u);
}

TEST(Sandwich, RandomSizeForty) {
  Rng rng(404);
  const PathSpec spec = PathSpec::unit_square(3, 2);
  const auto paths = enumerate_refined_paths(spec);
  for (int t = 0; t < 300; ++t) {
    const auto p = uniform_perm(40, rng);
    const Embedding e{0.0, 40.0, 40.0};
    const std::size_t exact = exact_lis(restrict_to(p, 0, 40, 0, 40));
    ASSERT_EQ(exact, lis(p));
    for (const auto& path : paths) ASSERT_LE(lower_bound_lis(p, path, spec, e), exact);
    ASSERT_GE(upper_bound_lis(p, spec, e), exact);
  }
}

TEST(Sandwich, ExhaustiveOverRandomInstances) {
  const PathsReport rep = verify_paths({400, 60, 3, 3, 2024});
  EXPECT_TRUE(rep.pass()) << rep.violations.front().what << " seed " << rep.violations.front().seed;
  EXPECT_GT(rep.paths_checked, 400u);
}

TEST(BlockBounds, Examples) {
  Rng rng(55);
  const auto p = uniform_perm(50, rng);
  const auto whole = block_bounds(p, {0.0, 50.0});
  EXPECT_EQ(whole.lower, lis(p));
  EXPECT_EQ(whole.upper, lis(p));
  const auto id = block_bounds(Permutation::identity(20), {0, 3, 7.5, 12, 20});
  EXPECT_EQ(id.lower, 20u);
  EXPECT_THROW(block_bounds(p, {0, 10, 10, 50}), std::invalid_argument);
  EXPECT_THROW(block_bounds(p, {0, 10, 40}), std::invalid_argument);
}

TEST(BlockBounds, SandwichBothCoverings) {
  Rng rng(56);
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + static_cast<int>(uniform_below(rng, 80));
    const auto p = uniform_perm(n, rng);
    std::vector<double> cuts{0.0};
    const int m = 1 + static_cast<int>(uniform_below(rng, 6));
    for (int s = 1; s < m; ++s) cuts.push_back(n * uniform_unit(rng));
    cuts.push_back(n);
    std::ranges::sort(cuts);
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    if (cuts.size() < 2) continue;
    for (BlockCovering c : {BlockCovering::LowerLeft, BlockCovering::UpperRight}) {
      const auto b = block_bounds(p, cuts, c);
      ASSERT_LE(b.lower, lis(p));
      ASSERT_GE(b.upper, lis(p));
    }
  }
}
