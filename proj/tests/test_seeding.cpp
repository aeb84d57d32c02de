#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "skm/seeding.hpp"

namespace {

using skm::Dataset;

TEST(RandomSeeds, KEqualsNIsPermutation) {
  const auto ds = Dataset::from_rows({{0}, {1}, {2}, {3}, {4}});
  skm::Rng rng(1);
  const auto c = skm::random_seeds(rng, ds, 5);
  std::multiset<double> got;
  for (std::size_t r = 0; r < 5; ++r) got.insert(c.row_vector(r)[0]);
  EXPECT_EQ(got, (std::multiset<double>{0, 1, 2, 3, 4}));
  EXPECT_EQ(c.active_count(), 5u);
}

TEST(RandomSeeds, SingleSeedIsUniform) {
  const auto ds = Dataset::from_rows({{0}, {1}, {2}, {3}});
  skm::Rng rng(2);
  std::vector<int> hits(4, 0);
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) ++hits[static_cast<std::size_t>(skm::random_seeds(rng, ds, 1).row_vector(0)[0])];
  for (int h : hits) EXPECT_NEAR(h / double(trials), 0.25, 0.02);
}

TEST(RandomSeeds, DeterministicAndValidated) {
  const auto ds = Dataset::from_rows({{0}, {1}, {2}, {3}});
  skm::Rng a(3), b(3);
  EXPECT_EQ(skm::random_seeds(a, ds, 2), skm::random_seeds(b, ds, 2));
  EXPECT_THROW(skm::random_seeds(a, ds, 5), skm::InvalidArgument);
}

TEST(SingleLinkage, Examples) {
  const auto pts = Dataset::from_rows({{0}, {0.1}, {10}, {10.2}});
  EXPECT_EQ(skm::single_linkage_components(pts, 4).components,
            (std::vector<std::vector<std::size_t>>{{0}, {1}, {2}, {3}}));
  EXPECT_EQ(skm::single_linkage_components(pts, 2).components,
            (std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}}));
  EXPECT_EQ(skm::single_linkage_components(pts, 1).components, (std::vector<std::vector<std::size_t>>{{0, 1, 2, 3}}));
  EXPECT_THROW(skm::single_linkage_components(pts, 5), skm::InvalidArgument);
}

TEST(SingleLinkage, PartitionAndMonotoneMerges) {
  skm::Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<double>> rows(20, std::vector<double>(2));
    for (auto& r : rows) {
      for (auto& v : r) v = u(rng);
    }
    const auto res = skm::single_linkage_components(Dataset::from_rows(rows), 3);
    ASSERT_EQ(res.components.size(), 3u);
    std::vector<std::size_t> all;
    for (const auto& c : res.components) all.insert(all.end(), c.begin(), c.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
    for (std::size_t i = 1; i < res.merge_distances.size(); ++i) {
      EXPECT_GE(res.merge_distances[i], res.merge_distances[i - 1]);
    }
  }
}

// Single linkage down to k components equals the graph components after
// dropping the k-1 largest edges of a minimum spanning tree; check against a
// threshold-connectivity oracle.
TEST(SingleLinkage, AgreesWithThresholdConnectivity) {
  skm::Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 12;
    std::vector<std::vector<double>> rows(m, std::vector<double>(2));
    for (auto& r : rows) {
      for (auto& v : r) v = u(rng);
    }
    const auto res = skm::single_linkage_components(Dataset::from_rows(rows), 4);
    const double thr = res.merge_distances.back();
    // Union points whose distance is at most the last merge distance.
    std::vector<std::size_t> parent(m);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x];
      return x;
    };
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        if (std::sqrt(oracle::sqdist(rows[i], rows[j])) <= thr) parent[find(i)] = find(j);
      }
    }
    for (const auto& comp : res.components) {
      for (std::size_t i : comp) EXPECT_EQ(find(i), find(comp.front()));
    }
    std::set<std::size_t> roots;
    for (std::size_t i = 0; i < m; ++i) roots.insert(find(i));
    EXPECT_EQ(roots.size(), 4u);
  }
}

TEST(Buckshot, ComponentMeans) {
  const auto pts = Dataset::from_rows({{0}, {0.1}, {10}, {10.2}});
  const auto c = skm::component_means(pts, skm::single_linkage_components(pts, 2));
  EXPECT_DOUBLE_EQ(c.row_vector(0)[0], 0.05);
  EXPECT_DOUBLE_EQ(c.row_vector(1)[0], 10.1);
}

TEST(Buckshot, SingletonDrawsAreTheSampledPoints) {
  const auto ds = Dataset::from_rows({{0}, {100}, {200}});
  // With m0 = k every sample is its own component.
  skm::Rng rng(6);
  const auto c = skm::buckshot(rng, ds, 3, 3);
  for (std::size_t r = 0; r < 3; ++r) {
    const double v = c.row_vector(r)[0];
    EXPECT_TRUE(v == 0 || v == 100 || v == 200);
  }
  EXPECT_THROW(skm::buckshot(rng, ds, 3, 2), skm::InvalidArgument);
}

TEST(Buckshot, DeterministicGivenSeed) {
  const auto ds = skm::generate_gauss(skm::separated_mixture(3, 3, 50.0, 1.0, 1), 300).data;
  const skm::SeedConfig cfg{skm::SeedMethod::buckshot, 3, 30, 42};
  EXPECT_EQ(skm::make_seeds(ds, cfg), skm::make_seeds(ds, cfg));
}

}  // namespace
