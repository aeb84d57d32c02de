#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "skm/geometry.hpp"
#include "skm/rng.hpp"

namespace {

using skm::CentroidSet;
using skm::Clustering;
using skm::Dataset;

Dataset line4() { return Dataset::from_rows({{0}, {1}, {4}, {5}}); }
CentroidSet cs(std::vector<std::vector<double>> rows) { return CentroidSet::from_rows(rows); }

Dataset random_dataset(skm::Rng& rng, std::size_t n, std::size_t d) {
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::vector<double> v(n * d);
  for (auto& x : v) x = u(rng);
  return Dataset::from_dense(n, d, std::move(v));
}

CentroidSet random_centroids(skm::Rng& rng, std::size_t k, std::size_t d) {
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::vector<std::vector<double>> rows(k, std::vector<double>(d));
  for (auto& r : rows) {
    for (auto& x : r) x = u(rng);
  }
  return CentroidSet::from_rows(rows);
}

std::vector<oracle::Point> centre_rows(const CentroidSet& c) {
  std::vector<oracle::Point> out;
  for (std::size_t r = 0; r < c.size(); ++r) out.push_back(c.row_vector(r));
  return out;
}

TEST(Assign, SingleCentroid) {
  const auto a = skm::assign(Dataset::from_rows({{3, 4}}), cs({{3, 4}}));
  EXPECT_EQ(a.labels, (std::vector<std::size_t>{0}));
  EXPECT_EQ(a.sizes, (std::vector<std::size_t>{1}));
}

TEST(Assign, LineFixture) {
  const auto a = skm::assign(line4(), cs({{0}, {5}}));
  EXPECT_EQ(a.labels, (std::vector<std::size_t>{0, 0, 1, 1}));
  EXPECT_EQ(a.sizes, (std::vector<std::size_t>{2, 2}));
}

TEST(Assign, TiesGoToLowestIndex) {
  EXPECT_EQ(skm::assign(Dataset::from_rows({{2.5}}), cs({{0}, {5}})).labels[0], 0u);
  EXPECT_EQ(skm::assign(Dataset::from_rows({{2.5}}), cs({{5}, {0}})).labels[0], 0u);
}

TEST(Assign, InactiveCentroidsGetNothing) {
  auto c = CentroidSet::from_rows({{0}, {1}}, {true, false});
  const auto a = skm::assign(Dataset::from_rows({{1}, {1.1}}), c);
  EXPECT_EQ(a.sizes, (std::vector<std::size_t>{2, 0}));
}

TEST(Assign, DimensionMismatchThrows) {
  EXPECT_THROW(skm::assign(line4(), cs({{0, 0}})), skm::DimensionMismatch);
}

TEST(Assign, MatchesBruteForceNearest) {
  skm::Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ds = random_dataset(rng, 30, 3);
    const auto c = random_centroids(rng, 4, 3);
    const auto a = skm::assign(ds, c);
    const auto x = oracle::rows(ds);
    const auto centres = centre_rows(c);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(a.labels[i], oracle::nearest(x[i], centres));
  }
}

TEST(Means, IdenticalPoints) {
  const auto ds = Dataset::from_rows({{2, 3}, {2, 3}, {2, 3}});
  const auto a = Clustering::from_labels({0, 0, 0}, 1);
  EXPECT_EQ(skm::means(ds, a, cs({{0, 0}})).row_vector(0), (std::vector<double>{2, 3}));
}

TEST(Means, LineFixture) {
  const auto m = skm::means(line4(), Clustering::from_labels({0, 0, 1, 1}, 2), cs({{0}, {5}}));
  EXPECT_EQ(m.row_vector(0)[0], 0.5);
  EXPECT_EQ(m.row_vector(1)[0], 4.5);
  EXPECT_TRUE(m.active(0) && m.active(1));
}

TEST(Means, EmptyClusterIsFrozenAndInactive) {
  const auto ds = Dataset::from_rows({{0, 0}, {1, 1}});
  const auto m = skm::means(ds, Clustering::from_labels({0, 0}, 2), cs({{9, 9}, {7, 7}}));
  EXPECT_EQ(m.row_vector(1), (std::vector<double>{7, 7}));
  EXPECT_FALSE(m.active(1));
  EXPECT_EQ(m.row_vector(0), (std::vector<double>{0.5, 0.5}));
}

TEST(Cost, LineFixture) {
  EXPECT_EQ(skm::cost(line4(), cs({{0}, {5}})).total, 2.0);
  EXPECT_EQ(skm::cost(line4(), cs({{0.5}, {4.5}})).total, 1.0);
  EXPECT_EQ(skm::cost(line4(), cs({{0}, {1}, {4}, {5}})).total, 0.0);
}

TEST(Cost, PerClusterSumsToTotal) {
  skm::Rng rng(2);
  const auto ds = random_dataset(rng, 40, 2);
  const auto rep = skm::cost(ds, random_centroids(rng, 3, 2));
  double s = 0.0;
  for (double v : rep.per_cluster) {
    EXPECT_GE(v, 0.0);
    s += v;
  }
  EXPECT_LE(oracle::rel_diff(s, rep.total), 1e-12);
}

TEST(CostOfPair, Examples) {
  const auto c = cs({{0}, {5}});
  EXPECT_EQ(skm::cost_of_pair(line4(), c, skm::assign(line4(), c)).total, skm::cost(line4(), c).total);
  EXPECT_EQ(skm::cost_of_pair(Dataset::from_rows({{0}, {1}}), cs({{0}}), Clustering::from_labels({0, 0}, 1)).total, 1.0);
  // Swapped labels: 5^2 + 4^2 + 4^2 + 5^2.
  const double swapped = skm::cost_of_pair(line4(), c, Clustering::from_labels({1, 1, 0, 0}, 2)).total;
  EXPECT_EQ(swapped, oracle::cost_of_pair(oracle::rows(line4()), {{0}, {5}}, {1, 1, 0, 0}));
  EXPECT_EQ(swapped, 82.0);
}

TEST(CostOfPair, LabelOutOfRangeThrows) {
  Clustering bad;
  bad.k = 3;
  bad.labels = {0, 0, 2, 2};
  bad.sizes = {2, 0, 2};
  EXPECT_THROW(skm::cost_of_pair(line4(), cs({{0}, {5}}), bad), skm::Error);
}

TEST(CostOfClustering, Examples) {
  EXPECT_EQ(skm::cost_of_clustering(line4(), Clustering::from_labels({0, 1, 2, 3}, 4)).total, 0.0);
  EXPECT_EQ(skm::cost_of_clustering(line4(), Clustering::from_labels({0, 0, 1, 1}, 2)).total, 1.0);
  EXPECT_EQ(skm::cost_of_clustering(line4(), Clustering::from_labels({0, 0, 0, 0}, 1)).total, 17.0);
  EXPECT_EQ(skm::cost_of_clustering(line4(), Clustering::from_labels({0, 0, 0, 0}, 3)).total, 17.0);
}

TEST(Lloyd, Examples) {
  const auto next = skm::lloyd_step(line4(), cs({{0}, {5}}));
  EXPECT_EQ(next, cs({{0.5}, {4.5}}));
  EXPECT_EQ(skm::lloyd_step(line4(), next), next);
  const auto on_points = cs({{0}, {1}, {4}, {5}});
  EXPECT_EQ(skm::lloyd_step(line4(), on_points), on_points);
}

TEST(RunBatch, LineFixtureTrace) {
  const auto res = skm::run_batch(line4(), cs({{0}, {5}}), 10);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 2u);
  EXPECT_EQ(res.centroids, cs({{0.5}, {4.5}}));
  EXPECT_EQ(res.trace.phis(), (std::vector<double>{2.0, 1.0}));
}

TEST(RunBatch, StationaryStartStopsImmediately) {
  const auto res = skm::run_batch(line4(), cs({{0.5}, {4.5}}), 10);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 1u);
  EXPECT_EQ(res.trace.records.size(), 1u);
}

TEST(RunBatch, BudgetExhaustion) {
  const auto res = skm::run_batch(line4(), cs({{0}, {5}}), 1);
  EXPECT_FALSE(res.converged);
  EXPECT_EQ(res.iterations, 1u);
  EXPECT_THROW(skm::run_batch(line4(), cs({{0}, {5}}), 0), skm::InvalidArgument);
}

TEST(Properties, CentroidalDecomposition) {
  skm::Rng rng(3);
  std::uniform_int_distribution<std::size_t> size(1, 20);
  for (int trial = 0; trial < 200; ++trial) {
    const auto ds = random_dataset(rng, size(rng), 3);
    const auto c = random_centroids(rng, 1, 3);
    const auto y = oracle::rows(ds);
    const auto m = oracle::mean(y);
    const double lhs = oracle::cost(y, {c.row_vector(0)});
    const double rhs = oracle::cost(y, {m}) + static_cast<double>(y.size()) * oracle::sqdist(m, c.row_vector(0));
    EXPECT_LE(oracle::rel_diff(skm::cost(ds, c).total, rhs), 1e-9);
    EXPECT_LE(oracle::rel_diff(lhs, rhs), 1e-9);
  }
}

TEST(Properties, VoronoiOptimalityExhaustive) {
  skm::Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 7, k = 1 + trial % 3;
    const auto ds = random_dataset(rng, n, 2);
    const auto c = random_centroids(rng, k, 2);
    const double phi = skm::cost(ds, c).total;
    std::vector<std::size_t> labels(n, 0);
    while (true) {
      const double v = skm::cost_of_pair(ds, c, Clustering::from_labels(labels, k)).total;
      EXPECT_GE(v, phi - skm::cost_slack(phi));
      std::size_t i = 0;
      while (i < n && ++labels[i] == k) labels[i++] = 0;
      if (i == n) break;
    }
  }
}

TEST(Properties, MeanOptimality) {
  skm::Rng rng(5);
  const auto ds = random_dataset(rng, 12, 2);
  const auto a = Clustering::from_labels({0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 0, 1}, 3);
  const double best = skm::cost_of_clustering(ds, a).total;
  EXPECT_LE(oracle::rel_diff(best, oracle::cost_of_clustering(oracle::rows(ds), a.labels, 3)), 1e-12);
  for (int trial = 0; trial < 100; ++trial) {
    EXPECT_GE(skm::cost_of_pair(ds, random_centroids(rng, 3, 2), a).total, best - skm::cost_slack(best));
  }
}

TEST(Properties, BatchMonotone) {
  skm::Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ds = random_dataset(rng, 40, 2);
    const auto res = skm::run_batch(ds, random_centroids(rng, 4, 2), 50);
    const auto phis = res.trace.phis();
    for (std::size_t i = 1; i < phis.size(); ++i) EXPECT_LE(phis[i], phis[i - 1] + skm::cost_slack(phis[i - 1]));
  }
}

TEST(Properties, CostDecompositionIdentity) {
  skm::Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ds = random_dataset(rng, 30, 3);
    const auto c = random_centroids(rng, 4, 3);
    const auto a = skm::assign(ds, c);
    const auto m = skm::means(ds, a, c);
    double rhs = 0.0;
    for (std::size_t r = 0; r < c.size(); ++r) {
      rhs += static_cast<double>(a.sizes[r]) * oracle::sqdist(c.row_vector(r), m.row_vector(r));
    }
    const double lhs = skm::cost(ds, c).total - skm::cost_of_clustering(ds, a).total;
    EXPECT_LE(std::abs(lhs - rhs), 1e-9 * (1.0 + skm::cost(ds, c).total));
  }
}

TEST(Properties, SparseDenseAgreement) {
  skm::Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto dense = random_dataset(rng, 25, 4);
    const auto sparse = dense.to_sparse();
    const auto c = random_centroids(rng, 3, 4);
    EXPECT_EQ(skm::assign(dense, c).labels, skm::assign(sparse, c).labels);
    EXPECT_LE(oracle::rel_diff(skm::cost(dense, c).total, skm::cost(sparse, c).total), 1e-9);
  }
}

TEST(CentroidIo, RoundTripWithMask) {
  const auto dir = std::filesystem::temp_directory_path() / "skm-test-geometry";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "c.csv").string();
  const auto c = CentroidSet::from_rows({{0.1, 1e-300}, {-3, 7}, {2, 2}}, {true, false, true});
  skm::write_centroids(c, path);
  EXPECT_EQ(skm::read_centroids(path), c);
  std::filesystem::remove(path + ".active");
  const auto all_active = skm::read_centroids(path);
  EXPECT_EQ(all_active.active_count(), 3u);
}

TEST(CentroidSet, ValidationAndNorms) {
  EXPECT_THROW(CentroidSet::from_rows({{0}, {1}}, {false, false}).validate(), skm::InvalidArgument);
  const auto c = cs({{3, 4}});
  EXPECT_EQ(c.squared_norm(0), 25.0);
}

}  // namespace
