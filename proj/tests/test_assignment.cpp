#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "skm/assignment.hpp"
#include "skm/rng.hpp"

namespace {

TEST(Assignment, MatchesBruteForceOnRandomSquareInstances) {
  skm::Rng rng(11);
  std::uniform_int_distribution<std::size_t> size(1, 6);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = size(rng);
    std::vector<double> cost(k * k);
    for (auto& c : cost) c = u(rng);
    const auto got = skm::solve_assignment(k, k, cost);
    const auto want = oracle::brute_assignment(k, k, cost);
    EXPECT_EQ(got.value, want.value);
    EXPECT_EQ(got.row_to_col, want.row_to_col);
  }
}

TEST(Assignment, RectangularInstances) {
  skm::Rng rng(12);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 1 + trial % 4, cols = rows + trial % 3;
    std::vector<double> cost(rows * cols);
    for (auto& c : cost) c = u(rng);
    const auto got = skm::solve_assignment(rows, cols, cost);
    const auto want = oracle::brute_assignment(rows, cols, cost);
    EXPECT_EQ(got.value, want.value);
    EXPECT_EQ(got.row_to_col, want.row_to_col);
  }
}

TEST(Assignment, TiesResolveLexicographically) {
  // Integer costs with many exact ties.
  skm::Rng rng(13);
  std::uniform_int_distribution<int> u(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + trial % 5;
    std::vector<double> cost(k * k);
    for (auto& c : cost) c = u(rng);
    const auto got = skm::solve_assignment(k, k, cost);
    const auto want = oracle::brute_assignment(k, k, cost);
    EXPECT_EQ(got.value, want.value);
    EXPECT_EQ(got.row_to_col, want.row_to_col);
  }
  const std::vector<double> zeros(9, 0.0);
  EXPECT_EQ(skm::solve_assignment(3, 3, zeros).row_to_col, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Assignment, RejectsBadShapes) {
  const std::vector<double> c(6, 1.0);
  EXPECT_THROW(skm::solve_assignment(3, 2, c), skm::InvalidArgument);
  EXPECT_THROW(skm::solve_assignment(2, 2, c), skm::InvalidArgument);
  EXPECT_TRUE(skm::solve_assignment(0, 0, {}).row_to_col.empty());
}

}  // namespace
