#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "skm/dataset.hpp"
#include "skm/error.hpp"

namespace {

namespace fs = std::filesystem;

skm::Dataset csv(const std::string& text) {
  std::istringstream in(text);
  return skm::parse_dense_csv(in);
}

skm::Dataset svm(const std::string& text, std::optional<std::size_t> dim = std::nullopt) {
  std::istringstream in(text);
  return skm::parse_svmlight(in, dim);
}

fs::path temp_file(const std::string& name) {
  auto dir = fs::temp_directory_path() / "skm-test-dataset";
  fs::create_directories(dir);
  return dir / name;
}

TEST(DenseCsv, ParsesRowsAndColumns) {
  const auto ds = csv("0,0\n1,1\n");
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.dim(), 2u);
  EXPECT_FALSE(ds.is_sparse());
  EXPECT_EQ(ds.row_vector(1), (std::vector<double>{1.0, 1.0}));
}

TEST(DenseCsv, SingleColumn) {
  const auto ds = csv("1\n2\n3\n");
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.dim(), 1u);
  EXPECT_EQ(ds.row_vector(2)[0], 3.0);
}

TEST(DenseCsv, RaggedRowReportsLine) {
  try {
    csv("1,2\n3\n");
    FAIL() << "expected a parse error";
  } catch (const skm::ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("ragged row 2"), std::string::npos);
  }
}

TEST(DenseCsv, RejectsNonNumericAndEmpty) {
  EXPECT_THROW(csv("1,abc\n"), skm::ParseError);
  EXPECT_THROW(csv(""), skm::Error);
  EXPECT_THROW(csv("1,nan\n"), skm::Error);
  EXPECT_THROW(skm::load_dense_csv("/nonexistent/file.csv"), skm::Error);
}

TEST(Svmlight, OneBasedIndicesBecomeZeroBased) {
  const auto ds = svm("0 1:1.0 3:2.0\n");
  EXPECT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.dim(), 3u);
  EXPECT_TRUE(ds.is_sparse());
  std::vector<std::pair<std::size_t, double>> nz;
  ds.for_each_nonzero(0, [&](std::size_t j, double v) { nz.emplace_back(j, v); });
  EXPECT_EQ(nz, (std::vector<std::pair<std::size_t, double>>{{0, 1.0}, {2, 2.0}}));
}

TEST(Svmlight, DimensionIsMaxIndexUnlessOverridden) {
  const auto ds = svm("0 2:5\n1 1:1\n");
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.dim(), 2u);
  EXPECT_EQ(svm("0 2:5\n", 7).dim(), 7u);
  EXPECT_THROW(svm("0 5:1\n", 3), skm::Error);
}

TEST(Svmlight, RejectsBadIndices) {
  EXPECT_THROW(svm("0 3:1 2:1\n"), skm::ParseError);
  EXPECT_THROW(svm("0 2:1 2:1\n"), skm::ParseError);
  EXPECT_THROW(svm("0 0:1\n"), skm::ParseError);
  EXPECT_THROW(svm("0 1:x\n"), skm::ParseError);
}

TEST(Dataset, CachedNormsMatchRecomputation) {
  const auto ds = skm::generate_gauss(skm::separated_mixture(3, 4, 10.0, 1.0, 5), 50).data;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto x = ds.row_vector(i);
    double s = 0.0;
    for (double v : x) s += v * v;
    EXPECT_LE(oracle::rel_diff(ds.squared_norm(i), s), 1e-12);
  }
}

TEST(Dataset, SparseAndDenseAgree) {
  const auto dense = skm::generate_gauss(skm::separated_mixture(2, 5, 10.0, 1.0, 3), 40).data;
  const auto sparse = dense.to_sparse();
  ASSERT_TRUE(sparse.is_sparse());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    EXPECT_LE(oracle::rel_diff(dense.squared_norm(i), sparse.squared_norm(i)), 1e-12);
    EXPECT_EQ(dense.row_vector(i), sparse.row_vector(i));
  }
}

TEST(Dataset, RejectsNonFiniteAndBadSparse) {
  EXPECT_THROW(skm::Dataset::from_dense(1, 1, {INFINITY}), skm::Error);
  EXPECT_THROW(skm::Dataset::from_dense(0, 1, {}), skm::Error);
  EXPECT_THROW(skm::Dataset::from_sparse(3, {0, 2}, {2, 1}, {1.0, 1.0}), skm::Error);
  EXPECT_THROW(skm::Dataset::from_sparse(3, {0, 1}, {3}, {1.0}), skm::Error);
}

TEST(Dataset, CsvRoundTripIsLossless) {
  const auto ds = skm::generate_gauss(skm::separated_mixture(3, 3, 7.0, 1.3, 11), 60).data;
  const auto path = temp_file("round.csv");
  skm::write_dense_csv(ds, path.string());
  const auto back = skm::load_dense_csv(path.string());
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(back.row_vector(i), ds.row_vector(i));
}

TEST(Dataset, SvmlightRoundTripIsLossless) {
  const auto ds = svm("1 1:0.1 4:-3.25e-7\n0 2:1e300\n0 3:2\n");
  const auto path = temp_file("round.svm");
  skm::write_svmlight(ds, path.string());
  const auto back = skm::load_svmlight(path.string(), ds.dim());
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(back.row_vector(i), ds.row_vector(i));
}

TEST(Gauss, ZeroSigmaGivesPointMasses) {
  skm::MixtureSpec spec;
  spec.k = 1;
  spec.d = 2;
  spec.weights = {1.0};
  spec.means = {0.0, 0.0};
  spec.sigmas = {0.0};
  const auto s = skm::generate_gauss(spec, 5);
  ASSERT_EQ(s.data.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(s.data.row_vector(i), (std::vector<double>{0.0, 0.0}));
}

TEST(Gauss, DeterministicGivenSeed) {
  const auto spec = skm::separated_mixture(3, 4, 10.0, 1.0, 99);
  const auto a = skm::generate_gauss(spec, 200);
  const auto b = skm::generate_gauss(spec, 200);
  EXPECT_EQ(a.labels, b.labels);
  for (std::size_t i = 0; i < 200; ++i) EXPECT_EQ(a.data.row_vector(i), b.data.row_vector(i));
  auto other = spec;
  other.seed = 100;
  EXPECT_NE(skm::generate_gauss(other, 200).data.row_vector(0), a.data.row_vector(0));
}

TEST(Gauss, PointsStayNearTheirComponent) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    skm::MixtureSpec spec;
    spec.k = 2;
    spec.d = 3;
    spec.weights = {0.5, 0.5};
    spec.means = {100.0, 0.0, 0.0, -100.0, 0.0, 0.0};
    spec.sigmas = {1.0, 1.0};
    spec.seed = seed;
    const auto s = skm::generate_gauss(spec, 1000);
    for (std::size_t i = 0; i < 1000; ++i) {
      const auto x = s.data.row_vector(i);
      const auto mu = spec.mean(s.labels.labels[i]);
      EXPECT_LT(std::sqrt(oracle::sqdist(x, {mu.begin(), mu.end()})), 50.0);
    }
  }
}

TEST(Gauss, RejectsInvalidSpecs) {
  skm::MixtureSpec spec;
  spec.k = 2;
  spec.d = 1;
  spec.weights = {0.5, 0.6};
  spec.means = {0.0, 1.0};
  spec.sigmas = {1.0, 1.0};
  EXPECT_THROW(skm::generate_gauss(spec, 10), skm::InvalidArgument);
  spec.weights = {0.5, 0.5};
  spec.sigmas = {1.0, -1.0};
  EXPECT_THROW(skm::generate_gauss(spec, 10), skm::InvalidArgument);
  spec.sigmas = {1.0, 1.0};
  EXPECT_THROW(skm::generate_gauss(spec, 1), skm::InvalidArgument);
}

}  // namespace
