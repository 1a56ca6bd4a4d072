#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "pdprox/error.hpp"
#include "pdprox/numerics.hpp"

using namespace pdprox;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  auto p = std::filesystem::temp_directory_path() / ("pdprox_test_" + name);
  std::ofstream(p) << content;
  return p;
}

}  // namespace

TEST(VectorOps, DotNormsAxpy) {
  Vector a{1, -2, 3};
  Vector b{4, 5, -6};
  EXPECT_DOUBLE_EQ(dot(a, b), 4 - 10 - 18);
  EXPECT_DOUBLE_EQ(norm2(Vector{3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(norm1(a), 6.0);
  EXPECT_DOUBLE_EQ(norm_inf(a), 3.0);
  axpy(2.0, a, b);
  EXPECT_EQ(b, (Vector{6, 1, 0}));
}

TEST(VectorOps, Norm2AvoidsOverflow) {
  Vector big{1e200, 1e200};
  EXPECT_NEAR(norm2(big) / 1e200, std::sqrt(2.0), 1e-14);
}

TEST(SparseMatrix, RejectsNonIncreasingColumns) {
  EXPECT_THROW(SparseMatrix(1, 3, {0, 2}, {2, 1}, {1.0, 1.0}), ContractViolation);
  EXPECT_THROW(SparseMatrix(1, 3, {0, 2}, {1, 1}, {1.0, 1.0}), ContractViolation);
  EXPECT_THROW(SparseMatrix(1, 2, {0, 1}, {2}, {1.0}), ContractViolation);
}

TEST(SparseMatrix, IdentityApply) {
  auto id = SparseMatrix::identity(3);
  EXPECT_EQ(pdprox::apply(id, Vector{1, 2, 3}), (Vector{1, 2, 3}));
}

TEST(SparseMatrix, PermutationSwaps) {
  auto m = SparseMatrix::from_dense(DenseMatrix::from_rows({{0, 1}, {1, 0}}));
  EXPECT_EQ(pdprox::apply(m, Vector{7, -3}), (Vector{-3, 7}));
}

TEST(SparseMatrix, ApplyMatchesDenseProduct) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    auto m = oracle::random_sparse(rng, 5, 4, 0.5);
    auto x = oracle::gaussian_vector(rng, 4);
    auto ref = oracle::dense_product(m.to_dense(), x);
    auto got = pdprox::apply(m, x);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_LE(std::abs(got[i] - ref[i]), 1e-14);
  }
}

TEST(SparseMatrix, AdjointIdentity) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    auto m = oracle::random_sparse(rng, 7, 9, 0.4);
    auto x = oracle::gaussian_vector(rng, 9);
    auto v = oracle::gaussian_vector(rng, 7);
    const double lhs = dot(pdprox::apply(m, x), v);
    const double rhs = dot(x, pdprox::apply_adjoint(m, v));
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(SparseMatrix, DimensionMismatchThrows) {
  auto id = SparseMatrix::identity(3);
  EXPECT_THROW(pdprox::apply(id, Vector{1, 2}), ContractViolation);
  EXPECT_THROW(pdprox::apply_adjoint(id, Vector{1, 2, 3, 4}), ContractViolation);
}

TEST(Libsvm, ParsesLineWithGap) {
  auto p = temp_file("gap.svm", "+1 1:0.5 3:2.0\n");
  auto ds = read_libsvm(p);
  ASSERT_EQ(ds.size(), 1u);
  ASSERT_EQ(ds.dim(), 3u);
  EXPECT_EQ(ds.labels[0], 1.0);
  auto row = ds.features.to_dense();
  EXPECT_EQ(row(0, 0), 0.5);
  EXPECT_EQ(row(0, 1), 0.0);
  EXPECT_EQ(row(0, 2), 2.0);
}

TEST(Libsvm, EmptyFeatureListIsZeroRow) {
  auto p = temp_file("empty.svm", "-1\n+1 2:1\n");
  auto ds = read_libsvm(p);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.labels[0], -1.0);
  EXPECT_EQ(ds.features.row_indices(0).size(), 0u);
}

TEST(Libsvm, ThreeLinesMaxIndexSeven) {
  const std::string text = "1 1:1 7:2\n-1 2:0.25\n1 3:-1 5:4 6:1\n";
  auto ds = read_libsvm(temp_file("three.svm", text));
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.dim(), 7u);
  // Line-by-line reference: every idx:val pair lands at [line][idx-1].
  auto dense = ds.features.to_dense();
  EXPECT_EQ(dense(0, 6), 2.0);
  EXPECT_EQ(dense(1, 1), 0.25);
  EXPECT_EQ(dense(2, 4), 4.0);
  EXPECT_EQ(ds.features.nnz(), 6u);
}

TEST(Libsvm, ExpectedDimension) {
  auto p = temp_file("dim.svm", "1 2:1\n");
  EXPECT_EQ(read_libsvm(p, 10).dim(), 10u);
  EXPECT_THROW(read_libsvm(p, 1), ParseError);
}

TEST(Libsvm, MalformedLineReportsLineNumber) {
  auto p = temp_file("bad.svm", "1 1:1\n1 2:x\n");
  try {
    read_libsvm(p);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Libsvm, NonAscendingIndicesRejected) {
  EXPECT_THROW(read_libsvm(temp_file("desc.svm", "1 3:1 2:1\n")), ParseError);
  EXPECT_THROW(read_libsvm(temp_file("dup.svm", "1 2:1 2:1\n")), ParseError);
  EXPECT_THROW(read_libsvm(temp_file("zero.svm", "1 0:1\n")), ParseError);
}

TEST(Libsvm, WriteReadRoundTrip) {
  std::mt19937_64 rng(3);
  Dataset ds;
  ds.features = oracle::random_sparse(rng, 6, 5, 0.6);
  ds.labels = {1, -1, 1, 1, -1, -1};
  auto p = std::filesystem::temp_directory_path() / "pdprox_test_rt.svm";
  write_libsvm(ds, p);
  auto back = read_libsvm(p, 5);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.features.to_dense().data, ds.features.to_dense().data);
}

TEST(DataRadius, UnitVectors) {
  Dataset ds;
  ds.features = SparseMatrix::from_dense(DenseMatrix::from_rows({{1, 0}, {0, 1}}));
  ds.labels = {1, -1};
  EXPECT_DOUBLE_EQ(data_radius(ds), 1.0);
}

TEST(DataRadius, ThreeFourFive) {
  Dataset ds;
  ds.features = SparseMatrix::from_dense(DenseMatrix::from_rows({{3, 4}}));
  ds.labels = {1};
  EXPECT_DOUBLE_EQ(data_radius(ds), 5.0);
}

TEST(DataRadius, MatchesBruteForceScan) {
  std::mt19937_64 rng(4);
  Dataset ds;
  auto dense = oracle::gaussian_matrix(rng, 100, 6);
  ds.features = SparseMatrix::from_dense(dense);
  ds.labels.assign(100, 1.0);
  double best = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 6; ++j) s += dense(i, j) * dense(i, j);
    best = std::max(best, std::sqrt(s));
  }
  EXPECT_NEAR(data_radius(ds), best, 1e-13);
}

TEST(DatasetValidate, RejectsBadShapes) {
  Dataset ds;
  ds.features = SparseMatrix::identity(2);
  ds.labels = {1};
  EXPECT_THROW(validate(ds), ContractViolation);
  ds.labels = {1, std::nan("")};
  EXPECT_THROW(validate(ds), ContractViolation);
  ds.labels = {1, -1};
  EXPECT_NO_THROW(validate(ds));
}

namespace {

void expect_orthonormal_columns(const DenseMatrix& m) {
  for (std::size_t a = 0; a < m.cols; ++a) {
    for (std::size_t b = 0; b < m.cols; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < m.rows; ++i) s += m(i, a) * m(i, b);
      EXPECT_NEAR(s, a == b ? 1.0 : 0.0, 1e-10);
    }
  }
}

}  // namespace

TEST(ThinSvd, Diagonal) {
  auto s = thin_svd(DenseMatrix::from_rows({{3, 0}, {0, 1}}));
  ASSERT_EQ(s.sigma.size(), 2u);
  EXPECT_NEAR(s.sigma[0], 3.0, 1e-14);
  EXPECT_NEAR(s.sigma[1], 1.0, 1e-14);
  EXPECT_NEAR(std::abs(s.u(0, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(s.v(1, 1)), 1.0, 1e-14);
}

TEST(ThinSvd, ZeroMatrix) {
  auto s = thin_svd(DenseMatrix(3, 2));
  for (double x : s.sigma) EXPECT_EQ(x, 0.0);
  expect_orthonormal_columns(s.u);
  expect_orthonormal_columns(s.v);
}

TEST(ThinSvd, RandomReconstructionAndOrthonormality) {
  std::mt19937_64 rng(5);
  for (auto [r, c] : {std::pair{6, 4}, std::pair{4, 6}, std::pair{5, 5}, std::pair{1, 3}}) {
    auto m = oracle::gaussian_matrix(rng, r, c);
    auto s = thin_svd(m);
    auto back = reconstruct(s);
    double err = 0.0;
    for (std::size_t i = 0; i < m.data.size(); ++i) err += (back.data[i] - m.data[i]) * (back.data[i] - m.data[i]);
    EXPECT_LE(std::sqrt(err), 1e-8 * std::max(1.0, m.frobenius_norm()));
    expect_orthonormal_columns(s.u);
    expect_orthonormal_columns(s.v);
    EXPECT_TRUE(std::is_sorted(s.sigma.rbegin(), s.sigma.rend()));
    auto ref = oracle::singular_values(m);
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(s.sigma[k], ref[k], 1e-12 * std::max(1.0, ref[0]));
  }
}

TEST(ThinSvd, RankDeficientKeepsOrthonormalBasis) {
  auto m = DenseMatrix::from_rows({{1, 2, 3}, {2, 4, 6}, {0, 0, 0}, {1, 2, 3}});
  auto s = thin_svd(m);
  EXPECT_NEAR(s.sigma[1], 0.0, 1e-12);
  expect_orthonormal_columns(s.u);
  expect_orthonormal_columns(s.v);
}

TEST(ThinSvd, PermutationInvariantSingularValues) {
  std::mt19937_64 rng(6);
  auto m = oracle::gaussian_matrix(rng, 5, 3);
  DenseMatrix p(5, 3);
  const std::size_t rows[] = {3, 0, 4, 1, 2};
  const std::size_t cols[] = {2, 0, 1};
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) p(i, j) = m(rows[i], cols[j]);
  auto a = thin_svd(m).sigma;
  auto b = thin_svd(p).sigma;
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

namespace {

LinearOperator dense_op(const DenseMatrix& m) {
  auto sm = std::make_shared<SparseMatrix>(SparseMatrix::from_dense(m));
  return {m.rows, m.cols, [sm](std::span<const double> x) { return pdprox::apply(*sm, x); },
          [sm](std::span<const double> v) { return pdprox::apply_adjoint(*sm, v); }};
}

}  // namespace

TEST(OpNormEstimate, ScaledIdentity) {
  DenseMatrix m(3, 3);
  for (std::size_t i = 0; i < 3; ++i) m(i, i) = 2.0;
  EXPECT_NEAR(op_norm_sq_estimate(dense_op(m), 50), 4.0, 1e-9);
}

TEST(OpNormEstimate, ZeroOperator) { EXPECT_EQ(op_norm_sq_estimate(dense_op(DenseMatrix(3, 2))), 0.0); }

TEST(OpNormEstimate, MatchesDenseEigensolve) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    auto m = oracle::gaussian_matrix(rng, 8, 5);
    const double ref = oracle::max_eig_gram(m);
    const double est = op_norm_sq_estimate(dense_op(m), 1000);
    EXPECT_NEAR(est, ref, 1e-6 * ref);
    EXPECT_LE(est, ref * (1 + 1e-12));
  }
}

TEST(OpNormEstimate, MonotoneInIterations) {
  std::mt19937_64 rng(8);
  auto op = dense_op(oracle::gaussian_matrix(rng, 8, 5));
  double prev = 0.0;
  for (std::size_t it = 1; it <= 40; ++it) {
    const double e = op_norm_sq_estimate(op, it);
    EXPECT_GE(e, prev);
    prev = e;
  }
}
