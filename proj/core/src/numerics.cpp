#include "pdprox/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "pdprox/error.hpp"

namespace pdprox {

double dot(std::span<const double> a, std::span<const double> b) {
  PDPROX_REQUIRE(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) {
  // scaled accumulation so huge/tiny entries do not over/underflow
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double x : v) {
    const double r = x / scale;
    s += r * r;
  }
  return scale * std::sqrt(s);
}

double norm1(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double norm_inf(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  PDPROX_REQUIRE(x.size() == y.size(), "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

DenseMatrix::DenseMatrix(std::size_t r, std::size_t c, Vector values)
    : rows(r), cols(c), data(std::move(values)) {
  PDPROX_REQUIRE(data.size() == r * c, "DenseMatrix: value count does not match shape");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  DenseMatrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    PDPROX_REQUIRE(row.size() == c, "DenseMatrix::from_rows: ragged rows");
    std::copy(row.begin(), row.end(), m.data.begin() + static_cast<std::ptrdiff_t>(i * c));
    ++i;
  }
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols, rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double DenseMatrix::frobenius_norm() const { return norm2(data); }

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  PDPROX_REQUIRE(a.cols == b.rows, "multiply: inner dimension mismatch");
  DenseMatrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                           std::vector<std::size_t> col_indices, Vector values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  PDPROX_REQUIRE(row_offsets_.size() == rows_ + 1, "SparseMatrix: row_offsets must have rows+1 entries");
  PDPROX_REQUIRE(row_offsets_.front() == 0, "SparseMatrix: row_offsets must start at 0");
  PDPROX_REQUIRE(col_indices_.size() == values_.size(), "SparseMatrix: indices/values length mismatch");
  PDPROX_REQUIRE(row_offsets_.back() == values_.size(), "SparseMatrix: last offset must equal nnz");
  for (std::size_t i = 0; i < rows_; ++i) {
    PDPROX_REQUIRE(row_offsets_[i] <= row_offsets_[i + 1], "SparseMatrix: row offsets must be monotone");
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      PDPROX_REQUIRE(col_indices_[k] < cols_, "SparseMatrix: column index out of range");
      PDPROX_REQUIRE(k == row_offsets_[i] || col_indices_[k - 1] < col_indices_[k],
                     "SparseMatrix: column indices must be strictly increasing within a row");
    }
  }
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& m) {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  Vector vals;
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      if (m(i, j) != 0.0) {
        cols.push_back(j);
        vals.push_back(m(i, j));
      }
    }
    offsets.push_back(vals.size());
  }
  return SparseMatrix(m.rows, m.cols, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::vector<std::size_t> cols(n);
  for (std::size_t i = 0; i <= n; ++i) offsets[i] = i;
  for (std::size_t i = 0; i < n; ++i) cols[i] = i;
  return SparseMatrix(n, n, std::move(offsets), std::move(cols), Vector(n, 1.0));
}

std::span<const std::size_t> SparseMatrix::row_indices(std::size_t i) const {
  return std::span<const std::size_t>(col_indices_).subspan(row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]);
}

std::span<const double> SparseMatrix::row_values(std::size_t i) const {
  return std::span<const double>(values_).subspan(row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]);
}

double SparseMatrix::row_dot(std::size_t i, std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) s += values_[k] * x[col_indices_[k]];
  return s;
}

double SparseMatrix::row_norm(std::size_t i) const { return norm2(row_values(i)); }

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) d(i, col_indices_[k]) = values_[k];
  return d;
}

Vector apply(const SparseMatrix& m, std::span<const double> x) {
  PDPROX_REQUIRE(x.size() == m.cols(), "apply: vector length must equal matrix columns");
  Vector y(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) y[i] = m.row_dot(i, x);
  return y;
}

Vector apply_adjoint(const SparseMatrix& m, std::span<const double> v) {
  PDPROX_REQUIRE(v.size() == m.rows(), "apply_adjoint: vector length must equal matrix rows");
  Vector y(m.cols(), 0.0);
  const auto offsets = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) y[cols[k]] += vals[k] * vi;
  }
  return y;
}

bool Dataset::has_binary_labels() const {
  return std::all_of(labels.begin(), labels.end(), [](double y) { return y == 1.0 || y == -1.0; });
}

std::span<const double> Dataset::label_row(std::size_t i) const {
  return std::span<const double>(multi_labels).subspan(i * outputs, outputs);
}

void validate(const Dataset& ds) {
  PDPROX_REQUIRE(ds.size() >= 1, "dataset must contain at least one example");
  PDPROX_REQUIRE(ds.dim() >= 1, "dataset must have at least one feature");
  PDPROX_REQUIRE(ds.labels.size() == ds.size(), "dataset: one label per example required");
  PDPROX_REQUIRE(ds.multi_labels.size() == ds.size() * ds.outputs, "dataset: multi-output label block has wrong size");
  for (double v : ds.features.values())
    PDPROX_REQUIRE(std::isfinite(v), "dataset: non-finite feature value");
  for (double y : ds.labels) PDPROX_REQUIRE(std::isfinite(y), "dataset: non-finite label");
  for (double y : ds.multi_labels) PDPROX_REQUIRE(std::isfinite(y), "dataset: non-finite label");
}

double data_radius(const Dataset& ds) {
  double r = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) r = std::max(r, ds.features.row_norm(i));
  return r;
}

double op_norm_sq_estimate(const LinearOperator& op, std::size_t iters, std::uint64_t seed) {
  PDPROX_REQUIRE(iters >= 1, "op_norm_sq_estimate: iters must be >= 1");
  PDPROX_REQUIRE(op.cols >= 1, "op_norm_sq_estimate: operator has no columns");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector x(op.cols);
  for (auto& xi : x) xi = gauss(rng);

  // Rayleigh quotients of H^T H along the power sequence form a
  // non-decreasing sequence; the running max keeps that exact under rounding.
  double best = 0.0;
  for (std::size_t it = 0; it < iters; ++it) {
    const double xn = norm2(x);
    if (xn == 0.0) break;
    for (auto& xi : x) xi /= xn;
    const Vector hx = op.apply(x);
    const double est = dot(hx, hx);
    best = std::max(best, est);
    if (est == 0.0) break;
    x = op.apply_adjoint(hx);
  }
  return best;
}

}  // namespace pdprox
