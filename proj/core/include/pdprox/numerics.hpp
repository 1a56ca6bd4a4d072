#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace pdprox {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double norm1(std::span<const double> v);
double norm_inf(std::span<const double> v);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// Row-major dense matrix. Used for thin SVD and the trace-norm prox; the
// solver hot path never touches it.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vector data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  DenseMatrix(std::size_t r, std::size_t c, Vector values);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  DenseMatrix transposed() const;
  double frobenius_norm() const;
};

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);

// Compressed sparse row storage. Column indices are strictly increasing
// within each row; explicit zeros are allowed.
class SparseMatrix {
 public:
  SparseMatrix() : row_offsets_{0} {}
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
               std::vector<std::size_t> col_indices, Vector values);

  static SparseMatrix from_dense(const DenseMatrix& m);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const std::size_t> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const std::size_t> row_indices(std::size_t i) const;
  std::span<const double> row_values(std::size_t i) const;

  // <row i, x>
  double row_dot(std::size_t i, std::span<const double> x) const;
  double row_norm(std::size_t i) const;

  DenseMatrix to_dense() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_offsets_;
  std::vector<std::size_t> col_indices_;
  Vector values_;
};

// M x
Vector apply(const SparseMatrix& m, std::span<const double> x);
// M^T v
Vector apply_adjoint(const SparseMatrix& m, std::span<const double> v);

// Training data. `labels` holds one real per example; multi-output data
// additionally carries an n x outputs row-major label block.
struct Dataset {
  SparseMatrix features;
  Vector labels;
  std::size_t outputs = 0;
  Vector multi_labels;

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }
  bool has_binary_labels() const;
  std::span<const double> label_row(std::size_t i) const;
};

// Throws ContractViolation when the dataset breaks its invariants.
void validate(const Dataset& ds);

// libsvm text format: `label idx:val ...`, 1-based ascending indices on disk.
// Feature dimension is the largest index seen, or `expected_dim` if given
// (which must not be smaller).
Dataset read_libsvm(const std::filesystem::path& path, std::optional<std::size_t> expected_dim = {});
void write_libsvm(const Dataset& ds, const std::filesystem::path& path);

// max_i ||x_i||_2
double data_radius(const Dataset& ds);

struct ThinSVD {
  DenseMatrix u;  // m x r
  Vector sigma;   // r, descending
  DenseMatrix v;  // n x r
};

// One-sided Jacobi SVD, r = min(m, n). Deterministic sweep order.
ThinSVD thin_svd(const DenseMatrix& m, int max_sweeps = 80);

DenseMatrix reconstruct(const ThinSVD& svd);

// A matrix-free linear map from R^cols to R^rows.
struct LinearOperator {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::function<Vector(std::span<const double>)> apply;
  std::function<Vector(std::span<const double>)> apply_adjoint;
};

inline constexpr std::size_t kPowerIterations = 100;
inline constexpr std::uint64_t kPowerSeed = 0x9d2c5680u;
// Power iteration underestimates ||H||^2; callers inflate by this factor
// before using the estimate as a Lipschitz bound.
inline constexpr double kOpNormSafety = 1.01;

// Power-iteration estimate of ||H||_2^2 (largest eigenvalue of H^T H). Never
// exceeds the true value and is non-decreasing in `iters`.
double op_norm_sq_estimate(const LinearOperator& op, std::size_t iters = kPowerIterations,
                           std::uint64_t seed = kPowerSeed);

}  // namespace pdprox
