#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "pdprox/numerics.hpp"

namespace pdprox {

enum class LossKind { Hinge, GeneralizedHinge, Absolute, EpsInsensitive, PiecewiseLinear, L2MultiOutput };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

// Non-smooth loss with a bilinear dual representation
//   loss(w; x, y) = max_{alpha in Delta} f(w, alpha; x, y).
struct LossSpec {
  LossKind kind = LossKind::Hinge;
  // slope a > 1 (generalized hinge), epsilon >= 0 (eps-insensitive),
  // quantile a in (0, 1) (piecewise linear); unused otherwise.
  double param = 0.0;
  // K for the multi-output l2 loss.
  std::size_t outputs = 0;

  static LossSpec hinge() { return {LossKind::Hinge, 0.0, 0}; }
  static LossSpec generalized_hinge(double slope) { return {LossKind::GeneralizedHinge, slope, 0}; }
  static LossSpec absolute() { return {LossKind::Absolute, 0.0, 0}; }
  static LossSpec eps_insensitive(double eps) { return {LossKind::EpsInsensitive, eps, 0}; }
  static LossSpec piecewise_linear(double a) { return {LossKind::PiecewiseLinear, a, 0}; }
  static LossSpec l2_multi_output(std::size_t k) { return {LossKind::L2MultiOutput, 0.0, k}; }

  // Dual variables per example.
  std::size_t block_size() const;
  bool needs_binary_labels() const {
    return kind == LossKind::Hinge || kind == LossKind::GeneralizedHinge;
  }
};

void validate(const LossSpec& spec);

// Closed-form loss of one scalar prediction.
double scalar_loss(const LossSpec& spec, double prediction, double label);

// Per-example dual feasible sets.
struct BoxBlock {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t size = 1;
};
// {alpha in [0, cap]^k : <weights, alpha> <= rho}
struct BoxLinearBlock {
  double cap = 1.0;
  Vector weights;
  double rho = 1.0;
};
struct L2BallBlock {
  double radius = 1.0;
  std::size_t size = 1;
};
using BlockDomain = std::variant<BoxBlock, BoxLinearBlock, L2BallBlock>;

std::size_t block_size(const BlockDomain& block);

// Q_alpha: `blocks` copies of one block domain stored example-major (block i
// occupies slots [i*k, (i+1)*k)), optionally intersected with ||alpha||_1 <= m.
struct DualDomain {
  BlockDomain block = BoxBlock{};
  std::size_t blocks = 0;
  std::optional<double> global_l1_cap;

  std::size_t block_size() const { return pdprox::block_size(block); }
  std::size_t size() const { return blocks * block_size(); }
};

// The coupling matrix H (primal_dim x dual_dim) realized over a sparse
// "row source" Z without materializing H. Dual slot s = i*k + j is tied to
// row i of Z scaled by coef[s]; with lanes == k the primal vector is a
// row-major (Z.cols x k) matrix and slot j reads/writes lane j, otherwise
// all slots share lane 0.
class CouplingOperator {
 public:
  CouplingOperator() = default;
  CouplingOperator(std::shared_ptr<const SparseMatrix> rows, std::size_t slots_per_row, std::size_t lanes,
                   Vector coef);

  std::size_t primal_dim() const noexcept { return rows_ ? rows_->cols() * lanes_ : 0; }
  std::size_t dual_dim() const noexcept { return coef_.size(); }
  std::size_t slots_per_row() const noexcept { return slots_; }
  std::size_t lanes() const noexcept { return lanes_; }
  const SparseMatrix& rows() const { return *rows_; }
  std::span<const double> coef() const noexcept { return coef_; }

  // H alpha
  Vector apply(std::span<const double> alpha) const;
  // H^T w
  Vector apply_adjoint(std::span<const double> w) const;

  LinearOperator as_operator() const;

 private:
  std::shared_ptr<const SparseMatrix> rows_;
  std::size_t slots_ = 1;
  std::size_t lanes_ = 1;
  Vector coef_;
};

// L(w, alpha) = c0 + <alpha, a> + <w, b> + <w, H alpha>, with the 1/n
// normalization folded into a, b and H.
struct BilinearForm {
  double c0 = 0.0;
  Vector a;
  Vector b;
  CouplingOperator h;

  std::size_t primal_dim() const { return b.size(); }
  std::size_t dual_dim() const { return a.size(); }
  double value(std::span<const double> w, std::span<const double> alpha) const;
};

struct BilinearProblem {
  BilinearForm form;
  DualDomain domain;
};

BilinearProblem bilinear_build(const LossSpec& spec, std::shared_ptr<const Dataset> ds);

// G_w = b + H alpha (independent of w).
Vector partial_grad_w(const BilinearForm& bf, std::span<const double> alpha);
// G_alpha = a + H^T w (independent of alpha).
Vector partial_grad_alpha(const BilinearForm& bf, std::span<const double> w);

// (1/n) sum_i loss(w; x_i, y_i) from the closed forms. For the multi-output
// loss `w` is the row-major d x K matrix W.
double primal_loss_value(const LossSpec& spec, const Dataset& ds, std::span<const double> w);

enum class LipschitzSide { GradAlpha, GradW };

// Constant c with ||G_alpha(w1) - G_alpha(w2)||^2 <= c ||w1 - w2||^2
// (GradAlpha) or ||G_w(a1) - G_w(a2)||^2 <= c ||a1 - a2||^2 (GradW), from
// the radius bound R = max ||x_i||.
//
//   hinge, absolute           R^2/n on both sides
//   generalized hinge (a)     (a^2+1) R^2/n  /  2 a^2 R^2/n
//   eps-insensitive           2 R^2/n on both sides
//   piecewise linear (a)      (a^2+(1-a)^2) R^2/n  /  2 max(a,1-a)^2 R^2/n
//   multi-output l2           R^2/n on both sides
//
// The eps-insensitive, piecewise-linear and multi-output constants follow
// the generalized-hinge derivation and are validated by sampling in tests.
double lipschitz_c(const LossSpec& spec, const Dataset& ds, LipschitzSide side);

// Fallback when no closed form applies: inflated power-iteration estimate
// of ||H||^2.
double lipschitz_c(const BilinearForm& bf);

}  // namespace pdprox
