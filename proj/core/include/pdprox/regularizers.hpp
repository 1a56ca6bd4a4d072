#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdprox/numerics.hpp"

namespace pdprox {

enum class RegKind {
  L1,             // ||w||_1
  L2Norm,         // ||w||_2
  LInf,           // ||w||_inf
  SquaredL2Half,  // 1/2 ||w||_2^2
  GroupLasso,     // sum_g weight_g ||w_g||_2, default weight sqrt(d_g)
  L21Rows,        // sum_j ||w^j||_2 over rows of a d x K matrix
  L1InfRows,      // sum_j ||w^j||_inf
  ExclusiveLasso, // sum_j ||w^j||_1^2
  TraceNorm,      // sum of singular values of a d1 x d2 matrix
  CompositeV,     // V(||w||) with V(z) = z^p, p in {1, 2}
};

std::string_view to_string(RegKind kind);

// Non-smooth penalty R. Matrix kinds read the (compacted) vector as a
// row-major rows x cols matrix. Coordinates flagged in `passthrough` are
// excluded: they contribute 0 to the value and the prox leaves them alone.
struct Regularizer {
  RegKind kind = RegKind::L1;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<std::size_t>> groups;
  Vector group_weights;
  std::shared_ptr<const Regularizer> inner;
  int power = 2;
  std::vector<bool> passthrough;

  static Regularizer of(RegKind k) {
    Regularizer r;
    r.kind = k;
    return r;
  }
  static Regularizer l1() { return of(RegKind::L1); }
  static Regularizer l2_norm() { return of(RegKind::L2Norm); }
  static Regularizer linf() { return of(RegKind::LInf); }
  static Regularizer squared_l2_half() { return of(RegKind::SquaredL2Half); }
  // weights default to sqrt(|g|)
  static Regularizer group_lasso(std::vector<std::vector<std::size_t>> groups, Vector weights = {});
  // consecutive groups of the given sizes
  static Regularizer group_lasso_sizes(std::span<const std::size_t> sizes);
  static Regularizer l21_rows(std::size_t d, std::size_t k);
  static Regularizer l1inf_rows(std::size_t d, std::size_t k);
  static Regularizer exclusive_lasso(std::size_t d, std::size_t k);
  static Regularizer trace_norm(std::size_t d1, std::size_t d2);
  static Regularizer composite(Regularizer inner, int power);

  bool is_norm() const;
  bool masked(std::size_t i) const { return i < passthrough.size() && passthrough[i]; }
};

// Throws ContractViolation if `r` cannot act on vectors of length `dim`.
void validate(const Regularizer& r, std::size_t dim);

double reg_value(const Regularizer& r, std::span<const double> w);

// argmin_x 1/2 ||x - v||^2 + tau R(x), tau > 0.
Vector reg_prox(const Regularizer& r, std::span<const double> v, double tau);

// One element of the subdifferential of R at w.
Vector reg_subgradient(const Regularizer& r, std::span<const double> w);

struct ConjugateValue {
  enum class Status { Finite, Infeasible, Unsupported };
  Status status = Status::Finite;
  double value = 0.0;

  bool finite() const { return status == Status::Finite; }
};

inline constexpr double kDualBallSlack = 1e-9;

// R*(u). Norm kinds give the indicator of the dual-norm unit ball (tested
// with 1 + 1e-9 slack); masked coordinates must be zero.
ConjugateValue reg_conjugate(const Regularizer& r, std::span<const double> u);

// Dual norm of u for norm kinds (masked coordinates ignored); used to
// project onto the dual ball. Throws Unsupported for non-norm kinds.
double dual_norm(const Regularizer& r, std::span<const double> u);

// Euclidean projection onto {x : ||x||_1 <= radius}, sort-and-threshold.
Vector project_l1_ball(std::span<const double> v, double radius);

// V*'(eta) for V(z) = z^p. For p = 1 the conjugate is the indicator of
// eta <= 1, so the "derivative" jumps from 0 to +inf at eta = 1.
std::function<double(double)> power_conjugate_derivative(int power);

// argmin_w 1/2 ||w - v||^2 + tau V(||w||) by bisection on eta in
//   ||prox_{tau eta ||.||}(v)|| = V*'(eta).
// `inner` must be a norm kind with a closed-form prox.
Vector prox_composite_scalar(const Regularizer& inner, const std::function<double(double)>& conj_derivative,
                             std::span<const double> v, double tau);

// Fraction of "structural units" that are exactly zero: groups for group
// kinds, rows for row kinds, singular values for the trace norm,
// coordinates otherwise.
double primal_sparsity(const Regularizer& r, std::span<const double> w);

}  // namespace pdprox
