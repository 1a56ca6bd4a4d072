#include "pdprox/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pdprox/error.hpp"

namespace pdprox {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Hinge: return "hinge";
    case LossKind::GeneralizedHinge: return "generalized-hinge";
    case LossKind::Absolute: return "absolute";
    case LossKind::EpsInsensitive: return "eps-insensitive";
    case LossKind::PiecewiseLinear: return "piecewise-linear";
    case LossKind::L2MultiOutput: return "l2-multi";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  for (auto k : {LossKind::Hinge, LossKind::GeneralizedHinge, LossKind::Absolute, LossKind::EpsInsensitive,
                 LossKind::PiecewiseLinear, LossKind::L2MultiOutput})
    if (to_string(k) == name) return k;
  throw ContractViolation("unknown loss '" + std::string(name) + "'");
}

std::size_t LossSpec::block_size() const {
  switch (kind) {
    case LossKind::Hinge:
    case LossKind::Absolute: return 1;
    case LossKind::GeneralizedHinge:
    case LossKind::EpsInsensitive:
    case LossKind::PiecewiseLinear: return 2;
    case LossKind::L2MultiOutput: return outputs;
  }
  return 1;
}

void validate(const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::GeneralizedHinge:
      PDPROX_REQUIRE(spec.param > 1.0, "generalized hinge slope must be > 1");
      break;
    case LossKind::EpsInsensitive:
      PDPROX_REQUIRE(spec.param >= 0.0, "eps-insensitive epsilon must be >= 0");
      break;
    case LossKind::PiecewiseLinear:
      PDPROX_REQUIRE(spec.param > 0.0 && spec.param < 1.0, "piecewise-linear parameter must lie in (0, 1)");
      break;
    case LossKind::L2MultiOutput:
      PDPROX_REQUIRE(spec.outputs >= 1, "multi-output loss needs at least one output");
      break;
    default: break;
  }
}

double scalar_loss(const LossSpec& spec, double prediction, double label) {
  const double r = prediction - label;
  switch (spec.kind) {
    case LossKind::Hinge: return std::max(0.0, 1.0 - label * prediction);
    case LossKind::GeneralizedHinge: {
      const double m = label * prediction;
      if (m <= 0.0) return 1.0 - spec.param * m;
      if (m < 1.0) return 1.0 - m;
      return 0.0;
    }
    case LossKind::Absolute: return std::abs(r);
    case LossKind::EpsInsensitive: return std::max(std::abs(r) - spec.param, 0.0);
    case LossKind::PiecewiseLinear: return r <= 0.0 ? spec.param * -r : (1.0 - spec.param) * r;
    case LossKind::L2MultiOutput: break;
  }
  throw ContractViolation("scalar_loss: multi-output loss has no scalar form");
}

std::size_t block_size(const BlockDomain& block) {
  return std::visit(
      [](const auto& b) -> std::size_t {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, BoxLinearBlock>)
          return b.weights.size();
        else
          return b.size;
      },
      block);
}

CouplingOperator::CouplingOperator(std::shared_ptr<const SparseMatrix> rows, std::size_t slots_per_row,
                                   std::size_t lanes, Vector coef)
    : rows_(std::move(rows)), slots_(slots_per_row), lanes_(lanes), coef_(std::move(coef)) {
  PDPROX_REQUIRE(rows_ != nullptr, "CouplingOperator: null row source");
  PDPROX_REQUIRE(slots_ >= 1, "CouplingOperator: need at least one slot per row");
  PDPROX_REQUIRE(lanes_ == 1 || lanes_ == slots_, "CouplingOperator: lanes must be 1 or equal slots per row");
  PDPROX_REQUIRE(coef_.size() == rows_->rows() * slots_, "CouplingOperator: one coefficient per dual slot");
}

Vector CouplingOperator::apply(std::span<const double> alpha) const {
  PDPROX_REQUIRE(alpha.size() == dual_dim(), "H alpha: dual length mismatch");
  Vector out(primal_dim(), 0.0);
  const SparseMatrix& z = *rows_;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto idx = z.row_indices(i);
    const auto val = z.row_values(i);
    if (lanes_ == 1) {
      double t = 0.0;
      for (std::size_t j = 0; j < slots_; ++j) t += coef_[i * slots_ + j] * alpha[i * slots_ + j];
      if (t == 0.0) continue;
      for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] += t * val[k];
    } else {
      for (std::size_t j = 0; j < slots_; ++j) {
        const double t = coef_[i * slots_ + j] * alpha[i * slots_ + j];
        if (t == 0.0) continue;
        for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k] * lanes_ + j] += t * val[k];
      }
    }
  }
  return out;
}

Vector CouplingOperator::apply_adjoint(std::span<const double> w) const {
  PDPROX_REQUIRE(w.size() == primal_dim(), "H^T w: primal length mismatch");
  Vector out(dual_dim(), 0.0);
  const SparseMatrix& z = *rows_;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto idx = z.row_indices(i);
    const auto val = z.row_values(i);
    if (lanes_ == 1) {
      double p = 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k) p += val[k] * w[idx[k]];
      for (std::size_t j = 0; j < slots_; ++j) out[i * slots_ + j] = coef_[i * slots_ + j] * p;
    } else {
      for (std::size_t j = 0; j < slots_; ++j) {
        double p = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k) p += val[k] * w[idx[k] * lanes_ + j];
        out[i * slots_ + j] = coef_[i * slots_ + j] * p;
      }
    }
  }
  return out;
}

LinearOperator CouplingOperator::as_operator() const {
  // H maps dual -> primal; its adjoint maps primal -> dual.
  return LinearOperator{primal_dim(), dual_dim(), [this](std::span<const double> a) { return apply(a); },
                        [this](std::span<const double> w) { return apply_adjoint(w); }};
}

double BilinearForm::value(std::span<const double> w, std::span<const double> alpha) const {
  return c0 + dot(alpha, a) + dot(w, b) + dot(w, h.apply(alpha));
}

BilinearProblem bilinear_build(const LossSpec& spec, std::shared_ptr<const Dataset> ds) {
  PDPROX_REQUIRE(ds != nullptr, "bilinear_build: null dataset");
  validate(spec);
  validate(*ds);
  if (spec.needs_binary_labels() && !ds->has_binary_labels())
    throw ContractViolation(std::string(to_string(spec.kind)) + " loss requires labels in {-1, +1}");
  if (spec.kind == LossKind::L2MultiOutput)
    PDPROX_REQUIRE(ds->outputs == spec.outputs, "multi-output loss: dataset output count mismatch");

  const std::size_t n = ds->size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const std::size_t k = spec.block_size();
  Vector a(n * k);
  Vector coef(n * k);
  DualDomain domain;
  domain.blocks = n;
  std::size_t lanes = 1;

  for (std::size_t i = 0; i < n; ++i) {
    const double y = ds->labels[i];
    double* ai = a.data() + i * k;
    double* ci = coef.data() + i * k;
    switch (spec.kind) {
      case LossKind::Hinge:
        ai[0] = inv_n;
        ci[0] = -y * inv_n;
        break;
      case LossKind::GeneralizedHinge:
        ai[0] = inv_n;
        ai[1] = inv_n;
        ci[0] = -spec.param * y * inv_n;
        ci[1] = -y * inv_n;
        break;
      case LossKind::Absolute:
        ai[0] = -y * inv_n;
        ci[0] = inv_n;
        break;
      case LossKind::EpsInsensitive:
        ai[0] = (-y - spec.param) * inv_n;
        ai[1] = (y - spec.param) * inv_n;
        ci[0] = inv_n;
        ci[1] = -inv_n;
        break;
      case LossKind::PiecewiseLinear:
        ai[0] = spec.param * y * inv_n;
        ai[1] = -(1.0 - spec.param) * y * inv_n;
        ci[0] = -spec.param * inv_n;
        ci[1] = (1.0 - spec.param) * inv_n;
        break;
      case LossKind::L2MultiOutput: {
        const auto yi = ds->label_row(i);
        for (std::size_t j = 0; j < k; ++j) {
          ai[j] = -yi[j] * inv_n;
          ci[j] = inv_n;
        }
        break;
      }
    }
  }

  switch (spec.kind) {
    case LossKind::Hinge: domain.block = BoxBlock{0.0, 1.0, 1}; break;
    case LossKind::Absolute: domain.block = BoxBlock{-1.0, 1.0, 1}; break;
    case LossKind::GeneralizedHinge:
    case LossKind::EpsInsensitive:
    case LossKind::PiecewiseLinear: domain.block = BoxLinearBlock{1.0, Vector{1.0, 1.0}, 1.0}; break;
    case LossKind::L2MultiOutput:
      domain.block = L2BallBlock{1.0, k};
      lanes = k;
      break;
  }

  std::shared_ptr<const SparseMatrix> rows(ds, &ds->features);
  BilinearProblem out;
  out.form.h = CouplingOperator(std::move(rows), k, lanes, std::move(coef));
  out.form.a = std::move(a);
  out.form.b = Vector(out.form.h.primal_dim(), 0.0);
  out.domain = std::move(domain);
  return out;
}

Vector partial_grad_w(const BilinearForm& bf, std::span<const double> alpha) {
  PDPROX_REQUIRE(alpha.size() == bf.dual_dim(), "partial_grad_w: dual length mismatch");
  Vector g = bf.h.apply(alpha);
  axpy(1.0, bf.b, g);
  return g;
}

Vector partial_grad_alpha(const BilinearForm& bf, std::span<const double> w) {
  PDPROX_REQUIRE(w.size() == bf.primal_dim(), "partial_grad_alpha: primal length mismatch");
  Vector g = bf.h.apply_adjoint(w);
  axpy(1.0, bf.a, g);
  return g;
}

double primal_loss_value(const LossSpec& spec, const Dataset& ds, std::span<const double> w) {
  const std::size_t n = ds.size();
  PDPROX_REQUIRE(n >= 1, "primal_loss_value: empty dataset");
  double total = 0.0;
  if (spec.kind == LossKind::L2MultiOutput) {
    const std::size_t kk = spec.outputs;
    PDPROX_REQUIRE(ds.outputs == kk, "primal_loss_value: dataset output count mismatch");
    PDPROX_REQUIRE(w.size() == ds.dim() * kk, "primal_loss_value: W must be d x K");
    Vector r(kk);
    for (std::size_t i = 0; i < n; ++i) {
      const auto idx = ds.features.row_indices(i);
      const auto val = ds.features.row_values(i);
      const auto yi = ds.label_row(i);
      for (std::size_t j = 0; j < kk; ++j) {
        double p = 0.0;
        for (std::size_t t = 0; t < idx.size(); ++t) p += val[t] * w[idx[t] * kk + j];
        r[j] = p - yi[j];
      }
      total += norm2(r);
    }
  } else {
    PDPROX_REQUIRE(w.size() == ds.dim(), "primal_loss_value: w length must equal feature dimension");
    for (std::size_t i = 0; i < n; ++i) total += scalar_loss(spec, ds.features.row_dot(i, w), ds.labels[i]);
  }
  return total / static_cast<double>(n);
}

double lipschitz_c(const LossSpec& spec, const Dataset& ds, LipschitzSide side) {
  validate(spec);
  const double r = data_radius(ds);
  const double base = r * r / static_cast<double>(ds.size());
  const bool alpha_side = side == LipschitzSide::GradAlpha;
  switch (spec.kind) {
    case LossKind::Hinge:
    case LossKind::Absolute:
    case LossKind::L2MultiOutput: return base;
    case LossKind::GeneralizedHinge: {
      const double a = spec.param;
      return alpha_side ? (a * a + 1.0) * base : 2.0 * a * a * base;
    }
    case LossKind::EpsInsensitive: return 2.0 * base;
    case LossKind::PiecewiseLinear: {
      const double a = spec.param;
      if (alpha_side) return (a * a + (1.0 - a) * (1.0 - a)) * base;
      const double m = std::max(a, 1.0 - a);
      return 2.0 * m * m * base;
    }
  }
  return lipschitz_c(bilinear_build(spec, std::make_shared<Dataset>(ds)).form);
}

double lipschitz_c(const BilinearForm& bf) {
  if (bf.dual_dim() == 0 || bf.primal_dim() == 0) return 0.0;
  return kOpNormSafety * op_norm_sq_estimate(bf.h.as_operator());
}

}  // namespace pdprox
