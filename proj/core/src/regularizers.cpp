#include "pdprox/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pdprox/error.hpp"

namespace pdprox {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

std::span<const double> row(std::span<const double> w, std::size_t j, std::size_t cols) {
  return w.subspan(j * cols, cols);
}

Vector gather(std::span<const double> w, std::span<const std::size_t> idx) {
  Vector out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = w[idx[k]];
  return out;
}

// Shrink a block toward zero by `t` in l2 norm.
void shrink_block(std::span<double> x, double t) {
  const double nrm = norm2(x);
  const double scale = nrm <= t ? 0.0 : 1.0 - t / nrm;
  for (double& xi : x) xi *= scale;
}

void linf_prox_block(std::span<double> x, double t) {
  const Vector p = project_l1_ball(x, t);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= p[i];
}

const Regularizer& l1_instance() {
  static const Regularizer r = Regularizer::l1();
  return r;
}

double value_core(const Regularizer& r, std::span<const double> w) {
  switch (r.kind) {
    case RegKind::L1: return norm1(w);
    case RegKind::L2Norm: return norm2(w);
    case RegKind::LInf: return norm_inf(w);
    case RegKind::SquaredL2Half: return 0.5 * dot(w, w);
    case RegKind::GroupLasso: {
      double s = 0.0;
      for (std::size_t g = 0; g < r.groups.size(); ++g) s += r.group_weights[g] * norm2(gather(w, r.groups[g]));
      return s;
    }
    case RegKind::L21Rows: {
      double s = 0.0;
      for (std::size_t j = 0; j < r.rows; ++j) s += norm2(row(w, j, r.cols));
      return s;
    }
    case RegKind::L1InfRows: {
      double s = 0.0;
      for (std::size_t j = 0; j < r.rows; ++j) s += norm_inf(row(w, j, r.cols));
      return s;
    }
    case RegKind::ExclusiveLasso: {
      double s = 0.0;
      for (std::size_t j = 0; j < r.rows; ++j) {
        const double l1 = norm1(row(w, j, r.cols));
        s += l1 * l1;
      }
      return s;
    }
    case RegKind::TraceNorm: {
      const ThinSVD svd = thin_svd(DenseMatrix(r.rows, r.cols, Vector(w.begin(), w.end())));
      return std::accumulate(svd.sigma.begin(), svd.sigma.end(), 0.0);
    }
    case RegKind::CompositeV: return std::pow(value_core(*r.inner, w), r.power);
  }
  return 0.0;
}

// tau == 0 is the identity.
Vector prox_core(const Regularizer& r, std::span<const double> v, double tau) {
  Vector x(v.begin(), v.end());
  if (tau == 0.0) return x;
  switch (r.kind) {
    case RegKind::L1:
      for (double& xi : x) xi = sign(xi) * std::max(std::abs(xi) - tau, 0.0);
      break;
    case RegKind::L2Norm: shrink_block(x, tau); break;
    case RegKind::LInf: linf_prox_block(x, tau); break;
    case RegKind::SquaredL2Half:
      for (double& xi : x) xi /= 1.0 + tau;
      break;
    case RegKind::GroupLasso:
      for (std::size_t g = 0; g < r.groups.size(); ++g) {
        Vector block = gather(v, r.groups[g]);
        shrink_block(block, tau * r.group_weights[g]);
        for (std::size_t k = 0; k < block.size(); ++k) x[r.groups[g][k]] = block[k];
      }
      break;
    case RegKind::L21Rows:
      for (std::size_t j = 0; j < r.rows; ++j) shrink_block(std::span<double>(x).subspan(j * r.cols, r.cols), tau);
      break;
    case RegKind::L1InfRows:
      for (std::size_t j = 0; j < r.rows; ++j) linf_prox_block(std::span<double>(x).subspan(j * r.cols, r.cols), tau);
      break;
    case RegKind::ExclusiveLasso: {
      const auto dstar = power_conjugate_derivative(2);
      for (std::size_t j = 0; j < r.rows; ++j) {
        const Vector p = prox_composite_scalar(l1_instance(), dstar, row(v, j, r.cols), tau);
        std::copy(p.begin(), p.end(), x.begin() + static_cast<std::ptrdiff_t>(j * r.cols));
      }
      break;
    }
    case RegKind::TraceNorm: {
      ThinSVD svd = thin_svd(DenseMatrix(r.rows, r.cols, std::move(x)));
      for (double& s : svd.sigma) s = std::max(s - tau, 0.0);
      x = reconstruct(svd).data;
      break;
    }
    case RegKind::CompositeV: x = prox_composite_scalar(*r.inner, power_conjugate_derivative(r.power), v, tau); break;
  }
  return x;
}

Vector linf_subgradient(std::span<const double> w) {
  Vector g(w.size(), 0.0);
  if (w.empty()) return g;
  std::size_t best = 0;
  for (std::size_t i = 1; i < w.size(); ++i)
    if (std::abs(w[i]) > std::abs(w[best])) best = i;
  g[best] = sign(w[best]);
  return g;
}

Vector subgrad_core(const Regularizer& r, std::span<const double> w) {
  Vector g(w.size(), 0.0);
  auto unit_block = [](std::span<const double> x, std::span<double> out, double weight) {
    const double nrm = norm2(x);
    if (nrm == 0.0) return;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = weight * x[i] / nrm;
  };
  switch (r.kind) {
    case RegKind::L1:
      for (std::size_t i = 0; i < w.size(); ++i) g[i] = sign(w[i]);
      break;
    case RegKind::L2Norm: unit_block(w, g, 1.0); break;
    case RegKind::LInf: g = linf_subgradient(w); break;
    case RegKind::SquaredL2Half: g.assign(w.begin(), w.end()); break;
    case RegKind::GroupLasso:
      for (std::size_t gi = 0; gi < r.groups.size(); ++gi) {
        const Vector block = gather(w, r.groups[gi]);
        Vector out(block.size(), 0.0);
        unit_block(block, out, r.group_weights[gi]);
        for (std::size_t k = 0; k < out.size(); ++k) g[r.groups[gi][k]] = out[k];
      }
      break;
    case RegKind::L21Rows:
      for (std::size_t j = 0; j < r.rows; ++j)
        unit_block(row(w, j, r.cols), std::span<double>(g).subspan(j * r.cols, r.cols), 1.0);
      break;
    case RegKind::L1InfRows:
      for (std::size_t j = 0; j < r.rows; ++j) {
        const Vector s = linf_subgradient(row(w, j, r.cols));
        std::copy(s.begin(), s.end(), g.begin() + static_cast<std::ptrdiff_t>(j * r.cols));
      }
      break;
    case RegKind::ExclusiveLasso:
      for (std::size_t j = 0; j < r.rows; ++j) {
        const auto x = row(w, j, r.cols);
        const double l1 = norm1(x);
        for (std::size_t k = 0; k < r.cols; ++k) g[j * r.cols + k] = 2.0 * l1 * sign(x[k]);
      }
      break;
    case RegKind::TraceNorm: {
      const ThinSVD svd = thin_svd(DenseMatrix(r.rows, r.cols, Vector(w.begin(), w.end())));
      const double cut = svd.sigma.empty() ? 0.0 : 1e-12 * std::max(1.0, svd.sigma.front());
      for (std::size_t k = 0; k < svd.sigma.size(); ++k) {
        if (svd.sigma[k] <= cut) break;
        for (std::size_t i = 0; i < r.rows; ++i)
          for (std::size_t j = 0; j < r.cols; ++j) g[i * r.cols + j] += svd.u(i, k) * svd.v(j, k);
      }
      break;
    }
    case RegKind::CompositeV: {
      g = subgrad_core(*r.inner, w);
      if (r.power == 2) {
        const double scale = 2.0 * value_core(*r.inner, w);
        for (double& gi : g) gi *= scale;
      }
      break;
    }
  }
  return g;
}

double dual_norm_core(const Regularizer& r, std::span<const double> u) {
  switch (r.kind) {
    case RegKind::L1: return norm_inf(u);
    case RegKind::L2Norm: return norm2(u);
    case RegKind::LInf: return norm1(u);
    case RegKind::GroupLasso: {
      double m = 0.0;
      for (std::size_t g = 0; g < r.groups.size(); ++g)
        m = std::max(m, norm2(gather(u, r.groups[g])) / r.group_weights[g]);
      return m;
    }
    case RegKind::L21Rows: {
      double m = 0.0;
      for (std::size_t j = 0; j < r.rows; ++j) m = std::max(m, norm2(row(u, j, r.cols)));
      return m;
    }
    case RegKind::L1InfRows: {
      double m = 0.0;
      for (std::size_t j = 0; j < r.rows; ++j) m = std::max(m, norm1(row(u, j, r.cols)));
      return m;
    }
    case RegKind::TraceNorm: {
      const ThinSVD svd = thin_svd(DenseMatrix(r.rows, r.cols, Vector(u.begin(), u.end())));
      return svd.sigma.empty() ? 0.0 : svd.sigma.front();
    }
    default: break;
  }
  throw Unsupported("dual norm is only defined for norm regularizers");
}

bool has_mask(const Regularizer& r) {
  return std::any_of(r.passthrough.begin(), r.passthrough.end(), [](bool b) { return b; });
}

// Unmasked coordinates, in order.
Vector compact(const Regularizer& r, std::span<const double> w) {
  Vector out;
  out.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!r.masked(i)) out.push_back(w[i]);
  return out;
}

void check_length(const Regularizer& r, std::size_t n) {
  PDPROX_REQUIRE(r.passthrough.empty() || r.passthrough.size() == n,
                 "regularizer: mask length does not match vector length");
  if (r.rows > 0) {
    const auto masked = static_cast<std::size_t>(std::count(r.passthrough.begin(), r.passthrough.end(), true));
    PDPROX_REQUIRE(r.rows * r.cols == n - masked, "matrix regularizer: rows x cols must equal vector length");
  }
}

std::size_t inner_dim_of(const Regularizer& r, std::size_t dim) {
  return dim - static_cast<std::size_t>(std::count(r.passthrough.begin(), r.passthrough.end(), true));
}

void validate_core(const Regularizer& r, std::size_t dim) {
  switch (r.kind) {
    case RegKind::GroupLasso: {
      PDPROX_REQUIRE(r.group_weights.size() == r.groups.size(), "group lasso: one weight per group");
      std::vector<int> seen(dim, 0);
      for (std::size_t g = 0; g < r.groups.size(); ++g) {
        PDPROX_REQUIRE(r.group_weights[g] > 0.0, "group lasso: weights must be positive");
        for (std::size_t i : r.groups[g]) {
          PDPROX_REQUIRE(i < dim, "group lasso: group index out of range");
          ++seen[i];
        }
      }
      PDPROX_REQUIRE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }),
                     "group lasso: groups must partition the coordinates");
      break;
    }
    case RegKind::L21Rows:
    case RegKind::L1InfRows:
    case RegKind::ExclusiveLasso:
    case RegKind::TraceNorm:
      PDPROX_REQUIRE(r.rows * r.cols == dim, "matrix regularizer: rows x cols must equal vector length");
      break;
    case RegKind::CompositeV:
      PDPROX_REQUIRE(r.inner != nullptr, "composite regularizer: missing inner norm");
      PDPROX_REQUIRE(r.inner->is_norm() && r.inner->kind != RegKind::TraceNorm,
                     "composite regularizer: inner must be a vector norm with closed-form prox");
      PDPROX_REQUIRE(r.inner->passthrough.empty(), "composite regularizer: mask belongs on the outer regularizer");
      PDPROX_REQUIRE(r.power == 1 || r.power == 2, "composite regularizer: V(z) = z^p with p in {1, 2}");
      validate_core(*r.inner, dim);
      break;
    default: break;
  }
}

}  // namespace

std::string_view to_string(RegKind kind) {
  switch (kind) {
    case RegKind::L1: return "l1";
    case RegKind::L2Norm: return "l2";
    case RegKind::LInf: return "linf";
    case RegKind::SquaredL2Half: return "l2sq";
    case RegKind::GroupLasso: return "group-lasso";
    case RegKind::L21Rows: return "l21";
    case RegKind::L1InfRows: return "l1inf";
    case RegKind::ExclusiveLasso: return "exclusive-lasso";
    case RegKind::TraceNorm: return "trace";
    case RegKind::CompositeV: return "composite";
  }
  return "unknown";
}

Regularizer Regularizer::group_lasso(std::vector<std::vector<std::size_t>> groups, Vector weights) {
  Regularizer r = of(RegKind::GroupLasso);
  if (weights.empty()) {
    weights.reserve(groups.size());
    for (const auto& g : groups) weights.push_back(std::sqrt(static_cast<double>(g.size())));
  }
  r.groups = std::move(groups);
  r.group_weights = std::move(weights);
  return r;
}

Regularizer Regularizer::group_lasso_sizes(std::span<const std::size_t> sizes) {
  std::vector<std::vector<std::size_t>> groups;
  std::size_t next = 0;
  for (std::size_t s : sizes) {
    std::vector<std::size_t> g(s);
    std::iota(g.begin(), g.end(), next);
    next += s;
    groups.push_back(std::move(g));
  }
  return group_lasso(std::move(groups));
}

Regularizer Regularizer::l21_rows(std::size_t d, std::size_t k) {
  Regularizer r = of(RegKind::L21Rows);
  r.rows = d;
  r.cols = k;
  return r;
}

Regularizer Regularizer::l1inf_rows(std::size_t d, std::size_t k) {
  Regularizer r = of(RegKind::L1InfRows);
  r.rows = d;
  r.cols = k;
  return r;
}

Regularizer Regularizer::exclusive_lasso(std::size_t d, std::size_t k) {
  Regularizer r = of(RegKind::ExclusiveLasso);
  r.rows = d;
  r.cols = k;
  return r;
}

Regularizer Regularizer::trace_norm(std::size_t d1, std::size_t d2) {
  Regularizer r = of(RegKind::TraceNorm);
  r.rows = d1;
  r.cols = d2;
  return r;
}

Regularizer Regularizer::composite(Regularizer inner, int power) {
  Regularizer r = of(RegKind::CompositeV);
  r.inner = std::make_shared<const Regularizer>(std::move(inner));
  r.power = power;
  return r;
}

bool Regularizer::is_norm() const {
  switch (kind) {
    case RegKind::L1:
    case RegKind::L2Norm:
    case RegKind::LInf:
    case RegKind::GroupLasso:
    case RegKind::L21Rows:
    case RegKind::L1InfRows:
    case RegKind::TraceNorm: return true;
    default: return false;
  }
}

void validate(const Regularizer& r, std::size_t dim) {
  check_length(r, dim);
  validate_core(r, inner_dim_of(r, dim));
}

double reg_value(const Regularizer& r, std::span<const double> w) {
  check_length(r, w.size());
  if (!has_mask(r)) return value_core(r, w);
  return value_core(r, compact(r, w));
}

Vector reg_prox(const Regularizer& r, std::span<const double> v, double tau) {
  PDPROX_REQUIRE(tau > 0.0, "reg_prox: tau must be positive");
  check_length(r, v.size());
  if (!has_mask(r)) return prox_core(r, v, tau);
  const Vector p = prox_core(r, compact(r, v), tau);
  Vector out(v.begin(), v.end());
  std::size_t k = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!r.masked(i)) out[i] = p[k++];
  return out;
}

Vector reg_subgradient(const Regularizer& r, std::span<const double> w) {
  check_length(r, w.size());
  if (!has_mask(r)) return subgrad_core(r, w);
  const Vector s = subgrad_core(r, compact(r, w));
  Vector out(w.size(), 0.0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!r.masked(i)) out[i] = s[k++];
  return out;
}

ConjugateValue reg_conjugate(const Regularizer& r, std::span<const double> u) {
  using S = ConjugateValue::Status;
  check_length(r, u.size());
  if (r.kind == RegKind::ExclusiveLasso || r.kind == RegKind::CompositeV) return {S::Unsupported, 0.0};
  for (std::size_t i = 0; i < u.size(); ++i)
    if (r.masked(i) && std::abs(u[i]) > kDualBallSlack) return {S::Infeasible, kInf};
  const Vector c = has_mask(r) ? compact(r, u) : Vector(u.begin(), u.end());
  if (r.kind == RegKind::SquaredL2Half) return {S::Finite, 0.5 * dot(c, c)};
  if (dual_norm_core(r, c) <= 1.0 + kDualBallSlack) return {S::Finite, 0.0};
  return {S::Infeasible, kInf};
}

double dual_norm(const Regularizer& r, std::span<const double> u) {
  check_length(r, u.size());
  if (!has_mask(r)) return dual_norm_core(r, u);
  return dual_norm_core(r, compact(r, u));
}

Vector project_l1_ball(std::span<const double> v, double radius) {
  PDPROX_REQUIRE(radius >= 0.0, "project_l1_ball: radius must be >= 0");
  if (norm1(v) <= radius) return Vector(v.begin(), v.end());
  if (radius == 0.0) return Vector(v.size(), 0.0);
  Vector mags(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) mags[i] = std::abs(v[i]);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  // the largest entry is always active, even when radius underflows it
  double cumulative = mags[0];
  double theta = mags[0] - radius;
  for (std::size_t k = 1; k < mags.size(); ++k) {
    cumulative += mags[k];
    const double t = (cumulative - radius) / static_cast<double>(k + 1);
    if (mags[k] - t > 0.0) theta = t;
  }
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sign(v[i]) * std::max(std::abs(v[i]) - theta, 0.0);
  return out;
}

std::function<double(double)> power_conjugate_derivative(int power) {
  PDPROX_REQUIRE(power == 1 || power == 2, "power_conjugate_derivative: only z and z^2 are supported");
  if (power == 2) return [](double eta) { return 0.5 * eta; };
  return [](double eta) { return eta <= 1.0 ? 0.0 : kInf; };
}

Vector prox_composite_scalar(const Regularizer& inner, const std::function<double(double)>& conj_derivative,
                             std::span<const double> v, double tau) {
  PDPROX_REQUIRE(tau > 0.0, "prox_composite_scalar: tau must be positive");
  PDPROX_REQUIRE(inner.is_norm(), "prox_composite_scalar: inner regularizer must be a norm");
  const double tol = 1e-10 * std::max(1.0, norm2(v));

  Vector w;
  auto residual = [&](double eta) {
    w = prox_core(inner, v, tau * eta);
    return value_core(inner, w) - conj_derivative(eta);
  };

  if (residual(0.0) <= tol) return w;

  double lo = 0.0;
  double hi = 1.0;
  int doublings = 0;
  while (residual(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 200) throw NumericError("prox_composite_scalar: bracket expansion failed");
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = residual(mid);
    if (std::abs(r) <= tol) return w;
    if (r > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-15 * hi) break;
  }
  residual(0.5 * (lo + hi));
  return w;
}

double primal_sparsity(const Regularizer& r, std::span<const double> w) {
  check_length(r, w.size());
  const Vector c = has_mask(r) ? compact(r, w) : Vector(w.begin(), w.end());
  if (c.empty()) return 0.0;
  auto zero_rows = [&](std::size_t rows, std::size_t cols) {
    std::size_t z = 0;
    for (std::size_t j = 0; j < rows; ++j) {
      const auto x = row(c, j, cols);
      if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) ++z;
    }
    return rows == 0 ? 0.0 : static_cast<double>(z) / static_cast<double>(rows);
  };
  const RegKind kind = r.kind == RegKind::CompositeV ? r.inner->kind : r.kind;
  const Regularizer& shape = r.kind == RegKind::CompositeV ? *r.inner : r;
  switch (kind) {
    case RegKind::GroupLasso: {
      std::size_t z = 0;
      for (const auto& g : shape.groups) {
        const Vector x = gather(c, g);
        if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) ++z;
      }
      return shape.groups.empty() ? 0.0 : static_cast<double>(z) / static_cast<double>(shape.groups.size());
    }
    case RegKind::L21Rows:
    case RegKind::L1InfRows:
    case RegKind::ExclusiveLasso: return zero_rows(shape.rows, shape.cols);
    case RegKind::TraceNorm: {
      const ThinSVD svd = thin_svd(DenseMatrix(shape.rows, shape.cols, c));
      if (svd.sigma.empty()) return 0.0;
      const double cut = 1e-10 * std::max(1.0, svd.sigma.front());
      const auto z = std::count_if(svd.sigma.begin(), svd.sigma.end(), [&](double s) { return s <= cut; });
      return static_cast<double>(z) / static_cast<double>(svd.sigma.size());
    }
    default: {
      const auto z = std::count(c.begin(), c.end(), 0.0);
      return static_cast<double>(z) / static_cast<double>(c.size());
    }
  }
}

}  // namespace pdprox
