#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pdprox/error.hpp"
#include "pdprox/numerics.hpp"

namespace pdprox {
namespace {

// Column-major working copy; Jacobi rotations act on column pairs.
struct Columns {
  std::size_t rows;
  std::size_t cols;
  Vector data;
  double* col(std::size_t j) { return data.data() + j * rows; }
  const double* col(std::size_t j) const { return data.data() + j * rows; }
};

Columns to_columns(const DenseMatrix& m) {
  Columns c{m.rows, m.cols, Vector(m.rows * m.cols)};
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) c.col(j)[i] = m(i, j);
  return c;
}

// Fill columns flagged in `empty` with unit vectors orthogonal to all others.
void complete_basis(Columns& u, const std::vector<bool>& empty) {
  for (std::size_t j = 0; j < u.cols; ++j) {
    if (!empty[j]) continue;
    for (std::size_t e = 0; e < u.rows; ++e) {
      Vector cand(u.rows, 0.0);
      cand[e] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < u.cols; ++k) {
          if (k == j || (empty[k] && k > j)) continue;
          const double* uk = u.col(k);
          double p = 0.0;
          for (std::size_t i = 0; i < u.rows; ++i) p += uk[i] * cand[i];
          for (std::size_t i = 0; i < u.rows; ++i) cand[i] -= p * uk[i];
        }
      }
      const double nrm = norm2(cand);
      if (nrm > 1e-8) {
        for (std::size_t i = 0; i < u.rows; ++i) u.col(j)[i] = cand[i] / nrm;
        break;
      }
    }
  }
}

ThinSVD jacobi_tall(const DenseMatrix& m, int max_sweeps) {
  const std::size_t rows = m.rows;
  const std::size_t n = m.cols;
  Columns a = to_columns(m);
  Columns v{n, n, Vector(n * n, 0.0)};
  for (std::size_t j = 0; j < n; ++j) v.col(j)[j] = 1.0;

  const double tol = static_cast<double>(std::max<std::size_t>(rows, 1)) * std::numeric_limits<double>::epsilon();
  bool converged = n < 2;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double* ap = a.col(p);
        double* aq = a.col(q);
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
          alpha += ap[i] * ap[i];
          beta += aq[i] * aq[i];
          gamma += ap[i] * aq[i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double x = ap[i];
          const double y = aq[i];
          ap[i] = c * x - s * y;
          aq[i] = s * x + c * y;
        }
        double* vp = v.col(p);
        double* vq = v.col(q);
        for (std::size_t i = 0; i < n; ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) throw NumericError("thin_svd: Jacobi sweeps did not converge");

  Vector sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double* aj = a.col(j);
    sigma[j] = norm2(std::span<const double>(aj, rows));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Columns u{rows, n, Vector(rows * n, 0.0)};
  std::vector<bool> empty(n, false);
  ThinSVD out{DenseMatrix(rows, n), Vector(n), DenseMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = sigma[j];
    if (sigma[j] > std::numeric_limits<double>::min()) {
      for (std::size_t i = 0; i < rows; ++i) u.col(k)[i] = a.col(j)[i] / sigma[j];
    } else {
      out.sigma[k] = 0.0;
      empty[k] = true;
    }
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v.col(j)[i];
  }
  complete_basis(u, empty);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < n; ++k) out.u(i, k) = u.col(k)[i];
  return out;
}

}  // namespace

ThinSVD thin_svd(const DenseMatrix& m, int max_sweeps) {
  for (double x : m.data)
    if (!std::isfinite(x)) throw ContractViolation("thin_svd: non-finite entry");
  if (m.rows >= m.cols) return jacobi_tall(m, max_sweeps);
  ThinSVD t = jacobi_tall(m.transposed(), max_sweeps);
  return ThinSVD{std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

DenseMatrix reconstruct(const ThinSVD& svd) {
  DenseMatrix us = svd.u;
  for (std::size_t i = 0; i < us.rows; ++i)
    for (std::size_t k = 0; k < us.cols; ++k) us(i, k) *= svd.sigma[k];
  return multiply(us, svd.v.transposed());
}

}  // namespace pdprox
