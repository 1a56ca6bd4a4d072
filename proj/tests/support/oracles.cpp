#include "oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace oracle {

namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
  Eigen::MatrixXd e(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return e;
}

}  // namespace

Vector singular_values(const DenseMatrix& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(m));
  const auto& s = svd.singularValues();
  return Vector(s.data(), s.data() + s.size());
}

double max_eig_gram(const DenseMatrix& m) {
  const Eigen::MatrixXd e = to_eigen(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e.transpose() * e);
  return es.eigenvalues().maxCoeff();
}

Vector dense_product(const DenseMatrix& m, std::span<const double> x) {
  Vector y(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) y[i] += m(i, j) * x[j];
  return y;
}

Vector box_halfspace_enumeration(std::span<const double> target, double cap, std::span<const double> w,
                                 double rho) {
  const std::size_t n = target.size();
  std::size_t patterns = 1;
  for (std::size_t i = 0; i < n; ++i) patterns *= 3;
  Vector best(n, 0.0);
  double best_dist = std::numeric_limits<double>::infinity();
  std::vector<int> state(n);
  Vector cand(n);
  auto consider = [&](const Vector& x) {
    double lin = 0.0, dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (x[i] < -1e-13 || x[i] > cap + 1e-13) return;
      lin += w[i] * x[i];
      dist += (x[i] - target[i]) * (x[i] - target[i]);
    }
    if (lin > rho * (1 + 1e-12) + 1e-13) return;
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  };
  for (std::size_t code = 0; code < patterns; ++code) {
    std::size_t c = code;
    for (std::size_t i = 0; i < n; ++i, c /= 3) state[i] = static_cast<int>(c % 3);  // 0 lower, 1 upper, 2 free
    // inactive linear constraint
    for (std::size_t i = 0; i < n; ++i) cand[i] = state[i] == 0 ? 0.0 : state[i] == 1 ? cap : target[i];
    consider(cand);
    // active: free coordinates are target - eta w
    double fixed = 0.0, free_t = 0.0, free_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i] == 1) fixed += w[i] * cap;
      if (state[i] == 2) {
        free_t += w[i] * target[i];
        free_w += w[i] * w[i];
      }
    }
    if (free_w == 0.0) continue;
    const double eta = (fixed + free_t - rho) / free_w;
    for (std::size_t i = 0; i < n; ++i) cand[i] = state[i] == 0 ? 0.0 : state[i] == 1 ? cap : target[i] - eta * w[i];
    consider(cand);
  }
  return best;
}

Vector l1_ball_bisection(std::span<const double> v, double radius) {
  double l1 = 0.0;
  double hi = 0.0;
  for (double x : v) {
    l1 += std::abs(x);
    hi = std::max(hi, std::abs(x));
  }
  Vector out(v.begin(), v.end());
  if (l1 <= radius) return out;
  double lo = 0.0;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    double s = 0.0;
    for (double x : v) s += std::max(0.0, std::abs(x) - mid);
    (s > radius ? lo : hi) = mid;
  }
  const double th = 0.5 * (lo + hi);
  for (double& x : out) x = std::copysign(std::max(0.0, std::abs(x) - th), x);
  return out;
}

SubgradResult subgradient_minimize(const std::function<double(std::span<const double>)>& phi,
                                   const std::function<Vector(std::span<const double>)>& subgrad,
                                   const std::vector<Vector>& starts, double mu, std::size_t iters) {
  SubgradResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    Vector x = s;
    Vector avg(x.size(), 0.0);
    double wsum = 0.0;
    for (std::size_t t = 1; t <= iters; ++t) {
      const double f = phi(x);
      if (f < best.value) {
        best.value = f;
        best.x = x;
      }
      const Vector g = subgrad(x);
      const double step = 2.0 / (mu * static_cast<double>(t + 1));
      for (std::size_t i = 0; i < x.size(); ++i) x[i] -= step * g[i];
      // weighted averaging with weights t
      const double wt = static_cast<double>(t);
      wsum += wt;
      for (std::size_t i = 0; i < x.size(); ++i) avg[i] += (wt / wsum) * (x[i] - avg[i]);
    }
    const double fa = phi(avg);
    if (fa < best.value) {
      best.value = fa;
      best.x = avg;
    }
  }
  return best;
}

double polygon_linear_max(std::span<const double> g, const std::vector<std::array<double, 3>>& hp) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hp.size(); ++i) {
    for (std::size_t j = i + 1; j < hp.size(); ++j) {
      const double det = hp[i][0] * hp[j][1] - hp[i][1] * hp[j][0];
      if (std::abs(det) < 1e-14) continue;
      const double x = (hp[i][2] * hp[j][1] - hp[i][1] * hp[j][2]) / det;
      const double y = (hp[i][0] * hp[j][2] - hp[i][2] * hp[j][0]) / det;
      bool ok = true;
      for (const auto& h : hp) ok = ok && h[0] * x + h[1] * y <= h[2] + 1e-12;
      if (ok) best = std::max(best, g[0] * x + g[1] * y);
    }
  }
  return best;
}

Vector svm_dual_coordinate_descent(const pdprox::Dataset& ds, double lambda, double tol, std::size_t max_epochs) {
  const std::size_t n = ds.size();
  const double c = 1.0 / (lambda * static_cast<double>(n));
  const auto& x = ds.features;
  Vector alpha(n, 0.0);
  Vector w(ds.dim(), 0.0);
  Vector qii(n);
  for (std::size_t i = 0; i < n; ++i) qii[i] = x.row_norm(i) * x.row_norm(i);
  for (std::size_t ep = 0; ep < max_epochs; ++ep) {
    double max_pg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (qii[i] == 0.0) continue;
      const double y = ds.labels[i];
      const double g = y * x.row_dot(i, w) - 1.0;
      double pg = g;
      if (alpha[i] == 0.0) pg = std::min(g, 0.0);
      if (alpha[i] == c) pg = std::max(g, 0.0);
      max_pg = std::max(max_pg, std::abs(pg));
      if (pg == 0.0) continue;
      const double old = alpha[i];
      alpha[i] = std::clamp(old - g / qii[i], 0.0, c);
      const double delta = (alpha[i] - old) * y;
      auto idx = x.row_indices(i);
      auto val = x.row_values(i);
      for (std::size_t k = 0; k < idx.size(); ++k) w[idx[k]] += delta * val[k];
    }
    if (max_pg < tol) break;
  }
  // w = sum alpha_i y_i x_i solves min 1/2||w||^2 + C sum hinge, which has
  // the same minimizer as the normalized objective.
  return w;
}

Vector central_difference(const std::function<double(std::span<const double>)>& f, std::span<const double> x,
                          double h) {
  Vector g(x.size());
  Vector xp(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = xp[i];
    xp[i] = orig + h;
    const double fp = f(xp);
    xp[i] = orig - h;
    const double fm = f(xp);
    xp[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Vector gaussian_vector(std::mt19937_64& rng, std::size_t n, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(n);
  for (double& x : v) x = g(rng);
  return v;
}

DenseMatrix gaussian_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  DenseMatrix m(r, c);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double& x : m.data) x = g(rng);
  return m;
}

pdprox::SparseMatrix random_sparse(std::mt19937_64& rng, std::size_t r, std::size_t c, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  DenseMatrix m(r, c);
  for (double& x : m.data)
    if (u(rng) < density) x = g(rng);
  return pdprox::SparseMatrix::from_dense(m);
}

namespace {

double l1n(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}
double l2n(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}
double linfn(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s = std::max(s, std::abs(v));
  return s;
}
double sgn(double x) { return static_cast<double>((x > 0) - (x < 0)); }

void unit_direction(std::span<const double> x, std::span<double> out, double weight) {
  const double n = l2n(x);
  if (n == 0.0) return;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = weight * x[i] / n;
}

// e_k * sign at the largest-magnitude entry
void linf_direction(std::span<const double> x, std::span<double> out) {
  if (x.empty()) return;
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (std::abs(x[i]) > std::abs(x[best])) best = i;
  out[best] = sgn(x[best]);
}

}  // namespace

double regularizer_value(const pdprox::Regularizer& r, std::span<const double> w) {
  using pdprox::RegKind;
  switch (r.kind) {
    case RegKind::L1: return l1n(w);
    case RegKind::L2Norm: return l2n(w);
    case RegKind::LInf: return linfn(w);
    case RegKind::SquaredL2Half: return 0.5 * l2n(w) * l2n(w);
    case RegKind::GroupLasso: {
      double s = 0.0;
      for (std::size_t g = 0; g < r.groups.size(); ++g) {
        double q = 0.0;
        for (auto i : r.groups[g]) q += w[i] * w[i];
        s += r.group_weights[g] * std::sqrt(q);
      }
      return s;
    }
    case RegKind::L21Rows:
    case RegKind::L1InfRows:
    case RegKind::ExclusiveLasso: {
      double s = 0.0;
      for (std::size_t j = 0; j < r.rows; ++j) {
        auto row = w.subspan(j * r.cols, r.cols);
        s += r.kind == RegKind::L21Rows ? l2n(row) : r.kind == RegKind::L1InfRows ? linfn(row) : l1n(row) * l1n(row);
      }
      return s;
    }
    case RegKind::TraceNorm: {
      double s = 0.0;
      for (double v : singular_values(DenseMatrix(r.rows, r.cols, Vector(w.begin(), w.end())))) s += v;
      return s;
    }
    case RegKind::CompositeV: {
      const double z = regularizer_value(*r.inner, w);
      return r.power == 1 ? z : z * z;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Vector regularizer_subgradient(const pdprox::Regularizer& r, std::span<const double> w) {
  using pdprox::RegKind;
  Vector g(w.size(), 0.0);
  switch (r.kind) {
    case RegKind::L1:
      for (std::size_t i = 0; i < w.size(); ++i) g[i] = sgn(w[i]);
      break;
    case RegKind::L2Norm: unit_direction(w, g, 1.0); break;
    case RegKind::LInf: linf_direction(w, g); break;
    case RegKind::SquaredL2Half: g.assign(w.begin(), w.end()); break;
    case RegKind::GroupLasso:
      for (std::size_t k = 0; k < r.groups.size(); ++k) {
        Vector sub, out;
        for (auto i : r.groups[k]) sub.push_back(w[i]);
        out.assign(sub.size(), 0.0);
        unit_direction(sub, out, r.group_weights[k]);
        for (std::size_t t = 0; t < sub.size(); ++t) g[r.groups[k][t]] = out[t];
      }
      break;
    case RegKind::L21Rows:
    case RegKind::L1InfRows:
    case RegKind::ExclusiveLasso:
      for (std::size_t j = 0; j < r.rows; ++j) {
        auto row = w.subspan(j * r.cols, r.cols);
        std::span<double> out(g.data() + j * r.cols, r.cols);
        if (r.kind == RegKind::L21Rows) {
          unit_direction(row, out, 1.0);
        } else if (r.kind == RegKind::L1InfRows) {
          linf_direction(row, out);
        } else {
          const double z = l1n(row);
          for (std::size_t t = 0; t < row.size(); ++t) out[t] = 2.0 * z * sgn(row[t]);
        }
      }
      break;
    case RegKind::TraceNorm: {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(DenseMatrix(r.rows, r.cols, Vector(w.begin(), w.end()))),
                                            Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& s = svd.singularValues();
      Eigen::MatrixXd uv = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r.rows), static_cast<Eigen::Index>(r.cols));
      for (Eigen::Index k = 0; k < s.size(); ++k)
        if (s(k) > 1e-14 * std::max(1.0, s(0))) uv += svd.matrixU().col(k) * svd.matrixV().col(k).transpose();
      for (std::size_t i = 0; i < r.rows; ++i)
        for (std::size_t j = 0; j < r.cols; ++j)
          g[i * r.cols + j] = uv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      break;
    }
    case RegKind::CompositeV: {
      g = regularizer_subgradient(*r.inner, w);
      if (r.power == 2) {
        const double z = regularizer_value(*r.inner, w);
        for (double& v : g) v *= 2.0 * z;
      }
      break;
    }
  }
  return g;
}

double regularizer_dual_norm(const pdprox::Regularizer& r, std::span<const double> u) {
  using pdprox::RegKind;
  switch (r.kind) {
    case RegKind::L1: return linfn(u);
    case RegKind::L2Norm: return l2n(u);
    case RegKind::LInf: return l1n(u);
    case RegKind::GroupLasso: {
      double s = 0.0;
      for (std::size_t g = 0; g < r.groups.size(); ++g) {
        double q = 0.0;
        for (auto i : r.groups[g]) q += u[i] * u[i];
        s = std::max(s, std::sqrt(q) / r.group_weights[g]);
      }
      return s;
    }
    case RegKind::L21Rows:
    case RegKind::L1InfRows: {
      double s = 0.0;
      for (std::size_t j = 0; j < r.rows; ++j) {
        auto row = u.subspan(j * r.cols, r.cols);
        s = std::max(s, r.kind == RegKind::L21Rows ? l2n(row) : l1n(row));
      }
      return s;
    }
    case RegKind::TraceNorm: {
      auto sv = singular_values(DenseMatrix(r.rows, r.cols, Vector(u.begin(), u.end())));
      return sv.empty() ? 0.0 : *std::max_element(sv.begin(), sv.end());
    }
    default: return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace oracle
