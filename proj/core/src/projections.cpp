#include "pdprox/projections.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pdprox/error.hpp"

namespace pdprox {
namespace {

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

double box_linear_residual(std::span<const double> target, double cap, std::span<const double> weights, double rho,
                           double eta) {
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) s += clamp(target[i] - eta * weights[i], 0.0, cap) * weights[i];
  return s - rho;
}

// Greedy (fractional knapsack) maximizer of <alpha, g> over
// {0 <= alpha <= cap, <weights, alpha> <= rho}.
void knapsack_maximizer(std::span<const double> g, double cap, std::span<const double> weights, double rho,
                        std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] > 0.0) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return g[x] / weights[x] > g[y] / weights[y]; });
  double budget = rho;
  for (std::size_t i : order) {
    if (budget <= 0.0) break;
    const double take = std::min(cap, budget / weights[i]);
    out[i] = take;
    budget -= take * weights[i];
  }
}

void check_box_linear(double cap, std::span<const double> weights, double rho) {
  PDPROX_REQUIRE(cap > 0.0, "box-linear domain: cap must be positive");
  PDPROX_REQUIRE(rho > 0.0, "box-linear domain: rho must be positive");
  for (double w : weights) PDPROX_REQUIRE(w > 0.0, "box-linear domain: weights must be positive");
}

// Validates the global cap combination and returns the box upper end.
double capped_box_hi(const DualDomain& dom) {
  const auto* box = std::get_if<BoxBlock>(&dom.block);
  if (box == nullptr || box->lo != 0.0 || box->size != 1)
    throw Unsupported("global l1 cap is only supported over scalar [0, hi] box blocks");
  PDPROX_REQUIRE(*dom.global_l1_cap > 0.0, "global l1 cap must be positive");
  return box->hi;
}

}  // namespace

Vector project_box(std::span<const double> v, double lo, double hi) {
  PDPROX_REQUIRE(lo <= hi, "project_box: lo must not exceed hi");
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = clamp(v[i], lo, hi);
  return out;
}

BoxLinearProjection project_box_linear(std::span<const double> target, double cap, std::span<const double> weights,
                                       double rho) {
  PDPROX_REQUIRE(target.size() == weights.size(), "project_box_linear: weights length mismatch");
  check_box_linear(cap, weights, rho);

  BoxLinearProjection out{project_box(target, 0.0, cap), 0.0};
  if (dot(out.point, weights) <= rho) return out;

  // residual(0) > 0; residual(hi) = -rho since every coordinate clamps to 0
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) hi = std::max(hi, target[i] / weights[i]);
  const double tol = 1e-10 * std::max(1.0, rho);
  double r_lo = box_linear_residual(target, cap, weights, rho, lo);
  double r_hi = -rho;
  double eta = hi;
  bool exact = false;
  for (int it = 0; it < 500 && !exact; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = box_linear_residual(target, cap, weights, rho, mid);
    if (r > 0.0) {
      lo = mid;
      r_lo = r;
    } else {
      hi = mid;
      r_hi = r;
      if (r >= -tol) {
        eta = mid;
        exact = true;
      }
    }
    if (hi - lo <= 1e-16 * hi) break;
  }
  if (!exact) {
    // The residual is piecewise linear in eta; a secant step lands on the
    // root when the bracket lies inside one piece. Keep the feasible side.
    eta = hi;
    if (hi > lo && r_lo > 0.0 && r_hi < 0.0) {
      const double cand = lo + (hi - lo) * r_lo / (r_lo - r_hi);
      const double r = box_linear_residual(target, cap, weights, rho, cand);
      if (r <= 0.0 && r > r_hi) eta = cand;
    }
  }
  out.eta = eta;
  for (std::size_t i = 0; i < target.size(); ++i) out.point[i] = clamp(target[i] - eta * weights[i], 0.0, cap);
  return out;
}

Vector project_l2_ball(std::span<const double> v, double radius) {
  PDPROX_REQUIRE(radius >= 0.0, "project_l2_ball: radius must be >= 0");
  Vector out(v.begin(), v.end());
  const double nrm = norm2(v);
  if (nrm <= radius) return out;
  const double s = radius / nrm;
  for (double& x : out) x *= s;
  return out;
}

Vector project_dual_domain(const DualDomain& dom, std::span<const double> target) {
  PDPROX_REQUIRE(target.size() == dom.size(), "project_dual_domain: length mismatch");
  if (dom.global_l1_cap) {
    const double hi = capped_box_hi(dom);
    const Vector ones(target.size(), 1.0);
    return project_box_linear(target, hi, ones, *dom.global_l1_cap).point;
  }
  const std::size_t k = dom.block_size();
  Vector out(target.size());
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        for (std::size_t i = 0; i < dom.blocks; ++i) {
          const auto in = target.subspan(i * k, k);
          Vector p;
          if constexpr (std::is_same_v<T, BoxBlock>)
            p = project_box(in, b.lo, b.hi);
          else if constexpr (std::is_same_v<T, BoxLinearBlock>)
            p = project_box_linear(in, b.cap, b.weights, b.rho).point;
          else
            p = project_l2_ball(in, b.radius);
          std::copy(p.begin(), p.end(), out.begin() + static_cast<std::ptrdiff_t>(i * k));
        }
      },
      dom.block);
  return out;
}

bool is_feasible(const DualDomain& dom, std::span<const double> alpha, double tol) {
  if (alpha.size() != dom.size()) return false;
  const std::size_t k = dom.block_size();
  for (std::size_t i = 0; i < dom.blocks; ++i) {
    const auto a = alpha.subspan(i * k, k);
    const bool ok = std::visit(
        [&](const auto& b) {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, BoxBlock>) {
            return std::all_of(a.begin(), a.end(), [&](double x) { return x >= b.lo - tol && x <= b.hi + tol; });
          } else if constexpr (std::is_same_v<T, BoxLinearBlock>) {
            const bool box =
                std::all_of(a.begin(), a.end(), [&](double x) { return x >= -tol && x <= b.cap + tol; });
            return box && dot(a, b.weights) <= b.rho * (1.0 + tol) + tol;
          } else {
            return norm2(a) <= b.radius * (1.0 + tol) + tol;
          }
        },
        dom.block);
    if (!ok) return false;
  }
  if (dom.global_l1_cap && norm1(alpha) > *dom.global_l1_cap * (1.0 + tol) + tol) return false;
  return true;
}

Vector linear_maximizer(const DualDomain& dom, std::span<const double> g) {
  PDPROX_REQUIRE(g.size() == dom.size(), "linear_maximizer: length mismatch");
  Vector out(g.size(), 0.0);
  if (dom.global_l1_cap) {
    const double hi = capped_box_hi(dom);
    const Vector ones(g.size(), 1.0);
    knapsack_maximizer(g, hi, ones, *dom.global_l1_cap, out);
    return out;
  }
  const std::size_t k = dom.block_size();
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        for (std::size_t i = 0; i < dom.blocks; ++i) {
          const auto gi = g.subspan(i * k, k);
          auto oi = std::span<double>(out).subspan(i * k, k);
          if constexpr (std::is_same_v<T, BoxBlock>) {
            for (std::size_t j = 0; j < k; ++j)
              oi[j] = gi[j] > 0.0 ? b.hi : (gi[j] < 0.0 ? b.lo : clamp(0.0, b.lo, b.hi));
          } else if constexpr (std::is_same_v<T, BoxLinearBlock>) {
            knapsack_maximizer(gi, b.cap, b.weights, b.rho, oi);
          } else {
            const double nrm = norm2(gi);
            if (nrm > 0.0)
              for (std::size_t j = 0; j < k; ++j) oi[j] = b.radius * gi[j] / nrm;
          }
        }
      },
      dom.block);
  return out;
}

double support_value(const DualDomain& dom, std::span<const double> g) {
  return dot(linear_maximizer(dom, g), g);
}

}  // namespace pdprox
