#pragma once

#include <span>

#include "pdprox/losses.hpp"
#include "pdprox/numerics.hpp"

namespace pdprox {

// Coordinate-wise clamp onto [lo, hi].
Vector project_box(std::span<const double> v, double lo, double hi);

struct BoxLinearProjection {
  Vector point;
  double eta = 0.0;  // multiplier of the linear constraint; 0 when inactive
};

// Projection onto {alpha in [0, cap]^n : <weights, alpha> <= rho} as
// alpha_i = clamp(target_i - eta * weights_i, 0, cap), with eta found by
// bisection on the (non-increasing) constraint residual.
BoxLinearProjection project_box_linear(std::span<const double> target, double cap, std::span<const double> weights,
                                       double rho);

Vector project_l2_ball(std::span<const double> v, double radius);

// Euclidean projection onto Q_alpha.
Vector project_dual_domain(const DualDomain& dom, std::span<const double> target);

bool is_feasible(const DualDomain& dom, std::span<const double> alpha, double tol = 1e-9);

// max_{alpha in Q_alpha} <alpha, g>  (support function of the domain).
double support_value(const DualDomain& dom, std::span<const double> g);

// A maximizer of <alpha, g> over Q_alpha. Ties prefer the smaller |alpha|.
Vector linear_maximizer(const DualDomain& dom, std::span<const double> g);

}  // namespace pdprox
