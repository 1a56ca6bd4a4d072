#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "pdprox/losses.hpp"
#include "pdprox/numerics.hpp"
#include "pdprox/regularizers.hpp"

namespace pdprox {

struct PrimalBox {
  double lo = -1.0;
  double hi = 1.0;
};
struct PrimalBall {
  double radius = 1.0;
};
// Q_w, handled as an indicator added to the regularizer.
using PrimalDomain = std::variant<PrimalBox, PrimalBall>;

// min_w max_alpha F(w, alpha) = L(w, alpha) + lambda R(w).
struct SaddleProblem {
  BilinearForm form;
  DualDomain domain;
  Regularizer reg;
  double lambda = 1.0;
  std::optional<PrimalDomain> primal_domain;
  // Gradient-bound constants: c for the G_alpha bound (Pdprox-dual) and the G_w bound
  // (Pdprox-primal).
  double c_alpha = 0.0;
  double c_w = 0.0;
  // Provenance; needed to rebuild the problem with a bias feature.
  std::optional<LossSpec> loss;
  std::shared_ptr<const Dataset> data;

  std::size_t primal_dim() const { return form.primal_dim(); }
  std::size_t dual_dim() const { return form.dual_dim(); }
};

SaddleProblem make_problem(const LossSpec& loss, std::shared_ptr<const Dataset> data, Regularizer reg,
                           double lambda, std::optional<double> dual_cap = {});

void validate(const SaddleProblem& p);

// Prepends a constant-1 feature, excludes it from the regularizer and
// recomputes c from the enlarged radius sqrt(1 + R^2).
SaddleProblem augment_bias(const SaddleProblem& p);

// F(w, alpha)
double saddle_value(const SaddleProblem& p, std::span<const double> w, std::span<const double> alpha);

// max_{alpha in Q_alpha} F(w, alpha)
double primal_objective(const SaddleProblem& p, std::span<const double> w);

struct DualValue {
  std::optional<double> value;
  // alpha was scaled toward 0 to make the conjugate finite
  bool scaled = false;
  double scale = 1.0;
};

// c0 + <alpha, a> - lambda R*((-b - H alpha) / lambda). When the conjugate
// is an infeasible indicator, alpha is scaled by the largest s in [0, 1]
// that restores feasibility (still a valid lower bound; flagged). Empty
// when R* is unsupported or a primal domain is present.
DualValue dual_objective(const SaddleProblem& p, std::span<const double> alpha);

struct GapValue {
  std::optional<double> gap;
  bool flagged = false;
};

GapValue duality_gap(const SaddleProblem& p, std::span<const double> w, std::span<const double> alpha);

enum class Variant { PdproxDual, PdproxDualFast, PdproxPrimal };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

// gamma = scale * sqrt(1 / (2c))
double default_step_size(double c, double scale = 1.0);

struct SingleStep {
  double scale = 1.0;
  std::optional<double> gamma;  // defaults to sqrt(1 / (2c))
};
// tau for the primal update, sigma for the dual; needs tau * sigma <= 1/c.
struct TwoStep {
  double tau = 0.0;
  double sigma = 0.0;
};
using StepScheme = std::variant<SingleStep, TwoStep>;

// tau = ratio * sqrt(1/c), sigma = sqrt(1/c) / ratio, so tau * sigma = 1/c.
TwoStep two_step_from_ratio(double c, double ratio);

struct IterateView {
  std::size_t iter;
  std::span<const double> w;
  std::span<const double> alpha;
  std::span<const double> w_avg;
  std::span<const double> alpha_avg;
};

struct SolverConfig {
  Variant variant = Variant::PdproxDual;
  StepScheme step = SingleStep{};
  std::size_t max_iters = 1000;
  // Stop once the duality gap of the averaged or last iterates is below
  // this; 0 disables early stopping.
  double gap_tol = 0.0;
  // Trace every `trace_stride` iterations (and the final one); 0 disables.
  std::size_t trace_stride = 1;
  bool bias = false;
  std::function<void(const IterateView&)> observer;
};

struct TraceRecord {
  std::size_t iter = 0;
  double seconds = 0.0;
  double primal = 0.0;
  std::optional<double> dual;
  std::optional<double> gap;
  double primal_sparsity = 0.0;
  double dual_sparsity = 0.0;
  bool gap_flag = false;
};

// Objectives are those of the averaged iterates; sparsity is measured on
// the last iterates. `seconds` is solver time only.
struct SolverTrace {
  std::vector<TraceRecord> records;
};

struct Solution {
  Vector w;      // averaged primal
  Vector alpha;  // averaged dual
  Vector w_last;
  Vector alpha_last;
  std::size_t iterations = 0;
  double primal = 0.0;
  double primal_last = 0.0;
  // best of the averaged and last dual values; gap pairs it with
  // best_objective()
  std::optional<double> dual;
  std::optional<double> gap;
  bool gap_flagged = false;
  bool converged = false;
  double seconds = 0.0;
  std::size_t grad_w_evals = 0;
  std::size_t grad_alpha_evals = 0;

  double best_objective() const { return primal < primal_last ? primal : primal_last; }
};

struct SolveResult {
  Solution solution;
  SolverTrace trace;
};

// Pdprox-dual (two dual copies). PdproxDual projects the auxiliary dual
// point; PdproxDualFast replaces that projection with an extrapolation.
SolveResult solve_pdprox_dual(const SaddleProblem& p, const SolverConfig& cfg);

// Pdprox-primal (two primal copies).
SolveResult solve_pdprox_primal(const SaddleProblem& p, const SolverConfig& cfg);

SolveResult solve(const SaddleProblem& p, const SolverConfig& cfg);

// Fraction of dual blocks that are entirely zero.
double dual_sparsity(const DualDomain& dom, std::span<const double> alpha);

// ---- baselines ----

struct SubgradientConfig {
  double eta0 = 1.0;  // step eta0 / sqrt(t)
  Vector w0;          // empty means zero
  std::size_t trace_stride = 1;
};

// Projected subgradient descent on the primal objective.
SolveResult solve_subgradient(const SaddleProblem& p, std::size_t steps, const SubgradientConfig& cfg = {});

// Deterministic (full-gradient) Pegasos for hinge loss + lambda/2 ||w||^2:
// step 1/(lambda t), then projection onto the ball of radius 1/sqrt(lambda).
// Each iteration is one pass over the data. Trace primal values are those of
// the last iterate (the Pegasos output); the dual column uses the average of
// the margin-violation indicators, which is dual feasible.
SolveResult solve_pegasos(const Dataset& ds, double lambda, std::size_t steps, std::size_t trace_stride = 1);
SolveResult solve_pegasos(const SaddleProblem& p, std::size_t steps, std::size_t trace_stride = 1);

}  // namespace pdprox
