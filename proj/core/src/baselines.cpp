#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include "pdprox/error.hpp"
#include "pdprox/projections.hpp"
#include "pdprox/solvers.hpp"

namespace pdprox {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Vector mean_of(const Vector& sum, std::size_t t) {
  Vector out = sum;
  for (double& x : out) x /= static_cast<double>(t);
  return out;
}

TraceRecord make_record(const SaddleProblem& p, std::size_t t, double seconds, std::span<const double> w_obj,
                        std::span<const double> a_avg, std::span<const double> w_sparse,
                        std::span<const double> a_sparse) {
  TraceRecord r;
  r.iter = t;
  r.seconds = seconds;
  r.primal = primal_objective(p, w_obj);
  auto d = dual_objective(p, a_avg);
  r.dual = d.value;
  if (d.value) r.gap = r.primal - *d.value;
  r.gap_flag = d.scaled;
  r.primal_sparsity = primal_sparsity(p.reg, w_sparse);
  r.dual_sparsity = dual_sparsity(p.domain, a_sparse);
  return r;
}

void fill_solution(const SaddleProblem& p, Solution& s) {
  s.primal = primal_objective(p, s.w);
  s.primal_last = primal_objective(p, s.w_last);
  auto d = dual_objective(p, s.alpha);
  auto d_last = dual_objective(p, s.alpha_last);
  if (d_last.value && (!d.value || *d_last.value > *d.value)) d = d_last;
  s.dual = d.value;
  s.gap_flagged = d.scaled;
  if (d.value) s.gap = s.best_objective() - *d.value;
}

}  // namespace

SolveResult solve_subgradient(const SaddleProblem& p, std::size_t steps, const SubgradientConfig& cfg) {
  validate(p);
  PDPROX_REQUIRE(cfg.eta0 >= 0.0, "subgradient: eta0 must be >= 0");
  const std::size_t d = p.primal_dim();
  const std::size_t m = p.dual_dim();
  PDPROX_REQUIRE(cfg.w0.empty() || cfg.w0.size() == d, "subgradient: w0 has wrong length");

  SolveResult res;
  Solution& sol = res.solution;
  Vector w = cfg.w0.empty() ? Vector(d, 0.0) : cfg.w0;
  Vector alpha(m, 0.0);
  Vector w_sum(d, 0.0);
  Vector a_sum(m, 0.0);
  double seconds = 0.0;

  for (std::size_t t = 1; t <= steps; ++t) {
    const auto t0 = Clock::now();
    alpha = linear_maximizer(p.domain, partial_grad_alpha(p.form, w));
    Vector g = partial_grad_w(p.form, alpha);
    sol.grad_alpha_evals += 1;
    sol.grad_w_evals += 1;
    axpy(p.lambda, reg_subgradient(p.reg, w), g);
    const double eta = cfg.eta0 / std::sqrt(static_cast<double>(t));
    axpy(-eta, g, w);
    if (p.primal_domain) {
      if (const auto* box = std::get_if<PrimalBox>(&*p.primal_domain)) {
        for (double& x : w) x = std::clamp(x, box->lo, box->hi);
      } else {
        w = project_l2_ball(w, std::get<PrimalBall>(*p.primal_domain).radius);
      }
    }
    axpy(1.0, w, w_sum);
    axpy(1.0, alpha, a_sum);
    seconds += elapsed(t0);

    if (cfg.trace_stride > 0 && (t % cfg.trace_stride == 0 || t == steps)) {
      const Vector wa = mean_of(w_sum, t);
      const Vector aa = mean_of(a_sum, t);
      res.trace.records.push_back(make_record(p, t, seconds, wa, aa, w, alpha));
    }
  }
  sol.iterations = steps;
  sol.seconds = seconds;
  sol.w_last = w;
  sol.alpha_last = alpha;
  sol.w = steps > 0 ? mean_of(w_sum, steps) : w;
  sol.alpha = steps > 0 ? mean_of(a_sum, steps) : alpha;
  fill_solution(p, sol);
  return res;
}

SolveResult solve_pegasos(const SaddleProblem& p, std::size_t steps, std::size_t trace_stride) {
  if (!p.loss || p.loss->kind != LossKind::Hinge || p.reg.kind != RegKind::SquaredL2Half || !p.data ||
      p.domain.global_l1_cap || p.primal_domain ||
      std::any_of(p.reg.passthrough.begin(), p.reg.passthrough.end(), [](bool b) { return b; })) {
    throw Unsupported("pegasos needs hinge loss with lambda/2 ||w||^2 and no extra constraints");
  }
  validate(p);
  PDPROX_REQUIRE(steps >= 1, "pegasos: steps must be >= 1");
  const Dataset& ds = *p.data;
  const SparseMatrix& x = ds.features;
  const std::size_t n = ds.size();
  const std::size_t d = ds.dim();
  const double lam = p.lambda;
  const double radius = 1.0 / std::sqrt(lam);

  SolveResult res;
  Solution& sol = res.solution;
  Vector w(d, 0.0);
  Vector w_sum(d, 0.0);
  Vector ind(n, 0.0);
  Vector a_sum(n, 0.0);
  Vector grad(d);
  double seconds = 0.0;

  for (std::size_t t = 1; t <= steps; ++t) {
    const auto t0 = Clock::now();
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double y = ds.labels[i];
      const bool active = y * x.row_dot(i, w) < 1.0;
      ind[i] = active ? 1.0 : 0.0;
      if (!active) continue;
      auto idx = x.row_indices(i);
      auto val = x.row_values(i);
      for (std::size_t k = 0; k < idx.size(); ++k) grad[idx[k]] += y * val[k];
    }
    const double eta = 1.0 / (lam * static_cast<double>(t));
    const double shrink = 1.0 - eta * lam;
    const double push = eta / static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) w[j] = shrink * w[j] + push * grad[j];
    const double nw = norm2(w);
    if (nw > radius) {
      for (double& v : w) v *= radius / nw;
    }
    ++sol.grad_w_evals;
    axpy(1.0, w, w_sum);
    axpy(1.0, ind, a_sum);
    seconds += elapsed(t0);

    if (trace_stride > 0 && (t % trace_stride == 0 || t == steps)) {
      const Vector aa = mean_of(a_sum, t);
      res.trace.records.push_back(make_record(p, t, seconds, w, aa, w, ind));
    }
  }
  sol.iterations = steps;
  sol.seconds = seconds;
  sol.w_last = w;
  sol.alpha_last = ind;
  sol.w = mean_of(w_sum, steps);
  sol.alpha = mean_of(a_sum, steps);
  fill_solution(p, sol);
  return res;
}

SolveResult solve_pegasos(const Dataset& ds, double lambda, std::size_t steps, std::size_t trace_stride) {
  auto data = std::make_shared<const Dataset>(ds);
  SaddleProblem p = make_problem(LossSpec::hinge(), std::move(data), Regularizer::squared_l2_half(), lambda);
  return solve_pegasos(p, steps, trace_stride);
}

}  // namespace pdprox
