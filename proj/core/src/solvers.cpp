#include "pdprox/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

#include "pdprox/error.hpp"
#include "pdprox/projections.hpp"

namespace pdprox {

namespace {

using Clock = std::chrono::steady_clock;

void project_primal(const std::optional<PrimalDomain>& dom, Vector& w) {
  if (!dom) return;
  if (const auto* box = std::get_if<PrimalBox>(&*dom)) {
    for (double& x : w) x = std::clamp(x, box->lo, box->hi);
  } else {
    w = project_l2_ball(w, std::get<PrimalBall>(*dom).radius);
  }
}

bool zero_vector(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

bool has_mask(const Regularizer& r) {
  return std::any_of(r.passthrough.begin(), r.passthrough.end(), [](bool b) { return b; });
}

struct Steps {
  double tau = 0.0;
  double sigma = 0.0;
};

Steps resolve_steps(const SaddleProblem& p, const SolverConfig& cfg) {
  const double c = cfg.variant == Variant::PdproxPrimal ? p.c_w : p.c_alpha;
  if (const auto* single = std::get_if<SingleStep>(&cfg.step)) {
    PDPROX_REQUIRE(single->scale > 0.0, "step scale must be positive");
    double gamma = single->gamma ? single->scale * *single->gamma : default_step_size(c, single->scale);
    PDPROX_REQUIRE(gamma > 0.0 && std::isfinite(gamma), "step size must be positive and finite");
    return {gamma, gamma};
  }
  const auto& two = std::get<TwoStep>(cfg.step);
  PDPROX_REQUIRE(two.tau > 0.0 && two.sigma > 0.0, "two-step sizes must be positive");
  PDPROX_REQUIRE(two.tau * two.sigma * c <= 1.0 + 1e-12, "infeasible two-step pair: tau * sigma > 1/c");
  return {two.tau, two.sigma};
}

Vector scaled(std::span<const double> sum, double t) {
  Vector out(sum.begin(), sum.end());
  for (double& x : out) x /= t;
  return out;
}

class Recorder {
 public:
  Recorder(const SaddleProblem& p, const SolverConfig& cfg) : p_(p), cfg_(cfg) {}

  bool due(std::size_t t) const {
    return cfg_.trace_stride > 0 && (t % cfg_.trace_stride == 0 || t == cfg_.max_iters);
  }

  TraceRecord record(std::size_t t, double seconds, std::span<const double> w_avg,
                     std::span<const double> a_avg, std::span<const double> w_last,
                     std::span<const double> a_last) const {
    TraceRecord r;
    r.iter = t;
    r.seconds = seconds;
    r.primal = primal_objective(p_, w_avg);
    auto d = dual_objective(p_, a_avg);
    r.dual = d.value;
    if (d.value) r.gap = r.primal - *d.value;
    r.gap_flag = d.scaled;
    r.primal_sparsity = primal_sparsity(p_.reg, w_last);
    r.dual_sparsity = dual_sparsity(p_.domain, a_last);
    return r;
  }

 private:
  const SaddleProblem& p_;
  const SolverConfig& cfg_;
};

// Early-stopping state: gap test when a dual is available, otherwise
// relative change of the averaged objective over 100 iterations.
class StopRule {
 public:
  StopRule(const SaddleProblem& p, const SolverConfig& cfg) : p_(p), cfg_(cfg) {}

  bool enabled() const { return cfg_.gap_tol > 0.0; }

  bool check(std::size_t t, std::span<const double> w_avg, std::span<const double> a_avg,
             std::span<const double> w_last, std::span<const double> a_last) {
    const std::size_t every = cfg_.trace_stride > 0 ? cfg_.trace_stride : 100;
    if (!enabled() || t % every != 0) return false;
    auto g_avg = duality_gap(p_, w_avg, a_avg);
    auto g_last = duality_gap(p_, w_last, a_last);
    if (g_avg.gap || g_last.gap) {
      double g = std::numeric_limits<double>::infinity();
      if (g_avg.gap) g = std::min(g, *g_avg.gap);
      if (g_last.gap) g = std::min(g, *g_last.gap);
      return g <= cfg_.gap_tol;
    }
    if (t % 100 != 0) return false;
    const double f = primal_objective(p_, w_avg);
    const bool stop = has_last_ && std::abs(f - last_) < 1e-9 * std::max(1.0, std::abs(f));
    last_ = f;
    has_last_ = true;
    return stop;
  }

 private:
  const SaddleProblem& p_;
  const SolverConfig& cfg_;
  double last_ = 0.0;
  bool has_last_ = false;
};

struct Running {
  Vector w_sum;
  Vector a_sum;
  void add(std::span<const double> w, std::span<const double> a) {
    axpy(1.0, w, w_sum);
    axpy(1.0, a, a_sum);
  }
};

void finish(const SaddleProblem& p, Solution& s, const Running& run, std::size_t t) {
  const double T = static_cast<double>(std::max<std::size_t>(t, 1));
  s.iterations = t;
  s.w = scaled(run.w_sum, T);
  s.alpha = scaled(run.a_sum, T);
  if (t == 0) {
    s.w = s.w_last;
    s.alpha = s.alpha_last;
  }
  s.primal = primal_objective(p, s.w);
  s.primal_last = primal_objective(p, s.w_last);
  auto d = dual_objective(p, s.alpha);
  auto d_last = dual_objective(p, s.alpha_last);
  if (d_last.value && (!d.value || *d_last.value > *d.value)) d = d_last;
  s.dual = d.value;
  s.gap_flagged = d.scaled;
  if (d.value) s.gap = s.best_objective() - *d.value;
}

void notify(const SolverConfig& cfg, std::size_t t, std::span<const double> w, std::span<const double> a,
            const Running& run) {
  if (!cfg.observer) return;
  const double T = static_cast<double>(t);
  Vector wa = scaled(run.w_sum, T);
  Vector aa = scaled(run.a_sum, T);
  cfg.observer(IterateView{t, w, a, wa, aa});
}

}  // namespace

SaddleProblem make_problem(const LossSpec& loss, std::shared_ptr<const Dataset> data, Regularizer reg,
                           double lambda, std::optional<double> dual_cap) {
  PDPROX_REQUIRE(data != nullptr, "dataset is null");
  SaddleProblem p;
  auto bp = bilinear_build(loss, data);
  p.form = std::move(bp.form);
  p.domain = std::move(bp.domain);
  if (dual_cap) {
    PDPROX_REQUIRE(*dual_cap > 0.0, "dual cap m must be positive");
    p.domain.global_l1_cap = *dual_cap;
  }
  p.reg = std::move(reg);
  p.lambda = lambda;
  p.c_alpha = lipschitz_c(loss, *data, LipschitzSide::GradAlpha);
  p.c_w = lipschitz_c(loss, *data, LipschitzSide::GradW);
  p.loss = loss;
  p.data = std::move(data);
  validate(p);
  return p;
}

void validate(const SaddleProblem& p) {
  PDPROX_REQUIRE(p.lambda > 0.0 && std::isfinite(p.lambda), "lambda must be positive");
  PDPROX_REQUIRE(p.form.dual_dim() == p.domain.size(), "dual dimension does not match the dual domain");
  PDPROX_REQUIRE(p.form.h.primal_dim() == p.primal_dim(), "coupling operator rows do not match b");
  PDPROX_REQUIRE(p.form.h.dual_dim() == p.dual_dim(), "coupling operator columns do not match a");
  PDPROX_REQUIRE(p.c_alpha >= 0.0 && p.c_w >= 0.0, "Lipschitz constants must be nonnegative");
  validate(p.reg, p.primal_dim());
  if (p.domain.global_l1_cap) {
    const auto* box = std::get_if<BoxBlock>(&p.domain.block);
    if (box == nullptr || box->lo != 0.0 || box->size != 1) {
      throw Unsupported("global l1 cap requires scalar nonnegative box dual blocks");
    }
  }
  if (p.primal_domain) {
    if (const auto* box = std::get_if<PrimalBox>(&*p.primal_domain)) {
      PDPROX_REQUIRE(box->lo <= 0.0 && 0.0 <= box->hi, "primal box must contain the origin");
      if (p.reg.kind != RegKind::L1 && p.reg.kind != RegKind::SquaredL2Half) {
        throw Unsupported("primal box domain supports only l1 and l2sq regularizers");
      }
    } else {
      PDPROX_REQUIRE(std::get<PrimalBall>(*p.primal_domain).radius >= 0.0, "primal ball radius must be >= 0");
      if (p.reg.kind != RegKind::L2Norm && p.reg.kind != RegKind::SquaredL2Half) {
        throw Unsupported("primal ball domain supports only l2 and l2sq regularizers");
      }
    }
    if (has_mask(p.reg)) throw Unsupported("primal domain with a passthrough mask");
  }
}

SaddleProblem augment_bias(const SaddleProblem& p) {
  if (!p.loss || !p.data) throw Unsupported("bias augmentation needs a dataset-backed problem");
  if (p.loss->kind == LossKind::L2MultiOutput || p.reg.rows > 0) {
    throw Unsupported("bias augmentation is defined for vector-primal problems only");
  }
  const Dataset& src = *p.data;
  const SparseMatrix& x = src.features;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  Vector vals;
  cols.reserve(x.nnz() + x.rows());
  vals.reserve(x.nnz() + x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    cols.push_back(0);
    vals.push_back(1.0);
    auto idx = x.row_indices(i);
    auto v = x.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      cols.push_back(idx[k] + 1);
      vals.push_back(v[k]);
    }
    offsets.push_back(cols.size());
  }
  auto aug = std::make_shared<Dataset>();
  aug->features = SparseMatrix(x.rows(), x.cols() + 1, std::move(offsets), std::move(cols), std::move(vals));
  aug->labels = src.labels;
  aug->outputs = src.outputs;
  aug->multi_labels = src.multi_labels;

  Regularizer reg = p.reg;
  std::vector<bool> mask(x.cols() + 1, false);
  mask[0] = true;
  for (std::size_t j = 0; j < p.reg.passthrough.size() && j < x.cols(); ++j) mask[j + 1] = p.reg.passthrough[j];
  reg.passthrough = std::move(mask);
  std::optional<double> cap = p.domain.global_l1_cap;
  SaddleProblem out = make_problem(*p.loss, aug, std::move(reg), p.lambda, cap);
  out.primal_domain = p.primal_domain;
  validate(out);
  return out;
}

double saddle_value(const SaddleProblem& p, std::span<const double> w, std::span<const double> alpha) {
  return p.form.value(w, alpha) + p.lambda * reg_value(p.reg, w);
}

double primal_objective(const SaddleProblem& p, std::span<const double> w) {
  PDPROX_REQUIRE(w.size() == p.primal_dim(), "primal vector has wrong length");
  Vector g = partial_grad_alpha(p.form, w);
  return p.form.c0 + dot(w, p.form.b) + support_value(p.domain, g) + p.lambda * reg_value(p.reg, w);
}

DualValue dual_objective(const SaddleProblem& p, std::span<const double> alpha) {
  PDPROX_REQUIRE(alpha.size() == p.dual_dim(), "dual vector has wrong length");
  if (p.primal_domain) return {};
  const Vector ha = p.form.h.apply(alpha);
  const double lam = p.lambda;
  auto u_at = [&](double s) {
    Vector u(ha.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = -(p.form.b[i] + s * ha[i]) / lam;
    return u;
  };
  const double lin = dot(alpha, p.form.a);
  auto full = reg_conjugate(p.reg, u_at(1.0));
  if (full.status == ConjugateValue::Status::Unsupported) return {};
  if (full.finite()) return {p.form.c0 + lin - lam * full.value, false, 1.0};

  auto base = reg_conjugate(p.reg, u_at(0.0));
  if (!base.finite()) return {std::nullopt, true, 0.0};

  double s = -1.0;
  if (p.reg.is_norm() && zero_vector(p.form.b) && !has_mask(p.reg)) {
    const double dn = dual_norm(p.reg, u_at(1.0));
    if (dn > 0.0 && std::isfinite(dn)) {
      double cand = std::min(1.0, 1.0 / dn);
      if (reg_conjugate(p.reg, u_at(cand)).finite()) s = cand;
    }
  }
  if (s < 0.0) {
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (reg_conjugate(p.reg, u_at(mid)).finite()) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    s = lo;
  }
  auto c = reg_conjugate(p.reg, u_at(s));
  return {p.form.c0 + s * lin - lam * c.value, true, s};
}

GapValue duality_gap(const SaddleProblem& p, std::span<const double> w, std::span<const double> alpha) {
  auto d = dual_objective(p, alpha);
  if (!d.value) return {std::nullopt, d.scaled};
  return {primal_objective(p, w) - *d.value, d.scaled};
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::PdproxDual:
      return "pdprox-dual";
    case Variant::PdproxDualFast:
      return "pdprox-dual-fast";
    case Variant::PdproxPrimal:
      return "pdprox-primal";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::PdproxDual, Variant::PdproxDualFast, Variant::PdproxPrimal}) {
    if (name == to_string(v)) return v;
  }
  throw ContractViolation("unknown solver variant: " + std::string(name));
}

double default_step_size(double c, double scale) {
  PDPROX_REQUIRE(c > 0.0 && std::isfinite(c), "Lipschitz constant c must be positive");
  PDPROX_REQUIRE(scale > 0.0, "step scale must be positive");
  return scale * std::sqrt(1.0 / (2.0 * c));
}

TwoStep two_step_from_ratio(double c, double ratio) {
  PDPROX_REQUIRE(c > 0.0 && std::isfinite(c), "Lipschitz constant c must be positive");
  PDPROX_REQUIRE(ratio > 0.0 && std::isfinite(ratio), "step ratio must be positive");
  const double g0 = std::sqrt(1.0 / c);
  return {ratio * g0, g0 / ratio};
}

double dual_sparsity(const DualDomain& dom, std::span<const double> alpha) {
  const std::size_t k = dom.block_size();
  if (dom.blocks == 0 || k == 0) return 0.0;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < dom.blocks; ++i) {
    if (zero_vector(alpha.subspan(i * k, k))) ++zeros;
  }
  return static_cast<double>(zeros) / static_cast<double>(dom.blocks);
}

SolveResult solve_pdprox_dual(const SaddleProblem& p, const SolverConfig& cfg) {
  if (cfg.variant == Variant::PdproxPrimal) throw ContractViolation("solve_pdprox_dual: variant is pdprox-primal");
  PDPROX_REQUIRE(cfg.max_iters >= 1, "max_iters must be >= 1");
  validate(p);
  const Steps st = resolve_steps(p, cfg);
  const bool fast = cfg.variant == Variant::PdproxDualFast;
  const std::size_t d = p.primal_dim();
  const std::size_t m = p.dual_dim();
  const double prox_tau = st.tau * p.lambda;

  SolveResult res;
  Solution& sol = res.solution;
  Recorder rec(p, cfg);
  StopRule stop(p, cfg);
  Running run{Vector(d, 0.0), Vector(m, 0.0)};

  Vector w(d, 0.0);
  Vector beta(m, 0.0);
  Vector alpha(m, 0.0);
  Vector step(m);
  Vector v(d);
  double seconds = 0.0;

  auto t0 = Clock::now();
  Vector ga_prev = partial_grad_alpha(p.form, w);
  ++sol.grad_alpha_evals;
  seconds += std::chrono::duration<double>(Clock::now() - t0).count();

  std::size_t t = 0;
  while (t < cfg.max_iters) {
    ++t;
    t0 = Clock::now();
    for (std::size_t i = 0; i < m; ++i) step[i] = beta[i] + st.sigma * ga_prev[i];
    alpha = project_dual_domain(p.domain, step);
    Vector gw = partial_grad_w(p.form, alpha);
    ++sol.grad_w_evals;
    for (std::size_t j = 0; j < d; ++j) v[j] = w[j] - st.tau * gw[j];
    w = reg_prox(p.reg, v, prox_tau);
    project_primal(p.primal_domain, w);
    Vector ga = partial_grad_alpha(p.form, w);
    ++sol.grad_alpha_evals;
    if (fast) {
      for (std::size_t i = 0; i < m; ++i) beta[i] = alpha[i] + st.sigma * (ga[i] - ga_prev[i]);
    } else {
      for (std::size_t i = 0; i < m; ++i) step[i] = beta[i] + st.sigma * ga[i];
      beta = project_dual_domain(p.domain, step);
    }
    ga_prev = std::move(ga);
    run.add(w, alpha);
    seconds += std::chrono::duration<double>(Clock::now() - t0).count();

    notify(cfg, t, w, alpha, run);
    if (rec.due(t) || stop.enabled()) {
      Vector wa = scaled(run.w_sum, static_cast<double>(t));
      Vector aa = scaled(run.a_sum, static_cast<double>(t));
      if (rec.due(t)) res.trace.records.push_back(rec.record(t, seconds, wa, aa, w, alpha));
      if (stop.check(t, wa, aa, w, alpha)) {
        sol.converged = true;
        break;
      }
    }
  }
  if (sol.converged && cfg.trace_stride > 0 &&
      (res.trace.records.empty() || res.trace.records.back().iter != t)) {
    Vector wa = scaled(run.w_sum, static_cast<double>(t));
    Vector aa = scaled(run.a_sum, static_cast<double>(t));
    res.trace.records.push_back(rec.record(t, seconds, wa, aa, w, alpha));
  }
  sol.w_last = std::move(w);
  sol.alpha_last = std::move(alpha);
  sol.seconds = seconds;
  finish(p, sol, run, t);
  return res;
}

SolveResult solve_pdprox_primal(const SaddleProblem& p, const SolverConfig& cfg) {
  if (cfg.variant != Variant::PdproxPrimal) throw ContractViolation("solve_pdprox_primal: variant is not pdprox-primal");
  PDPROX_REQUIRE(cfg.max_iters >= 1, "max_iters must be >= 1");
  validate(p);
  const Steps st = resolve_steps(p, cfg);
  const std::size_t d = p.primal_dim();
  const std::size_t m = p.dual_dim();
  const double prox_tau = st.tau * p.lambda;

  SolveResult res;
  Solution& sol = res.solution;
  Recorder rec(p, cfg);
  StopRule stop(p, cfg);
  Running run{Vector(d, 0.0), Vector(m, 0.0)};

  Vector u(d, 0.0);
  Vector w(d, 0.0);
  Vector alpha(m, 0.0);
  Vector v(d);
  Vector step(m);
  double seconds = 0.0;

  auto t0 = Clock::now();
  Vector gw_prev = partial_grad_w(p.form, alpha);
  ++sol.grad_w_evals;
  seconds += std::chrono::duration<double>(Clock::now() - t0).count();

  std::size_t t = 0;
  while (t < cfg.max_iters) {
    ++t;
    t0 = Clock::now();
    for (std::size_t j = 0; j < d; ++j) v[j] = u[j] - st.tau * gw_prev[j];
    w = reg_prox(p.reg, v, prox_tau);
    project_primal(p.primal_domain, w);
    Vector ga = partial_grad_alpha(p.form, w);
    ++sol.grad_alpha_evals;
    for (std::size_t i = 0; i < m; ++i) step[i] = alpha[i] + st.sigma * ga[i];
    alpha = project_dual_domain(p.domain, step);
    Vector gw = partial_grad_w(p.form, alpha);
    ++sol.grad_w_evals;
    for (std::size_t j = 0; j < d; ++j) u[j] = w[j] + st.tau * (gw_prev[j] - gw[j]);
    gw_prev = std::move(gw);
    run.add(w, alpha);
    seconds += std::chrono::duration<double>(Clock::now() - t0).count();

    notify(cfg, t, w, alpha, run);
    if (rec.due(t) || stop.enabled()) {
      Vector wa = scaled(run.w_sum, static_cast<double>(t));
      Vector aa = scaled(run.a_sum, static_cast<double>(t));
      if (rec.due(t)) res.trace.records.push_back(rec.record(t, seconds, wa, aa, w, alpha));
      if (stop.check(t, wa, aa, w, alpha)) {
        sol.converged = true;
        break;
      }
    }
  }
  if (sol.converged && cfg.trace_stride > 0 &&
      (res.trace.records.empty() || res.trace.records.back().iter != t)) {
    Vector wa = scaled(run.w_sum, static_cast<double>(t));
    Vector aa = scaled(run.a_sum, static_cast<double>(t));
    res.trace.records.push_back(rec.record(t, seconds, wa, aa, w, alpha));
  }
  sol.w_last = std::move(w);
  sol.alpha_last = std::move(alpha);
  sol.seconds = seconds;
  finish(p, sol, run, t);
  return res;
}

SolveResult solve(const SaddleProblem& p, const SolverConfig& cfg) {
  if (cfg.bias) {
    SaddleProblem aug = augment_bias(p);
    SolverConfig inner = cfg;
    inner.bias = false;
    return solve(aug, inner);
  }
  if (cfg.variant == Variant::PdproxPrimal) return solve_pdprox_primal(p, cfg);
  return solve_pdprox_dual(p, cfg);
}

}  // namespace pdprox
