#include "pdprox/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include "pdprox/error.hpp"

namespace pdprox {

namespace {

std::size_t rating_level(double rating, std::size_t levels) {
  const double r = std::round(rating);
  PDPROX_REQUIRE(std::abs(rating - r) < 1e-12 && r >= 1.0 && r <= static_cast<double>(levels),
                 "rating outside the level range 1..L");
  return static_cast<std::size_t>(r);
}

void check_thresholds(const Vector& th) {
  PDPROX_REQUIRE(!th.empty(), "threshold loss needs at least one threshold");
  for (std::size_t l = 1; l < th.size(); ++l)
    PDPROX_REQUIRE(th[l - 1] < th[l], "thresholds must be strictly increasing");
}

}  // namespace

void validate(const TripletData& td) {
  PDPROX_REQUIRE(td.rows >= 1 && td.cols >= 1, "triplet matrix shape must be positive");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& e : td.entries) {
    PDPROX_REQUIRE(e.row < td.rows && e.col < td.cols, "triplet index out of range");
    PDPROX_REQUIRE(std::isfinite(e.value), "triplet value must be finite");
    PDPROX_REQUIRE(seen.emplace(e.row, e.col).second, "duplicate triplet entry");
  }
}

TripletData read_triplets(const std::filesystem::path& path, std::optional<std::size_t> rows,
                          std::optional<std::size_t> cols) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open triplet file: " + path.string());
  TripletData td;
  std::string line;
  std::size_t lineno = 0;
  std::size_t max_r = 0;
  std::size_t max_c = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    TripletEntry e;
    long long r = -1;
    long long c = -1;
    if (!(ss >> r >> c >> e.value) || r < 0 || c < 0) throw ParseError("malformed triplet", lineno);
    std::string rest;
    if (ss >> rest) throw ParseError("trailing content after triplet", lineno);
    e.row = static_cast<std::size_t>(r);
    e.col = static_cast<std::size_t>(c);
    max_r = std::max(max_r, e.row + 1);
    max_c = std::max(max_c, e.col + 1);
    td.entries.push_back(e);
  }
  td.rows = rows.value_or(max_r);
  td.cols = cols.value_or(max_c);
  validate(td);
  return td;
}

double mc_entry_loss(const McLoss& loss, double prediction, double rating) {
  if (std::holds_alternative<McAbsolute>(loss)) return std::abs(prediction - rating);
  const Vector& th = std::get<McHingeThresholds>(loss).thresholds;
  check_thresholds(th);
  const std::size_t levels = th.size() + 1;
  const std::size_t r = rating_level(rating, levels);
  double out = 0.0;
  if (r > 1) out += std::max(0.0, 1.0 - (prediction - th[r - 2]));
  if (r < levels) out += std::max(0.0, 1.0 - (th[r - 1] - prediction));
  return out;
}

SaddleProblem build_matrix_completion_problem(const TripletData& td, const McLoss& loss, double lambda) {
  validate(td);
  PDPROX_REQUIRE(!td.entries.empty(), "matrix completion needs at least one observed entry");
  const std::size_t n = td.entries.size();
  const std::size_t dim = td.rows * td.cols;
  const double inv = 1.0 / static_cast<double>(n);

  // One selector row per observed entry.
  std::vector<std::size_t> offsets(n + 1);
  std::vector<std::size_t> cols(n);
  for (std::size_t i = 0; i < n; ++i) {
    offsets[i + 1] = i + 1;
    cols[i] = td.entries[i].row * td.cols + td.entries[i].col;
  }
  auto rows = std::make_shared<const SparseMatrix>(n, dim, std::move(offsets), std::move(cols), Vector(n, 1.0));

  SaddleProblem p;
  double c = 0.0;
  if (std::holds_alternative<McAbsolute>(loss)) {
    p.form.a.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.form.a[i] = -td.entries[i].value * inv;
    p.form.h = CouplingOperator(rows, 1, 1, Vector(n, inv));
    p.domain.block = BoxBlock{-1.0, 1.0, 1};
    c = inv * inv;
  } else {
    const Vector& th = std::get<McHingeThresholds>(loss).thresholds;
    check_thresholds(th);
    const std::size_t k = th.size();
    const std::size_t levels = k + 1;
    p.form.a.assign(n * k, 0.0);
    Vector coef(n * k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = rating_level(td.entries[i].value, levels);
      double sq = 0.0;
      for (std::size_t l = 1; l <= k; ++l) {
        if (l + 1 != r && l != r) continue;
        const double s = l >= r ? 1.0 : -1.0;
        p.form.a[i * k + l - 1] = (1.0 - s * th[l - 1]) * inv;
        coef[i * k + l - 1] = s * inv;
        sq += inv * inv;
      }
      c = std::max(c, sq);
    }
    p.form.h = CouplingOperator(rows, k, 1, std::move(coef));
    p.domain.block = BoxBlock{0.0, 1.0, k};
  }
  p.domain.blocks = n;
  p.form.b.assign(dim, 0.0);
  // Entries occupy distinct coordinates, so H H^T is diagonal and the
  // largest row energy is ||H||^2 exactly.
  p.c_alpha = c;
  p.c_w = c;
  p.reg = Regularizer::trace_norm(td.rows, td.cols);
  p.lambda = lambda;
  validate(p);
  return p;
}

std::string_view to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::Classification: return "classification";
    case SynthKind::Regression: return "regression";
    case SynthKind::Grouped: return "grouped";
    case SynthKind::Multitask: return "multitask";
  }
  return "?";
}

SynthKind parse_synth_kind(std::string_view name) {
  for (auto k : {SynthKind::Classification, SynthKind::Regression, SynthKind::Grouped, SynthKind::Multitask})
    if (name == to_string(k)) return k;
  throw ContractViolation("unknown synthetic kind: " + std::string(name));
}

Dataset gen_synthetic(SynthKind kind, std::size_t n, std::size_t d, double noise, std::uint64_t seed) {
  PDPROX_REQUIRE(n >= 1 && d >= 1, "gen_synthetic: n and d must be >= 1");
  PDPROX_REQUIRE(noise >= 0.0, "gen_synthetic: noise must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::size_t outputs = kind == SynthKind::Multitask ? kSynthOutputs : 1;
  Vector w_true(d * outputs);
  for (auto& v : w_true) v = gauss(rng);
  if (kind == SynthKind::Grouped) {
    const std::size_t groups = (d + kSynthGroupSize - 1) / kSynthGroupSize;
    for (std::size_t j = 0; j < d; ++j)
      if (j / kSynthGroupSize >= (groups + 1) / 2) w_true[j] = 0.0;
  }

  DenseMatrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      x(i, j) = gauss(rng);
      sq += x(i, j) * x(i, j);
    }
    const double nr = std::sqrt(sq);
    if (nr == 0.0) {
      x(i, 0) = 1.0;
      continue;
    }
    for (std::size_t j = 0; j < d; ++j) x(i, j) /= nr;
  }

  Dataset ds;
  ds.features = SparseMatrix::from_dense(x);
  ds.labels.resize(n);
  if (kind == SynthKind::Multitask) {
    ds.outputs = outputs;
    ds.multi_labels.resize(n * outputs);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < outputs; ++k) {
      double z = 0.0;
      for (std::size_t j = 0; j < d; ++j) z += x(i, j) * w_true[j * outputs + k];
      z += noise * gauss(rng);
      if (kind == SynthKind::Multitask) {
        ds.multi_labels[i * outputs + k] = z;
      } else if (kind == SynthKind::Regression) {
        ds.labels[i] = z;
      } else {
        ds.labels[i] = z >= 0.0 ? 1.0 : -1.0;
      }
    }
    if (kind == SynthKind::Multitask) ds.labels[i] = ds.multi_labels[i * outputs];
  }
  validate(ds);
  return ds;
}

Regularizer make_regularizer(std::string_view name, std::size_t dim, std::size_t cols) {
  PDPROX_REQUIRE(dim >= 1, "regularizer dimension must be >= 1");
  PDPROX_REQUIRE(cols >= 1, "regularizer column count must be >= 1");
  Regularizer r;
  if (name == "l1") {
    r = Regularizer::l1();
  } else if (name == "l2") {
    r = Regularizer::l2_norm();
  } else if (name == "linf") {
    r = Regularizer::linf();
  } else if (name == "l2sq") {
    r = Regularizer::squared_l2_half();
  } else if (name == "composite") {
    r = Regularizer::composite(Regularizer::l2_norm(), 2);
  } else if (name == "group-lasso") {
    std::vector<std::size_t> sizes(dim / cols, cols);
    if (dim % cols != 0) sizes.push_back(dim % cols);
    r = Regularizer::group_lasso_sizes(sizes);
  } else {
    PDPROX_REQUIRE(dim % cols == 0, "matrix regularizer: dimension is not a multiple of the column count");
    const std::size_t rows = dim / cols;
    if (name == "l21") {
      r = Regularizer::l21_rows(rows, cols);
    } else if (name == "l1inf") {
      r = Regularizer::l1inf_rows(rows, cols);
    } else if (name == "exclusive-lasso") {
      r = Regularizer::exclusive_lasso(rows, cols);
    } else if (name == "trace") {
      r = Regularizer::trace_norm(rows, cols);
    } else {
      throw ContractViolation("unknown regularizer: " + std::string(name));
    }
  }
  validate(r, dim);
  return r;
}

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Erm: return "erm";
    case TaskKind::MatrixCompletion: return "matrix-completion";
    case TaskKind::SvmDualCap: return "svm-dual-cap";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view name) {
  for (auto k : {TaskKind::Erm, TaskKind::MatrixCompletion, TaskKind::SvmDualCap})
    if (name == to_string(k)) return k;
  throw ContractViolation("unknown task: " + std::string(name));
}

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::PdproxDual: return "pdprox-dual";
    case SolverKind::PdproxDualFast: return "pdprox-dual-fast";
    case SolverKind::PdproxPrimal: return "pdprox-primal";
    case SolverKind::Subgradient: return "subgradient";
    case SolverKind::Pegasos: return "pegasos";
  }
  return "?";
}

SolverKind parse_solver_kind(std::string_view name) {
  for (auto k : {SolverKind::PdproxDual, SolverKind::PdproxDualFast, SolverKind::PdproxPrimal,
                 SolverKind::Subgradient, SolverKind::Pegasos})
    if (name == to_string(k)) return k;
  throw ContractViolation("unknown solver: " + std::string(name));
}

namespace {

SolveResult run_one(const SaddleProblem& p, const SolverRun& run) {
  switch (run.kind) {
    case SolverKind::PdproxDual:
    case SolverKind::PdproxDualFast:
    case SolverKind::PdproxPrimal: {
      SolverConfig cfg = run.config;
      cfg.variant = run.kind == SolverKind::PdproxDual       ? Variant::PdproxDual
                    : run.kind == SolverKind::PdproxDualFast ? Variant::PdproxDualFast
                                                             : Variant::PdproxPrimal;
      if (run.step_ratio) {
        const double c = cfg.variant == Variant::PdproxPrimal ? p.c_w : p.c_alpha;
        cfg.step = two_step_from_ratio(c, *run.step_ratio);
      }
      return solve(p, cfg);
    }
    case SolverKind::Subgradient: {
      SubgradientConfig sc;
      sc.eta0 = run.eta0;
      sc.trace_stride = run.config.trace_stride;
      return solve_subgradient(p, run.config.max_iters, sc);
    }
    case SolverKind::Pegasos:
      return solve_pegasos(p, run.config.max_iters, run.config.trace_stride);
  }
  throw ContractViolation("unknown solver kind");
}

ExperimentRow summarize(const std::string& label, const SolveResult& r, const std::filesystem::path& csv) {
  ExperimentRow row;
  row.label = label;
  row.iterations = r.solution.iterations;
  row.objective = r.solution.best_objective();
  row.gap = r.solution.gap;
  row.seconds = r.solution.seconds;
  row.csv = csv;
  if (!r.trace.records.empty()) {
    row.primal_sparsity = r.trace.records.back().primal_sparsity;
    row.dual_sparsity = r.trace.records.back().dual_sparsity;
  }
  return row;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  PDPROX_REQUIRE(!spec.solvers.empty(), "experiment lists no solvers");
  std::filesystem::create_directories(spec.out_dir);

  std::vector<std::pair<std::string, SaddleProblem>> problems;
  switch (spec.task) {
    case TaskKind::Erm: {
      PDPROX_REQUIRE(spec.data != nullptr, "erm task needs a dataset");
      const bool multi = spec.loss.kind == LossKind::L2MultiOutput;
      const std::size_t dim = spec.data->dim() * (multi ? spec.loss.outputs : 1);
      SaddleProblem p =
          make_problem(spec.loss, spec.data, make_regularizer(spec.reg, dim, spec.reg_cols), spec.lambda);
      if (spec.bias) p = augment_bias(p);
      problems.emplace_back("", std::move(p));
      break;
    }
    case TaskKind::MatrixCompletion:
      PDPROX_REQUIRE(spec.triplets.has_value(), "matrix-completion task needs triplets");
      problems.emplace_back("", build_matrix_completion_problem(*spec.triplets, spec.mc_loss, spec.lambda));
      break;
    case TaskKind::SvmDualCap: {
      PDPROX_REQUIRE(spec.data != nullptr, "svm-dual-cap task needs a dataset");
      PDPROX_REQUIRE(!spec.caps.empty(), "svm-dual-cap task needs at least one cap");
      const std::size_t dim = spec.data->dim();
      for (double m : spec.caps) {
        SaddleProblem p =
            make_problem(LossSpec::hinge(), spec.data, make_regularizer(spec.reg, dim, spec.reg_cols), spec.lambda, m);
        if (spec.bias) p = augment_bias(p);
        problems.emplace_back("_m" + format_double(m), std::move(p));
      }
      break;
    }
  }

  ExperimentReport report;
  for (const auto& [suffix, p] : problems) {
    for (const auto& run : spec.solvers) {
      const std::string label = std::string(to_string(run.kind)) + suffix;
      SolveResult r = run_one(p, run);
      const auto csv = spec.out_dir / (label + ".csv");
      write_trace_csv(r.trace, csv);
      report.rows.push_back(summarize(label, r, csv));
    }
  }
  return report;
}

void print_summary(const ExperimentReport& report, std::ostream& out) {
  out << std::left << std::setw(28) << "solver" << std::right << std::setw(10) << "iters" << std::setw(16)
      << "objective" << std::setw(14) << "gap" << std::setw(11) << "seconds" << std::setw(10) << "p-sparse"
      << std::setw(10) << "d-sparse" << '\n';
  for (const auto& r : report.rows) {
    out << std::left << std::setw(28) << r.label << std::right << std::setw(10) << r.iterations
        << std::setw(16) << std::setprecision(9) << r.objective << std::setw(14) << std::setprecision(4);
    if (r.gap) {
      out << *r.gap;
    } else {
      out << "-";
    }
    out << std::setw(11) << std::setprecision(4) << r.seconds << std::setw(10) << std::setprecision(3)
        << r.primal_sparsity << std::setw(10) << r.dual_sparsity << '\n';
  }
}

}  // namespace pdprox
