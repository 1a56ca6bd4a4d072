// pdprox command-line harness: solve, bench, synth, mc.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pdprox/error.hpp"
#include "pdprox/experiment.hpp"

namespace {

using namespace pdprox;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::string g_config_path;  // consumed by expand_config before parsing

void add_config_flag(CLI::App* sub) {
  sub->add_option("--config", g_config_path, "key=value file; keys are flag names, flags on the command line win");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Splices `--key value` tokens from the config file in front of the user's
// own flags. Keys already given on the command line are skipped. Returns
// the arguments in CLI11's reversed order.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  std::set<std::string> given;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      --i;
      continue;
    }
    if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      --i;
      continue;
    }
    if (a.rfind("--", 0) == 0) {
      const auto eq = a.find('=');
      given.insert(a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2));
    }
  }
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw CLI::FileError::Missing(path);
    std::vector<std::string> extra;
    std::string line;
    while (std::getline(in, line)) {
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw CLI::ConversionError("config line without '=': " + t);
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (given.count(key)) continue;
      if (value == "true") {
        extra.push_back("--" + key);
      } else if (value != "false") {
        extra.push_back("--" + key);
        extra.push_back(value);
      }
    }
    // After the subcommand name, before the user's flags.
    const auto at = args.empty() ? args.end() : args.begin() + 1;
    args.insert(at, extra.begin(), extra.end());
  }
  std::reverse(args.begin(), args.end());
  return args;
}

// Common problem/solver flags shared by solve and bench.
struct ProblemArgs {
  std::string data;
  std::string synth;
  std::size_t n = 200;
  std::size_t d = 20;
  double noise = 0.1;
  std::string loss = "hinge";
  double loss_param = 0.0;
  std::size_t outputs = 0;
  std::string reg = "l1";
  std::size_t reg_cols = 1;
  double lambda = 0.01;
  std::string variant = "pdprox-dual";
  double step_scale = 1.0;
  std::optional<double> step_ratio;
  std::size_t iters = 1000;
  double tol = 0.0;
  std::size_t stride = 10;
  double eta0 = 1.0;
  std::vector<double> dual_cap;
  bool bias = false;
  std::uint64_t seed = 0;
  std::string out = "pdprox_out";
};

void add_problem_flags(CLI::App* sub, ProblemArgs& a) {
  sub->add_option("--data", a.data, "libsvm training file");
  sub->add_option("--synth", a.synth, "synthetic data instead of --data")
      ->check(CLI::IsMember({"classification", "regression", "grouped", "multitask"}));
  sub->add_option("--n", a.n, "synthetic examples")->capture_default_str();
  sub->add_option("--d", a.d, "synthetic features")->capture_default_str();
  sub->add_option("--noise", a.noise, "synthetic label noise")->capture_default_str();
  sub->add_option("--loss", a.loss, "loss name")
      ->check(CLI::IsMember({"hinge", "generalized-hinge", "absolute", "eps-insensitive", "piecewise-linear",
                             "l2-multi"}))
      ->capture_default_str();
  sub->add_option("--loss-param", a.loss_param, "slope / epsilon / quantile for parameterized losses");
  sub->add_option("--outputs", a.outputs, "outputs K for l2-multi (defaults to the dataset's)");
  sub->add_option("--reg", a.reg, "regularizer name")
      ->check(CLI::IsMember({"l1", "l2", "linf", "l2sq", "group-lasso", "l21", "l1inf", "exclusive-lasso",
                             "trace", "composite"}))
      ->capture_default_str();
  sub->add_option("--reg-cols", a.reg_cols, "group size / matrix columns for structured regularizers");
  sub->add_option("--lambda", a.lambda, "regularization strength")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--variant", a.variant, "solver")
      ->check(CLI::IsMember({"pdprox-dual", "pdprox-dual-fast", "pdprox-primal", "subgradient", "pegasos"}))
      ->capture_default_str();
  sub->add_option("--step-scale", a.step_scale, "multiplier on gamma = sqrt(1/(2c))")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--step-ratio", a.step_ratio, "two-step scheme with this ratio")->check(CLI::PositiveNumber);
  sub->add_option("--iters", a.iters, "iterations T")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--tol", a.tol, "duality-gap tolerance (0 = run all iterations)")->capture_default_str();
  sub->add_option("--stride", a.stride, "trace every this many iterations")->capture_default_str();
  sub->add_option("--eta0", a.eta0, "subgradient base step")->capture_default_str();
  sub->add_option("--dual-cap", a.dual_cap, "cap m on ||alpha||_1 (repeatable in bench)");
  sub->add_flag("--bias", a.bias, "append a constant feature excluded from the penalty");
  sub->add_option("--seed", a.seed, "synthetic data seed")->capture_default_str();
  sub->add_option("--out", a.out, "output directory")->capture_default_str();
  add_config_flag(sub);
}

std::shared_ptr<const Dataset> load_data(const ProblemArgs& a) {
  if (!a.synth.empty()) {
    return std::make_shared<const Dataset>(gen_synthetic(parse_synth_kind(a.synth), a.n, a.d, a.noise, a.seed));
  }
  if (a.data.empty()) throw ContractViolation("either --data or --synth is required");
  return std::make_shared<const Dataset>(read_libsvm(a.data));
}

LossSpec make_loss(const ProblemArgs& a, const Dataset& ds) {
  LossSpec s;
  s.kind = parse_loss_kind(a.loss);
  s.param = a.loss_param;
  if (s.kind == LossKind::L2MultiOutput) s.outputs = a.outputs ? a.outputs : ds.outputs;
  if (s.kind == LossKind::GeneralizedHinge && a.loss_param == 0.0) s.param = 2.0;
  if (s.kind == LossKind::PiecewiseLinear && a.loss_param == 0.0) s.param = 0.5;
  validate(s);
  return s;
}

SolverRun make_run(const ProblemArgs& a, std::string_view solver) {
  SolverRun run;
  run.kind = parse_solver_kind(solver);
  run.eta0 = a.eta0;
  run.config.max_iters = a.iters;
  run.config.gap_tol = a.tol;
  run.config.trace_stride = a.stride;
  run.config.step = SingleStep{a.step_scale, std::nullopt};
  run.step_ratio = a.step_ratio;
  return run;
}

ExperimentSpec base_spec(const ProblemArgs& a) {
  ExperimentSpec spec;
  spec.data = load_data(a);
  spec.loss = make_loss(a, *spec.data);
  spec.reg = a.reg;
  spec.reg_cols = a.reg_cols;
  spec.lambda = a.lambda;
  spec.bias = a.bias;
  spec.out_dir = a.out;
  spec.seed = a.seed;
  if (!a.dual_cap.empty()) {
    spec.task = TaskKind::SvmDualCap;
    spec.caps = a.dual_cap;
  }
  return spec;
}

int cmd_solve(const ProblemArgs& a) {
  ExperimentSpec spec = base_spec(a);
  spec.solvers.push_back(make_run(a, a.variant));
  print_summary(run_experiment(spec), std::cout);
  return kExitOk;
}

struct BenchArgs {
  std::vector<std::string> solvers{"pdprox-dual", "pdprox-dual-fast", "pdprox-primal"};
  std::string tune = "none";
};

int cmd_bench(ProblemArgs a, const BenchArgs& b) {
  ExperimentSpec spec = base_spec(a);
  if (b.tune == "none") {
    for (const auto& s : b.solvers) spec.solvers.push_back(make_run(a, s));
    print_summary(run_experiment(spec), std::cout);
    return kExitOk;
  }
  // Grid search: one sub-directory per grid point, best per solver reported.
  std::vector<double> grid;
  if (b.tune == "scale") {
    for (int k = -10; k <= 10; ++k) grid.push_back(std::ldexp(1.0, k));
  } else {
    grid = {1000, 100, 10, 1, 0.1, 0.01, 0.001};
  }
  const std::filesystem::path root = a.out;
  ExperimentReport best;
  for (const auto& s : b.solvers) {
    std::optional<ExperimentRow> winner;
    for (double g : grid) {
      ProblemArgs pa = a;
      if (b.tune == "scale") {
        pa.step_scale = g;
        pa.step_ratio.reset();
      } else {
        pa.step_ratio = g;
      }
      ExperimentSpec one = spec;
      one.out_dir = root / (std::string(b.tune) + "_" + format_double(g));
      one.solvers = {make_run(pa, s)};
      ExperimentReport rep;
      try {
        rep = run_experiment(one);
      } catch (const ContractViolation& e) {
        std::cerr << s << " " << b.tune << "=" << format_double(g) << ": " << e.what() << '\n';
        continue;
      }
      for (auto& row : rep.rows) {
        row.label += " " + b.tune + "=" + format_double(g);
        if (!winner || row.objective < winner->objective) winner = row;
      }
    }
    if (winner) best.rows.push_back(*winner);
  }
  print_summary(best, std::cout);
  return kExitOk;
}

struct SynthArgs {
  std::string kind = "classification";
  std::size_t n = 200;
  std::size_t d = 20;
  double noise = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_synth(const SynthArgs& s) {
  write_libsvm(gen_synthetic(parse_synth_kind(s.kind), s.n, s.d, s.noise, s.seed), s.out);
  return kExitOk;
}

struct McArgs {
  std::string triplets;
  std::string loss = "absolute";
  std::vector<double> thresholds{0, 3, 6, 9};
  double lambda = 0.01;
  std::string variant = "pdprox-dual";
  double step_scale = 1.0;
  std::size_t iters = 1000;
  double tol = 0.0;
  std::size_t stride = 10;
  std::string out = "pdprox_out";
};

int cmd_mc(const McArgs& m) {
  ExperimentSpec spec;
  spec.task = TaskKind::MatrixCompletion;
  spec.triplets = read_triplets(m.triplets);
  if (m.loss == "absolute") {
    spec.mc_loss = McAbsolute{};
  } else {
    spec.mc_loss = McHingeThresholds{m.thresholds};
  }
  spec.lambda = m.lambda;
  spec.out_dir = m.out;
  SolverRun run;
  run.kind = parse_solver_kind(m.variant);
  run.config.max_iters = m.iters;
  run.config.gap_tol = m.tol;
  run.config.trace_stride = m.stride;
  run.config.step = SingleStep{m.step_scale, std::nullopt};
  spec.solvers.push_back(run);
  print_summary(run_experiment(spec), std::cout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Primal-dual prox solvers for non-smooth regularized ERM"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  ProblemArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "run one solver and write its trace CSV");
  add_problem_flags(solve_cmd, solve_args);

  ProblemArgs bench_args;
  BenchArgs bench_extra;
  auto* bench_cmd = app.add_subcommand("bench", "run several solvers, optionally over a step grid");
  add_problem_flags(bench_cmd, bench_args);
  bench_cmd->add_option("--solvers", bench_extra.solvers, "solver names")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  bench_cmd->add_option("--tune", bench_extra.tune, "grid search: none, scale (2^-10..2^10) or ratio")
      ->check(CLI::IsMember({"none", "scale", "ratio"}))
      ->capture_default_str();
  bench_cmd->get_option("--dual-cap")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->delimiter(',');

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset in libsvm format");
  synth_cmd->add_option("--kind", synth_args.kind)
      ->check(CLI::IsMember({"classification", "regression", "grouped", "multitask"}))
      ->capture_default_str();
  synth_cmd->add_option("--n", synth_args.n)->capture_default_str();
  synth_cmd->add_option("--d", synth_args.d)->capture_default_str();
  synth_cmd->add_option("--noise", synth_args.noise)->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.seed)->capture_default_str();
  synth_cmd->add_option("--out", synth_args.out, "output libsvm file")->required();
  add_config_flag(synth_cmd);

  McArgs mc_args;
  auto* mc_cmd = app.add_subcommand("mc", "trace-norm matrix completion from triplets");
  mc_cmd->add_option("--triplets", mc_args.triplets, "`row col value` file, 0-based")->required();
  mc_cmd->add_option("--loss", mc_args.loss)
      ->check(CLI::IsMember({"absolute", "hinge-thresholds"}))
      ->capture_default_str();
  mc_cmd->add_option("--thresholds", mc_args.thresholds, "increasing thresholds for hinge-thresholds")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  mc_cmd->add_option("--lambda", mc_args.lambda)->check(CLI::PositiveNumber)->capture_default_str();
  mc_cmd->add_option("--variant", mc_args.variant)
      ->check(CLI::IsMember({"pdprox-dual", "pdprox-dual-fast", "pdprox-primal", "subgradient"}))
      ->capture_default_str();
  mc_cmd->add_option("--step-scale", mc_args.step_scale)->check(CLI::PositiveNumber)->capture_default_str();
  mc_cmd->add_option("--iters", mc_args.iters)->check(CLI::PositiveNumber)->capture_default_str();
  mc_cmd->add_option("--tol", mc_args.tol)->capture_default_str();
  mc_cmd->add_option("--stride", mc_args.stride)->capture_default_str();
  mc_cmd->add_option("--out", mc_args.out)->capture_default_str();
  add_config_flag(mc_cmd);

  try {
    auto args = expand_config(argc, argv);
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve_args);
    if (*bench_cmd) return cmd_bench(bench_args, bench_extra);
    if (*synth_cmd) return cmd_synth(synth_args);
    if (*mc_cmd) return cmd_mc(mc_args);
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
