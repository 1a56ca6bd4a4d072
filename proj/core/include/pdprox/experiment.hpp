#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pdprox/losses.hpp"
#include "pdprox/numerics.hpp"
#include "pdprox/regularizers.hpp"
#include "pdprox/solvers.hpp"

namespace pdprox {

// ---- matrix completion ----

struct TripletEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

// Observed entries of a d1 x d2 matrix.
struct TripletData {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<TripletEntry> entries;
};

// Indices in range, no duplicate (row, col), finite values.
void validate(const TripletData& td);

// `row col value` per line, 0-based. Shape defaults to 1 + the largest
// index seen in each direction.
TripletData read_triplets(const std::filesystem::path& path, std::optional<std::size_t> rows = {},
                          std::optional<std::size_t> cols = {});

struct McAbsolute {};
// Ratings are integers 1..L with L = thresholds.size() + 1.
struct McHingeThresholds {
  Vector thresholds;
};
using McLoss = std::variant<McAbsolute, McHingeThresholds>;

// Closed-form loss of prediction x for one observed rating. The threshold
// form uses immediate thresholds:
//   [r > 1] max(0, 1 - (x - theta_{r-1})) + [r < L] max(0, 1 - (theta_r - x)).
double mc_entry_loss(const McLoss& loss, double prediction, double rating);

// Primal: the d1 x d2 matrix, row-major. Absolute: one dual in [-1, 1] per
// entry. Thresholds: L-1 duals in [0, 1] per entry, slot l carrying sign
// +1 when l >= r and -1 below; only the two slots adjacent to the rating
// are coupled, the rest have zero coefficients. Regularizer: trace norm.
SaddleProblem build_matrix_completion_problem(const TripletData& td, const McLoss& loss, double lambda);

// ---- synthetic data ----

enum class SynthKind { Classification, Regression, Grouped, Multitask };

std::string_view to_string(SynthKind kind);
SynthKind parse_synth_kind(std::string_view name);

inline constexpr std::size_t kSynthGroupSize = 5;
inline constexpr std::size_t kSynthOutputs = 3;

// Gaussian rows normalized to unit length; mt19937_64 seeded by `seed`.
//   classification  y = sign(<x, w> + noise * e)
//   regression      y = <x, w> + noise * e
//   grouped         classification with w supported on the first half of
//                   consecutive groups of kSynthGroupSize
//   multitask       kSynthOutputs outputs y_k = <x, w_k> + noise * e_k;
//                   `labels` holds output 0
Dataset gen_synthetic(SynthKind kind, std::size_t n, std::size_t d, double noise, std::uint64_t seed);

// ---- regularizer by name ----

// Vector kinds act on all `dim` coordinates. Matrix kinds (l21, l1inf,
// exclusive-lasso, trace) view w as (dim / cols) x cols; group-lasso uses
// consecutive groups of `cols`. "composite" is ||w||_2^2 via the conjugate
// composite prox.
Regularizer make_regularizer(std::string_view name, std::size_t dim, std::size_t cols);

// ---- traces ----

inline constexpr std::string_view kTraceHeader =
    "iter,seconds,primal_obj,dual_obj,gap,primal_sparsity,dual_sparsity,gap_flag";

// Shortest decimal that round-trips.
std::string format_double(double v);

void write_trace_csv(const SolverTrace& trace, const std::filesystem::path& path);
void write_trace_csv(const SolverTrace& trace, std::ostream& out);
SolverTrace read_trace_csv(const std::filesystem::path& path);
SolverTrace read_trace_csv(std::istream& in);

// ---- experiments ----

enum class TaskKind { Erm, MatrixCompletion, SvmDualCap };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

enum class SolverKind { PdproxDual, PdproxDualFast, PdproxPrimal, Subgradient, Pegasos };

std::string_view to_string(SolverKind kind);
SolverKind parse_solver_kind(std::string_view name);

struct SolverRun {
  SolverKind kind = SolverKind::PdproxDual;
  SolverConfig config;  // iterations, steps, tolerance, stride
  // Overrides config.step with two_step_from_ratio(c, ratio), c taken from
  // the assembled problem.
  std::optional<double> step_ratio;
  double eta0 = 1.0;  // subgradient only
};

struct ExperimentSpec {
  TaskKind task = TaskKind::Erm;
  // erm / svm-dual-cap
  std::shared_ptr<const Dataset> data;
  LossSpec loss = LossSpec::hinge();
  std::string reg = "l1";
  std::size_t reg_cols = 1;
  // matrix completion
  std::optional<TripletData> triplets;
  McLoss mc_loss = McAbsolute{};
  // svm-dual-cap
  std::vector<double> caps;

  double lambda = 0.01;
  bool bias = false;
  std::vector<SolverRun> solvers;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 0;
};

struct ExperimentRow {
  std::string label;
  std::size_t iterations = 0;
  double objective = 0.0;  // min over averaged and last iterates
  std::optional<double> gap;
  double seconds = 0.0;
  double primal_sparsity = 0.0;
  double dual_sparsity = 0.0;
  std::filesystem::path csv;
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;
};

// Runs every solver (and every cap for svm-dual-cap), writing
// `<label>.csv` into out_dir.
ExperimentReport run_experiment(const ExperimentSpec& spec);

void print_summary(const ExperimentReport& report, std::ostream& out);

}  // namespace pdprox
