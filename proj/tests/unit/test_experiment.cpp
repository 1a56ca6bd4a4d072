#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "pdprox/error.hpp"
#include "pdprox/experiment.hpp"

using namespace pdprox;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("pdprox_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// Drops the seconds column.
std::string without_seconds(const std::string& csv) {
  std::string out;
  for (const auto& line : lines_of(csv)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    out += line.substr(0, a) + line.substr(b) + "\n";
  }
  return out;
}

// Immediate-threshold loss, ratings 1..L.
double ref_threshold_loss(const Vector& th, double x, int r) {
  const int L = static_cast<int>(th.size()) + 1;
  double s = 0;
  if (r > 1) s += std::max(0.0, 1 - (x - th[r - 2]));
  if (r < L) s += std::max(0.0, 1 - (th[r - 1] - x));
  return s;
}

}  // namespace

TEST(Triplets, ReadAndShape) {
  auto dir = scratch_dir("triplets");
  std::ofstream(dir / "t.txt") << "0 0 1.5\n2 1 -3\n\n1 3 4\n";
  auto td = read_triplets(dir / "t.txt");
  EXPECT_EQ(td.rows, 3u);
  EXPECT_EQ(td.cols, 4u);
  ASSERT_EQ(td.entries.size(), 3u);
  EXPECT_EQ(td.entries[1].row, 2u);
  EXPECT_EQ(td.entries[1].value, -3.0);
  auto wide = read_triplets(dir / "t.txt", 5, 6);
  EXPECT_EQ(wide.rows, 5u);
  EXPECT_THROW(read_triplets(dir / "t.txt", 2, 6), ContractViolation);
}

TEST(Triplets, Errors) {
  auto dir = scratch_dir("triplets_err");
  std::ofstream(dir / "bad.txt") << "0 0 1\n0 x 2\n";
  try {
    read_triplets(dir / "bad.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::ofstream(dir / "trail.txt") << "0 0 1 7\n";
  EXPECT_THROW(read_triplets(dir / "trail.txt"), ParseError);
  std::ofstream(dir / "neg.txt") << "-1 0 1\n";
  EXPECT_THROW(read_triplets(dir / "neg.txt"), ParseError);
  std::ofstream(dir / "dup.txt") << "0 0 1\n0 0 2\n";
  EXPECT_THROW(read_triplets(dir / "dup.txt"), ContractViolation);
  EXPECT_THROW(read_triplets(dir / "missing.txt"), std::runtime_error);
}

TEST(MatrixCompletion, SingleEntryAbsolute) {
  TripletData td{1, 1, {{0, 0, 2.0}}};
  auto p = build_matrix_completion_problem(td, McAbsolute{}, 0.1);
  EXPECT_EQ(p.reg.kind, RegKind::TraceNorm);
  EXPECT_NEAR(primal_objective(p, Vector{5.0}) - 0.1 * 5.0, 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(mc_entry_loss(McAbsolute{}, 5.0, 2.0), 3.0);
}

TEST(MatrixCompletion, ThresholdsPassThrough) {
  McHingeThresholds h{{0, 3, 6, 9}};
  EXPECT_DOUBLE_EQ(mc_entry_loss(h, 4.5, 3), ref_threshold_loss(h.thresholds, 4.5, 3));
  EXPECT_DOUBLE_EQ(mc_entry_loss(h, 4.5, 3), 0.0);
  EXPECT_DOUBLE_EQ(mc_entry_loss(h, 0.0, 5), 10.0);
  EXPECT_THROW(mc_entry_loss(h, 0.0, 6), ContractViolation);
  EXPECT_THROW(mc_entry_loss(h, 0.0, 2.5), ContractViolation);
  EXPECT_THROW(mc_entry_loss(McHingeThresholds{{1, 0}}, 0.0, 1), ContractViolation);
}

TEST(MatrixCompletion, ThresholdLossZeroExactlyOnCorrectSide) {
  const Vector th{0, 3, 6, 9};
  McHingeThresholds h{th};
  for (int r = 1; r <= 5; ++r) {
    for (double x = -3; x <= 12; x += 0.25) {
      const double l = mc_entry_loss(h, x, r);
      EXPECT_GE(l, 0.0);
      const bool above = r == 1 || x >= th[r - 2] + 1;
      const bool below = r == 5 || x <= th[r - 1] - 1;
      EXPECT_EQ(l == 0.0, above && below) << r << " " << x;
    }
  }
}

TEST(MatrixCompletion, DualFormExactness) {
  TripletData td{3, 3, {{0, 0, 1}, {1, 2, 3}, {2, 1, 5}, {2, 2, 4}}};
  const Vector th{0, 3, 6, 9};
  std::mt19937_64 rng(51);
  for (int which = 0; which < 2; ++which) {
    McLoss loss = which ? McLoss{McHingeThresholds{th}} : McLoss{McAbsolute{}};
    auto p = build_matrix_completion_problem(td, loss, 0.1);
    const std::size_t k = p.domain.block_size();
    for (int rep = 0; rep < 50; ++rep) {
      auto w = oracle::gaussian_vector(rng, 9, 5.0);
      auto g = partial_grad_alpha(p.form, w);
      for (std::size_t e = 0; e < td.entries.size(); ++e) {
        const auto& ent = td.entries[e];
        const auto& box = std::get<BoxBlock>(p.domain.block);
        double block = 0;
        for (std::size_t l = 0; l < k; ++l) block += std::max(box.lo * g[e * k + l], box.hi * g[e * k + l]);
        const double x = w[ent.row * 3 + ent.col];
        const double ref = which ? ref_threshold_loss(th, x, static_cast<int>(ent.value)) : std::abs(x - ent.value);
        EXPECT_NEAR(4.0 * block, ref, 1e-9);
      }
    }
  }
}

TEST(MatrixCompletion, ConstantBoundsCoupling) {
  TripletData td{3, 3, {{0, 0, 1}, {1, 2, 3}, {2, 1, 5}, {2, 2, 4}, {0, 2, 2}}};
  for (int which = 0; which < 2; ++which) {
    McLoss loss = which ? McLoss{McHingeThresholds{{0, 3, 6, 9}}} : McLoss{McAbsolute{}};
    auto p = build_matrix_completion_problem(td, loss, 0.1);
    const std::size_t m = p.dual_dim();
    DenseMatrix h(9, m);
    Vector e(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      e[j] = 1;
      auto col = p.form.h.apply(e);
      for (std::size_t i = 0; i < 9; ++i) h(i, j) = col[i];
      e[j] = 0;
    }
    EXPECT_NEAR(p.c_alpha, oracle::max_eig_gram(h), 1e-12);
  }
}

TEST(MatrixCompletion, RatingOutOfRangeRejected) {
  TripletData td{2, 2, {{0, 0, 6}}};
  EXPECT_THROW(build_matrix_completion_problem(td, McHingeThresholds{{0, 3, 6, 9}}, 0.1), ContractViolation);
  TripletData dup{2, 2, {{0, 0, 1}, {0, 0, 2}}};
  EXPECT_THROW(build_matrix_completion_problem(dup, McAbsolute{}, 0.1), ContractViolation);
}

TEST(Synthetic, Deterministic) {
  for (auto kind : {SynthKind::Classification, SynthKind::Regression, SynthKind::Grouped, SynthKind::Multitask}) {
    auto a = gen_synthetic(kind, 40, 10, 0.2, 99), b = gen_synthetic(kind, 40, 10, 0.2, 99);
    EXPECT_EQ(a.features.to_dense().data, b.features.to_dense().data);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_EQ(a.multi_labels, b.multi_labels);
    auto c = gen_synthetic(kind, 40, 10, 0.2, 100);
    EXPECT_NE(a.features.to_dense().data, c.features.to_dense().data);
    EXPECT_EQ(parse_synth_kind(to_string(kind)), kind);
  }
}

TEST(Synthetic, UnitRadius) {
  for (auto kind : {SynthKind::Classification, SynthKind::Regression, SynthKind::Grouped, SynthKind::Multitask}) {
    auto ds = gen_synthetic(kind, 30, 7, 0.1, 3);
    auto m = ds.features.to_dense();
    double radius = 0;
    for (std::size_t i = 0; i < 30; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < 7; ++j) s += m(i, j) * m(i, j);
      EXPECT_NEAR(std::sqrt(s), 1.0, 1e-12);
      radius = std::max(radius, std::sqrt(s));
    }
    EXPECT_NEAR(data_radius(ds), radius, 1e-12);
  }
}

TEST(Synthetic, NoiselessClassificationIsSeparable) {
  // perceptron terminates only on separable data
  auto ds = gen_synthetic(SynthKind::Classification, 100, 5, 0.0, 4);
  auto m = ds.features.to_dense();
  Vector w(5, 0.0);
  bool clean = false;
  for (int epoch = 0; epoch < 100000 && !clean; ++epoch) {
    clean = true;
    for (std::size_t i = 0; i < 100; ++i) {
      double z = 0;
      for (std::size_t j = 0; j < 5; ++j) z += w[j] * m(i, j);
      if (ds.labels[i] * z <= 0) {
        clean = false;
        for (std::size_t j = 0; j < 5; ++j) w[j] += ds.labels[i] * m(i, j);
      }
    }
  }
  EXPECT_TRUE(clean);
}

TEST(Synthetic, MultitaskShape) {
  auto ds = gen_synthetic(SynthKind::Multitask, 12, 4, 0.1, 5);
  EXPECT_EQ(ds.outputs, kSynthOutputs);
  ASSERT_EQ(ds.multi_labels.size(), 12 * kSynthOutputs);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(ds.labels[i], ds.multi_labels[i * kSynthOutputs]);
}

TEST(RegularizerByName, KindsAndShapes) {
  EXPECT_EQ(make_regularizer("l1", 6, 1).kind, RegKind::L1);
  auto g = make_regularizer("group-lasso", 6, 3);
  EXPECT_EQ(g.groups.size(), 2u);
  auto t = make_regularizer("trace", 6, 3);
  EXPECT_EQ(t.rows, 2u);
  EXPECT_EQ(t.cols, 3u);
  EXPECT_EQ(make_regularizer("composite", 4, 1).kind, RegKind::CompositeV);
  EXPECT_THROW(make_regularizer("l21", 7, 3), ContractViolation);
  EXPECT_THROW(make_regularizer("elastic-net", 4, 1), ContractViolation);
}

TEST(TraceCsv, EmptyTraceIsHeaderOnly) {
  std::ostringstream out;
  write_trace_csv(SolverTrace{}, out);
  EXPECT_EQ(out.str(), std::string(kTraceHeader) + "\n");
}

TEST(TraceCsv, OneRecordTwoLines) {
  SolverTrace t;
  t.records.push_back(TraceRecord{3, 0.5, 1.25, std::nullopt, std::nullopt, 0.5, 0.0, false});
  std::ostringstream out;
  write_trace_csv(t, out);
  auto ls = lines_of(out.str());
  ASSERT_EQ(ls.size(), 2u);
  EXPECT_EQ(ls[1], "3,0.5,1.25,,,0.5,0,0");
}

TEST(TraceCsv, RoundTrip) {
  SolverTrace t;
  t.records.push_back(TraceRecord{1, 1e-7, 0.1 + 0.2, -1.0 / 3.0, 0.3 + 1.0 / 3.0, 0.25, 1.0, true});
  t.records.push_back(TraceRecord{10, 0.001, std::nextafter(1.0, 2.0), std::nullopt, std::nullopt, 0, 0.5, false});
  t.records.push_back(TraceRecord{11, 2.5, 1e300, 5e-324, -0.0, 1, 0, false});
  std::stringstream io;
  write_trace_csv(t, io);
  auto back = read_trace_csv(io);
  ASSERT_EQ(back.records.size(), t.records.size());
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const auto &a = t.records[i], &b = back.records[i];
    EXPECT_EQ(a.iter, b.iter);
    EXPECT_EQ(a.seconds, b.seconds);
    EXPECT_EQ(a.primal, b.primal);
    EXPECT_EQ(a.dual, b.dual);
    EXPECT_EQ(a.gap, b.gap);
    EXPECT_EQ(a.primal_sparsity, b.primal_sparsity);
    EXPECT_EQ(a.dual_sparsity, b.dual_sparsity);
    EXPECT_EQ(a.gap_flag, b.gap_flag);
  }
}

TEST(TraceCsv, MalformedInput) {
  std::istringstream bad_header("iter,seconds\n");
  EXPECT_THROW(read_trace_csv(bad_header), ParseError);
  std::istringstream short_row(std::string(kTraceHeader) + "\n1,2,3\n");
  try {
    read_trace_csv(short_row);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream bad_num(std::string(kTraceHeader) + "\n1,x,3,,,0,0,0\n");
  EXPECT_THROW(read_trace_csv(bad_num), ParseError);
}

TEST(TraceCsv, ShortestRoundTripFormat) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(std::stod(format_double(0.1 + 0.2)), 0.1 + 0.2);
}

namespace {

ExperimentSpec erm_spec(const fs::path& dir) {
  ExperimentSpec s;
  s.task = TaskKind::Erm;
  s.data = std::make_shared<Dataset>(gen_synthetic(SynthKind::Classification, 60, 8, 0.2, 11));
  s.loss = LossSpec::hinge();
  s.reg = "l1";
  s.lambda = 0.01;
  SolverRun a;
  a.kind = SolverKind::PdproxDual;
  a.config.max_iters = 200;
  a.config.trace_stride = 20;
  SolverRun b;
  b.kind = SolverKind::Subgradient;
  b.config.max_iters = 200;
  b.config.trace_stride = 20;
  b.eta0 = 0.5;
  s.solvers = {a, b};
  s.out_dir = dir;
  return s;
}

}  // namespace

TEST(RunExperiment, TwoSolversShareHeader) {
  auto dir = scratch_dir("exp_two");
  auto report = run_experiment(erm_spec(dir));
  ASSERT_EQ(report.rows.size(), 2u);
  for (const auto& row : report.rows) {
    ASSERT_TRUE(fs::exists(row.csv));
    auto ls = lines_of(slurp(row.csv));
    ASSERT_GE(ls.size(), 2u);
    EXPECT_EQ(ls[0], kTraceHeader);
  }
  EXPECT_NE(report.rows[0].csv, report.rows[1].csv);
  std::ostringstream table;
  print_summary(report, table);
  EXPECT_NE(table.str().find("pdprox-dual"), std::string::npos);
  EXPECT_NE(table.str().find("subgradient"), std::string::npos);
}

TEST(RunExperiment, RerunIsDeterministic) {
  auto d1 = scratch_dir("exp_det1"), d2 = scratch_dir("exp_det2");
  auto r1 = run_experiment(erm_spec(d1));
  auto r2 = run_experiment(erm_spec(d2));
  for (std::size_t i = 0; i < r1.rows.size(); ++i)
    EXPECT_EQ(without_seconds(slurp(r1.rows[i].csv)), without_seconds(slurp(r2.rows[i].csv)));
}

TEST(RunExperiment, DualCapSummaryOrdered) {
  auto dir = scratch_dir("exp_cap");
  ExperimentSpec s;
  s.task = TaskKind::SvmDualCap;
  s.data = std::make_shared<Dataset>(gen_synthetic(SynthKind::Classification, 500, 20, 0.3, 12));
  s.lambda = 0.01;
  s.reg = "l2sq";
  s.caps = {10, 50, 200};
  SolverRun a;
  a.config.max_iters = 1000;
  a.config.trace_stride = 0;
  s.solvers = {a};
  s.out_dir = dir;
  auto report = run_experiment(s);
  ASSERT_EQ(report.rows.size(), 3u);
  for (const auto& row : report.rows) ASSERT_TRUE(row.gap);
  EXPECT_LE(*report.rows[0].gap, *report.rows[1].gap);
  EXPECT_LE(*report.rows[1].gap, *report.rows[2].gap);
  EXPECT_NE(report.rows[0].label.find("10"), std::string::npos);
}

TEST(RunExperiment, MatrixCompletionTask) {
  auto dir = scratch_dir("exp_mc");
  ExperimentSpec s;
  s.task = TaskKind::MatrixCompletion;
  s.triplets = TripletData{4, 3, {{0, 0, 1}, {1, 1, 2}, {2, 2, 5}, {3, 0, 4}, {0, 2, 3}}};
  s.mc_loss = McHingeThresholds{{0, 3, 6, 9}};
  s.lambda = 0.05;
  SolverRun a;
  a.config.max_iters = 300;
  a.config.trace_stride = 50;
  s.solvers = {a};
  s.out_dir = dir;
  auto report = run_experiment(s);
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_TRUE(fs::exists(report.rows[0].csv));
  ASSERT_TRUE(report.rows[0].gap);
  EXPECT_GE(*report.rows[0].gap, -1e-9);
}

TEST(RunExperiment, InvalidSpecs) {
  ExperimentSpec s;
  EXPECT_THROW(run_experiment(s), ContractViolation);
  s.solvers.push_back(SolverRun{});
  EXPECT_THROW(run_experiment(s), ContractViolation);
  EXPECT_THROW(parse_solver_kind("fobos"), ContractViolation);
  EXPECT_THROW(parse_task_kind("mkl"), ContractViolation);
}
