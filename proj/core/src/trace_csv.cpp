#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>

#include "pdprox/error.hpp"
#include "pdprox/experiment.hpp"

namespace pdprox {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::size_t lineno) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("bad number '" + std::string(s) + "'", lineno);
  return v;
}

std::size_t parse_count(std::string_view s, std::size_t lineno) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("bad count '" + std::string(s) + "'", lineno);
  return v;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw NumericError("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

void write_trace_csv(const SolverTrace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.iter << ',' << format_double(r.seconds) << ',' << format_double(r.primal) << ',';
    if (r.dual) out << format_double(*r.dual);
    out << ',';
    if (r.gap) out << format_double(*r.gap);
    out << ',' << format_double(r.primal_sparsity) << ',' << format_double(r.dual_sparsity) << ','
        << (r.gap_flag ? 1 : 0) << '\n';
  }
}

void write_trace_csv(const SolverTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  write_trace_csv(trace, out);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

SolverTrace read_trace_csv(std::istream& in) {
  SolverTrace trace;
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw ParseError("missing or unexpected CSV header", 1);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 8) throw ParseError("expected 8 fields", lineno);
    TraceRecord r;
    r.iter = parse_count(f[0], lineno);
    r.seconds = parse_double(f[1], lineno);
    r.primal = parse_double(f[2], lineno);
    if (!f[3].empty()) r.dual = parse_double(f[3], lineno);
    if (!f[4].empty()) r.gap = parse_double(f[4], lineno);
    r.primal_sparsity = parse_double(f[5], lineno);
    r.dual_sparsity = parse_double(f[6], lineno);
    if (f[7] != "0" && f[7] != "1") throw ParseError("gap_flag must be 0 or 1", lineno);
    r.gap_flag = f[7] == "1";
    trace.records.push_back(r);
  }
  return trace;
}

SolverTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace: " + path.string());
  return read_trace_csv(in);
}

}  // namespace pdprox
