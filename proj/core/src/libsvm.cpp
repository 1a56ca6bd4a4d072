#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>

#include "pdprox/error.hpp"
#include "pdprox/numerics.hpp"

namespace pdprox {
namespace {

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_index(std::string_view s, std::size_t& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string_view next_token(std::string_view& rest) {
  const auto start = rest.find_first_not_of(" \t\r");
  if (start == std::string_view::npos) {
    rest = {};
    return {};
  }
  rest.remove_prefix(start);
  const auto stop = rest.find_first_of(" \t\r");
  const std::string_view tok = rest.substr(0, stop);
  rest.remove_prefix(stop == std::string_view::npos ? rest.size() : stop);
  return tok;
}

}  // namespace

Dataset read_libsvm(const std::filesystem::path& path, std::optional<std::size_t> expected_dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_libsvm: cannot open " + path.string());

  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  Vector vals;
  Vector labels;
  std::size_t max_index = 0;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view rest(line);
    if (const auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);
    const std::string_view label_tok = next_token(rest);
    if (label_tok.empty()) continue;  // blank or comment-only line

    double label = 0.0;
    if (!parse_double(label_tok, label)) throw ParseError("malformed label '" + std::string(label_tok) + "'", lineno);
    labels.push_back(label);

    std::size_t prev = 0;
    for (std::string_view tok = next_token(rest); !tok.empty(); tok = next_token(rest)) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) throw ParseError("expected idx:val, got '" + std::string(tok) + "'", lineno);
      std::size_t idx = 0;
      double val = 0.0;
      if (!parse_index(tok.substr(0, colon), idx) || idx == 0)
        throw ParseError("malformed feature index in '" + std::string(tok) + "'", lineno);
      if (!parse_double(tok.substr(colon + 1), val))
        throw ParseError("malformed feature value in '" + std::string(tok) + "'", lineno);
      if (idx <= prev) throw ParseError("feature indices must be strictly ascending", lineno);
      prev = idx;
      cols.push_back(idx - 1);
      vals.push_back(val);
      max_index = std::max(max_index, idx);
    }
    offsets.push_back(vals.size());
  }

  std::size_t dim = max_index;
  if (expected_dim) {
    if (*expected_dim < max_index)
      throw ParseError("feature index " + std::to_string(max_index) + " exceeds expected dimension " +
                           std::to_string(*expected_dim),
                       lineno);
    dim = *expected_dim;
  }
  const std::size_t n = labels.size();
  Dataset ds;
  ds.features = SparseMatrix(n, dim, std::move(offsets), std::move(cols), std::move(vals));
  ds.labels = std::move(labels);
  return ds;
}

void write_libsvm(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_libsvm: cannot open " + path.string());
  char buf[64];
  auto put = [&](double x) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    out.write(buf, ptr - buf);
  };
  for (std::size_t i = 0; i < ds.size(); ++i) {
    put(ds.labels[i]);
    const auto idx = ds.features.row_indices(i);
    const auto val = ds.features.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out << ' ' << idx[k] + 1 << ':';
      put(val[k]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_libsvm: write failed for " + path.string());
}

}  // namespace pdprox
