#pragma once

// Wide CSV datasets (one row per unit, one integer column per occasion) and
// JSON parameter files.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "oakes_hmm/dataset.hpp"
#include "oakes_hmm/param_space.hpp"

namespace oakes_hmm {

struct IngestOptions {
  bool one_based = false;             // codes are 1..c instead of 0..c-1
  std::optional<int> categories;      // otherwise 1 + largest code
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::string at_location(long row, long col) {
  return " (row " + std::to_string(row) + ", column " + std::to_string(col) + ")";
}

}  // namespace detail

inline Dataset parse_csv(std::istream& in, const IngestOptions& opts = {}) {
  std::vector<Sequence> rows;
  std::string line;
  long row = 0;
  long blank_run = 0;
  std::size_t width = 0;
  int max_code = -1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) {
      ++blank_run;
      continue;
    }
    if (blank_run > 0)
      throw IngestError("empty row" + detail::at_location(row - 1, 1) +
                            ": missing data is not supported",
                        row - 1, 1);
    Sequence seq;
    std::string_view rest(line);
    long col = 0;
    while (true) {
      ++col;
      const auto comma = rest.find(',');
      const std::string_view cell = detail::trim(rest.substr(0, comma));
      if (cell.empty())
        throw IngestError("missing value" + detail::at_location(row, col) +
                              ": missing data is not supported",
                          row, col);
      int v = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw IngestError("non-integer cell '" + std::string(cell) + "'" +
                              detail::at_location(row, col),
                          row, col);
      if (opts.one_based) --v;
      if (v < 0)
        throw IngestError("category code out of range" + detail::at_location(row, col), row, col);
      max_code = std::max(max_code, v);
      seq.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (width == 0) width = seq.size();
    if (seq.size() != width)
      throw IngestError("ragged row" + detail::at_location(row, static_cast<long>(seq.size())) +
                            ": expected " + std::to_string(width) + " columns",
                        row, static_cast<long>(seq.size()));
    rows.push_back(std::move(seq));
  }
  if (rows.empty()) throw IngestError("input contains no data rows");
  int c = std::max(2, max_code + 1);
  if (opts.categories) {
    if (*opts.categories <= max_code)
      throw IngestError("observed code " + std::to_string(max_code) + " exceeds --categories " +
                        std::to_string(*opts.categories));
    c = *opts.categories;
  }
  return Dataset::from_sequences(rows, c);
}

inline Dataset ingest(const std::string& path, const IngestOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open '" + path + "'");
  return parse_csv(in, opts);
}

/// One row per unit, codes 0..c-1, in table order.
inline void write_csv(const Dataset& d, std::ostream& out) {
  for (const auto& row : d.rows()) {
    for (std::size_t t = 0; t < row.size(); ++t) out << (t ? "," : "") << row[t];
    out << '\n';
  }
}

// Parameter files: {"lambda": [k], "Pi": [[k] x k rows], "Phi": [[k] x c rows]}.
// Phi row y holds P(Y = y | U = u) for u = 0..k-1.

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

inline Matrix matrix_from_json(const nlohmann::json& j, const char* name) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw InputError(std::string("parameter file: '") + name + "' must be a nested array");
  Matrix m(j.size(), j.front().size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != static_cast<std::size_t>(m.cols()))
      throw InputError(std::string("parameter file: '") + name + "' is ragged");
    for (std::size_t c = 0; c < j[r].size(); ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline nlohmann::json params_to_json(const ProbParams& p) {
  nlohmann::json j;
  j["lambda"] = std::vector<double>(p.lambda().data(), p.lambda().data() + p.lambda().size());
  j["Pi"] = matrix_to_json(p.Pi());
  j["Phi"] = matrix_to_json(p.Phi());
  return j;
}

inline ProbParams params_from_json(const nlohmann::json& j) {
  try {
    const auto lam = j.at("lambda").get<std::vector<double>>();
    Vector lambda = Eigen::Map<const Vector>(lam.data(), static_cast<Eigen::Index>(lam.size()));
    return {lambda, matrix_from_json(j.at("Pi"), "Pi"), matrix_from_json(j.at("Phi"), "Phi")};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("parameter file: ") + e.what());
  }
}

inline ProbParams read_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open parameter file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("parameter file '" + path + "': " + e.what());
  }
  return params_from_json(j);
}

}  // namespace oakes_hmm
