#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmvt/errors.hpp"

namespace cmvt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  MatrixXd values;  // rows = records, cols = fields
};

namespace csv_detail {

inline std::vector<std::string> split_record(const std::string& line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw ParseError("line " + std::to_string(lineno) + ": unterminated quote");
  out.push_back(std::move(field));
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& raw, std::size_t lineno) {
  const std::string s = trim(raw);
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last) {
    throw ParseError("line " + std::to_string(lineno) + ": not a number: '" + s + "'");
  }
  return v;
}

}  // namespace csv_detail

/// Reads a CSV file with one header row and numeric cells below it.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      for (auto& h : csv_detail::split_record(line, lineno))
        table.header.push_back(csv_detail::trim(h));
      continue;
    }
    if (csv_detail::trim(line).empty() || line == "\r") continue;
    const auto fields = csv_detail::split_record(line, lineno);
    if (fields.size() != table.header.size()) {
      throw ParseError(path + ": line " + std::to_string(lineno) + " has " +
                       std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(table.header.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(csv_detail::parse_number(f, lineno));
    rows.push_back(std::move(row));
  }
  if (lineno == 0) throw ParseError(path + ": empty file");
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return table;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const MatrixXd& values) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c)
      out << (c ? "," : "") << format_double(values(r, c));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Dataset and design
// ---------------------------------------------------------------------------

/// Endogenous path y_1..y_T (n x T), presample y_{1-p}..y_0 (n x p, oldest
/// first) and exogenous path psi_1..psi_T (l x T) whose first row is 1.
class TimeSeriesDataset {
 public:
  TimeSeriesDataset(MatrixXd endogenous, MatrixXd presample, MatrixXd exogenous)
      : endogenous_(std::move(endogenous)),
        presample_(std::move(presample)),
        exogenous_(std::move(exogenous)) {
    if (endogenous_.cols() < 1) throw DimensionError("dataset: T must be at least 1");
    if (endogenous_.rows() < 1) throw DimensionError("dataset: no endogenous series");
    if (presample_.rows() != endogenous_.rows() && presample_.cols() > 0)
      throw DimensionError("dataset: presample rows differ from endogenous rows");
    if (presample_.cols() == 0) presample_.resize(endogenous_.rows(), 0);
    if (exogenous_.rows() < 1 || exogenous_.cols() != endogenous_.cols())
      throw DimensionError("dataset: exogenous block must be l x T with l >= 1");
    if (!endogenous_.allFinite() || !presample_.allFinite() || !exogenous_.allFinite())
      throw ParseError("dataset: NaN/Inf entries");
    if ((exogenous_.row(0).array() != 1.0).any())
      throw DimensionError("dataset: first exogenous row must be identically 1");
  }

  Eigen::Index n() const { return endogenous_.rows(); }
  Eigen::Index l() const { return exogenous_.rows(); }
  Eigen::Index p() const { return presample_.cols(); }
  Eigen::Index T() const { return endogenous_.cols(); }
  Eigen::Index d() const { return l() + n() * p(); }

  const MatrixXd& endogenous() const { return endogenous_; }
  const MatrixXd& presample() const { return presample_; }
  const MatrixXd& exogenous() const { return exogenous_; }

 private:
  MatrixXd endogenous_;
  MatrixXd presample_;
  MatrixXd exogenous_;
};

/// y_stack = [y_1 : ... : y_T] (n x T); regressors column t is
/// Y_t = (psi_t', y_{t-1}', ..., y_{t-p}')' (d x T).
struct DesignMatrices {
  MatrixXd y_stack;
  MatrixXd regressors;

  Eigen::Index n() const { return y_stack.rows(); }
  Eigen::Index d() const { return regressors.rows(); }
  Eigen::Index T() const { return y_stack.cols(); }
};

inline DesignMatrices build_design(const TimeSeriesDataset& data) {
  const Eigen::Index n = data.n(), l = data.l(), p = data.p(), T = data.T();
  MatrixXd full(n, p + T);
  full << data.presample(), data.endogenous();
  DesignMatrices out{data.endogenous(), MatrixXd(data.d(), T)};
  for (Eigen::Index t = 0; t < T; ++t) {
    out.regressors.col(t).head(l) = data.exogenous().col(t);
    for (Eigen::Index j = 1; j <= p; ++j)
      out.regressors.col(t).segment(l + (j - 1) * n, n) = full.col(t + p - j);
  }
  return out;
}

/// Loads a dataset from CSV files (rows = time, columns = variables).
///
/// The first p rows of the endogenous file are the presample. The exogenous
/// file, if given, has either the same number of rows as the endogenous file
/// (its first p rows are then dropped) or exactly T rows. A column of ones is
/// prepended unless its first column already is one.
inline TimeSeriesDataset load_dataset(const std::string& endogenous_path,
                                      const std::optional<std::string>& exogenous_path,
                                      int p) {
  if (p < 0) throw DimensionError("load_dataset: lag order must be non-negative");
  const CsvTable endo = read_csv(endogenous_path);
  if (!endo.values.allFinite()) throw ParseError(endogenous_path + ": NaN/Inf entries");
  const Eigen::Index rows = endo.values.rows();
  const Eigen::Index T = rows - p;
  if (T < 1) throw DimensionError("load_dataset: need more rows than the lag order");
  MatrixXd presample = endo.values.topRows(p).transpose();
  MatrixXd endogenous = endo.values.bottomRows(T).transpose();

  MatrixXd exogenous = MatrixXd::Ones(1, T);
  if (exogenous_path) {
    const CsvTable exo = read_csv(*exogenous_path);
    if (!exo.values.allFinite()) throw ParseError(*exogenous_path + ": NaN/Inf entries");
    MatrixXd block;
    if (exo.values.rows() == rows) {
      block = exo.values.bottomRows(T);
    } else if (exo.values.rows() == T) {
      block = exo.values;
    } else {
      throw DimensionError("load_dataset: exogenous file has " +
                           std::to_string(exo.values.rows()) + " rows, expected " +
                           std::to_string(rows) + " or " + std::to_string(T));
    }
    const bool has_constant = block.cols() > 0 && (block.col(0).array() == 1.0).all();
    if (has_constant) {
      exogenous = block.transpose();
    } else {
      exogenous.resize(block.cols() + 1, T);
      exogenous.row(0).setOnes();
      exogenous.bottomRows(block.cols()) = block.transpose();
    }
  }
  return TimeSeriesDataset(std::move(endogenous), std::move(presample), std::move(exogenous));
}

/// Writes `data` in the layout read by load_dataset: the endogenous file holds
/// p + T rows, the exogenous file (only when l > 1) holds the non-constant
/// columns for the same p + T rows, with zeros in the presample rows.
inline void save_dataset(const TimeSeriesDataset& data, const std::string& endogenous_path,
                         const std::optional<std::string>& exogenous_path) {
  const Eigen::Index n = data.n(), p = data.p(), T = data.T(), l = data.l();
  MatrixXd full(n, p + T);
  full << data.presample(), data.endogenous();
  std::vector<std::string> header;
  for (Eigen::Index i = 0; i < n; ++i) header.push_back("y" + std::to_string(i + 1));
  write_csv(endogenous_path, header, full.transpose());
  if (exogenous_path && l > 1) {
    MatrixXd exo = MatrixXd::Zero(p + T, l - 1);
    exo.bottomRows(T) = data.exogenous().bottomRows(l - 1).transpose();
    std::vector<std::string> xh;
    for (Eigen::Index j = 1; j < l; ++j) xh.push_back("x" + std::to_string(j + 1));
    write_csv(*exogenous_path, xh, exo);
  }
}

}  // namespace cmvt
