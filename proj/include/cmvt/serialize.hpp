#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cmvt/dataset.hpp"
#include "cmvt/em.hpp"
#include "cmvt/minnesota.hpp"
#include "cmvt/params.hpp"

// JSON documents for parameters and hyperparameters, CSV export of traces.
namespace cmvt::io {

using nlohmann::json;

inline json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

/// Row-major array of arrays.
inline json matrix_to_json(const MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

inline VectorXd vector_from_json(const json& j, const char* key) {
  if (!j.is_array()) throw ParseError(std::string(key) + ": expected an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(std::string(key) + ": expected numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline MatrixXd matrix_from_json(const json& j, const char* key, Eigen::Index rows_hint = -1) {
  if (!j.is_array()) throw ParseError(std::string(key) + ": expected an array of arrays");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return MatrixXd(rows_hint < 0 ? 0 : rows_hint, 0);
  const auto cols = static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0);
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const VectorXd row = vector_from_json(j[static_cast<std::size_t>(r)], key);
    if (row.size() != cols) throw ParseError(std::string(key) + ": ragged rows");
    m.row(r) = row.transpose();
  }
  return m;
}

inline const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <ModelKind Kind>
json params_to_json(const Params<Kind>& p) {
  return json{{"pi0", vector_to_json(p.pi0)},
              {"lambda0", vector_to_json(p.lambda0)},
              {"nu0", p.nu0},
              {"V0", matrix_to_json(p.V0)}};
}

template <ModelKind Kind>
Params<Kind> params_from_json(const json& j) {
  Params<Kind> p;
  p.pi0 = vector_from_json(require(j, "pi0"), "pi0");
  p.lambda0 = vector_from_json(require(j, "lambda0"), "lambda0");
  if (!require(j, "nu0").is_number()) throw ParseError("nu0: expected a number");
  p.nu0 = j.at("nu0").get<double>();
  p.V0 = matrix_from_json(require(j, "V0"), "V0");
  p.validate();
  return p;
}

inline json hyper_to_json(const minnesota::MinnesotaHyper& h) {
  return json{{"C_m", matrix_to_json(h.C_m)}, {"eps", vector_to_json(h.eps)},
              {"alpha", h.alpha},               {"beta", h.beta},
              {"gamma", vector_to_json(h.gamma)}, {"phi", vector_to_json(h.phi)},
              {"nu0", h.nu0},                   {"V0", matrix_to_json(h.V0)}};
}

inline minnesota::MinnesotaHyper hyper_from_json(const json& j) {
  minnesota::MinnesotaHyper h;
  h.phi = vector_from_json(require(j, "phi"), "phi");
  h.eps = vector_from_json(require(j, "eps"), "eps");
  h.gamma = vector_from_json(require(j, "gamma"), "gamma");
  h.alpha = require(j, "alpha").get<double>();
  h.beta = require(j, "beta").get<double>();
  h.nu0 = require(j, "nu0").get<double>();
  h.V0 = matrix_from_json(require(j, "V0"), "V0");
  h.C_m = matrix_from_json(require(j, "C_m"), "C_m", h.phi.size());
  if (h.C_m.cols() == 0) h.C_m.resize(h.phi.size(), 0);
  h.validate();
  return h;
}

inline bool is_hyper_document(const json& j) { return j.is_object() && j.contains("alpha"); }

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << j.dump(2) << '\n';
}

/// iter,loglik,nu0 with 17 significant digits.
template <class Snapshot>
std::string trace_to_csv(const EMTrace<Snapshot>& trace) {
  std::ostringstream os;
  os << "iter,loglik,nu0\n";
  for (std::size_t k = 0; k < trace.iterations.size(); ++k) {
    const auto& e = trace.iterations[k];
    os << k << ',' << format_double(e.loglik) << ',' << format_double(e.params.nu0) << '\n';
  }
  return os.str();
}

}  // namespace cmvt::io
