#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "cmvt/errors.hpp"
#include "cmvt/linalg.hpp"

namespace cmvt {

enum class ModelKind { kType1, kType2 };

/// theta = (pi0, Lambda0 = diag(lambda0), nu0, V0).
///
/// pi0 is vec of the (n x d) prior mean of the coefficient matrix. Type I and
/// Type II share the layout but not the meaning: under Type I one coefficient
/// and covariance draw holds for the whole sample, under Type II each period
/// draws its own.
template <ModelKind Kind>
struct Params {
  VectorXd pi0;
  VectorXd lambda0;
  double nu0 = 0.0;
  MatrixXd V0;

  Eigen::Index n() const { return V0.rows(); }
  Eigen::Index d() const { return lambda0.size(); }

  /// The (n x d) unvectorization of pi0.
  MatrixXd pi0_matrix() const { return linalg::unvec(pi0, n(), d()); }

  /// Throws DomainError/DimensionError when an invariant is violated.
  void validate() const {
    if (V0.rows() < 1 || V0.rows() != V0.cols())
      throw DimensionError("params: V0 must be square and non-empty");
    if (lambda0.size() < 1) throw DimensionError("params: lambda0 is empty");
    if (pi0.size() != n() * d())
      throw DimensionError("params: pi0 has " + std::to_string(pi0.size()) +
                           " entries, expected n*d = " + std::to_string(n() * d()));
    if (!pi0.allFinite() || !lambda0.allFinite() || !V0.allFinite() || !std::isfinite(nu0))
      throw DomainError("params: non-finite entries");
    if ((lambda0.array() <= 0.0).any()) throw DomainError("params: lambda_i must be positive");
    if (!(nu0 > static_cast<double>(n()) - 1.0))
      throw DomainError("params: nu0 must exceed n - 1");
    if ((V0 - V0.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + V0.cwiseAbs().maxCoeff()))
      throw DomainError("params: V0 is not symmetric");
    Eigen::LLT<MatrixXd> llt(V0);
    if (llt.info() != Eigen::Success) throw DomainError("params: V0 is not positive definite");
  }
};

using Type1Params = Params<ModelKind::kType1>;
using Type2Params = Params<ModelKind::kType2>;

template <ModelKind To, ModelKind From>
Params<To> reinterpret_params(const Params<From>& p) {
  return Params<To>{p.pi0, p.lambda0, p.nu0, p.V0};
}

}  // namespace cmvt
