#pragma once

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "cmvt/errors.hpp"

namespace cmvt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace linalg {

/// vec(M): column-major stacking of an (rows x cols) matrix.
inline VectorXd vec(const MatrixXd& m) {
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

/// Inverse of vec for an (rows x cols) target.
inline MatrixXd unvec(const VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw DimensionError("unvec: size mismatch");
  return Eigen::Map<const MatrixXd>(v.data(), rows, cols);
}

inline MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline bool all_finite(const MatrixXd& m) { return m.allFinite(); }

/// Cholesky factor of a symmetric positive-definite matrix.
///
/// Factorization is attempted on A + eps*I for eps in the jitter ladder
/// {0, 1e-12, 1e-10, 1e-8} * trace(A)/n. The jitter used is recorded.
class SpdFactor {
 public:
  SpdFactor(const MatrixXd& a, std::string what) : what_(std::move(what)) {
    if (a.rows() != a.cols()) throw DimensionError(what_ + ": matrix not square");
    if (!a.allFinite()) throw NumericError(what_, "non-finite matrix entries");
    const Eigen::Index n = a.rows();
    const double scale = n > 0 ? std::abs(a.trace()) / static_cast<double>(n) : 1.0;
    static constexpr std::array<double, 4> kLadder{0.0, 1e-12, 1e-10, 1e-8};
    for (double rel : kLadder) {
      jitter_ = rel * scale;
      MatrixXd shifted = a;
      shifted.diagonal().array() += jitter_;
      llt_.compute(shifted);
      if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().minCoeff() > 0.0)
        return;
    }
    throw NumericError(what_, "matrix is not positive definite");
  }

  Eigen::Index size() const { return llt_.rows(); }
  double jitter() const { return jitter_; }

  double log_det() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  }

  template <class Rhs>
  MatrixXd solve(const Eigen::MatrixBase<Rhs>& b) const {
    return llt_.solve(b);
  }

  MatrixXd inverse() const {
    return llt_.solve(MatrixXd::Identity(size(), size()));
  }

  /// Lower-triangular L with A = L L'.
  MatrixXd lower() const { return llt_.matrixL(); }

  /// L^{-1} b, so that b' A^{-1} b = ||L^{-1} b||^2.
  MatrixXd half_solve(const MatrixXd& b) const {
    return llt_.matrixL().solve(b);
  }

 private:
  std::string what_;
  Eigen::LLT<MatrixXd> llt_;
  double jitter_ = 0.0;
};

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace linalg
}  // namespace cmvt
