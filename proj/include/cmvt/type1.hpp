#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "cmvt/dataset.hpp"
#include "cmvt/em.hpp"
#include "cmvt/linalg.hpp"
#include "cmvt/nu0.hpp"
#include "cmvt/params.hpp"
#include "cmvt/special.hpp"

// Type I model: one coefficient matrix Pi and one covariance Sigma for the
// whole sample, with vec(Pi) | Sigma ~ N(pi0, Lambda0 (x) Sigma) and
// Sigma ~ IW(nu0, V0).
namespace cmvt::type1 {

struct Type1Posterior {
  MatrixXd lambda_post;  // (Y Y' + Lambda0^{-1})^{-1}
  VectorXd pi_post;      // vec of the posterior mean of Pi
  MatrixXd B_T;
  double nu_post = 0.0;  // nu0 + T
  MatrixXd V_post;       // B_T + V0

  Eigen::Index n() const { return B_T.rows(); }
  Eigen::Index d() const { return lambda_post.rows(); }
  MatrixXd pi_post_matrix() const { return linalg::unvec(pi_post, n(), d()); }
};

namespace detail {

inline void check_shapes(const Type1Params& params, const DesignMatrices& design) {
  params.validate();
  if (design.n() != params.n() || design.d() != params.d())
    throw DimensionError("type1: parameter and design dimensions differ");
}

struct ResidualForm {
  MatrixXd B;
  double log_det_scale;  // ln|I_T + Y' Lambda0 Y|
};

// B_T = R (I_T + Y' Lambda0 Y)^{-1} R' with R = y - Pi0 Y, through the
// Cholesky factor L of the T x T matrix: B_T = (L^{-1} R')' (L^{-1} R').
inline ResidualForm residual_form(const Type1Params& params, const DesignMatrices& design) {
  const MatrixXd& Y = design.regressors;
  const MatrixXd R = design.y_stack - params.pi0_matrix() * Y;
  MatrixXd M = Y.transpose() * params.lambda0.asDiagonal() * Y;
  M.diagonal().array() += 1.0;
  const linalg::SpdFactor factor(M, "B_T");
  const MatrixXd Z = factor.half_solve(R.transpose());
  return {Z.transpose() * Z, factor.log_det()};
}

}  // namespace detail

inline MatrixXd compute_BT(const Type1Params& params, const DesignMatrices& design) {
  detail::check_shapes(params, design);
  return detail::residual_form(params, design).B;
}

inline Type1Posterior compute_posterior(const Type1Params& params, const DesignMatrices& design) {
  detail::check_shapes(params, design);
  const MatrixXd& Y = design.regressors;
  const VectorXd lambda_inv = params.lambda0.cwiseInverse();
  MatrixXd precision = Y * Y.transpose();
  precision.diagonal() += lambda_inv;
  const linalg::SpdFactor factor(precision, "posterior precision");

  // Pi_{0|T}' = Lambda_{0|T} (Y y' + Lambda0^{-1} Pi0').
  const MatrixXd rhs = Y * design.y_stack.transpose() +
                       lambda_inv.asDiagonal() * params.pi0_matrix().transpose();
  const MatrixXd pi_post = factor.solve(rhs).transpose();

  Type1Posterior post;
  post.lambda_post = linalg::symmetrize(factor.inverse());
  post.pi_post = linalg::vec(pi_post);
  post.B_T = detail::residual_form(params, design).B;
  post.nu_post = params.nu0 + static_cast<double>(design.T());
  post.V_post = post.B_T + params.V0;
  return post;
}

/// ln f(y | F_0):
///   -(nT/2) ln pi + ln Gamma_n((nu0+T)/2) - ln Gamma_n(nu0/2) + (nu0/2) ln|V0|
///   - (n/2) ln|I_T + Y' Lambda0 Y| - ((nu0+T)/2) ln|B_T + V0|,
/// where ln|I_T + Y' Lambda0 Y| = ln|Lambda0| + ln|Lambda_{0|T}^{-1}|.
inline double log_marginal_likelihood(const Type1Params& params, const DesignMatrices& design) {
  detail::check_shapes(params, design);
  const auto n = static_cast<int>(params.n());
  const auto T = static_cast<double>(design.T());
  const auto form = detail::residual_form(params, design);
  const linalg::SpdFactor v0(params.V0, "V0");
  const linalg::SpdFactor vpost(form.B + params.V0, "B_T + V0");
  const double value = -0.5 * n * T * std::log(std::numbers::pi) +
                       special::log_mvgamma(n, 0.5 * (params.nu0 + T)) -
                       special::log_mvgamma(n, 0.5 * params.nu0) + 0.5 * params.nu0 * v0.log_det() -
                       0.5 * n * form.log_det_scale - 0.5 * (params.nu0 + T) * vpost.log_det();
  if (!std::isfinite(value)) throw NumericError("type I log-likelihood", "non-finite value");
  return value;
}

/// ln N(pi; pi_{0|T}, Lambda_{0|T} (x) Sigma).
inline double posterior_coeff_logdensity(const VectorXd& pi, const MatrixXd& Sigma,
                                         const Type1Posterior& post) {
  const Eigen::Index n = post.n(), d = post.d();
  if (pi.size() != n * d || Sigma.rows() != n || Sigma.cols() != n)
    throw DimensionError("posterior_coeff_logdensity: dimension mismatch");
  const linalg::SpdFactor sigma(Sigma, "Sigma");
  const linalg::SpdFactor lambda(post.lambda_post, "Lambda_{0|T}");
  const MatrixXd D = linalg::unvec(pi - post.pi_post, n, d);
  // vec(D)'(A (x) B)vec(D) = tr(D' B D A) with A = Lambda_{0|T}^{-1}, B = Sigma^{-1}.
  const MatrixXd left = sigma.half_solve(D);
  const double quad = lambda.half_solve(left.transpose()).squaredNorm();
  return -0.5 * static_cast<double>(n * d) * std::log(2.0 * std::numbers::pi) -
         0.5 * static_cast<double>(n) * lambda.log_det() -
         0.5 * static_cast<double>(d) * sigma.log_det() - 0.5 * quad;
}

/// ln IW(Sigma; nu0 + T, B_T + V0).
inline double posterior_cov_logdensity(const MatrixXd& Sigma, const Type1Posterior& post) {
  const Eigen::Index n = post.n();
  if (Sigma.rows() != n || Sigma.cols() != n)
    throw DimensionError("posterior_cov_logdensity: dimension mismatch");
  const linalg::SpdFactor sigma(Sigma, "Sigma");
  const linalg::SpdFactor scale(post.V_post, "B_T + V0");
  const double nu = post.nu_post;
  const double tr = sigma.solve(post.V_post).trace();
  return 0.5 * nu * scale.log_det() - 0.5 * nu * n * std::log(2.0) -
         special::log_mvgamma(static_cast<int>(n), 0.5 * nu) -
         0.5 * (nu + n + 1) * sigma.log_det() - 0.5 * tr;
}

/// tr{Psi_i} for every i: n (Lambda_{0|T})_ii + dof * D_i' W D_i, where D_i is
/// column i of (posterior mean - updated prior mean) and W = (V0 + B_T)^{-1}.
inline VectorXd psi_traces(const MatrixXd& lambda_post, const MatrixXd& mean_gap,
                           const MatrixXd& weight, double dof) {
  const double n = static_cast<double>(mean_gap.rows());
  const MatrixXd WD = weight * mean_gap;
  VectorXd out = n * lambda_post.diagonal();
  out += dof * (mean_gap.array() * WD.array()).colwise().sum().matrix().transpose();
  return out;
}

/// One EM iteration: pi0, then lambda_i, then nu0 (held unless
/// opts.update_nu0), then V0.
inline Type1Params em_step(const Type1Params& params, const DesignMatrices& design,
                           const FitOptions& opts = {}) {
  const Type1Posterior post = compute_posterior(params, design);
  const auto n = static_cast<int>(params.n());
  const auto T = static_cast<double>(design.T());
  const double dof = params.nu0 + T;

  Type1Params next;
  next.pi0 = post.pi_post;

  const linalg::SpdFactor scale(post.V_post, "V0 + B_T");
  const MatrixXd weight = scale.inverse();
  const MatrixXd gap = post.pi_post_matrix() - linalg::unvec(next.pi0, n, params.d());
  next.lambda0 = psi_traces(post.lambda_post, gap, weight, dof) / static_cast<double>(n);
  if (!next.lambda0.allFinite() || (next.lambda0.array() <= 0.0).any())
    throw NumericError("lambda update", "non-positive lambda_i");

  next.nu0 = params.nu0;
  if (opts.update_nu0) {
    next.nu0 = nu0::solve(nu0::Type1Equation{n, params.nu0, T, opts.nu0_equation}, dof,
                          opts.root_tol);
  }
  next.V0 = linalg::symmetrize(next.nu0 / dof * post.V_post);
  return next;
}

/// pi0 = vec of the least-squares coefficients (ridge 1e-8 when Y Y' is
/// singular), Lambda0 = I_d, nu0 = n + 2, V0 = I_n.
inline Type1Params default_init(const DesignMatrices& design) {
  const Eigen::Index n = design.n(), d = design.d();
  const MatrixXd& Y = design.regressors;
  MatrixXd gram = Y * Y.transpose();
  Eigen::LLT<MatrixXd> llt(gram);
  const bool singular = llt.info() != Eigen::Success ||
                        llt.matrixLLT().diagonal().minCoeff() <=
                            1e-7 * std::sqrt(std::max(1.0, gram.diagonal().maxCoeff()));
  if (singular) {
    gram.diagonal().array() += 1e-8 * std::max(1.0, gram.trace() / static_cast<double>(d));
    llt.compute(gram);
  }
  const MatrixXd coef = llt.solve(Y * design.y_stack.transpose()).transpose();
  Type1Params init;
  init.pi0 = linalg::vec(coef);
  init.lambda0 = VectorXd::Ones(d);
  init.nu0 = static_cast<double>(n) + 2.0;
  init.V0 = MatrixXd::Identity(n, n);
  return init;
}

inline FitResult<Type1Params> fit(const Type1Params& init, const DesignMatrices& design,
                                  const FitOptions& opts = {}) {
  init.validate();
  return run_em<Type1Params>(
      init, [&](const Type1Params& p) { return em_step(p, design, opts); },
      [&](const Type1Params& p) { return log_marginal_likelihood(p, design); }, opts);
}

}  // namespace cmvt::type1
