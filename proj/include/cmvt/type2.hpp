#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "cmvt/dataset.hpp"
#include "cmvt/em.hpp"
#include "cmvt/linalg.hpp"
#include "cmvt/minnesota.hpp"
#include "cmvt/nu0.hpp"
#include "cmvt/parallel.hpp"
#include "cmvt/params.hpp"
#include "cmvt/special.hpp"

// Type II model: (pi_t, Sigma_t) drawn independently for every period from
// N(pi0, Lambda0 (x) Sigma_t) x IW(nu0, V0). The likelihood factors into
// one-step predictive densities.
namespace cmvt::type2 {

struct PerPeriodPosterior {
  MatrixXd lambda_t;  // (Y_t Y_t' + Lambda0^{-1})^{-1}
  VectorXd pi_t;      // vec of (y_t Y_t' + Pi0 Lambda0^{-1}) lambda_t
  MatrixXd B_t;       // r r' / phi_inv with r = y_t - Pi0 Y_t
  double phi_inv = 1.0;  // 1 + Y_t' Lambda0 Y_t

  MatrixXd pi_t_matrix() const { return linalg::unvec(pi_t, B_t.rows(), lambda_t.rows()); }
};

inline PerPeriodPosterior per_period_posterior(const Type2Params& params, const VectorXd& Y_t,
                                               const VectorXd& y_t) {
  const Eigen::Index n = params.n(), d = params.d();
  if (Y_t.size() != d || y_t.size() != n)
    throw DimensionError("per_period_posterior: dimension mismatch");
  const VectorXd lambda_inv = params.lambda0.cwiseInverse();
  const MatrixXd Pi0 = params.pi0_matrix();

  MatrixXd precision = Y_t * Y_t.transpose();
  precision.diagonal() += lambda_inv;
  const linalg::SpdFactor factor(precision, "per-period precision");

  PerPeriodPosterior out;
  out.lambda_t = linalg::symmetrize(factor.inverse());
  const MatrixXd rhs = Y_t * y_t.transpose() + lambda_inv.asDiagonal() * Pi0.transpose();
  out.pi_t = linalg::vec(factor.solve(rhs).transpose());
  out.phi_inv = 1.0 + Y_t.dot(params.lambda0.cwiseProduct(Y_t));
  const VectorXd r = y_t - Pi0 * Y_t;
  out.B_t = (r * r.transpose()) / out.phi_inv;
  return out;
}

/// ln f(y_t | F_{t-1}) = -(n/2) ln pi + ln Gamma_n((nu0+1)/2) - ln Gamma_n(nu0/2)
///   + (nu0/2) ln|V0| - (n/2) ln(1 + Y_t' Lambda0 Y_t) - ((nu0+1)/2) ln|B_t + V0|.
inline double log_predictive_density(const Type2Params& params, const VectorXd& Y_t,
                                     const VectorXd& y_t) {
  params.validate();
  if (Y_t.size() != params.d() || y_t.size() != params.n())
    throw DimensionError("log_predictive_density: dimension mismatch");
  const auto n = static_cast<int>(params.n());
  const double phi_inv = 1.0 + Y_t.dot(params.lambda0.cwiseProduct(Y_t));
  const VectorXd r = y_t - params.pi0_matrix() * Y_t;
  const linalg::SpdFactor v0(params.V0, "V0");
  const linalg::SpdFactor scale(params.V0 + r * r.transpose() / phi_inv, "B_t + V0");
  const double value = -0.5 * n * std::log(std::numbers::pi) +
                       special::log_mvgamma(n, 0.5 * (params.nu0 + 1.0)) -
                       special::log_mvgamma(n, 0.5 * params.nu0) + 0.5 * params.nu0 * v0.log_det() -
                       0.5 * n * std::log(phi_inv) - 0.5 * (params.nu0 + 1.0) * scale.log_det();
  if (!std::isfinite(value)) throw NumericError("type II predictive density", "non-finite value");
  return value;
}

inline double log_likelihood(const Type2Params& params, const DesignMatrices& design) {
  params.validate();
  if (design.n() != params.n() || design.d() != params.d())
    throw DimensionError("type2: parameter and design dimensions differ");
  const auto T = static_cast<std::size_t>(design.T());
  std::vector<double> terms(T);
  parallel_for(T, [&](std::size_t t) {
    const auto c = static_cast<Eigen::Index>(t);
    terms[t] = log_predictive_density(params, design.regressors.col(c), design.y_stack.col(c));
  });
  double acc = 0.0;
  for (double v : terms) acc += v;
  return acc;
}

namespace detail {

struct PeriodTerms {
  PerPeriodPosterior post;
  MatrixXd weight;  // (V0 + B_t)^{-1}
  double log_det_scale = 0.0;  // ln|V0 + B_t|
};

inline std::vector<PeriodTerms> period_terms(const Type2Params& params, const DesignMatrices& design) {
  params.validate();
  if (design.n() != params.n() || design.d() != params.d())
    throw DimensionError("type2: parameter and design dimensions differ");
  const auto T = static_cast<std::size_t>(design.T());
  std::vector<PeriodTerms> out(T);
  parallel_for(T, [&](std::size_t t) {
    const auto c = static_cast<Eigen::Index>(t);
    PeriodTerms& pt = out[t];
    pt.post = per_period_posterior(params, design.regressors.col(c), design.y_stack.col(c));
    const linalg::SpdFactor scale(params.V0 + pt.post.B_t, "V0 + B_t");
    pt.weight = linalg::symmetrize(scale.inverse());
    pt.log_det_scale = scale.log_det();
  });
  return out;
}

// Sum of W_t (n x n) and of W_t Pi_t (n x d), accumulated in period order.
inline std::pair<MatrixXd, MatrixXd> weighted_sums(const std::vector<PeriodTerms>& terms) {
  const Eigen::Index n = terms.front().weight.rows();
  const Eigen::Index d = terms.front().post.lambda_t.rows();
  MatrixXd S = MatrixXd::Zero(n, n), b = MatrixXd::Zero(n, d);
  for (const auto& pt : terms) {
    S += pt.weight;
    b += pt.weight * pt.post.pi_t_matrix();
  }
  return {S, b};
}

// Per-column sums over t of n (Lambda_t)_kk and of D_tk' W_t D_tk, with
// D_t = Pi_t - Pi0_next.
inline std::pair<VectorXd, VectorXd> quadratic_parts(const std::vector<PeriodTerms>& terms,
                                                     const MatrixXd& pi0_next) {
  const double n = static_cast<double>(pi0_next.rows());
  VectorXd trace_part = VectorXd::Zero(pi0_next.cols());
  VectorXd theta_part = VectorXd::Zero(pi0_next.cols());
  for (const auto& pt : terms) {
    const MatrixXd gap = pt.post.pi_t_matrix() - pi0_next;
    trace_part += n * pt.post.lambda_t.diagonal();
    theta_part += (gap.array() * (pt.weight * gap).array()).colwise().sum().matrix().transpose();
  }
  return {trace_part, theta_part};
}

inline double next_nu0(const std::vector<PeriodTerms>& terms, const MatrixXd& weight_sum, int n,
                       double nu_prev, const FitOptions& opts) {
  if (!opts.update_nu0) return nu_prev;
  double sum_log_det = 0.0;
  for (const auto& pt : terms) sum_log_det += pt.log_det_scale;
  const double T = static_cast<double>(terms.size());
  const nu0::Type2Equation eq{n,           nu_prev, T, sum_log_det,
                              linalg::SpdFactor(weight_sum, "sum of weights").log_det(),
                              opts.nu0_equation};
  return nu0::solve(eq, nu_prev + 1.0, opts.root_tol);
}

// V0 = T nu0_next / (nu0_prev + 1) (sum_t W_t)^{-1}
inline MatrixXd next_V0(const MatrixXd& weight_sum, double T, double nu_next, double nu_prev) {
  return linalg::symmetrize(T * nu_next / (nu_prev + 1.0) *
                            linalg::SpdFactor(weight_sum, "V0 update").inverse());
}

}  // namespace detail

/// One EM iteration in the order pi0, lambda_i (using the new pi0), nu0
/// (held unless opts.update_nu0), V0. The pi0 update is the weighted average
/// (sum W_t)^{-1} sum W_t Pi_t, solved as one n x n system for all columns.
inline Type2Params em_step(const Type2Params& params, const DesignMatrices& design,
                           const FitOptions& opts = {}) {
  const auto terms = detail::period_terms(params, design);
  const auto n = static_cast<int>(params.n());
  const auto T = static_cast<double>(design.T());
  const auto [S, b] = detail::weighted_sums(terms);

  Type2Params next;
  const MatrixXd pi0_next = linalg::SpdFactor(S, "pi0 update").solve(b);
  next.pi0 = linalg::vec(pi0_next);

  const auto [trace_part, theta_part] = detail::quadratic_parts(terms, pi0_next);
  next.lambda0 = (trace_part + (params.nu0 + 1.0) * theta_part) / (n * T);
  if (!next.lambda0.allFinite() || (next.lambda0.array() <= 0.0).any())
    throw NumericError("lambda update", "non-positive lambda_i");

  next.nu0 = detail::next_nu0(terms, S, n, params.nu0, opts);
  next.V0 = detail::next_V0(S, T, next.nu0, params.nu0);
  return next;
}

inline Type2Params default_init(const DesignMatrices& design) {
  return reinterpret_params<ModelKind::kType2>(type1::default_init(design));
}

inline FitResult<Type2Params> fit(const Type2Params& init, const DesignMatrices& design,
                                  const FitOptions& opts = {}) {
  init.validate();
  return run_em<Type2Params>(
      init, [&](const Type2Params& p) { return em_step(p, design, opts); },
      [&](const Type2Params& p) { return log_likelihood(p, design); }, opts);
}

// --- Minnesota prior -------------------------------------------------------

/// One EM iteration of the Type II hyperparameters: C_m, eps/alpha/gamma,
/// beta (p >= 2), nu0 (held unless opts.update_nu0), V0.
inline minnesota::MinnesotaHyper em_step_minnesota(const minnesota::MinnesotaHyper& h, int p,
                                                   const DesignMatrices& design,
                                                   const FitOptions& opts = {}) {
  const auto params = minnesota::to_params<ModelKind::kType2>(h, p);
  const auto terms = detail::period_terms(params, design);
  const auto n = static_cast<int>(h.n());
  const auto T = static_cast<double>(design.T());
  const auto [S, b] = detail::weighted_sums(terms);

  minnesota::MinnesotaHyper next = h;
  next.C_m = minnesota::update_means(h, S, b);

  const auto [trace_part, theta_part] =
      detail::quadratic_parts(terms, minnesota::prior_mean_matrix(next, p));
  minnesota::PrecisionStats stats;
  stats.trace_part = trace_part;
  stats.theta_part = theta_part;
  stats.dof = h.nu0 + 1.0;
  stats.gamma_dof = opts.type2_gamma_dof == GammaDof::kPerPeriod ? h.nu0 + 1.0 : h.nu0 + T;
  stats.periods = T;
  minnesota::update_precision_hyper(next, p, stats, opts);

  next.nu0 = detail::next_nu0(terms, S, n, h.nu0, opts);
  next.V0 = detail::next_V0(S, T, next.nu0, h.nu0);
  return next;
}

inline double log_likelihood_minnesota(const minnesota::MinnesotaHyper& h, int p,
                                       const DesignMatrices& design) {
  return log_likelihood(minnesota::to_params<ModelKind::kType2>(h, p), design);
}

inline FitResult<minnesota::MinnesotaHyper> fit_minnesota(const minnesota::MinnesotaHyper& init,
                                                          int p, const DesignMatrices& design,
                                                          const FitOptions& opts = {}) {
  init.validate();
  return run_em<minnesota::MinnesotaHyper>(
      init,
      [&](const minnesota::MinnesotaHyper& h) { return em_step_minnesota(h, p, design, opts); },
      [&](const minnesota::MinnesotaHyper& h) { return log_likelihood_minnesota(h, p, design); },
      opts);
}

}  // namespace cmvt::type2
