#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmvt/dataset.hpp"
#include "cmvt/em.hpp"
#include "cmvt/linalg.hpp"
#include "cmvt/params.hpp"
#include "cmvt/special.hpp"
#include "cmvt/type1.hpp"

// Minnesota-prior hyperparameterization of (pi0, Lambda0).
//
// Regressor layout: d = l + n*p, exogenous columns first, then lag 1 for
// variables 1..n, lag 2 for variables 1..n, and so on. The prior precision
// of column k is eps_j^2 for exogenous column j and alpha^2 l^{2 beta}
// gamma_i^2 for lag l of variable i.
namespace cmvt::minnesota {

struct MinnesotaHyper {
  MatrixXd C_m;   // (n x m) prior means of the first m exogenous loadings
  VectorXd eps;   // (l)
  double alpha = 1.0;
  double beta = 0.0;
  VectorXd gamma;  // (n)
  VectorXd phi;    // (n) entries in {0, 1}; zeros (stationary) first
  double nu0 = 0.0;
  MatrixXd V0;

  Eigen::Index n() const { return phi.size(); }
  Eigen::Index l() const { return eps.size(); }
  /// Number of stationary variables.
  Eigen::Index m() const { return (phi.array() == 0.0).count(); }

  void validate() const {
    const Eigen::Index n_ = n();
    if (n_ < 1) throw DimensionError("minnesota: phi is empty");
    if (gamma.size() != n_) throw DimensionError("minnesota: gamma must have n entries");
    if (V0.rows() != n_ || V0.cols() != n_) throw DimensionError("minnesota: V0 must be n x n");
    if (l() < 1) throw DimensionError("minnesota: eps must have l >= 1 entries");
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (phi(i) != 0.0 && phi(i) != 1.0) throw DomainError("minnesota: phi_i must be 0 or 1");
      if (i > 0 && phi(i) < phi(i - 1))
        throw DomainError("minnesota: stationary variables (phi = 0) must come first");
    }
    if (m() > l())
      throw DimensionError("minnesota: m stationary variables need at least m exogenous columns");
    if (C_m.rows() != n_ || C_m.cols() != m())
      throw DimensionError("minnesota: C_m must be n x m");
    if (!C_m.allFinite() || !eps.allFinite() || !gamma.allFinite() || !std::isfinite(alpha) ||
        !std::isfinite(beta))
      throw DomainError("minnesota: non-finite hyperparameter");
    if ((eps.array() <= 0.0).any() || alpha <= 0.0 || (gamma.array() <= 0.0).any())
      throw DomainError("minnesota: eps, alpha and gamma must be positive");
    if (!(nu0 > static_cast<double>(n_) - 1.0)) throw DomainError("minnesota: nu0 must exceed n - 1");
    Eigen::LLT<MatrixXd> llt(V0);
    if (llt.info() != Eigen::Success) throw DomainError("minnesota: V0 is not positive definite");
  }
};

struct DummyObservations {
  MatrixXd y_dummy;  // (n x d)
  MatrixXd Y_dummy;  // (d x d)
};

/// [C_m : 0_{n x (l-m)}]
inline MatrixXd padded_means(const MinnesotaHyper& h) {
  MatrixXd out = MatrixXd::Zero(h.n(), h.l());
  out.leftCols(h.m()) = h.C_m;
  return out;
}

inline void check_lags(int p) {
  if (p < 0) throw DimensionError("minnesota: lag order must be non-negative");
}

inline DummyObservations build_dummy_observations(const MinnesotaHyper& h, int p) {
  h.validate();
  check_lags(p);
  const Eigen::Index n = h.n(), l = h.l(), d = l + n * p;
  const VectorXd one_minus_phi = VectorXd::Ones(n) - h.phi;
  DummyObservations out{MatrixXd::Zero(n, d), MatrixXd::Zero(d, d)};
  out.y_dummy.leftCols(l) = one_minus_phi.asDiagonal() * padded_means(h) * h.eps.asDiagonal();
  if (p >= 1) out.y_dummy.block(0, l, n, n) = (h.alpha * h.phi.cwiseProduct(h.gamma)).asDiagonal();
  out.Y_dummy.topLeftCorner(l, l) = h.eps.asDiagonal();
  for (int lag = 1; lag <= p; ++lag)
    out.Y_dummy.block(l + (lag - 1) * n, l + (lag - 1) * n, n, n) =
        (h.alpha * std::pow(lag, h.beta) * h.gamma).asDiagonal();
  return out;
}

/// Diagonal of Lambda0^{-1}: (eps_1^2..eps_l^2, then for each lag l the block
/// alpha^2 l^{2 beta} (gamma_1^2..gamma_n^2)).
inline VectorXd lambda0_inverse_diagonal(const MinnesotaHyper& h, int p) {
  h.validate();
  check_lags(p);
  const Eigen::Index n = h.n(), l = h.l();
  VectorXd out(l + n * p);
  out.head(l) = h.eps.array().square();
  for (int lag = 1; lag <= p; ++lag)
    out.segment(l + (lag - 1) * n, n) =
        (h.alpha * h.alpha * std::pow(lag, 2.0 * h.beta)) * h.gamma.array().square();
  return out;
}

/// ln|Lambda0^{-1}| = 2 sum ln eps_j + 2np ln alpha + 2 beta n sum_l ln l
///                    + 2p sum ln gamma_i.
inline double log_det_lambda0_inverse(const MinnesotaHyper& h, int p) {
  h.validate();
  const double n = static_cast<double>(h.n());
  double lag_logs = 0.0;
  for (int lag = 1; lag <= p; ++lag) lag_logs += std::log(lag);
  return 2.0 * h.eps.array().log().sum() + 2.0 * n * p * std::log(h.alpha) +
         2.0 * h.beta * n * lag_logs + 2.0 * p * h.gamma.array().log().sum();
}

/// Prior mean matrix [diag{1-phi} C_bar : diag{phi} : 0] (n x d).
inline MatrixXd prior_mean_matrix(const MinnesotaHyper& h, int p) {
  h.validate();
  check_lags(p);
  const Eigen::Index n = h.n(), l = h.l();
  MatrixXd out = MatrixXd::Zero(n, l + n * p);
  out.leftCols(l) = (VectorXd::Ones(n) - h.phi).asDiagonal() * padded_means(h);
  if (p >= 1) out.block(0, l, n, n) = h.phi.asDiagonal();
  return out;
}

inline VectorXd minnesota_pi0(const MinnesotaHyper& h, int p) {
  return linalg::vec(prior_mean_matrix(h, p));
}

enum class DeltaKind { kEps, kAlpha, kBeta, kGamma };

/// Diagonal of the selector matrices used by the hyperparameter updates.
///   kEps(j):   unit entry at exogenous column j
///   kAlpha:    l^{2 beta} gamma_i^2 on the lag block
///   kBeta:     alpha^2 l^{2 beta} ln(l) gamma_i^2 on the lag block
///   kGamma(i): alpha^2 l^{2 beta} at (lag l, variable i); with
///              GammaDelta::kLogWeighted the entries carry an extra ln(l)
inline VectorXd delta_diagonal(DeltaKind kind, const MinnesotaHyper& h, int p, Eigen::Index index = 0,
                               GammaDelta variant = GammaDelta::kConsistent) {
  h.validate();
  check_lags(p);
  const Eigen::Index n = h.n(), l = h.l();
  VectorXd out = VectorXd::Zero(l + n * p);
  switch (kind) {
    case DeltaKind::kEps:
      if (index < 0 || index >= l) throw DimensionError("delta_diagonal: eps index out of range");
      out(index) = 1.0;
      break;
    case DeltaKind::kAlpha:
      for (int lag = 1; lag <= p; ++lag)
        out.segment(l + (lag - 1) * n, n) = std::pow(lag, 2.0 * h.beta) * h.gamma.array().square();
      break;
    case DeltaKind::kBeta:
      for (int lag = 1; lag <= p; ++lag)
        out.segment(l + (lag - 1) * n, n) = h.alpha * h.alpha * std::pow(lag, 2.0 * h.beta) *
                                            std::log(lag) * h.gamma.array().square();
      break;
    case DeltaKind::kGamma:
      if (index < 0 || index >= n) throw DimensionError("delta_diagonal: gamma index out of range");
      for (int lag = 1; lag <= p; ++lag) {
        double w = h.alpha * h.alpha * std::pow(lag, 2.0 * h.beta);
        if (variant == GammaDelta::kLogWeighted) w *= std::log(lag);
        out(l + (lag - 1) * n + index) = w;
      }
      break;
  }
  return out;
}

/// The (pi0, Lambda0, nu0, V0) induced by the hyperparameters.
template <ModelKind Kind = ModelKind::kType1>
Params<Kind> to_params(const MinnesotaHyper& h, int p) {
  Params<Kind> out;
  out.pi0 = minnesota_pi0(h, p);
  out.lambda0 = lambda0_inverse_diagonal(h, p).cwiseInverse();
  out.nu0 = h.nu0;
  out.V0 = h.V0;
  return out;
}

/// Default starting point: C_m from least squares, unit eps/alpha/gamma,
/// beta = 1, nu0 = n + 2, V0 = I_n.
inline MinnesotaHyper default_init(const DesignMatrices& design, const VectorXd& phi, int p) {
  MinnesotaHyper h;
  const Eigen::Index n = design.n();
  const Eigen::Index l = design.d() - n * p;
  if (phi.size() != n) throw DimensionError("minnesota: phi must have n entries");
  if (l < 1) throw DimensionError("minnesota: design has no exogenous columns");
  h.phi = phi;
  const Eigen::Index m = h.m();
  if (m > l) throw DimensionError("minnesota: m stationary variables need at least m exogenous columns");
  const MatrixXd ols = type1::default_init(design).pi0_matrix();
  h.C_m = MatrixXd::Zero(n, m);
  h.C_m.topRows(m) = ols.topLeftCorner(m, m);
  h.eps = VectorXd::Ones(l);
  h.alpha = 1.0;
  h.beta = 1.0;
  h.gamma = VectorXd::Ones(n);
  h.nu0 = static_cast<double>(n) + 2.0;
  h.V0 = MatrixXd::Identity(n, n);
  return h;
}

/// Sufficient statistics of the hyperparameter M-step. For each regressor
/// column k the expected quadratic form is
///   Q_k = trace_part_k + dof * theta_part_k,
/// summed over periods (Type II) or taken once (Type I).
struct PrecisionStats {
  VectorXd trace_part;   // n * (Lambda_post)_kk, summed over periods
  VectorXd theta_part;   // D_k' W D_k, summed over periods
  double dof = 0.0;        // multiplies theta_part for eps, alpha, beta
  double gamma_dof = 0.0;  // multiplies theta_part for gamma
  double periods = 1.0;    // 1 (Type I) or T (Type II)

  VectorXd q() const { return trace_part + dof * theta_part; }
  VectorXd q_gamma() const { return trace_part + gamma_dof * theta_part; }
};

/// Conditional-maximization updates of (eps, alpha, gamma, beta) in that
/// order; each one uses the values already updated before it.
inline void update_precision_hyper(MinnesotaHyper& h, int p, const PrecisionStats& stats,
                                   const FitOptions& opts) {
  const double n = static_cast<double>(h.n());
  const double N = stats.periods;
  const VectorXd q = stats.q();
  auto positive = [](double v, const char* what) {
    if (!std::isfinite(v) || v <= 0.0) throw NumericError(what, "zero or invalid denominator");
    return v;
  };

  for (Eigen::Index j = 0; j < h.l(); ++j) {
    const double denom = delta_diagonal(DeltaKind::kEps, h, p, j).dot(q);
    h.eps(j) = std::sqrt(n * N / positive(denom, "eps update"));
  }
  if (p == 0) return;

  const double alpha_denom = delta_diagonal(DeltaKind::kAlpha, h, p).dot(q);
  h.alpha = std::sqrt(n * n * p * N / positive(alpha_denom, "alpha update"));

  const VectorXd qg = stats.q_gamma();
  VectorXd gamma_next(h.n());
  for (Eigen::Index i = 0; i < h.n(); ++i) {
    const double denom = delta_diagonal(DeltaKind::kGamma, h, p, i, opts.gamma_delta).dot(qg);
    gamma_next(i) = std::sqrt(n * p * N / positive(denom, "gamma update"));
  }
  h.gamma = gamma_next;

  if (p >= 2) {
    double lag_logs = 0.0;
    for (int lag = 1; lag <= p; ++lag) lag_logs += std::log(lag);
    const double target = n * n * N * lag_logs;
    MinnesotaHyper probe = h;
    auto f = [&](double beta) {
      probe.beta = beta;
      return delta_diagonal(DeltaKind::kBeta, probe, p).dot(q) - target;
    };
    auto df = [&](double beta) {
      probe.beta = beta;
      VectorXd logs = VectorXd::Zero(q.size());
      for (int lag = 1; lag <= p; ++lag)
        logs.segment(h.l() + (lag - 1) * h.n(), h.n()).setConstant(2.0 * std::log(lag));
      return delta_diagonal(DeltaKind::kBeta, probe, p).cwiseProduct(logs).dot(q);
    };
    special::RootOptions ropts;
    ropts.tol = opts.root_tol;
    try {
      h.beta = special::find_root(f, special::ScalarFn(df), -5.0, 5.0, ropts);
    } catch (const NumericError& e) {
      throw NumericError("beta update", e.what());
    }
  }
}

/// Maximizes sum_t (a_t - x)' W_t (a_t - x) column by column over the first m
/// columns of the prior mean, with rows of unit-root variables held at zero.
/// `weight_sum` = sum_t W_t and `weighted_targets` = sum_t W_t A_t.
inline MatrixXd update_means(const MinnesotaHyper& h, const MatrixXd& weight_sum,
                             const MatrixXd& weighted_targets) {
  const Eigen::Index n = h.n(), m = h.m();
  MatrixXd C = MatrixXd::Zero(n, m);
  if (m == 0) return C;
  const linalg::SpdFactor free_block(weight_sum.topLeftCorner(m, m), "C_m update");
  C.topRows(m) = free_block.solve(weighted_targets.topLeftCorner(m, m));
  return C;
}

/// One EM iteration of the Type I hyperparameters: C_m, then eps/alpha/gamma,
/// then beta (p >= 2), then nu0 (held unless opts.update_nu0), then V0.
inline MinnesotaHyper em_step_type1(const MinnesotaHyper& h, int p, const DesignMatrices& design,
                                    const FitOptions& opts = {}) {
  const Type1Params params = to_params(h, p);
  const type1::Type1Posterior post = type1::compute_posterior(params, design);
  const auto n = static_cast<int>(h.n());
  const auto T = static_cast<double>(design.T());
  const double dof = h.nu0 + T;
  const MatrixXd weight = linalg::SpdFactor(post.V_post, "V0 + B_T").inverse();
  const MatrixXd pi_post = post.pi_post_matrix();

  MinnesotaHyper next = h;
  next.C_m = update_means(h, weight, weight * pi_post);

  const MatrixXd gap = pi_post - prior_mean_matrix(next, p);
  PrecisionStats stats;
  stats.trace_part = static_cast<double>(n) * post.lambda_post.diagonal();
  stats.theta_part = (gap.array() * (weight * gap).array()).colwise().sum().transpose();
  stats.dof = dof;
  stats.gamma_dof = dof;
  stats.periods = 1.0;
  update_precision_hyper(next, p, stats, opts);

  if (opts.update_nu0) {
    next.nu0 = nu0::solve(nu0::Type1Equation{n, h.nu0, T, opts.nu0_equation}, dof, opts.root_tol);
  }
  next.V0 = linalg::symmetrize(next.nu0 / dof * post.V_post);
  return next;
}

inline double log_likelihood_type1(const MinnesotaHyper& h, int p, const DesignMatrices& design) {
  return type1::log_marginal_likelihood(to_params(h, p), design);
}

inline FitResult<MinnesotaHyper> fit_type1(const MinnesotaHyper& init, int p,
                                           const DesignMatrices& design, const FitOptions& opts = {}) {
  init.validate();
  return run_em<MinnesotaHyper>(
      init, [&](const MinnesotaHyper& h) { return em_step_type1(h, p, design, opts); },
      [&](const MinnesotaHyper& h) { return log_likelihood_type1(h, p, design); }, opts);
}

}  // namespace cmvt::minnesota
