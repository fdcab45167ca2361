#pragma once

#include <algorithm>
#include <cmath>

#include "cmvt/em.hpp"
#include "cmvt/special.hpp"

namespace cmvt {

/// Degrees-of-freedom equations of the M-step, after the V0 update has been
/// substituted into the first-order condition in nu0.
namespace nu0 {

/// Type I: psi_n((nu_k+T)/2) - psi_n(nu/2) - ln|V_k + B_T| + ln|V(nu)| with
/// V(nu) = nu/(nu_k+T) (V_k + B_T). The determinant terms reduce to
/// c*(ln nu - ln(nu_k+T)) with c = n (first-order form) or 1 (unscaled form).
struct Type1Equation {
  int n;
  double nu_prev;
  double T;
  Nu0Equation form;

  double log_scale() const { return form == Nu0Equation::kFirstOrder ? n : 1.0; }

  double operator()(double nu) const {
    const double post = nu_prev + T;
    return special::mv_digamma(n, 0.5 * post) - special::mv_digamma(n, 0.5 * nu) +
           log_scale() * (std::log(nu) - std::log(post));
  }
  double derivative(double nu) const {
    return -0.5 * special::mv_trigamma(n, 0.5 * nu) + log_scale() / nu;
  }
};

/// Type II: sum_t [psi_n((nu_k+1)/2) - psi_n(nu/2) - ln|V_k + B_t|]
///   + T [c (ln T + ln nu - ln(nu_k+1)) - ln|sum_t (V_k + B_t)^{-1}|].
struct Type2Equation {
  int n;
  double nu_prev;
  double T;
  double sum_log_det_scale;  // sum_t ln|V_k + B_t|
  double log_det_weight_sum;  // ln|sum_t (V_k + B_t)^{-1}|
  Nu0Equation form;

  double log_scale() const { return form == Nu0Equation::kFirstOrder ? n : 1.0; }

  double operator()(double nu) const {
    return T * (special::mv_digamma(n, 0.5 * (nu_prev + 1.0)) - special::mv_digamma(n, 0.5 * nu)) -
           sum_log_det_scale +
           T * (log_scale() * (std::log(T) + std::log(nu) - std::log(nu_prev + 1.0)) -
                log_det_weight_sum);
  }
  double derivative(double nu) const {
    return T * (-0.5 * special::mv_trigamma(n, 0.5 * nu) + log_scale() / nu);
  }
};

/// Both equations decrease strictly on (n-1, inf) and diverge to +inf at the
/// lower end, so the bracket is pinned there and only grows upward.
template <class Equation>
double solve(const Equation& eq, double start, double tol) {
  const double lower = (eq.n - 1) + 1e-9 * std::max(1, eq.n);
  const double upper = std::max(2.0 * start, lower + 1.0);
  special::RootOptions opts;
  opts.tol = tol;
  opts.expand_lower = false;
  try {
    return special::find_root([&](double x) { return eq(x); },
                              special::ScalarFn([&](double x) { return eq.derivative(x); }),
                              lower, upper, opts);
  } catch (const NumericError& e) {
    throw NumericError("nu0 update", e.what());
  }
}

}  // namespace nu0
}  // namespace cmvt
