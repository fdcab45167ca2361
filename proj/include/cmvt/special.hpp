#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "cmvt/errors.hpp"

namespace cmvt::special {

namespace detail {

inline void check_mv_domain(const char* fn, int n, double a) {
  if (n < 1) {
    throw DomainError(std::string(fn) + ": dimension must be positive");
  }
  if (!std::isfinite(a) || !(a > 0.5 * (n - 1))) {
    std::ostringstream os;
    os << fn << ": argument " << a << " outside domain a > " << 0.5 * (n - 1);
    throw DomainError(os.str());
  }
}

}  // namespace detail

/// ln Gamma_n(a) = n(n-1)/4 ln(pi) + sum_{j=1..n} ln Gamma(a + (1-j)/2).
///
/// Scalar log-gamma values come from Boost's Lanczos approximation, which is
/// thread safe (unlike std::lgamma, which writes `signgam`).
inline double log_mvgamma(int n, double a) {
  detail::check_mv_domain("log_mvgamma", n, a);
  double acc = 0.25 * n * (n - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= n; ++j) acc += boost::math::lgamma(a + 0.5 * (1 - j));
  return acc;
}

/// Derivative of log_mvgamma with respect to a.
inline double mv_digamma(int n, double a) {
  detail::check_mv_domain("mv_digamma", n, a);
  double acc = 0.0;
  for (int j = 1; j <= n; ++j) acc += boost::math::digamma(a + 0.5 * (1 - j));
  return acc;
}

/// Second derivative of log_mvgamma; strictly positive on the domain.
inline double mv_trigamma(int n, double a) {
  detail::check_mv_domain("mv_trigamma", n, a);
  double acc = 0.0;
  for (int j = 1; j <= n; ++j) acc += boost::math::trigamma(a + 0.5 * (1 - j));
  return acc;
}

using ScalarFn = std::function<double(double)>;

struct RootOptions {
  double tol = 1e-10;            // relative x-tolerance
  double ftol = 0.0;             // early exit when |f(x)| <= ftol
  bool expand_lower = true;      // the bracket may grow below `lower`
  bool expand_upper = true;      // the bracket may grow above `upper`
  int max_expansions = 60;       // doublings of the bracket width
  int max_iterations = 500;
};

namespace detail {

inline double checked_eval(const ScalarFn& f, double x) {
  const double fx = f(x);
  if (!std::isfinite(fx)) {
    std::ostringstream os;
    os << "non-finite function value at x = " << x;
    throw NumericError("find_root", os.str());
  }
  return fx;
}

}  // namespace detail

/// Safeguarded Newton iteration inside a maintained sign-change bracket.
///
/// If [lower, upper] carries no sign change, the bracket is widened by
/// doubling its width on the permitted sides, at most `max_expansions` times.
/// Without a derivative the Newton slope is replaced by the secant through the
/// bracket end points. Any step leaving the bracket, or failing to halve it
/// within two iterations, falls back to bisection.
inline double find_root(const ScalarFn& f, const std::optional<ScalarFn>& df,
                        double lower, double upper,
                        const RootOptions& opts = {}) {
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw DomainError("find_root: invalid bracket");
  }
  double flo = detail::checked_eval(f, lower);
  double fhi = detail::checked_eval(f, upper);
  int expansions = 0;
  while (std::signbit(flo) == std::signbit(fhi) && flo != 0.0 && fhi != 0.0) {
    if (expansions++ >= opts.max_expansions ||
        !(opts.expand_lower || opts.expand_upper)) {
      std::ostringstream os;
      os << "no sign change on [" << lower << ", " << upper << "]";
      throw NumericError("find_root", os.str());
    }
    const double width = upper - lower;
    // Grow toward the side whose value is closer to zero first; with only one
    // side allowed, grow that one.
    const bool grow_upper =
        opts.expand_upper && (!opts.expand_lower || std::abs(fhi) <= std::abs(flo));
    if (grow_upper) {
      upper += width;
      fhi = detail::checked_eval(f, upper);
    } else {
      lower -= width;
      flo = detail::checked_eval(f, lower);
    }
  }
  if (flo == 0.0) return lower;
  if (fhi == 0.0) return upper;

  // `a` is the end where f < 0, `b` the end where f > 0.
  double a = lower, fa = flo, b = upper, fb = fhi;
  if (flo > 0.0) {
    std::swap(a, b);
    std::swap(fa, fb);
  }

  double x = 0.5 * (a + b);
  double width_prev = std::abs(b - a), width_prev2 = 2.0 * width_prev;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const double fx = detail::checked_eval(f, x);
    if (std::abs(fx) <= opts.ftol) return x;
    if (fx < 0.0) {
      a = x;
      fa = fx;
    } else {
      b = x;
      fb = fx;
    }
    const double width = std::abs(b - a);
    const double scale = std::max(1.0, std::abs(x));
    if (width <= opts.tol * scale) return 0.5 * (a + b);

    const double slope = df ? (*df)(x) : (fb - fa) / (b - a);
    double next = std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(slope) && slope != 0.0) next = x - fx / slope;
    const bool inside = std::isfinite(next) && next > std::min(a, b) &&
                        next < std::max(a, b);
    const bool stalled = width > 0.5 * width_prev2;
    width_prev2 = width_prev;
    width_prev = width;
    if (inside && std::abs(next - x) <= 0.5 * opts.tol * scale) return next;
    if (!inside || stalled) next = 0.5 * (a + b);
    x = next;
  }
  throw NumericError("find_root", "iteration limit reached");
}

inline double find_root(const ScalarFn& f, double lower, double upper,
                        double tol = 1e-10) {
  RootOptions opts;
  opts.tol = tol;
  return find_root(f, std::nullopt, lower, upper, opts);
}

}  // namespace cmvt::special
