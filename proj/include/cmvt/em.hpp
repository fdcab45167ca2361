#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cmvt/errors.hpp"

namespace cmvt {

/// Form of the nu0 first-order condition after substituting the V0 update.
///  - kFirstOrder: ln|V0^{k+1}| is expanded exactly, giving n*ln(nu) terms.
///  - kUnscaledLog: the same equation with the n factor on the log terms
///    dropped. Both share the root nu0^{k} + T under Type I.
enum class Nu0Equation { kFirstOrder, kUnscaledLog };

/// Selector for the gamma_i update of the Minnesota steps.
///  - kConsistent: diag{l^{2 beta}} (x) E_ii, matching the prior variance law.
///  - kLogWeighted: diag{l^{2 beta} ln l} (x) E_ii, which vanishes at p = 1.
enum class GammaDelta { kConsistent, kLogWeighted };

/// Posterior degrees of freedom multiplying the Theta term of the Type II
/// gamma_i update: nu0 + 1 (like every other Type II update) or nu0 + T.
enum class GammaDof { kPerPeriod, kFullSample };

struct FitOptions {
  double tol = 1e-8;  // |delta loglik| / (1 + |loglik|)
  int max_iters = 500;
  bool update_nu0 = false;
  Nu0Equation nu0_equation = Nu0Equation::kFirstOrder;
  GammaDelta gamma_delta = GammaDelta::kConsistent;
  GammaDof type2_gamma_dof = GammaDof::kPerPeriod;
  double root_tol = 1e-10;
};

enum class StopReason { kTolerance, kMaxIters, kSolverFailure };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::kTolerance: return "tolerance";
    case StopReason::kMaxIters: return "max_iters";
    case StopReason::kSolverFailure: return "solver_failure";
  }
  return "unknown";
}

template <class Snapshot>
struct EMTrace {
  struct Entry {
    Snapshot params;
    double loglik;
  };
  std::vector<Entry> iterations;  // entry 0 is the initial value
  bool converged = false;
  StopReason stop_reason = StopReason::kMaxIters;
  std::string failure;  // failing update when stop_reason == kSolverFailure
};

template <class Snapshot>
struct FitResult {
  Snapshot params;
  EMTrace<Snapshot> trace;
};

/// Iterates `step` from `init` until the relative change in `objective`
/// drops below opts.tol or opts.max_iters steps were taken. A NumericError
/// raised by a step ends the run with StopReason::kSolverFailure and the last
/// good iterate.
template <class Snapshot>
FitResult<Snapshot> run_em(const Snapshot& init,
                           const std::function<Snapshot(const Snapshot&)>& step,
                           const std::function<double(const Snapshot&)>& objective,
                           const FitOptions& opts) {
  FitResult<Snapshot> out{init, {}};
  double ll = objective(init);
  out.trace.iterations.push_back({init, ll});
  for (int k = 0; k < opts.max_iters; ++k) {
    Snapshot next;
    double next_ll;
    try {
      next = step(out.params);
      next_ll = objective(next);
      if (!std::isfinite(next_ll)) throw NumericError("log-likelihood", "non-finite value");
    } catch (const NumericError& e) {
      out.trace.stop_reason = StopReason::kSolverFailure;
      out.trace.failure = e.what();
      return out;
    }
    out.params = std::move(next);
    out.trace.iterations.push_back({out.params, next_ll});
    const double change = std::abs(next_ll - ll) / (1.0 + std::abs(ll));
    ll = next_ll;
    if (change < opts.tol) {
      out.trace.converged = true;
      out.trace.stop_reason = StopReason::kTolerance;
      return out;
    }
  }
  out.trace.stop_reason = StopReason::kMaxIters;
  return out;
}

}  // namespace cmvt
