// Simulates a small Type I VAR(1), fits it by EM and prints the estimates.
#include <iostream>

#include "cmvt/cmvt.hpp"

int main() {
  using namespace cmvt;
  Type1Params truth;
  MatrixXd Pi(2, 3);
  Pi << 0.1, 0.5, 0.1,
       -0.2, 0.0, 0.4;
  truth.pi0 = linalg::vec(Pi);
  truth.lambda0 = VectorXd::Constant(3, 0.01);
  truth.nu0 = 8.0;
  truth.V0 = 5.0 * MatrixXd::Identity(2, 2);

  simulate::RngStream rng(2024);
  const MatrixXd exogenous = MatrixXd::Ones(1, 300);
  const auto data = simulate::simulate_bvar(truth, exogenous, MatrixXd::Zero(2, 1), rng);
  const auto design = build_design(data);

  FitOptions opts;
  opts.max_iters = 200;
  const auto result = type1::fit(type1::default_init(design), design, opts);
  std::cout << "iterations: " << result.trace.iterations.size() - 1 << " ("
            << to_string(result.trace.stop_reason) << ")\n"
            << "log-likelihood: " << result.trace.iterations.back().loglik << "\n"
            << "prior mean of Pi:\n" << result.params.pi0_matrix() << "\n"
            << "V0:\n" << result.params.V0 << "\n";

  // The same data under the Minnesota parameterization with random-walk flags.
  const auto h = minnesota::fit_type1(minnesota::default_init(design, VectorXd::Ones(2), 1), 1, design, opts);
  std::cout << "alpha = " << h.params.alpha << ", gamma = " << h.params.gamma.transpose()
            << ", eps = " << h.params.eps.transpose() << "\n";
}
