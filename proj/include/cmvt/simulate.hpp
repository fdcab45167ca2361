#pragma once

#include <cmath>
#include <cstdint>

#include <boost/math/special_functions/erf.hpp>
#include <Eigen/Dense>

#include "cmvt/dataset.hpp"
#include "cmvt/errors.hpp"
#include "cmvt/linalg.hpp"
#include "cmvt/params.hpp"

namespace cmvt::simulate {

/// Counter-based generator: draw k of stream s is a pure function of
/// (seed, s, k), the SplitMix64 finalizer applied to a Weyl sequence. Streams
/// obtained with split(i) are independent of the parent's draw count, which
/// makes per-index parallel simulation reproducible.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), key_(mix(seed ^ mix(stream + 0x632BE59BD9B4E019ULL))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  RngStream split(std::uint64_t index) const {
    RngStream child(seed_, 0);
    child.key_ = mix(key_ ^ mix(index + 0x9E3779B97F4A7C15ULL));
    return child;
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal by inversion of the CDF.
  double normal() { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * uniform()); }

  /// Gamma(shape, 1) by Marsaglia-Tsang; shapes below one are boosted by
  /// U^{1/shape}.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw DomainError("gamma: shape must be positive");
    if (shape < 1.0) return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  VectorXd normal_vector(Eigen::Index size) {
    VectorXd z(size);
    for (Eigen::Index i = 0; i < size; ++i) z(i) = normal();
    return z;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Draw from IW(nu, V): with L L' = V^{-1} and the Bartlett factor A
/// (A_ii^2 ~ chi^2_{nu-i+1}, A_ij ~ N(0,1) below the diagonal),
/// Sigma^{-1} = (L A)(L A)' ~ W(nu, V^{-1}).
inline MatrixXd sample_inverse_wishart(double nu, const MatrixXd& V, RngStream& rng) {
  const Eigen::Index n = V.rows();
  if (V.cols() != n || n < 1) throw DimensionError("sample_inverse_wishart: V must be square");
  if (!(nu > static_cast<double>(n) - 1.0))
    throw DomainError("sample_inverse_wishart: nu must exceed n - 1");
  const linalg::SpdFactor scale(V, "inverse-Wishart scale");
  const MatrixXd L = linalg::SpdFactor(scale.inverse(), "inverse-Wishart scale").lower();
  MatrixXd A = MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, i) = std::sqrt(rng.chi_squared(nu - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  const MatrixXd LA = L * A;  // lower triangular
  // Sigma = (LA)^{-T} (LA)^{-1}
  const MatrixXd inv = LA.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(n, n));
  return linalg::symmetrize(inv.transpose() * inv);
}

/// pi0 + vec(Sigma^{1/2} Z Lambda0^{1/2}), i.e. a draw from
/// N(pi0, Lambda0 (x) Sigma) with Sigma^{1/2} the Cholesky factor.
inline VectorXd sample_coeff_vector(const VectorXd& pi0, const VectorXd& lambda0, const MatrixXd& Sigma,
                                    RngStream& rng) {
  const Eigen::Index n = Sigma.rows(), d = lambda0.size();
  if (Sigma.cols() != n || pi0.size() != n * d)
    throw DimensionError("sample_coeff_vector: dimension mismatch");
  if ((lambda0.array() < 0.0).any()) throw DomainError("sample_coeff_vector: negative lambda");
  const MatrixXd L = linalg::SpdFactor(Sigma, "Sigma").lower();
  MatrixXd Z(n, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < n; ++i) Z(i, j) = rng.normal();
  return pi0 + linalg::vec(L * Z * lambda0.cwiseSqrt().asDiagonal());
}

/// Simulates y_1..y_T given the exogenous path (l x T, first row ones) and
/// presample (n x p). Type I draws one (Pi, Sigma) for the whole path; Type II
/// draws a fresh pair each period.
template <ModelKind Kind>
TimeSeriesDataset simulate_bvar(const Params<Kind>& params, const MatrixXd& exogenous,
                                const MatrixXd& presample, RngStream& rng) {
  params.validate();
  const Eigen::Index n = params.n(), l = exogenous.rows(), p = presample.cols(), T = exogenous.cols();
  if (presample.rows() != n && p > 0) throw DimensionError("simulate_bvar: presample must be n x p");
  if (l + n * p != params.d()) throw DimensionError("simulate_bvar: l + n p must equal d");
  if (T < 1) throw DimensionError("simulate_bvar: T must be at least 1");

  MatrixXd full(n, p + T);
  if (p > 0) full.leftCols(p) = presample;
  MatrixXd Sigma, Pi;
  auto draw = [&] {
    Sigma = sample_inverse_wishart(params.nu0, params.V0, rng);
    Pi = linalg::unvec(sample_coeff_vector(params.pi0, params.lambda0, Sigma, rng), n, params.d());
  };
  if constexpr (Kind == ModelKind::kType1) draw();
  VectorXd Yt(params.d());
  for (Eigen::Index t = 0; t < T; ++t) {
    if constexpr (Kind == ModelKind::kType2) draw();
    Yt.head(l) = exogenous.col(t);
    for (Eigen::Index j = 1; j <= p; ++j) Yt.segment(l + (j - 1) * n, n) = full.col(t + p - j);
    const MatrixXd chol = linalg::SpdFactor(Sigma, "Sigma").lower();
    full.col(p + t) = Pi * Yt + chol * rng.normal_vector(n);
  }
  MatrixXd pre = p > 0 ? MatrixXd(full.leftCols(p)) : MatrixXd(n, 0);
  return TimeSeriesDataset(full.rightCols(T), std::move(pre), exogenous);
}

}  // namespace cmvt::simulate
