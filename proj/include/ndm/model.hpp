#ifndef NDM_MODEL_HPP
#define NDM_MODEL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>

#include "ndm/graph.hpp"
#include "ndm/rng.hpp"

namespace ndm {

// Errors in the admissibility of rho (K_rho close to or past singularity).
struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Numerically singular K_rho or rank-deficient transformed design.
struct degenerate_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Open interval of admissible correlation values, shrunk by a relative margin
// so K_rho stays well conditioned near the ends.
struct RhoInterval {
  double lo;
  double hi;
  bool contains(double rho) const { return rho >= lo && rho <= hi; }
};

inline RhoInterval admissible_interval(const WeightMatrix& w) {
  const double r = w.spectral_radius;
  // zero W: K_rho = I for every rho; use a wide finite interval
  const double bound = r > 1e-12 ? 1.0 / r : 1e6;
  const double margin = 1e-6 * bound;
  return {-bound + margin, bound - margin};
}

inline void require_admissible(const WeightMatrix& w, double rho) {
  if (!admissible_interval(w).contains(rho))
    throw domain_error("rho outside the admissible interval");
}

inline Eigen::MatrixXd k_matrix(const WeightMatrix& w, double rho) {
  require_admissible(w, rho);
  Eigen::MatrixXd k = -rho * w.w;
  k.diagonal().array() += 1.0;
  return k;
}

inline Eigen::VectorXd k_apply(const WeightMatrix& w, double rho,
                               const Eigen::VectorXd& v) {
  require_admissible(w, rho);
  return v - rho * (w.w * v);
}

// Factored K_rho for repeated solves with the same rho.
class KFactor {
 public:
  KFactor(const WeightMatrix& w, double rho) : lu_(k_matrix(w, rho)) {}

  Eigen::VectorXd solve(const Eigen::VectorXd& v) const {
    Eigen::VectorXd u = lu_.solve(v);
    if (!u.allFinite() ||
        (lu_.reconstructedMatrix() * u - v).norm() > 1e-9 * (v.norm() + 1e-300))
      throw degenerate_error("K_rho solve failed: matrix numerically singular");
    return u;
  }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const {
    Eigen::MatrixXd u = lu_.solve(b);
    if (!u.allFinite())
      throw degenerate_error("K_rho solve failed: matrix numerically singular");
    return u;
  }
  Eigen::MatrixXd inverse() const { return lu_.inverse(); }

  // log det K_rho; throws if the determinant is not strictly positive.
  double log_det() const {
    double logabs = 0.0;
    double sign = lu_.permutationP().determinant() > 0 ? 1.0 : -1.0;
    const auto& u = lu_.matrixLU();
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const double d = u(i, i);
      if (d == 0.0) throw degenerate_error("K_rho is singular");
      if (d < 0.0) sign = -sign;
      logabs += std::log(std::abs(d));
    }
    if (sign <= 0.0)
      throw domain_error("det K_rho is nonpositive: rho outside admissible region");
    return logabs;
  }

 private:
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

inline Eigen::VectorXd k_solve(const WeightMatrix& w, double rho,
                               const Eigen::VectorXd& v) {
  return KFactor(w, rho).solve(v);
}

inline double log_det_k(const WeightMatrix& w, double rho) {
  return KFactor(w, rho).log_det();
}

// Regression with network-correlated errors: the design matrix paired with
// the weight matrix that drives the error dependence. m = 0 encodes the
// structureless model (projection onto {0}).
struct DisturbanceModel {
  Eigen::MatrixXd x;  // n x m, full column rank when m >= 1
  WeightMatrix w;
  int n = 0;
  int m = 0;

  DisturbanceModel(Eigen::MatrixXd design, WeightMatrix weights)
      : x(std::move(design)), w(std::move(weights)) {
    n = w.n();
    m = static_cast<int>(x.cols());
    if (m == 0 && x.rows() == 0) x.resize(n, 0);
    if (x.rows() != n) throw std::invalid_argument("design rows must match W");
    if (m >= n) throw std::invalid_argument("design must have fewer columns than rows");
    if (m >= 1) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
      const auto& sv = svd.singularValues();
      if (sv(m - 1) <= n * std::numeric_limits<double>::epsilon() * sv(0))
        throw degenerate_error("design matrix is rank deficient");
    }
  }
};

namespace detail {

// Orthonormal basis of the columns of K_rho X (n x m). Throws on rank
// deficiency. m = 0 yields an n x 0 matrix.
inline Eigen::MatrixXd transformed_design_basis(const Eigen::MatrixXd& kx) {
  const int n = static_cast<int>(kx.rows());
  const int m = static_cast<int>(kx.cols());
  if (m == 0) return Eigen::MatrixXd(n, 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(kx);
  const auto& sv = svd.singularValues();
  if (sv(m - 1) <= n * std::numeric_limits<double>::epsilon() * sv(0))
    throw degenerate_error("K_rho X is rank deficient");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(kx);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
  return q;
}

}  // namespace detail

// Orthogonal projection onto the span of K_rho X, built from an orthonormal
// basis rather than normal equations.
inline Eigen::MatrixXd projection_h(const WeightMatrix& w, double rho,
                                    const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd kx = x.cols() == 0
                                 ? Eigen::MatrixXd(w.n(), 0)
                                 : Eigen::MatrixXd(x - rho * (w.w * x));
  if (x.cols() == 0) return Eigen::MatrixXd::Zero(w.n(), w.n());
  require_admissible(w, rho);
  const Eigen::MatrixXd q = detail::transformed_design_basis(kx);
  return q * q.transpose();
}

struct FitAtRho {
  double rho = 0.0;
  Eigen::VectorXd beta_hat;      // m
  double sigma2_hat = 0.0;       // |nu_residuals|^2 / n
  Eigen::VectorXd residuals;     // eps-hat = K^-1 nu_residuals
  Eigen::VectorXd nu_residuals;  // (I - H) K y
};

// Generalized least squares at a fixed correlation: regress K_rho y on
// K_rho X.
inline FitAtRho fit_at_rho(const DisturbanceModel& model, const Eigen::VectorXd& y,
                           double rho) {
  if (y.size() != model.n) throw std::invalid_argument("y has wrong length");
  if (!y.allFinite()) throw std::invalid_argument("y must be finite");
  require_admissible(model.w, rho);
  const KFactor kf(model.w, rho);
  const Eigen::VectorXd ky = k_apply(model.w, rho, y);
  FitAtRho fit;
  fit.rho = rho;
  if (model.m == 0) {
    fit.beta_hat.resize(0);
    fit.nu_residuals = ky;
  } else {
    const Eigen::MatrixXd kx = model.x - rho * (model.w.w * model.x);
    const Eigen::MatrixXd q = detail::transformed_design_basis(kx);
    const Eigen::VectorXd qty = q.transpose() * ky;
    fit.nu_residuals = ky - q * qty;
    fit.beta_hat = kx.householderQr().solve(ky);
  }
  fit.sigma2_hat = fit.nu_residuals.squaredNorm() / model.n;
  fit.residuals = kf.solve(fit.nu_residuals);
  return fit;
}

// Draw y = X beta + K_rho^-1 nu with nu ~ N(0, sigma^2 I) from the seeded
// stream. Pure in (inputs, seed).
inline Eigen::VectorXd simulate(const DisturbanceModel& model,
                                const Eigen::VectorXd& beta, double sigma,
                                double rho, std::uint64_t seed) {
  if (beta.size() != model.m) throw std::invalid_argument("beta has wrong length");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  require_admissible(model.w, rho);
  Rng rng(seed);
  Eigen::VectorXd nu(model.n);
  for (int i = 0; i < model.n; ++i) nu(i) = sigma * rng.normal();
  Eigen::VectorXd y = KFactor(model.w, rho).solve(nu);
  if (model.m > 0) y += model.x * beta;
  return y;
}

}  // namespace ndm

#endif  // NDM_MODEL_HPP
