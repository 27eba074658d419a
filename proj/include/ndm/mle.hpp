#ifndef NDM_MLE_HPP
#define NDM_MLE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "ndm/model.hpp"

namespace ndm {

// z = W K_rho^-1, the sensitivity of the transformed errors to rho.
inline Eigen::MatrixXd z_matrix(const WeightMatrix& w, double rho) {
  return w.w * KFactor(w, rho).inverse();
}

// Profile (negative, scaled) log-likelihood in rho after maximizing over
// beta and sigma^2: log sigma2_hat(rho) - (2/n) log det K_rho.
inline double profile_objective(const DisturbanceModel& model,
                                const Eigen::VectorXd& y, double rho) {
  const FitAtRho fit = fit_at_rho(model, y, rho);
  if (!(fit.sigma2_hat > 0.0))
    throw degenerate_error("residual variance is zero: objective undefined");
  return std::log(fit.sigma2_hat) - (2.0 / model.n) * log_det_k(model.w, rho);
}

// Derivative of the profile objective in rho (up to sign conventions used by
// the root characterization): n/2 * dF/drho.
inline double score(const DisturbanceModel& model, const Eigen::VectorXd& y,
                    double rho) {
  const FitAtRho fit = fit_at_rho(model, y, rho);
  if (!(fit.sigma2_hat > 0.0))
    throw degenerate_error("residual variance is zero: score undefined");
  const Eigen::MatrixXd z = z_matrix(model.w, rho);
  const Eigen::VectorXd& nu = fit.nu_residuals;
  // (I-H)(Z' + Z)(I-H) applied inside the quadratic form: nu is already in
  // the orthogonal complement, so project only the middle factor's output.
  Eigen::VectorXd mid = z.transpose() * nu + z * nu;
  if (model.m > 0) {
    const Eigen::MatrixXd kx = model.x - rho * (model.w.w * model.x);
    const Eigen::MatrixXd q = detail::transformed_design_basis(kx);
    mid -= q * (q.transpose() * mid);
  }
  const double quad = nu.dot(mid);
  const double tr_z = z.trace();
  return -quad / (model.n * fit.sigma2_hat) + (2.0 / model.n) * tr_z;
}

enum class FitStatus { converged, boundary_degenerate, flat_likelihood, no_root };

inline const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::boundary_degenerate: return "boundary_degenerate";
    case FitStatus::flat_likelihood: return "flat_likelihood";
    case FitStatus::no_root: return "no_root";
  }
  return "unknown";
}

struct MleFit {
  FitStatus status = FitStatus::converged;
  double rho_hat = 0.0;
  FitAtRho at_rho;       // generalized least squares at rho_hat
  double objective = 0.0;
};

// Maximum likelihood for the correlation: 81-point grid scan over the
// admissible interval followed by golden-section refinement to interval
// width 1e-8. Minima pinned to an endpoint report boundary_degenerate; a
// numerically constant objective reports flat_likelihood.
inline MleFit fit_mle(const DisturbanceModel& model, const Eigen::VectorXd& y) {
  const RhoInterval iv = admissible_interval(model.w);
  constexpr int kGrid = 81;
  double best = std::numeric_limits<double>::infinity();
  double worst = -std::numeric_limits<double>::infinity();
  int best_i = 0;
  double grid[kGrid];
  for (int i = 0; i < kGrid; ++i) {
    const double rho = std::clamp(iv.lo + (iv.hi - iv.lo) * i / (kGrid - 1), iv.lo, iv.hi);
    grid[i] = profile_objective(model, y, rho);
    if (grid[i] < best) { best = grid[i]; best_i = i; }
    if (grid[i] > worst) worst = grid[i];
  }
  MleFit out;
  auto rho_at = [&](int i) {
    return std::clamp(iv.lo + (iv.hi - iv.lo) * i / (kGrid - 1), iv.lo, iv.hi);
  };
  if (worst - best < 1e-12) {
    out.status = FitStatus::flat_likelihood;
    out.rho_hat = rho_at(best_i);
    out.at_rho = fit_at_rho(model, y, out.rho_hat);
    out.objective = best;
    return out;
  }
  if (best_i == 0 || best_i == kGrid - 1) {
    out.status = FitStatus::boundary_degenerate;
    out.rho_hat = rho_at(best_i);
    out.at_rho = fit_at_rho(model, y, out.rho_hat);
    out.objective = best;
    return out;
  }
  // golden-section search on the bracketing grid interval
  double a = rho_at(best_i - 1), b = rho_at(best_i + 1);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = profile_objective(model, y, c);
  double fd = profile_objective(model, y, d);
  while (b - a > 1e-8) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a);
      fc = profile_objective(model, y, c);
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a);
      fd = profile_objective(model, y, d);
    }
  }
  out.status = FitStatus::converged;
  out.rho_hat = 0.5 * (a + b);
  out.at_rho = fit_at_rho(model, y, out.rho_hat);
  out.objective = profile_objective(model, y, out.rho_hat);
  return out;
}

// Population-level moments of the score at the true correlation, used for
// bias and spread approximations of the maximum likelihood estimator.
struct MleTheory {
  double mu0 = 0.0;      // mean of the score numerator: 2 Tr{H Z}
  double tau0_sq = 0.0;  // variance term: 2 Tr{(Z+Z')(I-H)(Z+Z')(I-H)}
  double delta0 = 0.0;   // slope of the expected score
  double psi0 = 0.0;     // spread approximation tau0 / Delta0
  double bias = 0.0;     // first-order bias -mu0 / Delta0
  double v_rho0 = 0.0;   // Tr{(Z Z' + Z^2)(I - H)}
};

inline MleTheory mle_theory(const DisturbanceModel& model, double rho0) {
  const Eigen::MatrixXd z = z_matrix(model.w, rho0);
  const Eigen::MatrixXd h = projection_h(model.w, rho0, model.x);
  const int n = model.n;
  const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n) - h;
  const Eigen::MatrixXd s = z + z.transpose();
  const Eigen::MatrixXd sp = s * p;
  MleTheory t;
  t.mu0 = 2.0 * (h * z).trace();
  t.tau0_sq = 2.0 * (sp * sp).trace();
  t.v_rho0 = ((z * z.transpose() + z * z) * p).trace();
  t.delta0 = 0.5 * t.tau0_sq +
             2.0 * ((-z * h * s * p).trace() + (h * z * z).trace());
  t.bias = t.delta0 != 0.0 ? -t.mu0 / t.delta0 : std::numeric_limits<double>::quiet_NaN();
  t.psi0 = t.delta0 != 0.0 ? std::sqrt(std::max(t.tau0_sq, 0.0)) / t.delta0
                           : std::numeric_limits<double>::quiet_NaN();
  return t;
}

}  // namespace ndm

#endif  // NDM_MLE_HPP
