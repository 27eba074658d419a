#ifndef NDM_BOUNDS_HPP
#define NDM_BOUNDS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "ndm/mle.hpp"
#include "ndm/model.hpp"

namespace ndm {

// Information-style precision floor for estimating the correlation, plus the
// trace quantities it is built from.
struct PrecisionReport {
  double gamma = 0.0;           // lower bound on the spread of any unbiased estimator
  double trace_z2 = 0.0;        // Tr{Z^2}
  double trace_zzt = 0.0;       // Tr{Z Z'}
  double v_rho0 = 0.0;          // Tr{(Z Z' + Z^2)(I - H)}, H = 0 here
  double psi0 = 0.0;            // spread approximation; equals gamma without structure
  double lambda_max_wtw = 0.0;  // largest eigenvalue of W'W
  bool unbounded = false;       // zero W: no information about rho at all
};

inline PrecisionReport crlb(const WeightMatrix& w, double rho0) {
  require_admissible(w, rho0);
  const Eigen::MatrixXd z = z_matrix(w, rho0);
  PrecisionReport r;
  r.trace_z2 = (z * z).trace();
  r.trace_zzt = (z * z.transpose()).trace();
  r.v_rho0 = r.trace_z2 + r.trace_zzt;
  r.lambda_max_wtw =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(w.w.transpose() * w.w)
          .eigenvalues()
          .maxCoeff();
  if (r.v_rho0 > 0.0) {
    r.gamma = 1.0 / std::sqrt(r.v_rho0);
  } else {
    r.gamma = std::numeric_limits<double>::infinity();
    r.unbounded = true;
  }
  r.psi0 = r.gamma;
  return r;
}

// Covariance of the regression coefficients fitted at rho when the errors
// actually follow the model at rho0: sigma^2 (X'S X)^-1 X'S S0^-1 S X (X'S X)^-1
// with S = K_rho' K_rho.
inline Eigen::MatrixXd beta_cov_off_model(const DisturbanceModel& model,
                                          double rho, double rho0, double sigma) {
  if (model.m == 0) return Eigen::MatrixXd(0, 0);
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const Eigen::MatrixXd k = k_matrix(model.w, rho);
  const Eigen::MatrixXd k0 = k_matrix(model.w, rho0);
  const Eigen::MatrixXd s = k.transpose() * k;
  const Eigen::MatrixXd s0 = k0.transpose() * k0;
  const Eigen::MatrixXd xsx = model.x.transpose() * s * model.x;
  const Eigen::LLT<Eigen::MatrixXd> llt(xsx);
  if (llt.info() != Eigen::Success)
    throw degenerate_error("X'S X is not positive definite");
  const Eigen::MatrixXd sx = s * model.x;  // n x m
  const Eigen::MatrixXd mid = Eigen::LLT<Eigen::MatrixXd>(s0).solve(sx);
  const Eigen::MatrixXd cov =
      sigma * sigma * llt.solve(llt.solve(sx.transpose() * mid).transpose());
  return 0.5 * (cov + cov.transpose());
}

namespace detail {

// Symmetric positive semidefinite square root; tiny negative eigenvalues in
// [-1e-12, 0] are clamped to zero.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0.0 && ev(i) >= -1e-12) ev(i) = 0.0;
    if (ev(i) < 0.0) throw degenerate_error("matrix square root of an indefinite matrix");
  }
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace detail

struct BetaConditioning {
  double lambda_min_xtx = 0.0;
  double lambda_min_s = 0.0;       // smallest eigenvalue of S_rho = K'K
  double lambda_max_s_ratio = 0.0; // largest eigenvalue of S^{1/2} S0^-1 S^{1/2}
};

inline BetaConditioning beta_conditioning(const DisturbanceModel& model,
                                          double rho, double rho0) {
  const Eigen::MatrixXd k = k_matrix(model.w, rho);
  const Eigen::MatrixXd k0 = k_matrix(model.w, rho0);
  const Eigen::MatrixXd s = k.transpose() * k;
  const Eigen::MatrixXd s0 = k0.transpose() * k0;
  BetaConditioning out;
  if (model.m > 0) {
    out.lambda_min_xtx = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                             model.x.transpose() * model.x)
                             .eigenvalues()
                             .minCoeff();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_s(s);
  out.lambda_min_s = es_s.eigenvalues().minCoeff();
  const Eigen::MatrixXd root = detail::psd_sqrt(s);
  const Eigen::MatrixXd ratio =
      root * Eigen::LLT<Eigen::MatrixXd>(s0).solve(root);
  out.lambda_max_s_ratio =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (ratio + ratio.transpose()))
          .eigenvalues()
          .maxCoeff();
  return out;
}

// Diagnostics for whether the data could equally come from the model where
// the network acts on the outcomes themselves rather than the errors.
struct NemReport {
  Eigen::MatrixXd gamma_mat;   // m x m projection coefficient of WX onto span(X)
  Eigen::MatrixXd e_mat;       // n x m residual of WX off span(X)
  double lambda_max_ete = 0.0;
  double v1 = 0.0;             // score variance in the outcome-network model
  double v2 = 0.0;             // same after reparametrizing the mean
  Eigen::MatrixXd g_rho;       // n x m sensitivity of the mean shape in rho
  Eigen::VectorXd beta_offset; // mean of beta-hat fitted at rho under rho', minus beta
};

inline NemReport nem_diagnostics(const DisturbanceModel& model,
                                 const Eigen::VectorXd& beta, double sigma,
                                 double rho0, double rho_fit, double rho_true) {
  if (model.m == 0) throw std::invalid_argument("diagnostics need a nonempty design");
  if (beta.size() != model.m) throw std::invalid_argument("beta has wrong length");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  require_admissible(model.w, rho0);
  const Eigen::MatrixXd& x = model.x;
  const Eigen::MatrixXd wx = model.w.w * x;
  const Eigen::LLT<Eigen::MatrixXd> xtx(x.transpose() * x);
  NemReport r;
  r.gamma_mat = xtx.solve(x.transpose() * wx);
  r.e_mat = wx - x * r.gamma_mat;
  r.lambda_max_ete = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                         r.e_mat.transpose() * r.e_mat)
                         .eigenvalues()
                         .maxCoeff();
  const Eigen::MatrixXd z = z_matrix(model.w, rho0);
  const double tr = (z * z).trace() + (z * z.transpose()).trace();
  r.v1 = tr + (z * x * beta).squaredNorm() / (sigma * sigma);
  const Eigen::MatrixXd ig =
      Eigen::MatrixXd::Identity(model.m, model.m) - rho0 * r.gamma_mat;
  const Eigen::PartialPivLU<Eigen::MatrixXd> ig_lu(ig);
  const Eigen::VectorXd g_vec = ig_lu.solve(beta);
  if (!g_vec.allFinite() || (ig * g_vec - beta).norm() > 1e-9 * (beta.norm() + 1e-300))
    throw degenerate_error("I - rho0 Gamma is numerically singular");
  const KFactor kf(model.w, rho0);
  r.g_rho = r.e_mat * ig - rho0 * kf.solve(Eigen::MatrixXd(model.w.w * (r.e_mat * ig))) -
            rho0 * r.e_mat * r.gamma_mat;
  r.v2 = tr + (r.g_rho * g_vec).squaredNorm() / (sigma * sigma);
  // mean of the coefficient estimate fitted at rho_fit when the data follow
  // the errors-network model at rho_true
  const Eigen::MatrixXd k_fit = k_matrix(model.w, rho_fit);
  const Eigen::VectorXd mean_beta =
      xtx.solve(x.transpose() * (k_fit * KFactor(model.w, rho_true).solve(
                                             Eigen::VectorXd(x * beta))));
  r.beta_offset = mean_beta - beta;
  return r;
}

// Default advisory thresholds (engineering choices, configurable by callers).
struct WarningThresholds {
  double gamma_floor = 0.1;     // gamma at or above this: rho not reliably estimable
  double nem_ceiling = 25.0;    // lambda_max(E'E) + Tr{W^2 + WW'} at or below this:
                                // neither rho nor beta is well determined
};

struct Advisories {
  bool rho_imprecise = false;
  bool nem_confounded = false;
  double gamma = 0.0;
  double nem_score = 0.0;  // lambda_max(E'E) + Tr{W^2 + WW'}
};

inline Advisories check_advisories(const DisturbanceModel& model, double rho0,
                                   const WarningThresholds& th = {}) {
  Advisories a;
  a.gamma = crlb(model.w, rho0).gamma;
  a.rho_imprecise = a.gamma >= th.gamma_floor;
  const Eigen::MatrixXd& w = model.w.w;
  double lam = 0.0;
  if (model.m > 0) {
    const Eigen::MatrixXd wx = w * model.x;
    const Eigen::LLT<Eigen::MatrixXd> xtx(model.x.transpose() * model.x);
    const Eigen::MatrixXd e = wx - model.x * xtx.solve(model.x.transpose() * wx);
    lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(e.transpose() * e)
              .eigenvalues()
              .maxCoeff();
  }
  a.nem_score = lam + (w * w).trace() + (w * w.transpose()).trace();
  a.nem_confounded = a.nem_score <= th.nem_ceiling;
  return a;
}

}  // namespace ndm

#endif  // NDM_BOUNDS_HPP
