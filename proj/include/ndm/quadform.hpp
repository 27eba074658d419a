#ifndef NDM_QUADFORM_HPP
#define NDM_QUADFORM_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "ndm/mle.hpp"
#include "ndm/model.hpp"

namespace ndm {

// nu-hat' C nu-hat, the raw network statistic of the whitened residuals.
inline double t_stat(const DisturbanceModel& model, const Eigen::VectorXd& y,
                     const Eigen::MatrixXd& c, double rho) {
  const FitAtRho fit = fit_at_rho(model, y, rho);
  return fit.nu_residuals.dot(c * fit.nu_residuals);
}

// Centered statistic whose root in rho defines the estimator:
// T^C(rho) + sigma2_hat(rho) * Tr{H_rho C}.
inline double estimating_fn(const DisturbanceModel& model,
                            const Eigen::VectorXd& y, const Eigen::MatrixXd& c,
                            double rho) {
  const FitAtRho fit = fit_at_rho(model, y, rho);
  double tr_hc = 0.0;
  if (model.m > 0) {
    const Eigen::MatrixXd kx = model.x - rho * (model.w.w * model.x);
    const Eigen::MatrixXd q = detail::transformed_design_basis(kx);
    tr_hc = (q.transpose() * c * q).trace();
  }
  return fit.nu_residuals.dot(c * fit.nu_residuals) + fit.sigma2_hat * tr_hc;
}

struct QuadformFit {
  FitStatus status = FitStatus::converged;
  double rho_hat = 0.0;
  std::vector<double> all_roots;  // every sign-change root on the grid
  FitAtRho at_rho;                // populated unless status == no_root
};

// Root of the estimating function over the admissible interval: a 41-point
// grid locates sign changes, each bracket is refined by a bisection/secant
// hybrid to width 1e-9. With several roots the one with the steepest slope
// of the estimating function is taken; all are reported. No sign change on
// the grid gives status no_root.
inline QuadformFit fit_quadform(const DisturbanceModel& model,
                                const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& c) {
  const RhoInterval iv = admissible_interval(model.w);
  constexpr int kGrid = 41;
  auto rho_at = [&](int i) {
    return std::clamp(iv.lo + (iv.hi - iv.lo) * i / (kGrid - 1), iv.lo, iv.hi);
  };
  auto u = [&](double rho) { return estimating_fn(model, y, c, rho); };

  double vals[kGrid];
  for (int i = 0; i < kGrid; ++i) vals[i] = u(rho_at(i));

  QuadformFit out;
  std::vector<double> slopes;
  for (int i = 0; i + 1 < kGrid; ++i) {
    double a = rho_at(i), b = rho_at(i + 1);
    double fa = vals[i], fb = vals[i + 1];
    if (fa == 0.0) { a = b = rho_at(i); fb = fa; }
    else if (!((fa < 0.0) != (fb < 0.0))) continue;
    bool use_secant = true;
    while (b - a > 1e-9) {
      // alternate secant and bisection steps so the bracket keeps shrinking
      double mid = 0.5 * (a + b);
      if (use_secant && fb != fa) {
        const double s = a - fa * (b - a) / (fb - fa);
        if (s > a && s < b) mid = s;
      }
      use_secant = !use_secant;
      const double fm = u(mid);
      if (fm == 0.0) { a = b = mid; break; }
      if ((fm < 0.0) == (fa < 0.0)) { a = mid; fa = fm; }
      else { b = mid; fb = fm; }
    }
    const double root = 0.5 * (a + b);
    out.all_roots.push_back(root);
    const double step = std::max(1e-6, 1e-6 * (iv.hi - iv.lo));
    const double lo = std::max(iv.lo, root - step);
    const double hi = std::min(iv.hi, root + step);
    slopes.push_back(std::abs((u(hi) - u(lo)) / (hi - lo)));
  }
  if (out.all_roots.empty()) {
    out.status = FitStatus::no_root;
    return out;
  }
  const auto best = std::max_element(slopes.begin(), slopes.end());
  out.rho_hat = out.all_roots[static_cast<std::size_t>(best - slopes.begin())];
  out.status = FitStatus::converged;
  out.at_rho = fit_at_rho(model, y, out.rho_hat);
  return out;
}

// Plug-in spread approximation for the root of the estimating function.
struct QfScale {
  double tau_hat_sq = 0.0;  // variance of the centered statistic
  double delta_hat = 0.0;   // slope estimate of its mean in rho
  double s_hat = 0.0;       // tau_hat / |delta_hat|
};

namespace detail {

// (I-H) C (I-H) + n^-1 (I-H) Tr{H C}
inline Eigen::MatrixXd centered_form(const Eigen::MatrixXd& c,
                                     const Eigen::MatrixXd& p, int n) {
  const double tr_hc = c.trace() - (p * c).trace();
  return p * c * p + (tr_hc / n) * p;
}

}  // namespace detail

inline QfScale qf_scale(const DisturbanceModel& model, const Eigen::MatrixXd& c,
                        double rho0) {
  const int n = model.n;
  const Eigen::MatrixXd h = projection_h(model.w, rho0, model.x);
  const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n) - h;
  const Eigen::MatrixXd z = z_matrix(model.w, rho0);
  const Eigen::MatrixXd cs = c + c.transpose();

  QfScale out;
  const Eigen::MatrixXd q = detail::centered_form(cs, p, n);
  out.tau_hat_sq = 0.5 * (q * q).trace();

  const double tr_hc = c.trace() - (p * c).trace();
  const double d1 =
      (p * (z.transpose() * p - z * h) * cs).trace();
  const double d2 = (c * (p * z * h + h * z.transpose() * p)).trace();
  const double d3 = (2.0 / n) * (p * z).trace() * tr_hc;
  out.delta_hat = d1 + d2 + d3;
  out.s_hat = out.delta_hat != 0.0
                  ? std::sqrt(std::max(out.tau_hat_sq, 0.0)) / std::abs(out.delta_hat)
                  : std::numeric_limits<double>::quiet_NaN();
  return out;
}

struct PermutationSpread {
  int requested = 0;
  int used = 0;      // replicates with a root
  int no_root = 0;   // replicates without one (excluded from the spread)
  double mean = 0.0;
  double sd = 0.0;   // sample standard deviation of the refit estimates
  std::vector<double> estimates;
};

// Permutation assessment of estimator spread: permute the whitened
// residuals at the fitted correlation, rebuild a synthetic outcome with the
// fitted regression part, and refit. Pure in (inputs, seed).
inline PermutationSpread permutation_spread(const DisturbanceModel& model,
                                            const Eigen::VectorXd& y,
                                            const Eigen::MatrixXd& c,
                                            int replicates, std::uint64_t seed) {
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  const QuadformFit base = fit_quadform(model, y, c);
  if (base.status != FitStatus::converged)
    throw degenerate_error("permutation spread needs a fitted correlation");
  const KFactor kf(model.w, base.rho_hat);
  const Eigen::VectorXd& nu = base.at_rho.nu_residuals;
  const Eigen::VectorXd xb = model.m > 0
                                 ? Eigen::VectorXd(model.x * base.at_rho.beta_hat)
                                 : Eigen::VectorXd(Eigen::VectorXd::Zero(model.n));
  PermutationSpread out;
  out.requested = replicates;
  std::vector<int> idx(static_cast<std::size_t>(model.n));
  for (int r = 0; r < replicates; ++r) {
    Rng rng(substream_seed(seed, static_cast<std::uint64_t>(r)));
    for (int i = 0; i < model.n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = model.n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(i + 1)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    Eigen::VectorXd nu_pi(model.n);
    for (int i = 0; i < model.n; ++i) nu_pi(i) = nu(idx[static_cast<std::size_t>(i)]);
    const Eigen::VectorXd y_pi = xb + kf.solve(nu_pi);
    const QuadformFit refit = fit_quadform(model, y_pi, c);
    if (refit.status == FitStatus::converged)
      out.estimates.push_back(refit.rho_hat);
    else
      ++out.no_root;
  }
  out.used = static_cast<int>(out.estimates.size());
  if (out.used > 0) {
    double s = 0.0;
    for (double v : out.estimates) s += v;
    out.mean = s / out.used;
    if (out.used > 1) {
      double ss = 0.0;
      for (double v : out.estimates) ss += (v - out.mean) * (v - out.mean);
      out.sd = std::sqrt(ss / (out.used - 1));
    }
  }
  return out;
}

}  // namespace ndm

#endif  // NDM_QUADFORM_HPP
