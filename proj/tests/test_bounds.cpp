#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ndm/bounds.hpp"

using namespace ndm;

namespace {

Eigen::MatrixXd gauss_design(int n, int m, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, m);
  x.col(0).setOnes();
  for (int j = 1; j < m; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = rng.normal();
  return x;
}

Network cycle(int n) {
  Network g;
  g.n = n;
  g.adjacency = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
  }
  return g;
}

}  // namespace

TEST_CASE("precision floor on the star graph at rho0 = 0") {
  const WeightMatrix w =
      row_normalized_weights(special_graph(SpecialGraph::star, 5));
  const PrecisionReport r = crlb(w, 0.0);
  REQUIRE(r.trace_z2 == Catch::Approx(2.0).epsilon(1e-12));
  REQUIRE(r.trace_zzt == Catch::Approx(4.25).epsilon(1e-12));
  REQUIRE(r.gamma == Catch::Approx(0.4).epsilon(1e-12));
  REQUIRE(!r.unbounded);
  // the hub row of W'W has norm at least n-1
  REQUIRE(r.lambda_max_wtw >= 4.0 - 1e-12);
}

TEST_CASE("precision floor on the complete graph matches the closed form") {
  const int n = 100;
  const WeightMatrix w =
      row_normalized_weights(special_graph(SpecialGraph::complete, n));
  for (double rho : {0.0, 0.3}) {
    const double denom = 2.0 * (1.0 / std::pow(1.0 - rho, 2) +
                                (n - 1.0) / std::pow(n - 1.0 + rho, 2));
    REQUIRE(crlb(w, rho).gamma ==
            Catch::Approx(1.0 / std::sqrt(denom)).epsilon(1e-10));
  }
}

TEST_CASE("zero weights give an unbounded floor") {
  const PrecisionReport r = crlb(make_weight_matrix(Eigen::MatrixXd::Zero(6, 6)), 0.0);
  REQUIRE(r.unbounded);
  REQUIRE(std::isinf(r.gamma));
}

TEST_CASE("trace inequalities hold on random weights at random rho") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    const WeightMatrix w = row_normalized_weights(gnp(35, 0.2 + 0.1 * seed, seed));
    Rng rng(seed + 50);
    const double rho = -0.8 + 1.6 * rng.uniform01();
    const PrecisionReport r = crlb(w, rho);
    REQUIRE(r.trace_zzt >= std::abs(r.trace_z2) - 1e-9);
    REQUIRE(r.trace_z2 + r.trace_zzt >= -1e-9);
    REQUIRE(r.gamma * r.gamma * (r.trace_z2 + r.trace_zzt) ==
            Catch::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("dense uniform weights keep the floor above (1-rho)/sqrt(2C)") {
  // row-stochastic W with entries bounded by C/n, C = n/(n-1):
  // Tr{Z^2} <= Tr{Z Z'} <= C/(1-rho)^2, so gamma >= (1-rho)/sqrt(2C)
  const int n = 60;
  const WeightMatrix wm =
      row_normalized_weights(special_graph(SpecialGraph::complete, n));
  const double c = n / (n - 1.0);
  for (double rho : {0.0, 0.3, 0.6}) {
    REQUIRE(crlb(wm, rho).gamma >= (1.0 - rho) / std::sqrt(2.0 * c) - 1e-9);
  }
}

TEST_CASE("regular graphs pin the floor to degree over size") {
  const int n = 50;  // 2-regular cycle: gamma0^2 = d/(2n)
  const WeightMatrix w = row_normalized_weights(cycle(n));
  const double g2 = std::pow(crlb(w, 0.0).gamma, 2);
  REQUIRE(g2 == Catch::Approx(2.0 / (2.0 * n)).epsilon(1e-10));
  REQUIRE(g2 <= 2.0 / n + 1e-12);
  REQUIRE(g2 >= 0.5 * 2.0 / n - 1e-12);
}

TEST_CASE("off-model coefficient covariance reduces on the model") {
  const int n = 30;
  const DisturbanceModel model(gauss_design(n, 3, 7),
                               row_normalized_weights(gnp(n, 0.3, 8)));
  const double rho = 0.25, sigma = 1.4;
  const Eigen::MatrixXd k = k_matrix(model.w, rho);
  const Eigen::MatrixXd s = k.transpose() * k;
  const Eigen::MatrixXd expect =
      sigma * sigma * (model.x.transpose() * s * model.x).inverse();
  const Eigen::MatrixXd got = beta_cov_off_model(model, rho, rho, sigma);
  REQUIRE((got - expect).cwiseAbs().maxCoeff() < 1e-9 * expect.cwiseAbs().maxCoeff());
}

TEST_CASE("off-model coefficient covariance is symmetric PSD") {
  const int n = 25;
  const DisturbanceModel model(gauss_design(n, 3, 9),
                               row_normalized_weights(gnp(n, 0.35, 10)));
  const Eigen::MatrixXd cov = beta_cov_off_model(model, 0.4, -0.2, 1.0);
  REQUIRE((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov).eigenvalues();
  REQUIRE(ev.minCoeff() >= -1e-9 * cov.trace());
}

TEST_CASE("star-graph intercept variance matches the closed form") {
  const int n = 15;
  const DisturbanceModel model(
      Eigen::MatrixXd::Ones(n, 1),
      row_normalized_weights(special_graph(SpecialGraph::star, n)));
  const double sigma = 1.0;
  for (double rho : {0.1, 0.3, 0.6}) {
    const double expect =
        sigma * sigma / (n * n * std::pow(1.0 - rho, 2)) *
        (n * (1.0 - 2.0 * rho) +
         rho * rho * (std::pow(n - 1.0, 2) + 1.0 / (n - 1.0)));
    const double got = beta_cov_off_model(model, rho, 0.0, sigma)(0, 0);
    REQUIRE(got == Catch::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("conditioning report basics") {
  const int n = 20;
  const DisturbanceModel model(gauss_design(n, 2, 11),
                               row_normalized_weights(gnp(n, 0.3, 12)));
  const BetaConditioning same = beta_conditioning(model, 0.3, 0.3);
  REQUIRE(same.lambda_max_s_ratio == Catch::Approx(1.0).epsilon(1e-9));
  REQUIRE(same.lambda_min_xtx > 0.0);
  REQUIRE(same.lambda_min_s > 0.0);
  // lower bound (|rho| * ||W|| - 1)^2 on the eigenvalue ratio against rho0 = 0
  const DisturbanceModel star(
      Eigen::MatrixXd::Ones(30, 1),
      row_normalized_weights(special_graph(SpecialGraph::star, 30)));
  const double norm_w = std::sqrt(
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(star.w.w.transpose() * star.w.w)
          .eigenvalues()
          .maxCoeff());
  const double rho = 0.9;
  const BetaConditioning bc = beta_conditioning(star, rho, 0.0);
  const double floor = std::pow(rho * norm_w - 1.0, 2);
  REQUIRE(bc.lambda_max_s_ratio >= floor - 1e-9);
}

TEST_CASE("network-effects diagnostics on a row-stochastic intercept model") {
  const int n = 30;
  const DisturbanceModel model(Eigen::MatrixXd::Ones(n, 1),
                               row_normalized_weights(gnp(n, 0.4, 13)));
  Eigen::VectorXd beta(1);
  beta << 0.9;
  const double sigma = 1.2, rho0 = 0.2;
  const NemReport r = nem_diagnostics(model, beta, sigma, rho0, 0.3, 0.3);
  // W 1 = 1 lies in the design span, so E vanishes
  REQUIRE(r.e_mat.cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE(r.lambda_max_ete < 1e-12);
  const Eigen::MatrixXd z = z_matrix(model.w, rho0);
  const double tr = (z * z).trace() + (z * z.transpose()).trace();
  const double extra = n * std::pow(beta(0) / ((1.0 - rho0) * sigma), 2);
  REQUIRE(r.v1 == Catch::Approx(tr + extra).epsilon(1e-9));
  REQUIRE(r.beta_offset.cwiseAbs().maxCoeff() < 1e-9);  // rho_fit == rho_true
}

TEST_CASE("network-effects diagnostics invariants on a general design") {
  const int n = 35;
  const DisturbanceModel model(gauss_design(n, 3, 17),
                               row_normalized_weights(gnp(n, 0.25, 18)));
  Eigen::VectorXd beta(3);
  beta << 1.0, 0.5, -0.4;
  const NemReport r = nem_diagnostics(model, beta, 1.0, 0.0, 0.2, 0.1);
  // decomposition W X = X Gamma + E with E orthogonal to the design
  REQUIRE((model.x * r.gamma_mat + r.e_mat - model.w.w * model.x)
              .cwiseAbs()
              .maxCoeff() < 1e-8);
  REQUIRE((model.x.transpose() * r.e_mat).cwiseAbs().maxCoeff() < 1e-8);
  const Eigen::MatrixXd z = z_matrix(model.w, 0.0);
  const double tr = (z * z).trace() + (z * z.transpose()).trace();
  REQUIRE(r.v1 >= tr - 1e-9);
  // at rho0 = 0 the mean-shape sensitivity is E itself
  REQUIRE((r.g_rho - r.e_mat).cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE(r.v2 <= tr + (beta.norm() / 1.0) * (beta.norm()) * r.lambda_max_ete + 1e-6);
  // power-iteration oracle for lambda_max(E'E)
  const Eigen::MatrixXd ete = r.e_mat.transpose() * r.e_mat;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(3).normalized();
  double lam = 0.0;
  for (int it = 0; it < 5000; ++it) {
    const Eigen::VectorXd av = ete * v;
    lam = v.dot(av);
    v = av.normalized();
  }
  REQUIRE(r.lambda_max_ete == Catch::Approx(lam).epsilon(1e-6));
  // the floor of 1/V1 never exceeds gamma^2
  const PrecisionReport pr = crlb(model.w, 0.0);
  REQUIRE(1.0 / r.v1 <= pr.gamma * pr.gamma + 1e-12);
}

TEST_CASE("advisories trigger on dense graphs and relax on sparse ones") {
  const DisturbanceModel dense(
      Eigen::MatrixXd::Ones(100, 1),
      row_normalized_weights(special_graph(SpecialGraph::complete, 100)));
  const Advisories a = check_advisories(dense, 0.0);
  REQUIRE(a.rho_imprecise);  // gamma ~ 0.7 on K_100
  REQUIRE(a.nem_confounded);

  const DisturbanceModel sparse(Eigen::MatrixXd::Ones(400, 1),
                                row_normalized_weights(gnp(400, 0.02, 3)));
  const Advisories b = check_advisories(sparse, 0.0);
  REQUIRE(b.gamma < a.gamma);
  WarningThresholds strict_floor;
  strict_floor.gamma_floor = 1e9;
  REQUIRE(!check_advisories(sparse, 0.0, strict_floor).rho_imprecise);
}
