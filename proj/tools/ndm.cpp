// Command-line front end for the network-correlated-errors toolkit.
#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ndm/ndm.hpp"

using json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240915;  // fixed, never wall-clock

// Shared graph-source options for subcommands that need a weight matrix.
struct GraphOptions {
  std::string kind = "gnp";
  std::string file;
  int n = 100;
  double p = 0.1;
  int block_size = 50;
  std::uint64_t seed = kDefaultSeed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--graph", kind, "graph family: gnp|mixture|star|complete")
        ->check(CLI::IsMember({"gnp", "mixture", "star", "complete"}));
    cmd->add_option("--graph-file", file, "edge-list file (overrides --graph)");
    cmd->add_option("--n", n, "vertex count");
    cmd->add_option("--p", p, "edge probability");
    cmd->add_option("--block-size", block_size, "vertices per block (mixture)");
    cmd->add_option("--seed", seed, "random seed (fixed default for reproducibility)");
  }

  ndm::Network build() const {
    if (!file.empty()) {
      std::ifstream in(file);
      if (!in) throw std::runtime_error("cannot open graph file: " + file);
      return ndm::read_edge_list(in, file);
    }
    if (kind == "gnp") return ndm::gnp(n, p, seed);
    if (kind == "mixture") return ndm::two_block_mixture(block_size, p, seed);
    if (kind == "star") return ndm::special_graph(ndm::SpecialGraph::star, n);
    return ndm::special_graph(ndm::SpecialGraph::complete, n);
  }
};

Eigen::MatrixXd load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return ndm::read_matrix_csv(in, path);
}

Eigen::VectorXd load_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return ndm::read_vector_csv(in, path);
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// Flat record emitted by every subcommand, as JSON or key,value CSV.
void emit_record(const json& rec, const std::string& format, std::ostream& out) {
  if (format == "json") {
    out << rec.dump(2) << "\n";
    return;
  }
  out << "key,value\n";
  for (const auto& [k, v] : rec.items()) {
    out << k << ',';
    if (v.is_array()) {
      bool first = true;
      for (const auto& e : v) {
        if (!first) out << ';';
        first = false;
        out << (e.is_number() ? ndm::format_real_12(e.get<double>()) : e.dump());
      }
    } else if (v.is_number_float()) {
      out << ndm::format_real_12(v.get<double>());
    } else if (v.is_string()) {
      out << v.get<std::string>();
    } else {
      out << v.dump();
    }
    out << '\n';
  }
}

json warnings_json(const ndm::Advisories& a) {
  json w = json::array();
  if (a.rho_imprecise)
    w.push_back("correlation not reliably estimable: precision floor gamma = " +
                std::string(ndm::format_real_12(a.gamma)));
  if (a.nem_confounded)
    w.push_back("outcome-network model poorly determined: diagnostic score = " +
                std::string(ndm::format_real_12(a.nem_score)));
  return w;
}

Eigen::MatrixXd pick_c(const std::string& spec, const ndm::Network& net,
                       const ndm::WeightMatrix& w) {
  if (spec == "w") return w.w;
  if (spec == "a") return net.adjacency;
  return load_matrix(spec);
}

int run(int argc, char** argv) {
  CLI::App app{"network disturbance model toolkit"};
  app.require_subcommand(1);

  std::string format = "json";
  app.add_option("--output", format, "record format: json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  bool strict = false;
  app.add_flag("--strict", strict, "treat warnings as a nonzero exit (code 3)");

  // generate --------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "sample a graph and write its edge list");
  GraphOptions gen_g;
  gen_g.attach(gen);
  std::string gen_out;
  gen->add_option("--out", gen_out, "output file (default stdout)");

  // simulate --------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "draw one response vector from the model");
  GraphOptions sim_g;
  sim_g.attach(sim);
  std::string sim_design = "gauss";
  int sim_gauss_cols = 3;
  std::vector<double> sim_beta;
  double sim_sigma = 1.0, sim_rho = 0.0;
  std::string sim_xout, sim_yout;
  sim->add_option("--design", sim_design, "design: intercept|gauss|block")
      ->check(CLI::IsMember({"intercept", "gauss", "block"}));
  sim->add_option("--gauss-cols", sim_gauss_cols, "number of gaussian columns");
  sim->add_option("--beta", sim_beta, "coefficients (default 1,0.5,0.4,0.3 prefix)")
      ->delimiter(',');
  sim->add_option("--sigma", sim_sigma, "noise standard deviation");
  sim->add_option("--rho", sim_rho, "network correlation");
  sim->add_option("--x-out", sim_xout, "write the design matrix CSV here");
  sim->add_option("--y-out", sim_yout, "write the response CSV here (default stdout)");

  // fit ---------------------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "estimate the network correlation");
  GraphOptions fit_g;
  fit_g.attach(fit);
  std::string fit_x, fit_y, fit_method = "mle", fit_c = "w";
  fit->add_option("--x", fit_x, "design matrix CSV (omit for no structure)");
  fit->add_option("--y", fit_y, "response CSV")->required();
  fit->add_option("--method", fit_method, "mle|qf")
      ->check(CLI::IsMember({"mle", "qf"}));
  fit->add_option("--c", fit_c, "qf weighting: w|a|FILE");

  // crlb --------------------------------------------------------------------
  auto* cr = app.add_subcommand("crlb", "precision floor for the correlation");
  GraphOptions cr_g;
  cr_g.attach(cr);
  double cr_rho = 0.0;
  cr->add_option("--rho", cr_rho, "evaluation point");

  // diagnose ------------------------------------------------------------------
  auto* diag = app.add_subcommand(
      "diagnose", "coefficient conditioning and outcome-network diagnostics");
  GraphOptions diag_g;
  diag_g.attach(diag);
  std::string diag_x, diag_y;
  std::vector<double> diag_beta;
  double diag_sigma = 1.0, diag_rho0 = 0.0, diag_rho_fit = 0.0, diag_rho_true = 0.0;
  diag->add_option("--x", diag_x, "design matrix CSV")->required();
  diag->add_option("--y", diag_y, "response CSV; fitted values replace --beta/--sigma");
  diag->add_option("--beta", diag_beta, "true coefficients")->delimiter(',');
  diag->add_option("--sigma", diag_sigma, "true noise standard deviation");
  diag->add_option("--rho0", diag_rho0, "true correlation for the diagnostics");
  diag->add_option("--rho-fit", diag_rho_fit, "fitting correlation for the offset");
  diag->add_option("--rho-true", diag_rho_true, "generating correlation for the offset");

  // permtest ------------------------------------------------------------------
  auto* perm = app.add_subcommand("permtest", "permutation spread of the qf estimate");
  GraphOptions perm_g;
  perm_g.attach(perm);
  std::string perm_x, perm_y, perm_c = "w";
  int perm_reps = 1000;
  std::uint64_t perm_seed = kDefaultSeed;
  perm->add_option("--x", perm_x, "design matrix CSV");
  perm->add_option("--y", perm_y, "response CSV")->required();
  perm->add_option("--c", perm_c, "qf weighting: w|a|FILE");
  perm->add_option("--replicates", perm_reps, "number of permutations");
  perm->add_option("--perm-seed", perm_seed, "seed for the permutation stream");

  // experiment ------------------------------------------------------------------
  auto* exp = app.add_subcommand("experiment", "seeded Monte-Carlo sweep from a config");
  std::string exp_config, exp_out, exp_dump;
  std::optional<std::uint64_t> exp_seed;
  int exp_threads = 1;
  bool exp_estimates = false;
  exp->add_option("--config", exp_config, "experiment config file")->required();
  exp->add_option("--seed", exp_seed, "override the config seed");
  exp->add_option("--threads", exp_threads, "worker threads (output independent)");
  exp->add_option("--out", exp_out, "summary CSV file (default stdout)");
  exp->add_option("--dump", exp_dump,
                  "prefix for per-replicate estimate dumps, one value per line");
  exp->add_flag("--estimates", exp_estimates, "append estimate lines to the CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;  // usage errors are exit code 1
  }

  bool warned = false;
  json rec;

  if (*gen) {
    const ndm::Network net = gen_g.build();
    if (gen_out.empty()) {
      ndm::write_edge_list(std::cout, net);
    } else {
      std::ofstream out(gen_out);
      if (!out) throw std::runtime_error("cannot write " + gen_out);
      ndm::write_edge_list(out, net);
    }
    return 0;
  }

  if (*sim) {
    const ndm::Network net = sim_g.build();
    ndm::DesignSpec ds;
    ds.kind = sim_design == "intercept" ? ndm::DesignKind::intercept_only
              : sim_design == "gauss"   ? ndm::DesignKind::intercept_gauss
                                        : ndm::DesignKind::intercept_block_gauss;
    ds.gauss_cols = sim_gauss_cols;
    const Eigen::MatrixXd x =
        ndm::sample_design(ds, net, ndm::substream_seed(sim_g.seed, 1));
    const ndm::DisturbanceModel model(x, ndm::row_normalized_weights(net));
    Eigen::VectorXd beta;
    if (sim_beta.empty()) {
      beta = ndm::default_beta(ds.cols());
    } else {
      beta = Eigen::Map<Eigen::VectorXd>(sim_beta.data(),
                                         static_cast<Eigen::Index>(sim_beta.size()));
    }
    const Eigen::VectorXd y = ndm::simulate(model, beta, sim_sigma, sim_rho,
                                            ndm::substream_seed(sim_g.seed, 2));
    if (!sim_xout.empty()) {
      std::ofstream out(sim_xout);
      if (!out) throw std::runtime_error("cannot write " + sim_xout);
      ndm::write_matrix_csv(out, x);
    }
    if (sim_yout.empty()) {
      ndm::write_vector_csv(std::cout, y);
    } else {
      std::ofstream out(sim_yout);
      if (!out) throw std::runtime_error("cannot write " + sim_yout);
      ndm::write_vector_csv(out, y);
    }
    return 0;
  }

  if (*fit) {
    const ndm::Network net = fit_g.build();
    const ndm::WeightMatrix w = ndm::row_normalized_weights(net);
    const Eigen::MatrixXd x =
        fit_x.empty() ? Eigen::MatrixXd(net.n, 0) : load_matrix(fit_x);
    const ndm::DisturbanceModel model(x, w);
    const Eigen::VectorXd y = load_vector(fit_y);
    rec["method"] = fit_method == "mle" ? "mle" : (fit_c == "w" ? "qf_w" : "qf");
    if (fit_method == "mle") {
      const ndm::MleFit f = ndm::fit_mle(model, y);
      rec["status"] = ndm::to_string(f.status);
      rec["rho_hat"] = f.rho_hat;
      rec["beta_hat"] = vector_to_json(f.at_rho.beta_hat);
      rec["sigma2_hat"] = f.at_rho.sigma2_hat;
      if (f.status == ndm::FitStatus::converged) {
        const ndm::MleTheory t = ndm::mle_theory(model, f.rho_hat);
        rec["scale"] = t.psi0;
        rec["bias_approx"] = t.bias;
      }
      const ndm::Advisories a = ndm::check_advisories(
          model, f.status == ndm::FitStatus::converged ? f.rho_hat : 0.0);
      rec["gamma"] = a.gamma;
      rec["warnings"] = warnings_json(a);
      warned = a.rho_imprecise || a.nem_confounded;
    } else {
      const Eigen::MatrixXd c = pick_c(fit_c, net, w);
      const ndm::QuadformFit f = ndm::fit_quadform(model, y, c);
      rec["status"] = ndm::to_string(f.status);
      if (f.status == ndm::FitStatus::converged) {
        rec["rho_hat"] = f.rho_hat;
        rec["all_roots"] = vector_to_json(Eigen::Map<const Eigen::VectorXd>(
            f.all_roots.data(), static_cast<Eigen::Index>(f.all_roots.size())));
        rec["beta_hat"] = vector_to_json(f.at_rho.beta_hat);
        rec["sigma2_hat"] = f.at_rho.sigma2_hat;
        rec["scale"] = ndm::qf_scale(model, c, f.rho_hat).s_hat;
      }
      const ndm::Advisories a = ndm::check_advisories(
          model, f.status == ndm::FitStatus::converged ? f.rho_hat : 0.0);
      rec["gamma"] = a.gamma;
      rec["warnings"] = warnings_json(a);
      warned = a.rho_imprecise || a.nem_confounded;
    }
    emit_record(rec, format, std::cout);
    return strict && warned ? 3 : 0;
  }

  if (*cr) {
    const ndm::Network net = cr_g.build();
    const ndm::WeightMatrix w = ndm::row_normalized_weights(net);
    const ndm::PrecisionReport r = ndm::crlb(w, cr_rho);
    rec["rho"] = cr_rho;
    rec["gamma"] = r.gamma;
    rec["trace_z2"] = r.trace_z2;
    rec["trace_zzt"] = r.trace_zzt;
    rec["v_rho0"] = r.v_rho0;
    rec["psi0"] = r.psi0;
    rec["lambda_max_wtw"] = r.lambda_max_wtw;
    rec["unbounded"] = r.unbounded;
    json warnings = json::array();
    ndm::WarningThresholds th;
    if (r.gamma >= th.gamma_floor) {
      warnings.push_back("correlation not reliably estimable: precision floor gamma = " +
                         std::string(ndm::format_real_12(r.gamma)));
      warned = true;
    }
    rec["warnings"] = warnings;
    emit_record(rec, format, std::cout);
    return strict && warned ? 3 : 0;
  }

  if (*diag) {
    const ndm::Network net = diag_g.build();
    const ndm::WeightMatrix w = ndm::row_normalized_weights(net);
    const ndm::DisturbanceModel model(load_matrix(diag_x), w);
    Eigen::VectorXd beta;
    double sigma = diag_sigma;
    bool plug_in = false;
    if (!diag_beta.empty()) {
      beta = Eigen::Map<Eigen::VectorXd>(diag_beta.data(),
                                         static_cast<Eigen::Index>(diag_beta.size()));
    } else if (!diag_y.empty()) {
      const ndm::FitAtRho f = ndm::fit_at_rho(model, load_vector(diag_y), diag_rho0);
      beta = f.beta_hat;
      sigma = std::sqrt(f.sigma2_hat);
      plug_in = true;
    } else {
      throw std::runtime_error("diagnose needs --beta or --y for plug-in values");
    }
    const ndm::NemReport r =
        ndm::nem_diagnostics(model, beta, sigma, diag_rho0, diag_rho_fit, diag_rho_true);
    const ndm::BetaConditioning bc = ndm::beta_conditioning(model, diag_rho_fit, diag_rho0);
    rec["plug_in"] = plug_in;
    rec["lambda_max_ete"] = r.lambda_max_ete;
    rec["v1"] = r.v1;
    rec["v2"] = r.v2;
    rec["beta_offset"] = vector_to_json(r.beta_offset);
    rec["lambda_min_xtx"] = bc.lambda_min_xtx;
    rec["lambda_min_s"] = bc.lambda_min_s;
    rec["lambda_max_s_ratio"] = bc.lambda_max_s_ratio;
    const ndm::Advisories a = ndm::check_advisories(model, diag_rho0);
    rec["gamma"] = a.gamma;
    rec["nem_score"] = a.nem_score;
    rec["warnings"] = warnings_json(a);
    warned = a.rho_imprecise || a.nem_confounded;
    emit_record(rec, format, std::cout);
    return strict && warned ? 3 : 0;
  }

  if (*perm) {
    const ndm::Network net = perm_g.build();
    const ndm::WeightMatrix w = ndm::row_normalized_weights(net);
    const Eigen::MatrixXd x =
        perm_x.empty() ? Eigen::MatrixXd(net.n, 0) : load_matrix(perm_x);
    const ndm::DisturbanceModel model(x, w);
    const Eigen::VectorXd y = load_vector(perm_y);
    const Eigen::MatrixXd c = pick_c(perm_c, net, w);
    const ndm::QuadformFit base = ndm::fit_quadform(model, y, c);
    rec["status"] = ndm::to_string(base.status);
    if (base.status == ndm::FitStatus::converged) {
      const ndm::PermutationSpread ps =
          ndm::permutation_spread(model, y, c, perm_reps, perm_seed);
      rec["rho_hat"] = base.rho_hat;
      rec["perm_mean"] = ps.mean;
      rec["perm_se"] = ps.sd;
      rec["used"] = ps.used;
      rec["no_root"] = ps.no_root;
      rec["scale"] = ndm::qf_scale(model, c, base.rho_hat).s_hat;
    }
    emit_record(rec, format, std::cout);
    return 0;
  }

  if (*exp) {
    std::ifstream in(exp_config);
    if (!in) throw std::runtime_error("cannot open config: " + exp_config);
    ndm::ExperimentConfig cfg = ndm::parse_experiment_config(in, exp_config);
    if (exp_seed) cfg.master_seed = *exp_seed;
    const ndm::SummaryTable table = ndm::run_experiment(cfg, exp_threads);
    const std::string csv = table.to_csv(exp_estimates);
    if (exp_out.empty()) {
      std::cout << csv;
    } else {
      std::ofstream out(exp_out);
      if (!out) throw std::runtime_error("cannot write " + exp_out);
      out << csv;
    }
    if (!exp_dump.empty()) {
      for (const auto& row : table.rows) {
        const std::string path = exp_dump + "_cell" + std::to_string(row.cell) +
                                 "_" + ndm::to_string(row.method) + ".txt";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        for (double v : row.estimates) out << ndm::format_real_12(v) << '\n';
      }
    }
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
