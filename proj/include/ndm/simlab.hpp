#ifndef NDM_SIMLAB_HPP
#define NDM_SIMLAB_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ndm/bounds.hpp"
#include "ndm/graph.hpp"
#include "ndm/mle.hpp"
#include "ndm/model.hpp"
#include "ndm/quadform.hpp"

namespace ndm {

struct Summary {
  double mean = 0.0;
  double se_single = 0.0;  // sample standard deviation, divisor count-1
  double se_mean = 0.0;
  double skewness = 0.0;
  int count = 0;
  bool has_se = false;  // count >= 2
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.count = static_cast<int>(xs.size());
  if (s.count == 0) return s;
  double sum = 0.0;
  for (double v : xs) sum += v;
  s.mean = sum / s.count;
  if (s.count < 2) return s;
  double m2 = 0.0, m3 = 0.0;
  for (double v : xs) {
    const double d = v - s.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  s.se_single = std::sqrt(m2 / (s.count - 1));
  s.se_mean = s.se_single / std::sqrt(static_cast<double>(s.count));
  const double sd_pop = std::sqrt(m2 / s.count);
  s.skewness = sd_pop > 0.0 ? (m3 / s.count) / (sd_pop * sd_pop * sd_pop) : 0.0;
  s.has_se = true;
  return s;
}

enum class GraphKind { gnp, mixture, star, complete, file };
enum class DesignKind { intercept_only, intercept_gauss, intercept_block_gauss };
enum class Method { mle, qf_w, qf_a };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::mle: return "mle";
    case Method::qf_w: return "qf_w";
    case Method::qf_a: return "qf_a";
  }
  return "unknown";
}

struct GraphSpec {
  GraphKind kind = GraphKind::gnp;
  int n = 100;          // total vertices (gnp/star/complete)
  int block_size = 50;  // mixture: two blocks of this size
  double p = 0.1;
  std::string path;     // file kind
};

struct DesignSpec {
  DesignKind kind = DesignKind::intercept_gauss;
  int gauss_cols = 3;
  int cols() const {
    switch (kind) {
      case DesignKind::intercept_only: return 1;
      case DesignKind::intercept_gauss: return 1 + gauss_cols;
      case DesignKind::intercept_block_gauss: return 2 + gauss_cols;
    }
    return 0;
  }
};

struct CellSpec {
  GraphSpec graph;
  DesignSpec design;
  Eigen::VectorXd beta;  // defaults to (1, 0.5, 0.4, 0.3) truncated/validated later
  double sigma = 1.0;
  double rho = 0.0;
  int replicates = 100;
  std::vector<Method> methods{Method::mle, Method::qf_w};
  bool resample_per_replicate = false;  // default: one graph+design per cell
};

struct ExperimentConfig {
  std::uint64_t master_seed = 20240915;
  std::vector<CellSpec> cells;
};

inline Eigen::VectorXd default_beta(int m) {
  const double vals[] = {1.0, 0.5, 0.4, 0.3};
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) b(i) = i < 4 ? vals[i] : 0.3;
  return b;
}

inline Network sample_network(const GraphSpec& g, std::uint64_t seed) {
  switch (g.kind) {
    case GraphKind::gnp: return gnp(g.n, g.p, seed);
    case GraphKind::mixture: return two_block_mixture(g.block_size, g.p, seed);
    case GraphKind::star: return special_graph(SpecialGraph::star, g.n);
    case GraphKind::complete: return special_graph(SpecialGraph::complete, g.n);
    case GraphKind::file: {
      std::ifstream in(g.path);
      if (!in) throw std::runtime_error("cannot open graph file: " + g.path);
      return read_edge_list(in, g.path);
    }
  }
  throw std::logic_error("unknown graph kind");
}

inline Eigen::MatrixXd sample_design(const DesignSpec& d, const Network& net,
                                     std::uint64_t seed) {
  const int n = net.n;
  const int m = d.cols();
  Eigen::MatrixXd x(n, m);
  x.col(0).setOnes();
  int next = 1;
  if (d.kind == DesignKind::intercept_block_gauss) {
    if (static_cast<int>(net.blocks.size()) != n)
      throw std::invalid_argument("block-contrast design needs a graph with block labels");
    for (int i = 0; i < n; ++i) x(i, 1) = net.blocks[static_cast<std::size_t>(i)] == 0 ? 1.0 : -1.0;
    next = 2;
  }
  Rng rng(seed);
  for (int j = next; j < m; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = rng.normal();
  return x;
}

struct SummaryRow {
  int cell = 0;
  std::string graph;   // short description, e.g. gnp(100,0.0975)
  double rho = 0.0;
  Method method = Method::mle;
  int replicates = 0;
  int failures = 0;    // no_root or degenerate outcomes
  Summary stats;       // over successful estimates
  double gamma = 0.0;  // precision floor on the cell's realized weights
  std::vector<double> estimates;  // successful estimates in replicate order
};

struct SummaryTable {
  std::vector<SummaryRow> rows;
  std::string to_csv(bool with_estimates = false) const;
};

namespace detail {

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string graph_label(const GraphSpec& g) {
  std::ostringstream os;
  switch (g.kind) {
    case GraphKind::gnp: os << "gnp(" << g.n << "," << format_real(g.p) << ")"; break;
    case GraphKind::mixture:
      os << "mixture(" << g.block_size << "x2," << format_real(g.p) << ")";
      break;
    case GraphKind::star: os << "star(" << g.n << ")"; break;
    case GraphKind::complete: os << "complete(" << g.n << ")"; break;
    case GraphKind::file: os << "file(" << g.path << ")"; break;
  }
  return os.str();
}

}  // namespace detail

inline std::string SummaryTable::to_csv(bool with_estimates) const {
  std::ostringstream os;
  os << "cell,graph,rho,method,replicates,failures,count,mean,se_single,se_mean,gamma\n";
  for (const auto& r : rows) {
    os << r.cell << ',' << r.graph << ',' << detail::format_real(r.rho) << ','
       << to_string(r.method) << ',' << r.replicates << ',' << r.failures << ','
       << r.stats.count << ',' << detail::format_real(r.stats.mean) << ','
       << detail::format_real(r.stats.se_single) << ','
       << detail::format_real(r.stats.se_mean) << ','
       << detail::format_real(r.gamma) << '\n';
    if (with_estimates) {
      os << "# estimates";
      for (double v : r.estimates) os << ' ' << detail::format_real(v);
      os << '\n';
    }
  }
  return os.str();
}

namespace detail {

struct ReplicateOutcome {
  bool ok = false;
  double estimate = 0.0;
};

}  // namespace detail

// One seeded Monte-Carlo sweep. Deterministic in the config: per-cell and
// per-replicate random streams are keyed by index, so results do not depend
// on the number of worker threads.
inline SummaryTable run_experiment(const ExperimentConfig& cfg, int threads = 1) {
  if (threads < 1) threads = 1;
  SummaryTable table;
  for (std::size_t ci = 0; ci < cfg.cells.size(); ++ci) {
    const CellSpec& cell = cfg.cells[ci];
    if (cell.replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    const std::uint64_t cell_seed = substream_seed(cfg.master_seed, ci + 1);

    // fixed graph/design for the cell unless per-replicate resampling is on
    std::optional<Network> net0;
    std::optional<DisturbanceModel> model0;
    Eigen::MatrixXd adj0;
    if (!cell.resample_per_replicate) {
      net0 = sample_network(cell.graph, substream_seed(cell_seed, 0));
      const Eigen::MatrixXd x = sample_design(cell.design, *net0, substream_seed(cell_seed, 1));
      model0.emplace(x, row_normalized_weights(*net0));
      adj0 = net0->adjacency;
    }

    Eigen::VectorXd beta = cell.beta;
    if (beta.size() == 0) beta = default_beta(cell.design.cols());
    if (beta.size() != cell.design.cols())
      throw std::invalid_argument("beta length does not match the design");

    const int reps = cell.replicates;
    std::vector<std::vector<detail::ReplicateOutcome>> outcomes(
        cell.methods.size(), std::vector<detail::ReplicateOutcome>(static_cast<std::size_t>(reps)));

    auto run_range = [&](int lo, int hi) {
      for (int r = lo; r < hi; ++r) {
        const std::uint64_t rep_seed = substream_seed(cell_seed, 100 + static_cast<std::uint64_t>(r));
        const DisturbanceModel* model = model0 ? &*model0 : nullptr;
        const Eigen::MatrixXd* adj = model0 ? &adj0 : nullptr;
        std::optional<DisturbanceModel> local_model;
        Eigen::MatrixXd local_adj;
        if (cell.resample_per_replicate) {
          Network net = sample_network(cell.graph, substream_seed(rep_seed, 0));
          const Eigen::MatrixXd x = sample_design(cell.design, net, substream_seed(rep_seed, 1));
          local_model.emplace(x, row_normalized_weights(net));
          local_adj = net.adjacency;
          model = &*local_model;
          adj = &local_adj;
        }
        const Eigen::VectorXd y =
            simulate(*model, beta, cell.sigma, cell.rho, substream_seed(rep_seed, 2));
        for (std::size_t mi = 0; mi < cell.methods.size(); ++mi) {
          detail::ReplicateOutcome& out = outcomes[mi][static_cast<std::size_t>(r)];
          try {
            switch (cell.methods[mi]) {
              case Method::mle: {
                const MleFit f = fit_mle(*model, y);
                if (f.status == FitStatus::converged) { out.ok = true; out.estimate = f.rho_hat; }
                break;
              }
              case Method::qf_w: {
                const QuadformFit f = fit_quadform(*model, y, model->w.w);
                if (f.status == FitStatus::converged) { out.ok = true; out.estimate = f.rho_hat; }
                break;
              }
              case Method::qf_a: {
                const QuadformFit f = fit_quadform(*model, y, *adj);
                if (f.status == FitStatus::converged) { out.ok = true; out.estimate = f.rho_hat; }
                break;
              }
            }
          } catch (const std::exception&) {
            out.ok = false;
          }
        }
      }
    };

    if (threads == 1 || reps < 2 * threads) {
      run_range(0, reps);
    } else {
      std::vector<std::thread> pool;
      const int chunk = (reps + threads - 1) / threads;
      for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(reps, lo + chunk);
        if (lo < hi) pool.emplace_back(run_range, lo, hi);
      }
      for (auto& th : pool) th.join();
    }

    double gamma = 0.0;
    {
      const DisturbanceModel* gm = nullptr;
      std::optional<DisturbanceModel> tmp;
      if (model0) {
        gm = &*model0;
      } else {
        const std::uint64_t rep_seed = substream_seed(cell_seed, 100);
        Network net = sample_network(cell.graph, substream_seed(rep_seed, 0));
        tmp.emplace(sample_design(cell.design, net, substream_seed(rep_seed, 1)),
                    row_normalized_weights(net));
        gm = &*tmp;
      }
      gamma = crlb(gm->w, cell.rho).gamma;
    }

    for (std::size_t mi = 0; mi < cell.methods.size(); ++mi) {
      SummaryRow row;
      row.cell = static_cast<int>(ci);
      row.graph = detail::graph_label(cell.graph);
      row.rho = cell.rho;
      row.method = cell.methods[mi];
      row.replicates = reps;
      for (const auto& o : outcomes[mi]) {
        if (o.ok) row.estimates.push_back(o.estimate);
        else ++row.failures;
      }
      row.stats = summarize(row.estimates);
      row.gamma = gamma;
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

// Config text format: one key=value per line, '#' comments; the leading
// lines set defaults, each [cell] header starts a cell inheriting them.
// Keys: graph (gnp|mixture|star|complete|file), n, block_size, p, graph_file,
// design (intercept|gauss|block), gauss_cols, beta (comma list), sigma,
// rho (comma list: one cell per value), replicates, methods (comma list of
// mle,qf_w,qf_a), seed, resample (cell|replicate).
inline ExperimentConfig parse_experiment_config(std::istream& in,
                                                const std::string& name = "<config>") {
  struct Block {
    std::map<std::string, std::string> kv;
    int line_of_first_key = 0;
  };
  std::vector<Block> blocks(1);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string s;
    for (char c : line) if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) continue;
    if (s == "[cell]") {
      blocks.emplace_back();
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(name + ":" + std::to_string(lineno) +
                               ": expected key=value or [cell]");
    blocks.back().kv[s.substr(0, eq)] = s.substr(eq + 1);
  }

  auto parse_cell = [&](const std::map<std::string, std::string>& kv) {
    CellSpec c;
    std::vector<double> rhos{0.0};
    for (const auto& [k, v] : kv) {
      if (k == "graph") {
        if (v == "gnp") c.graph.kind = GraphKind::gnp;
        else if (v == "mixture") c.graph.kind = GraphKind::mixture;
        else if (v == "star") c.graph.kind = GraphKind::star;
        else if (v == "complete") c.graph.kind = GraphKind::complete;
        else if (v == "file") c.graph.kind = GraphKind::file;
        else throw std::runtime_error(name + ": unknown graph kind '" + v + "'");
      } else if (k == "n") c.graph.n = std::stoi(v);
      else if (k == "block_size") c.graph.block_size = std::stoi(v);
      else if (k == "p") c.graph.p = std::stod(v);
      else if (k == "graph_file") c.graph.path = v;
      else if (k == "design") {
        if (v == "intercept") c.design.kind = DesignKind::intercept_only;
        else if (v == "gauss") c.design.kind = DesignKind::intercept_gauss;
        else if (v == "block") c.design.kind = DesignKind::intercept_block_gauss;
        else throw std::runtime_error(name + ": unknown design '" + v + "'");
      } else if (k == "gauss_cols") c.design.gauss_cols = std::stoi(v);
      else if (k == "beta") {
        std::vector<double> b;
        std::stringstream ss(v);
        std::string tok;
        while (std::getline(ss, tok, ',')) b.push_back(std::stod(tok));
        c.beta = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
      } else if (k == "sigma") c.sigma = std::stod(v);
      else if (k == "rho") {
        rhos.clear();
        std::stringstream ss(v);
        std::string tok;
        while (std::getline(ss, tok, ',')) rhos.push_back(std::stod(tok));
        if (rhos.empty()) throw std::runtime_error(name + ": empty rho list");
      } else if (k == "replicates") c.replicates = std::stoi(v);
      else if (k == "methods") {
        c.methods.clear();
        std::stringstream ss(v);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          if (tok == "mle") c.methods.push_back(Method::mle);
          else if (tok == "qf_w") c.methods.push_back(Method::qf_w);
          else if (tok == "qf_a") c.methods.push_back(Method::qf_a);
          else throw std::runtime_error(name + ": unknown method '" + tok + "'");
        }
      } else if (k == "resample") {
        if (v == "cell") c.resample_per_replicate = false;
        else if (v == "replicate") c.resample_per_replicate = true;
        else throw std::runtime_error(name + ": resample must be cell or replicate");
      } else if (k != "seed") {
        throw std::runtime_error(name + ": unknown key '" + k + "'");
      }
    }
    std::vector<CellSpec> out;
    for (double r : rhos) {
      CellSpec cc = c;
      cc.rho = r;
      out.push_back(std::move(cc));
    }
    return out;
  };

  ExperimentConfig cfg;
  if (auto it = blocks[0].kv.find("seed"); it != blocks[0].kv.end())
    cfg.master_seed = std::stoull(it->second);
  if (blocks.size() == 1) {
    cfg.cells = parse_cell(blocks[0].kv);
  } else {
    for (std::size_t b = 1; b < blocks.size(); ++b) {
      auto merged = blocks[0].kv;
      for (const auto& [k, v] : blocks[b].kv) merged[k] = v;
      auto cells = parse_cell(merged);
      for (auto& c : cells) cfg.cells.push_back(std::move(c));
    }
  }
  return cfg;
}

}  // namespace ndm

#endif  // NDM_SIMLAB_HPP
