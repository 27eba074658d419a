#ifndef NDM_IO_HPP
#define NDM_IO_HPP

#include <Eigen/Dense>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace ndm {

// Numeric CSV with no header: one row per line, comma-separated, '#' lines
// ignored. Errors name the stream, line, and what was expected.
inline Eigen::MatrixXd read_matrix_csv(std::istream& in, const std::string& name) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = line;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s.erase(hash);
    bool blank = true;
    for (char c : s) if (!std::isspace(static_cast<unsigned char>(c))) { blank = false; break; }
    if (blank) continue;
    std::vector<double> row;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        if (pos != tok.size()) throw std::invalid_argument("trailing characters");
        row.push_back(v);
      } catch (const std::exception&) {
        throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                 ": expected a real number, got '" + tok + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(name + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(rows.front().size()) +
                               " columns, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(name + ": expected at least one data row");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline Eigen::VectorXd read_vector_csv(std::istream& in, const std::string& name) {
  const Eigen::MatrixXd m = read_matrix_csv(in, name);
  if (m.cols() != 1)
    throw std::runtime_error(name + ": expected a single column, got " +
                             std::to_string(m.cols()));
  return m.col(0);
}

inline std::string format_real_12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_real_12(m(i, j));
    }
    out << '\n';
  }
}

inline void write_vector_csv(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_real_12(v(i)) << '\n';
}

}  // namespace ndm

#endif  // NDM_IO_HPP
