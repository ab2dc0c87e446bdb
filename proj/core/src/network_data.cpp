#include "blockinfer/network_data.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace blockinfer {

long dyad_count(const NetworkData& data) {
  long n1 = data.n1();
  long n2 = data.n2();
  switch (data.structure.kind) {
    case NetworkKind::DirectedSBM:
      return n1 * (n1 - 1);
    case NetworkKind::SymmetricSBM:
      return n1 * (n1 - 1) / 2;
    case NetworkKind::LBM:
      return n1 * n2;
  }
  return 0;
}

namespace {

bool is_binary(double v) { return v == 0.0 || v == 1.0; }
bool is_count(double v) { return v >= 0.0 && std::floor(v) == v; }

void check_domain(const std::vector<Eigen::MatrixXd>& X, FamilyId family, bool sbm) {
  bool bern = family == FamilyId::Bernoulli || family == FamilyId::BernoulliMultiplex ||
              family == FamilyId::BernoulliCovariates ||
              family == FamilyId::BernoulliCovariatesFast;
  bool pois = family == FamilyId::Poisson || family == FamilyId::PoissonCovariates;
  for (const auto& m : X) {
    for (int j = 0; j < m.cols(); ++j) {
      for (int i = 0; i < m.rows(); ++i) {
        if (sbm && i == j) continue;
        double v = m(i, j);
        if (std::isnan(v)) throw ParseError("NaN entry in adjacency (missing data unsupported)");
        if (bern && !is_binary(v))
          throw DomainViolation("Bernoulli adjacency entry " + std::to_string(v) +
                                " not in {0,1}");
        if (pois && !is_count(v))
          throw DomainViolation("Poisson adjacency entry " + std::to_string(v) +
                                " not a nonnegative integer");
        if (!std::isfinite(v)) throw DomainViolation("non-finite adjacency entry");
      }
    }
  }
}

}  // namespace

NetworkData make_network(NetworkStructure structure, std::vector<Eigen::MatrixXd> X,
                         std::vector<Eigen::MatrixXd> Y, FamilyId family) {
  if (X.empty()) throw ShapeMismatch("no adjacency matrix supplied");
  bool sbm = structure.is_sbm();
  if (sbm) structure.n2 = structure.n1;
  if (structure.n1 <= 0 || structure.n2 <= 0) {
    structure.n1 = static_cast<int>(X[0].rows());
    structure.n2 = sbm ? structure.n1 : static_cast<int>(X[0].cols());
  }
  for (const auto& m : X) {
    if (m.rows() != structure.n1 || m.cols() != structure.n2)
      throw ShapeMismatch("adjacency is " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", expected " + std::to_string(structure.n1) +
                          "x" + std::to_string(structure.n2));
  }
  if (sbm && X[0].rows() != X[0].cols()) throw ShapeMismatch("SBM adjacency must be square");
  for (const auto& m : Y) {
    if (m.rows() != structure.n1 || m.cols() != structure.n2)
      throw ShapeMismatch("covariate shape differs from adjacency");
    if (!m.allFinite()) throw ParseError("non-finite covariate entry");
  }
  if (family_uses_covariates(family) && Y.empty())
    throw DomainViolation(family_name(family) + " requires at least one covariate matrix");
  if (!family_uses_covariates(family) && !Y.empty())
    throw DomainViolation(family_name(family) + " does not accept covariates");
  if (structure.kind == NetworkKind::SymmetricSBM) {
    for (const auto& m : X) {
      for (int j = 0; j < m.cols(); ++j)
        for (int i = 0; i < j; ++i)
          if (m(i, j) != m(j, i))
            throw SymmetryViolation("X[" + std::to_string(i) + "," + std::to_string(j) +
                                    "] != X[" + std::to_string(j) + "," + std::to_string(i) + "]");
    }
  }
  check_domain(X, family, sbm);
  if (sbm) {
    // self-loops accepted but masked
    for (auto& m : X) m.diagonal().setZero();
  }
  return NetworkData{structure, std::move(X), std::move(Y)};
}

NetworkData load_network(const std::vector<std::string>& adjacency_paths,
                         const std::vector<std::string>& covariate_paths,
                         NetworkStructure structure, FamilyId family) {
  std::vector<Eigen::MatrixXd> X, Y;
  for (const auto& p : adjacency_paths) X.push_back(read_matrix(p));
  for (const auto& p : covariate_paths) Y.push_back(read_matrix(p));
  return make_network(structure, std::move(X), std::move(Y), family);
}

namespace {

bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

Eigen::MatrixXd read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t pos = 0;
        double v = std::stod(cell, &pos);
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        if (pos != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw ParseError("bad numeric cell '" + cell + "' in " + path);
      }
    }
    if (!rows.empty() && row.size() != rows[0].size())
      throw ParseError("ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty matrix file " + path);
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Eigen::MatrixXd read_mtx(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string header;
  std::getline(in, header);
  if (header.find("%%MatrixMarket") == std::string::npos ||
      header.find("array") == std::string::npos)
    throw ParseError("unsupported MatrixMarket header in " + path);
  std::string line;
  long r = -1, c = -1;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '%') continue;
    std::stringstream ss(line);
    if (!(ss >> r >> c)) throw ParseError("bad size line in " + path);
    break;
  }
  if (r <= 0 || c <= 0) throw ParseError("bad dimensions in " + path);
  Eigen::MatrixXd m(r, c);
  // array format is column-major
  for (long j = 0; j < c; ++j)
    for (long i = 0; i < r; ++i)
      if (!(in >> m(i, j))) throw ParseError("truncated MatrixMarket body in " + path);
  return m;
}

}  // namespace

Eigen::MatrixXd read_matrix(const std::string& path) {
  if (ends_with(path, ".mtx")) return read_mtx(path);
  if (ends_with(path, ".csv")) return read_csv(path);
  throw ParseError("unknown matrix format (expect .csv or .mtx): " + path);
}

void write_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  char buf[64];
  if (ends_with(path, ".mtx")) {
    out << "%%MatrixMarket matrix array real general\n";
    out << m.rows() << " " << m.cols() << "\n";
    for (long j = 0; j < m.cols(); ++j)
      for (long i = 0; i < m.rows(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
        out << buf << "\n";
      }
  } else {
    for (long i = 0; i < m.rows(); ++i) {
      for (long j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
        out << (j ? "," : "") << buf;
      }
      out << "\n";
    }
  }
}

}  // namespace blockinfer
