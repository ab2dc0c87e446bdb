#ifndef BLOCKINFER_NETWORK_DATA_HPP
#define BLOCKINFER_NETWORK_DATA_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "blockinfer/types.hpp"

namespace blockinfer {

// Observed data: p adjacency value matrices (p = 1 except multiplex /
// multivariate families) and c covariate matrices, all n1 x n2.
// Immutable after construction; shared by concurrent fits.
struct NetworkData {
  NetworkStructure structure;
  std::vector<Eigen::MatrixXd> X;  // p >= 1 value components
  std::vector<Eigen::MatrixXd> Y;  // c >= 0 covariates

  int p() const { return static_cast<int>(X.size()); }
  int c() const { return static_cast<int>(Y.size()); }
  int n1() const { return structure.n1; }
  int n2() const { return structure.n2; }
};

// Number of observed dyads: n(n-1) directed, n(n-1)/2 symmetric, n1*n2 LBM.
long dyad_count(const NetworkData& data);

// Validates shapes, symmetry (SymmetricSBM) and the family's value domain.
// SBM diagonals are zeroed on ingest (self-loops masked, never modeled).
NetworkData make_network(NetworkStructure structure, std::vector<Eigen::MatrixXd> X,
                         std::vector<Eigen::MatrixXd> Y, FamilyId family);

NetworkData load_network(const std::vector<std::string>& adjacency_paths,
                         const std::vector<std::string>& covariate_paths,
                         NetworkStructure structure, FamilyId family);

// Dense matrix I/O. Format chosen by extension: .csv or .mtx
// (MatrixMarket array). Throws ParseError on malformed input.
Eigen::MatrixXd read_matrix(const std::string& path);
void write_matrix(const std::string& path, const Eigen::MatrixXd& m);

}  // namespace blockinfer

#endif
