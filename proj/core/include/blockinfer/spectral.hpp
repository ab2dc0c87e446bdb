#ifndef BLOCKINFER_SPECTRAL_HPP
#define BLOCKINFER_SPECTRAL_HPP

#include <cstdint>
#include <vector>

#include "blockinfer/membership.hpp"
#include "blockinfer/network_data.hpp"

namespace blockinfer {

// X minus the one-group covariate fit's predicted mean; identity passthrough
// for non-covariate families (multi-component X averaged into one matrix).
Eigen::MatrixXd residual_graph(const NetworkData& data, FamilyId family);

// k-means with k-means++ seeding; rows of `points` are observations.
std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                        int restarts = 10, int max_iter = 100);

// Rows of the degree-normalized operator's top-|eigenvalue| eigenvector
// embedding, row-normalized. Exposed so split proposals can reuse it.
Eigen::MatrixXd spectral_embedding(const Eigen::MatrixXd& M, int K);

// Absolute-eigenvalue spectral clustering on (M + M^T)/2.
std::vector<int> spectral_clustering_abs(const Eigen::MatrixXd& M, int K, std::uint64_t seed);

// Spectral starting membership: residual graph for SBM, per-type projections
// R R^T / R^T R for LBM.
Membership initial_membership(const NetworkData& data, FamilyId family, int Q, int L,
                              std::uint64_t seed);

}  // namespace blockinfer

#endif
