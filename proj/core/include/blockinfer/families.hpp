#ifndef BLOCKINFER_FAMILIES_HPP
#define BLOCKINFER_FAMILIES_HPP

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "blockinfer/gapprox.hpp"
#include "blockinfer/membership.hpp"
#include "blockinfer/network_data.hpp"

namespace blockinfer {

constexpr double kProbClamp = 1e-10;   // probabilities kept in [clamp, 1-clamp]
constexpr double kLambdaFloor = 1e-10;
constexpr double kSigma2Floor = 1e-10;
constexpr double kWeightEps = 1e-12;   // degenerate-class weight threshold

// Per-family parameter bundle. `block` holds the Q x L group effect
// (pi / mu / m / lambda); multivariate mu and multiplex pattern
// probabilities live in block_vec.
struct EmissionParams {
  FamilyId family = FamilyId::Bernoulli;
  Eigen::MatrixXd block;
  std::vector<Eigen::MatrixXd> block_vec;
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
  Eigen::VectorXd sigma_diag;
  Eigen::MatrixXd sigma_full;

  int Q() const {
    return static_cast<int>(block.size() ? block.rows() : block_vec.at(0).rows());
  }
  int L() const {
    return static_cast<int>(block.size() ? block.cols() : block_vec.at(0).cols());
  }
};

// Q*L dense matrices (n1 x n2), index q*L + l; SBM diagonals zeroed so full
// sums over the tensor equal sums over i != j.
using LogDensityTensor = std::vector<Eigen::MatrixXd>;

// W_ql = sum_{dyads} tau_iq tau_jl (full i != j sum for SBM kinds).
Eigen::MatrixXd block_weights(const NetworkData& data, const Membership& m);
// sum_{dyads} tau_iq tau_jl M(i,j); SBM diagonal excluded.
Eigen::MatrixXd block_cross(const NetworkData& data, const Membership& m,
                            const Eigen::MatrixXd& M);

LogDensityTensor log_density_tensor(FamilyId family, const EmissionParams& params,
                                    const NetworkData& data, int Q, int L);

// Maximizer of the tau-weighted complete log-likelihood over the family's
// parameters. Closed form where available; covariate families run the
// quasi-Newton path, warm-started from `warm` when given. Sets *degenerate
// when some block weight fell below kWeightEps (denominator floored).
EmissionParams m_step(FamilyId family, const NetworkData& data, const Membership& resp,
                      const EmissionParams* warm = nullptr, bool* degenerate = nullptr);

// Weighted log-likelihood objective of the covariate-family M-step and its
// exact gradient over (block params as stored, beta).
double covariate_objective(FamilyId family, const EmissionParams& params,
                           const NetworkData& data, const Membership& resp);
Eigen::VectorXd covariate_gradient(FamilyId family, const EmissionParams& params,
                                   const NetworkData& data, const Membership& resp);

// Polynomial-substituted logistic objective evaluated via binomial-separated
// power sums; gradient packed as [vec(m) column-major, beta]. Sets
// *out_of_range when some |m_ql + beta.Y_ij| exceeds the gapprox interval.
struct ObjectiveValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
};
ObjectiveValue fast_logistic_objective(const EmissionParams& params, const NetworkData& data,
                                       const Membership& resp, bool* out_of_range = nullptr);

long free_parameter_count(FamilyId family, int Q, int L, int p, int c, bool symmetric);

// One dyad value (length-p vector) drawn from F_ql given covariate vector y.
Eigen::VectorXd sample_dyad(FamilyId family, const EmissionParams& params, int q, int l,
                            const Eigen::VectorXd& y, std::mt19937_64& rng);

// Predicted mean value under the one-group fit; used for residual graphs.
double dyad_mean(FamilyId family, const EmissionParams& params, int q, int l,
                 const Eigen::VectorXd& y);

}  // namespace blockinfer

#endif
