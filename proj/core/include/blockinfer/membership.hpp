#ifndef BLOCKINFER_MEMBERSHIP_HPP
#define BLOCKINFER_MEMBERSHIP_HPP

#include <Eigen/Dense>
#include <vector>

#include "blockinfer/types.hpp"

namespace blockinfer {

constexpr double kTauFloor = 1e-10;

// Variational responsibilities plus mixture weights. SBM uses (tau1, alpha1)
// only; LBM carries one pair per node type.
struct Membership {
  NetworkKind kind = NetworkKind::DirectedSBM;
  Eigen::MatrixXd tau1;  // n1 x Q, row-stochastic
  Eigen::MatrixXd tau2;  // n2 x L (LBM only)
  Eigen::VectorXd alpha1;
  Eigen::VectorXd alpha2;

  int Q() const { return static_cast<int>(tau1.cols()); }
  int L() const {
    return kind == NetworkKind::LBM ? static_cast<int>(tau2.cols()) : Q();
  }
};

// Floors every entry at kTauFloor and renormalizes rows to sum 1.
void floor_and_normalize_rows(Eigen::MatrixXd& tau);
void floor_and_normalize(Eigen::VectorXd& alpha);

// argmax class per row
std::vector<int> hard_labels(const Eigen::MatrixXd& tau);

// Hard labels to soft responsibilities: labeled class gets
// 1 - (Q-1)*soft_eps with soft_eps = 0.1/Q.
Eigen::MatrixXd labels_to_tau(const std::vector<int>& labels, int Q);

Membership uniform_membership(NetworkKind kind, int n1, int n2, int Q, int L);

bool valid_membership(const Membership& m, double tol = 1e-9);

}  // namespace blockinfer

#endif
