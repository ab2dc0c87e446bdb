#include "blockinfer/membership.hpp"

namespace blockinfer {

void floor_and_normalize_rows(Eigen::MatrixXd& tau) {
  tau = tau.cwiseMax(kTauFloor);
  Eigen::VectorXd s = tau.rowwise().sum();
  tau.array().colwise() /= s.array();
}

void floor_and_normalize(Eigen::VectorXd& alpha) {
  alpha = alpha.cwiseMax(kTauFloor);
  alpha /= alpha.sum();
}

std::vector<int> hard_labels(const Eigen::MatrixXd& tau) {
  std::vector<int> lab(tau.rows());
  for (long i = 0; i < tau.rows(); ++i) {
    Eigen::Index k;
    tau.row(i).maxCoeff(&k);
    lab[i] = static_cast<int>(k);
  }
  return lab;
}

Eigen::MatrixXd labels_to_tau(const std::vector<int>& labels, int Q) {
  double eps = 0.1 / Q;
  Eigen::MatrixXd tau = Eigen::MatrixXd::Constant(labels.size(), Q, eps);
  for (size_t i = 0; i < labels.size(); ++i) tau(i, labels[i]) = 1.0 - (Q - 1) * eps;
  floor_and_normalize_rows(tau);
  return tau;
}

Membership uniform_membership(NetworkKind kind, int n1, int n2, int Q, int L) {
  Membership m;
  m.kind = kind;
  m.tau1 = Eigen::MatrixXd::Constant(n1, Q, 1.0 / Q);
  m.alpha1 = Eigen::VectorXd::Constant(Q, 1.0 / Q);
  if (kind == NetworkKind::LBM) {
    m.tau2 = Eigen::MatrixXd::Constant(n2, L, 1.0 / L);
    m.alpha2 = Eigen::VectorXd::Constant(L, 1.0 / L);
  }
  return m;
}

namespace {
bool row_stochastic(const Eigen::MatrixXd& tau, double tol) {
  if (tau.minCoeff() < 0) return false;
  Eigen::VectorXd s = tau.rowwise().sum();
  return (s.array() - 1.0).abs().maxCoeff() <= tol;
}
}  // namespace

bool valid_membership(const Membership& m, double tol) {
  if (m.tau1.size() == 0 || !row_stochastic(m.tau1, tol)) return false;
  if (std::abs(m.alpha1.sum() - 1.0) > tol) return false;
  if (m.kind == NetworkKind::LBM) {
    if (m.tau2.size() == 0 || !row_stochastic(m.tau2, tol)) return false;
    if (std::abs(m.alpha2.sum() - 1.0) > tol) return false;
  }
  return true;
}

}  // namespace blockinfer
