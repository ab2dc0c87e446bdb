#include "blockinfer/vem.hpp"

#include <cmath>

namespace blockinfer {

namespace {

double mix_term(const Eigen::MatrixXd& tau, const Eigen::VectorXd& alpha) {
  Eigen::ArrayXXd t = tau.array().max(kTauFloor);
  Eigen::RowVectorXd la = alpha.array().max(kTauFloor).log().matrix().transpose();
  double s = 0.0;
  for (long q = 0; q < tau.cols(); ++q)
    s += (tau.col(q).array() * (la(q) - t.col(q).log())).sum();
  return s;
}

double edge_term(const NetworkData& data, const Membership& m, const LogDensityTensor& T) {
  const int Q = m.Q(), L = m.L();
  const Eigen::MatrixXd& t2 = data.structure.kind == NetworkKind::LBM ? m.tau2 : m.tau1;
  double s = 0.0;
  for (int q = 0; q < Q; ++q)
    for (int l = 0; l < L; ++l)
      s += m.tau1.col(q).dot(T[q * L + l] * t2.col(l));
  if (data.structure.kind == NetworkKind::SymmetricSBM) s *= 0.5;
  return s;
}

}  // namespace

double compute_J_from_tensor(const NetworkData& data, const Membership& m,
                             const LogDensityTensor& tensor) {
  double j = mix_term(m.tau1, m.alpha1);
  if (data.structure.kind == NetworkKind::LBM) j += mix_term(m.tau2, m.alpha2);
  return j + edge_term(data, m, tensor);
}

double compute_J(const NetworkData& data, const Membership& m, const EmissionParams& params) {
  LogDensityTensor T = log_density_tensor(params.family, params, data, m.Q(), m.L());
  return compute_J_from_tensor(data, m, T);
}

namespace {

void log_normalize_rows(Eigen::MatrixXd& logtau) {
  Eigen::VectorXd mx = logtau.rowwise().maxCoeff();
  logtau.colwise() -= mx;
  logtau = logtau.array().exp();
  floor_and_normalize_rows(logtau);
}

}  // namespace

Membership e_step(const NetworkData& data, const EmissionParams& params, const Membership& init,
                  const FitConfig& cfg) {
  const int Q = init.Q(), L = init.L();
  const bool lbm = data.structure.kind == NetworkKind::LBM;
  const bool sym = data.structure.kind == NetworkKind::SymmetricSBM;
  LogDensityTensor T = log_density_tensor(params.family, params, data, Q, L);

  Membership m = init;
  Membership best = m;
  double best_j = compute_J_from_tensor(data, m, T);
  Eigen::RowVectorXd la1 = m.alpha1.array().max(kTauFloor).log().matrix().transpose();

  for (int it = 0; it < cfg.fp_max_iter; ++it) {
    double delta = 0.0;
    if (!lbm) {
      Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(data.n1(), Q);
      for (int q = 0; q < Q; ++q)
        for (int l = 0; l < L; ++l) {
          phi.col(q) += T[q * L + l] * m.tau1.col(l);
          if (!sym) phi.col(q) += T[l * L + q].transpose() * m.tau1.col(l);
        }
      Eigen::MatrixXd logtau = phi;
      logtau.rowwise() += la1;
      log_normalize_rows(logtau);
      delta = (logtau - m.tau1).cwiseAbs().maxCoeff();
      m.tau1 = std::move(logtau);
    } else {
      Eigen::RowVectorXd la2 = m.alpha2.array().max(kTauFloor).log().matrix().transpose();
      Eigen::MatrixXd phi1 = Eigen::MatrixXd::Zero(data.n1(), Q);
      for (int q = 0; q < Q; ++q)
        for (int l = 0; l < L; ++l) phi1.col(q) += T[q * L + l] * m.tau2.col(l);
      Eigen::MatrixXd logtau1 = phi1;
      logtau1.rowwise() += la1;
      log_normalize_rows(logtau1);
      delta = (logtau1 - m.tau1).cwiseAbs().maxCoeff();
      m.tau1 = std::move(logtau1);

      Eigen::MatrixXd phi2 = Eigen::MatrixXd::Zero(data.n2(), L);
      for (int q = 0; q < Q; ++q)
        for (int l = 0; l < L; ++l) phi2.col(l) += T[q * L + l].transpose() * m.tau1.col(q);
      Eigen::MatrixXd logtau2 = phi2;
      logtau2.rowwise() += la2;
      log_normalize_rows(logtau2);
      delta = std::max(delta, (logtau2 - m.tau2).cwiseAbs().maxCoeff());
      m.tau2 = std::move(logtau2);
    }

    double j = compute_J_from_tensor(data, m, T);
    if (j > best_j) {
      best_j = j;
      best = m;
    }
    if (delta < cfg.fp_tol) break;
  }
  return best;
}

void m_step_alpha(Membership& m) {
  m.alpha1 = m.tau1.colwise().mean();
  floor_and_normalize(m.alpha1);
  if (m.kind == NetworkKind::LBM) {
    m.alpha2 = m.tau2.colwise().mean();
    floor_and_normalize(m.alpha2);
  }
}

FitResult fit(const NetworkData& data, FamilyId family, const Membership& init,
              const FitConfig& cfg) {
  FitResult res;
  res.family = family;
  res.Q = init.Q();
  res.L = init.L();

  Membership m = init;
  floor_and_normalize_rows(m.tau1);
  if (m.kind == NetworkKind::LBM) floor_and_normalize_rows(m.tau2);
  if (m.alpha1.size() != m.Q() ||
      (m.kind == NetworkKind::LBM && m.alpha2.size() != m.L()))
    m_step_alpha(m);

  bool degenerate = false;
  EmissionParams params = m_step(family, data, m, nullptr, &degenerate);
  res.degenerate_warning |= degenerate;
  double j = compute_J(data, m, params);

  for (int it = 0; it < cfg.max_em_iter; ++it) {
    m = e_step(data, params, m, cfg);
    m_step_alpha(m);
    params = m_step(family, data, m, &params, &degenerate);
    res.degenerate_warning |= degenerate;
    double j_new = compute_J(data, m, params);
    res.iterations = it + 1;
    bool done = std::abs(j_new - j) <= cfg.em_tol * std::max(1.0, std::abs(j));
    j = j_new;
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.membership = std::move(m);
  res.params = std::move(params);
  res.J = j;
  return res;
}

}  // namespace blockinfer
