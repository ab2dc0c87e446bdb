#include "blockinfer/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <numeric>
#include <random>

#include "blockinfer/vem.hpp"

namespace blockinfer {

Eigen::MatrixXd residual_graph(const NetworkData& data, FamilyId family) {
  if (!family_uses_covariates(family)) {
    Eigen::MatrixXd R = data.X[0];
    for (int k = 1; k < data.p(); ++k) R += data.X[k];
    if (data.p() > 1) R /= data.p();
    return R;
  }
  Membership one = uniform_membership(data.structure.kind, data.n1(), data.n2(), 1, 1);
  EmissionParams params = m_step(family, data, one);
  Eigen::MatrixXd R(data.n1(), data.n2());
  Eigen::VectorXd y(data.c());
  for (int i = 0; i < data.n1(); ++i)
    for (int j = 0; j < data.n2(); ++j) {
      for (int k = 0; k < data.c(); ++k) y(k) = data.Y[k](i, j);
      R(i, j) = data.X[0](i, j) - dyad_mean(family, params, 0, 0, y);
    }
  if (data.structure.is_sbm()) R.diagonal().setZero();
  return R;
}

std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int restarts,
                        int max_iter) {
  const int n = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  if (k <= 1 || n <= k) {
    std::vector<int> lab(n, 0);
    if (n <= k)
      for (int i = 0; i < n; ++i) lab[i] = i % k;
    return lab;
  }

  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> best_lab(n, 0);
  double best_inertia = std::numeric_limits<double>::infinity();

  for (int rs = 0; rs < restarts; ++rs) {
    // k-means++ seeding
    Eigen::MatrixXd centers(k, d);
    centers.row(0) = points.row(static_cast<int>(unif(rng) * n) % n);
    Eigen::VectorXd d2 =
        (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
      double total = d2.sum();
      int pick = 0;
      if (total > 0) {
        double r = unif(rng) * total, acc = 0.0;
        for (int i = 0; i < n; ++i) {
          acc += d2(i);
          if (r <= acc) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<int>(unif(rng) * n) % n;
      }
      centers.row(c) = points.row(pick);
      d2 = d2.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> lab(n, 0);
    for (int it = 0; it < max_iter; ++it) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        int arg = 0;
        double bd = (points.row(i) - centers.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
          double dd = (points.row(i) - centers.row(c)).squaredNorm();
          if (dd < bd) {
            bd = dd;
            arg = c;
          }
        }
        if (arg != lab[i]) {
          lab[i] = arg;
          changed = true;
        }
      }
      centers.setZero();
      Eigen::VectorXi cnt = Eigen::VectorXi::Zero(k);
      for (int i = 0; i < n; ++i) {
        centers.row(lab[i]) += points.row(i);
        cnt(lab[i])++;
      }
      for (int c = 0; c < k; ++c) {
        if (cnt(c) > 0) {
          centers.row(c) /= cnt(c);
        } else {
          // re-seed an empty cluster at the farthest point
          int far = 0;
          double fd = -1.0;
          for (int i = 0; i < n; ++i) {
            double dd = (points.row(i) - centers.row(lab[i])).squaredNorm();
            if (dd > fd) {
              fd = dd;
              far = i;
            }
          }
          centers.row(c) = points.row(far);
          changed = true;
        }
      }
      if (!changed && it > 0) break;
    }
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) inertia += (points.row(i) - centers.row(lab[i])).squaredNorm();
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_lab = lab;
    }
  }
  return best_lab;
}

Eigen::MatrixXd spectral_embedding(const Eigen::MatrixXd& M, int K) {
  const int n = static_cast<int>(M.rows());
  Eigen::MatrixXd S = (M + M.transpose()) / 2.0;
  Eigen::VectorXd deg = S.cwiseAbs().rowwise().sum();
  Eigen::VectorXd dinv(n);
  for (int i = 0; i < n; ++i) dinv(i) = deg(i) > 1e-12 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  Eigen::MatrixXd Lap = dinv.asDiagonal() * S * dinv.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Lap);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
  });

  Eigen::MatrixXd emb(n, K);
  for (int c = 0; c < K; ++c) emb.col(c) = es.eigenvectors().col(order[c]);
  for (int i = 0; i < n; ++i) {
    double nrm = emb.row(i).norm();
    if (nrm > 1e-12) emb.row(i) /= nrm;
  }
  return emb;
}

std::vector<int> spectral_clustering_abs(const Eigen::MatrixXd& M, int K, std::uint64_t seed) {
  const int n = static_cast<int>(M.rows());
  if (M.rows() != M.cols()) throw ShapeMismatch("spectral clustering needs a square matrix");
  if (K > n) throw InvalidK("K = " + std::to_string(K) + " exceeds n = " + std::to_string(n));
  if (K == 1) return std::vector<int>(n, 0);

  Eigen::MatrixXd emb = spectral_embedding(M, K);
  std::vector<int> lab = kmeans(emb, K, seed);

  // zero-degree nodes go to the largest cluster
  Eigen::VectorXd deg = ((M + M.transpose()) / 2.0).cwiseAbs().rowwise().sum();
  std::vector<int> sizes(K, 0);
  for (int i = 0; i < n; ++i) sizes[lab[i]]++;
  int big = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  for (int i = 0; i < n; ++i)
    if (deg(i) <= 1e-12) lab[i] = big;
  return lab;
}

Membership initial_membership(const NetworkData& data, FamilyId family, int Q, int L,
                              std::uint64_t seed) {
  Membership m;
  m.kind = data.structure.kind;
  Eigen::MatrixXd R = residual_graph(data, family);
  if (data.structure.is_sbm()) {
    std::vector<int> lab = Q == 1 ? std::vector<int>(data.n1(), 0)
                                  : spectral_clustering_abs(R, Q, seed);
    m.tau1 = labels_to_tau(lab, Q);
  } else {
    Eigen::MatrixXd P1 = R * R.transpose();
    Eigen::MatrixXd P2 = R.transpose() * R;
    std::vector<int> l1 = Q == 1 ? std::vector<int>(data.n1(), 0)
                                 : spectral_clustering_abs(P1, Q, derive_seed(seed, 1));
    std::vector<int> l2 = L == 1 ? std::vector<int>(data.n2(), 0)
                                 : spectral_clustering_abs(P2, L, derive_seed(seed, 2));
    m.tau1 = labels_to_tau(l1, Q);
    m.tau2 = labels_to_tau(l2, L);
  }
  m_step_alpha(m);
  return m;
}

}  // namespace blockinfer
