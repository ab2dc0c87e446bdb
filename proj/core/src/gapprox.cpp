#include "blockinfer/gapprox.hpp"

#include "blockinfer/types.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <set>

namespace blockinfer {

double g_exact(double x) {
  double ax = std::abs(x);
  return -0.5 * ax - std::log1p(std::exp(-ax));
}

namespace {

// min ||A c - b||^2 subject to G c <= 0, by a primal active-set method.
// Few variables (8) and a few hundred constraints; c = 0 is feasible.
Eigen::VectorXd constrained_lsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                const Eigen::MatrixXd& G) {
  const int nv = static_cast<int>(A.cols());
  const int nc = static_cast<int>(G.rows());
  Eigen::MatrixXd H = A.transpose() * A;
  Eigen::VectorXd f = A.transpose() * b;

  Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
  std::set<int> active;

  auto solve_eq = [&](const std::set<int>& act, Eigen::VectorXd& sol, Eigen::VectorXd& mult) {
    int m = static_cast<int>(act.size());
    Eigen::MatrixXd K(nv + m, nv + m);
    K.setZero();
    K.topLeftCorner(nv, nv) = H;
    int r = 0;
    for (int idx : act) {
      K.block(nv + r, 0, 1, nv) = G.row(idx);
      K.block(0, nv + r, nv, 1) = G.row(idx).transpose();
      ++r;
    }
    Eigen::VectorXd rhs(nv + m);
    rhs.head(nv) = f;
    rhs.tail(m).setZero();
    Eigen::VectorXd z = K.fullPivLu().solve(rhs);
    sol = z.head(nv);
    mult = z.tail(m);
  };

  for (int iter = 0; iter < 500; ++iter) {
    Eigen::VectorXd target, mult;
    solve_eq(active, target, mult);

    Eigen::VectorXd step = target - c;
    if (step.norm() < 1e-13) {
      // at the equality-constrained optimum; drop the most negative multiplier
      int drop = -1, r = 0;
      double worst = -1e-12;
      for (int idx : active) {
        if (mult(r) < worst) {
          worst = mult(r);
          drop = idx;
        }
        ++r;
      }
      if (drop < 0) return c;
      active.erase(drop);
      continue;
    }
    // largest t in (0,1] keeping G(c + t*step) <= 0
    double t = 1.0;
    int blocking = -1;
    for (int i = 0; i < nc; ++i) {
      if (active.count(i)) continue;
      double gi = G.row(i).dot(step);
      if (gi > 1e-14) {
        double ti = -G.row(i).dot(c) / gi;
        if (ti < t) {
          t = std::max(0.0, ti);
          blocking = i;
        }
      }
    }
    c += t * step;
    if (blocking >= 0)
      active.insert(blocking);
    else if (t >= 1.0)
      continue;  // full step; loop re-checks optimality / multipliers
  }
  return c;
}

}  // namespace

GApprox fit_g_approx() {
  static const GApprox cached = [] {
    constexpr int kNumCoeffs = GApprox::kNumCoeffs;
    const double R = GApprox::kRange;
    // Fit in the scaled variable t = x/R to keep the Vandermonde tame; the
    // function is even so the grid covers [0, R] only.
    const int n_fit = 2001;
    Eigen::MatrixXd A(n_fit, kNumCoeffs);
    Eigen::VectorXd b(n_fit);
    for (int i = 0; i < n_fit; ++i) {
      double x = R * i / (n_fit - 1);
      double t2 = (x / R) * (x / R);
      double pw = 1.0;
      for (int k = 0; k < kNumCoeffs; ++k) {
        A(i, k) = pw;
        pw *= t2;
      }
      b(i) = g_exact(x);
    }
    // p''(x) <= 0 at grid points (B = 0: concavity, matching g).
    const int n_con = 301;
    Eigen::MatrixXd G(n_con, kNumCoeffs);
    G.setZero();
    for (int i = 0; i < n_con; ++i) {
      double t2 = std::pow(static_cast<double>(i) / (n_con - 1), 2);
      double pw = 1.0;
      for (int k = 1; k < kNumCoeffs; ++k) {
        G(i, k) = 2 * k * (2 * k - 1) * pw;
        pw *= t2;
      }
    }
    Eigen::VectorXd c = constrained_lsq(A, b, G);

    GApprox ga;
    double scale = 1.0;
    for (int k = 0; k < kNumCoeffs; ++k) {
      ga.a[k] = c(k) / scale;
      scale *= R * R;
    }
    if (ga.second_deriv(0.0) > 1e-8 || ga.second_deriv(R) > 1e-8)
      throw FitInfeasible("concavity constraint not met after fit");

    double sup = 0.0;
    const int n_eval = 100000;
    for (int i = 0; i < n_eval; ++i) {
      double x = -R + 2 * R * i / (n_eval - 1);
      sup = std::max(sup, std::abs(ga.eval(x) - g_exact(x)));
    }
    ga.eps_g = sup;
    return ga;
  }();
  return cached;
}

}  // namespace blockinfer
