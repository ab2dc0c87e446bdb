#ifndef BLOCKINFER_OPTIM_HPP
#define BLOCKINFER_OPTIM_HPP

#include <Eigen/Dense>
#include <functional>

namespace blockinfer {

struct OptimResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Minimizes f via L-BFGS (two-loop recursion, backtracking Armijo line
// search). fn fills the gradient and returns the objective value.
OptimResult lbfgs_minimize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& fn,
    Eigen::VectorXd x0, double rel_tol = 1e-8, int max_iter = 200, int memory = 8);

}  // namespace blockinfer

#endif
