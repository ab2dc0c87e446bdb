#ifndef BLOCKINFER_SIMULATE_HPP
#define BLOCKINFER_SIMULATE_HPP

#include <string>
#include <vector>

#include "blockinfer/explore.hpp"

namespace blockinfer {

struct SimulatedNetwork {
  NetworkData data;
  std::vector<int> labels1;
  std::vector<int> labels2;  // LBM only
};

// Draws memberships i.i.d. multinomial(alpha), then each dyad independently
// from F_ql given the covariates; SymmetricSBM draws i < j and mirrors.
SimulatedNetwork simulate_network(NetworkStructure structure, FamilyId family,
                                  const Eigen::VectorXd& alpha1, const Eigen::VectorXd& alpha2,
                                  const EmissionParams& params,
                                  const std::vector<Eigen::MatrixXd>& Y, std::uint64_t seed);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

// Planted parameters with strong block contrast, used by the CLI simulator
// and the timing harness.
EmissionParams default_planted_params(FamilyId family, int Q, int L, int c);

struct BenchCondition {
  int groups = 5;
  int nodes = 100;
};

struct BenchRow {
  BenchCondition condition;
  double median_cpu_seconds = 0.0;
  int recovered_q = 0;
};

// Simulates each condition, explores the forced range 1..2*groups, repeats
// and keeps the median CPU time.
std::vector<BenchRow> benchmark_suite(const std::vector<BenchCondition>& conditions,
                                      FamilyId family, int repeats = 5, std::uint64_t seed = 0,
                                      int jobs = 0);

}  // namespace blockinfer

#endif
