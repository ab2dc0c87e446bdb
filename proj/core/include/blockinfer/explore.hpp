#ifndef BLOCKINFER_EXPLORE_HPP
#define BLOCKINFER_EXPLORE_HPP

#include <map>
#include <utility>
#include <vector>

#include "blockinfer/spectral.hpp"
#include "blockinfer/vem.hpp"

namespace blockinfer {

struct ExploreConfig {
  FitConfig fit;
  int q_start = 4;
  int q2_start = 4;  // second node type (LBM)
  double exploration_factor = 1.5;
  int reinit_budget_constant = 5;
  double icl_improve_tol = 1e-6;
  int jobs = 0;  // 0: hardware concurrency
  std::uint64_t seed = 0;
  bool forced_range = false;  // disable automatic extension
  int q_min = 1;
  int q_max = 0;
  int max_sweeps = 100;
};

// Key is (Q, L); SBM lives on the diagonal (Q, Q).
struct ExplorationState {
  std::map<std::pair<int, int>, FitResult> best;
  int sweeps = 0;

  const FitResult& selected() const;  // max ICL, parsimony tie-break
};

// ICL: J penalized by 1/2 P_F log(dyads) for emission parameters and
// 1/2 (Q-1) log(node count) per mixture.
double compute_icl(const FitResult& fit, const NetworkData& data, FamilyId family);

// One membership per unordered class pair with the two tau columns summed;
// `node_type` picks the side for LBM (1 for SBM).
std::vector<Membership> merge_candidates(const FitResult& fit, int node_type = 1);

// One candidate per class with >= 2 members: the class is bisected by
// 2-means on its spectral embedding rows, plus a random bisection variant.
std::vector<Membership> split_candidates(const FitResult& fit, const NetworkData& data,
                                         const Eigen::MatrixXd& embedding, std::uint64_t seed,
                                         int node_type = 1);

// Keeps the top-`budget` candidates by J after a single fixed-point refresh.
std::vector<Membership> filter_candidates(std::vector<Membership> candidates,
                                          const NetworkData& data, FamilyId family, int budget,
                                          const FitConfig& cfg = {});

ExplorationState explore(const NetworkData& data, FamilyId family, const ExploreConfig& cfg);

}  // namespace blockinfer

#endif
