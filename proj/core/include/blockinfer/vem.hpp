#ifndef BLOCKINFER_VEM_HPP
#define BLOCKINFER_VEM_HPP

#include <limits>

#include "blockinfer/families.hpp"
#include "blockinfer/membership.hpp"
#include "blockinfer/network_data.hpp"

namespace blockinfer {

struct FitConfig {
  double em_tol = 1e-8;
  int max_em_iter = 500;
  double fp_tol = 1e-6;
  int fp_max_iter = 50;
};

struct FitResult {
  Membership membership;
  EmissionParams params;
  double J = -std::numeric_limits<double>::infinity();
  double ICL = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool degenerate_warning = false;
  FamilyId family = FamilyId::Bernoulli;
  int Q = 0;
  int L = 0;
};

// Variational lower bound: mixture terms sum tau (log alpha - log tau) plus
// the responsibility-weighted edge log-densities (i != j directed, i < j
// symmetric, full product grid LBM).
double compute_J(const NetworkData& data, const Membership& m, const EmissionParams& params);
double compute_J_from_tensor(const NetworkData& data, const Membership& m,
                             const LogDensityTensor& tensor);

// Fixed-point update of tau in log space, alpha held fixed (taken from
// `init`). Tracks J and returns the best iterate, so the result never
// degrades the criterion.
Membership e_step(const NetworkData& data, const EmissionParams& params, const Membership& init,
                  const FitConfig& cfg = {});

// alpha_q = column mean of tau, floored and renormalized.
void m_step_alpha(Membership& m);

FitResult fit(const NetworkData& data, FamilyId family, const Membership& init,
              const FitConfig& cfg = {});

}  // namespace blockinfer

#endif
