#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include <blockinfer/spectral.hpp>
#include <blockinfer/vem.hpp>

#include "test_support.hpp"

using namespace blockinfer;
using namespace blockinfer::test;

namespace {

// Scalar-loop criterion: mixture terms plus responsibility-weighted edge
// log densities, entirely independent of the engine's vectorized path.
double scalar_J(const NetworkData& data, const Membership& m, const LogDensityTensor& tensor) {
  const int Q = m.Q(), L = m.L();
  double J = 0.0;
  for (int i = 0; i < m.tau1.rows(); ++i)
    for (int q = 0; q < Q; ++q)
      J += m.tau1(i, q) * (std::log(m.alpha1[q]) - std::log(m.tau1(i, q)));
  if (data.structure.kind == NetworkKind::LBM) {
    for (int j = 0; j < m.tau2.rows(); ++j)
      for (int l = 0; l < L; ++l)
        J += m.tau2(j, l) * (std::log(m.alpha2[l]) - std::log(m.tau2(j, l)));
    for (int i = 0; i < data.n1(); ++i)
      for (int j = 0; j < data.n2(); ++j)
        for (int q = 0; q < Q; ++q)
          for (int l = 0; l < L; ++l)
            J += m.tau1(i, q) * m.tau2(j, l) * tensor[q * L + l](i, j);
    return J;
  }
  const bool symmetric = data.structure.kind == NetworkKind::SymmetricSBM;
  for (int i = 0; i < data.n1(); ++i)
    for (int j = 0; j < data.n1(); ++j) {
      if (i == j) continue;
      if (symmetric && j < i) continue;
      for (int q = 0; q < Q; ++q)
        for (int l = 0; l < Q; ++l)
          J += m.tau1(i, q) * m.tau1(j, l) * tensor[q * Q + l](i, j);
    }
  return J;
}

}  // namespace

TEST_CASE("compute_J matches a scalar-loop oracle on hand-set instances") {
  Eigen::MatrixXd X(3, 3);
  X << 0, 1, 0, 1, 0, 1, 0, 0, 0;
  auto data = make_network(NetworkStructure::directed(3), {X}, {}, FamilyId::Bernoulli);
  Membership m;
  m.kind = NetworkKind::DirectedSBM;
  m.tau1 = Eigen::MatrixXd(3, 2);
  m.tau1 << 0.9, 0.1, 0.3, 0.7, 0.5, 0.5;
  m.alpha1 = Eigen::VectorXd(2);
  m.alpha1 << 0.6, 0.4;
  EmissionParams p;
  p.family = FamilyId::Bernoulli;
  p.block = Eigen::MatrixXd(2, 2);
  p.block << 0.8, 0.2, 0.3, 0.6;
  auto tensor = log_density_tensor(FamilyId::Bernoulli, p, data, 2, 2);
  CHECK(compute_J(data, m, p) == doctest::Approx(scalar_J(data, m, tensor)).epsilon(1e-12));
}

TEST_CASE("compute_J scalar oracle across kinds and families, random instances") {
  struct Case {
    FamilyId family;
    NetworkKind kind;
  };
  std::vector<Case> cases = {{FamilyId::Bernoulli, NetworkKind::DirectedSBM},
                             {FamilyId::Poisson, NetworkKind::SymmetricSBM},
                             {FamilyId::Gaussian, NetworkKind::LBM},
                             {FamilyId::GaussianCovariates, NetworkKind::DirectedSBM},
                             {FamilyId::BernoulliMultiplex, NetworkKind::SymmetricSBM}};
  for (const auto& cse : cases) {
    CAPTURE(family_name(cse.family));
    auto sim = planted_network(cse.family, cse.kind, 9, 7, 2, 3, 5);
    auto m = random_membership(cse.kind, sim.data.n1(), sim.data.n2(), 2,
                               cse.kind == NetworkKind::LBM ? 3 : 2, 6);
    auto params = m_step(cse.family, sim.data, m);
    auto tensor = log_density_tensor(cse.family, params, sim.data, m.Q(), m.L());
    CHECK(compute_J(sim.data, m, params) ==
          doctest::Approx(scalar_J(sim.data, m, tensor)).epsilon(1e-12));
  }
}

TEST_CASE("Q=1 criterion is the plain log-likelihood sum") {
  auto sim = planted_network(FamilyId::Poisson, NetworkKind::DirectedSBM, 8, 8, 2, 2, 9);
  auto m = uniform_membership(NetworkKind::DirectedSBM, 8, 8, 1, 1);
  auto params = m_step(FamilyId::Poisson, sim.data, m);
  auto tensor = log_density_tensor(FamilyId::Poisson, params, sim.data, 1, 1);
  double ll = 0.0;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      if (i != j) ll += tensor[0](i, j);
  CHECK(compute_J(sim.data, m, params) == doctest::Approx(ll).epsilon(1e-12));
}

TEST_CASE("J is invariant to rescaling covariates against beta") {
  auto sim =
      planted_network(FamilyId::GaussianCovariates, NetworkKind::DirectedSBM, 8, 8, 2, 2, 12);
  auto m = random_membership(NetworkKind::DirectedSBM, 8, 8, 2, 2, 13);
  auto params = m_step(FamilyId::GaussianCovariates, sim.data, m);
  double J1 = compute_J(sim.data, m, params);

  NetworkData scaled = sim.data;
  scaled.Y[0] *= 2.0;
  EmissionParams half = params;
  half.beta /= 2.0;
  CHECK(compute_J(scaled, m, half) == doctest::Approx(J1).epsilon(1e-12));
}

TEST_CASE("e_step with Q=1 returns all-ones tau") {
  auto sim = planted_network(FamilyId::Bernoulli, NetworkKind::DirectedSBM, 6, 6, 2, 2, 20);
  auto m = uniform_membership(NetworkKind::DirectedSBM, 6, 6, 1, 1);
  auto params = m_step(FamilyId::Bernoulli, sim.data, m);
  auto out = e_step(sim.data, params, m);
  CHECK((out.tau1.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("e_step reaches the grid-search optimum on a 2-node instance") {
  Eigen::MatrixXd X(2, 2);
  X << 0, 1, 0, 0;
  auto data = make_network(NetworkStructure::directed(2), {X}, {}, FamilyId::Bernoulli);
  EmissionParams p;
  p.family = FamilyId::Bernoulli;
  p.block = Eigen::MatrixXd(2, 2);
  p.block << 0.9, 0.2, 0.4, 0.1;
  Membership init = uniform_membership(NetworkKind::DirectedSBM, 2, 2, 2, 2);
  init.alpha1 << 0.55, 0.45;

  double best_grid = -1e300;
  auto tensor = log_density_tensor(FamilyId::Bernoulli, p, data, 2, 2);
  const int G = 400;
  for (int a = 1; a < G; ++a)
    for (int b = 1; b < G; ++b) {
      Membership m = init;
      m.tau1(0, 0) = static_cast<double>(a) / G;
      m.tau1(0, 1) = 1.0 - m.tau1(0, 0);
      m.tau1(1, 0) = static_cast<double>(b) / G;
      m.tau1(1, 1) = 1.0 - m.tau1(1, 0);
      best_grid = std::max(best_grid, compute_J_from_tensor(data, m, tensor));
    }
  auto out = e_step(data, p, init);
  CHECK(compute_J_from_tensor(data, out, tensor) >= best_grid - 1e-5);
}

TEST_CASE("e_step rows stay stochastic and never degrade J") {
  for (NetworkKind kind :
       {NetworkKind::DirectedSBM, NetworkKind::SymmetricSBM, NetworkKind::LBM}) {
    auto sim = planted_network(FamilyId::Gaussian, kind, 10, 8, 2, 3, 30);
    auto init = random_membership(kind, sim.data.n1(), sim.data.n2(), 2,
                                  kind == NetworkKind::LBM ? 3 : 2, 31);
    auto params = m_step(FamilyId::Gaussian, sim.data, init);
    double before = compute_J(sim.data, init, params);
    auto out = e_step(sim.data, params, init);
    CHECK((out.tau1.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
    if (kind == NetworkKind::LBM)
      CHECK((out.tau2.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
    CHECK(compute_J(sim.data, out, params) >= before - 1e-9);
  }
}

TEST_CASE("e_step is label-permutation equivariant") {
  auto sim = planted_network(FamilyId::Bernoulli, NetworkKind::DirectedSBM, 10, 10, 3, 3, 40);
  auto init = random_membership(NetworkKind::DirectedSBM, 10, 10, 3, 3, 41);
  auto params = m_step(FamilyId::Bernoulli, sim.data, init);
  auto out = e_step(sim.data, params, init);

  // permutation (0 1 2) -> (2 0 1)
  Eigen::PermutationMatrix<Eigen::Dynamic> P(3);
  P.indices() << 2, 0, 1;
  Membership pinit = init;
  pinit.tau1 = init.tau1 * P;
  pinit.alpha1 = P.transpose() * init.alpha1;
  EmissionParams pp = params;
  pp.block = P.transpose() * params.block * P;
  auto pout = e_step(sim.data, pp, pinit);
  CHECK((pout.tau1 - out.tau1 * P).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(compute_J(sim.data, pout, pp) ==
        doctest::Approx(compute_J(sim.data, out, params)).epsilon(1e-10));
}

TEST_CASE("m_step_alpha equals floored column means and maximizes the mixture term") {
  Membership m;
  m.kind = NetworkKind::DirectedSBM;
  m.tau1 = Eigen::MatrixXd::Zero(10, 2);
  for (int i = 0; i < 3; ++i) m.tau1(i, 0) = 1.0;
  for (int i = 3; i < 10; ++i) m.tau1(i, 1) = 1.0;
  m.alpha1 = Eigen::VectorXd::Constant(2, 0.5);
  m_step_alpha(m);
  CHECK(m.alpha1[0] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(m.alpha1[1] == doctest::Approx(0.7).epsilon(1e-9));

  // simplex-oracle: optimum beats random feasible alphas
  std::mt19937_64 rng(50);
  auto mixture = [&](const Eigen::VectorXd& a) {
    double v = 0.0;
    for (int i = 0; i < 10; ++i)
      for (int q = 0; q < 2; ++q) v += m.tau1(i, q) * std::log(a[q]);
    return v;
  };
  double at_opt = mixture(m.alpha1);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::VectorXd a(2);
    a << u(rng), u(rng);
    a /= a.sum();
    CHECK(at_opt >= mixture(a) - 1e-12);
  }
}

TEST_CASE("symmetric criterion equals half the symmetrized directed sum") {
  auto sim = planted_network(FamilyId::Gaussian, NetworkKind::SymmetricSBM, 10, 10, 2, 2, 60);
  auto m = random_membership(NetworkKind::SymmetricSBM, 10, 10, 2, 2, 61);
  auto params = m_step(FamilyId::Gaussian, sim.data, m);
  auto tensor = log_density_tensor(FamilyId::Gaussian, params, sim.data, 2, 2);

  double full = 0.0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      if (i == j) continue;
      for (int q = 0; q < 2; ++q)
        for (int l = 0; l < 2; ++l) full += m.tau1(i, q) * m.tau1(j, l) * tensor[q * 2 + l](i, j);
    }
  double mix = 0.0;
  for (int i = 0; i < 10; ++i)
    for (int q = 0; q < 2; ++q)
      mix += m.tau1(i, q) * (std::log(m.alpha1[q]) - std::log(m.tau1(i, q)));
  CHECK(compute_J(sim.data, m, params) == doctest::Approx(mix + 0.5 * full).epsilon(1e-12));
}

TEST_CASE("fit recovers a strongly contrasted 2-block directed network exactly") {
  Eigen::MatrixXd pi(2, 2);
  pi << 0.9, 0.1, 0.1, 0.9;
  EmissionParams planted;
  planted.family = FamilyId::Bernoulli;
  planted.block = pi;
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(2, 0.5);
  auto sim = simulate_network(NetworkStructure::directed(60), FamilyId::Bernoulli, alpha, alpha,
                              planted, {}, 77);
  auto init = initial_membership(sim.data, FamilyId::Bernoulli, 2, 2, 78);
  auto res = fit(sim.data, FamilyId::Bernoulli, init);
  CHECK(adjusted_rand_index(hard_labels(res.membership.tau1), sim.labels1) ==
        doctest::Approx(1.0));
}

TEST_CASE("fit at Q=1 converges immediately") {
  auto sim = planted_network(FamilyId::Bernoulli, NetworkKind::DirectedSBM, 12, 12, 2, 2, 80);
  auto init = uniform_membership(NetworkKind::DirectedSBM, 12, 12, 1, 1);
  auto res = fit(sim.data, FamilyId::Bernoulli, init);
  CHECK(res.converged);
  CHECK(res.iterations <= 2);
}

TEST_CASE("fit is deterministic from identical inputs") {
  auto sim = planted_network(FamilyId::Poisson, NetworkKind::DirectedSBM, 20, 20, 3, 3, 90);
  auto init = initial_membership(sim.data, FamilyId::Poisson, 3, 3, 91);
  auto a = fit(sim.data, FamilyId::Poisson, init);
  auto b = fit(sim.data, FamilyId::Poisson, init);
  CHECK(a.J == b.J);
  CHECK((a.membership.tau1 - b.membership.tau1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("J never decreases across EM iterations (spot check via monotone convergence)") {
  for (NetworkKind kind :
       {NetworkKind::DirectedSBM, NetworkKind::SymmetricSBM, NetworkKind::LBM}) {
    auto sim = planted_network(FamilyId::Gaussian, kind, 16, 12, 2, 2, 95);
    auto init = initial_membership(sim.data, FamilyId::Gaussian, 2, 2, 96);
    auto res = fit(sim.data, FamilyId::Gaussian, init);
    double J_init;
    {
      Membership m = init;
      auto params = m_step(FamilyId::Gaussian, sim.data, m);
      J_init = compute_J(sim.data, m, params);
    }
    CHECK(res.J >= J_init - 1e-8);
    CHECK(std::isfinite(res.J));
  }
}
