#include "blockinfer/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <random>

namespace blockinfer {

namespace {

std::vector<int> draw_labels(int n, const Eigen::VectorXd& alpha, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> lab(n);
  for (int i = 0; i < n; ++i) {
    double r = unif(rng), acc = 0.0;
    int pick = static_cast<int>(alpha.size()) - 1;
    for (int q = 0; q < alpha.size(); ++q) {
      acc += alpha(q);
      if (r <= acc) {
        pick = q;
        break;
      }
    }
    lab[i] = pick;
  }
  return lab;
}

}  // namespace

SimulatedNetwork simulate_network(NetworkStructure structure, FamilyId family,
                                  const Eigen::VectorXd& alpha1, const Eigen::VectorXd& alpha2,
                                  const EmissionParams& params,
                                  const std::vector<Eigen::MatrixXd>& Y, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  const bool lbm = structure.kind == NetworkKind::LBM;
  const bool sym = structure.kind == NetworkKind::SymmetricSBM;
  const int n1 = structure.n1;
  const int n2 = lbm ? structure.n2 : structure.n1;

  SimulatedNetwork out;
  out.labels1 = draw_labels(n1, alpha1, rng);
  if (lbm) out.labels2 = draw_labels(n2, alpha2, rng);
  const std::vector<int>& lab2 = lbm ? out.labels2 : out.labels1;

  int p = params.block.size() ? 1 : static_cast<int>(params.block_vec.size());
  if (family == FamilyId::BernoulliMultiplex) {
    p = 0;
    while ((1 << p) < static_cast<int>(params.block_vec.size())) ++p;
  }
  std::vector<Eigen::MatrixXd> X(p, Eigen::MatrixXd::Zero(n1, n2));
  Eigen::VectorXd y(Y.size());

  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      if (!lbm && i == j) continue;
      if (sym && j < i) continue;
      for (size_t k = 0; k < Y.size(); ++k) y(k) = Y[k](i, j);
      Eigen::VectorXd v = sample_dyad(family, params, out.labels1[i], lab2[j], y, rng);
      for (int k = 0; k < p; ++k) {
        X[k](i, j) = v(k);
        if (sym) X[k](j, i) = v(k);
      }
    }
  }
  out.data = make_network(structure, std::move(X), Y, family);
  return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  int n = static_cast<int>(a.size());
  int ka = *std::max_element(a.begin(), a.end()) + 1;
  int kb = *std::max_element(b.begin(), b.end()) + 1;
  Eigen::MatrixXd ct = Eigen::MatrixXd::Zero(ka, kb);
  for (int i = 0; i < n; ++i) ct(a[i], b[i]) += 1.0;
  auto comb2 = [](double m) { return m * (m - 1) / 2.0; };
  double sum_ij = 0.0;
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j) sum_ij += comb2(ct(i, j));
  double sum_a = 0.0, sum_b = 0.0;
  for (int i = 0; i < ka; ++i) sum_a += comb2(ct.row(i).sum());
  for (int j = 0; j < kb; ++j) sum_b += comb2(ct.col(j).sum());
  double total = comb2(n);
  double expected = sum_a * sum_b / total;
  double maxi = (sum_a + sum_b) / 2.0;
  if (maxi == expected) return 1.0;
  return (sum_ij - expected) / (maxi - expected);
}

// Strong block contrast so the recovered Q is informative.
EmissionParams default_planted_params(FamilyId family, int Q, int L, int c) {
  EmissionParams p;
  p.family = family;
  auto blocky = [&](double in, double out) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Constant(Q, L, out);
    b.diagonal().setConstant(in);
    return b;
  };
  switch (family) {
    case FamilyId::Bernoulli:
      p.block = blocky(0.8, 0.2);
      break;
    case FamilyId::BernoulliMultiplex: {
      Eigen::MatrixXd c0 = blocky(0.8, 0.2);
      Eigen::MatrixXd c1 = blocky(0.7, 0.3);
      p.block_vec.resize(4);
      for (int x = 0; x < 4; ++x) {
        Eigen::MatrixXd pr(Q, L);
        for (int q = 0; q < Q; ++q)
          for (int l = 0; l < L; ++l) {
            double a = (x & 1) ? c0(q, l) : 1 - c0(q, l);
            double b = (x & 2) ? c1(q, l) : 1 - c1(q, l);
            pr(q, l) = a * b;
          }
        p.block_vec[x] = pr;
      }
      break;
    }
    case FamilyId::BernoulliCovariates:
    case FamilyId::BernoulliCovariatesFast:
      p.block = blocky(1.5, -1.5);
      p.beta = Eigen::VectorXd::Constant(c, 0.5);
      break;
    case FamilyId::Gaussian:
      p.block = blocky(3.0, 0.0);
      p.sigma2 = 1.0;
      break;
    case FamilyId::GaussianMultivariateIndependentHomoscedastic:
    case FamilyId::GaussianMultivariateIndependent:
    case FamilyId::GaussianMultivariate: {
      p.block_vec = {blocky(3.0, 0.0), blocky(0.0, 2.0)};
      p.sigma2 = 1.0;
      p.sigma_diag = Eigen::VectorXd::Constant(2, 1.0);
      p.sigma_full = Eigen::MatrixXd::Identity(2, 2);
      break;
    }
    case FamilyId::GaussianCovariates:
      p.block = blocky(3.0, 0.0);
      p.beta = Eigen::VectorXd::Constant(c, 1.0);
      p.sigma2 = 1.0;
      break;
    case FamilyId::Poisson:
      p.block = blocky(8.0, 2.0);
      break;
    case FamilyId::PoissonCovariates:
      p.block = blocky(8.0, 2.0);
      p.beta = Eigen::VectorXd::Constant(c, 0.3);
      break;
  }
  return p;
}

std::vector<BenchRow> benchmark_suite(const std::vector<BenchCondition>& conditions,
                                      FamilyId family, int repeats, std::uint64_t seed,
                                      int jobs) {
  std::vector<BenchRow> report;
  int c = family_uses_covariates(family) ? 1 : 0;
  for (const auto& cond : conditions) {
    std::vector<double> times;
    int recovered = 0;
    for (int rep = 0; rep < repeats; ++rep) {
      std::uint64_t rs = derive_seed(seed, cond.groups, cond.nodes, rep);
      NetworkStructure st = NetworkStructure::directed(cond.nodes);
      Eigen::VectorXd alpha = Eigen::VectorXd::Constant(cond.groups, 1.0 / cond.groups);
      std::vector<Eigen::MatrixXd> Y;
      if (c > 0) {
        std::mt19937_64 yr(splitmix64(rs ^ 0x5eedULL));
        std::normal_distribution<double> norm(0.0, 1.0);
        Eigen::MatrixXd y(cond.nodes, cond.nodes);
        for (int i = 0; i < cond.nodes; ++i)
          for (int j = 0; j < cond.nodes; ++j) y(i, j) = norm(yr);
        Y.push_back(y);
      }
      SimulatedNetwork sim = simulate_network(st, family, alpha, Eigen::VectorXd(),
                                              default_planted_params(family, cond.groups, cond.groups, c), Y, rs);
      ExploreConfig cfg;
      cfg.seed = rs;
      cfg.jobs = jobs;
      cfg.forced_range = true;
      cfg.q_min = 1;
      cfg.q_max = 2 * cond.groups;
      std::clock_t t0 = std::clock();
      ExplorationState st2 = explore(sim.data, family, cfg);
      times.push_back(static_cast<double>(std::clock() - t0) / CLOCKS_PER_SEC);
      recovered = st2.selected().Q;
    }
    std::sort(times.begin(), times.end());
    BenchRow row;
    row.condition = cond;
    row.median_cpu_seconds = times[times.size() / 2];
    row.recovered_q = recovered;
    report.push_back(row);
  }
  return report;
}

}  // namespace blockinfer
