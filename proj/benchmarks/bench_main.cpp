#include <benchmark/benchmark.h>

#include <blockinfer/families.hpp>
#include <blockinfer/simulate.hpp>
#include <blockinfer/spectral.hpp>
#include <blockinfer/vem.hpp>

using namespace blockinfer;

namespace {

SimulatedNetwork make_net(FamilyId family, int n, int Q, std::uint64_t seed = 7) {
  const int c = family_uses_covariates(family) ? 1 : 0;
  auto params = default_planted_params(family, Q, Q, c);
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(Q, 1.0 / Q);
  std::vector<Eigen::MatrixXd> Y;
  if (c > 0) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd y(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) y(i, j) = normal(rng);
    Y.push_back(y);
  }
  return simulate_network(NetworkStructure::directed(n), family, alpha, alpha, params, Y, seed);
}

void BM_EStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int Q = 3;
  auto net = make_net(FamilyId::Bernoulli, n, Q);
  auto init = initial_membership(net.data, FamilyId::Bernoulli, Q, Q, 11);
  auto params = m_step(FamilyId::Bernoulli, net.data, init);
  FitConfig cfg;
  for (auto _ : state) {
    Membership m = e_step(net.data, params, init, cfg);
    benchmark::DoNotOptimize(m.tau1);
  }
}
BENCHMARK(BM_EStep)->Arg(100)->Arg(300);

void BM_LogDensityBernoulli(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto net = make_net(FamilyId::Bernoulli, n, 3);
  auto init = initial_membership(net.data, FamilyId::Bernoulli, 3, 3, 11);
  auto params = m_step(FamilyId::Bernoulli, net.data, init);
  for (auto _ : state) {
    auto t = log_density_tensor(FamilyId::Bernoulli, params, net.data, 3, 3);
    benchmark::DoNotOptimize(t);
  }
}
BENCHMARK(BM_LogDensityBernoulli)->Arg(100)->Arg(300);

void BM_FastLogisticObjective(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto family = FamilyId::BernoulliCovariatesFast;
  auto net = make_net(family, n, 2);
  auto init = initial_membership(net.data, family, 2, 2, 11);
  EmissionParams params;
  params.family = family;
  params.block = Eigen::MatrixXd::Zero(2, 2);
  params.block << 0.3, -0.2, -0.2, 0.4;
  params.beta = Eigen::VectorXd::Constant(1, 0.1);
  for (auto _ : state) {
    auto v = fast_logistic_objective(params, net.data, init);
    benchmark::DoNotOptimize(v.value);
  }
}
BENCHMARK(BM_FastLogisticObjective)->Arg(50)->Arg(100);

void BM_SpectralInit(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto net = make_net(FamilyId::Poisson, n, 3);
  for (auto _ : state) {
    auto m = initial_membership(net.data, FamilyId::Poisson, 3, 3, 11);
    benchmark::DoNotOptimize(m.tau1);
  }
}
BENCHMARK(BM_SpectralInit)->Arg(100)->Arg(300);

}  // namespace

BENCHMARK_MAIN();
