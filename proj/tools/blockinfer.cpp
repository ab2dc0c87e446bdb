// Command-line front end: fit / simulate / bench / gapprox-dump.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "blockinfer/result_io.hpp"
#include "blockinfer/simulate.hpp"

namespace fs = std::filesystem;
using namespace blockinfer;

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

NetworkKind parse_structure(const std::string& s) {
  if (s == "directed") return NetworkKind::DirectedSBM;
  if (s == "symmetric") return NetworkKind::SymmetricSBM;
  if (s == "lbm") return NetworkKind::LBM;
  throw DomainViolation("--structure must be directed, symmetric or lbm");
}

int jobs_default() {
  if (const char* env = std::getenv("BLOCKINFER_JOBS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 0;  // all cpus
}

struct FitArgs {
  std::string model;
  std::string structure = "directed";
  std::string adjacency;
  std::string covariates;
  std::string output_dir = ".";
  std::string no_explore;
  ExploreConfig cfg;
};

int run_fit(const FitArgs& a) {
  FamilyId family = parse_family(a.model);
  NetworkStructure st;
  st.kind = parse_structure(a.structure);

  ExploreConfig cfg = a.cfg;
  if (cfg.jobs == 0) cfg.jobs = jobs_default();
  if (!a.no_explore.empty()) {
    int lo = 0, hi = 0;
    if (std::sscanf(a.no_explore.c_str(), "%d:%d", &lo, &hi) != 2 || lo < 1 || hi < lo)
      throw DomainViolation("--no-explore expects Qmin:Qmax");
    cfg.forced_range = true;
    cfg.q_min = lo;
    cfg.q_max = hi;
  }

  NetworkData data =
      load_network(split_commas(a.adjacency), split_commas(a.covariates), st, family);

  auto wall0 = std::chrono::steady_clock::now();
  std::clock_t cpu0 = std::clock();
  ExplorationState state = explore(data, family, cfg);
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  double cpu = static_cast<double>(std::clock() - cpu0) / CLOCKS_PER_SEC;

  nlohmann::json j = result_to_json(state, data, family, cfg);
  j["timing"] = {{"wall_seconds", wall}, {"cpu_seconds", cpu}};

  fs::create_directories(a.output_dir);
  std::ofstream out(fs::path(a.output_dir) / "result.json");
  out << j.dump(2) << "\n";
  const FitResult& sel = state.selected();
  write_labels_csv((fs::path(a.output_dir) / "labels.csv").string(),
                   hard_labels(sel.membership.tau1));
  if (st.kind == NetworkKind::LBM)
    write_labels_csv((fs::path(a.output_dir) / "labels2.csv").string(),
                     hard_labels(sel.membership.tau2));

  std::cout << "selected Q=" << sel.Q;
  if (st.kind == NetworkKind::LBM) std::cout << " L=" << sel.L;
  std::cout << " ICL=" << sel.ICL << " J=" << sel.J << "\n";
  return 0;
}

struct SimArgs {
  std::string model;
  std::string structure = "directed";
  int n1 = 100, n2 = 100;
  int q1 = 2, q2 = 2;
  std::uint64_t seed = 0;
  std::string output_dir = ".";
};

int run_simulate(const SimArgs& a) {
  FamilyId family = parse_family(a.model);
  NetworkStructure st;
  st.kind = parse_structure(a.structure);
  st.n1 = a.n1;
  st.n2 = st.kind == NetworkKind::LBM ? a.n2 : a.n1;
  int L = st.kind == NetworkKind::LBM ? a.q2 : a.q1;

  int c = family_uses_covariates(family) ? 1 : 0;
  EmissionParams params = default_planted_params(family, a.q1, L, c);
  std::vector<Eigen::MatrixXd> Y;
  if (c > 0) {
    std::mt19937_64 rng(splitmix64(derive_seed(a.seed, 77)));
    std::normal_distribution<double> norm(0.0, 1.0);
    Eigen::MatrixXd y(st.n1, st.n2);
    for (int i = 0; i < st.n1; ++i)
      for (int j = 0; j < st.n2; ++j) y(i, j) = norm(rng);
    if (st.kind == NetworkKind::SymmetricSBM) y = ((y + y.transpose()) / 2.0).eval();
    Y.push_back(y);
  }
  Eigen::VectorXd a1 = Eigen::VectorXd::Constant(a.q1, 1.0 / a.q1);
  Eigen::VectorXd a2 = Eigen::VectorXd::Constant(L, 1.0 / L);
  SimulatedNetwork sim = simulate_network(st, family, a1, a2, params, Y, a.seed);

  fs::create_directories(a.output_dir);
  for (int k = 0; k < sim.data.p(); ++k) {
    std::string name = sim.data.p() == 1 ? "adjacency.csv" : "adjacency" + std::to_string(k) + ".csv";
    write_matrix((fs::path(a.output_dir) / name).string(), sim.data.X[k]);
  }
  for (int k = 0; k < sim.data.c(); ++k)
    write_matrix((fs::path(a.output_dir) / ("covariate" + std::to_string(k) + ".csv")).string(),
                 sim.data.Y[k]);
  write_labels_csv((fs::path(a.output_dir) / "labels.csv").string(), sim.labels1);
  if (st.kind == NetworkKind::LBM)
    write_labels_csv((fs::path(a.output_dir) / "labels2.csv").string(), sim.labels2);
  std::cout << "wrote simulated network to " << a.output_dir << "\n";
  return 0;
}

struct BenchArgs {
  std::string model = "bernoulli";
  std::string conditions = "5x100,5x200,10x100,10x200";
  int repeats = 5;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string output = "bench.csv";
};

int run_bench(const BenchArgs& a) {
  FamilyId family = parse_family(a.model);
  std::vector<BenchCondition> conds;
  for (const auto& tok : split_commas(a.conditions)) {
    BenchCondition c;
    if (std::sscanf(tok.c_str(), "%dx%d", &c.groups, &c.nodes) != 2)
      throw DomainViolation("--conditions expects GROUPSxNODES,...");
    conds.push_back(c);
  }
  int jobs = a.jobs ? a.jobs : jobs_default();
  auto report = benchmark_suite(conds, family, a.repeats, a.seed, jobs);
  std::ofstream out(a.output);
  out << "groups,nodes,median_cpu_seconds,recovered_q\n";
  for (const auto& row : report) {
    out << row.condition.groups << "," << row.condition.nodes << ","
        << row.median_cpu_seconds << "," << row.recovered_q << "\n";
    std::cout << row.condition.groups << " groups, " << row.condition.nodes
              << " nodes: median cpu " << row.median_cpu_seconds << " s, recovered Q "
              << row.recovered_q << "\n";
  }
  return 0;
}

int run_gapprox_dump() {
  GApprox ga = fit_g_approx();
  std::printf("power,coefficient\n");
  for (int k = 0; k < GApprox::kNumCoeffs; ++k) std::printf("%d,%.17g\n", 2 * k, ga.a[k]);
  std::printf("eps_g,%.17g\n", ga.eps_g);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block model estimation for valued networks (SBM / LBM)"};
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "estimate a block model on a network");
  fit_cmd->add_option("--model", fa.model, "emission family")->required();
  fit_cmd->add_option("--structure", fa.structure, "directed | symmetric | lbm");
  fit_cmd->add_option("--adjacency", fa.adjacency, "adjacency file(s), comma separated")
      ->required();
  fit_cmd->add_option("--covariates", fa.covariates, "covariate file(s), comma separated");
  fit_cmd->add_option("--output-dir", fa.output_dir, "where result.json and labels.csv go");
  fit_cmd->add_option("--seed", fa.cfg.seed, "random seed");
  fit_cmd->add_option("--jobs", fa.cfg.jobs, "parallel restarts (0 = all cpus)");
  fit_cmd->add_option("--q-start", fa.cfg.q_start, "initial group number range");
  fit_cmd->add_option("--q2-start", fa.cfg.q2_start, "initial column-group range (lbm)");
  fit_cmd->add_option("--q-max-factor", fa.cfg.exploration_factor,
                      "exploration extent past the ICL maximum");
  fit_cmd->add_option("--reinit-budget", fa.cfg.reinit_budget_constant,
                      "kept reinitializations per group");
  fit_cmd->add_option("--em-tol", fa.cfg.fit.em_tol, "EM relative tolerance");
  fit_cmd->add_option("--max-em-iter", fa.cfg.fit.max_em_iter, "EM iteration cap");
  fit_cmd->add_option("--fp-tol", fa.cfg.fit.fp_tol, "fixed-point tolerance");
  fit_cmd->add_option("--fp-max-iter", fa.cfg.fit.fp_max_iter, "fixed-point iteration cap");
  fit_cmd->add_option("--no-explore", fa.no_explore,
                      "Qmin:Qmax forced range, disables automatic extension");

  SimArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "draw a synthetic network");
  sim_cmd->add_option("--model", sa.model, "emission family")->required();
  sim_cmd->add_option("--structure", sa.structure, "directed | symmetric | lbm");
  sim_cmd->add_option("--n", sa.n1, "nodes (rows for lbm)");
  sim_cmd->add_option("--n2", sa.n2, "column nodes (lbm)");
  sim_cmd->add_option("--q", sa.q1, "planted groups (rows for lbm)");
  sim_cmd->add_option("--q2", sa.q2, "planted column groups (lbm)");
  sim_cmd->add_option("--seed", sa.seed, "random seed");
  sim_cmd->add_option("--output-dir", sa.output_dir, "output directory");

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "timing harness on simulated networks");
  bench_cmd->add_option("--model", ba.model, "emission family");
  bench_cmd->add_option("--conditions", ba.conditions, "GROUPSxNODES list");
  bench_cmd->add_option("--repeats", ba.repeats, "repeats per condition (median kept)");
  bench_cmd->add_option("--seed", ba.seed, "random seed");
  bench_cmd->add_option("--jobs", ba.jobs, "parallel restarts");
  bench_cmd->add_option("--output", ba.output, "csv report path");

  auto* gap_cmd = app.add_subcommand("gapprox-dump", "dump logistic polynomial coefficients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fa);
    if (sim_cmd->parsed()) return run_simulate(sa);
    if (bench_cmd->parsed()) return run_bench(ba);
    if (gap_cmd->parsed()) return run_gapprox_dump();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
