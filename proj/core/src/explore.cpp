#include "blockinfer/explore.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <random>
#include <thread>

namespace blockinfer {

namespace {

void run_tasks(std::vector<std::function<void()>>& tasks, int jobs) {
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs <= 1 || tasks.size() <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      tasks[i]();
    }
  };
  std::vector<std::thread> pool;
  int nthreads = std::min<int>(jobs, static_cast<int>(tasks.size()));
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace

const FitResult& ExplorationState::selected() const {
  const FitResult* pick = nullptr;
  for (const auto& [key, fr] : best) {
    if (!pick || fr.ICL > pick->ICL ||
        (fr.ICL == pick->ICL && key.first + key.second < pick->Q + pick->L))
      pick = &fr;
  }
  if (!pick) throw Error("Internal", "exploration produced no fits");
  return *pick;
}

double compute_icl(const FitResult& fit, const NetworkData& data, FamilyId family) {
  bool sym = data.structure.kind == NetworkKind::SymmetricSBM;
  long pf = free_parameter_count(family, fit.Q, fit.L, data.p(), data.c(), sym);
  double icl = fit.J - 0.5 * pf * std::log(static_cast<double>(dyad_count(data)));
  if (data.structure.kind == NetworkKind::LBM) {
    icl -= 0.5 * (fit.Q - 1) * std::log(static_cast<double>(data.n1()));
    icl -= 0.5 * (fit.L - 1) * std::log(static_cast<double>(data.n2()));
  } else {
    icl -= 0.5 * (fit.Q - 1) * std::log(static_cast<double>(data.n1()));
  }
  return icl;
}

std::vector<Membership> merge_candidates(const FitResult& fit, int node_type) {
  const Membership& m = fit.membership;
  const Eigen::MatrixXd& tau = node_type == 2 ? m.tau2 : m.tau1;
  int K = static_cast<int>(tau.cols());
  std::vector<Membership> out;
  if (K < 2) return out;
  for (int a = 0; a < K; ++a)
    for (int b = a + 1; b < K; ++b) {
      Eigen::MatrixXd t(tau.rows(), K - 1);
      int col = 0;
      for (int q = 0; q < K; ++q) {
        if (q == b) continue;
        t.col(col) = q == a ? (tau.col(a) + tau.col(b)).eval() : tau.col(q);
        ++col;
      }
      Membership cand = m;
      (node_type == 2 ? cand.tau2 : cand.tau1) = t;
      floor_and_normalize_rows(node_type == 2 ? cand.tau2 : cand.tau1);
      m_step_alpha(cand);
      out.push_back(std::move(cand));
    }
  return out;
}

std::vector<Membership> split_candidates(const FitResult& fit, const NetworkData& data,
                                         const Eigen::MatrixXd& embedding, std::uint64_t seed,
                                         int node_type) {
  const Membership& m = fit.membership;
  const Eigen::MatrixXd& tau = node_type == 2 ? m.tau2 : m.tau1;
  const int K = static_cast<int>(tau.cols());
  const int n = static_cast<int>(tau.rows());
  std::vector<int> labels = hard_labels(tau);
  std::vector<Membership> out;

  auto make_candidate = [&](const std::vector<int>& new_labels) {
    Membership cand = m;
    Eigen::MatrixXd t = labels_to_tau(new_labels, K + 1);
    (node_type == 2 ? cand.tau2 : cand.tau1) = t;
    m_step_alpha(cand);
    out.push_back(std::move(cand));
  };

  for (int q = 0; q < K; ++q) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i)
      if (labels[i] == q) members.push_back(i);
    if (members.size() < 2) continue;

    // bisect on the cached spectral embedding rows
    Eigen::MatrixXd pts(members.size(), embedding.cols());
    for (size_t r = 0; r < members.size(); ++r) pts.row(r) = embedding.row(members[r]);
    std::vector<int> half = kmeans(pts, 2, derive_seed(seed, q, 1));
    std::vector<int> lab1 = labels;
    for (size_t r = 0; r < members.size(); ++r)
      if (half[r] == 1) lab1[members[r]] = K;
    if (std::count(lab1.begin(), lab1.end(), K) > 0) make_candidate(lab1);

    // random bisection variant
    std::mt19937_64 rng(derive_seed(seed, q, 2));
    std::vector<int> lab2 = labels;
    int moved = 0;
    for (int i : members)
      if (rng() & 1) {
        lab2[i] = K;
        ++moved;
      }
    if (moved == 0) lab2[members[0]] = K;
    if (moved == static_cast<int>(members.size())) lab2[members[0]] = q;
    make_candidate(lab2);
  }
  return out;
}

std::vector<Membership> filter_candidates(std::vector<Membership> candidates,
                                          const NetworkData& data, FamilyId family, int budget,
                                          const FitConfig& cfg) {
  if (static_cast<int>(candidates.size()) <= budget) return candidates;
  struct Scored {
    double j;
    size_t idx;
  };
  std::vector<Scored> scored;
  FitConfig one = cfg;
  one.fp_max_iter = 1;  // single refresh, no full EM
  for (size_t i = 0; i < candidates.size(); ++i) {
    Membership& cand = candidates[i];
    EmissionParams params = m_step(family, data, cand);
    cand = e_step(data, params, cand, one);
    scored.push_back({compute_J(data, cand, params), i});
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.j > b.j; });
  std::vector<Membership> out;
  for (int i = 0; i < budget && i < static_cast<int>(scored.size()); ++i)
    out.push_back(std::move(candidates[scored[i].idx]));
  return out;
}

namespace {

struct Candidate {
  std::pair<int, int> key;
  Membership init;
};

FitResult fit_with_icl(const NetworkData& data, FamilyId family, const Membership& init,
                       const ExploreConfig& cfg) {
  FitResult fr = fit(data, family, init, cfg.fit);
  fr.ICL = compute_icl(fr, data, family);
  return fr;
}

}  // namespace

ExplorationState explore(const NetworkData& data, FamilyId family, const ExploreConfig& cfg) {
  const bool lbm = data.structure.kind == NetworkKind::LBM;
  ExplorationState state;

  auto run_batch = [&](std::vector<Candidate>& cands) {
    std::vector<FitResult> results(cands.size());
    std::vector<std::function<void()>> tasks;
    tasks.reserve(cands.size());
    for (size_t i = 0; i < cands.size(); ++i)
      tasks.push_back([&, i] { results[i] = fit_with_icl(data, family, cands[i].init, cfg); });
    run_tasks(tasks, cfg.jobs);
    bool improved = false;
    for (size_t i = 0; i < cands.size(); ++i) {
      auto it = state.best.find(cands[i].key);
      if (it == state.best.end()) {
        state.best.emplace(cands[i].key, std::move(results[i]));
        improved = true;
      } else if (results[i].ICL > it->second.ICL + cfg.icl_improve_tol) {
        it->second = std::move(results[i]);
        improved = true;
      }
    }
    return improved;
  };

  const int q1_lo = cfg.forced_range ? std::max(1, cfg.q_min) : 1;
  auto q1_hi_initial = cfg.forced_range ? cfg.q_max : cfg.q_start;

  // phase 1: spectral starts over the beginning set
  std::vector<Candidate> batch;
  auto spectral_candidate = [&](int q1, int q2) {
    Membership init =
        initial_membership(data, family, q1, q2, derive_seed(cfg.seed, 1000, q1, q2));
    batch.push_back({{q1, q2}, std::move(init)});
  };
  for (int q1 = q1_lo; q1 <= q1_hi_initial; ++q1) {
    if (lbm) {
      int q2_hi = cfg.forced_range ? cfg.q_max : cfg.q2_start;
      for (int q2 = q1_lo; q2 <= q2_hi; ++q2) spectral_candidate(q1, q2);
    } else {
      spectral_candidate(q1, q1);
    }
  }
  run_batch(batch);

  // cached split embeddings, recomputed when the explored range grows
  Eigen::MatrixXd emb1, emb2;
  int emb_k1 = 0, emb_k2 = 0;
  Eigen::MatrixXd residual = residual_graph(data, family);
  auto ensure_embeddings = [&](int k1, int k2) {
    k1 = std::min(k1, data.n1());
    k2 = std::min(k2, data.n2());
    if (lbm) {
      if (k1 > emb_k1) {
        emb1 = spectral_embedding(residual * residual.transpose(), k1);
        emb_k1 = k1;
      }
      if (k2 > emb_k2) {
        emb2 = spectral_embedding(residual.transpose() * residual, k2);
        emb_k2 = k2;
      }
    } else if (k1 > emb_k1) {
      emb1 = spectral_embedding(residual, k1);
      emb_k1 = k1;
    }
  };

  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    state.sweeps = sweep + 1;
    const FitResult& sel = state.selected();
    int hi1, hi2;
    if (cfg.forced_range) {
      hi1 = hi2 = cfg.q_max;
    } else {
      hi1 = std::max(q1_hi_initial,
                     static_cast<int>(std::ceil(cfg.exploration_factor * sel.Q)));
      hi2 = lbm ? std::max(cfg.q2_start,
                           static_cast<int>(std::ceil(cfg.exploration_factor * sel.L)))
                : hi1;
    }
    hi1 = std::min(hi1, data.n1());
    hi2 = std::min(hi2, lbm ? data.n2() : data.n1());
    ensure_embeddings(hi1, hi2);

    // snapshot so candidate provenance is sweep-start state
    std::map<std::pair<int, int>, FitResult> snap = state.best;
    auto have = [&](int a, int b) { return snap.count({a, b}) > 0; };

    bool improved = false;
    batch.clear();
    std::vector<std::pair<std::pair<int, int>, std::vector<Membership>>> pending;
    auto visit = [&](int q1, int q2) {
      std::vector<Membership> cands;
      if (!have(q1, q2))
        cands.push_back(
            initial_membership(data, family, q1, q2, derive_seed(cfg.seed, 1000, q1, q2)));
      std::uint64_t s = derive_seed(cfg.seed, sweep, q1, q2);
      if (have(q1 + 1, q2))
        for (auto& c : merge_candidates(snap.at({q1 + 1, q2}), 1)) cands.push_back(std::move(c));
      if (have(q1 - 1, q2))
        for (auto& c : split_candidates(snap.at({q1 - 1, q2}), data, emb1, s, 1))
          cands.push_back(std::move(c));
      if (lbm) {
        if (have(q1, q2 + 1))
          for (auto& c : merge_candidates(snap.at({q1, q2 + 1}), 2)) cands.push_back(std::move(c));
        if (have(q1, q2 - 1))
          for (auto& c : split_candidates(snap.at({q1, q2 - 1}), data, emb2,
                                          derive_seed(s, 2), 2))
            cands.push_back(std::move(c));
      }
      if (cands.empty()) return;
      int budget = cfg.reinit_budget_constant * std::max(q1, q2);
      pending.push_back({{q1, q2}, filter_candidates(std::move(cands), data, family,
                                                     std::max(1, budget), cfg.fit)});
    };
    for (int q1 = q1_lo; q1 <= hi1; ++q1) {
      if (lbm) {
        for (int q2 = q1_lo; q2 <= hi2; ++q2) visit(q1, q2);
      } else {
        visit(q1, q1);
      }
    }
    for (auto& [key, list] : pending)
      for (auto& init : list) batch.push_back({key, std::move(init)});
    if (run_batch(batch)) improved = true;
    if (!improved) break;
  }
  return state;
}

}  // namespace blockinfer
