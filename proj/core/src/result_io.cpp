#include "blockinfer/result_io.hpp"

#include <fstream>

namespace blockinfer {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (long i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  size_t r = j.size();
  size_t c = r ? j[0].size() : 0;
  Eigen::MatrixXd m(r, c);
  for (size_t i = 0; i < r; ++i)
    for (size_t k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

std::string kind_name(NetworkKind k) {
  switch (k) {
    case NetworkKind::DirectedSBM:
      return "directed";
    case NetworkKind::SymmetricSBM:
      return "symmetric";
    case NetworkKind::LBM:
      return "lbm";
  }
  return "?";
}

NetworkKind parse_kind(const std::string& s) {
  if (s == "directed") return NetworkKind::DirectedSBM;
  if (s == "symmetric") return NetworkKind::SymmetricSBM;
  if (s == "lbm") return NetworkKind::LBM;
  throw ParseError("unknown structure '" + s + "'");
}

}  // namespace

json params_to_json(const EmissionParams& params) {
  json j;
  j["family"] = family_name(params.family);
  if (params.block.size()) j["block"] = matrix_to_json(params.block);
  if (!params.block_vec.empty()) {
    json bv = json::array();
    for (const auto& m : params.block_vec) bv.push_back(matrix_to_json(m));
    j["block_vec"] = std::move(bv);
  }
  if (params.beta.size()) j["beta"] = vector_to_json(params.beta);
  j["sigma2"] = params.sigma2;
  if (params.sigma_diag.size()) j["sigma_diag"] = vector_to_json(params.sigma_diag);
  if (params.sigma_full.size()) j["sigma_full"] = matrix_to_json(params.sigma_full);
  return j;
}

EmissionParams params_from_json(const json& j) {
  EmissionParams p;
  p.family = parse_family(j.at("family").get<std::string>());
  if (j.contains("block")) p.block = matrix_from_json(j["block"]);
  if (j.contains("block_vec"))
    for (const auto& m : j["block_vec"]) p.block_vec.push_back(matrix_from_json(m));
  if (j.contains("beta")) p.beta = vector_from_json(j["beta"]);
  if (j.contains("sigma2")) p.sigma2 = j["sigma2"].get<double>();
  if (j.contains("sigma_diag")) p.sigma_diag = vector_from_json(j["sigma_diag"]);
  if (j.contains("sigma_full")) p.sigma_full = matrix_from_json(j["sigma_full"]);
  return p;
}

json result_to_json(const ExplorationState& state, const NetworkData& data, FamilyId family,
                    const ExploreConfig& cfg) {
  json j;
  j["schema_version"] = 1;
  j["family"] = family_name(family);
  j["structure"] = kind_name(data.structure.kind);
  j["n1"] = data.n1();
  j["n2"] = data.n2();
  j["seed"] = cfg.seed;
  j["config"] = {{"q_start", cfg.q_start},
                 {"q2_start", cfg.q2_start},
                 {"exploration_factor", cfg.exploration_factor},
                 {"reinit_budget", cfg.reinit_budget_constant},
                 {"icl_improve_tol", cfg.icl_improve_tol},
                 {"jobs", cfg.jobs},
                 {"forced_range", cfg.forced_range},
                 {"q_min", cfg.q_min},
                 {"q_max", cfg.q_max},
                 {"em_tol", cfg.fit.em_tol},
                 {"max_em_iter", cfg.fit.max_em_iter},
                 {"fp_tol", cfg.fit.fp_tol},
                 {"fp_max_iter", cfg.fit.fp_max_iter}};

  json table = json::array();
  for (const auto& [key, fr] : state.best)
    table.push_back({{"Q", key.first},
                     {"L", key.second},
                     {"J", fr.J},
                     {"ICL", fr.ICL},
                     {"iterations", fr.iterations},
                     {"converged", fr.converged}});
  j["table"] = std::move(table);

  const FitResult& sel = state.selected();
  j["selected"] = {{"Q", sel.Q}, {"L", sel.L}, {"J", sel.J}, {"ICL", sel.ICL}};
  j["alpha"] = vector_to_json(sel.membership.alpha1);
  j["tau"] = matrix_to_json(sel.membership.tau1);
  json lab = json::array();
  for (int v : hard_labels(sel.membership.tau1)) lab.push_back(v);
  j["labels"] = std::move(lab);
  if (data.structure.kind == NetworkKind::LBM) {
    j["alpha2"] = vector_to_json(sel.membership.alpha2);
    j["tau2"] = matrix_to_json(sel.membership.tau2);
    json lab2 = json::array();
    for (int v : hard_labels(sel.membership.tau2)) lab2.push_back(v);
    j["labels2"] = std::move(lab2);
  }
  j["params"] = params_to_json(sel.params);
  return j;
}

ReloadedResult reload_result(const json& j) {
  ReloadedResult r;
  r.params = params_from_json(j.at("params"));
  r.membership.kind = parse_kind(j.at("structure").get<std::string>());
  r.membership.tau1 = matrix_from_json(j.at("tau"));
  r.membership.alpha1 = vector_from_json(j.at("alpha"));
  if (r.membership.kind == NetworkKind::LBM) {
    r.membership.tau2 = matrix_from_json(j.at("tau2"));
    r.membership.alpha2 = vector_from_json(j.at("alpha2"));
  }
  r.J = j.at("selected").at("J").get<double>();
  r.ICL = j.at("selected").at("ICL").get<double>();
  return r;
}

void write_labels_csv(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  for (int v : labels) out << v << "\n";
}

}  // namespace blockinfer
