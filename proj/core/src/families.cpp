#include "blockinfer/families.hpp"

#include <cmath>
#include <map>

#include "blockinfer/optim.hpp"

namespace blockinfer {

namespace {

const std::map<std::string, FamilyId> kFamilyNames = {
    {"bernoulli", FamilyId::Bernoulli},
    {"bernoulli_multiplex", FamilyId::BernoulliMultiplex},
    {"bernoulli_covariates", FamilyId::BernoulliCovariates},
    {"bernoulli_covariates_fast", FamilyId::BernoulliCovariatesFast},
    {"gaussian", FamilyId::Gaussian},
    {"gaussian_multivariate_independent_homoscedastic",
     FamilyId::GaussianMultivariateIndependentHomoscedastic},
    {"gaussian_multivariate_independent", FamilyId::GaussianMultivariateIndependent},
    {"gaussian_multivariate", FamilyId::GaussianMultivariate},
    {"gaussian_covariates", FamilyId::GaussianCovariates},
    {"poisson", FamilyId::Poisson},
    {"poisson_covariates", FamilyId::PoissonCovariates},
};

double clamp_prob(double p) { return std::min(1.0 - kProbClamp, std::max(kProbClamp, p)); }
double ilogit(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// factor turning full i!=j sums into the model's dyad sum
double dyad_scale(const NetworkData& data) {
  return data.structure.kind == NetworkKind::SymmetricSBM ? 0.5 : 1.0;
}

void zero_diag_if_sbm(const NetworkData& data, Eigen::MatrixXd& m) {
  if (data.structure.is_sbm()) m.diagonal().setZero();
}

// beta . Y_ij as a dense matrix
Eigen::MatrixXd predictor_matrix(const NetworkData& data, const Eigen::VectorXd& beta) {
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(data.n1(), data.n2());
  for (int k = 0; k < data.c(); ++k) u += beta(k) * data.Y[k];
  return u;
}

Eigen::MatrixXi pattern_index(const NetworkData& data) {
  Eigen::MatrixXi idx = Eigen::MatrixXi::Zero(data.n1(), data.n2());
  for (int k = 0; k < data.p(); ++k)
    idx += (data.X[k].array() != 0.0).cast<int>().matrix() * (1 << k);
  return idx;
}

}  // namespace

std::string family_name(FamilyId id) {
  for (const auto& [name, fid] : kFamilyNames)
    if (fid == id) return name;
  return "?";
}

FamilyId parse_family(const std::string& name) {
  auto it = kFamilyNames.find(name);
  if (it == kFamilyNames.end()) throw DomainViolation("unknown model family '" + name + "'");
  return it->second;
}

bool family_uses_covariates(FamilyId id) {
  switch (id) {
    case FamilyId::BernoulliCovariates:
    case FamilyId::BernoulliCovariatesFast:
    case FamilyId::GaussianCovariates:
    case FamilyId::PoissonCovariates:
      return true;
    default:
      return false;
  }
}

Eigen::MatrixXd block_cross(const NetworkData& data, const Membership& m,
                            const Eigen::MatrixXd& M) {
  if (data.structure.kind == NetworkKind::LBM)
    return m.tau1.transpose() * M * m.tau2;
  if (M.diagonal().isZero(0.0)) return m.tau1.transpose() * M * m.tau1;
  Eigen::MatrixXd M0 = M;
  M0.diagonal().setZero();
  return m.tau1.transpose() * M0 * m.tau1;
}

Eigen::MatrixXd block_weights(const NetworkData& data, const Membership& m) {
  if (data.structure.kind == NetworkKind::LBM) {
    Eigen::VectorXd s1 = m.tau1.colwise().sum();
    Eigen::VectorXd s2 = m.tau2.colwise().sum();
    return s1 * s2.transpose();
  }
  Eigen::VectorXd s = m.tau1.colwise().sum();
  return s * s.transpose() - m.tau1.transpose() * m.tau1;
}

// ---------------------------------------------------------------------------
// log densities
// ---------------------------------------------------------------------------

LogDensityTensor log_density_tensor(FamilyId family, const EmissionParams& params,
                                    const NetworkData& data, int Q, int L) {
  const int n1 = data.n1(), n2 = data.n2();
  LogDensityTensor T(static_cast<size_t>(Q) * L);
  auto at = [&](int q, int l) -> Eigen::MatrixXd& { return T[q * L + l]; };

  switch (family) {
    case FamilyId::Bernoulli: {
      const Eigen::MatrixXd& X = data.X[0];
      for (int q = 0; q < Q; ++q)
        for (int l = 0; l < L; ++l) {
          double pi = clamp_prob(params.block(q, l));
          at(q, l) = X.array() * std::log(pi) + (1.0 - X.array()) * std::log1p(-pi);
        }
      break;
    }
    case FamilyId::BernoulliMultiplex: {
      Eigen::MatrixXi idx = pattern_index(data);
      int npat = 1 << data.p();
      for (int q = 0; q < Q; ++q)
        for (int l = 0; l < L; ++l) {
          Eigen::VectorXd logp(npat);
          for (int x = 0; x < npat; ++x) logp(x) = std::log(clamp_prob(params.block_vec[x](q, l)));
          Eigen::MatrixXd& m = at(q, l);
          m.resize(n1, n2);
          for (int j = 0; j < n2; ++j)
            for (int i = 0; i < n1; ++i) m(i, j) = logp(idx(i, j));
        }
      break;
    }
    case FamilyId::BernoulliCovariates: {
      const Eigen::MatrixXd& X = data.X[0];
      Eigen::MatrixXd U = predictor_matrix(data, params.beta);
      for (int q = 0; q < Q; ++q)
        for (int l = 0; l < L; ++l) {
          Eigen::MatrixXd eta = U.array() + params.block(q, l);
          at(q, l) = X.cwiseProduct(eta) - eta.unaryExpr([](double e) { return softplus(e); });
        }
      break;
    }
    case FamilyId::BernoulliCovariatesFast: {
      const Eigen::MatrixXd& X = data.X[0];
      Eigen::MatrixXd U = predictor_matrix(data, params.beta);
      GApprox ga = fit_g_approx();
      for (int q = 0; q < Q; ++q)
        for (int l = 0; l < L; ++l) {
          Eigen::MatrixXd eta = U.array() + params.block(q, l);
          at(q, l) = (X.array() - 0.5) * eta.array() +
                     eta.unaryExpr([&](double e) { return ga.eval(e); }).array();
        }
      break;
    }
    case FamilyId::Gaussian: {
      const Eigen::MatrixXd& X = data.X[0];
      double s2 = std::max(params.sigma2, kSigma2Floor);
      double cst = -0.5 * std::log(2 * M_PI * s2);
      for (int q = 0; q < Q; ++q)
        for (int l = 0; l < L; ++l)
          at(q, l) = cst - (X.array() - params.block(q, l)).square() / (2 * s2);
      break;
    }
    case FamilyId::GaussianMultivariateIndependentHomoscedastic:
    case FamilyId::GaussianMultivariateIndependent: {
      int p = data.p();
      for (int q = 0; q < Q; ++q)
        for (int l = 0; l < L; ++l) {
          Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n1, n2);
          for (int k = 0; k < p; ++k) {
            double s2 = family == FamilyId::GaussianMultivariateIndependent
                            ? std::max(params.sigma_diag(k), kSigma2Floor)
                            : std::max(params.sigma2, kSigma2Floor);
            acc.array() += -0.5 * std::log(2 * M_PI * s2) -
                           (data.X[k].array() - params.block_vec[k](q, l)).square() / (2 * s2);
          }
          at(q, l) = acc;
        }
      break;
    }
    case FamilyId::GaussianMultivariate: {
      int p = data.p();
      Eigen::MatrixXd sigma = params.sigma_full + kSigma2Floor * Eigen::MatrixXd::Identity(p, p);
      Eigen::LLT<Eigen::MatrixXd> llt(sigma);
      Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
      double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      double cst = -0.5 * (p * std::log(2 * M_PI) + logdet);
      for (int q = 0; q < Q; ++q)
        for (int l = 0; l < L; ++l) {
          Eigen::MatrixXd quad = Eigen::MatrixXd::Zero(n1, n2);
          std::vector<Eigen::MatrixXd> r(p);
          for (int k = 0; k < p; ++k)
            r[k] = data.X[k].array() - params.block_vec[k](q, l);
          for (int k = 0; k < p; ++k)
            for (int k2 = 0; k2 < p; ++k2)
              quad.array() += inv(k, k2) * r[k].array() * r[k2].array();
          at(q, l) = cst - 0.5 * quad.array();
        }
      break;
    }
    case FamilyId::GaussianCovariates: {
      const Eigen::MatrixXd& X = data.X[0];
      Eigen::MatrixXd U = predictor_matrix(data, params.beta);
      double s2 = std::max(params.sigma2, kSigma2Floor);
      double cst = -0.5 * std::log(2 * M_PI * s2);
      for (int q = 0; q < Q; ++q)
        for (int l = 0; l < L; ++l)
          at(q, l) = cst - (X.array() - U.array() - params.block(q, l)).square() / (2 * s2);
      break;
    }
    case FamilyId::Poisson: {
      const Eigen::MatrixXd& X = data.X[0];
      Eigen::MatrixXd lg = X.unaryExpr([](double v) { return std::lgamma(v + 1.0); });
      for (int q = 0; q < Q; ++q)
        for (int l = 0; l < L; ++l) {
          double lam = std::max(params.block(q, l), kLambdaFloor);
          at(q, l) = X.array() * std::log(lam) - lam - lg.array();
        }
      break;
    }
    case FamilyId::PoissonCovariates: {
      const Eigen::MatrixXd& X = data.X[0];
      Eigen::MatrixXd U = predictor_matrix(data, params.beta);
      Eigen::MatrixXd eU = U.array().exp();
      Eigen::MatrixXd lg = X.unaryExpr([](double v) { return std::lgamma(v + 1.0); });
      for (int q = 0; q < Q; ++q)
        for (int l = 0; l < L; ++l) {
          double lam = std::max(params.block(q, l), kLambdaFloor);
          at(q, l) = X.array() * (std::log(lam) + U.array()) - lam * eU.array() - lg.array();
        }
      break;
    }
  }
  for (auto& m : T) zero_diag_if_sbm(data, m);
  return T;
}

// ---------------------------------------------------------------------------
// covariate objective / gradient
// ---------------------------------------------------------------------------

namespace {

struct CovariateEval {
  double value;
  Eigen::MatrixXd d_block;  // Q x L, w.r.t. the stored group effect
  Eigen::VectorXd d_beta;
};

// Exact logistic; deliberately per-dyad (the non-vectorized reference path).
CovariateEval eval_bernoulli_covariates(const EmissionParams& params, const NetworkData& data,
                                        const Membership& resp) {
  const Eigen::MatrixXd& X = data.X[0];
  const int Q = resp.Q(), L = resp.L();
  const bool lbm = data.structure.kind == NetworkKind::LBM;
  const Eigen::MatrixXd& t1 = resp.tau1;
  const Eigen::MatrixXd& t2 = lbm ? resp.tau2 : resp.tau1;
  const int c = data.c();

  CovariateEval ev{0.0, Eigen::MatrixXd::Zero(Q, L), Eigen::VectorXd::Zero(c)};
  Eigen::VectorXd y(c);
  for (int i = 0; i < data.n1(); ++i) {
    for (int j = 0; j < data.n2(); ++j) {
      if (!lbm && i == j) continue;
      double u = 0.0;
      for (int k = 0; k < c; ++k) {
        y(k) = data.Y[k](i, j);
        u += params.beta(k) * y(k);
      }
      double x = X(i, j);
      for (int q = 0; q < Q; ++q) {
        for (int l = 0; l < L; ++l) {
          double w = t1(i, q) * t2(j, l);
          double eta = params.block(q, l) + u;
          ev.value += w * (x * eta - softplus(eta));
          double r = w * (x - ilogit(eta));
          ev.d_block(q, l) += r;
          for (int k = 0; k < c; ++k) ev.d_beta(k) += r * y(k);
        }
      }
    }
  }
  double s = dyad_scale(data);
  ev.value *= s;
  ev.d_block *= s;
  ev.d_beta *= s;
  return ev;
}

CovariateEval eval_gaussian_covariates(const EmissionParams& params, const NetworkData& data,
                                       const Membership& resp) {
  const Eigen::MatrixXd& X = data.X[0];
  const int Q = resp.Q(), L = resp.L();
  const int c = data.c();
  double s2 = std::max(params.sigma2, kSigma2Floor);
  Eigen::MatrixXd U = predictor_matrix(data, params.beta);
  Eigen::MatrixXd R = X - U;  // residual before the group effect

  Eigen::MatrixXd W = block_weights(data, resp);
  Eigen::MatrixXd cR = block_cross(data, resp, R);
  Eigen::MatrixXd cR2 = block_cross(data, resp, R.cwiseProduct(R));

  CovariateEval ev{0.0, Eigen::MatrixXd::Zero(Q, L), Eigen::VectorXd::Zero(c)};
  double cst = -0.5 * std::log(2 * M_PI * s2);
  for (int q = 0; q < Q; ++q)
    for (int l = 0; l < L; ++l) {
      double mu = params.block(q, l);
      ev.value += W(q, l) * cst -
                  (cR2(q, l) - 2 * mu * cR(q, l) + mu * mu * W(q, l)) / (2 * s2);
      ev.d_block(q, l) = (cR(q, l) - mu * W(q, l)) / s2;
    }
  for (int k = 0; k < c; ++k) {
    Eigen::MatrixXd cRY = block_cross(data, resp, R.cwiseProduct(data.Y[k]));
    Eigen::MatrixXd cY = block_cross(data, resp, data.Y[k]);
    ev.d_beta(k) =
        ((cRY.array() - params.block.array() * cY.array()).sum()) / s2;
  }
  double s = dyad_scale(data);
  ev.value *= s;
  ev.d_block *= s;
  ev.d_beta *= s;
  return ev;
}

CovariateEval eval_poisson_covariates(const EmissionParams& params, const NetworkData& data,
                                      const Membership& resp) {
  const Eigen::MatrixXd& X = data.X[0];
  const int Q = resp.Q(), L = resp.L();
  const int c = data.c();
  Eigen::MatrixXd U = predictor_matrix(data, params.beta);
  Eigen::MatrixXd eU = U.array().exp();
  Eigen::MatrixXd lg = X.unaryExpr([](double v) { return std::lgamma(v + 1.0); });

  Eigen::MatrixXd cX = block_cross(data, resp, X);
  Eigen::MatrixXd cXU = block_cross(data, resp, X.cwiseProduct(U));
  Eigen::MatrixXd ceU = block_cross(data, resp, eU);
  Eigen::MatrixXd clg = block_cross(data, resp, lg);

  CovariateEval ev{0.0, Eigen::MatrixXd::Zero(Q, L), Eigen::VectorXd::Zero(c)};
  for (int q = 0; q < Q; ++q)
    for (int l = 0; l < L; ++l) {
      double lam = std::max(params.block(q, l), kLambdaFloor);
      ev.value += cX(q, l) * std::log(lam) + cXU(q, l) - lam * ceU(q, l) - clg(q, l);
      ev.d_block(q, l) = cX(q, l) / lam - ceU(q, l);
    }
  for (int k = 0; k < c; ++k) {
    Eigen::MatrixXd cXY = block_cross(data, resp, X.cwiseProduct(data.Y[k]));
    Eigen::MatrixXd ceUY = block_cross(data, resp, eU.cwiseProduct(data.Y[k]));
    ev.d_beta(k) = (cXY.array() - params.block.array().max(kLambdaFloor) * ceUY.array()).sum();
  }
  double s = dyad_scale(data);
  ev.value *= s;
  ev.d_block *= s;
  ev.d_beta *= s;
  return ev;
}

CovariateEval eval_fast(const EmissionParams& params, const NetworkData& data,
                        const Membership& resp, bool* oor) {
  ObjectiveValue ov = fast_logistic_objective(params, data, resp, oor);
  const int Q = resp.Q(), L = resp.L();
  CovariateEval ev;
  ev.value = ov.value;
  ev.d_block = Eigen::Map<const Eigen::MatrixXd>(ov.gradient.data(), Q, L);
  ev.d_beta = ov.gradient.tail(data.c());
  return ev;
}

CovariateEval eval_covariate(FamilyId family, const EmissionParams& params,
                             const NetworkData& data, const Membership& resp) {
  switch (family) {
    case FamilyId::BernoulliCovariates:
      return eval_bernoulli_covariates(params, data, resp);
    case FamilyId::BernoulliCovariatesFast:
      return eval_fast(params, data, resp, nullptr);
    case FamilyId::GaussianCovariates:
      return eval_gaussian_covariates(params, data, resp);
    case FamilyId::PoissonCovariates:
      return eval_poisson_covariates(params, data, resp);
    default:
      throw DomainViolation(family_name(family) + " is not a covariate family");
  }
}

}  // namespace

double covariate_objective(FamilyId family, const EmissionParams& params,
                           const NetworkData& data, const Membership& resp) {
  return eval_covariate(family, params, data, resp).value;
}

Eigen::VectorXd covariate_gradient(FamilyId family, const EmissionParams& params,
                                   const NetworkData& data, const Membership& resp) {
  CovariateEval ev = eval_covariate(family, params, data, resp);
  const int QL = resp.Q() * resp.L();
  Eigen::VectorXd g(QL + data.c());
  g.head(QL) = Eigen::Map<const Eigen::VectorXd>(ev.d_block.data(), QL);
  g.tail(data.c()) = ev.d_beta;
  return g;
}

// ---------------------------------------------------------------------------
// fast logistic: binomial-separated power sums
// ---------------------------------------------------------------------------

ObjectiveValue fast_logistic_objective(const EmissionParams& params, const NetworkData& data,
                                       const Membership& resp, bool* out_of_range) {
  const GApprox ga = fit_g_approx();
  const int Q = resp.Q(), L = resp.L();
  const int c = data.c();
  const int deg = 2 * (GApprox::kNumCoeffs - 1);  // 14
  const Eigen::MatrixXd& X = data.X[0];
  const Eigen::MatrixXd& m = params.block;

  // binomial table C(K, b) for K <= deg
  static const auto choose = [] {
    std::array<std::array<double, 15>, 15> t{};
    for (int n = 0; n <= 14; ++n) {
      t[n][0] = 1.0;
      for (int b = 1; b <= n; ++b)
        t[n][b] = t[n - 1][b - 1] + (b <= n - 1 ? t[n - 1][b] : 0.0);
    }
    return t;
  }();

  Eigen::MatrixXd U = predictor_matrix(data, params.beta);
  Eigen::MatrixXd Xh = X.array() - 0.5;
  if (data.structure.is_sbm()) {
    Xh.diagonal().setZero();
    U.diagonal().setZero();  // keeps power sums diagonal-free for b = 0 handled by weights
  }

  // per-dyad powers of u = beta.Y summed against tau moments
  std::vector<Eigen::MatrixXd> S(deg + 1);  // S[b] = cross(U^b), S[0] = W
  S[0] = block_weights(data, resp);
  Eigen::MatrixXd Upow = Eigen::MatrixXd::Ones(data.n1(), data.n2());
  std::vector<std::vector<Eigen::MatrixXd>> T(deg);  // T[b][k] = cross(U^b * Y_k)
  for (int b = 0; b <= deg; ++b) {
    if (b > 0) {
      Upow = Upow.cwiseProduct(U);
      S[b] = block_cross(data, resp, Upow);
    }
    if (b < deg) {
      T[b].resize(c);
      for (int k = 0; k < c; ++k)
        T[b][k] = block_cross(data, resp, (b == 0 ? data.Y[k]
                                                  : Upow.cwiseProduct(data.Y[k]).eval()));
    }
  }
  // data term pieces (beta-independent contractions kept simple; recomputed
  // per call, negligible next to the power sums)
  Eigen::MatrixXd D1 = block_cross(data, resp, Xh);
  Eigen::MatrixXd D2 = block_cross(data, resp, Xh.cwiseProduct(U));
  std::vector<Eigen::MatrixXd> E(c);
  for (int k = 0; k < c; ++k) E[k] = block_cross(data, resp, Xh.cwiseProduct(data.Y[k]));

  double value = 0.0;
  Eigen::MatrixXd d_m = Eigen::MatrixXd::Zero(Q, L);
  Eigen::VectorXd d_beta = Eigen::VectorXd::Zero(c);
  bool oor = false;
  double umax = U.maxCoeff(), umin = U.minCoeff();

  for (int q = 0; q < Q; ++q) {
    for (int l = 0; l < L; ++l) {
      double mql = m(q, l);
      if (mql + umax > GApprox::kRange || mql + umin < -GApprox::kRange) oor = true;
      // powers of m
      std::array<double, 15> mp{};
      mp[0] = 1.0;
      for (int a = 1; a <= deg; ++a) mp[a] = mp[a - 1] * mql;

      value += D1(q, l) * mql + D2(q, l);
      d_m(q, l) += D1(q, l);
      for (int k = 0; k < c; ++k) d_beta(k) += E[k](q, l);

      for (int kk = 0; kk < GApprox::kNumCoeffs; ++kk) {
        int K = 2 * kk;
        double ak = ga.a[kk];
        if (ak == 0.0) continue;
        for (int b = 0; b <= K; ++b) {
          int a = K - b;
          double cf = ak * choose[K][b];
          value += cf * mp[a] * S[b](q, l);
          if (a >= 1) d_m(q, l) += cf * a * mp[a - 1] * S[b](q, l);
          if (b >= 1)
            for (int k = 0; k < c; ++k) d_beta(k) += cf * b * mp[a] * T[b - 1][k](q, l);
        }
      }
    }
  }
  double s = dyad_scale(data);
  ObjectiveValue ov;
  ov.value = s * value;
  ov.gradient.resize(Q * L + c);
  Eigen::Map<Eigen::MatrixXd>(ov.gradient.data(), Q, L) = s * d_m;
  ov.gradient.tail(c) = s * d_beta;
  if (out_of_range) *out_of_range = oor;
  return ov;
}

// ---------------------------------------------------------------------------
// M-step
// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd floored_weights(const NetworkData& data, const Membership& resp,
                                bool* degenerate) {
  Eigen::MatrixXd W = block_weights(data, resp);
  if (W.minCoeff() < kWeightEps) {
    if (degenerate) *degenerate = true;
    W = W.cwiseMax(kWeightEps);
  }
  return W;
}

void symmetrize_if_needed(const NetworkData& data, Eigen::MatrixXd& block) {
  if (data.structure.kind == NetworkKind::SymmetricSBM)
    block = ((block + block.transpose()) / 2.0).eval();
}

// shared L-BFGS driver over (block, beta); `to_internal`/`from_internal`
// handle the log reparametrization for Poisson rates.
EmissionParams covariate_m_step(FamilyId family, const NetworkData& data,
                                const Membership& resp, const EmissionParams* warm,
                                bool* degenerate) {
  const int Q = resp.Q(), L = resp.L(), c = data.c();
  const int QL = Q * L;
  const bool log_scale = family == FamilyId::PoissonCovariates;

  Eigen::MatrixXd W = floored_weights(data, resp, degenerate);
  Eigen::MatrixXd cX = block_cross(data, resp, data.X[0]);

  Eigen::VectorXd x0(QL + c);
  if (warm && warm->block.size() == QL && warm->beta.size() == c) {
    Eigen::MatrixXd b0 = warm->block;
    if (log_scale) b0 = b0.cwiseMax(kLambdaFloor).array().log();
    x0.head(QL) = Eigen::Map<const Eigen::VectorXd>(b0.data(), QL);
    x0.tail(c) = warm->beta;
  } else {
    Eigen::MatrixXd mean = (cX.array() / W.array()).matrix();
    Eigen::MatrixXd b0(Q, L);
    switch (family) {
      case FamilyId::BernoulliCovariates:
      case FamilyId::BernoulliCovariatesFast:
        b0 = mean.unaryExpr([](double v) {
          double p = clamp_prob(v);
          return std::log(p / (1 - p));
        });
        break;
      case FamilyId::GaussianCovariates:
        b0 = mean;
        break;
      default:
        b0 = mean.cwiseMax(kLambdaFloor).array().log();
        break;
    }
    x0.head(QL) = Eigen::Map<const Eigen::VectorXd>(b0.data(), QL);
    x0.tail(c).setZero();
  }

  EmissionParams p;
  p.family = family;
  p.sigma2 = warm ? warm->sigma2 : 1.0;
  auto unpack = [&](const Eigen::VectorXd& x) {
    EmissionParams e = p;
    e.block = Eigen::Map<const Eigen::MatrixXd>(x.data(), Q, L);
    if (log_scale) e.block = e.block.array().exp();
    e.beta = x.tail(c);
    return e;
  };

  auto fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    EmissionParams e = unpack(x);
    CovariateEval ev = eval_covariate(family, e, data, resp);
    Eigen::MatrixXd db = ev.d_block;
    if (log_scale) db = db.cwiseProduct(e.block);  // chain rule d/d(log lambda)
    grad.resize(QL + c);
    Eigen::Map<Eigen::MatrixXd>(grad.data(), Q, L) = -db;
    grad.tail(c) = -ev.d_beta;
    return -ev.value;
  };

  OptimResult r = lbfgs_minimize(fn, x0, 1e-8, 200);
  EmissionParams out = unpack(r.x);
  symmetrize_if_needed(data, out.block);

  if (family == FamilyId::GaussianCovariates) {
    Eigen::MatrixXd U = predictor_matrix(data, out.beta);
    Eigen::MatrixXd R = data.X[0] - U;
    Eigen::MatrixXd cR = block_cross(data, resp, R);
    Eigen::MatrixXd cR2 = block_cross(data, resp, R.cwiseProduct(R));
    double num = (cR2.array() - 2 * out.block.array() * cR.array() +
                  out.block.array().square() * W.array())
                     .sum();
    out.sigma2 = std::max(num / W.sum(), kSigma2Floor);
  }
  return out;
}

}  // namespace

EmissionParams m_step(FamilyId family, const NetworkData& data, const Membership& resp,
                      const EmissionParams* warm, bool* degenerate) {
  if (degenerate) *degenerate = false;
  EmissionParams p;
  p.family = family;
  const int Q = resp.Q(), L = resp.L();

  switch (family) {
    case FamilyId::Bernoulli: {
      Eigen::MatrixXd W = floored_weights(data, resp, degenerate);
      Eigen::MatrixXd cX = block_cross(data, resp, data.X[0]);
      p.block = (cX.array() / W.array()).unaryExpr([](double v) { return clamp_prob(v); });
      symmetrize_if_needed(data, p.block);
      break;
    }
    case FamilyId::Poisson: {
      Eigen::MatrixXd W = floored_weights(data, resp, degenerate);
      Eigen::MatrixXd cX = block_cross(data, resp, data.X[0]);
      p.block = (cX.array() / W.array()).cwiseMax(kLambdaFloor);
      symmetrize_if_needed(data, p.block);
      break;
    }
    case FamilyId::BernoulliMultiplex: {
      Eigen::MatrixXd W = floored_weights(data, resp, degenerate);
      Eigen::MatrixXi idx = pattern_index(data);
      int npat = 1 << data.p();
      p.block_vec.resize(npat);
      Eigen::MatrixXd total = Eigen::MatrixXd::Zero(Q, L);
      for (int x = 0; x < npat; ++x) {
        Eigen::MatrixXd ind =
            idx.unaryExpr([&](int v) { return v == x ? 1.0 : 0.0; }).cast<double>();
        zero_diag_if_sbm(data, ind);
        Eigen::MatrixXd cxm = block_cross(data, resp, ind);
        p.block_vec[x] =
            (cxm.array() / W.array()).unaryExpr([](double v) { return clamp_prob(v); });
        symmetrize_if_needed(data, p.block_vec[x]);
        total += p.block_vec[x];
      }
      for (int x = 0; x < npat; ++x)
        p.block_vec[x] = p.block_vec[x].cwiseQuotient(total);  // renormalize the simplex
      break;
    }
    case FamilyId::Gaussian: {
      Eigen::MatrixXd W = floored_weights(data, resp, degenerate);
      Eigen::MatrixXd cX = block_cross(data, resp, data.X[0]);
      Eigen::MatrixXd cX2 = block_cross(data, resp, data.X[0].cwiseProduct(data.X[0]));
      p.block = cX.array() / W.array();
      symmetrize_if_needed(data, p.block);
      double num = (cX2.array() - 2 * p.block.array() * cX.array() +
                    p.block.array().square() * W.array())
                       .sum();
      p.sigma2 = std::max(num / W.sum(), kSigma2Floor);
      break;
    }
    case FamilyId::GaussianMultivariateIndependentHomoscedastic:
    case FamilyId::GaussianMultivariateIndependent:
    case FamilyId::GaussianMultivariate: {
      Eigen::MatrixXd W = floored_weights(data, resp, degenerate);
      int pd = data.p();
      p.block_vec.resize(pd);
      std::vector<Eigen::MatrixXd> cXk(pd);
      for (int k = 0; k < pd; ++k) {
        cXk[k] = block_cross(data, resp, data.X[k]);
        p.block_vec[k] = cXk[k].array() / W.array();
        symmetrize_if_needed(data, p.block_vec[k]);
      }
      double N = W.sum();
      if (family == FamilyId::GaussianMultivariate) {
        p.sigma_full.resize(pd, pd);
        for (int k = 0; k < pd; ++k)
          for (int k2 = k; k2 < pd; ++k2) {
            Eigen::MatrixXd cxx =
                block_cross(data, resp, data.X[k].cwiseProduct(data.X[k2]));
            double v = (cxx.array() - p.block_vec[k].array() * cXk[k2].array() -
                        p.block_vec[k2].array() * cXk[k].array() +
                        p.block_vec[k].array() * p.block_vec[k2].array() * W.array())
                           .sum() /
                       N;
            p.sigma_full(k, k2) = v;
            p.sigma_full(k2, k) = v;
          }
      } else {
        Eigen::VectorXd s2(pd);
        for (int k = 0; k < pd; ++k) {
          Eigen::MatrixXd cx2 = block_cross(data, resp, data.X[k].cwiseProduct(data.X[k]));
          s2(k) = std::max((cx2.array() - 2 * p.block_vec[k].array() * cXk[k].array() +
                            p.block_vec[k].array().square() * W.array())
                                   .sum() /
                               N,
                           kSigma2Floor);
        }
        if (family == FamilyId::GaussianMultivariateIndependent)
          p.sigma_diag = s2;
        else
          p.sigma2 = std::max(s2.mean(), kSigma2Floor);
      }
      break;
    }
    case FamilyId::BernoulliCovariates:
    case FamilyId::BernoulliCovariatesFast:
    case FamilyId::GaussianCovariates:
    case FamilyId::PoissonCovariates:
      return covariate_m_step(family, data, resp, warm, degenerate);
  }
  return p;
}

long free_parameter_count(FamilyId family, int Q, int L, int p, int c, bool symmetric) {
  long B = symmetric ? static_cast<long>(Q) * (Q + 1) / 2 : static_cast<long>(Q) * L;
  switch (family) {
    case FamilyId::Bernoulli:
    case FamilyId::Poisson:
      return B;
    case FamilyId::BernoulliMultiplex:
      return B * ((1L << p) - 1);
    case FamilyId::BernoulliCovariates:
    case FamilyId::BernoulliCovariatesFast:
    case FamilyId::PoissonCovariates:
      return B + c;
    case FamilyId::Gaussian:
      return B + 1;
    case FamilyId::GaussianMultivariateIndependentHomoscedastic:
      return B * p + 1;
    case FamilyId::GaussianMultivariateIndependent:
      return B * p + p;
    case FamilyId::GaussianMultivariate:
      return B * p + static_cast<long>(p) * (p + 1) / 2;
    case FamilyId::GaussianCovariates:
      return B + c + 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sampling / means
// ---------------------------------------------------------------------------

Eigen::VectorXd sample_dyad(FamilyId family, const EmissionParams& params, int q, int l,
                            const Eigen::VectorXd& y, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> norm(0.0, 1.0);
  auto bern = [&](double pr) { return unif(rng) < pr ? 1.0 : 0.0; };
  double u = y.size() ? params.beta.dot(y) : 0.0;

  Eigen::VectorXd v(1);
  switch (family) {
    case FamilyId::Bernoulli:
      v(0) = bern(params.block(q, l));
      return v;
    case FamilyId::BernoulliMultiplex: {
      int npat = static_cast<int>(params.block_vec.size());
      int p = 0;
      while ((1 << p) < npat) ++p;
      double r = unif(rng), acc = 0.0;
      int pick = npat - 1;
      for (int x = 0; x < npat; ++x) {
        acc += params.block_vec[x](q, l);
        if (r <= acc) {
          pick = x;
          break;
        }
      }
      Eigen::VectorXd out(p);
      for (int k = 0; k < p; ++k) out(k) = (pick >> k) & 1;
      return out;
    }
    case FamilyId::BernoulliCovariates:
    case FamilyId::BernoulliCovariatesFast:
      v(0) = bern(ilogit(params.block(q, l) + u));
      return v;
    case FamilyId::Gaussian:
      v(0) = params.block(q, l) + std::sqrt(params.sigma2) * norm(rng);
      return v;
    case FamilyId::GaussianMultivariateIndependentHomoscedastic:
    case FamilyId::GaussianMultivariateIndependent: {
      int p = static_cast<int>(params.block_vec.size());
      Eigen::VectorXd out(p);
      for (int k = 0; k < p; ++k) {
        double s = family == FamilyId::GaussianMultivariateIndependent
                       ? std::sqrt(params.sigma_diag(k))
                       : std::sqrt(params.sigma2);
        out(k) = params.block_vec[k](q, l) + s * norm(rng);
      }
      return out;
    }
    case FamilyId::GaussianMultivariate: {
      int p = static_cast<int>(params.block_vec.size());
      Eigen::LLT<Eigen::MatrixXd> llt(params.sigma_full +
                                      kSigma2Floor * Eigen::MatrixXd::Identity(p, p));
      Eigen::VectorXd z(p);
      for (int k = 0; k < p; ++k) z(k) = norm(rng);
      Eigen::VectorXd out = llt.matrixL() * z;
      for (int k = 0; k < p; ++k) out(k) += params.block_vec[k](q, l);
      return out;
    }
    case FamilyId::GaussianCovariates:
      v(0) = params.block(q, l) + u + std::sqrt(params.sigma2) * norm(rng);
      return v;
    case FamilyId::Poisson: {
      std::poisson_distribution<long> pois(std::max(params.block(q, l), kLambdaFloor));
      v(0) = static_cast<double>(pois(rng));
      return v;
    }
    case FamilyId::PoissonCovariates: {
      std::poisson_distribution<long> pois(std::max(params.block(q, l), kLambdaFloor) *
                                           std::exp(u));
      v(0) = static_cast<double>(pois(rng));
      return v;
    }
  }
  return v;
}

double dyad_mean(FamilyId family, const EmissionParams& params, int q, int l,
                 const Eigen::VectorXd& y) {
  double u = y.size() ? params.beta.dot(y) : 0.0;
  switch (family) {
    case FamilyId::Bernoulli:
    case FamilyId::Gaussian:
    case FamilyId::Poisson:
      return params.block(q, l);
    case FamilyId::BernoulliCovariates:
    case FamilyId::BernoulliCovariatesFast:
      return ilogit(params.block(q, l) + u);
    case FamilyId::GaussianCovariates:
      return params.block(q, l) + u;
    case FamilyId::PoissonCovariates:
      return std::max(params.block(q, l), kLambdaFloor) * std::exp(u);
    default:
      throw DomainViolation("dyad_mean undefined for multivariate family");
  }
}

}  // namespace blockinfer
