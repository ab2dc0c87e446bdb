#ifndef BLOCKINFER_TYPES_HPP
#define BLOCKINFER_TYPES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace blockinfer {

enum class NetworkKind { DirectedSBM, SymmetricSBM, LBM };

struct NetworkStructure {
  NetworkKind kind = NetworkKind::DirectedSBM;
  int n1 = 0;  // nodes (SBM) or row nodes (LBM)
  int n2 = 0;  // column nodes (LBM); equals n1 for SBM kinds

  static NetworkStructure directed(int n) { return {NetworkKind::DirectedSBM, n, n}; }
  static NetworkStructure symmetric(int n) { return {NetworkKind::SymmetricSBM, n, n}; }
  static NetworkStructure bipartite(int n1, int n2) { return {NetworkKind::LBM, n1, n2}; }

  bool is_sbm() const { return kind != NetworkKind::LBM; }
};

enum class FamilyId {
  Bernoulli,
  BernoulliMultiplex,
  BernoulliCovariates,
  BernoulliCovariatesFast,
  Gaussian,
  GaussianMultivariateIndependentHomoscedastic,
  GaussianMultivariateIndependent,
  GaussianMultivariate,
  GaussianCovariates,
  Poisson,
  PoissonCovariates,
};

std::string family_name(FamilyId id);
FamilyId parse_family(const std::string& name);
bool family_uses_covariates(FamilyId id);

// Error taxonomy. The CLI maps the code() string to its exit-2 diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& m) : Error("ShapeMismatch", m) {}
};
struct DomainViolation : Error {
  explicit DomainViolation(const std::string& m) : Error("DomainViolation", m) {}
};
struct SymmetryViolation : Error {
  explicit SymmetryViolation(const std::string& m) : Error("SymmetryViolation", m) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error("ParseError", m) {}
};
struct InvalidK : Error {
  explicit InvalidK(const std::string& m) : Error("InvalidK", m) {}
};
struct FitInfeasible : Error {
  explicit FitInfeasible(const std::string& m) : Error("FitInfeasible", m) {}
};

// Deterministic seed derivation; used to hand independent streams to
// concurrent fits so --jobs never changes per-fit randomness.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  return splitmix64(splitmix64(splitmix64(base ^ splitmix64(a)) ^ splitmix64(b)) ^ splitmix64(c));
}

}  // namespace blockinfer

#endif
