#ifndef BLOCKINFER_GAPPROX_HPP
#define BLOCKINFER_GAPPROX_HPP

#include <array>

namespace blockinfer {

// g(x) = x/2 + log(1 - ilogit(x)) = -log(2 cosh(x/2)); even and concave.
double g_exact(double x);

// Even degree-14 polynomial p(x) = sum_k a[k] x^(2k) approximating g on
// [-15,15], with p'' <= 0 enforced on the fit grid. eps_g is the sup error
// recorded over a dense grid by the fitting run itself.
struct GApprox {
  static constexpr int kNumCoeffs = 8;  // a_0 .. a_7, powers x^0 .. x^14
  static constexpr double kRange = 15.0;
  std::array<double, kNumCoeffs> a{};
  double eps_g = 0.0;

  double eval(double x) const {
    double x2 = x * x;
    double v = a[kNumCoeffs - 1];
    for (int k = kNumCoeffs - 2; k >= 0; --k) v = v * x2 + a[k];
    return v;
  }
  double deriv(double x) const {
    double x2 = x * x;
    double v = 0.0;
    for (int k = kNumCoeffs - 1; k >= 1; --k) v = v * x2 + 2 * k * a[k];
    return v * x;
  }
  double second_deriv(double x) const {
    double x2 = x * x;
    double v = 0.0;
    for (int k = kNumCoeffs - 1; k >= 1; --k) v = v * x2 + 2 * k * (2 * k - 1) * a[k];
    // horner above gives sum 2k(2k-1) a_k x^(2k-2)
    return v;
  }
};

// Constrained weighted least-squares fit on a dense uniform grid; result is
// deterministic and cached after the first call.
GApprox fit_g_approx();

}  // namespace blockinfer

#endif
