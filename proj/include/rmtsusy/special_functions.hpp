#pragma once

// Hermite polynomials, oscillator wave functions, generalized Hermite functions and the
// finite-N GUE kernel, all for the weight exp(-x^2) (density ~ exp(-tr H^2)).

#include <rmtsusy/errors.hpp>
#include <rmtsusy/quadrature.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace rmtsusy {

using cplx = std::complex<double>;

inline constexpr int kMaxHermiteOrder = 64;

inline double hermite_poly(int n, double x) {
  if (n < 0) throw ContractViolation("hermite_poly: n must be >= 0");
  double h0 = 1.0;
  if (n == 0) return h0;
  double h1 = 2.0 * x;
  for (int m = 1; m < n; ++m) {
    double h2 = 2.0 * x * h1 - 2.0 * m * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

// H_0(x) .. H_nmax(x)
inline std::vector<double> hermite_polys(int nmax, double x) {
  std::vector<double> h(nmax + 1);
  h[0] = 1.0;
  if (nmax >= 1) h[1] = 2.0 * x;
  for (int m = 1; m < nmax; ++m) h[m + 1] = 2.0 * x * h[m] - 2.0 * m * h[m - 1];
  return h;
}

// (2^n n! sqrt(pi))^{-1/2}
inline double oscillator_norm(int n) {
  return std::exp(-0.5 * (n * std::numbers::ln2 + std::lgamma(n + 1.0) +
                          0.5 * std::log(std::numbers::pi)));
}

// phi_0(x) .. phi_nmax(x) via the normalized recurrence (no overflow for large n or x),
// optionally times exp(shift) folded into the seed.
inline std::vector<double> oscillator_wavefunctions(int nmax, double x, double shift = 0.0) {
  std::vector<double> p(nmax + 1);
  p[0] = std::pow(std::numbers::pi, -0.25) * std::exp(shift - 0.5 * x * x);
  if (nmax >= 1) p[1] = std::sqrt(2.0) * x * p[0];
  for (int m = 1; m < nmax; ++m)
    p[m + 1] = std::sqrt(2.0 / (m + 1)) * x * p[m] - std::sqrt(static_cast<double>(m) / (m + 1)) * p[m - 1];
  return p;
}

inline double oscillator_wavefunction(int n, double x) {
  if (n < 0) throw ContractViolation("oscillator_wavefunction: n must be >= 0");
  return oscillator_wavefunctions(n, x)[n];
}

namespace detail {

inline double binomial(int n, int k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

// int_0^inf exp(-u^2) (u - i x)^n du as a finite sum of half-line Gaussian moments.
inline cplx half_line_shifted_moment(int n, double x) {
  cplx s{};
  cplx mix(0.0, -x);
  for (int j = 0; j <= n; ++j)
    s += binomial(n, j) * std::pow(mix, n - j) * (0.5 * std::tgamma(0.5 * (j + 1)));
  return s;
}

// x^{n+1} int_0^1 s^n exp(-x^2 s (2 - s)) ds, real and free of overflow.
inline double segment_integral(int n, double x) {
  if (x == 0.0) return 0.0;
  const double x2 = x * x;
  auto f = [n, x2](double s) { return std::pow(s, n) * std::exp(-x2 * s * (2.0 - s)); };
  // The integrand concentrates in a layer of width ~1/x^2 near s = 0 for large |x|.
  double split = std::min(1.0, (n + 40.0) / (2.0 * x2));
  double v = integrate(f, 0.0, split, 1e-14).value;
  if (split < 1.0) v += integrate(f, split, 1.0, 1e-14).value;
  return std::pow(x, n + 1) * v;
}

}  // namespace detail

// exp(-x^2) * Hhat_n(x). Stays finite where Hhat_n itself overflows.
inline cplx generalized_hermite_scaled(int n, double x) {
  if (n < 0 || n > kMaxHermiteOrder)
    throw ContractViolation("generalized_hermite: order outside [0, 64]");
  const double c = std::ldexp(1.0, n + 1) / std::sqrt(std::numbers::pi);
  cplx poly = std::pow(cplx(0.0, 2.0), n + 1) / std::sqrt(std::numbers::pi) *
              detail::half_line_shifted_moment(n, x);
  return c * detail::segment_integral(n, x) + std::exp(-x * x) * poly;
}

// Hhat_n(x) = (2i)^{n+1} pi^{-1/2} e^{x^2} int_0^inf exp(-xi^2 - 2 i x xi) xi^n dxi.
// The contour is deformed through the origin: a real segment integral plus a polynomial
// in x, so no cancellation and no upward recurrence is involved. Im Hhat_n = H_n.
inline cplx generalized_hermite(int n, double x) {
  if (n < 0 || n > kMaxHermiteOrder)
    throw ContractViolation("generalized_hermite: order outside [0, 64]");
  const double c = std::ldexp(1.0, n + 1) / std::sqrt(std::numbers::pi);
  cplx poly = std::pow(cplx(0.0, 2.0), n + 1) / std::sqrt(std::numbers::pi) *
              detail::half_line_shifted_moment(n, x);
  return c * std::exp(x * x) * detail::segment_integral(n, x) + poly;
}

// Seeds Hhat_0, Hhat_1 and recurs upward. Loses roughly a factor (2x^2)^n / n! of
// relative accuracy; kept for comparison with the direct evaluation at moderate n and x.
inline cplx generalized_hermite_recurrence(int n, double x) {
  cplx h0 = generalized_hermite(0, x);
  if (n == 0) return h0;
  cplx h1 = generalized_hermite(1, x);
  for (int m = 1; m < n; ++m) {
    cplx h2 = 2.0 * x * h1 - 2.0 * static_cast<double>(m) * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

// phihat_n(x) = exp(-x^2/2) Hhat_n(x) / sqrt(2^n n! sqrt(pi)); Im phihat_n = phi_n.
inline cplx generalized_wavefunction(int n, double x) {
  return oscillator_norm(n) * std::exp(0.5 * x * x) * generalized_hermite_scaled(n, x);
}

struct OscillatorBasis {
  int N = 1;
  explicit OscillatorBasis(int n) : N(n) {
    if (N < 1) throw ContractViolation("OscillatorBasis: N must be >= 1");
    if (N > kMaxHermiteOrder + 1) throw ContractViolation("OscillatorBasis: N above 65");
  }
};

enum class GueKernelVariant { full, imaginary_part };

// Khat(xp, xq) = sum_{n<N} phihat_n(xp) phi_n(xq). side = -1 places the increment of xp
// in the upper half plane, which conjugates phihat.
inline cplx gue_kernel(const OscillatorBasis& basis, double xp, double xq, GueKernelVariant variant,
                       int side = 1) {
  if (variant == GueKernelVariant::imaginary_part) {
    auto phi_p = oscillator_wavefunctions(basis.N - 1, xp);
    auto phi_q = oscillator_wavefunctions(basis.N - 1, xq);
    double s = 0.0;
    for (int n = 0; n < basis.N; ++n) s += phi_p[n] * phi_q[n];
    return s;
  }
  // phihat_n(xp) phi_n(xq) = c_n [exp(-xp^2) Hhat_n(xp)] [exp(xp^2/2) phi_n(xq)]
  auto phi_q = oscillator_wavefunctions(basis.N - 1, xq, 0.5 * xp * xp);
  cplx s{};
  for (int n = 0; n < basis.N; ++n) {
    cplx ph = oscillator_norm(n) * generalized_hermite_scaled(n, xp);
    s += (side > 0 ? ph : std::conj(ph)) * phi_q[n];
  }
  return s;
}

}  // namespace rmtsusy
