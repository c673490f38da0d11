#pragma once

// Ensemble-independent building blocks: the fundamental kernel and its determinants,
// the Berezinian B_k(r), the Ingham-Siegel functional I(r) acting on Taylor jets, and
// the unitary-group (HCIZ) integrals.

#include <rmtsusy/errors.hpp>
#include <rmtsusy/grassmann.hpp>
#include <rmtsusy/polynomial.hpp>
#include <rmtsusy/quadrature.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace rmtsusy {

using cplx = std::complex<double>;

struct IncrementedPoint {
  double value = 0.0;
  int side = 1;          // L_p: +1 puts the increment below the real axis (x - i eps)
  double epsilon = 0.0;  // >= 0

  IncrementedPoint() = default;
  IncrementedPoint(double v, int s = 1, double eps = 0.0) : value(v), side(s), epsilon(eps) {
    validate();
  }
  void validate() const {
    if (side != 1 && side != -1) throw ConfigurationError("IncrementedPoint: side must be +1 or -1");
    if (!(epsilon >= 0.0)) throw ConfigurationError("IncrementedPoint: epsilon must be >= 0");
  }
  // x - i L eps
  cplx shifted(int L) const { return {value, -L * epsilon}; }
};

enum class KernelVariant { full, imaginary_part, arbitrary_metric };

namespace detail {

// (1/pi) sum_{n<N} b^n / a^{n+1}
inline cplx kernel_series(int N, cplx a, cplx b) {
  cplx s{}, term = 1.0 / a, q = b / a;
  for (int n = 0; n < N; ++n) {
    s += term;
    term *= q;
  }
  return s / std::numbers::pi;
}

// Closed geometric form (1 - (b/a)^N) / (pi (a - b)); near confluence a ~ b the sum
// sum_j a^j b^{N-1-j} / a^N is used instead, which is the series itself.
inline cplx kernel_closed(int N, cplx a, cplx b) {
  if (a == cplx{}) throw NumericalError("fundamental kernel: s1 at the origin with zero increment");
  if (std::abs(a - b) <= 1e-3 * std::abs(a)) return kernel_series(N, a, b);
  cplx q = b / a;
  return (1.0 - std::pow(q, N)) / (std::numbers::pi * (a - b));
}

inline void check_kernel_args(int N) {
  if (N < 1) throw ContractViolation("fundamental kernel: N must be >= 1");
}

}  // namespace detail

// Chat(s1, i s2) = (1/pi) sum_{n<N} (i s2)^n / (s1^-+)^{n+1}. The full variant uses
// s1^- = x - i eps; arbitrary_metric follows s1.side; imaginary_part takes Im of the
// singular factor at finite eps (eps = 0 has no pointwise meaning there).
inline cplx fundamental_kernel(int N, const IncrementedPoint& s1, double s2, KernelVariant variant) {
  detail::check_kernel_args(N);
  s1.validate();
  const cplx b(0.0, s2);
  switch (variant) {
    case KernelVariant::full:
      return detail::kernel_closed(N, s1.shifted(1), b);
    case KernelVariant::arbitrary_metric:
      return detail::kernel_closed(N, s1.shifted(s1.side), b);
    case KernelVariant::imaginary_part: {
      if (s1.epsilon <= 0.0)
        throw ContractViolation("imaginary-part kernel needs a positive increment");
      cplx a = s1.shifted(1);
      // Im acts on 1/a^{n+1} only: (f(a) - f(conj a)) / 2i with b held fixed.
      return (detail::kernel_closed(N, a, b) - detail::kernel_closed(N, std::conj(a), b)) /
             cplx(0.0, 2.0);
    }
  }
  return {};
}

// Term-by-term series; the reference form for tests and confluent points.
inline cplx fundamental_kernel_series(int N, const IncrementedPoint& s1, double s2,
                                      KernelVariant variant) {
  detail::check_kernel_args(N);
  const cplx b(0.0, s2);
  switch (variant) {
    case KernelVariant::full:
      return detail::kernel_series(N, s1.shifted(1), b);
    case KernelVariant::arbitrary_metric:
      return detail::kernel_series(N, s1.shifted(s1.side), b);
    case KernelVariant::imaginary_part: {
      cplx a = s1.shifted(1), s{}, bn = 1.0;
      for (int n = 0; n < N; ++n) {
        s += bn * std::imag(1.0 / std::pow(a, n + 1));
        bn *= b;
      }
      return s / std::numbers::pi;
    }
  }
  return {};
}

// -(1 / (pi (s1 - i s2))) ((i s2 / s1)^N - 1), the superdeterminant form of the kernel.
inline cplx fundamental_kernel_detg_form(int N, const IncrementedPoint& s1, double s2) {
  cplx a = s1.shifted(s1.side), b(0.0, s2);
  return -(std::pow(b / a, N) - 1.0) / (std::numbers::pi * (a - b));
}

template <class M>
cplx complex_determinant(const M& m) {
  const std::size_t k = m.size();
  Eigen::MatrixXcd a(k, k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t q = 0; q < k; ++q) a(p, q) = m[p][q];
  if (k == 1) return a(0, 0);
  if (k == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  return a.partialPivLu().determinant();
}

// det[Chat(s_p1, i s_q2)] for k first-row points and k second-row energies.
inline cplx fundamental_correlations(int N, const std::vector<IncrementedPoint>& s1,
                                     const std::vector<double>& s2, KernelVariant variant) {
  if (s1.empty() || s1.size() != s2.size())
    throw ContractViolation("fundamental_correlations: need k >= 1 pairs");
  std::vector<std::vector<cplx>> m(s1.size(), std::vector<cplx>(s1.size()));
  for (std::size_t p = 0; p < s1.size(); ++p)
    for (std::size_t q = 0; q < s1.size(); ++q) m[p][q] = fundamental_kernel(N, s1[p], s2[q], variant);
  return complex_determinant(m);
}

struct BerezinianValue {
  cplx determinant_form;
  cplx ratio_form;
};

// B_k(r) = det[1/(r_p1 - i r_q2)]. The ratio form uses the Cauchy product
// prod_{p<q}(r_q1 - r_p1)(i r_p2 - i r_q2) / prod_{p,q}(r_p1 - i r_q2).
inline BerezinianValue berezinian(std::size_t k, const std::vector<double>& r1,
                                  const std::vector<double>& r2) {
  if (r1.size() != k || r2.size() != k) throw ContractViolation("berezinian: need k entries each");
  std::vector<std::vector<cplx>> m(k, std::vector<cplx>(k));
  cplx denom = 1.0;
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t q = 0; q < k; ++q) {
      cplx d(r1[p], -r2[q]);
      if (d == cplx{}) throw NumericalError("berezinian: pole at r_p1 = i r_q2 = 0");
      m[p][q] = 1.0 / d;
      denom *= d;
    }
  cplx num = 1.0;
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t q = p + 1; q < k; ++q) num *= (r1[q] - r1[p]) * cplx(0.0, r2[p] - r2[q]);
  return {complex_determinant(m), num / denom};
}

// The distribution I(rho) acting on test data. c_Nk is the constant of the lower-increment
// functional; the arbitrary-metric one carries prod_p L_p in addition, and the
// imaginary-part one replaces i 2 pi by pi and the half lines by the full line.
struct IngamSiegelFunctional {
  int N = 1;
  int k = 1;
  MetricSignature metric = MetricSignature::all_plus(1);
  KernelVariant variant = KernelVariant::full;
  double epsilon = 0.0;

  cplx constant() const {
    const double nf = std::tgamma(static_cast<double>(N));
    const double sgn = (N - 1) % 2 == 0 ? 1.0 : -1.0;
    cplx base = variant == KernelVariant::imaginary_part
                    ? cplx(std::numbers::pi * sgn / nf, 0.0)
                    : cplx(0.0, 2.0 * std::numbers::pi * sgn / nf);
    cplx c = std::pow(base, k) * std::pow(2.0, -static_cast<double>(k * (k - 1)));
    if (variant == KernelVariant::arbitrary_metric)
      for (int p = 0; p < k; ++p) c *= static_cast<double>(metric[p]);
    return c;
  }

  int side(int p) const { return variant == KernelVariant::arbitrary_metric ? metric[p] : 1; }
};

// Per-point test data: an r1 factor and the Taylor jet of the r2 factor at r2 = 0.
struct IngamSiegelTest {
  std::function<cplx(double)> r1_factor;
  TaylorJet r2_jet;
  double r1_extent = 40.0;  // integration cutoff for the r1 factor
};

namespace detail {

// int over the Theta-restricted line of (i r)^N exp(-L eps r) f(r)
inline cplx ingham_siegel_r1_integral(const IngamSiegelFunctional& F, int p,
                                      const std::function<cplx(double)>& f, double extent) {
  const int N = F.N;
  const int L = F.side(p);
  const double eps = F.epsilon;
  auto g = [&](double r) { return std::pow(cplx(0.0, r), N) * std::exp(-L * eps * r) * f(r); };
  if (F.variant == KernelVariant::imaginary_part) {
    auto h = [&](double r) { return std::pow(cplx(0.0, r), N) * f(r); };
    return integrate(h, -extent, 0.0, 1e-12).value + integrate(h, 0.0, extent, 1e-12).value;
  }
  return L > 0 ? integrate(g, 0.0, extent, 1e-12).value : integrate(g, -extent, 0.0, 1e-12).value;
}

inline cplx delta_derivative_action(int N, const TaylorJet& jet) {
  if (jet.order() < N - 1)
    throw ContractViolation("Ingham-Siegel pairing: r2 jet order below N - 1");
  const double sgn = (N - 1) % 2 == 0 ? 1.0 : -1.0;
  return sgn * jet.derivative(N - 1);
}

}  // namespace detail

// Product test functions: c * prod_p [int (i r)^N ... f_p] [(-1)^{N-1} d^{N-1} g_p(0)].
inline cplx ingham_siegel_pair(const IngamSiegelFunctional& F,
                               const std::vector<IngamSiegelTest>& tests) {
  if (static_cast<int>(tests.size()) != F.k)
    throw ContractViolation("ingham_siegel_pair: need one test per point");
  cplx v = F.constant();
  for (int p = 0; p < F.k; ++p) {
    v *= detail::delta_derivative_action(F.N, tests[p].r2_jet);
    if (v == cplx{}) return v;
    v *= detail::ingham_siegel_r1_integral(F, p, tests[p].r1_factor, tests[p].r1_extent);
  }
  return v;
}

// k = 1 with a test function that couples r1 and r2: r1 -> jet in r2.
inline cplx ingham_siegel_pair_coupled(const IngamSiegelFunctional& F,
                                       const std::function<TaylorJet(double)>& test,
                                       double r1_extent) {
  if (F.k != 1) throw ContractViolation("ingham_siegel_pair_coupled: k must be 1");
  auto f = [&](double r) { return detail::delta_derivative_action(F.N, test(r)); };
  return F.constant() * detail::ingham_siegel_r1_integral(F, 0, f, r1_extent);
}

// ---------------------------------------------------------------------------------------
// Unitary group integrals

struct HczResult {
  cplx value;
  double error_estimate = 0.0;
};

inline constexpr double kConfluenceTolerance = 1e-8;

namespace detail {

// det[x_n^{m-1}] = prod_{n<m} (x_m - x_n)
inline double vandermonde(const std::vector<double>& x) {
  double v = 1.0;
  for (std::size_t n = 0; n < x.size(); ++n)
    for (std::size_t m = n + 1; m < x.size(); ++m) v *= x[m] - x[n];
  return v;
}

inline double factorial(int n) { return std::tgamma(n + 1.0); }

inline cplx hciz_formula(const std::vector<double>& E, const std::vector<double>& R) {
  const std::size_t N = E.size();
  Eigen::MatrixXcd m(N, N);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t j = 0; j < N; ++j) m(n, j) = std::exp(cplx(0.0, E[n] * R[j]));
  // prod_{n<N} n! / i^n = prod n! / i^{N(N-1)/2}
  cplx pre = 1.0;
  for (std::size_t n = 1; n < N; ++n) pre *= factorial(static_cast<int>(n)) * std::pow(cplx(0.0, -1.0), static_cast<int>(n));
  return pre * m.partialPivLu().determinant() / (vandermonde(E) * vandermonde(R));
}

inline bool near_confluent(const std::vector<double>& x) {
  double scale = 1.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  for (std::size_t n = 0; n < x.size(); ++n)
    for (std::size_t m = n + 1; m < x.size(); ++m)
      if (std::abs(x[m] - x[n]) < kConfluenceTolerance * scale) return true;
  return false;
}

inline std::vector<double> spread_apart(std::vector<double> x, double step) {
  for (std::size_t n = 0; n < x.size(); ++n) x[n] += step * static_cast<double>(n);
  return x;
}

}  // namespace detail

// int dmu(U) exp(i tr U E U^dagger R) for distinct spectra. Near-confluent inputs are
// split by 10 delta_conf; the difference to a split twice as large bounds the error.
inline HczResult hciz_exact(const std::vector<double>& E, const std::vector<double>& R) {
  if (E.size() != R.size() || E.empty()) throw ContractViolation("hciz_exact: E and R need N >= 1 entries");
  if (E.size() == 1) return {std::exp(cplx(0.0, E[0] * R[0])), 0.0};
  if (!detail::near_confluent(E) && !detail::near_confluent(R)) return {detail::hciz_formula(E, R), 0.0};
  const double step = 10.0 * kConfluenceTolerance;
  auto pert = [&](double s) {
    auto e = detail::near_confluent(E) ? detail::spread_apart(E, s) : E;
    auto r = detail::near_confluent(R) ? detail::spread_apart(R, s) : R;
    return detail::hciz_formula(e, r);
  };
  cplx v1 = pert(step), v2 = pert(2.0 * step);
  return {v1, std::abs(v1 - v2)};
}

// Rank-deficient case R = diag(R_1 .. R_2k, 0 .. 0):
//   prod_{n=N-2k}^{N-1} (n!/i^n) det[e^{iE R_1} .. e^{iE R_2k} 1 E .. E^{N-2k-1}]
//   / (Delta_N(E) Delta_2k(R) prod R_n^{N-2k}),  Delta(x) = det[x_n^{m-1}].
inline cplx hciz_degenerate(const std::vector<double>& E, const std::vector<double>& R2k,
                            std::size_t N, std::size_t k) {
  if (E.size() != N || R2k.size() != 2 * k) throw ContractViolation("hciz_degenerate: sizes");
  if (2 * k >= N) throw ContractViolation("hciz_degenerate: needs 2k < N");
  for (double r : R2k)
    if (r == 0.0) throw ContractViolation("hciz_degenerate: zero entry in R is a pole of 1/R^{N-2k}");
  if (detail::near_confluent(R2k) || detail::near_confluent(E))
    throw ContractViolation("hciz_degenerate: entries must be distinct");
  const std::size_t M = N - 2 * k;
  Eigen::MatrixXcd m(N, N);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t j = 0; j < 2 * k; ++j) m(n, j) = std::exp(cplx(0.0, E[n] * R2k[j]));
    for (std::size_t l = 0; l < M; ++l) m(n, 2 * k + l) = std::pow(E[n], static_cast<int>(l));
  }
  cplx pre = 1.0;
  for (std::size_t n = M; n < N; ++n)
    pre *= detail::factorial(static_cast<int>(n)) * std::pow(cplx(0.0, -1.0), static_cast<int>(n));
  double rprod = 1.0;
  for (double r : R2k) rprod *= std::pow(r, static_cast<int>(M));
  return pre * m.partialPivLu().determinant() /
         (detail::vandermonde(E) * detail::vandermonde(R2k) * rprod);
}

}  // namespace rmtsusy
