#pragma once

// k-point correlation functions of rotation-invariant ensembles.
//
// R^_k(x) = pi^-k E prod_p tr (x_p - i L_p 0 - H)^-1   (resolvent variant)
// R_k(x)  = E prod_p tr delta(x_p - H)                  (density variant)
//
// All evaluation paths reduce to sums of k x k determinants. With the reduced density
// written as Gaussian components exp(-alpha |h|^2) Q(h), each monomial of Q gives
//   det[ (1/pi) sum_{n<N} A_{n,m_p}(x_p) T_{n,m'_q}(x_q) ],
//   A_{n,m}(x) = int exp(-alpha t^2) t^m / (x - t - i L 0)^{n+1} dt,
//   T_{n,m}(y) = int exp(-alpha u^2) u^m (y - i u)^n du.
// The eigenvalue-integral path works with the characteristic-function components
// instead. The increment is taken to zero analytically everywhere (IncrementedPoint's
// epsilon is not used); only its side L_p matters.

#include <rmtsusy/ensembles.hpp>
#include <rmtsusy/errors.hpp>
#include <rmtsusy/kernels.hpp>
#include <rmtsusy/polynomial.hpp>
#include <rmtsusy/quadrature.hpp>
#include <rmtsusy/special_functions.hpp>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace rmtsusy {

using cplx = std::complex<double>;

enum class CorrelationVariant {
  resolvent,  // R^_k, real parts included
  density,    // R_k, imaginary parts only
};

enum class CorrelationMethod { convolution, eigenvalue_integral, factorized, closed_form_gue, closed_form_higher_trace };

inline std::string to_string(CorrelationVariant v) { return v == CorrelationVariant::resolvent ? "resolvent" : "density"; }

inline std::string to_string(CorrelationMethod m) {
  switch (m) {
    case CorrelationMethod::convolution: return "convolution";
    case CorrelationMethod::eigenvalue_integral: return "eigenvalue_integral";
    case CorrelationMethod::factorized: return "factorized";
    case CorrelationMethod::closed_form_gue: return "closed_form_gue";
    case CorrelationMethod::closed_form_higher_trace: return "closed_form_higher_trace";
  }
  return "?";
}

inline CorrelationMethod method_from_string(const std::string& s) {
  for (auto m : {CorrelationMethod::convolution, CorrelationMethod::eigenvalue_integral, CorrelationMethod::factorized,
                 CorrelationMethod::closed_form_gue, CorrelationMethod::closed_form_higher_trace})
    if (to_string(m) == s) return m;
  throw ConfigurationError("unknown correlation method '" + s +
                           "' (convolution|eigenvalue_integral|factorized|closed_form_gue|closed_form_higher_trace)");
}

inline CorrelationVariant variant_from_string(const std::string& s) {
  if (s == "resolvent" || s == "Rhat") return CorrelationVariant::resolvent;
  if (s == "density" || s == "R") return CorrelationVariant::density;
  throw ConfigurationError("unknown correlation variant '" + s + "' (R|Rhat, or density|resolvent)");
}

inline constexpr double kCoincidenceTolerance = 1e-9;
inline constexpr int kMaxEigenvalueIntegralK = 2;
// Absolute floor for adaptive integrals whose value may cancel to zero.
inline constexpr double kAbsoluteFloor = 1e-15;

struct QuadratureSettings {
  int gauss_hermite_nodes = 128;
  double rel_tol = 1e-12;
};

struct CorrelationRequest {
  EnsembleSpec spec;
  std::vector<IncrementedPoint> points;
  CorrelationVariant variant = CorrelationVariant::resolvent;
  CorrelationMethod method = CorrelationMethod::convolution;
  bool estimate_error = true;  // rerun at doubled order and tighter tolerance
  QuadratureSettings quadrature{};

  int k() const { return static_cast<int>(points.size()); }
};

struct CorrelationResult {
  cplx value;
  double error_estimate = 0.0;
  CorrelationMethod method = CorrelationMethod::convolution;
  CorrelationVariant variant = CorrelationVariant::resolvent;
  std::map<std::string, double> metadata;
  std::vector<std::string> notices;
};

namespace detail {

inline double choose(int n, int k) { return binomial(n, k); }

inline double factorial_d(int n) { return std::tgamma(n + 1.0); }

// Sum over components and monomials of det[sum_n row(p, m_p)[n] col(q, m'_q)[n]].
// row/col return per-n vectors and are cached per (p, exponent) within a component.
template <class RowFn, class ColFn>
cplx determinant_sum(const ComponentModel& model, int N, RowFn row, ColFn col) {
  const int k = model.k;
  cplx total{};
  std::vector<std::vector<cplx>> m(k, std::vector<cplx>(k));
  for (std::size_t c = 0; c < model.components.size(); ++c) {
    const auto& comp = model.components[c];
    std::map<std::pair<int, int>, std::vector<cplx>> rows, cols;
    auto get = [&](auto& cache, auto& fn, int idx, int e) -> const std::vector<cplx>& {
      auto key = std::make_pair(idx, e);
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, fn(comp.alpha, idx, e)).first;
      return it->second;
    };
    for (const auto& [e, coef] : comp.q.terms()) {
      for (int p = 0; p < k; ++p)
        for (int q = 0; q < k; ++q) {
          const auto& a = get(rows, row, p, e[p]);
          const auto& b = get(cols, col, q, e[k + q]);
          cplx s{};
          for (int n = 0; n < N; ++n) s += a[n] * b[n];
          m[p][q] = s;
        }
      total += coef * complex_determinant(m);
    }
  }
  return total;
}

// ---- convolution pieces ----------------------------------------------------------

// PV int exp(-alpha t^2) P(t) / (x - t) dt for a polynomial P, by subtracting
// g(x) exp(-alpha (t - x)^2), whose principal value vanishes by symmetry.
inline IntegralEstimate<double> principal_value_gaussian_poly(const std::vector<double>& poly, double alpha,
                                                              double x, double rel_tol) {
  auto g = [&](double t) { return std::exp(-alpha * t * t) * horner(poly, t); };
  std::vector<double> dpoly(std::max<std::size_t>(1, poly.size() + 1), 0.0);
  // d/dt [exp(-alpha t^2) P] = exp(-alpha t^2) (P' - 2 alpha t P)
  for (std::size_t i = 1; i < poly.size(); ++i) dpoly[i - 1] += i * poly[i];
  for (std::size_t i = 0; i < poly.size(); ++i) dpoly[i + 1] -= 2.0 * alpha * poly[i];
  const double gx = g(x), dgx = std::exp(-alpha * x * x) * horner(dpoly, x);
  auto f = [&](double t) {
    double d = x - t;
    if (std::abs(d) < 1e-7 * (1.0 + std::abs(x))) return -dgx;
    return (g(t) - gx * std::exp(-alpha * d * d)) / d;
  };
  const double deg = static_cast<double>(poly.size());
  const double L = std::sqrt((60.0 + deg) / alpha) + std::sqrt(deg / (2.0 * alpha));
  double lo = std::min(0.0, x) - L, hi = std::max(0.0, x) + L;
  // Split at x so the removable point is a panel edge.
  auto a = integrate(f, lo, x, rel_tol, kAbsoluteFloor, 8000);
  auto b = integrate(f, x, hi, rel_tol, kAbsoluteFloor, 8000);
  return {a.value + b.value, a.error + b.error};
}

// A_{n,m}(x) for n < N with the side L; the density variant keeps the delta part only.
inline std::vector<cplx> convolution_row(double alpha, int N, int m, double x, int L, CorrelationVariant variant,
                                         double rel_tol) {
  std::vector<cplx> out(N);
  for (int n = 0; n < N; ++n) {
    auto poly = gaussian_monomial_derivative_poly(n, m, alpha);
    const double gn = std::exp(-alpha * x * x) * horner(poly, x);
    const double pref = ((n % 2) ? -1.0 : 1.0) / factorial_d(n);
    if (variant == CorrelationVariant::density) {
      out[n] = pref * std::numbers::pi * gn;
    } else {
      double pv = principal_value_gaussian_poly(poly, alpha, x, rel_tol).value;
      out[n] = pref * cplx(pv, L * std::numbers::pi * gn);
    }
    out[n] /= std::numbers::pi;
  }
  return out;
}

// T_{n,m}(y) for n < N by Gauss-Hermite (exact for the polynomial integrand).
inline std::vector<cplx> convolution_col(double alpha, int N, int m, double y, int nodes) {
  const auto& gh = gauss_hermite(nodes);
  const double sa = std::sqrt(alpha);
  std::vector<cplx> out(N, cplx{});
  for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
    double u = gh.nodes[i] / sa;
    cplx base(y, -u), pw = 1.0;
    double w = gh.weights[i] * std::pow(u, m) / sa;
    for (int n = 0; n < N; ++n) {
      out[n] += w * pw;
      pw *= base;
    }
  }
  return out;
}

// ---- closed-form pieces for alpha = 1 ----------------------------------------------

// int exp(-t^2) (x - t)^p dt
inline double gaussian_shifted_moment(int p, double x) {
  double s = 0.0;
  for (int l = 0; l <= p; l += 2) s += choose(p, l) * std::pow(x, p - l) * std::tgamma(0.5 * (l + 1));
  return s;
}

inline std::vector<cplx> closed_form_row(int N, int m, double x, int L, CorrelationVariant variant) {
  std::vector<cplx> ahat(N + 1);  // A_{n,0} = pi exp(-x^2) Hhat_n(x) / n!
  for (int n = 0; n < N; ++n) {
    if (variant == CorrelationVariant::density) {
      ahat[n] = std::numbers::pi * std::exp(-x * x) * hermite_poly(n, x) / factorial_d(n);
    } else {
      cplx h = generalized_hermite_scaled(n, x);
      ahat[n] = std::numbers::pi * (L > 0 ? h : std::conj(h)) / factorial_d(n);
    }
  }
  std::vector<cplx> out(N, cplx{});
  for (int n = 0; n < N; ++n) {
    // t^m = sum_j C(m, j) x^{m-j} (-1)^j (x - t)^j
    for (int j = 0; j <= m; ++j) {
      cplx term;
      if (j <= n)
        term = ahat[n - j];
      else if (variant == CorrelationVariant::density)
        continue;
      else
        term = gaussian_shifted_moment(j - n - 1, x);
      out[n] += choose(m, j) * std::pow(x, m - j) * ((j % 2) ? -1.0 : 1.0) * term;
    }
    out[n] /= std::numbers::pi;
  }
  return out;
}

// theta_{n,m}(y) = i^m sum_j C(m, j) (-y)^{m-j} sqrt(pi) 2^{-(n+j)} H_{n+j}(y)
inline std::vector<cplx> closed_form_col(int N, int m, double y) {
  auto h = hermite_polys(N + m, y);
  std::vector<cplx> out(N, cplx{});
  const cplx im = std::pow(cplx(0.0, 1.0), m);
  for (int n = 0; n < N; ++n) {
    double s = 0.0;
    for (int j = 0; j <= m; ++j)
      s += choose(m, j) * std::pow(-y, m - j) * std::ldexp(1.0, -(n + j)) * h[n + j];
    out[n] = im * std::sqrt(std::numbers::pi) * s;
  }
  return out;
}

// ---- eigenvalue-integral pieces ----------------------------------------------------

// int over Theta(L r) (or the full line) of (-i r)^n r^a phi(r) exp(-i x r) dr.
template <class Phi>
cplx half_line_fourier(int n, int a, double x, int L, bool full_line, double decay, Phi phi, double rel_tol) {
  auto f = [&](double r) { return std::pow(cplx(0.0, -r), n) * std::pow(r, a) * phi(r) * std::exp(cplx(0.0, -x * r)); };
  const double R = std::sqrt((n + a) / (2.0 * decay)) + std::sqrt(60.0 / decay);
  auto lower = [&] { return integrate(f, -R, 0.0, rel_tol, kAbsoluteFloor, 8000).value; };
  auto upper = [&] { return integrate(f, 0.0, R, rel_tol, kAbsoluteFloor, 8000).value; };
  if (full_line) return lower() + upper();
  return L > 0 ? upper() : lower();
}

// int over Theta(L r) (or the full line) of r^m exp(-beta r^2 - i x r) dr in closed form:
// a Gaussian derivative on the full line, a scaled generalized Hermite function on the
// half line. Quadrature would cancel catastrophically for small beta at large |x|.
inline cplx gaussian_fourier_moment(int m, double beta, double x, int L, bool full_line) {
  const double pi = std::numbers::pi;
  if (full_line) {
    const double alpha = 1.0 / (4.0 * beta);
    auto p = gaussian_derivative_poly(m, alpha);
    double s = 0.0;
    for (std::size_t i = p.size(); i-- > 0;) s = s * x + p[i];
    return std::pow(cplx(0.0, 1.0), m) * std::sqrt(pi / beta) * s * std::exp(-alpha * x * x);
  }
  const double y = x / (2.0 * std::sqrt(beta));
  cplx h = std::sqrt(pi) * generalized_hermite_scaled(m, y) / std::pow(cplx(0.0, 2.0), m + 1) *
           std::pow(beta, -0.5 * (m + 1));
  return L > 0 ? h : (m % 2 ? -1.0 : 1.0) * std::conj(h);
}

inline std::vector<cplx> eigenvalue_row(double beta, int N, int a, double x, int L, CorrelationVariant variant) {
  std::vector<cplx> out(N);
  const bool full = variant == CorrelationVariant::density;
  const cplx pref = full ? cplx(1.0 / (2.0 * std::numbers::pi), 0.0) : cplx(0.0, L / std::numbers::pi);
  for (int n = 0; n < N; ++n)
    out[n] = pref / factorial_d(n) * std::pow(cplx(0.0, -1.0), n) * gaussian_fourier_moment(n + a, beta, x, L, full);
  return out;
}

// D_{n,b}(y) = n! [r^n] exp(-y r - beta r^2) r^b
inline std::vector<cplx> eigenvalue_col(double beta, int N, int b, double y) {
  TaylorJet g = TaylorJet::exp_quadratic(-y, -beta, std::max(0, N - 1));
  std::vector<cplx> out(N, cplx{});
  for (int n = b; n < N; ++n) out[n] = factorial_d(n) * g.c[n - b];
  return out;
}

inline void check_points(const CorrelationRequest& req) {
  if (req.k() < 1) throw ContractViolation("correlation request needs k >= 1 points");
  for (const auto& p : req.points) p.validate();
  req.spec.validate();
}

inline double gaussian_scale_of(const EnsembleSpec& spec) {
  if (spec.effectively_gaussian()) return spec.is_gaussian() ? std::get<GaussianFamily>(spec.family).scale : 1.0;
  if (auto* nd = std::get_if<NormDependentFamily>(&spec.family))
    if (nd->spread.kind == SpreadFunction::Kind::spike) return 2.0 * nd->spread.t0;
  return 0.0;
}

// Evaluate with settings s and, if requested, at doubled order to form the error estimate.
template <class Eval>
CorrelationResult run_with_error(const CorrelationRequest& req, Eval eval) {
  CorrelationResult r;
  r.method = req.method;
  r.variant = req.variant;
  const QuadratureSettings s = req.quadrature;
  r.value = eval(s);
  r.metadata["gauss_hermite_nodes"] = s.gauss_hermite_nodes;
  r.metadata["rel_tol"] = s.rel_tol;
  if (req.estimate_error) {
    QuadratureSettings fine{2 * s.gauss_hermite_nodes, s.rel_tol * 0.1};
    cplx v2 = eval(fine);
    r.error_estimate = std::abs(v2 - r.value) + 1e-15 * std::abs(r.value);
  }
  return r;
}

// Requests with points closer than the coincidence tolerance are evaluated at symmetric
// offsets +-10 delta and averaged (linear extrapolation to zero offset).
template <class Impl>
CorrelationResult with_coincidence(const CorrelationRequest& req, Impl impl) {
  check_points(req);
  bool close = false;
  for (int p = 0; p < req.k(); ++p)
    for (int q = p + 1; q < req.k(); ++q)
      if (std::abs(req.points[p].value - req.points[q].value) < kCoincidenceTolerance) close = true;
  if (!close) return impl(req);
  CorrelationResult out;
  for (double s : {1.0, -1.0}) {
    CorrelationRequest r2 = req;
    for (int p = 0; p < req.k(); ++p)
      r2.points[p].value += s * 10.0 * kCoincidenceTolerance * (2.0 * p - (req.k() - 1));
    auto r = impl(r2);
    out.value += 0.5 * r.value;
    out.error_estimate += 0.5 * r.error_estimate;
    out.method = r.method;
    out.variant = r.variant;
    out.metadata = r.metadata;
  }
  out.notices.push_back("coincident points evaluated at symmetric offsets of 1e-8");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------------------
// Convolution of the fundamental correlations with the reduced density.

inline CorrelationResult correlations_convolution(const CorrelationRequest& req) {
  return detail::with_coincidence(req, [](const CorrelationRequest& rq) {
    const int N = rq.spec.N, k = rq.k();
    check_selection(rq.spec, k);
    ComponentModel model = superspace_model(rq.spec, k);
    auto r = detail::run_with_error(rq, [&](const QuadratureSettings& s) {
      auto row = [&](double alpha, int p, int m) {
        return detail::convolution_row(alpha, N, m, rq.points[p].value, rq.points[p].side, rq.variant, s.rel_tol);
      };
      auto col = [&](double alpha, int q, int m) {
        return detail::convolution_col(alpha, N, m, rq.points[q].value, s.gauss_hermite_nodes);
      };
      return detail::determinant_sum(model, N, row, col);
    });
    r.metadata["components"] = static_cast<double>(model.components.size());
    return r;
  });
}

// ---------------------------------------------------------------------------------------
// Closed forms

// GUE: det[Khat(x_p, x_q)] (resolvent) or det[K(x_p, x_q)] (density). Gaussian scale s
// maps by R^(s)_k(x) = s^{-k/2} R^GUE_k(x / sqrt s); a spike spread is a Gaussian.
inline CorrelationResult correlations_closed_form_gue(const CorrelationRequest& req) {
  return detail::with_coincidence(req, [](const CorrelationRequest& rq) {
    const double scale = detail::gaussian_scale_of(rq.spec);
    if (scale <= 0.0) throw ContractViolation("closed_form_gue needs a Gaussian (or spike-spread) ensemble");
    const int k = rq.k();
    OscillatorBasis basis(rq.spec.N);
    const double c = 1.0 / std::sqrt(scale);
    std::vector<std::vector<cplx>> m(k, std::vector<cplx>(k));
    for (int p = 0; p < k; ++p)
      for (int q = 0; q < k; ++q)
        m[p][q] = gue_kernel(basis, c * rq.points[p].value, c * rq.points[q].value,
                             rq.variant == CorrelationVariant::density ? GueKernelVariant::imaginary_part
                                                                       : GueKernelVariant::full,
                             rq.points[p].side);
    CorrelationResult r;
    r.method = rq.method;
    r.variant = rq.variant;
    r.value = std::pow(c, k) * complex_determinant(m);
    r.error_estimate = 1e-14 * std::abs(r.value);
    return r;
  });
}

// Higher-trace closed form: the convolution determinants with A from generalized
// Hermite functions and T from Hermite polynomials (reduced density has alpha = 1).
inline CorrelationResult correlations_higher_trace(const CorrelationRequest& req) {
  return detail::with_coincidence(req, [](const CorrelationRequest& rq) {
    if (!rq.spec.is_higher_trace()) throw ContractViolation("closed_form_higher_trace needs a higher-trace ensemble");
    const int N = rq.spec.N, k = rq.k();
    check_selection(rq.spec, k);
    ComponentModel model = superspace_model(rq.spec, k);
    for (const auto& c : model.components)
      if (c.alpha != 1.0) throw ContractViolation("closed_form_higher_trace: component is not exp(-h^2)");
    auto row = [&](double, int p, int m) {
      return detail::closed_form_row(N, m, rq.points[p].value, rq.points[p].side, rq.variant);
    };
    auto col = [&](double, int q, int m) { return detail::closed_form_col(N, m, rq.points[q].value); };
    CorrelationResult r;
    r.method = rq.method;
    r.variant = rq.variant;
    r.value = detail::determinant_sum(model, N, row, col);
    r.error_estimate = 1e-13 * std::abs(r.value);
    r.metadata["monomials"] = static_cast<double>(model.components.front().q.terms().size());
    return r;
  });
}

// ---------------------------------------------------------------------------------------
// Eigenvalue-integral route (characteristic function, k <= 2).

inline CorrelationResult correlations_eigenvalue_integral(const CorrelationRequest& req) {
  return detail::with_coincidence(req, [](const CorrelationRequest& rq) {
    const int N = rq.spec.N, k = rq.k();
    if (k > kMaxEigenvalueIntegralK) throw ContractViolation("eigenvalue_integral is limited to k <= 2");
    check_selection(rq.spec, k);
    ComponentModel phi = superspace_characteristic_model(rq.spec, k);
    auto row = [&](double beta, int p, int a) {
      return detail::eigenvalue_row(beta, N, a, rq.points[p].value, rq.points[p].side, rq.variant);
    };
    auto col = [&](double beta, int q, int b) { return detail::eigenvalue_col(beta, N, b, rq.points[q].value); };
    CorrelationResult r;
    r.method = rq.method;
    r.variant = rq.variant;
    r.value = detail::determinant_sum(phi, N, row, col);
    r.error_estimate = 1e-13 * std::abs(r.value);
    r.metadata["components"] = static_cast<double>(phi.components.size());
    r.metadata["jet_order"] = N - 1;
    return r;
  });
}

// ---------------------------------------------------------------------------------------
// Factorized characteristic function: Phi(r) = prod phi(r_p1) phi(r_q2).

inline bool factorizes(const EnsembleSpec& spec) { return detail::gaussian_scale_of(spec) > 0.0; }

// Chat(x_p, x_q) = (i L_p / pi) sum_n (1/n!) I_n(x_p) D_n(x_q), with I_n the half-line
// transform of phi and D_n from the Taylor jet of phi. For the canonical Gaussian this is
// exp((x_q^2 - x_p^2) / 2) times the GUE kernel; the factor cancels in determinants.
inline cplx factorized_kernel(const EnsembleSpec& spec, double xp, double xq, int L, CorrelationVariant variant,
                              double rel_tol = 1e-12) {
  if (!factorizes(spec)) throw ContractViolation("factorized kernel needs a factorizing characteristic function");
  const int N = spec.N;
  CharacteristicEvaluator ev(spec, 1);
  auto phi = [&](double r) { return ev.value({r}, {0.0}); };
  TaylorJet jet = TaylorJet::exp_quadratic(-xq, 0.0, N - 1) * ev.jet({0.0}, 0, N - 1);
  const bool full = variant == CorrelationVariant::density;
  cplx pref = full ? cplx(1.0 / (2.0 * std::numbers::pi), 0.0) : cplx(0.0, L / std::numbers::pi);
  cplx s{};
  for (int n = 0; n < N; ++n)
    s += detail::half_line_fourier(n, 0, xp, L, full, ev.min_decay(), phi, rel_tol) * jet.c[n];
  return pref * s;
}

inline CorrelationResult correlations_factorized(const CorrelationRequest& req) {
  return detail::with_coincidence(req, [](const CorrelationRequest& rq) {
    if (!factorizes(rq.spec)) throw ContractViolation("factorized method needs a Gaussian or spike-spread ensemble");
    const int k = rq.k();
    return detail::run_with_error(rq, [&](const QuadratureSettings& s) {
      std::vector<std::vector<cplx>> m(k, std::vector<cplx>(k));
      for (int p = 0; p < k; ++p)
        for (int q = 0; q < k; ++q)
          m[p][q] = factorized_kernel(rq.spec, rq.points[p].value, rq.points[q].value, rq.points[p].side, rq.variant,
                                      s.rel_tol);
      return complex_determinant(m);
    });
  });
}

// ---------------------------------------------------------------------------------------
// Generating function Z_1(x, J) = E det(x + J - H) / det(x - J - i L 0 - H), k = 1.
//
// Boundary term 1 plus the eigenvalue integral against the Ingham-Siegel functional:
// the r2 jet carries (r1^N - (i r2)^N) / (r1 - i r2), exp(-(x + J) r2) and Phi, the r1
// factor exp(-i (x - J) r1). (1/2pi) dZ/dJ at J = 0 is R^_1(x).
inline cplx generating_function_value(const EnsembleSpec& spec, const std::vector<double>& x,
                                      const std::vector<double>& J, const MetricSignature& metric,
                                      double rel_tol = 1e-12) {
  spec.validate();
  if (x.size() != 1 || J.size() != 1 || metric.size() != 1)
    throw ContractViolation("generating_function_value: only k = 1 is implemented");
  if (J[0] == 0.0) return 1.0;
  const int N = spec.N, L = metric[0];
  CharacteristicEvaluator ev(spec, 1);
  IngamSiegelFunctional F{N, 1, metric, KernelVariant::arbitrary_metric};
  const double t1 = x[0] - J[0], t2 = x[0] + J[0];
  const TaylorJet shift = TaylorJet::exp_quadratic(-t2, 0.0, N - 1);
  auto f = [&](double r1) {
    TaylorJet b(N - 1);
    for (int j = 0; j < N; ++j) b.c[j] = std::pow(cplx(0.0, 1.0), N + j) * std::pow(r1, N - 1 - j);
    TaylorJet jet = b * shift * ev.jet({r1}, 0, N - 1);
    return detail::delta_derivative_action(N, jet) * std::exp(cplx(0.0, -t1 * r1));
  };
  const double R = std::sqrt((N + 1.0) / (2.0 * ev.min_decay())) + std::sqrt(60.0 / ev.min_decay());
  cplx I = L > 0 ? integrate(f, 0.0, R, rel_tol, kAbsoluteFloor, 8000).value
                 : integrate(f, -R, 0.0, rel_tol, kAbsoluteFloor, 8000).value;
  const double sgn = N % 2 ? -1.0 : 1.0;
  return 1.0 + sgn * cplx(0.0, J[0] / std::numbers::pi) * F.constant() * I;
}

inline CorrelationResult evaluate_correlation(const CorrelationRequest& req) {
  switch (req.method) {
    case CorrelationMethod::convolution: return correlations_convolution(req);
    case CorrelationMethod::eigenvalue_integral: return correlations_eigenvalue_integral(req);
    case CorrelationMethod::factorized: return correlations_factorized(req);
    case CorrelationMethod::closed_form_gue: return correlations_closed_form_gue(req);
    case CorrelationMethod::closed_form_higher_trace: return correlations_higher_trace(req);
  }
  throw ContractViolation("unknown correlation method");
}

// ---------------------------------------------------------------------------------------
// Time domain, k = 1.
//   r^_1(t) = (2pi)^-1/2 int exp(i t x) R^_1(x) dx = 2i Theta(t) r_1(t)   (L = +1)
//   R_1(x)  = (2pi)^-1/2 int exp(-i x t) r_1(t) dt
//   r_1(t)  = (2pi)^-1/2 E tr exp(i H t)

struct UniformGrid {
  double start = 0.0;
  double step = 1.0;
  std::size_t count = 0;

  static UniformGrid linspace(double lo, double hi, std::size_t count) {
    if (count < 2 || !(hi > lo)) throw ConfigurationError("grid needs lo < hi and at least 2 points");
    return {lo, (hi - lo) / static_cast<double>(count - 1), count};
  }
  double at(std::size_t i) const { return start + step * static_cast<double>(i); }
  double max_abs() const { return std::max(std::abs(start), std::abs(at(count - 1))); }
};

struct GridFunction {
  UniformGrid grid;
  std::vector<cplx> values;
};

enum class TimeTransform { energy_to_time, time_to_energy };

// Large-|x| tail of R^_1 (L = +1): R^_1 ~ (1/pi) sum_j m_j / x^{j+1} with m_j = E tr H^j.
// It is matched by (1/pi) sum_j c_j / (x - i a)^{j+1}, whose transform is exact.
struct ResolventTail {
  std::vector<double> moments;  // m_0 = N, m_1, ...
  double shift = 1.0;           // a

  std::vector<cplx> coefficients() const {
    std::vector<cplx> c(moments.size());
    const cplx ia(0.0, shift);
    for (std::size_t j = 0; j < moments.size(); ++j) {
      c[j] = moments[j];
      for (std::size_t i = 0; i < j; ++i) c[j] -= c[i] * detail::choose(static_cast<int>(j), static_cast<int>(j - i)) *
                                                  std::pow(ia, static_cast<double>(j - i));
    }
    return c;
  }
  cplx energy(double x) const {
    auto c = coefficients();
    cplx s{}, d = 1.0 / cplx(x, -shift);
    cplx p = d;
    for (const auto& cj : c) {
      s += cj * p;
      p *= d;
    }
    return s / std::numbers::pi;
  }
  cplx time(double t) const {
    if (t < 0.0) return 0.0;
    auto c = coefficients();
    cplx s{}, p = 1.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      s += c[j] * p / detail::factorial_d(static_cast<int>(j));
      p *= cplx(0.0, t);
    }
    return cplx(0.0, 2.0) / std::sqrt(2.0 * std::numbers::pi) * std::exp(-shift * t) * s;
  }
};

// Spectral moments E tr H^j, j < count, of the eigenvalue density (exact for the
// Gaussian family, by quadrature of R_1 otherwise).
inline std::vector<double> spectral_moments(const EnsembleSpec& spec, int count) {
  std::vector<double> m(count, 0.0);
  const double scale = detail::gaussian_scale_of(spec);
  if (scale > 0.0) {
    for (int j = 0; j < count; j += 2) {
      // E tr H^j for exp(-tr H^2 / s): Wick moments of the canonical ensemble rescaled.
      if (j == 0) m[j] = spec.N;
      else if (j <= kHigherTraceClosedFormCap) m[j] = higher_trace_moment(spec.N, j, 1) * std::pow(scale, j / 2.0);
      else throw ResourceError("spectral_moments: order above the Wick cap");
    }
    return m;
  }
  for (int j = 0; j < count; ++j) {
    auto f = [&](double x) {
      CorrelationRequest r{spec, {IncrementedPoint(x)}, CorrelationVariant::density,
                           CorrelationMethod::eigenvalue_integral, false};
      return evaluate_correlation(r).value.real() * std::pow(x, j);
    };
    m[j] = integrate(f, -12.0 * std::sqrt(spec.N), 12.0 * std::sqrt(spec.N), 1e-10, 1e-13, 2000).value;
  }
  return m;
}

// Trapezoid Fourier sums on uniform grids (the sampled function must have decayed at
// the grid ends). energy_to_time uses exp(+i t x), time_to_energy exp(-i x t). A tail
// model, if given, is subtracted in energy and added back analytically in time.
inline GridFunction time_domain_transform(const GridFunction& in, TimeTransform direction, const UniformGrid& out,
                                          const std::optional<ResolventTail>& tail = std::nullopt) {
  if (in.values.size() != in.grid.count || in.grid.count < 2) throw ContractViolation("time_domain_transform: samples");
  if (out.max_abs() * in.grid.step >= std::numbers::pi)
    throw ConfigurationError("time_domain_transform: input spacing " + std::to_string(in.grid.step) +
                             " does not resolve output range " + std::to_string(out.max_abs()) +
                             " (need spacing * range < pi)");
  if (tail && direction != TimeTransform::energy_to_time)
    throw ContractViolation("time_domain_transform: tail model applies to energy_to_time");
  const double sgn = direction == TimeTransform::energy_to_time ? 1.0 : -1.0;
  std::vector<cplx> f(in.values);
  if (tail)
    for (std::size_t i = 0; i < f.size(); ++i) f[i] -= tail->energy(in.grid.at(i));
  f.front() *= 0.5;
  f.back() *= 0.5;
  GridFunction g{out, std::vector<cplx>(out.count)};
  const double c = in.grid.step / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t j = 0; j < out.count; ++j) {
    const double w = out.at(j);
    // exp(i s w x_i) by rotation; re-seeded every 256 steps to bound drift.
    cplx s{}, e, rot = std::exp(cplx(0.0, sgn * w * in.grid.step));
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i % 256 == 0) e = std::exp(cplx(0.0, sgn * w * in.grid.at(i)));
      s += f[i] * e;
      e *= rot;
    }
    g.values[j] = c * s;
    if (tail) g.values[j] += tail->time(w);
  }
  return g;
}

// r_1(t) of the Gaussian family exp(-tr H^2 / s): exp(-s t^2/4) L^(1)_{N-1}(s t^2/2) / sqrt(2pi).
inline double gaussian_time_correlation(int N, double t, double scale = 1.0) {
  if (N < 1) throw ContractViolation("gaussian_time_correlation: N >= 1");
  const double u = scale * t * t;
  return std::exp(-u / 4.0) * std::assoc_laguerre(static_cast<unsigned>(N - 1), 1u, u / 2.0) /
         std::sqrt(2.0 * std::numbers::pi);
}

// R^_1(x) for side L from r_1: (2pi)^-1/2 int exp(-i x t) (2 i^L) Theta(L t) r_1(t) dt.
inline cplx resolvent_from_time(const std::function<cplx(double)>& r1, double x, int L, double extent,
                                double rel_tol = 1e-12) {
  if (L != 1 && L != -1) throw ContractViolation("resolvent_from_time: L must be +1 or -1");
  auto f = [&](double t) { return std::exp(cplx(0.0, -x * t)) * r1(t); };
  cplx I = L > 0 ? integrate(f, 0.0, extent, rel_tol, 1e-15, 8000).value
                 : integrate(f, -extent, 0.0, rel_tol, 1e-15, 8000).value;
  return cplx(0.0, 2.0 * L) * I / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace rmtsusy
