#pragma once

// Rotation-invariant ensembles P(H): Gaussian, norm-dependent (variance mixtures) and
// higher-trace. Every family is reduced to a finite list of Gaussian-times-polynomial
// components for the reduced density P^(red)(h) of the 2k selected diagonal entries,
//   P^(red)(h) = sum_c exp(-alpha_c |h|^2) Q_c(h),
// and of the characteristic function Phi(r) = E exp(i sum_p h_p r_p1 + i sum_q h'_q r_q2),
//   Phi(r) = sum_c exp(-beta_c |r|^2) Qt_c(r),  beta_c = 1/(4 alpha_c).
// Variables are ordered (h_1 .. h_k, h'_1 .. h'_k), likewise (r_11 .. r_k1, r_12 .. r_k2).
//
// Scale conventions. The canonical density is exp(-tr H^2) (diagonal variance 1/2).
// Gaussian{scale}: exp(-tr H^2 / scale). A spread variance t means exp(-tr H^2 / (2t)),
// i.e. scale = 2t.

#include <rmtsusy/errors.hpp>
#include <rmtsusy/polynomial.hpp>
#include <rmtsusy/quadrature.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <unordered_map>
#include <variant>
#include <vector>

namespace rmtsusy {

using cplx = std::complex<double>;

inline constexpr const char* kScaleConvention = "P(H)~exp(-trH^2/scale);scale=1<->exp(-trH^2);variance t<->scale=2t";

struct GaussianFamily {
  double scale = 1.0;
};

// One term of a spread: weight * d^order/dt^order [Gaussian of variance t] at t = t0.
// Continuous spreads are discretized into order-0 terms; a distributional spread is a
// finite sum with orders <= 2 and need not be a nonnegative density.
struct SpreadTerm {
  double t0 = 1.0;
  int order = 0;
  double weight = 1.0;
};

struct SpreadFunction {
  enum class Kind { spike, tabulated, gamma, callable, distributional };
  Kind kind = Kind::spike;
  double t0 = 1.0;                  // spike
  std::vector<double> t, f;         // tabulated, trapezoidal (piecewise linear) interpolation
  double shape = 1.0, scale = 1.0;  // gamma
  std::function<double(double)> fn;  // callable on [t_lo, t_hi]
  double t_lo = 0.0, t_hi = 0.0;
  std::vector<SpreadTerm> terms;  // distributional
  int panels = 48;                // Gauss-Legendre panels for continuous spreads

  static SpreadFunction spike(double t0) {
    SpreadFunction s;
    s.kind = Kind::spike;
    s.t0 = t0;
    return s;
  }
  static SpreadFunction tabulated(std::vector<double> t, std::vector<double> f) {
    SpreadFunction s;
    s.kind = Kind::tabulated;
    s.t = std::move(t);
    s.f = std::move(f);
    return s;
  }
  static SpreadFunction gamma(double shape, double scale) {
    SpreadFunction s;
    s.kind = Kind::gamma;
    s.shape = shape;
    s.scale = scale;
    return s;
  }
  static SpreadFunction callable(std::function<double(double)> fn, double lo, double hi) {
    SpreadFunction s;
    s.kind = Kind::callable;
    s.fn = std::move(fn);
    s.t_lo = lo;
    s.t_hi = hi;
    return s;
  }
  static SpreadFunction distributional(std::vector<SpreadTerm> terms) {
    SpreadFunction s;
    s.kind = Kind::distributional;
    s.terms = std::move(terms);
    return s;
  }

  std::string kind_name() const {
    switch (kind) {
      case Kind::spike: return "spike";
      case Kind::tabulated: return "tabulated";
      case Kind::gamma: return "gamma";
      case Kind::callable: return "callable";
      case Kind::distributional: return "distributional";
    }
    return "?";
  }

  // Pointwise density for the continuous kinds.
  double density(double x) const {
    switch (kind) {
      case Kind::tabulated: {
        if (x < t.front() || x > t.back()) return 0.0;
        auto it = std::upper_bound(t.begin(), t.end(), x);
        if (it == t.end()) return f.back();
        std::size_t i = static_cast<std::size_t>(it - t.begin());
        double w = (x - t[i - 1]) / (t[i] - t[i - 1]);
        return (1.0 - w) * f[i - 1] + w * f[i];
      }
      case Kind::gamma:
        if (x <= 0.0) return 0.0;
        return std::exp((shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) -
                        shape * std::log(scale));
      case Kind::callable:
        return (x < t_lo || x > t_hi) ? 0.0 : fn(x);
      default:
        throw ContractViolation("SpreadFunction::density: not a continuous spread");
    }
  }

  // Support used for discretization of the continuous kinds.
  std::pair<double, double> support() const {
    switch (kind) {
      case Kind::tabulated: return {t.front(), t.back()};
      case Kind::gamma: {
        double hi = scale * (shape + 14.0 * std::sqrt(shape) + 40.0);
        return {0.0, hi};
      }
      case Kind::callable: return {t_lo, t_hi};
      default: return {t0, t0};
    }
  }

  void validate() const {
    switch (kind) {
      case Kind::spike:
        if (!(t0 > 0.0)) throw ConfigurationError("spike spread: t0 must be positive");
        break;
      case Kind::tabulated:
        if (t.size() < 2 || t.size() != f.size())
          throw ConfigurationError("tabulated spread: need >= 2 (t, f) pairs of equal length");
        for (std::size_t i = 0; i < t.size(); ++i) {
          if (!(t[i] > 0.0)) throw ConfigurationError("tabulated spread: t must be positive");
          if (i > 0 && !(t[i] > t[i - 1]))
            throw ConfigurationError("tabulated spread: t must be strictly increasing");
          if (!(f[i] >= 0.0)) throw ConfigurationError("tabulated spread: f must be nonnegative");
        }
        break;
      case Kind::gamma:
        if (!(shape >= 1.0) || !(scale > 0.0))
          throw ConfigurationError("gamma spread: need shape >= 1 and scale > 0");
        break;
      case Kind::callable:
        if (!fn || !(t_lo > 0.0) || !(t_hi > t_lo))
          throw ConfigurationError("callable spread: need a function on 0 < t_lo < t_hi");
        break;
      case Kind::distributional:
        if (terms.empty()) throw ConfigurationError("distributional spread: no terms");
        for (const auto& s : terms) {
          if (!(s.t0 > 0.0)) throw ConfigurationError("distributional spread: t0 must be positive");
          if (s.order < 0 || s.order > 2)
            throw ConfigurationError("distributional spread: derivative order must be 0, 1 or 2");
        }
        break;
    }
    if (panels < 1) throw ConfigurationError("spread: panels must be >= 1");
    double total = 0.0;
    for (const auto& s : discretize())
      if (s.order == 0) total += s.weight;
    if (std::abs(total - 1.0) > 1e-6)
      throw ConfigurationError("spread function integrates to " + std::to_string(total) +
                               ", expected 1 within 1e-6");
  }

  std::vector<SpreadTerm> discretize() const {
    switch (kind) {
      case Kind::spike: return {{t0, 0, 1.0}};
      case Kind::distributional: return terms;
      default: break;
    }
    const auto& gl = gauss_legendre(8);
    std::vector<SpreadTerm> out;
    auto add_panel = [&](double a, double b) {
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        double x = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i];
        double w = 0.5 * (b - a) * gl.weights[i] * density(x);
        if (w != 0.0) out.push_back({x, 0, w});
      }
    };
    if (kind == Kind::tabulated) {
      // f is linear on each segment; split segments so the total panel count is ~panels.
      int per = std::max(1, panels / static_cast<int>(t.size() - 1));
      for (std::size_t i = 0; i + 1 < t.size(); ++i)
        for (int j = 0; j < per; ++j)
          add_panel(t[i] + (t[i + 1] - t[i]) * j / per, t[i] + (t[i + 1] - t[i]) * (j + 1) / per);
    } else {
      // Quadratic grading resolves the small-t region, where exp(-S/(2t)) varies fastest.
      auto [a, b] = support();
      auto edge = [&, a = a, b = b](int j) {
        double u = static_cast<double>(j) / panels;
        return kind == Kind::gamma ? a + (b - a) * u * u : a + (b - a) * u;
      };
      for (int j = 0; j < panels; ++j) add_panel(edge(j), edge(j + 1));
    }
    return out;
  }
};

struct NormDependentFamily {
  SpreadFunction spread;
};

struct HigherTraceFamily {
  int M1 = 0, M2 = 0;
  std::optional<double> b;  // nullopt = "auto"
};

inline constexpr int kHigherTraceClosedFormCap = 8;  // M1 * M2

struct EnsembleSpec {
  int N = 1;
  std::variant<GaussianFamily, NormDependentFamily, HigherTraceFamily> family = GaussianFamily{};

  static EnsembleSpec gaussian(int N, double scale = 1.0) { return {N, GaussianFamily{scale}}; }
  static EnsembleSpec norm_dependent(int N, SpreadFunction f) { return {N, NormDependentFamily{std::move(f)}}; }
  static EnsembleSpec higher_trace(int N, int M1, int M2, std::optional<double> b = std::nullopt) {
    return {N, HigherTraceFamily{M1, M2, b}};
  }

  std::string family_name() const {
    return std::visit(
        [](const auto& f) -> std::string {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, GaussianFamily>) return "gaussian";
          else if constexpr (std::is_same_v<T, NormDependentFamily>) return "norm_dependent";
          else return "higher_trace";
        },
        family);
  }

  bool is_gaussian() const { return std::holds_alternative<GaussianFamily>(family); }
  bool is_norm_dependent() const { return std::holds_alternative<NormDependentFamily>(family); }
  bool is_higher_trace() const { return std::holds_alternative<HigherTraceFamily>(family); }

  // Higher-trace with M1 = 0 or M2 = 0 is the canonical Gaussian.
  bool effectively_gaussian() const {
    if (is_gaussian()) return true;
    if (auto* h = std::get_if<HigherTraceFamily>(&family)) return h->M1 == 0 || h->M2 == 0;
    return false;
  }

  void validate() const;
};

namespace detail {

// log of the normalization of exp(-tr H^2 / scale) over N x N Hermitean matrices.
inline double log_gaussian_normalization(int N, double scale) {
  const double pi = std::numbers::pi;
  return 0.5 * N * N * std::log(scale) + 0.5 * N * std::log(pi) +
         0.5 * N * (N - 1) * std::log(pi / 2.0);
}

// g_t(S) = t^{-d/2} exp(-S/(2t)) up to t-independent factors; returns the factor F with
// d^order/dt^order g_t = g_t * F(S, t).
inline double gaussian_t_derivative_factor(int order, double d, double t, double S) {
  double u = -d / (2.0 * t) + S / (2.0 * t * t);
  if (order == 0) return 1.0;
  if (order == 1) return u;
  double du = d / (2.0 * t * t) - S / (t * t * t);
  return u * u + du;
}

// Same factor as a polynomial in S: coefficients of S^0, S^1, S^2.
inline std::array<double, 3> gaussian_t_derivative_poly(int order, double d, double t) {
  if (order == 0) return {1.0, 0.0, 0.0};
  double a = -d / (2.0 * t), b = 1.0 / (2.0 * t * t);
  if (order == 1) return {a, b, 0.0};
  // (a + b S)^2 + d/(2t^2) - S/t^3
  return {a * a + d / (2.0 * t * t), 2.0 * a * b - 1.0 / (t * t * t), b * b};
}

inline double double_factorial_moment(int d) {
  // E[X^d] for X ~ N(0, 1/2)
  if (d % 2) return 0.0;
  double v = 1.0;
  for (int j = d - 1; j > 0; j -= 2) v *= j;
  return v * std::pow(0.5, d / 2);
}

}  // namespace detail

// E_G[(tr H^{M1})^{M2} | H_11 .. H_nsel,nsel] under exp(-tr H^2), as a polynomial in the
// nsel fixed diagonal entries. Exact Wick/Isserlis contraction over index sequences.
inline MultiPoly wick_trace_power_moment(int N, int M1, int M2, int nsel) {
  const int L = M1 * M2;
  if (L > kHigherTraceClosedFormCap)
    throw ResourceError("higher-trace closed form limited to M1*M2 <= 8");
  if (nsel > N) throw ContractViolation("wick_trace_power_moment: more fixed entries than N");
  MultiPoly out(nsel);
  if (L == 0) {
    out.add(Exponents(nsel, 0), std::pow(static_cast<double>(N), M2));
    return out;
  }
  std::vector<int> idx(L, 0);
  std::vector<int> diag(N), off(N * N);
  std::unordered_map<std::uint64_t, double> acc;
  while (true) {
    std::fill(diag.begin(), diag.end(), 0);
    std::fill(off.begin(), off.end(), 0);
    for (int f = 0; f < M2; ++f)
      for (int s = 0; s < M1; ++s) {
        int a = idx[f * M1 + s], b = idx[f * M1 + (s + 1) % M1];
        if (a == b) ++diag[a];
        else ++off[a * N + b];
      }
    double w = 1.0;
    for (int a = 0; a < N && w != 0.0; ++a)
      for (int b = a + 1; b < N; ++b) {
        int c = off[a * N + b];
        if (c != off[b * N + a]) {
          w = 0.0;
          break;
        }
        if (c) w *= std::tgamma(c + 1.0) * std::pow(0.5, c);
      }
    for (int a = nsel; a < N && w != 0.0; ++a) w *= detail::double_factorial_moment(diag[a]);
    if (w != 0.0) {
      std::uint64_t key = 0;
      for (int a = 0; a < nsel; ++a) key = key * 16 + static_cast<std::uint64_t>(diag[a]);
      acc[key] += w;
    }
    int pos = L - 1;
    while (pos >= 0 && ++idx[pos] == N) idx[pos--] = 0;
    if (pos < 0) break;
  }
  for (const auto& [key, w] : acc) {
    Exponents e(nsel);
    std::uint64_t k = key;
    for (int a = nsel - 1; a >= 0; --a) {
      e[a] = static_cast<int>(k % 16);
      k /= 16;
    }
    out.add(e, w);
  }
  return out;
}

// E_G[(tr H^{M1})^{M2}] under exp(-tr H^2).
inline double higher_trace_moment(int N, int M1, int M2) {
  return wick_trace_power_moment(N, M1, M2, 0)(std::vector<double>{}).real();
}

inline void EnsembleSpec::validate() const {
  if (N < 1) throw ConfigurationError("ensemble: N must be >= 1");
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GaussianFamily>) {
          if (!(f.scale > 0.0)) throw ConfigurationError("gaussian: scale must be positive");
        } else if constexpr (std::is_same_v<T, NormDependentFamily>) {
          f.spread.validate();
        } else {
          if (f.M1 < 0 || f.M2 < 0) throw ConfigurationError("higher_trace: M1, M2 must be >= 0");
          if (f.M1 == 1 && f.M2 == 1)
            throw ConfigurationError("higher_trace: M1 = M2 = 1 makes the normalization vanish");
          if (f.M1 % 2 != 0 && f.M2 % 2 != 0)
            throw ConfigurationError("higher_trace: (tr H^M1)^M2 must be nonnegative; need M1 or M2 even");
          if (f.b && !(*f.b > 0.0)) throw ConfigurationError("higher_trace: b must be positive");
        }
      },
      family);
}

// Normalization constant b of b (tr H^{M1})^{M2} exp(-tr H^2). Exact (Wick) within the
// closed-form cap, otherwise a weighted Monte Carlo estimate over GUE samples (1e6,
// fixed seed); the relative standard error is returned alongside.
struct NormalizationEstimate {
  double b = 0.0;
  double relative_error = 0.0;
  bool exact = true;
};

NormalizationEstimate higher_trace_normalization(int N, int M1, int M2);

// ---------------------------------------------------------------------------------------
// Component models

struct GaussianComponent {
  double alpha = 1.0;  // exp(-alpha |x|^2), or beta for characteristic-function components
  MultiPoly q;
};

struct ComponentModel {
  int k = 1;
  std::vector<GaussianComponent> components;

  int nvars() const { return 2 * k; }

  cplx operator()(const std::vector<double>& x) const {
    double s2 = 0.0;
    for (double v : x) s2 += v * v;
    cplx s{};
    for (const auto& c : components) s += std::exp(-c.alpha * s2) * c.q(x);
    return s;
  }

  // One component with a constant polynomial: the Gaussian factorizes over variables.
  bool is_single_gaussian() const {
    if (components.size() != 1) return false;
    const auto& t = components[0].q.terms();
    return t.size() == 1 && std::all_of(t.begin()->first.begin(), t.begin()->first.end(),
                                        [](int e) { return e == 0; });
  }
};

namespace detail {

inline void merge_component(ComponentModel& m, double alpha, MultiPoly q) {
  for (auto& c : m.components)
    if (c.alpha == alpha) {
      c.q += q;
      return;
    }
  m.components.push_back({alpha, std::move(q)});
}

// Weighted Gaussian of variance t in n = 2k variables with t-derivative order o.
inline void add_variance_term(ComponentModel& m, const SpreadTerm& s) {
  const int n = m.nvars();
  const double t = s.t0;
  const double c = s.weight * std::pow(2.0 * std::numbers::pi * t, -0.5 * n);
  auto poly = gaussian_t_derivative_poly(s.order, n, t);
  MultiPoly q(n);
  for (int p = 0; p < 3; ++p) {
    if (poly[p] == 0.0) continue;
    MultiPoly term = power_of_square_norm(n, p);
    term *= c * poly[p];
    q += term;
  }
  merge_component(m, 1.0 / (2.0 * t), std::move(q));
}

}  // namespace detail

inline void check_selection(const EnsembleSpec& spec, int k) {
  if (k < 1) throw ContractViolation("k must be >= 1");
  if (2 * k > spec.N)
    throw ContractViolation("reduced density needs 2k <= N (k = " + std::to_string(k) +
                            ", N = " + std::to_string(spec.N) + ")");
}

// Reduced density of the 2k selected diagonal entries as Gaussian components.
inline ComponentModel reduced_model(const EnsembleSpec& spec, int k) {
  spec.validate();
  check_selection(spec, k);
  ComponentModel m;
  m.k = k;
  const int n = 2 * k;
  if (spec.effectively_gaussian()) {
    double scale = spec.is_gaussian() ? std::get<GaussianFamily>(spec.family).scale : 1.0;
    double alpha = 1.0 / scale;
    m.components.push_back({alpha, MultiPoly::constant(n, std::pow(alpha / std::numbers::pi, 0.5 * n))});
  } else if (auto* nd = std::get_if<NormDependentFamily>(&spec.family)) {
    for (const auto& s : nd->spread.discretize()) detail::add_variance_term(m, s);
  } else {
    const auto& h = std::get<HigherTraceFamily>(spec.family);
    MultiPoly q = wick_trace_power_moment(spec.N, h.M1, h.M2, n);
    q *= std::pow(std::numbers::pi, -0.5 * n) / higher_trace_moment(spec.N, h.M1, h.M2);
    m.components.push_back({1.0, std::move(q)});
  }
  return m;
}

// Fourier transform of a reduced model: Phi(r) = int P^(red)(h) exp(i h.r) dh.
inline ComponentModel characteristic_model(const ComponentModel& red) {
  ComponentModel out;
  out.k = red.k;
  const int n = red.nvars();
  for (const auto& c : red.components) {
    const double beta = 1.0 / (4.0 * c.alpha);
    const double g = std::sqrt(std::numbers::pi / c.alpha);
    MultiPoly q(n);
    std::map<int, std::vector<double>> dpoly;
    for (const auto& [e, coef] : c.q.terms()) {
      MultiPoly term = MultiPoly::constant(n, coef * std::pow(g, n));
      for (int j = 0; j < n; ++j) {
        if (e[j] == 0) continue;
        auto it = dpoly.find(e[j]);
        if (it == dpoly.end()) it = dpoly.emplace(e[j], gaussian_derivative_poly(e[j], beta)).first;
        MultiPoly factor(n);
        cplx ph = std::pow(cplx(0.0, -1.0), e[j]);
        for (std::size_t d = 0; d < it->second.size(); ++d) {
          if (it->second[d] == 0.0) continue;
          Exponents ex(n, 0);
          ex[j] = static_cast<int>(d);
          factor.add(ex, ph * it->second[d]);
        }
        term = term * factor;
      }
      q += term;
    }
    detail::merge_component(out, beta, std::move(q));
  }
  return out;
}

inline ComponentModel characteristic_model(const EnsembleSpec& spec, int k) {
  return characteristic_model(reduced_model(spec, k));
}

// E_G[(tr (H + A)^{M1})^{M2}] under exp(-tr H^2) as a polynomial in the power sums
// p_j = tr A^j (j >= 1). Keys are the sorted parts of each monomial; N enters through
// index loops that carry no A. Exact Wick contraction with A taken diagonal.
inline std::map<std::vector<int>, double> shifted_trace_power_expansion(int N, int M1, int M2) {
  const int L = M1 * M2;
  if (L > kHigherTraceClosedFormCap) throw ResourceError("higher-trace closed form limited to M1*M2 <= 8");
  std::map<std::vector<int>, double> out;
  if (L == 0) {
    out[{}] = std::pow(static_cast<double>(N), M2);
    return out;
  }
  auto next = [&](int l) { return (l / M1) * M1 + (l % M1 + 1) % M1; };
  std::vector<int> parent(L);
  std::function<int(int)> find = [&](int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
  for (unsigned word = 0; word < (1u << L); ++word) {
    std::vector<int> hs;
    for (int l = 0; l < L; ++l)
      if (!(word >> l & 1u)) hs.push_back(l);
    if (hs.size() % 2) continue;
    // Walk all perfect matchings of the H positions.
    std::vector<int> mate(L, -1);
    std::function<void()> rec = [&]() {
      int first = -1;
      for (int l : hs)
        if (mate[l] < 0) {
          first = l;
          break;
        }
      if (first < 0) {
        for (int l = 0; l < L; ++l) parent[l] = l;
        for (int l = 0; l < L; ++l) {
          if (word >> l & 1u) parent[find(l)] = find(next(l));
          else if (mate[l] > l) {
            parent[find(l)] = find(next(mate[l]));
            parent[find(next(l))] = find(mate[l]);
          }
        }
        std::map<int, int> count;
        for (int l = 0; l < L; ++l) count[find(l)] += 0;
        for (int l = 0; l < L; ++l)
          if (word >> l & 1u) ++count[find(l)];
        std::vector<int> parts;
        int empty = 0;
        for (const auto& [root, c] : count) {
          if (c) parts.push_back(c);
          else ++empty;
        }
        std::sort(parts.begin(), parts.end());
        out[parts] += std::pow(0.5, hs.size() / 2) * std::pow(static_cast<double>(N), empty);
        return;
      }
      for (int l : hs)
        if (l != first && mate[l] < 0) {
          mate[first] = l;
          mate[l] = first;
          rec();
          mate[first] = mate[l] = -1;
        }
    };
    rec();
  }
  return out;
}

// Characteristic function used by the superspace correlation engine. Gaussian and
// norm-dependent families depend on tr K^2 only, so the ordinary transform carries over.
// The higher-trace Phi(K) = exp(-tr K^2 / 4) E_G[(tr (H - iK/2)^{M1})^{M2}] / E_G[...] is
// continued through the supertraces str K^j = sum_p r_p1^j - sum_p (i r_p2)^j. Continuing
// the transform of the ordinary 2k-entry reduced density instead gives wrong correlations.
inline ComponentModel superspace_characteristic_model(const EnsembleSpec& spec, int k) {
  spec.validate();
  if (!spec.is_higher_trace()) return characteristic_model(reduced_model(spec, k));
  if (k < 1 || k > spec.N) throw ContractViolation("superspace model needs 1 <= k <= N");
  const auto& h = std::get<HigherTraceFamily>(spec.family);
  const auto expansion = shifted_trace_power_expansion(spec.N, h.M1, h.M2);
  const int n = 2 * k;
  std::map<int, MultiPoly> str;
  auto supertrace = [&](int j) -> const MultiPoly& {
    auto it = str.find(j);
    if (it != str.end()) return it->second;
    MultiPoly p(n);
    const cplx a = std::pow(cplx(0.0, -0.5), j);  // A = -iK/2
    for (int q = 0; q < k; ++q) {
      Exponents e(n, 0);
      e[q] = j;
      p.add(e, a);
      e[q] = 0;
      e[k + q] = j;
      p.add(e, -a * std::pow(cplx(0.0, 1.0), j));
    }
    return str.emplace(j, std::move(p)).first->second;
  };
  const double norm = expansion.count({}) ? expansion.at({}) : 0.0;
  if (norm == 0.0) throw ConfigurationError("higher_trace: vanishing normalization");
  MultiPoly q(n);
  for (const auto& [parts, c] : expansion) {
    MultiPoly term = MultiPoly::constant(n, c / norm);
    for (int j : parts) term = term * supertrace(j);
    q += term;
  }
  ComponentModel out;
  out.k = k;
  out.components.push_back({0.25, std::move(q)});
  return out;
}

// Inverse of characteristic_model: P(h) = (2 pi)^{-2k} int Phi(r) exp(-i h.r) dr.
inline ComponentModel reduced_from_characteristic(const ComponentModel& phi) {
  ComponentModel out;
  out.k = phi.k;
  const int n = phi.nvars();
  for (const auto& c : phi.components) {
    const double alpha = 1.0 / (4.0 * c.alpha);
    const double g = std::sqrt(std::numbers::pi / c.alpha) / (2.0 * std::numbers::pi);
    MultiPoly q(n);
    std::map<int, std::vector<double>> dpoly;
    for (const auto& [e, coef] : c.q.terms()) {
      MultiPoly term = MultiPoly::constant(n, coef * std::pow(g, n));
      for (int j = 0; j < n; ++j) {
        if (e[j] == 0) continue;
        auto it = dpoly.find(e[j]);
        if (it == dpoly.end()) it = dpoly.emplace(e[j], gaussian_derivative_poly(e[j], alpha)).first;
        MultiPoly factor(n);
        cplx ph = std::pow(cplx(0.0, 1.0), e[j]);
        for (std::size_t d = 0; d < it->second.size(); ++d) {
          if (it->second[d] == 0.0) continue;
          Exponents ex(n, 0);
          ex[j] = static_cast<int>(d);
          factor.add(ex, ph * it->second[d]);
        }
        term = term * factor;
      }
      q += term;
    }
    detail::merge_component(out, alpha, std::move(q));
  }
  return out;
}

// Position-space counterpart of superspace_characteristic_model (the convolution weight).
inline ComponentModel superspace_model(const EnsembleSpec& spec, int k) {
  if (!spec.is_higher_trace()) return reduced_model(spec, k);
  return reduced_from_characteristic(superspace_characteristic_model(spec, k));
}

// ---------------------------------------------------------------------------------------
// Pointwise densities

inline bool is_hermitean(const Eigen::MatrixXcd& H, double tol = 1e-12) {
  double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  return (H - H.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

namespace detail {

inline double trace_power(const Eigen::MatrixXcd& H, int m) {
  if (m == 0) return static_cast<double>(H.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (int i = 0; i < H.rows(); ++i) s += std::pow(es.eigenvalues()[i], m);
  return s;
}

}  // namespace detail

// P(H) including normalization.
inline double evaluate_density(const EnsembleSpec& spec, const Eigen::MatrixXcd& H) {
  spec.validate();
  if (H.rows() != spec.N || H.cols() != spec.N) throw ContractViolation("evaluate_density: H must be N x N");
  if (!is_hermitean(H)) throw ContractViolation("evaluate_density: H is not Hermitean");
  const int N = spec.N;
  const double S = (H * H).trace().real();
  if (spec.effectively_gaussian()) {
    double scale = spec.is_gaussian() ? std::get<GaussianFamily>(spec.family).scale : 1.0;
    return std::exp(-S / scale - detail::log_gaussian_normalization(N, scale));
  }
  if (auto* nd = std::get_if<NormDependentFamily>(&spec.family)) {
    double v = 0.0;
    for (const auto& s : nd->spread.discretize()) {
      double g = std::exp(-S / (2.0 * s.t0) - detail::log_gaussian_normalization(N, 2.0 * s.t0));
      v += s.weight * g * detail::gaussian_t_derivative_factor(s.order, N * N, s.t0, S);
    }
    return v;
  }
  const auto& h = std::get<HigherTraceFamily>(spec.family);
  double b = h.b ? *h.b : higher_trace_normalization(N, h.M1, h.M2).b;
  return b * std::pow(detail::trace_power(H, h.M1), h.M2) * std::exp(-S);
}

// ---------------------------------------------------------------------------------------
// Characteristic function

struct CharacteristicValue {
  cplx value;                    // Phi(r1, r2 = 0)
  std::vector<TaylorJet> jets;   // jets[q]: expansion in r_q2 at 0, other r2 held at 0
};

// Phi(r1, r2) for all families. NormDependent and Gaussian are evaluated from the
// variance representation exp(-(t/2) trg r^2) directly, the higher-trace family from
// its supertrace continuation.
inline cplx characteristic_value(const EnsembleSpec& spec, const std::vector<double>& r1,
                                 const std::vector<double>& r2) {
  spec.validate();
  const int k = static_cast<int>(r1.size());
  if (r2.size() != r1.size()) throw ContractViolation("characteristic_value: r1 and r2 sizes");
  double S = 0.0;
  for (double v : r1) S += v * v;
  for (double v : r2) S += v * v;
  if (spec.effectively_gaussian()) {
    double scale = spec.is_gaussian() ? std::get<GaussianFamily>(spec.family).scale : 1.0;
    return std::exp(-scale * S / 4.0);
  }
  if (auto* nd = std::get_if<NormDependentFamily>(&spec.family)) {
    double v = 0.0;
    for (const auto& s : nd->spread.discretize())
      v += s.weight * std::pow(-S / 2.0, s.order) * std::exp(-s.t0 * S / 2.0);
    return v;
  }
  std::vector<double> r(r1);
  r.insert(r.end(), r2.begin(), r2.end());
  return superspace_characteristic_model(spec, k)(r);
}

// Jet of a component model along r_q2 with r1 fixed and the other r2 at 0.
inline TaylorJet component_jet(const ComponentModel& phi, const std::vector<double>& r1, int q, int order) {
  const int k = phi.k;
  double s1 = 0.0;
  for (double v : r1) s1 += v * v;
  TaylorJet out(order);
  for (const auto& c : phi.components) {
    TaylorJet g = TaylorJet::exp_quadratic(0.0, -c.alpha, order);
    std::map<int, cplx> by_power;
    for (const auto& [e, coef] : c.q.terms()) {
      bool other = false;
      for (int j = 0; j < k; ++j)
        if (j != q && e[k + j] != 0) other = true;
      if (other) continue;
      cplx m = coef;
      for (int p = 0; p < k; ++p)
        if (e[p]) m *= std::pow(r1[p], e[p]);
      by_power[e[k + q]] += m;
    }
    TaylorJet poly(order);
    for (const auto& [pw, v] : by_power)
      if (pw <= order) poly.c[pw] += v;
    TaylorJet t = poly * g;
    t *= std::exp(-c.alpha * s1);
    out += t;
  }
  return out;
}

// Precomputed evaluator for repeated jets (the higher-trace model needs a Wick
// enumeration once per k).
class CharacteristicEvaluator {
 public:
  CharacteristicEvaluator(const EnsembleSpec& spec, int k) : spec_(spec), k_(k) {
    spec.validate();
    if (spec.effectively_gaussian()) {
      double scale = spec.is_gaussian() ? std::get<GaussianFamily>(spec.family).scale : 1.0;
      terms_.push_back({scale / 2.0, 0, 1.0});
    } else if (spec.is_norm_dependent()) {
      terms_ = std::get<NormDependentFamily>(spec.family).spread.discretize();
    } else {
      model_ = superspace_characteristic_model(spec, k);
    }
  }

  int k() const { return k_; }

  // Smallest Gaussian decay rate b in exp(-b r^2) over all components.
  double min_decay() const {
    double b = std::numeric_limits<double>::infinity();
    if (model_)
      for (const auto& c : model_->components) b = std::min(b, c.alpha);
    for (const auto& s : terms_) b = std::min(b, s.t0 / 2.0);
    return b;
  }

  cplx value(const std::vector<double>& r1, const std::vector<double>& r2) const {
    if (static_cast<int>(r1.size()) != k_ || r2.size() != r1.size())
      throw ContractViolation("CharacteristicEvaluator: need k entries in r1 and r2");
    if (!model_) {
      double S = 0.0;
      for (double v : r1) S += v * v;
      for (double v : r2) S += v * v;
      double v = 0.0;
      for (const auto& s : terms_) v += s.weight * std::pow(-S / 2.0, s.order) * std::exp(-s.t0 * S / 2.0);
      return v;
    }
    std::vector<double> r(r1);
    r.insert(r.end(), r2.begin(), r2.end());
    return (*model_)(r);
  }

  // Expansion in r_q2 at 0 with r1 fixed and the other r2 at 0.
  TaylorJet jet(const std::vector<double>& r1, int q, int order) const {
    if (order < 0 || order > 64) throw ContractViolation("characteristic jet: order cap 64");
    if (static_cast<int>(r1.size()) != k_ || q < 0 || q >= k_)
      throw ContractViolation("characteristic jet: bad r1 size or index");
    if (model_) return component_jet(*model_, r1, q, order);
    // Variance form: exp(-(t/2)(|r1|^2 + r^2)) and its t-derivatives, exact in r.
    double s1 = 0.0;
    for (double v : r1) s1 += v * v;
    TaylorJet out(order);
    for (const auto& s : terms_) {
      TaylorJet p(order), base(order);
      p.c[0] = 1.0;
      base.c[0] = -s1 / 2.0;  // -S/2 with S = s1 + r^2
      if (order >= 2) base.c[2] = -0.5;
      for (int o = 0; o < s.order; ++o) p = p * base;
      TaylorJet t = p * TaylorJet::exp_quadratic(0.0, -s.t0 / 2.0, order);
      t *= s.weight * std::exp(-s.t0 * s1 / 2.0);
      out += t;
    }
    return out;
  }

 private:
  EnsembleSpec spec_;
  int k_;
  std::vector<SpreadTerm> terms_;
  std::optional<ComponentModel> model_;
};

inline CharacteristicValue characteristic_function(const EnsembleSpec& spec, const std::vector<double>& r1,
                                                   int r2_jet_order) {
  const int k = static_cast<int>(r1.size());
  CharacteristicEvaluator ev(spec, k);
  CharacteristicValue out;
  out.value = ev.value(r1, std::vector<double>(k, 0.0));
  for (int q = 0; q < k; ++q) out.jets.push_back(ev.jet(r1, q, r2_jet_order));
  return out;
}

// ---------------------------------------------------------------------------------------
// Superspace density of a norm-dependent ensemble

// Q(s) = int f(t) 2^{k(k-1)} exp(-trg s^2 / (2t)) dt, trg s^2 = sum s_p1^2 + sum s_p2^2
// after the Wick-type rotation of the fermionic eigenvalues. s = (s_11..s_k1, s_12..s_k2).
inline double superspace_density_norm_dependent(const EnsembleSpec& spec, const std::vector<double>& s) {
  auto* nd = std::get_if<NormDependentFamily>(&spec.family);
  if (!nd) throw ContractViolation("superspace_density_norm_dependent: spec is not norm-dependent");
  nd->spread.validate();
  if (s.empty() || s.size() % 2) throw ContractViolation("superspace density: need 2k eigenvalues");
  const int k = static_cast<int>(s.size() / 2);
  double S = 0.0;
  for (double v : s) S += v * v;
  double v = 0.0;
  for (const auto& term : nd->spread.discretize())
    v += term.weight * std::exp(-S / (2.0 * term.t0)) *
         detail::gaussian_t_derivative_factor(term.order, 0.0, term.t0, S);
  return std::pow(2.0, k * (k - 1)) * v;
}

// ---------------------------------------------------------------------------------------
// Monte Carlo pieces used by reduced_density and the auto normalization

namespace detail {

// Canonical GUE sample, density ~ exp(-tr H^2).
template <class Rng>
Eigen::MatrixXcd sample_gue(int N, Rng& rng) {
  std::normal_distribution<double> diag(0.0, std::sqrt(0.5)), off(0.0, 0.5);
  Eigen::MatrixXcd H(N, N);
  for (int a = 0; a < N; ++a) {
    H(a, a) = diag(rng);
    for (int b = a + 1; b < N; ++b) {
      cplx z(off(rng), off(rng));
      H(a, b) = z;
      H(b, a) = std::conj(z);
    }
  }
  return H;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

inline NormalizationEstimate higher_trace_normalization(int N, int M1, int M2) {
  const double logz = detail::log_gaussian_normalization(N, 1.0);
  if (M1 * M2 <= kHigherTraceClosedFormCap) {
    static std::map<std::tuple<int, int, int>, double> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(N, M1, M2);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, higher_trace_moment(N, M1, M2)).first;
    return {std::exp(-logz) / it->second, 0.0, true};
  }
  std::mt19937_64 rng(detail::splitmix64(0xB0B0ull + N * 131 + M1 * 17 + M2));
  const int n = 1000000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double w = std::pow(detail::trace_power(detail::sample_gue(N, rng), M1), M2);
    s += w;
    s2 += w * w;
  }
  double mean = s / n, var = s2 / n - mean * mean;
  return {std::exp(-logz) / mean, std::sqrt(var / n) / mean, false};
}

// Draws variances t ~ f. Gamma and tabulated spreads are sampled exactly (the latter
// by its piecewise-linear law), callables from their quadrature discretization.
inline std::function<double(std::mt19937_64&)> variance_sampler(const SpreadFunction& f) {
  using K = SpreadFunction::Kind;
  switch (f.kind) {
    case K::spike:
      return [t0 = f.t0](std::mt19937_64&) { return t0; };
    case K::gamma:
      return [d = std::gamma_distribution<double>(f.shape, f.scale)](std::mt19937_64& g) mutable { return d(g); };
    case K::tabulated:
      return [d = std::piecewise_linear_distribution<double>(f.t.begin(), f.t.end(), f.f.begin())](
                 std::mt19937_64& g) mutable { return d(g); };
    case K::callable: {
      auto terms = f.discretize();
      std::vector<double> w, t;
      for (const auto& s : terms) {
        w.push_back(s.weight);
        t.push_back(s.t0);
      }
      return [t, d = std::discrete_distribution<std::size_t>(w.begin(), w.end())](std::mt19937_64& g) mutable {
        return t[d(g)];
      };
    }
    case K::distributional:
      break;
  }
  throw ConfigurationError("a distributional spread is not a probability density and cannot be sampled");
}

struct DensityEstimate {
  double value = 0.0;
  double error = 0.0;
};

enum class ReducedDensityMethod { closed_form, monte_carlo };

// P^(red)(h) for h = (h_1..h_k, h'_1..h'_k).
inline DensityEstimate reduced_density(const EnsembleSpec& spec, const std::vector<double>& h, int k,
                                       ReducedDensityMethod method = ReducedDensityMethod::closed_form,
                                       long samples = 100000, std::uint64_t seed = 1) {
  spec.validate();
  check_selection(spec, k);
  if (static_cast<int>(h.size()) != 2 * k) throw ContractViolation("reduced_density: h needs 2k entries");
  if (method == ReducedDensityMethod::closed_form) return {reduced_model(spec, k)(h).real(), 0.0};
  if (samples < 1000) throw ConfigurationError("reduced_density: Monte Carlo needs >= 1000 samples");
  const int n = 2 * k;
  double gauss = 1.0;
  for (double v : h) gauss *= std::exp(-v * v) / std::sqrt(std::numbers::pi);
  std::mt19937_64 rng(detail::splitmix64(seed));
  if (spec.effectively_gaussian() && !spec.is_higher_trace()) {
    // Closed product form; MC adds nothing for the Gaussian family.
    return {reduced_model(spec, k)(h).real(), 0.0};
  }
  if (auto* nd = std::get_if<NormDependentFamily>(&spec.family)) {
    // Average the variance-t Gaussian over t ~ f.
    auto draw = variance_sampler(nd->spread);
    double S = 0.0;
    for (double v : h) S += v * v;
    double s = 0.0, s2 = 0.0;
    for (long i = 0; i < samples; ++i) {
      double t = draw(rng);
      double g = std::pow(2.0 * std::numbers::pi * t, -0.5 * n) * std::exp(-S / (2.0 * t));
      s += g;
      s2 += g * g;
    }
    double mean = s / samples;
    return {mean, std::sqrt(std::max(0.0, s2 / samples - mean * mean) / samples)};
  }
  // Higher trace: conditional moment with the selected diagonal fixed, divided by the
  // unconditional moment, both estimated from independent GUE samples.
  const auto& ht = std::get<HigherTraceFamily>(spec.family);
  double c = 0.0, c2 = 0.0, u = 0.0, u2 = 0.0;
  for (long i = 0; i < samples; ++i) {
    Eigen::MatrixXcd H = detail::sample_gue(spec.N, rng);
    double wu = std::pow(detail::trace_power(H, ht.M1), ht.M2);
    u += wu;
    u2 += wu * wu;
    for (int a = 0; a < n; ++a) H(a, a) = h[a];
    double wc = std::pow(detail::trace_power(H, ht.M1), ht.M2);
    c += wc;
    c2 += wc * wc;
  }
  double mc = c / samples, mu = u / samples;
  double vc = std::max(0.0, c2 / samples - mc * mc) / samples;
  double vu = std::max(0.0, u2 / samples - mu * mu) / samples;
  double val = gauss * mc / mu;
  double rel = std::sqrt(vc / (mc * mc) + vu / (mu * mu));
  return {val, std::abs(val) * rel};
}

}  // namespace rmtsusy
