#pragma once

// Sparse multivariate polynomials and truncated univariate power series (Taylor jets).

#include <rmtsusy/errors.hpp>

#include <cmath>
#include <complex>
#include <map>
#include <vector>

namespace rmtsusy {

using cplx = std::complex<double>;
using Exponents = std::vector<int>;

class MultiPoly {
 public:
  explicit MultiPoly(int nvars = 0) : n_(nvars) {}

  static MultiPoly constant(int nvars, cplx c) {
    MultiPoly p(nvars);
    p.add(Exponents(nvars, 0), c);
    return p;
  }

  int nvars() const { return n_; }
  const std::map<Exponents, cplx>& terms() const { return t_; }
  bool empty() const { return t_.empty(); }

  void add(const Exponents& e, cplx c) {
    if (static_cast<int>(e.size()) != n_) throw ContractViolation("MultiPoly: exponent arity");
    if (c == cplx{}) return;
    auto [it, ins] = t_.try_emplace(e, c);
    if (!ins) {
      it->second += c;
      if (it->second == cplx{}) t_.erase(it);
    }
  }

  MultiPoly& operator+=(const MultiPoly& o) {
    for (const auto& [e, c] : o.t_) add(e, c);
    return *this;
  }

  MultiPoly& operator*=(cplx s) {
    for (auto& [e, c] : t_) c *= s;
    return *this;
  }

  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
    MultiPoly r(a.n_);
    for (const auto& [ea, ca] : a.t_)
      for (const auto& [eb, cb] : b.t_) {
        Exponents e(a.n_);
        for (int i = 0; i < a.n_; ++i) e[i] = ea[i] + eb[i];
        r.add(e, ca * cb);
      }
    return r;
  }

  template <class V>
  cplx operator()(const V& x) const {
    cplx s{};
    for (const auto& [e, c] : t_) {
      cplx m = c;
      for (int i = 0; i < n_; ++i)
        if (e[i]) m *= std::pow(x[i], e[i]);
      s += m;
    }
    return s;
  }

  int max_degree() const {
    int d = 0;
    for (const auto& [e, c] : t_)
      for (int v : e) d = std::max(d, v);
    return d;
  }

 private:
  int n_;
  std::map<Exponents, cplx> t_;
};

// (sum_i x_i^2)^p as a MultiPoly in nvars variables.
inline MultiPoly power_of_square_norm(int nvars, int p) {
  MultiPoly s(nvars);
  for (int i = 0; i < nvars; ++i) {
    Exponents e(nvars, 0);
    e[i] = 2;
    s.add(e, 1.0);
  }
  MultiPoly r = MultiPoly::constant(nvars, 1.0);
  for (int i = 0; i < p; ++i) r = r * s;
  return r;
}

// Truncated power series sum_j c_j r^j, j <= order, expanded at r = 0.
struct TaylorJet {
  std::vector<cplx> c;

  TaylorJet() = default;
  explicit TaylorJet(int order) : c(order + 1, cplx{}) {}
  int order() const { return static_cast<int>(c.size()) - 1; }

  // n-th derivative at 0.
  cplx derivative(int n) const {
    if (n > order()) throw ContractViolation("TaylorJet: derivative order above jet order");
    return c[n] * std::tgamma(n + 1.0);
  }

  static TaylorJet monomial(int m, int order) {
    TaylorJet j(order);
    if (m <= order) j.c[m] = 1.0;
    return j;
  }

  // exp(a r + b r^2)
  static TaylorJet exp_quadratic(cplx a, cplx b, int order) {
    TaylorJet j(order);
    // f' = (a + 2 b r) f gives (n+1) c_{n+1} = a c_n + 2 b c_{n-1}.
    j.c[0] = 1.0;
    for (int n = 0; n < order; ++n)
      j.c[n + 1] = (a * j.c[n] + (n >= 1 ? 2.0 * b * j.c[n - 1] : cplx{})) / static_cast<double>(n + 1);
    return j;
  }

  friend TaylorJet operator*(const TaylorJet& x, const TaylorJet& y) {
    int order = std::min(x.order(), y.order());
    TaylorJet r(order);
    for (int i = 0; i <= order; ++i)
      for (int j = 0; i + j <= order; ++j) r.c[i + j] += x.c[i] * y.c[j];
    return r;
  }

  TaylorJet& operator+=(const TaylorJet& o) {
    if (o.order() < order()) c.resize(o.c.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += o.c[i];
    return *this;
  }

  TaylorJet& operator*=(cplx s) {
    for (auto& v : c) v *= s;
    return *this;
  }
};

// Coefficients of the polynomial P_m(r) with d^m/dr^m exp(-beta r^2) = exp(-beta r^2) P_m(r).
inline std::vector<double> gaussian_derivative_poly(int m, double beta) {
  std::vector<double> p{1.0};
  for (int s = 0; s < m; ++s) {
    std::vector<double> q(p.size() + 1, 0.0);
    for (std::size_t i = 1; i < p.size(); ++i) q[i - 1] += i * p[i];
    for (std::size_t i = 0; i < p.size(); ++i) q[i + 1] -= 2.0 * beta * p[i];
    p = std::move(q);
  }
  return p;
}

// Coefficients of Q(t) with d^n/dt^n [exp(-alpha t^2) t^m] = exp(-alpha t^2) Q(t).
inline std::vector<double> gaussian_monomial_derivative_poly(int n, int m, double alpha) {
  std::vector<double> p(m + 1, 0.0);
  p[m] = 1.0;
  for (int s = 0; s < n; ++s) {
    std::vector<double> q(p.size() + 1, 0.0);
    for (std::size_t i = 1; i < p.size(); ++i) q[i - 1] += i * p[i];
    for (std::size_t i = 0; i < p.size(); ++i) q[i + 1] -= 2.0 * alpha * p[i];
    p = std::move(q);
  }
  return p;
}

inline double horner(const std::vector<double>& p, double x) {
  double s = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) s = s * x + p[i];
  return s;
}

}  // namespace rmtsusy
