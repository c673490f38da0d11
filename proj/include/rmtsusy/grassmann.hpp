#pragma once

// Finite exterior algebra with complex coefficients, matrices over it and the
// ordinary/super trace duality between K = A L A^dagger and B = L^1/2 A^dagger A L^1/2.
//
// Generator layout for a (k, N) dual pair: slot p*N + n holds zeta_{p,n},
// slot k*N + p*N + n holds its conjugate zeta*_{p,n}. G = 2kN in total.

#include <rmtsusy/errors.hpp>

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace rmtsusy {

using cplx = std::complex<double>;

struct GeneratorIndex {
  unsigned index = 0;
};

class GrassmannElement {
 public:
  using Mask = std::uint32_t;
  static constexpr unsigned kMaxGenerators = 32;

  explicit GrassmannElement(unsigned generators = 0) : g_(generators) {
    if (g_ > kMaxGenerators) throw ResourceError("GrassmannElement: more than 32 generators");
  }

  static GrassmannElement scalar(unsigned generators, cplx c) {
    GrassmannElement e(generators);
    e.add_term(0, c);
    return e;
  }

  static GrassmannElement generator(unsigned generators, GeneratorIndex g, cplx c = 1.0) {
    if (g.index >= generators) throw ConfigurationError("generator index out of range");
    GrassmannElement e(generators);
    e.add_term(Mask{1} << g.index, c);
    return e;
  }

  unsigned generators() const { return g_; }
  const std::unordered_map<Mask, cplx>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  cplx coefficient(Mask m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? cplx{} : it->second;
  }

  void add_term(Mask m, cplx c) {
    if (c == cplx{}) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == cplx{}) terms_.erase(it);
    }
  }

  // Largest coefficient magnitude; the natural norm for "exact up to roundoff" checks.
  double max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& [mask, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  bool has_parity(int parity) const {
    for (const auto& [mask, c] : terms_)
      if (static_cast<int>(std::popcount(mask) & 1) != parity) return false;
    return true;
  }

  GrassmannElement& operator+=(const GrassmannElement& o) {
    check_universe(o);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  GrassmannElement& operator-=(const GrassmannElement& o) {
    check_universe(o);
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  GrassmannElement& operator*=(cplx s) {
    if (s == cplx{}) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, c] : terms_) c *= s;
    return *this;
  }

  void check_universe(const GrassmannElement& o) const {
    if (o.g_ != g_)
      throw ConfigurationError("Grassmann elements over different generator sets (" +
                               std::to_string(g_) + " vs " + std::to_string(o.g_) + ")");
  }

 private:
  unsigned g_;
  std::unordered_map<Mask, cplx> terms_;
};

namespace detail {

// Sign of (monomial a)(monomial b) brought to ascending order; 0 if they share a generator.
inline int koszul_sign(GrassmannElement::Mask a, GrassmannElement::Mask b) {
  if (a & b) return 0;
  unsigned swaps = 0;
  while (b) {
    unsigned j = static_cast<unsigned>(std::countr_zero(b));
    b &= b - 1;
    swaps += static_cast<unsigned>(std::popcount(j + 1 >= 32 ? 0u : (a >> (j + 1))));
  }
  return (swaps & 1u) ? -1 : 1;
}

inline unsigned conjugate_slot(unsigned g, unsigned generators) {
  unsigned half = generators / 2;
  return g < half ? g + half : g - half;
}

}  // namespace detail

inline GrassmannElement ge_mul(const GrassmannElement& a, const GrassmannElement& b) {
  a.check_universe(b);
  GrassmannElement r(a.generators());
  for (const auto& [ma, ca] : a.terms()) {
    for (const auto& [mb, cb] : b.terms()) {
      int s = detail::koszul_sign(ma, mb);
      if (s != 0) r.add_term(ma | mb, static_cast<double>(s) * ca * cb);
    }
  }
  return r;
}

// Antilinear involution: reverses monomial order and swaps zeta <-> zeta*.
// Requires an even generator count (the pairing of slots g and g + G/2).
inline GrassmannElement ge_conjugate(const GrassmannElement& a) {
  const unsigned G = a.generators();
  if (G % 2 != 0) throw ConfigurationError("ge_conjugate needs paired generators (even G)");
  GrassmannElement r(G);
  std::vector<unsigned> seq;
  for (const auto& [m, c] : a.terms()) {
    seq.clear();
    for (GrassmannElement::Mask t = m; t; t &= t - 1)
      seq.push_back(detail::conjugate_slot(static_cast<unsigned>(std::countr_zero(t)), G));
    // seq holds conj(g_1) ... conj(g_m); the conjugate product runs in reverse order.
    std::size_t n = seq.size();
    unsigned inversions = 0;
    GrassmannElement::Mask out = 0;
    for (std::size_t i = 0; i < n; ++i) {
      out |= GrassmannElement::Mask{1} << seq[i];
      for (std::size_t j = i + 1; j < n; ++j)
        if (seq[n - 1 - i] > seq[n - 1 - j]) ++inversions;
    }
    r.add_term(out, (inversions & 1u ? -1.0 : 1.0) * std::conj(c));
  }
  return r;
}

inline GrassmannElement operator+(GrassmannElement a, const GrassmannElement& b) { return a += b; }
inline GrassmannElement operator-(GrassmannElement a, const GrassmannElement& b) { return a -= b; }
inline GrassmannElement operator*(const GrassmannElement& a, const GrassmannElement& b) {
  return ge_mul(a, b);
}
inline GrassmannElement operator*(cplx s, GrassmannElement a) { return a *= s; }

// Rectangular matrix of algebra elements (square N x N for K).
struct AlgebraMatrix {
  std::size_t rows = 0, cols = 0;
  unsigned generators = 0;
  std::vector<GrassmannElement> entries;

  AlgebraMatrix() = default;
  AlgebraMatrix(std::size_t r, std::size_t c, unsigned g)
      : rows(r), cols(c), generators(g), entries(r * c, GrassmannElement(g)) {}

  GrassmannElement& operator()(std::size_t i, std::size_t j) { return entries[i * cols + j]; }
  const GrassmannElement& operator()(std::size_t i, std::size_t j) const {
    return entries[i * cols + j];
  }
  std::size_t dimension() const { return rows; }
};

inline AlgebraMatrix operator*(const AlgebraMatrix& a, const AlgebraMatrix& b) {
  if (a.cols != b.rows) throw ConfigurationError("AlgebraMatrix product: shape mismatch");
  AlgebraMatrix r(a.rows, b.cols, a.generators);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j)
      for (std::size_t l = 0; l < a.cols; ++l) r(i, j) += a(i, l) * b(l, j);
  return r;
}

inline AlgebraMatrix operator+(const AlgebraMatrix& a, const AlgebraMatrix& b) {
  AlgebraMatrix r = a;
  for (std::size_t i = 0; i < r.entries.size(); ++i) r.entries[i] += b.entries[i];
  return r;
}

// Conjugate transpose over the algebra. Entries sitting at a mixed (boson-fermion)
// position pick up an extra minus sign; row_odd/col_odd flag fermionic rows/columns.
inline AlgebraMatrix graded_adjoint(const AlgebraMatrix& a, const std::vector<bool>& row_odd,
                                    const std::vector<bool>& col_odd) {
  AlgebraMatrix r(a.cols, a.rows, a.generators);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) {
      GrassmannElement c = ge_conjugate(a(i, j));
      if (row_odd[i] != col_odd[j]) c *= -1.0;
      r(j, i) = std::move(c);
    }
  return r;
}

inline AlgebraMatrix adjoint(const AlgebraMatrix& a) {
  return graded_adjoint(a, std::vector<bool>(a.rows, false), std::vector<bool>(a.cols, false));
}

inline double max_deviation(const AlgebraMatrix& a, const AlgebraMatrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    d = std::max(d, (a.entries[i] - b.entries[i]).max_abs_coefficient());
  return d;
}

struct MetricSignature {
  std::vector<int> signs;

  MetricSignature() = default;
  explicit MetricSignature(std::vector<int> s) : signs(std::move(s)) { validate(); }
  static MetricSignature all_plus(std::size_t k) { return MetricSignature(std::vector<int>(k, 1)); }

  void validate() const {
    for (int s : signs)
      if (s != 1 && s != -1) throw ConfigurationError("metric entries must be +1 or -1");
  }
  std::size_t size() const { return signs.size(); }
  int operator[](std::size_t p) const { return signs[p]; }
  // Branch L^1/2 = i for L = -1.
  cplx sqrt_at(std::size_t p) const { return signs[p] > 0 ? cplx(1.0, 0.0) : cplx(0.0, 1.0); }
};

// 2k x 2k supermatrix in boson-fermion block order.
struct SuperMatrixAlg {
  std::size_t k = 0;
  AlgebraMatrix c1, a12, a21, c2;

  SuperMatrixAlg() = default;
  SuperMatrixAlg(std::size_t k_, unsigned g)
      : k(k_), c1(k_, k_, g), a12(k_, k_, g), a21(k_, k_, g), c2(k_, k_, g) {}

  AlgebraMatrix as_matrix() const {
    AlgebraMatrix m(2 * k, 2 * k, c1.generators);
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t q = 0; q < k; ++q) {
        m(p, q) = c1(p, q);
        m(p, k + q) = a12(p, q);
        m(k + p, q) = a21(p, q);
        m(k + p, k + q) = c2(p, q);
      }
    return m;
  }

  static SuperMatrixAlg from_matrix(const AlgebraMatrix& m, std::size_t k) {
    SuperMatrixAlg s(k, m.generators);
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t q = 0; q < k; ++q) {
        s.c1(p, q) = m(p, q);
        s.a12(p, q) = m(p, k + q);
        s.a21(p, q) = m(k + p, q);
        s.c2(p, q) = m(k + p, k + q);
      }
    return s;
  }

  std::vector<bool> parity_flags() const {
    std::vector<bool> f(2 * k, false);
    for (std::size_t p = k; p < 2 * k; ++p) f[p] = true;
    return f;
  }
};

inline SuperMatrixAlg operator*(const SuperMatrixAlg& a, const SuperMatrixAlg& b) {
  SuperMatrixAlg r(a.k, a.c1.generators);
  r.c1 = a.c1 * b.c1 + a.a12 * b.a21;
  r.a12 = a.c1 * b.a12 + a.a12 * b.c2;
  r.a21 = a.a21 * b.c1 + a.c2 * b.a21;
  r.c2 = a.a21 * b.a12 + a.c2 * b.c2;
  return r;
}

inline SuperMatrixAlg graded_adjoint(const SuperMatrixAlg& b) {
  auto f = b.parity_flags();
  return SuperMatrixAlg::from_matrix(graded_adjoint(b.as_matrix(), f, f), b.k);
}

// L B L with the fermionic metric entries fixed to +1.
inline SuperMatrixAlg metric_sandwich(const SuperMatrixAlg& b, const MetricSignature& L) {
  SuperMatrixAlg r = b;
  for (std::size_t p = 0; p < b.k; ++p)
    for (std::size_t q = 0; q < b.k; ++q) {
      r.c1(p, q) *= static_cast<double>(L[p] * L[q]);
      r.a12(p, q) *= static_cast<double>(L[p]);
      r.a21(p, q) *= static_cast<double>(L[q]);
    }
  return r;
}

struct DualPair {
  std::size_t k = 0, N = 0;
  MetricSignature L;
  AlgebraMatrix A;  // N x 2k: [z_1 .. z_k zeta_1 .. zeta_k]
  AlgebraMatrix K;  // N x N
  SuperMatrixAlg B;
};

inline constexpr unsigned kDefaultGeneratorBudget = 24;

inline DualPair build_dual_pair(const std::vector<std::vector<cplx>>& zvals, std::size_t k,
                                std::size_t N, const MetricSignature& L,
                                unsigned generator_budget = kDefaultGeneratorBudget) {
  if (k == 0 || N == 0) throw ContractViolation("build_dual_pair: k and N must be positive");
  if (zvals.size() != k || L.size() != k)
    throw ConfigurationError("build_dual_pair: need k vectors z_p and k metric signs");
  for (const auto& z : zvals)
    if (z.size() != N) throw ConfigurationError("build_dual_pair: each z_p must have N entries");
  const std::size_t G = 2 * k * N;
  if (G > generator_budget || G > GrassmannElement::kMaxGenerators)
    throw ResourceError("build_dual_pair: 2kN = " + std::to_string(G) +
                        " exceeds the generator budget " + std::to_string(generator_budget));
  const unsigned g = static_cast<unsigned>(G);

  auto zeta = [&](std::size_t p, std::size_t n) {
    return GrassmannElement::generator(g, {static_cast<unsigned>(p * N + n)});
  };
  auto zeta_star = [&](std::size_t p, std::size_t n) {
    return GrassmannElement::generator(g, {static_cast<unsigned>(k * N + p * N + n)});
  };

  DualPair d;
  d.k = k;
  d.N = N;
  d.L = L;
  d.A = AlgebraMatrix(N, 2 * k, g);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t p = 0; p < k; ++p) {
      d.A(n, p) = GrassmannElement::scalar(g, zvals[p][n]);
      d.A(n, k + p) = zeta(p, n);
    }

  d.K = AlgebraMatrix(N, N, g);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      GrassmannElement e(g);
      for (std::size_t p = 0; p < k; ++p) {
        e.add_term(0, static_cast<double>(L[p]) * zvals[p][i] * std::conj(zvals[p][j]));
        e -= zeta(p, i) * zeta_star(p, j);
      }
      d.K(i, j) = std::move(e);
    }

  d.B = SuperMatrixAlg(k, g);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t q = 0; q < k; ++q) {
      cplx zz{};
      for (std::size_t n = 0; n < N; ++n) zz += std::conj(zvals[p][n]) * zvals[q][n];
      d.B.c1(p, q) = GrassmannElement::scalar(g, L.sqrt_at(p) * L.sqrt_at(q) * zz);
      GrassmannElement a12(g), a21(g), c2(g);
      for (std::size_t n = 0; n < N; ++n) {
        a12 += (L.sqrt_at(p) * std::conj(zvals[p][n])) * zeta(q, n);
        a21 -= (zvals[q][n] * L.sqrt_at(q)) * zeta_star(p, n);
        c2 -= zeta_star(p, n) * zeta(q, n);
      }
      d.B.a12(p, q) = std::move(a12);
      d.B.a21(p, q) = std::move(a21);
      d.B.c2(p, q) = std::move(c2);
    }
  return d;
}

inline GrassmannElement trace(const AlgebraMatrix& m) {
  GrassmannElement t(m.generators);
  for (std::size_t i = 0; i < m.rows; ++i) t += m(i, i);
  return t;
}

inline GrassmannElement supertrace(const SuperMatrixAlg& b) { return trace(b.c1) - trace(b.c2); }

inline GrassmannElement tr_power(const AlgebraMatrix& K, int m) {
  if (m < 1) throw ContractViolation("tr_power: m must be >= 1");
  AlgebraMatrix p = K;
  for (int i = 1; i < m; ++i) p = p * K;
  return trace(p);
}

inline GrassmannElement strg_power(const SuperMatrixAlg& B, int m) {
  if (m < 1) throw ContractViolation("strg_power: m must be >= 1");
  SuperMatrixAlg p = B;
  for (int i = 1; i < m; ++i) p = p * B;
  return supertrace(p);
}

struct DualityReport {
  std::size_t k = 0, N = 0;
  std::uint64_t seed = 0;
  std::vector<double> max_deviation;  // index m-1
  double worst() const {
    double w = 0.0;
    for (double d : max_deviation) w = std::max(w, d);
    return w;
  }
};

// Random unit-norm z_p (normalized complex Gaussian) and random metric signs, both
// drawn from seed. Unit norm keeps coefficients O(1) so the deviation is an absolute
// roundoff measure.
inline DualityReport verify_duality(std::size_t k, std::size_t N, int m_max, std::uint64_t seed,
                                    unsigned generator_budget = kDefaultGeneratorBudget) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::vector<cplx>> z(k, std::vector<cplx>(N));
  std::vector<int> signs(k);
  for (std::size_t p = 0; p < k; ++p) {
    double norm2 = 0.0;
    for (auto& v : z[p]) {
      v = cplx(gauss(rng), gauss(rng));
      norm2 += std::norm(v);
    }
    for (auto& v : z[p]) v /= std::sqrt(norm2);
    signs[p] = coin(rng) ? 1 : -1;
  }
  DualPair d = build_dual_pair(z, k, N, MetricSignature(signs), generator_budget);
  DualityReport rep;
  rep.k = k;
  rep.N = N;
  rep.seed = seed;
  AlgebraMatrix kp = d.K;
  SuperMatrixAlg bp = d.B;
  for (int m = 1; m <= m_max; ++m) {
    if (m > 1) {
      kp = kp * d.K;
      bp = bp * d.B;
    }
    rep.max_deviation.push_back((trace(kp) - supertrace(bp)).max_abs_coefficient());
  }
  return rep;
}

}  // namespace rmtsusy
