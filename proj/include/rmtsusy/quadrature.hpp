#pragma once

// Quadrature rules and adaptive integration helpers shared by the modules.

#include <rmtsusy/errors.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <algorithm>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

namespace rmtsusy {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline QuadratureRule compute_gauss_hermite(int n) {
  // Newton iteration on orthonormal Hermite functions with the usual asymptotic seeds.
  QuadratureRule r;
  r.nodes.assign(n, 0.0);
  r.weights.assign(n, 0.0);
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * r.nodes[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * r.nodes[1];
    else
      z = 2.0 * z - r.nodes[i - 2];
    double pp = 0.0;
    int it = 0;
    for (; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    if (it == 100) throw NumericalError("Gauss-Hermite Newton iteration did not converge");
    r.nodes[i] = z;
    r.nodes[n - 1 - i] = -z;
    r.weights[i] = r.weights[n - 1 - i] = 2.0 / (pp * pp);
  }
  // Ascending node order.
  std::vector<double> x(r.nodes.rbegin(), r.nodes.rend()), w(r.weights.rbegin(), r.weights.rend());
  r.nodes = std::move(x);
  r.weights = std::move(w);
  return r;
}

inline QuadratureRule compute_gauss_legendre(int n) {
  QuadratureRule r;
  r.nodes.assign(n, 0.0);
  r.weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-16) break;
    }
    r.nodes[i] = -z;
    r.nodes[n - 1 - i] = z;
    r.weights[i] = r.weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  return r;
}

template <class F>
const QuadratureRule& cached_rule(std::map<int, QuadratureRule>& cache, std::mutex& mu, int n,
                                  F make) {
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make(n)).first;
  return it->second;
}

}  // namespace detail

// Nodes and weights for the weight function exp(-x^2) on the real line.
inline const QuadratureRule& gauss_hermite(int n) {
  static std::map<int, QuadratureRule> cache;
  static std::mutex mu;
  if (n < 1) throw ContractViolation("gauss_hermite: n must be >= 1");
  return detail::cached_rule(cache, mu, n, detail::compute_gauss_hermite);
}

// Nodes and weights on [-1, 1].
inline const QuadratureRule& gauss_legendre(int n) {
  static std::map<int, QuadratureRule> cache;
  static std::mutex mu;
  if (n < 1) throw ContractViolation("gauss_legendre: n must be >= 1");
  return detail::cached_rule(cache, mu, n, detail::compute_gauss_legendre);
}

template <class T>
struct IntegralEstimate {
  T value{};
  double error = 0.0;
};

namespace detail {

// Gauss-Kronrod 10/21 abscissae and weights on [-1, 1] (nonnegative half, last is 0).
inline constexpr double kXgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr double kWgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208100745700, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr double kWg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

template <class T>
struct GkPanel {
  double a, b;
  T value;
  double error;
  double l1;
};

template <class T, class F>
GkPanel<T> gk21(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  T fc = f(c);
  T k = fc * kWgk[10];
  T g{};
  double l1 = std::abs(fc) * kWgk[10];
  for (int j = 0; j < 10; ++j) {
    T f1 = f(c - h * kXgk[j]), f2 = f(c + h * kXgk[j]);
    k += (f1 + f2) * kWgk[j];
    l1 += (std::abs(f1) + std::abs(f2)) * kWgk[j];
    if (j % 2 == 1) g += (f1 + f2) * kWg[j / 2];
  }
  return {a, b, k * h, std::abs((k - g) * h), l1 * std::abs(h)};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod (10/21) on a finite interval for real or complex
// integrands. The raw |K - G| difference is used as the panel error, which is
// conservative for smooth integrands. Throws NumericalError when the panel budget runs
// out before the tolerance max(abs_tol, rel_tol*|I|) is met.
template <class F>
auto integrate(F&& f, double a, double b, double rel_tol = 1e-12, double abs_tol = 0.0,
               int max_panels = 4000) {
  using T = decltype(f(a));
  std::vector<detail::GkPanel<T>> heap;
  auto cmp = [](const auto& x, const auto& y) { return x.error < y.error; };
  heap.push_back(detail::gk21<T>(f, a, b));
  T total = heap.front().value;
  double err = heap.front().error, l1 = heap.front().l1;
  while (true) {
    double roundoff = 50.0 * std::numeric_limits<double>::epsilon() * l1;
    double target = std::max({abs_tol, rel_tol * std::abs(total), roundoff});
    if (err <= target) break;
    if (static_cast<int>(heap.size()) >= max_panels)
      throw NumericalError("adaptive quadrature on [" + std::to_string(a) + ", " +
                           std::to_string(b) + "] did not converge: estimated error " +
                           std::to_string(err) + " vs target " + std::to_string(target));
    std::pop_heap(heap.begin(), heap.end(), cmp);
    auto worst = heap.back();
    heap.pop_back();
    double mid = 0.5 * (worst.a + worst.b);
    auto left = detail::gk21<T>(f, worst.a, mid), right = detail::gk21<T>(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), cmp);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), cmp);
  }
  // Re-sum to shed drift from the running updates.
  T sum{};
  double esum = 0.0;
  for (const auto& p : heap) {
    sum += p.value;
    esum += p.error;
  }
  return IntegralEstimate<T>{sum, esum};
}

}  // namespace rmtsusy
