#include <rmtsusy/correlation.hpp>

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace rmtsusy;

namespace {
const double kPi = std::numbers::pi;

cplx corr(const EnsembleSpec& s, std::vector<IncrementedPoint> pts, CorrelationVariant v, CorrelationMethod m) {
  return evaluate_correlation({s, std::move(pts), v, m}).value;
}

double density1(const EnsembleSpec& s, double x, CorrelationMethod m = CorrelationMethod::eigenvalue_integral) {
  return evaluate_correlation({s, {IncrementedPoint(x)}, CorrelationVariant::density, m, false}).value.real();
}

// Marginal of the joint eigenvalue density Delta^2(l) w(l) exp(-sum l^2) with the first
// k eigenvalues fixed, times N!/(N-k)!. Tensor Gauss-Hermite, exact for polynomial w.
double eigenvalue_marginal(int N, const std::function<double(const std::vector<double>&)>& w,
                           const std::vector<double>& fixed, int nodes = 16) {
  const auto& gh = gauss_hermite(nodes);
  auto integral = [&](const std::vector<double>& head) {
    const int free = N - static_cast<int>(head.size());
    std::vector<int> idx(free, 0);
    std::vector<double> l(N);
    double s = 0.0;
    while (true) {
      double wt = 1.0;
      for (std::size_t i = 0; i < head.size(); ++i) l[i] = head[i];
      for (int j = 0; j < free; ++j) {
        l[head.size() + j] = gh.nodes[idx[j]];
        wt *= gh.weights[idx[j]];
      }
      double v = 1.0;
      for (int a = 0; a < N; ++a)
        for (int b = a + 1; b < N; ++b) v *= (l[a] - l[b]) * (l[a] - l[b]);
      s += wt * v * w(l);
      int pos = free - 1;
      while (pos >= 0 && ++idx[pos] == nodes) idx[pos--] = 0;
      if (pos < 0) break;
    }
    for (double h : head) s *= std::exp(-h * h);
    return s;
  };
  double perm = 1.0;
  for (std::size_t i = 0; i < fixed.size(); ++i) perm *= N - static_cast<double>(i);
  return perm * integral(fixed) / integral({});
}

std::function<double(const std::vector<double>&)> trace_power_weight(int M1, int M2) {
  return [=](const std::vector<double>& l) {
    double t = 0.0;
    for (double v : l) t += std::pow(v, M1);
    return std::pow(t, M2);
  };
}

// PV int f(t) / (b - t) dt + i L pi f(b) for smooth, decaying f.
cplx boundary_value(const std::function<double(double)>& f, double b, int L) {
  auto g = [&](double u) { return u < 1e-12 ? 0.0 : (f(b - u) - f(b + u)) / u; };
  double pv = integrate(g, 0.0, 20.0, 1e-13, 1e-15).value;
  return cplx(pv, L * kPi * f(b));
}
}  // namespace

// ---- exact finite-N oracles ------------------------------------------------------------

TEST(Correlation, HigherTraceMatchesEigenvalueIntegration) {
  struct Case {
    int N, M1, M2;
  };
  for (auto c : {Case{2, 4, 1}, Case{3, 4, 1}, Case{3, 3, 2}, Case{4, 2, 2}, Case{2, 2, 3}}) {
    auto s = EnsembleSpec::higher_trace(c.N, c.M1, c.M2);
    for (double x : {0.0, 0.45, -1.3}) {
      double exact = eigenvalue_marginal(c.N, trace_power_weight(c.M1, c.M2), {x});
      for (auto m : {CorrelationMethod::convolution, CorrelationMethod::eigenvalue_integral,
                     CorrelationMethod::closed_form_higher_trace}) {
        EXPECT_NEAR(density1(s, x, m), exact, 1e-9) << c.N << " " << c.M1 << "," << c.M2 << " " << to_string(m);
        // Im R^_1 = R_1 for L = +1.
        EXPECT_NEAR(corr(s, {IncrementedPoint(x)}, CorrelationVariant::resolvent, m).imag(), exact, 1e-9);
      }
    }
  }
}

TEST(Correlation, HigherTraceTwoPointMatchesEigenvalueIntegration) {
  for (auto [M1, M2] : {std::pair{4, 1}, std::pair{2, 2}}) {
    auto s = EnsembleSpec::higher_trace(4, M1, M2);
    for (auto [x1, x2] : {std::pair{0.3, -0.7}, std::pair{1.2, 0.1}}) {
      double exact = eigenvalue_marginal(4, trace_power_weight(M1, M2), {x1, x2});
      std::vector<IncrementedPoint> pts{IncrementedPoint(x1), IncrementedPoint(x2)};
      for (auto m : {CorrelationMethod::convolution, CorrelationMethod::eigenvalue_integral,
                     CorrelationMethod::closed_form_higher_trace})
        EXPECT_NEAR(corr(s, pts, CorrelationVariant::density, m).real(), exact, 1e-9) << to_string(m);
    }
  }
}

TEST(Correlation, GaussianTwoPointMatchesEigenvalueIntegration) {
  auto s = EnsembleSpec::gaussian(4);
  auto one = [](const std::vector<double>&) { return 1.0; };
  double exact = eigenvalue_marginal(4, one, {0.25, -1.05});
  std::vector<IncrementedPoint> pts{IncrementedPoint(0.25), IncrementedPoint(-1.05)};
  for (auto m : {CorrelationMethod::convolution, CorrelationMethod::eigenvalue_integral,
                 CorrelationMethod::factorized, CorrelationMethod::closed_form_gue})
    EXPECT_NEAR(corr(s, pts, CorrelationVariant::density, m).real(), exact, 1e-10) << to_string(m);
}

// ---- cross-method and cross-family consistency -----------------------------------------

TEST(Correlation, MethodsAgreeAtProbePoints) {
  std::vector<EnsembleSpec> specs{EnsembleSpec::gaussian(5), EnsembleSpec::gaussian(4, 2.5),
                                  EnsembleSpec::norm_dependent(4, SpreadFunction::spike(0.8)),
                                  EnsembleSpec::norm_dependent(4, SpreadFunction::gamma(3.0, 0.3)),
                                  EnsembleSpec::higher_trace(4, 4, 1), EnsembleSpec::higher_trace(5, 3, 2)};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  for (const auto& s : specs) {
    for (int probe = 0; probe < 10; ++probe) {
      const int k = probe < 7 ? 1 : 2;
      std::vector<IncrementedPoint> pts;
      for (int p = 0; p < k; ++p) pts.emplace_back(u(rng), (probe + p) % 3 ? 1 : -1);
      for (auto v : {CorrelationVariant::resolvent, CorrelationVariant::density}) {
        cplx ref = corr(s, pts, v, CorrelationMethod::eigenvalue_integral);
        for (auto m : {CorrelationMethod::convolution, CorrelationMethod::factorized, CorrelationMethod::closed_form_gue,
                       CorrelationMethod::closed_form_higher_trace}) {
          cplx val;
          try {
            val = corr(s, pts, v, m);
          } catch (const ContractViolation&) {
            continue;  // method not applicable to this family
          }
          EXPECT_LT(std::abs(val - ref), 1e-5 * std::max(1.0, std::abs(ref)))
              << s.family_name() << " " << to_string(m) << " k=" << k;
        }
      }
    }
  }
}

TEST(Correlation, QuadraticTraceEqualsSpreadRoute) {
  for (int N : {2, 4}) {
    auto ht = EnsembleSpec::higher_trace(N, 2, 1);
    auto nd = EnsembleSpec::norm_dependent(N, SpreadFunction::distributional({{0.5, 0, 1.0}, {0.5, 1, 1.0 / (N * N)}}));
    for (double x : {-0.8, 0.0, 1.7}) {
      cplx a = corr(ht, {IncrementedPoint(x)}, CorrelationVariant::resolvent, CorrelationMethod::closed_form_higher_trace);
      cplx b = corr(nd, {IncrementedPoint(x)}, CorrelationVariant::resolvent, CorrelationMethod::convolution);
      EXPECT_LT(std::abs(a - b), 1e-6);
    }
  }
}

TEST(Correlation, ZeroTracePowerIsGaussian) {
  auto ht = EnsembleSpec::higher_trace(3, 0, 2), g = EnsembleSpec::gaussian(3);
  for (double x : {-1.1, 0.4}) {
    cplx a = corr(ht, {IncrementedPoint(x)}, CorrelationVariant::resolvent, CorrelationMethod::closed_form_higher_trace);
    cplx b = corr(g, {IncrementedPoint(x)}, CorrelationVariant::resolvent, CorrelationMethod::closed_form_gue);
    EXPECT_LT(std::abs(a - b), 1e-13);
  }
}

TEST(Correlation, GammaSpreadIsAverageOverVariances) {
  auto f = SpreadFunction::gamma(3.0, 0.3);
  auto nd = EnsembleSpec::norm_dependent(3, f);
  for (double x : {0.0, 0.9, 2.2}) {
    auto g = [&](double t) {
      return f.density(t) * density1(EnsembleSpec::gaussian(3, 2.0 * t), x, CorrelationMethod::closed_form_gue);
    };
    double oracle = integrate(g, 0.0, 12.0, 1e-11, 1e-14).value;
    EXPECT_NEAR(density1(nd, x, CorrelationMethod::convolution), oracle, 1e-8) << x;
  }
}

TEST(Correlation, SpikeSpreadIsRescaledGaussian) {
  auto nd = EnsembleSpec::norm_dependent(4, SpreadFunction::spike(1.7));
  auto g = EnsembleSpec::gaussian(4, 3.4);
  for (double x : {-2.0, 0.3}) {
    cplx a = corr(nd, {IncrementedPoint(x)}, CorrelationVariant::resolvent, CorrelationMethod::factorized);
    cplx b = corr(g, {IncrementedPoint(x)}, CorrelationVariant::resolvent, CorrelationMethod::closed_form_gue);
    EXPECT_LT(std::abs(a - b), 1e-12);
  }
}

// ---- structural properties -------------------------------------------------------------

TEST(Correlation, PermutationSymmetry) {
  for (const auto& s : {EnsembleSpec::higher_trace(4, 2, 2), EnsembleSpec::norm_dependent(4, SpreadFunction::gamma(2.0, 0.4))}) {
    IncrementedPoint a(0.6, 1), b(-1.4, -1);
    for (auto m : {CorrelationMethod::convolution, CorrelationMethod::eigenvalue_integral}) {
      cplx ab = corr(s, {a, b}, CorrelationVariant::resolvent, m);
      cplx ba = corr(s, {b, a}, CorrelationVariant::resolvent, m);
      EXPECT_LT(std::abs(ab - ba), 1e-12 * std::abs(ab));
    }
  }
}

TEST(Correlation, SideFlipConjugates) {
  auto s = EnsembleSpec::higher_trace(4, 4, 1);
  for (auto m : {CorrelationMethod::convolution, CorrelationMethod::eigenvalue_integral,
                 CorrelationMethod::closed_form_higher_trace}) {
    cplx up = corr(s, {IncrementedPoint(0.3, 1), IncrementedPoint(-0.8, -1)}, CorrelationVariant::resolvent, m);
    cplx dn = corr(s, {IncrementedPoint(0.3, -1), IncrementedPoint(-0.8, 1)}, CorrelationVariant::resolvent, m);
    EXPECT_LT(std::abs(dn - std::conj(up)), 1e-8);
    cplx one = corr(s, {IncrementedPoint(1.1, 1)}, CorrelationVariant::resolvent, m);
    cplx flip = corr(s, {IncrementedPoint(1.1, -1)}, CorrelationVariant::resolvent, m);
    EXPECT_LT(std::abs(flip - std::conj(one)), 1e-8);
  }
}

TEST(Correlation, DensityVariantIsRealAndNonnegative) {
  for (const auto& s : {EnsembleSpec::higher_trace(4, 4, 1), EnsembleSpec::norm_dependent(3, SpreadFunction::gamma(3.0, 0.3)),
                        EnsembleSpec::gaussian(6)}) {
    for (double x = -5.0; x <= 5.0; x += 0.25) {
      auto r = evaluate_correlation({s, {IncrementedPoint(x)}, CorrelationVariant::density, CorrelationMethod::convolution});
      EXPECT_LE(std::abs(r.value.imag()), r.error_estimate + 1e-14);
      EXPECT_GE(r.value.real(), -r.error_estimate);
    }
  }
}

TEST(Correlation, OnePointIntegratesToN) {
  std::vector<EnsembleSpec> specs{EnsembleSpec::gaussian(3), EnsembleSpec::higher_trace(4, 4, 1),
                                  EnsembleSpec::higher_trace(3, 2, 1),
                                  // shape 6 keeps the mass of narrow small-t components below the grid's reach
                                  EnsembleSpec::norm_dependent(4, SpreadFunction::gamma(6.0, 0.2))};
  for (const auto& s : specs)
    for (auto m : {CorrelationMethod::convolution, CorrelationMethod::eigenvalue_integral, CorrelationMethod::factorized,
                   CorrelationMethod::closed_form_gue, CorrelationMethod::closed_form_higher_trace}) {
      try {
        density1(s, 0.0, m);
      } catch (const ContractViolation&) {
        continue;
      }
      // Trapezoid sum: spectrally accurate for the entire, Gaussian-decaying R_1.
      const double X = 6.0 + 3.0 * std::sqrt(s.N), h = 0.25;
      double n = 0.0;
      for (double x = -X; x <= X + 1e-12; x += h) n += h * density1(s, x, m);
      EXPECT_NEAR(n, s.N, 1e-6) << s.family_name() << " " << to_string(m);
    }
}

TEST(Correlation, CoincidentPointsRepel) {
  auto s = EnsembleSpec::gaussian(4);
  auto r = evaluate_correlation({s, {IncrementedPoint(0.5), IncrementedPoint(0.5)}, CorrelationVariant::density,
                                 CorrelationMethod::closed_form_gue});
  EXPECT_LT(std::abs(r.value), 1e-12);
  ASSERT_EQ(r.notices.size(), 1u);
  auto near = evaluate_correlation({s, {IncrementedPoint(0.5), IncrementedPoint(0.5 + 1e-3)}, CorrelationVariant::density,
                                    CorrelationMethod::eigenvalue_integral});
  EXPECT_GT(near.value.real(), 0.0);
  EXPECT_LT(near.value.real(), 1e-4);
}

TEST(Correlation, FactorizedKernelIsGaugedGueKernel) {
  auto s = EnsembleSpec::gaussian(6);
  OscillatorBasis basis(6);
  for (double xp : {-2.0, 0.1, 1.3})
    for (double xq : {-0.7, 0.9})
      for (int L : {1, -1}) {
        cplx f = factorized_kernel(s, xp, xq, L, CorrelationVariant::resolvent);
        cplx g = std::exp((xq * xq - xp * xp) / 2.0) * gue_kernel(basis, xp, xq, GueKernelVariant::full, L);
        EXPECT_LT(std::abs(f - g), 1e-10);
      }
}

TEST(Correlation, PreconditionsAndErrors) {
  auto ht = EnsembleSpec::higher_trace(4, 4, 1);
  EXPECT_THROW(corr(ht, {IncrementedPoint(0.0)}, CorrelationVariant::density, CorrelationMethod::closed_form_gue),
               ContractViolation);
  EXPECT_THROW(corr(ht, {IncrementedPoint(0.0)}, CorrelationVariant::density, CorrelationMethod::factorized),
               ContractViolation);
  EXPECT_THROW(corr(EnsembleSpec::gaussian(3), {IncrementedPoint(0.0), IncrementedPoint(1.0)}, CorrelationVariant::density,
                    CorrelationMethod::convolution),
               ContractViolation);
  EXPECT_THROW(corr(EnsembleSpec::gaussian(8), {IncrementedPoint(0.0), IncrementedPoint(1.0), IncrementedPoint(2.0)},
                    CorrelationVariant::density, CorrelationMethod::eigenvalue_integral),
               ContractViolation);
  EXPECT_THROW(corr(EnsembleSpec::higher_trace(4, 3, 4), {IncrementedPoint(0.0)}, CorrelationVariant::density,
                    CorrelationMethod::closed_form_higher_trace),
               ResourceError);
  EXPECT_THROW(method_from_string("fft"), ConfigurationError);
  EXPECT_EQ(method_from_string("closed_form_gue"), CorrelationMethod::closed_form_gue);
}

// ---- generating function ---------------------------------------------------------------

TEST(GeneratingFunction, UnitAtZeroSource) {
  for (const auto& s : {EnsembleSpec::gaussian(3), EnsembleSpec::higher_trace(4, 4, 1)})
    for (double x : {-1.0, 0.0, 0.6})
      EXPECT_EQ(generating_function_value(s, {x}, {0.0}, MetricSignature::all_plus(1)), cplx(1.0));
}

TEST(GeneratingFunction, GaussianTwoLevelExact) {
  // Z = E prod_i (1 + 2J / (a - l_i)), a = x - J - i L 0, expanded over R_1 and R_2.
  auto phi0sq = [](double t) { return std::exp(-t * t) / std::sqrt(kPi); };
  auto phi01 = [](double t) { return std::sqrt(2.0) * t * std::exp(-t * t) / std::sqrt(kPi); };
  auto phi1sq = [](double t) { return 2.0 * t * t * std::exp(-t * t) / std::sqrt(kPi); };
  auto s = EnsembleSpec::gaussian(2);
  for (int L : {1, -1})
    for (double x : {0.0, 0.8})
      for (double J : {0.05, 0.3}) {
        double b = x - J;
        cplx g00 = boundary_value(phi0sq, b, L), g01 = boundary_value(phi01, b, L), g11 = boundary_value(phi1sq, b, L);
        cplx G = g00 + g11;
        cplx exact = 1.0 + 2.0 * J * G + 2.0 * J * J * (G * G - g00 * g00 - 2.0 * g01 * g01 - g11 * g11);
        cplx z = generating_function_value(s, {x}, {J}, MetricSignature({L}));
        EXPECT_LT(std::abs(z - exact), 1e-9) << L << " " << x << " " << J;
      }
}

TEST(GeneratingFunction, SingleLevelExact) {
  auto s = EnsembleSpec::gaussian(1, 1.6);
  auto p = [](double t) { return std::exp(-t * t / 1.6) / std::sqrt(1.6 * kPi); };
  for (int L : {1, -1}) {
    cplx z = generating_function_value(s, {0.4}, {0.2}, MetricSignature({L}));
    EXPECT_LT(std::abs(z - (1.0 + 0.4 * boundary_value(p, 0.2, L))), 1e-9);
  }
}

TEST(GeneratingFunction, SourceDerivativeIsResolvent) {
  for (const auto& s : {EnsembleSpec::higher_trace(4, 4, 1), EnsembleSpec::norm_dependent(3, SpreadFunction::gamma(3.0, 0.3)),
                        EnsembleSpec::gaussian(5)})
    for (int L : {1, -1})
      for (double x : {0.0, 1.2}) {
        const double h = 1e-3;
        auto z = [&](double J) { return generating_function_value(s, {x}, {J}, MetricSignature({L})); };
        cplx d = (8.0 * (z(h) - z(-h)) - (z(2 * h) - z(-2 * h))) / (12.0 * h) / (2.0 * kPi);
        cplx r = corr(s, {IncrementedPoint(x, L)}, CorrelationVariant::resolvent, CorrelationMethod::eigenvalue_integral);
        EXPECT_LT(std::abs(d - r), 1e-7) << s.family_name() << " " << L << " " << x;
      }
}

TEST(GeneratingFunction, GaussianPairingLimit) {
  // exp(-tr H^2 / 4) at x = 0: Z -> 1 as J -> 0.
  for (int N = 2; N <= 6; ++N) {
    auto s = EnsembleSpec::gaussian(N, 4.0);
    auto z = [&](double J) { return generating_function_value(s, {0.0}, {J}, MetricSignature::all_plus(1)); };
    const double h = 2e-4;
    cplx lim = (8.0 * z(h) - 6.0 * z(2 * h) + z(4 * h)) / 3.0;
    EXPECT_LT(std::abs(lim - 1.0), 1e-8) << N;
  }
}

TEST(GeneratingFunction, RejectsHigherK) {
  EXPECT_THROW(generating_function_value(EnsembleSpec::gaussian(4), {0.0, 1.0}, {0.1, 0.1}, MetricSignature::all_plus(2)),
               ContractViolation);
}

// ---- time domain -----------------------------------------------------------------------

TEST(TimeDomain, GaussianTimeCorrelationByQuadrature) {
  EXPECT_NEAR(gaussian_time_correlation(1, 0.7), std::exp(-0.49 / 4.0) / std::sqrt(2.0 * kPi), 1e-16);
  for (int N : {2, 5})
    for (double scale : {1.0, 2.5})
      for (double t : {0.0, 0.8, 2.9}) {
        auto s = EnsembleSpec::gaussian(N, scale);
        auto re = [&](double x) { return density1(s, x, CorrelationMethod::closed_form_gue) * std::cos(t * x); };
        auto im = [&](double x) { return density1(s, x, CorrelationMethod::closed_form_gue) * std::sin(t * x); };
        const double X = 12.0 * std::sqrt(scale * N);
        double a = integrate(re, -X, X, 1e-12, 1e-15).value / std::sqrt(2.0 * kPi);
        double b = integrate(im, -X, X, 1e-12, 1e-15).value / std::sqrt(2.0 * kPi);
        EXPECT_NEAR(gaussian_time_correlation(N, t, scale), a, 1e-10);
        EXPECT_NEAR(b, 0.0, 1e-10);
      }
}

TEST(TimeDomain, ResolventTransformSupportedOnPositiveTimes) {
  auto s = EnsembleSpec::gaussian(4);
  auto xg = UniformGrid::linspace(-80.0, 80.0, 3201);
  GridFunction in{xg, {}};
  for (std::size_t i = 0; i < xg.count; ++i)
    in.values.push_back(corr(s, {IncrementedPoint(xg.at(i))}, CorrelationVariant::resolvent, CorrelationMethod::closed_form_gue));
  ResolventTail tail{spectral_moments(s, 6), 1.0};
  auto tg = UniformGrid::linspace(-6.0, 6.0, 121);
  auto out = time_domain_transform(in, TimeTransform::energy_to_time, tg, tail);
  double peak = 0.0;
  for (auto v : out.values) peak = std::max(peak, std::abs(v));
  for (std::size_t j = 0; j < tg.count; ++j) {
    double t = tg.at(j);
    if (t < -1e-12) {
      EXPECT_LT(std::abs(out.values[j]), 1e-6 * peak) << t;
    } else if (t > 1e-12) {
      EXPECT_LT(std::abs(out.values[j] - cplx(0.0, 2.0) * gaussian_time_correlation(4, t)), 1e-5) << t;
    }
  }
}

TEST(TimeDomain, DensityRoundTrip) {
  auto s = EnsembleSpec::higher_trace(4, 4, 1);
  auto xg = UniformGrid::linspace(-9.0, 9.0, 721);
  GridFunction R{xg, {}};
  for (std::size_t i = 0; i < xg.count; ++i) R.values.push_back(density1(s, xg.at(i)));
  auto tg = UniformGrid::linspace(-40.0, 40.0, 1601);
  auto r = time_domain_transform(R, TimeTransform::energy_to_time, tg);
  auto back = time_domain_transform(r, TimeTransform::time_to_energy, xg);
  double worst = 0.0;
  for (std::size_t i = 0; i < xg.count; ++i) worst = std::max(worst, std::abs(back.values[i] - R.values[i]));
  EXPECT_LT(worst, 1e-4);
}

TEST(TimeDomain, NyquistViolationRejected) {
  GridFunction in{UniformGrid::linspace(-5.0, 5.0, 11), std::vector<cplx>(11, 0.0)};
  EXPECT_THROW(time_domain_transform(in, TimeTransform::energy_to_time, UniformGrid::linspace(-5.0, 5.0, 11)),
               ConfigurationError);
}

TEST(TimeDomain, ArbitrarySideSynthesis) {
  for (int N : {1, 3, 6}) {
    auto s = EnsembleSpec::gaussian(N);
    auto r1 = [N](double t) { return cplx(gaussian_time_correlation(N, t)); };
    for (int L : {1, -1})
      for (double x : {-1.5, 0.0, 0.9}) {
        cplx direct = corr(s, {IncrementedPoint(x, L)}, CorrelationVariant::resolvent, CorrelationMethod::closed_form_gue);
        EXPECT_LT(std::abs(resolvent_from_time(r1, x, L, 40.0) - direct), 1e-5) << N << " " << L << " " << x;
      }
  }
}
