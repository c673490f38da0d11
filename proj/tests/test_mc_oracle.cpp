#include <rmtsusy/correlation.hpp>
#include <rmtsusy/mc_oracle.hpp>

#include <gtest/gtest.h>

#include <numbers>

using namespace rmtsusy;

namespace {

double gue_r1(int N, double x) {
  double s = 0.0;
  for (double p : oscillator_wavefunctions(N - 1, x)) s += p * p;
  return s;
}

double bin_average(const std::function<double(double)>& f, const BinSpec& b, int i) {
  return integrate(f, b.edge(i), b.edge(i + 1), 1e-11, 1e-14).value / b.width();
}

// Weighted mean of tr H^2 with its standard error.
std::pair<double, double> mean_trace_square(const SampleBatch& b) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < b.count; ++i) {
    double t = 0.0;
    for (int a = 0; a < b.N(); ++a) t += b.spectrum(i)[a] * b.spectrum(i)[a];
    s += t;
    s2 += t * t;
  }
  double n = static_cast<double>(b.count), m = s / n;
  return {m, std::sqrt((s2 / n - m * m) / n)};
}

}  // namespace

TEST(MonteCarlo, GaussianSecondMoment) {
  // E[tr H^2] = N^2 scale / 2
  for (double scale : {1.0, 4.0}) {
    auto b = sample_batch(EnsembleSpec::gaussian(2, scale), 200000, 11);
    auto [m, se] = mean_trace_square(b);
    EXPECT_NEAR(m, 2.0 * scale, 4.0 * se) << scale;
    EXPECT_DOUBLE_EQ(b.effective_sample_size, 200000.0);
    EXPECT_TRUE(b.warnings.empty());
  }
}

TEST(MonteCarlo, SpikeSpreadIsRescaledGaussian) {
  // A spike draws no random numbers, so the stream matches the Gaussian one exactly.
  auto a = sample_batch(EnsembleSpec::norm_dependent(3, SpreadFunction::spike(0.7)), 5000, 3);
  auto g = sample_batch(EnsembleSpec::gaussian(3, 1.4), 5000, 3);
  for (std::size_t i = 0; i < a.eigenvalues.size(); ++i) EXPECT_NEAR(a.eigenvalues[i], g.eigenvalues[i], 1e-12);
}

TEST(MonteCarlo, GammaSpreadSecondMoment) {
  // E[tr H^2 | t] = N^2 t, averaged over t ~ gamma(shape, scale)
  auto b = sample_batch(EnsembleSpec::norm_dependent(3, SpreadFunction::gamma(4.0, 0.25)), 200000, 5);
  auto [m, se] = mean_trace_square(b);
  EXPECT_NEAR(m, 9.0 * 1.0, 4.0 * se);
}

TEST(MonteCarlo, DistributionalSpreadRejected) {
  SpreadFunction f;
  f.kind = SpreadFunction::Kind::distributional;
  f.terms = {{1.0, 0, 1.0}, {1.0, 1, 0.1}};
  EXPECT_THROW(sample_batch(EnsembleSpec::norm_dependent(2, f), 10, 1), ConfigurationError);
}

TEST(MonteCarlo, HigherTraceWeights) {
  auto b = sample_batch(EnsembleSpec::higher_trace(3, 4, 1), 20000, 7);
  for (double w : b.weights) EXPECT_GE(w, 0.0);
  EXPECT_GT(b.effective_sample_size, 0.0);
  EXPECT_LT(b.effective_sample_size, 20000.0);
  EXPECT_NEAR(b.effective_sample_size, effective_sample_size(b.weights), 0.0);
}

TEST(MonteCarlo, EffectiveSampleSize) {
  EXPECT_DOUBLE_EQ(effective_sample_size({1.0, 1.0, 1.0, 1.0}), 4.0);
  EXPECT_DOUBLE_EQ(effective_sample_size({1.0, 0.0, 0.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(effective_sample_size({2.0, 1.0}), 9.0 / 5.0);
}

TEST(MonteCarlo, LowEffectiveSampleSizeWarns) {
  // N = 1, weight h^16 under N(0, 1/2) proposals: ESS / n = 2e-5 in expectation.
  auto b = sample_batch(EnsembleSpec::higher_trace(1, 4, 4), 20000, 2);
  EXPECT_LT(b.effective_sample_size, 200.0);
  EXPECT_EQ(b.warnings.size(), 1u);
  auto c = sample_batch(EnsembleSpec::higher_trace(2, 2, 1), 20000, 2);
  EXPECT_TRUE(c.warnings.empty());
}

TEST(MonteCarlo, DeterministicAcrossThreads) {
  auto spec = EnsembleSpec::norm_dependent(3, SpreadFunction::gamma(2.0, 0.5));
  SampleOptions serial{false, 0, 1000}, par{false, 3, 1000};
  auto a = sample_batch(spec, 7777, 42, serial);
  auto b = sample_batch(spec, 7777, 42, par);
  auto c = sample_batch(spec, 7777, 43, serial);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
  EXPECT_NE(a.eigenvalues, c.eigenvalues);
}

TEST(MonteCarlo, KeepMatricesMatchesSpectrum) {
  auto b = sample_batch(EnsembleSpec::gaussian(3), 20, 9, {true, 0, 4096});
  ASSERT_EQ(b.matrices.size(), 20u);
  for (std::size_t i = 0; i < b.count; ++i) {
    EXPECT_NEAR(b.matrices[i].trace().real(), b.spectrum(i)[0] + b.spectrum(i)[1] + b.spectrum(i)[2], 1e-12);
    EXPECT_NEAR((b.matrices[i] - b.matrices[i].adjoint()).norm(), 0.0, 1e-15);
  }
}

TEST(MonteCarlo, OnePointDensityGaussian) {
  // N = 2: R_1(0) = phi_0(0)^2 = 1/sqrt(pi); whole histogram within errors of sum phi_n^2.
  auto b = sample_batch(EnsembleSpec::gaussian(2), 400000, 21);
  BinSpec bins{-3.5, 3.5, 41};
  auto d = estimate_r1(b, bins);
  EXPECT_DOUBLE_EQ(gue_r1(2, 0.0), 1.0 / std::sqrt(std::numbers::pi));
  EXPECT_NEAR(d.total, 2.0, 4.0 * d.total_error + 1e-3);
  int outliers = 0;
  for (int i = 0; i < bins.bins; ++i) {
    double ref = bin_average([](double x) { return gue_r1(2, x); }, bins, i);
    if (std::abs(d.density[i] - ref) > 3.0 * d.standard_error[i]) ++outliers;
  }
  EXPECT_LE(outliers, 3);
  int mid = bins.index(0.0);
  double ref0 = bin_average([](double x) { return gue_r1(2, x); }, bins, mid);
  EXPECT_NEAR(ref0, 1.0 / std::sqrt(std::numbers::pi), 5e-3);
  EXPECT_NEAR(d.density[mid], ref0, 4.0 * d.standard_error[mid]);
}

TEST(MonteCarlo, JackknifeMatchesBinomialError) {
  // Unit weights: the jackknife error of a bin is sqrt(p (1 - p) / n) / width exactly
  // when each sample contributes at most one eigenvalue (N = 1).
  auto b = sample_batch(EnsembleSpec::gaussian(1), 10000, 4);
  BinSpec bins{-2.0, 2.0, 8};
  auto d = estimate_r1(b, bins);
  for (int i = 0; i < bins.bins; ++i) {
    double p = d.density[i] * bins.width();
    EXPECT_NEAR(d.standard_error[i], std::sqrt(p * (1.0 - p) / (10000.0 - 1.0)) / bins.width(), 1e-12);
  }
}

TEST(MonteCarlo, JackknifeMatchesBruteForce) {
  auto b = sample_batch(EnsembleSpec::higher_trace(2, 2, 1), 60, 8);
  BinSpec bins{-2.0, 2.0, 5};
  auto d = estimate_r1(b, bins);
  const double n = 60.0;
  for (int c = 0; c < bins.bins; ++c) {
    std::vector<double> loo;
    for (std::size_t s = 0; s < b.count; ++s) {
      double A = 0.0, W = 0.0;
      for (std::size_t r = 0; r < b.count; ++r) {
        if (r == s) continue;
        W += b.weights[r];
        for (int a = 0; a < 2; ++a)
          if (bins.index(b.spectrum(r)[a]) == c) A += b.weights[r] / bins.width();
      }
      loo.push_back(A / W);
    }
    double m = 0.0;
    for (double v : loo) m += v / n;
    double ss = 0.0;
    for (double v : loo) ss += (v - m) * (v - m);
    EXPECT_NEAR(d.standard_error[c], std::sqrt((n - 1.0) / n * ss), 1e-12) << c;
  }
}

TEST(MonteCarlo, HigherTraceDensityMatchesClosedForm) {
  auto spec = EnsembleSpec::higher_trace(3, 4, 1);
  auto b = sample_batch(spec, 200000, 31);
  BinSpec bins{-3.0, 3.0, 12};
  auto d = estimate_r1(b, bins);
  auto exact = [&](double x) {
    return evaluate_correlation(
               {spec, {IncrementedPoint(x)}, CorrelationVariant::density, CorrelationMethod::closed_form_higher_trace, false})
        .value.real();
  };
  int outliers = 0;
  for (int i = 0; i < bins.bins; ++i)
    if (std::abs(d.density[i] - bin_average(exact, bins, i)) > 3.0 * d.standard_error[i]) ++outliers;
  EXPECT_LE(outliers, 1);
}

TEST(MonteCarlo, HalfSampleConsistentWithFull) {
  auto spec = EnsembleSpec::higher_trace(2, 4, 1);
  auto full = sample_batch(spec, 100000, 77);
  SampleBatch half = full;
  half.count = 50000;
  half.eigenvalues.resize(50000 * 2);
  half.weights.resize(50000);
  BinSpec bins{-2.5, 2.5, 10};
  auto a = estimate_r1(full, bins), h = estimate_r1(half, bins);
  for (int i = 0; i < bins.bins; ++i) {
    // half-sample error about sqrt(2) times the full one
    if (a.density[i] > 0.05) {
      EXPECT_NEAR(h.standard_error[i] / a.standard_error[i], std::sqrt(2.0), 0.25) << i;
    }
    EXPECT_NEAR(h.density[i], a.density[i], 4.0 * h.standard_error[i] + 1e-12) << i;
  }
}

TEST(MonteCarlo, EmptyBinsFlagged) {
  auto b = sample_batch(EnsembleSpec::gaussian(2), 1000, 1);
  BinSpec bins{10.0, 12.0, 4};
  auto d = estimate_r1(b, bins);
  EXPECT_EQ(d.empty_bins.size(), 4u);
  EXPECT_EQ(d.density.size(), 4u);
  EXPECT_THROW(estimate_r1(b, BinSpec{1.0, 1.0, 3}), ConfigurationError);
}

TEST(MonteCarlo, TwoPointHistogram) {
  auto spec = EnsembleSpec::gaussian(3);
  auto b = sample_batch(spec, 200000, 13);
  BinSpec bins{-2.5, 2.5, 6};
  auto d = estimate_r2(b, bins);
  for (int i = 0; i < bins.bins; ++i)
    for (int j = 0; j < bins.bins; ++j) EXPECT_DOUBLE_EQ(d.at(i, j), d.at(j, i));
  // Integral over the box: E[# ordered pairs inside] <= N (N - 1)
  double total = 0.0;
  for (double v : d.density) total += v * bins.width() * bins.width();
  EXPECT_LT(total, 6.0);
  EXPECT_GT(total, 5.0);
  // Against R_2 from the kernel at a few off-diagonal cells (centre values, so loose).
  auto r2 = [&](double x, double y) {
    return evaluate_correlation({spec, {IncrementedPoint(x), IncrementedPoint(y)}, CorrelationVariant::density,
                                 CorrelationMethod::closed_form_gue, false})
        .value.real();
  };
  for (auto [i, j] : {std::pair{1, 4}, std::pair{2, 3}, std::pair{0, 3}}) {
    const int n = 6;
    double ref = 0.0;
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c)
        ref += r2(bins.edge(i) + (a + 0.5) * bins.width() / n, bins.edge(j) + (c + 0.5) * bins.width() / n);
    ref /= n * n;
    EXPECT_NEAR(d.at(i, j), ref, 4.0 * d.error_at(i, j) + 2e-3 * ref) << i << "," << j;
  }
}

TEST(MonteCarlo, HaarUnitary) {
  std::mt19937_64 rng(5);
  for (int N : {1, 2, 4}) {
    auto U = haar_unitary(N, rng);
    EXPECT_NEAR((U * U.adjoint() - Eigen::MatrixXcd::Identity(N, N)).norm(), 0.0, 1e-13);
  }
  // E[U_11] = 0, E|U_11|^2 = 1/N, E|U_11|^4 = 2/(N(N+1)); the same for V U.
  const int N = 3, n = 40000;
  auto V = haar_unitary(N, std::uint64_t{99});
  for (bool rotate : {false, true}) {
    double m1r = 0.0, m2 = 0.0, m4 = 0.0, v4 = 0.0;
    for (int i = 0; i < n; ++i) {
      Eigen::MatrixXcd U = haar_unitary(N, rng);
      if (rotate) U = V * U;
      m1r += U(0, 0).real();
      double q = std::norm(U(0, 0));
      m2 += q;
      m4 += q * q;
      v4 += q * q * q * q;
    }
    m1r /= n;
    m2 /= n;
    m4 /= n;
    v4 /= n;
    EXPECT_NEAR(m1r, 0.0, 4.0 * std::sqrt(0.5 / N / n));
    EXPECT_NEAR(m2, 1.0 / N, 4.0 * std::sqrt(m4 / n));
    EXPECT_NEAR(m4, 2.0 / (N * (N + 1.0)), 4.0 * std::sqrt(v4 / n));
  }
}

TEST(MonteCarlo, HcizAgainstExact) {
  auto one = hciz_mc({0.7}, {1.3}, 10, 1);
  EXPECT_NEAR(std::abs(one.value - std::exp(cplx(0.0, 0.91))), 0.0, 1e-14);
  EXPECT_NEAR(one.standard_error, 0.0, 1e-7);
  std::vector<double> E{0.3, -0.8}, R{1.1, 0.4};
  auto mc = hciz_mc(E, R, 200000, 17);
  cplx exact = hciz_exact(E, R).value;
  EXPECT_NEAR(mc.value.real(), exact.real(), 4.0 * mc.standard_error);
  EXPECT_NEAR(mc.value.imag(), exact.imag(), 4.0 * mc.standard_error);
  std::vector<double> E3{0.5, -0.2, 1.0}, R3{-0.6, 0.9, 0.3};
  auto mc3 = hciz_mc(E3, R3, 200000, 18);
  cplx exact3 = hciz_exact(E3, R3).value;
  EXPECT_LT(std::abs(mc3.value - exact3), 5.0 * mc3.standard_error);
}
