#pragma once

// Monte Carlo ground truth: matrix sampling for every family, weighted eigenvalue
// histograms with jackknife errors, and Haar averages for the group integral.
//
// Random streams are per block of samples, seeded from (seed, block index) by splitmix,
// so a batch is bitwise identical for any thread count.

#include <rmtsusy/ensembles.hpp>
#include <rmtsusy/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace rmtsusy {

struct SampleOptions {
  bool keep_matrices = false;
  int threads = 0;  // 0 = serial
  std::size_t block = 4096;
};

struct SampleBatch {
  EnsembleSpec spec;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::vector<double> eigenvalues;  // count x N, ascending within a sample
  std::vector<double> weights;      // 1 for direct sampling
  std::vector<Eigen::MatrixXcd> matrices;
  double effective_sample_size = 0.0;
  std::vector<std::string> warnings;

  int N() const { return spec.N; }
  const double* spectrum(std::size_t i) const { return eigenvalues.data() + i * static_cast<std::size_t>(spec.N); }
};

namespace detail {

// Neumaier compensated sum.
struct CompensatedSum {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    double t = sum + x;
    c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

inline std::mt19937_64 block_rng(std::uint64_t seed, std::uint64_t block) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(block + 0x5EEDull)));
}

// One draw H with its importance weight.
class MatrixSampler {
 public:
  explicit MatrixSampler(const EnsembleSpec& spec) : spec_(spec) {
    spec.validate();
    if (auto* nd = std::get_if<NormDependentFamily>(&spec.family)) draw_t_ = variance_sampler(nd->spread);
  }

  std::pair<Eigen::MatrixXcd, double> operator()(std::mt19937_64& rng) {
    const int N = spec_.N;
    if (auto* g = std::get_if<GaussianFamily>(&spec_.family)) return {std::sqrt(g->scale) * sample_gue(N, rng), 1.0};
    if (draw_t_) {
      double t = draw_t_(rng);
      return {std::sqrt(2.0 * t) * sample_gue(N, rng), 1.0};
    }
    const auto& h = std::get<HigherTraceFamily>(spec_.family);
    Eigen::MatrixXcd H = sample_gue(N, rng);
    return {H, std::pow(trace_power(H, h.M1), h.M2)};
  }

 private:
  EnsembleSpec spec_;
  std::function<double(std::mt19937_64&)> draw_t_;
};

}  // namespace detail

// (sum w)^2 / sum w^2
inline double effective_sample_size(const std::vector<double>& w) {
  detail::CompensatedSum s, s2;
  for (double v : w) {
    s.add(v);
    s2.add(v * v);
  }
  return s2.value() > 0.0 ? s.value() * s.value() / s2.value() : 0.0;
}

inline SampleBatch sample_batch(const EnsembleSpec& spec, std::size_t count, std::uint64_t seed,
                                const SampleOptions& opt = {}) {
  if (count < 1) throw ContractViolation("sample_batch: count must be >= 1");
  if (opt.block < 1) throw ConfigurationError("sample_batch: block size must be >= 1");
  SampleBatch b;
  b.spec = spec;
  b.seed = seed;
  b.count = count;
  const int N = spec.N;
  b.eigenvalues.resize(count * N);
  b.weights.resize(count);
  if (opt.keep_matrices) b.matrices.resize(count);
  const std::size_t nblocks = (count + opt.block - 1) / opt.block;
  auto run = [&](std::size_t first_block, std::size_t stride) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(N);
    for (std::size_t blk = first_block; blk < nblocks; blk += stride) {
      // Fresh per block: std distributions cache state between calls.
      detail::MatrixSampler draw(spec);
      auto rng = detail::block_rng(seed, blk);
      const std::size_t lo = blk * opt.block, hi = std::min(count, lo + opt.block);
      for (std::size_t i = lo; i < hi; ++i) {
        auto [H, w] = draw(rng);
        es.compute(H, Eigen::EigenvaluesOnly);
        for (int a = 0; a < N; ++a) b.eigenvalues[i * N + a] = es.eigenvalues()[a];
        b.weights[i] = w;
        if (opt.keep_matrices) b.matrices[i] = std::move(H);
      }
    }
  };
  if (opt.threads <= 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < opt.threads; ++t) pool.emplace_back(run, static_cast<std::size_t>(t), opt.threads);
    for (auto& th : pool) th.join();
  }
  b.effective_sample_size = effective_sample_size(b.weights);
  if (b.effective_sample_size < 0.01 * static_cast<double>(count))
    b.warnings.push_back("effective sample size " + std::to_string(b.effective_sample_size) + " below 1% of " +
                         std::to_string(count) + " samples");
  return b;
}

// ---------------------------------------------------------------------------------------
// Histograms

struct BinSpec {
  double lo = -1.0, hi = 1.0;
  int bins = 10;

  void validate() const {
    if (!(hi > lo) || bins < 1) throw ConfigurationError("bins: need lo < hi and at least one bin");
  }
  double width() const { return (hi - lo) / bins; }
  double edge(int i) const { return lo + width() * i; }
  double center(int i) const { return lo + width() * (i + 0.5); }
  int index(double x) const {
    if (x < lo || x >= hi) return -1;
    return std::min(bins - 1, static_cast<int>((x - lo) / width()));
  }
};

struct BinnedDensity {
  BinSpec bins;
  std::vector<double> density;
  std::vector<double> standard_error;
  std::vector<int> empty_bins;
  double total = 0.0;  // sum density * width
  double total_error = 0.0;
};

struct BinnedDensity2 {
  BinSpec bins;  // same bins on both axes
  std::vector<double> density;  // row-major [i * bins + j]
  std::vector<double> standard_error;
  std::vector<int> empty_bins;

  double at(int i, int j) const { return density[i * bins.bins + j]; }
  double error_at(int i, int j) const { return standard_error[i * bins.bins + j]; }
};

namespace detail {

// Ratio estimator R_c = sum_s a_sc / sum_s w_s over cells c with delete-1 jackknife errors.
// The leave-one-out deviation is (R w_s - a_s) / (W - w_s), expanded into per-sample sums
// so a cell only visits the samples that touch it. contributions(s, out) appends
// (cell, a_sc) pairs for sample s with distinct cells.
template <class Contrib>
void jackknife_ratio(const std::vector<double>& w, int cells, Contrib contributions, std::vector<double>& value,
                     std::vector<double>& error) {
  const std::size_t n = w.size();
  CompensatedSum W;
  for (double v : w) W.add(v);
  const double Wt = W.value();
  if (!(Wt > 0.0)) throw NumericalError("jackknife: total weight is zero");
  std::vector<CompensatedSum> A(cells);
  std::vector<double> sau(cells, 0.0), sau2(cells, 0.0), sa2u2(cells, 0.0), swau2(cells, 0.0);
  double swu = 0.0, sw2u2 = 0.0;
  std::vector<std::pair<int, double>> buf;
  for (std::size_t s = 0; s < n; ++s) {
    const double u = n > 1 && Wt - w[s] != 0.0 ? 1.0 / (Wt - w[s]) : 0.0;
    swu += w[s] * u;
    sw2u2 += w[s] * w[s] * u * u;
    buf.clear();
    contributions(s, buf);
    for (const auto& [c, a] : buf) {
      A[c].add(a);
      sau[c] += a * u;
      sau2[c] += a * u * u;
      sa2u2[c] += a * a * u * u;
      swau2[c] += w[s] * a * u * u;
    }
  }
  value.assign(cells, 0.0);
  error.assign(cells, 0.0);
  const double nn = static_cast<double>(n);
  for (int c = 0; c < cells; ++c) {
    const double R = A[c].value() / Wt;
    value[c] = R;
    if (n < 2) continue;
    // d_s = (R w_s - a_s) u_s
    const double sd = R * swu - sau[c];
    const double sd2 = R * R * sw2u2 - 2.0 * R * swau2[c] + sa2u2[c];
    const double ss = std::max(0.0, sd2 - sd * sd / nn);
    error[c] = std::sqrt((nn - 1.0) / nn * ss);
  }
}

}  // namespace detail

// Weighted eigenvalue histogram normalized to the one-point function R_1.
inline BinnedDensity estimate_r1(const SampleBatch& batch, const BinSpec& bins) {
  bins.validate();
  if (batch.count == 0) throw ContractViolation("estimate_r1: empty batch");
  const int N = batch.N(), nb = bins.bins;
  const double width = bins.width();
  // Cell nb holds the in-range total.
  auto contrib = [&](std::size_t s, std::vector<std::pair<int, double>>& out) {
    const double* l = batch.spectrum(s);
    const double w = batch.weights[s];
    int inside = 0;
    for (int a = 0; a < N;) {
      int c = bins.index(l[a]);
      int m = 1;
      while (a + m < N && bins.index(l[a + m]) == c) ++m;  // ascending: equal cells are adjacent
      if (c >= 0) {
        out.emplace_back(c, w * m / width);
        inside += m;
      }
      a += m;
    }
    if (inside) out.emplace_back(nb, w * inside);
  };
  std::vector<double> v, e;
  detail::jackknife_ratio(batch.weights, nb + 1, contrib, v, e);
  BinnedDensity d;
  d.bins = bins;
  d.density.assign(v.begin(), v.begin() + nb);
  d.standard_error.assign(e.begin(), e.begin() + nb);
  d.total = v[nb];
  d.total_error = e[nb];
  for (int i = 0; i < nb; ++i)
    if (d.density[i] == 0.0) d.empty_bins.push_back(i);
  return d;
}

// Weighted histogram of ordered eigenvalue pairs a != b (self-pairs excluded): the
// two-point function R_2 without its contact term delta(x1 - x2) R_1(x1).
inline BinnedDensity2 estimate_r2(const SampleBatch& batch, const BinSpec& bins) {
  bins.validate();
  if (batch.count == 0) throw ContractViolation("estimate_r2: empty batch");
  const int N = batch.N(), nb = bins.bins;
  const double area = bins.width() * bins.width();
  std::vector<int> cells;
  auto contrib = [&](std::size_t s, std::vector<std::pair<int, double>>& out) {
    const double* l = batch.spectrum(s);
    const double w = batch.weights[s];
    cells.clear();
    for (int a = 0; a < N; ++a) {
      int i = bins.index(l[a]);
      if (i < 0) continue;
      for (int b = 0; b < N; ++b) {
        if (b == a) continue;
        int j = bins.index(l[b]);
        if (j >= 0) cells.push_back(i * nb + j);
      }
    }
    std::sort(cells.begin(), cells.end());
    for (std::size_t k = 0; k < cells.size();) {
      std::size_t m = 1;
      while (k + m < cells.size() && cells[k + m] == cells[k]) ++m;
      out.emplace_back(cells[k], w * static_cast<double>(m) / area);
      k += m;
    }
  };
  BinnedDensity2 d;
  d.bins = bins;
  detail::jackknife_ratio(batch.weights, nb * nb, contrib, d.density, d.standard_error);
  for (int c = 0; c < nb * nb; ++c)
    if (d.density[c] == 0.0) d.empty_bins.push_back(c);
  return d;
}

// ---------------------------------------------------------------------------------------
// Haar measure

// QR of a complex Ginibre matrix with the phases of R's diagonal moved into Q.
inline Eigen::MatrixXcd haar_unitary(int N, std::mt19937_64& rng) {
  if (N < 1) throw ContractViolation("haar_unitary: N must be >= 1");
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd Z(N, N);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) Z(a, b) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Z);
  Eigen::MatrixXcd Q = qr.householderQ();
  Eigen::MatrixXcd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < N; ++j) {
    cplx d = R(j, j);
    double m = std::abs(d);
    Q.col(j) *= m > 0.0 ? d / m : cplx(1.0);
  }
  return Q;
}

inline Eigen::MatrixXcd haar_unitary(int N, std::uint64_t seed) {
  std::mt19937_64 rng(detail::splitmix64(seed));
  return haar_unitary(N, rng);
}

struct MonteCarloValue {
  cplx value;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

// Haar mean of exp(i tr U E U^dagger R) for diagonal E, R:
// tr U E U^dagger R = sum_ab R_a E_b |U_ab|^2.
inline MonteCarloValue hciz_mc(const std::vector<double>& E, const std::vector<double>& R, std::size_t samples,
                               std::uint64_t seed) {
  const int N = static_cast<int>(E.size());
  if (N < 1 || R.size() != E.size()) throw ContractViolation("hciz_mc: E and R need equal nonzero length");
  if (samples < 2) throw ContractViolation("hciz_mc: need at least 2 samples");
  const std::size_t block = 4096;
  detail::CompensatedSum re, im, re2, im2;
  for (std::size_t lo = 0, blk = 0; lo < samples; lo += block, ++blk) {
    auto rng = detail::block_rng(seed, blk);
    for (std::size_t i = lo; i < std::min(samples, lo + block); ++i) {
      Eigen::MatrixXcd U = haar_unitary(N, rng);
      double phase = 0.0;
      for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) phase += R[a] * E[b] * std::norm(U(a, b));
      re.add(std::cos(phase));
      im.add(std::sin(phase));
      re2.add(std::cos(phase) * std::cos(phase));
      im2.add(std::sin(phase) * std::sin(phase));
    }
  }
  const double n = static_cast<double>(samples);
  cplx mean(re.value() / n, im.value() / n);
  double var = (re2.value() + im2.value()) / n - std::norm(mean);
  return {mean, std::sqrt(std::max(0.0, var) / (n - 1.0)), samples};
}

}  // namespace rmtsusy
