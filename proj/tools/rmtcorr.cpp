// rmtcorr: correlation tables and verification suites from the command line.
//
//   rmtcorr corr --ensemble gue.json --k 1 --grid -4:4:401 --method convolution --variant R
//   rmtcorr verify --suite all --seed 7
//
// Exit status: 0 success, 1 numerical failure or failed criterion, 2 usage/config error.
// RMTCORR_OUTPUT_DIR, when set, prefixes relative --output paths.

#include "run_config.hpp"

#include <rmtsusy/correlation.hpp>
#include <rmtsusy/verification.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

namespace {

using rmtcorr::json;
using namespace rmtsusy;

constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct CorrOptions {
  std::string ensemble;
  int k = 1;
  std::vector<std::string> grids;
  std::string method = "convolution";
  std::string variant = "R";
  std::string metric;
  std::string output;
  std::string format = "csv";
  std::uint64_t seed = 1;
  int threads = 0;
  double rel_tol = 1e-12;
  int gh_nodes = 128;
  bool no_error = false;
};

struct VerifyCli {
  std::string suite = "all";
  std::optional<int> N, k;
  std::uint64_t seed = 7;
  int threads = 0;
  long mc_samples = 1000000;
  std::string output;
  std::string format = "text";
  bool timings = false;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::filesystem::path output_path(const std::string& p) {
  std::filesystem::path path(p);
  if (const char* dir = std::getenv("RMTCORR_OUTPUT_DIR"); dir && *dir && path.is_relative())
    path = std::filesystem::path(dir) / path;
  return path;
}

// Writes to --output or stdout.
void emit(const std::string& text, const std::string& output) {
  if (output.empty() || output == "-") {
    std::cout << text;
    return;
  }
  auto path = output_path(output);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write " + path.string());
  out << text;
}

json conventions() {
  return {{"scale", kScaleConvention},
          {"resolvent", "Rhat_k = pi^-k E prod_p tr (x_p - i L_p 0 - H)^-1"},
          {"density", "R_k = E prod_p tr delta(x_p - H)"},
          {"metric", "L_p = +1 puts the increment below the real axis"}};
}

struct Row {
  std::vector<double> x;
  cplx value;
  double error = 0.0;
  std::string failure;
};

int cmd_corr(const CorrOptions& o) {
  const std::filesystem::path cfg_path(o.ensemble);
  const json cfg = rmtcorr::load_json(cfg_path);
  const EnsembleSpec spec = rmtcorr::parse_ensemble(cfg, cfg_path.parent_path());
  if (o.k < 1 || o.k > 2) throw ConfigurationError("--k must be 1 or 2");
  if (o.grids.empty()) throw ConfigurationError("--grid is required");
  if (o.grids.size() != 1 && static_cast<int>(o.grids.size()) != o.k)
    throw ConfigurationError("give one --grid for all points or one per point");
  if (o.format != "csv" && o.format != "json") throw ConfigurationError("--format must be csv or json");
  if (o.threads < 0) throw ConfigurationError("--threads must be >= 0");
  std::vector<rmtcorr::Grid> grids;
  for (int p = 0; p < o.k; ++p) grids.push_back(rmtcorr::parse_grid(o.grids[o.grids.size() == 1 ? 0 : p]));
  const auto method = method_from_string(o.method);
  const auto variant = variant_from_string(o.variant);
  const auto metric = rmtcorr::parse_metric(o.metric, o.k);

  std::vector<Row> rows;
  {
    std::vector<int> idx(o.k, 0);
    while (true) {
      Row r;
      for (int p = 0; p < o.k; ++p) r.x.push_back(grids[p].at(idx[p]));
      rows.push_back(std::move(r));
      int p = o.k - 1;
      while (p >= 0 && ++idx[p] == grids[p].count) idx[p--] = 0;
      if (p < 0) break;
    }
  }
  // Fail fast on a request the method cannot serve at all (a usage error, not a numerical one).
  auto request = [&](const Row& r) {
    CorrelationRequest q{spec, {}, variant, method, !o.no_error, {o.gh_nodes, o.rel_tol}};
    for (int p = 0; p < o.k; ++p) q.points.emplace_back(r.x[p], metric[p]);
    return q;
  };
  auto eval = [&](Row& r, bool first) {
    try {
      auto res = evaluate_correlation(request(r));
      r.value = res.value;
      r.error = res.error_estimate;
    } catch (const ContractViolation& e) {
      if (first) throw;
      r.failure = e.what();
    } catch (const ConfigurationError& e) {
      if (first) throw;
      r.failure = e.what();
    } catch (const Error& e) {
      r.failure = e.what();
    }
  };
  eval(rows.front(), true);
  const int nthreads = std::max(1, o.threads);
  if (nthreads == 1) {
    for (std::size_t i = 1; i < rows.size(); ++i) eval(rows[i], false);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = 1 + t; i < rows.size(); i += nthreads) eval(rows[i], false);
      });
    for (auto& th : pool) th.join();
  }

  json run = {{"ensemble", cfg},       {"k", o.k},         {"grids", o.grids},       {"method", to_string(method)},
              {"variant", to_string(variant)}, {"metric", metric}, {"rel_tol", o.rel_tol}, {"gauss_hermite_nodes", o.gh_nodes},
              {"seed", o.seed}};
  const std::string hash = rmtcorr::fnv1a_hex(run.dump());

  // Footer: trapezoid integral of R_1 over the grid (from Im Rhat_1 = L R_1 for the resolvent).
  json footer = json::object();
  int failures = 0;
  for (const auto& r : rows) failures += !r.failure.empty();
  footer["rows"] = rows.size();
  footer["failed_rows"] = failures;
  if (o.k == 1 && grids[0].count > 1 && failures == 0) {
    const double h = (grids[0].hi - grids[0].lo) / (grids[0].count - 1);
    double s = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double d = variant == CorrelationVariant::density ? rows[i].value.real() : metric[0] * rows[i].value.imag();
      s += (i == 0 || i + 1 == rows.size() ? 0.5 : 1.0) * h * d;
    }
    footer["integral_R1"] = s;
    footer["N"] = spec.N;
  }

  std::ostringstream out;
  if (o.format == "csv") {
    out << "# rmtcorr " << kVersion << "\n# config_hash " << hash << "\n# seed " << o.seed << "\n";
    const json conv = conventions();
    for (const auto& [key, value] : conv.items()) out << "# convention " << key << ": " << value.get<std::string>() << "\n";
    out << "# ensemble " << cfg.dump() << "\n";
    out << "method,variant,k";
    for (int p = 1; p <= o.k; ++p) out << ",x" << p;
    out << ",value_re,value_im,error\n";
    for (const auto& r : rows) {
      out << to_string(method) << "," << (variant == CorrelationVariant::density ? "R" : "Rhat") << "," << o.k;
      for (double x : r.x) out << "," << num(x);
      if (r.failure.empty())
        out << "," << num(r.value.real()) << "," << num(r.value.imag()) << "," << num(r.error) << "\n";
      else
        out << ",nan,nan,nan\n";
    }
    out << "# footer " << footer.dump() << "\n";
    for (const auto& r : rows)
      if (!r.failure.empty()) out << "# failure at x=" << num(r.x[0]) << ": " << r.failure << "\n";
  } else {
    json j = {{"tool", "rmtcorr"}, {"version", kVersion}, {"config_hash", hash}, {"seed", o.seed},
              {"conventions", conventions()}, {"run", run}};
    json table = json::array();
    for (const auto& r : rows) {
      json row = {{"method", to_string(method)},
                  {"variant", variant == CorrelationVariant::density ? "R" : "Rhat"},
                  {"k", o.k},
                  {"x", r.x}};
      if (r.failure.empty()) {
        row["value_re"] = r.value.real();
        row["value_im"] = r.value.imag();
        row["error"] = r.error;
      } else {
        row["failure"] = r.failure;
      }
      table.push_back(row);
    }
    j["rows"] = table;
    j["footer"] = footer;
    out << j.dump(1) << "\n";
  }
  emit(out.str(), o.output);
  if (failures) {
    std::cerr << "rmtcorr: " << failures << " row(s) failed numerically\n";
    return kExitNumerical;
  }
  return 0;
}

int cmd_verify(const VerifyCli& o) {
  if (o.format != "text" && o.format != "json") throw ConfigurationError("--format must be text or json");
  if (o.mc_samples < 100) throw ConfigurationError("--mc-samples must be >= 100");
  VerifyOptions opt{o.seed, o.threads, o.N, o.k, o.mc_samples};
  std::vector<CriterionResult> results;
  bool matched = false;
  for (const auto& s : verification_suites()) {
    if (o.suite != "all" && o.suite != s.name) continue;
    matched = true;
    results.push_back(s.run(opt));
    const auto& r = results.back();
    if (o.format == "text" || !o.output.empty())
      std::fprintf(stderr, "criterion %2d %-20s %s  deviation=%.3e tolerance=%.1e\n", r.id, r.suite.c_str(),
                   r.passed ? "PASS" : "FAIL", r.deviation, r.tolerance);
  }
  if (!matched) {
    std::string names;
    for (const auto& n : verification_suite_names()) names += (names.empty() ? "" : "|") + n;
    throw ConfigurationError("unknown suite '" + o.suite + "' (" + names + ")");
  }
  json report = {{"tool", "rmtcorr"}, {"version", kVersion}, {"seed", o.seed}, {"suite", o.suite},
                 {"conventions", conventions()}};
  json opts = {{"mc_samples", o.mc_samples}};
  if (o.N) opts["N"] = *o.N;
  if (o.k) opts["k"] = *o.k;
  report["options"] = opts;
  report["config_hash"] = rmtcorr::fnv1a_hex(report.dump());
  json crit = json::array();
  bool all = true;
  for (const auto& r : results) {
    json c = {{"id", r.id},           {"suite", r.suite},           {"description", r.description},
              {"passed", r.passed},   {"deviation", r.deviation},   {"tolerance", r.tolerance},
              {"detail", r.detail}};
    if (o.timings) c["seconds"] = r.seconds;
    crit.push_back(c);
    all = all && r.passed;
  }
  report["criteria"] = crit;
  report["passed"] = all;
  if (o.format == "json" || !o.output.empty()) emit(report.dump(1) + "\n", o.output);
  if (o.format == "text" && o.output.empty())
    for (const auto& r : results) std::cout << r.suite << ": " << (r.passed ? "pass" : "FAIL") << " (" << r.detail << ")\n";
  return all ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-N spectral correlation functions of rotation-invariant unitary ensembles"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CorrOptions co;
  auto* corr = app.add_subcommand("corr", "tabulate R_k or Rhat_k on a grid");
  corr->add_option("--ensemble", co.ensemble, "ensemble JSON file")->required();
  corr->add_option("--k", co.k, "number of points (1 or 2)")->capture_default_str();
  corr->add_option("--grid", co.grids, "lo:hi:count, once for all points or once per point")->required();
  corr->add_option("--method", co.method,
                   "convolution|eigenvalue_integral|factorized|closed_form_gue|closed_form_higher_trace")
      ->capture_default_str();
  corr->add_option("--variant", co.variant, "R (density) or Rhat (resolvent)")->capture_default_str();
  corr->add_option("--metric", co.metric, "increment sides, one + or - per point (default all +)");
  corr->add_option("--output", co.output, "output file (default stdout)");
  corr->add_option("--format", co.format, "csv|json")->capture_default_str();
  corr->add_option("--seed", co.seed, "seed recorded with the output")->capture_default_str();
  corr->add_option("--threads", co.threads, "worker threads over grid points (0 = serial)")->capture_default_str();
  corr->add_option("--rel-tol", co.rel_tol, "relative tolerance of adaptive integrals")->capture_default_str();
  corr->add_option("--gh-nodes", co.gh_nodes, "Gauss-Hermite nodes of the convolution")->capture_default_str();
  corr->add_flag("--no-error-estimate", co.no_error, "skip the doubled-order rerun");

  VerifyCli vo;
  auto* verify = app.add_subcommand("verify", "run verification suites");
  verify->add_option("--suite", vo.suite, "all or one suite name")->capture_default_str();
  verify->add_option("--N", vo.N, "restrict suites that scan N (kernel-identity: upper bound)");
  verify->add_option("--k", vo.k, "restrict suites that scan k");
  verify->add_option("--seed", vo.seed, "suite seed")->capture_default_str();
  verify->add_option("--threads", vo.threads, "Monte Carlo worker threads (0 = serial)")->capture_default_str();
  verify->add_option("--mc-samples", vo.mc_samples, "Monte Carlo sample count")->capture_default_str();
  verify->add_option("--output", vo.output, "JSON report file");
  verify->add_option("--format", vo.format, "text|json")->capture_default_str();
  verify->add_flag("--timings", vo.timings, "include runtimes in the report (breaks byte-identical reruns)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  try {
    if (*corr) return cmd_corr(co);
    return cmd_verify(vo);
  } catch (const ConfigurationError& e) {
    std::cerr << "rmtcorr: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ContractViolation& e) {
    std::cerr << "rmtcorr: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "rmtcorr: " << e.what() << "\n";
    return kExitNumerical;
  }
}
