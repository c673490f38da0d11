#include "run_config.hpp"

#include <rmtsusy/correlation.hpp>

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace rmtcorr;

namespace {

struct ToolRun {
  int status = -1;
  std::string out;
};

ToolRun run(const std::string& args, bool merge_stderr = false) {
  ToolRun r;
  std::string cmd = std::string(RMTCORR_BIN) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string config(const std::string& name) { return std::string(RMTCORR_CONFIGS) + "/" + name; }

std::vector<std::string> data_rows(const std::string& csv) {
  std::vector<std::string> rows;
  std::istringstream in(csv);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    rows.push_back(line);
  }
  return rows;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  auto p = std::filesystem::temp_directory_path() / ("rmtcorr_test_" + name);
  std::ofstream(p) << content;
  return p;
}

}  // namespace

// ---- config parsing --------------------------------------------------------------------

TEST(RunConfig, GridSyntax) {
  auto g = parse_grid("-4:4:401");
  EXPECT_EQ(g.count, 401);
  EXPECT_DOUBLE_EQ(g.at(0), -4.0);
  EXPECT_DOUBLE_EQ(g.at(200), 0.0);
  EXPECT_DOUBLE_EQ(g.at(400), 4.0);
  EXPECT_DOUBLE_EQ(parse_grid("1.5:1.5:1").at(0), 1.5);
  for (const char* bad : {"-4:4", "a:4:5", "4:-4:5", "0:1:0", "0:1:5x", "0:1:"})
    EXPECT_THROW(parse_grid(bad), ConfigurationError) << bad;
}

TEST(RunConfig, MetricSyntax) {
  EXPECT_EQ(parse_metric("+-", 2), (std::vector<int>{1, -1}));
  EXPECT_EQ(parse_metric("", 2), (std::vector<int>{1, 1}));
  EXPECT_EQ(parse_metric("- ", 1), (std::vector<int>{-1}));
  EXPECT_THROW(parse_metric("+", 2), ConfigurationError);
  EXPECT_THROW(parse_metric("+x", 2), ConfigurationError);
}

TEST(RunConfig, EnsembleFamilies) {
  auto g = parse_ensemble(json::parse(R"({"N": 3, "family": "gaussian", "scale": 2.0})"));
  EXPECT_EQ(g.N, 3);
  EXPECT_DOUBLE_EQ(std::get<rmtsusy::GaussianFamily>(g.family).scale, 2.0);
  auto d = parse_ensemble(json::parse(R"({"N": 3, "family": "gaussian"})"));
  EXPECT_DOUBLE_EQ(std::get<rmtsusy::GaussianFamily>(d.family).scale, 1.0);
  auto h = parse_ensemble(json::parse(R"({"N": 4, "family": "higher_trace", "M1": 4, "M2": 1, "b": "auto"})"));
  EXPECT_FALSE(std::get<rmtsusy::HigherTraceFamily>(h.family).b.has_value());
  auto hb = parse_ensemble(json::parse(R"({"N": 4, "family": "higher_trace", "M1": 4, "M2": 1, "b": 0.5})"));
  EXPECT_DOUBLE_EQ(*std::get<rmtsusy::HigherTraceFamily>(hb.family).b, 0.5);
  auto s = parse_ensemble(json::parse(R"({"N": 2, "family": "norm_dependent", "spread": {"kind": "spike", "t0": 0.4}})"));
  EXPECT_EQ(std::get<rmtsusy::NormDependentFamily>(s.family).spread.kind, rmtsusy::SpreadFunction::Kind::spike);
}

TEST(RunConfig, UnknownFieldsRejected) {
  for (const char* bad : {R"({"N": 3, "family": "gaussian", "scael": 2.0})",
                          R"({"N": 3, "family": "norm_dependent", "spread": {"kind": "gamma", "shape": 2, "scale": 1, "x": 0}})",
                          R"({"N": 3, "family": "norm_dependent", "spread": {"kind": "distributional",
                              "terms": [{"t0": 1, "order": 0, "weight": 1, "extra": 1}]}})",
                          R"({"N": 3, "family": "cauchy"})", R"({"family": "gaussian"})",
                          R"({"N": "three", "family": "gaussian"})", R"({"N": 3, "family": "higher_trace", "M1": 1, "M2": 1})"})
    EXPECT_THROW(parse_ensemble(json::parse(bad)), ConfigurationError) << bad;
}

TEST(RunConfig, TabulatedSpreadFromCsv) {
  auto dir = std::filesystem::temp_directory_path();
  temp_file("spread.csv", "t,f\n0.5,0\n1.0,2\n1.5,0\n");
  auto spec = parse_ensemble(
      json::parse(R"({"N": 2, "family": "norm_dependent", "spread": {"kind": "tabulated", "csv": "rmtcorr_test_spread.csv"}})"),
      dir);
  const auto& f = std::get<rmtsusy::NormDependentFamily>(spec.family).spread;
  EXPECT_EQ(f.t.size(), 3u);
  EXPECT_DOUBLE_EQ(f.f[1], 2.0);
  temp_file("bad.csv", "t,f\n0.5,0\n1.0\n");
  EXPECT_THROW(parse_ensemble(json::parse(R"({"N": 2, "family": "norm_dependent",
                                              "spread": {"kind": "tabulated", "csv": "rmtcorr_test_bad.csv"}})"),
                              dir),
               ConfigurationError);
}

TEST(RunConfig, HashIsStable) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

// ---- the tool --------------------------------------------------------------------------

TEST(Cli, GueGridWithFooter) {
  auto r = run("corr --ensemble " + config("gue.json") + " --k 1 --grid -8:8:401 --method convolution --variant R");
  ASSERT_EQ(r.status, 0);
  auto rows = data_rows(r.out);
  ASSERT_EQ(rows.size(), 401u);
  EXPECT_EQ(rows[0].rfind("convolution,R,1,-8,", 0), 0u);
  auto pos = r.out.find("# footer ");
  ASSERT_NE(pos, std::string::npos);
  auto footer = json::parse(r.out.substr(pos + 9, r.out.find('\n', pos) - pos - 9));
  EXPECT_NEAR(footer["integral_R1"].get<double>(), 4.0, 1e-9);
  EXPECT_EQ(footer["N"], 4);
  for (const char* key : {"# rmtcorr ", "# config_hash ", "# seed ", "# convention scale"})
    EXPECT_NE(r.out.find(key), std::string::npos) << key;
}

TEST(Cli, SeventeenSignificantDigits) {
  auto r = run("corr --ensemble " + config("gue.json") + " --grid 0.3:0.3:1 --method closed_form_gue --variant R");
  ASSERT_EQ(r.status, 0);
  auto rows = data_rows(r.out);
  ASSERT_EQ(rows.size(), 1u);
  std::vector<std::string> fields;
  std::stringstream ss(rows[0]);
  for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
  ASSERT_EQ(fields.size(), 7u);
  double v = std::stod(fields[4]);
  auto exact = rmtsusy::evaluate_correlation({rmtsusy::EnsembleSpec::gaussian(4),
                                              {rmtsusy::IncrementedPoint(0.3)},
                                              rmtsusy::CorrelationVariant::density,
                                              rmtsusy::CorrelationMethod::closed_form_gue});
  EXPECT_EQ(v, exact.value.real());  // lossless round trip
}

TEST(Cli, InvalidMethodIsUsageError) {
  auto r = run("corr --ensemble " + config("gue.json") + " --grid -1:1:3 --method fft", true);
  EXPECT_EQ(r.status, 2);
  for (const char* m : {"convolution", "eigenvalue_integral", "factorized", "closed_form_gue", "closed_form_higher_trace"})
    EXPECT_NE(r.out.find(m), std::string::npos) << m;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("corr --ensemble " + config("gue.json") + " --grid 1:0:3").status, 2);
  EXPECT_EQ(run("corr --ensemble /nonexistent.json --grid -1:1:3").status, 2);
  EXPECT_EQ(run("corr --ensemble " + config("gue.json") + " --grid -1:1:3 --variant X").status, 2);
  EXPECT_EQ(run("corr --ensemble " + config("gue.json") + " --grid -1:1:3 --k 2 --metric +").status, 2);
  EXPECT_EQ(run("corr --grid -1:1:3").status, 2);
  EXPECT_EQ(run("frobnicate").status, 2);
  auto bad = temp_file("bad_ensemble.json", R"({"N": 3, "family": "gaussian", "color": "blue"})");
  EXPECT_EQ(run("corr --ensemble " + bad.string() + " --grid -1:1:3").status, 2);
  // method not applicable to the family
  EXPECT_EQ(run("corr --ensemble " + config("higher_trace_4_1.json") + " --grid -1:1:3 --method closed_form_gue").status, 2);
  EXPECT_EQ(run("--help").status, 0);
}

TEST(Cli, NumericalFailureExitsOne) {
  // Above the Wick cap the higher-trace closed form raises a resource error per row.
  auto big = temp_file("big_ht.json", R"({"N": 4, "family": "higher_trace", "M1": 3, "M2": 4, "b": 1.0})");
  auto r = run("corr --ensemble " + big.string() + " --grid -1:1:3 --method closed_form_higher_trace");
  EXPECT_EQ(r.status, 1) << r.out;
}

TEST(Cli, MixedMetricTwoPoint) {
  const std::string base = "corr --ensemble " + config("gue.json") + " --k 2 --grid -1.5:1.5:4 --grid -0.5:2:3 --variant Rhat --metric +- ";
  auto a = run(base + "--method convolution --format json");
  auto b = run(base + "--method closed_form_gue --format json");
  ASSERT_EQ(a.status, 0);
  ASSERT_EQ(b.status, 0);
  auto ja = json::parse(a.out), jb = json::parse(b.out);
  ASSERT_EQ(ja["rows"].size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) {
    rmtsusy::cplx va(ja["rows"][i]["value_re"].get<double>(), ja["rows"][i]["value_im"].get<double>());
    rmtsusy::cplx vb(jb["rows"][i]["value_re"].get<double>(), jb["rows"][i]["value_im"].get<double>());
    EXPECT_LT(std::abs(va - vb), 1e-8 * std::max(1.0, std::abs(vb))) << i;
  }
  EXPECT_EQ(ja["run"]["metric"], (json{1, -1}));
  EXPECT_NE(ja["config_hash"], jb["config_hash"]);
}

TEST(Cli, ThreadsDoNotChangeOutput) {
  const std::string base = "corr --ensemble " + config("gamma_spread.json") + " --grid -3:3:25 --method eigenvalue_integral ";
  auto a = run(base + "--threads 0"), b = run(base + "--threads 3");
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, ShippedConfigsLoad) {
  for (const char* c : {"gue.json", "gue_scale4.json", "gamma_spread.json", "spike_spread.json",
                        "quadratic_trace_as_spread.json", "higher_trace_4_1.json", "tabulated_spread.json"}) {
    auto r = run(std::string("corr --ensemble ") + config(c) + " --grid -1:1:3 --method eigenvalue_integral --variant Rhat");
    EXPECT_EQ(r.status, 0) << c;
  }
}

TEST(Cli, OutputDirectoryOverride) {
  auto dir = std::filesystem::temp_directory_path() / "rmtcorr_outdir";
  std::filesystem::remove_all(dir);
  std::string cmd = "RMTCORR_OUTPUT_DIR=" + dir.string() + " " + RMTCORR_BIN + " corr --ensemble " + config("gue.json") +
                    " --grid -1:1:3 --method closed_form_gue --output sub/t.csv";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "sub" / "t.csv"));
}

TEST(Cli, VerifySuites) {
  auto d = run("verify --suite duality --k 2 --N 3 --format json");
  ASSERT_EQ(d.status, 0);
  auto j = json::parse(d.out);
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_LT(j["criteria"][0]["deviation"].get<double>(), 1e-10);
  EXPECT_EQ(run("verify --suite kernel-identity --N 20").status, 0);
  EXPECT_EQ(run("verify --suite no-such-suite").status, 2);
}

TEST(Cli, VerifyIsDeterministic) {
  auto a = run("verify --suite all --seed 7 --mc-samples 20000 --format json");
  auto b = run("verify --suite all --seed 7 --mc-samples 20000 --format json");
  EXPECT_FALSE(a.out.empty());
  EXPECT_EQ(a.out, b.out);
  auto c = run("verify --suite hciz --seed 8 --mc-samples 20000 --format json");
  auto d = run("verify --suite hciz --seed 7 --mc-samples 20000 --format json");
  EXPECT_NE(c.out, d.out);
}
