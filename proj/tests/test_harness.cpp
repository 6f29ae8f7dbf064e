#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "ransom/error.hpp"
#include "ransom/harness.hpp"

using namespace ransom;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json quadratic_config() {
  return json::parse(R"({
    "schema_version": 1,
    "problem": {"kind": "quadratic", "dim": 6, "mu": 1, "L": 5, "seed": 3,
                "noise": {"kind": "gaussian", "sigma_g": 0.5, "sigma_h": 0.5}},
    "optimizers": [
      {"label": "e", "kind": "ransom-e", "eta": 0.05, "beta": 0.2, "batch_size": 4,
       "geometry": {"kind": "l2", "rho": 1}},
      {"label": "storm", "kind": "storm", "eta": 0.05, "beta": 0.2, "batch_size": 4,
       "geometry": {"kind": "l2", "rho": 1}}
    ],
    "steps": 50, "seeds": [1, 2, 3], "eval_every": 10, "output_dir": ""
  })");
}

json mc_config() {
  return json::parse(R"({
    "schema_version": 1,
    "problem": {"kind": "matrix-completion", "seed": 2,
                "synthetic": {"rows": 8, "cols": 10, "rank": 2, "noise": 0.1, "density": 0.6}},
    "optimizers": [
      {"label": "b", "kind": "ransom-b", "eta": 0.1, "beta": 0.2, "batch_size": 4,
       "geometry": {"kind": "nuclear", "rho": 3}}
    ],
    "epochs": 2, "seeds": [5], "eval_every": 3, "output_dir": "",
    "diagnostics": "full-grad"
  })");
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ransom_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RANSOM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("number formatting is shortest round-trip") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(3.0) == "3");
  CHECK(format_number(-2.5e-300) == "-2.5e-300");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-HUGE_VAL) == "-inf");
  Rng rng(RngState{1, 1});
  for (int k = 0; k < 1000; ++k) {
    const double v = rng.normal() * std::pow(10.0, 20 * rng.normal());
    CHECK(std::stod(format_number(v)) == v);
  }
}

TEST_CASE("csv rows: empty optionals stay blank and round-trip") {
  MetricsRow r;
  r.run_id = "e";
  r.seed = 4;
  r.t = 7;
  r.train_loss = 0.25;
  r.stationarity = 1e-3;
  r.s_t = 0.5;
  CHECK(format_row(r) == "e,4,7,,0.25,0.001,,,0.5,");

  std::stringstream ss;
  ss << kCsvVersionLine << '\n' << kCsvHeader << '\n' << format_row(r) << '\n';
  r.test_metric = 0.875;
  r.w_t = 0.1;
  r.wall_ms = 12.5;
  ss << format_row(r) << '\n' << "# aborted: x\n";
  const auto rows = parse_metrics_csv(ss);
  REQUIRE(rows.size() == 2);
  CHECK_FALSE(rows[0].test_metric);
  CHECK_FALSE(rows[0].w_t);
  CHECK(*rows[0].s_t == 0.5);
  CHECK(*rows[1].test_metric == 0.875);
  CHECK(*rows[1].wall_ms == 12.5);
  CHECK(format_row(rows[1]) == format_row(r));
}

TEST_CASE("csv parse errors") {
  std::stringstream bad_header("a,b,c\n");
  CHECK_THROWS_AS(parse_metrics_csv(bad_header), ParseError);
  std::stringstream no_header("# ransom-metrics v1\n");
  CHECK_THROWS_AS(parse_metrics_csv(no_header), ParseError);
  std::stringstream short_row(std::string(kCsvHeader) + "\ne,1,2,3\n");
  CHECK_THROWS_AS(parse_metrics_csv(short_row), ParseError);
  std::stringstream bad_int(std::string(kCsvHeader) + "\ne,x,2,,1,1,,,,\n");
  CHECK_THROWS_AS(parse_metrics_csv(bad_int), ParseError);
  std::stringstream bad_num(std::string(kCsvHeader) + "\ne,1,2,,1,zz,,,,\n");
  CHECK_THROWS_AS(parse_metrics_csv(bad_num), ParseError);
  CHECK_THROWS_AS(read_metrics_csv("/nonexistent/x.csv"), DataError);
}

TEST_CASE("config parsing errors name the problem") {
  auto doc = quadratic_config();
  CHECK_NOTHROW(parse_config(doc));
  auto d = doc;
  d["schema_version"] = 2;
  CHECK_THROWS_AS(parse_config(d), ConfigError);
  d = doc;
  d["optimizers"][1]["label"] = "e";
  CHECK_THROWS_AS(parse_config(d), ConfigError);
  d = doc;
  d["optimizers"][0]["kind"] = "adam";
  CHECK_THROWS_AS(parse_config(d), ConfigError);
  d = doc;
  d["optimizers"][0]["geometry"]["kind"] = "l3";
  CHECK_THROWS_AS(parse_config(d), ConfigError);
  d = doc;
  d.erase("steps");
  CHECK_THROWS_AS(parse_config(d), ConfigError);
  d = doc;
  d["eval_every"] = 0;
  CHECK_THROWS_AS(parse_config(d), ConfigError);
  d = doc;
  d["optimizers"][0]["beta"] = "high";
  try {
    parse_config(d);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("beta") != std::string::npos);
  }
  d = doc;
  d["problem"]["kind"] = "cubic";
  CHECK_THROWS_AS(build_problem(d["problem"], "."), ConfigError);
}

TEST_CASE("steps from epochs and theory schedule overrides") {
  auto cfg = parse_config(mc_config());
  const auto problem = build_problem(cfg.problem, ".");
  const auto n = problem->dataset_size();
  CHECK(resolve_steps(cfg, *problem, cfg.optimizers[0].config) ==
        static_cast<std::int64_t>((2 * n + 3) / 4));

  auto doc = quadratic_config();
  doc["theory_schedule"] = {{"p", 2}, {"q", 2}};
  doc["plain_step"] = true;
  cfg = parse_config(doc);
  const auto opt = effective_optimizer(cfg, cfg.optimizers[0].config, 1000000);
  CHECK(opt.eta.eta0 == doctest::Approx(1e-4));
  CHECK(opt.beta == doctest::Approx(1e-2));
  CHECK(opt.plain_step);
}

TEST_CASE("T = 1 gives the init row and one step row") {
  auto doc = quadratic_config();
  doc["steps"] = 1;
  const auto cfg = parse_config(doc);
  const auto problem = build_problem(cfg.problem, ".");
  const auto r = run_single(*problem, cfg, cfg.optimizers[0], 1);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].t == 0);
  CHECK(r.rows[1].t == 1);
  CHECK_FALSE(r.rows[0].s_t);
  CHECK(r.rows[1].s_t);
  const auto csv = render_csv(r);
  CHECK(csv.rfind(std::string(kCsvVersionLine) + "\n" + kCsvHeader + "\n", 0) == 0);
  std::stringstream ss(csv);
  CHECK(parse_metrics_csv(ss).size() == 2);
}

TEST_CASE("rows appear every eval_every steps and at T") {
  auto doc = quadratic_config();
  doc["steps"] = 25;
  const auto cfg = parse_config(doc);
  const auto problem = build_problem(cfg.problem, ".");
  const auto r = run_single(*problem, cfg, cfg.optimizers[0], 2);
  std::vector<std::int64_t> ts;
  for (const auto& row : r.rows) ts.push_back(row.t);
  CHECK(ts == std::vector<std::int64_t>{0, 10, 20, 25});
  for (const auto& row : r.rows) {
    CHECK_FALSE(row.wall_ms);
    CHECK(row.stationarity >= 0.0);
  }
}

TEST_CASE("constrained runs report a nonnegative Frank-Wolfe gap and momentum error") {
  const auto cfg = parse_config(mc_config());
  const auto problem = build_problem(cfg.problem, ".");
  const auto r = run_single(*problem, cfg, cfg.optimizers[0], 5);
  for (const auto& row : r.rows) {
    CHECK(row.stationarity >= -1e-9);
    CHECK(row.momentum_error);
    CHECK(row.test_metric);
  }
}

TEST_CASE("experiments are deterministic and write csv files plus a summary") {
  auto doc = quadratic_config();
  const auto dir_a = temp_dir("a");
  const auto dir_b = temp_dir("b");
  doc["output_dir"] = dir_a.string();
  const auto a = run_experiment(parse_config(doc));
  doc["output_dir"] = dir_b.string();
  const auto b = run_experiment(parse_config(doc));
  for (const auto& label : {"e", "storm"})
    for (int seed : {1, 2, 3}) {
      const std::string name = std::string(label) + "_seed" + std::to_string(seed) + ".csv";
      REQUIRE(fs::exists(dir_a / name));
      CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    }
  CHECK(fs::exists(dir_a / "summary.json"));
  CHECK(a.summary == b.summary);
  CHECK(a.summary["optimizers"]["e"]["n_runs"] == 3);
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("thread count does not change results") {
  auto doc = quadratic_config();
  setenv("RANSOM_THREADS", "1", 1);
  const auto one = run_experiment(parse_config(doc));
  setenv("RANSOM_THREADS", "4", 1);
  const auto four = run_experiment(parse_config(doc));
  unsetenv("RANSOM_THREADS");
  REQUIRE(one.runs.size() == four.runs.size());
  for (std::size_t i = 0; i < one.runs.size(); ++i) CHECK(render_csv(one.runs[i]) == render_csv(four.runs[i]));
  CHECK(worker_count(2) <= 2);
  CHECK(worker_count(0) >= 1);
}

TEST_CASE("summary is mean and sample std of final values") {
  std::vector<RunResult> runs;
  const double finals[3] = {0.8, 0.9, 0.7};
  for (int s = 0; s < 3; ++s) {
    RunResult r;
    r.label = "x";
    r.seed = s + 1;
    MetricsRow first, last;
    first.test_metric = 0.1;
    last.test_metric = finals[s];
    last.train_loss = s;
    last.stationarity = 2.0 * s;
    r.rows = {first, last};
    runs.push_back(r);
  }
  runs[2].aborted = true;
  const auto j = summarize(runs);
  const auto& x = j["optimizers"]["x"];
  CHECK(x["n_runs"] == 3);
  CHECK(x["final_test_metric"]["mean"].get<double>() == doctest::Approx(0.8));
  CHECK(x["final_test_metric"]["std"].get<double>() == doctest::Approx(0.1));
  CHECK(x["final_train_loss"]["std"].get<double>() == doctest::Approx(1.0));
  CHECK(x["aborted_seeds"] == json::array({3}));
  CHECK(j["csv_version"] == "ransom-metrics v1");
}

TEST_CASE("fit_rate_slope") {
  std::vector<double> t{1e3, 1e4, 1e5}, v;
  for (double h : t) v.push_back(5.0 * std::pow(h, -1.0 / 3.0));
  auto f = fit_rate_slope(t, v);
  CHECK(std::abs(f.slope + 1.0 / 3.0) <= 1e-12);
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(5.0).epsilon(1e-10));

  f = fit_rate_slope(t, {2, 2, 2});
  CHECK(std::abs(f.slope) <= 1e-15);

  // Oracle: closed-form least squares on (log T, log v).
  const std::vector<double> tt{10, 20, 40, 80}, vv{3, 2.5, 1.1, 0.9};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double x = std::log(tt[i]), y = std::log(vv[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  CHECK(fit_rate_slope(tt, vv).slope == doctest::Approx((4 * sxy - sx * sy) / (4 * sxx - sx * sx)).epsilon(1e-12));

  CHECK_THROWS_AS(fit_rate_slope({1, 2}, {1, 1}), ConfigError);
  CHECK_THROWS_AS(fit_rate_slope({1, 1, 2}, {1, 1, 1}), ConfigError);
  CHECK_THROWS_AS(fit_rate_slope({1, 2, 3}, {1, 0, 1}), ConfigError);
}

TEST_CASE("tail_average") {
  std::vector<MetricsRow> rows(5);
  for (int i = 0; i < 5; ++i) {
    rows[i].t = i * 10;
    rows[i].stationarity = i;
  }
  CHECK(tail_average(rows, 0.0) == doctest::Approx(2.5));
  CHECK(tail_average(rows, 0.5) == doctest::Approx(3.5));
}

TEST_CASE("cli exit codes") {
  const auto dir = temp_dir("cli");
  CHECK(run_cli("moments --q 2 --eta 0.1 --n 10000") == 0);
  CHECK(run_cli("run /nonexistent/config.json") == 2);
  {
    std::ofstream(dir / "bad.json") << "{not json";
  }
  CHECK(run_cli("run " + (dir / "bad.json").string()) == 2);
  {
    std::ofstream(dir / "unknown.json") << R"({"schema_version": 1, "problem": {"kind": "quadratic"},
      "optimizers": [{"kind": "nope"}], "steps": 1})";
  }
  CHECK(run_cli("run " + (dir / "unknown.json").string()) == 2);

  // A run whose iterates overflow aborts with the numeric exit code and marks its CSV.
  auto doc = quadratic_config();
  doc["problem"]["mu"] = 1e200;
  doc["problem"]["L"] = 1e300;
  doc["optimizers"] = json::array({json{{"label", "sgd"}, {"kind", "sgdm"}, {"eta", 0.9}, {"beta", 1.0},
                                         {"plain_step", true}}});
  doc["seeds"] = {1};
  doc["output_dir"] = (dir / "out").string();
  std::ofstream(dir / "boom.json") << doc.dump();
  CHECK(run_cli("run " + (dir / "boom.json").string()) == 3);
  const auto csv = slurp(dir / "out" / "sgd_seed1.csv");
  CHECK(csv.find("# aborted:") != std::string::npos);

  doc = quadratic_config();
  doc["output_dir"] = (dir / "ok").string();
  std::ofstream(dir / "ok.json") << doc.dump();
  CHECK(run_cli("run " + (dir / "ok.json").string() + " --steps 5") == 0);
  CHECK(fs::exists(dir / "ok" / "e_seed1.csv"));
  CHECK(read_metrics_csv(dir / "ok" / "e_seed1.csv").back().t == 5);
  fs::remove_all(dir);
}
