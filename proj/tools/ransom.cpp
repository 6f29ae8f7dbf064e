#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <iostream>

#include "ransom/error.hpp"
#include "ransom/harness.hpp"
#include "ransom/steps.hpp"

using nlohmann::json;
using namespace ransom;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

json stein_report(const std::string& dist, double eta, std::size_t n, std::uint64_t seed) {
  Rng rng(split_rng(RngState{seed, 0}, Consumer::Step));
  auto g = [](double s) { return s * s; };
  auto gp = [](double s) { return 2.0 * s; };
  SteinCheck check;
  double closed = 0.0;
  if (dist == "exp") {
    check = verify_stein_exponential(g, gp, eta, n, rng);
    closed = 2.0 * eta * eta;
  } else {
    check = verify_stein_beta(g, gp, eta, n, rng);
    const double k = 1.0 / eta - 1.0;
    closed = 2.0 / ((k + 1.0) * (k + 2.0));
  }
  json out;
  out["dist"] = dist;
  out["eta"] = eta;
  out["n"] = n;
  out["lhs"] = check.lhs;
  out["rhs"] = check.rhs;
  out["abs_err"] = check.abs_err;
  out["std_error"] = check.std_error;
  out["closed_form"] = closed;
  out["within_4se"] = check.abs_err <= 4.0 * check.std_error;
  return out;
}

json moments_report(double q, double eta, std::size_t n, std::uint64_t seed) {
  json out = json::array();
  for (auto kind : {StepKind::Exponential, StepKind::Beta}) {
    Rng rng(split_rng(RngState{seed, 0}, Consumer::Step));
    const StepDistribution dist(kind, eta);
    const auto m = estimate_moments(dist, q, n, rng);
    json r;
    r["dist"] = kind == StepKind::Exponential ? "exp" : "beta";
    r["eta"] = eta;
    r["q"] = m.q;
    r["n"] = m.n_samples;
    r["C_s"] = m.c_s;
    r["M_w"] = m.m_w;
    r["M_ws"] = m.m_ws;
    r["C_delta"] = m.c_delta;
    out.push_back(r);
  }
  return out;
}

void apply_overrides(RunConfig& config, const std::vector<std::uint64_t>& seeds,
                     const std::string& out_dir, bool theory, bool plain,
                     const std::string& diagnostics, std::int64_t steps) {
  if (!seeds.empty()) config.seeds = seeds;
  if (!out_dir.empty()) config.output_dir = out_dir;
  if (theory && !config.theory_schedule) config.theory_schedule = TheoryAnnotation{};
  if (plain) config.plain_step = true;
  if (!diagnostics.empty()) {
    if (diagnostics != "full-grad" && diagnostics != "none") {
      throw ConfigError("--diagnostics must be full-grad or none");
    }
    config.full_grad_diagnostics = diagnostics == "full-grad";
  }
  if (steps > 0) {
    config.steps = steps;
    config.epochs.reset();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized-step second-order momentum optimizers"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  bool theory = false;
  bool plain = false;
  bool wall = false;
  std::string diagnostics;
  std::int64_t steps = 0;

  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds, "Seeds")->delimiter(',');
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--theory-schedule", theory, "Use theory (eta, beta) for the horizon");
  run->add_flag("--plain-step", plain, "Step along -m instead of the LMO direction");
  run->add_option("--diagnostics", diagnostics, "none | full-grad");
  run->add_option("--steps", steps, "Override the step count");
  run->add_flag("--wall-time", wall, "Record wall_ms (makes CSVs non-reproducible)");

  std::string dist = "exp";
  double eta = 0.1;
  std::size_t n = 1000000;
  std::uint64_t seed = 1;
  auto* stein = app.add_subcommand("verify-stein", "Monte Carlo check of the Stein identities");
  stein->add_option("--dist", dist, "exp | beta")->check(CLI::IsMember({"exp", "beta"}));
  stein->add_option("--eta", eta, "Mean step");
  stein->add_option("--n", n, "Samples");
  stein->add_option("--seed", seed, "Seed");

  std::vector<std::int64_t> horizons;
  double burn_in = 0.0;
  auto* rates = app.add_subcommand("rate-suite", "Fit stationarity vs horizon slope");
  rates->add_option("config", config_path, "Config JSON")->required()->check(CLI::ExistingFile);
  rates->add_option("--T", horizons, "Horizons")->delimiter(',')->required();
  rates->add_option("--seeds", seeds, "Seeds")->delimiter(',');
  rates->add_option("--burn-in", burn_in, "Fraction of each run excluded from the average");
  rates->add_flag("--theory-schedule", theory, "Use theory (eta, beta) for each horizon");

  double q = 2.0;
  double moment_eta = 0.1;
  std::size_t moment_n = 1000000;
  auto* moments = app.add_subcommand("moments", "Estimate step-distribution moment constants");
  moments->add_option("--q", q, "Moment order in (1, 2]");
  moments->add_option("--eta", moment_eta, "Mean step");
  moments->add_option("--n", moment_n, "Samples");
  moments->add_option("--seed", seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      RunConfig config = load_config(config_path);
      apply_overrides(config, seeds, out_dir, theory, plain, diagnostics, steps);
      if (wall) config.wall_time = true;
      const auto result = run_experiment(config);
      std::cout << result.summary.dump(2) << '\n';
      return result.any_aborted ? kExitNumeric : kExitOk;
    }
    if (*stein) {
      std::cout << stein_report(dist, eta, n, seed).dump(2) << '\n';
      return kExitOk;
    }
    if (*rates) {
      RunConfig config = load_config(config_path);
      apply_overrides(config, seeds, "", theory, false, "", 0);
      const auto result = rate_suite(config, horizons, burn_in);
      json out;
      out["slope"] = result.fit.slope;
      out["intercept"] = result.fit.intercept;
      out["r2"] = result.fit.r2;
      out["burn_in"] = burn_in;
      json pts = json::array();
      for (const auto& p : result.points) {
        pts.push_back({{"T", p.horizon}, {"mean", p.mean}, {"per_seed", p.per_seed}});
      }
      out["points"] = pts;
      std::cout << out.dump(2) << '\n';
      return kExitOk;
    }
    if (*moments) {
      std::cout << moments_report(q, moment_eta, moment_n, seed).dump(2) << '\n';
      return kExitOk;
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
