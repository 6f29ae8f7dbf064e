// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Run from the repository root (ctest sets the working directory).

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "ransom/error.hpp"
#include "ransom/harness.hpp"
#include "ransom/problems.hpp"
#include "ransom/steps.hpp"

using namespace ransom;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr double kSteinSe = 4.0;
constexpr double kSteinClosedTol = 5e-3;
constexpr double kMomentTol = 0.02;
constexpr double kUnbiasedSe = 4.0;
constexpr double kHvpRelTol = 1e-5;
constexpr double kFeasSlack = 1e-6;
constexpr double kSlopeLo = -0.43;
constexpr double kSlopeHi = -0.23;
constexpr double kSpliceAcc = 0.80;
constexpr double kSpliceGap = 0.02;
constexpr double kMcGap = 0.02;

constexpr double kSteinSeconds = 5.0;
constexpr double kUnbiasedSeconds = 10.0;
constexpr double kLongSeconds = 600.0;

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[1024];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string filter;

void guarded(const std::string& name, const std::function<void()>& body) {
  if (!filter.empty() && name.find(filter) == std::string::npos) return;
  try {
    body();
  } catch (const std::exception& e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

double nuclear_norm(const ParamVector& x) {
  const auto& shape = x.layout()->blocks()[0].shape;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      x.values().data(), shape.rows, shape.cols);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues().sum();
}

ParamVector full_grad(const StochasticOracle& p, const ParamVector& x) {
  return p.full_loss_gradient(x).gradient;
}

// --- Stein identities --------------------------------------------------------

void stein(bool exponential) {
  const std::string name = exponential ? "stein-exponential" : "stein-beta";
  const auto t0 = std::chrono::steady_clock::now();
  auto g = [](double s) { return s * s; };
  auto gp = [](double s) { return 2.0 * s; };
  const std::vector<double> etas = exponential ? std::vector<double>{0.01, 0.1, 0.5}
                                               : std::vector<double>{0.05, 0.2, 0.5};
  bool pass = true;
  std::string detail;
  for (double eta : etas) {
    Rng rng(RngState{1000 + static_cast<std::uint64_t>(eta * 1000), 0});
    const auto c = exponential ? verify_stein_exponential(g, gp, eta, 1000000, rng)
                               : verify_stein_beta(g, gp, eta, 1000000, rng);
    const double k = 1.0 / eta - 1.0;
    const double closed = exponential ? 2.0 * eta * eta : 2.0 / ((k + 1.0) * (k + 2.0));
    const bool ok = c.abs_err <= kSteinSe * c.std_error &&
                    std::abs(c.lhs - closed) <= kSteinClosedTol &&
                    std::abs(c.rhs - closed) <= kSteinClosedTol;
    pass = pass && ok;
    detail += fmt("eta=%g err=%.3g (%.2f SE) closed=%.6g; ", eta, c.abs_err,
                  c.abs_err / c.std_error, closed);
  }
  const double secs = seconds_since(t0);
  report(name, pass && secs < kSteinSeconds, detail + fmt("%.2fs", secs));
}

// --- moment constants ----------------------------------------------------------

void moments() {
  bool pass = true;
  std::string detail;
  Rng rng(RngState{2000, 0});
  for (double eta : {0.01, 0.1, 0.5}) {
    const auto m = estimate_moments(StepDistribution::exponential(eta), 2.0, 1000000, rng);
    const bool ok = std::abs(m.c_s - 2.0) <= kMomentTol && m.m_w == 1.0;
    pass = pass && ok;
    detail += fmt("exp eta=%g C_s=%.4f M_w=%.17g; ", eta, m.c_s, m.m_w);
  }
  for (double eta : {0.05, 0.2, 0.5}) {
    const double k = 1.0 / eta - 1.0;
    const double expect = 2.0 * (k + 1.0) / (k + 2.0);
    const auto m = estimate_moments(StepDistribution::beta(eta), 2.0, 1000000, rng);
    pass = pass && std::abs(m.c_s - expect) <= kMomentTol;
    detail += fmt("beta eta=%g C_s=%.4f (expect %.4f); ", eta, m.c_s, expect);
  }
  report("moment-constants", pass, detail);
}

// --- unbiased correction -------------------------------------------------------

void unbiased(OptimizerKind kind) {
  const std::string name = std::string("unbiased-correction-") + std::string(optimizer_name(kind));
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_config("configs/quadratic_rate.json");
  const auto problem = build_problem(cfg.problem, cfg.base_dir);
  OptimizerConfig opt = cfg.optimizers[0].config;
  opt.kind = kind;
  opt.eta = Schedule{0.2, 0.0};
  opt.beta = 0.3;

  // A generic state: a few steps into a run.
  auto base = initialize(*problem, opt, RngState{3000, 0});
  for (int k = 0; k < 20; ++k) step(base, *problem, opt);
  const auto g0 = full_grad(*problem, base.x);
  auto off = opt;
  off.correction = false;

  const int n = 10000;
  const std::size_t dim = base.x.size();
  std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
  for (int i = 0; i < n; ++i) {
    auto a = base;
    a.step_rng = Rng(RngState{3001, static_cast<std::uint64_t>(i)});
    a.batch_rng = Rng(RngState{3002, static_cast<std::uint64_t>(i)});
    a.noise_root = RngState{3003, static_cast<std::uint64_t>(i)};
    auto b = a;
    step(a, *problem, opt);
    step(b, *problem, off);
    // Identical draws, so m_on - m_off = (1 - beta) delta.
    const auto delta = (1.0 / (1.0 - opt.beta)) * (a.m - b.m);
    const auto diff = delta - (full_grad(*problem, a.x) - g0);
    for (std::size_t k = 0; k < dim; ++k) {
      sum[k] += diff[k];
      sq[k] += diff[k] * diff[k];
    }
  }
  double worst = 0.0, mean_norm = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double mean = sum[k] / n;
    const double se = std::sqrt((sq[k] / n - mean * mean) / n);
    worst = std::max(worst, std::abs(mean) / se);
    mean_norm += mean * mean;
  }
  const double secs = seconds_since(t0);
  report(name, worst <= kUnbiasedSe && secs < kUnbiasedSeconds,
         fmt("draws=%d max |mean|/SE over %zu coords=%.2f, ||mean||=%.3g; %.2fs", n, dim, worst,
             std::sqrt(mean_norm), secs));
}

// --- HVP cross-check -----------------------------------------------------------

void hvp_cross_check() {
  struct Case {
    std::string name;
    std::string config;
    HvpStrategy exact;
  };
  const std::vector<Case> cases{{"quadratic", "configs/quadratic_rate.json", HvpStrategy::Analytic},
                                {"mlp-welsch", "configs/splice.json", HvpStrategy::BackpropForwardOverReverse},
                                {"matrix-completion", "configs/movielens.json", HvpStrategy::Analytic}};
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    const auto cfg = load_config(c.config);
    auto spec = cfg.problem;
    spec.erase("noise");
    const auto problem = build_problem(spec, cfg.base_dir);
    Rng rng(RngState{4000, 0});
    Rng init(RngState{4001, 0});
    const auto x0 = problem->initial_point(init);
    double worst = 0.0;
    for (int probe = 0; probe < 20; ++probe) {
      auto x = x0;
      auto d = ParamVector::zeros_like(x0);
      for (double& v : x.values()) v += 0.5 * rng.normal();
      for (double& v : d.values()) v = rng.normal();
      const auto batch = problem->sample_batch(rng, 32);
      const auto exact = *joint_eval(*problem, x, d, batch, c.exact).hvp;
      const auto cd = *joint_eval(*problem, x, d, batch, HvpStrategy::CentralDifference).hvp;
      worst = std::max(worst, norms(exact - cd).l2 / norms(cd).l2);
    }
    pass = pass && worst <= kHvpRelTol;
    detail += fmt("%s max rel err=%.3g; ", c.name.c_str(), worst);
  }
  report("hvp-cross-check", pass, detail + "20 probes each");
}

// --- feasibility ---------------------------------------------------------------

void feasibility() {
  const json spec = {{"kind", "matrix-completion"},
                     {"seed", 7},
                     {"synthetic", {{"rows", 40}, {"cols", 60}, {"rank", 4}, {"noise", 0.1}, {"density", 0.3}}}};
  const auto problem = build_problem(spec, ".");
  OptimizerConfig opt;
  opt.kind = OptimizerKind::RansomB;
  opt.eta = Schedule{0.1, 0.0};
  opt.beta = 0.1;
  opt.batch_size = 16;
  opt.geometry = Geometry{GeometryKind::NuclearBall, 10.0};
  auto state = initialize(*problem, opt, RngState{5000, 0});
  const double limit = opt.geometry.rho * (1.0 + kFeasSlack);
  int violations = 0;
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    step(state, *problem, opt);
    const double nn = nuclear_norm(state.x);
    worst = std::max(worst, nn);
    violations += nn > limit;
  }
  report("feasibility", violations == 0,
         fmt("10000 RanSOM-B steps on 40x60, rho=10: violations=%d, max nuclear norm=%.9g", violations,
             worst));
}

// --- rate exponent -------------------------------------------------------------

void rate() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_config("configs/quadratic_rate.json");
  const auto res = rate_suite(cfg, {1000, 10000, 100000}, 0.0);
  std::string pts;
  for (const auto& p : res.points) pts += fmt("T=%lld avg=%.4g; ", static_cast<long long>(p.horizon), p.mean);
  const double secs = seconds_since(t0);
  report("rate-exponent",
         res.fit.slope >= kSlopeLo && res.fit.slope <= kSlopeHi && secs < kLongSeconds,
         fmt("slope=%.4f r2=%.4f (%zu seeds) ", res.fit.slope, res.fit.r2, cfg.seeds.size()) + pts +
             fmt("%.1fs", secs));
}

// --- heavy tails ---------------------------------------------------------------

void heavy_tail() {
  const auto cfg = load_config("configs/quadratic_rate.json");
  auto spec = cfg.problem;
  spec["noise"] = {{"kind", "pareto"}, {"sigma_g", 1.0}, {"sigma_h", 1.0}, {"tail_index", 1.8}};
  const auto problem = build_problem(spec, cfg.base_dir);
  const std::int64_t steps = 100000;
  OptimizerConfig opt = cfg.optimizers[0].config;
  opt.kind = OptimizerKind::RansomE;
  const auto th = theory_schedule(static_cast<double>(steps), 1.7, 1.7);
  opt.eta = Schedule{th.eta, 0.0};
  opt.beta = th.beta;

  OptimizerConfig sgd;
  sgd.kind = OptimizerKind::Sgdm;
  sgd.beta = 1.0;
  sgd.plain_step = true;
  sgd.batch_size = opt.batch_size;
  sgd.eta = Schedule{th.eta * opt.geometry.rho, 0.0};

  int ok = 0, sgd_diverged = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto run = [&](const OptimizerConfig& c, double& first, double& avg) {
      auto state = initialize(*problem, c, RngState{seed, 0});
      double sum = 0.0;
      for (std::int64_t t = 1; t <= steps; ++t) {
        step(state, *problem, c);
        const double gn = norms(full_grad(*problem, state.x)).l2;
        if (!std::isfinite(gn)) return false;
        if (t == 1) first = gn;
        sum += gn;
      }
      avg = sum / static_cast<double>(steps);
      return state.x.all_finite();
    };
    double first = 0.0, avg = 0.0;
    bool finite = false;
    try {
      finite = run(opt, first, avg);
    } catch (const NumericError&) {
      finite = false;
    }
    const bool good = finite && avg < first;
    ok += good;
    if (!good) detail += fmt("seed %llu first=%.3g avg=%.3g; ", static_cast<unsigned long long>(seed), first, avg);

    double sf = 0.0, sa = 0.0;
    bool sgd_ok = false;
    try {
      sgd_ok = run(sgd, sf, sa) && sa < sf;
    } catch (const NumericError&) {
      sgd_ok = false;
    }
    sgd_diverged += !sgd_ok;
  }
  report("heavy-tail-robustness", ok == 10,
         fmt("tail_index=1.8, %lld steps, eta=%.3g beta=%.3g: RanSOM-E ok %d/10; plain SGD (lr=%.3g) "
             "diverged or failed to improve %d/10 (informational) ",
             static_cast<long long>(steps), th.eta, th.beta, ok, sgd.eta.eta0, sgd_diverged) +
             detail);
}

// --- experiments ---------------------------------------------------------------

json run_summary(const std::string& path) {
  auto cfg = load_config(path);
  cfg.output_dir.clear();
  const auto res = run_experiment(cfg);
  return res.summary["optimizers"];
}

void splice() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = run_summary("configs/splice.json");
  auto mean = [&](const char* k) { return s.at(k).at("final_test_metric").at("mean").get<double>(); };
  auto lowest = [&](const char* k) {
    double lo = 1.0;
    for (double v : s.at(k).at("final_test_metric").at("values")) lo = std::min(lo, v);
    return lo;
  };
  const double norm = mean("ransom-e-norm"), muon = mean("ransom-e-muon"), sgdm = mean("sgdm");
  const bool pass = norm >= kSpliceAcc && muon >= kSpliceAcc && norm >= sgdm - kSpliceGap &&
                    muon >= sgdm - kSpliceGap && s.at("sgdm").at("n_runs") == 3;
  const double secs = seconds_since(t0);
  report("splice", pass && secs < kLongSeconds,
         fmt("mean test acc over 3 seeds: norm=%.4f (min %.4f) muon=%.4f (min %.4f) sgdm=%.4f; %.1fs", norm,
             lowest("ransom-e-norm"), muon, lowest("ransom-e-muon"), sgdm, secs));
}

void matrix_completion() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = run_summary("configs/movielens.json");
  const double b = s.at("ransom-b").at("final_test_metric").at("mean").get<double>();
  const double sfw = s.at("sfw-polyak").at("final_test_metric").at("mean").get<double>();
  const double secs = seconds_since(t0);
  report("matrix-completion", b <= sfw + kMcGap && s.at("ransom-b").at("n_runs") == 3 && secs < kLongSeconds,
         fmt("mean test RMSE over 3 seeds: ransom-b=%.4f sfw-polyak=%.4f; %.1fs", b, sfw, secs));
}

// --- determinism ---------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism() {
  int files = 0, mismatches = 0;
  for (const char* path : {"configs/quadratic_rate.json", "configs/splice.json", "configs/movielens.json"}) {
    auto cfg = load_config(path);
    cfg.steps = 300;
    cfg.epochs.reset();
    cfg.eval_every = 7;
    cfg.seeds = {1, 2};
    cfg.full_grad_diagnostics = true;
    std::vector<fs::path> dirs;
    for (int rep = 0; rep < 2; ++rep) {
      dirs.push_back(fs::temp_directory_path() / fmt("ransom_acceptance_det_%d", rep));
      fs::remove_all(dirs.back());
      cfg.output_dir = dirs.back();
      run_experiment(cfg);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      ++files;
      mismatches += slurp(entry.path()) != slurp(dirs[1] / entry.path().filename());
    }
    for (const auto& d : dirs) fs::remove_all(d);
  }
  report("determinism", files > 0 && mismatches == 0,
         fmt("%d output files compared across repeated runs, %d differ", files, mismatches));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) filter = argv[1];
  guarded("stein-exponential", [] { stein(true); });
  guarded("stein-beta", [] { stein(false); });
  guarded("moment-constants", moments);
  guarded("unbiased-correction-ransom-e", [] { unbiased(OptimizerKind::RansomE); });
  guarded("unbiased-correction-ransom-b", [] { unbiased(OptimizerKind::RansomB); });
  guarded("hvp-cross-check", hvp_cross_check);
  guarded("feasibility", feasibility);
  guarded("determinism", determinism);
  guarded("heavy-tail-robustness", heavy_tail);
  guarded("splice", splice);
  guarded("matrix-completion", matrix_completion);
  guarded("rate-exponent", rate);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
