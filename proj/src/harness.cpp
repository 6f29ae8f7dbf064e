#include "ransom/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "ransom/data.hpp"
#include "ransom/error.hpp"
#include "ransom/problems.hpp"

namespace ransom {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  return get_or<T>(j, key, T{});
}

GeometryKind geometry_kind(const std::string& name) {
  if (name == "l2") return GeometryKind::L2Ball;
  if (name == "linf" || name == "sign") return GeometryKind::LinfBall;
  if (name == "spectral" || name == "muon") return GeometryKind::SpectralBall;
  if (name == "nuclear") return GeometryKind::NuclearBall;
  throw ConfigError("unknown geometry '" + name + "'");
}

HvpStrategy hvp_strategy(const std::string& name) {
  if (name == "analytic") return HvpStrategy::Analytic;
  if (name == "forward-over-reverse") return HvpStrategy::BackpropForwardOverReverse;
  if (name == "central-difference") return HvpStrategy::CentralDifference;
  throw ConfigError("unknown hvp strategy '" + name + "'");
}

NoiseSpec parse_noise(const json& j) {
  NoiseSpec n;
  if (j.is_null()) return n;
  const auto kind = get_or<std::string>(j, "kind", "none");
  if (kind == "none") {
    n.kind = NoiseKind::None;
  } else if (kind == "gaussian") {
    n.kind = NoiseKind::Gaussian;
  } else if (kind == "pareto") {
    n.kind = NoiseKind::SymmetricPareto;
  } else {
    throw ConfigError("unknown noise kind '" + kind + "'");
  }
  n.sigma_g = get_or(j, "sigma_g", 0.0);
  n.sigma_h = get_or(j, "sigma_h", 0.0);
  n.tail_index = get_or(j, "tail_index", 3.0);
  n.per_sample = get_or(j, "per_sample", true);
  n.validate();
  return n;
}

OptimizerEntry parse_optimizer(const json& j) {
  OptimizerEntry e;
  const auto kind = require<std::string>(j, "kind");
  e.config.kind = optimizer_from_name(kind);
  e.label = get_or<std::string>(j, "label", kind);
  e.config.eta.eta0 = get_or(j, "eta", 0.1);
  e.config.eta.power = get_or(j, "eta_power", 0.0);
  e.config.beta = get_or(j, "beta", 0.1);
  e.config.batch_size = get_or<std::size_t>(j, "batch_size", 8);
  e.config.init_batch = get_or<std::size_t>(j, "init_batch", 0);
  e.config.hvp = hvp_strategy(get_or<std::string>(j, "hvp", "analytic"));
  e.config.plain_step = get_or(j, "plain_step", false);
  e.config.random_steps = get_or(j, "random_steps", false);
  e.config.midpoint_fresh_batch = get_or(j, "midpoint_fresh_batch", true);
  e.config.correction = get_or(j, "correction", true);
  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    e.config.geometry.kind = geometry_kind(get_or<std::string>(g, "kind", "l2"));
    e.config.geometry.rho = get_or(g, "rho", 1.0);
    e.config.geometry.ns_iters = get_or(g, "ns_iters", 8);
    e.config.geometry.power_tol = get_or(g, "power_tol", 1e-10);
    e.config.geometry.power_max_iters = get_or(g, "power_max_iters", 1000);
  }
  e.config.validate();
  return e;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<RatingEntry> to_entries(const std::vector<Rating>& ratings,
                                    const std::vector<std::size_t>& idx) {
  std::vector<RatingEntry> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back({ratings[i].user, ratings[i].item, ratings[i].rating});
  return out;
}

}  // namespace

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  const int version = get_or(doc, "schema_version", 0);
  if (version != kConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(version) + " (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }
  RunConfig c;
  c.base_dir = base_dir;
  c.problem = require<json>(doc, "problem");
  if (!c.problem.is_object() || !c.problem.contains("kind")) {
    throw ConfigError("problem needs a 'kind'");
  }
  const auto opts = require<json>(doc, "optimizers");
  if (!opts.is_array() || opts.empty()) throw ConfigError("optimizers must be a nonempty array");
  for (const auto& o : opts) c.optimizers.push_back(parse_optimizer(o));
  std::map<std::string, int> seen;
  for (const auto& o : c.optimizers) {
    if (seen[o.label]++) throw ConfigError("duplicate optimizer label '" + o.label + "'");
  }
  c.steps = get_or<std::int64_t>(doc, "steps", 0);
  if (doc.contains("epochs")) c.epochs = get_or(doc, "epochs", 0.0);
  if (c.steps < 1 && !(c.epochs && *c.epochs > 0.0)) {
    throw ConfigError("need steps >= 1 or epochs > 0");
  }
  c.seeds = get_or(doc, "seeds", std::vector<std::uint64_t>{1});
  if (c.seeds.empty()) throw ConfigError("seeds must be nonempty");
  c.eval_every = get_or<std::int64_t>(doc, "eval_every", 1);
  if (c.eval_every < 1) throw ConfigError("eval_every must be >= 1");
  c.output_dir = get_or<std::string>(doc, "output_dir", "out");
  const auto diag = get_or<std::string>(doc, "diagnostics", "none");
  if (diag != "none" && diag != "full-grad") throw ConfigError("diagnostics must be none|full-grad");
  c.full_grad_diagnostics = diag == "full-grad";
  c.wall_time = get_or(doc, "wall_time", false);
  c.plain_step = get_or(doc, "plain_step", false);
  if (doc.contains("theory_schedule") && !doc.at("theory_schedule").is_boolean()) {
    const auto& ts = doc.at("theory_schedule");
    c.theory_schedule = TheoryAnnotation{get_or(ts, "p", 2.0), get_or(ts, "q", 2.0)};
  } else if (get_or(doc, "theory_schedule", false)) {
    c.theory_schedule = TheoryAnnotation{};
  }
  if (doc.contains("annotations")) c.annotations = doc.at("annotations");
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

std::shared_ptr<const StochasticOracle> build_problem(const json& spec, const fs::path& base_dir) {
  const auto kind = require<std::string>(spec, "kind");
  const RngState problem_root{get_or<std::uint64_t>(spec, "seed", 0), 0};
  const NoiseSpec noise = parse_noise(spec.contains("noise") ? spec.at("noise") : json());

  if (kind == "quadratic") {
    Rng rng(split_rng(problem_root, Consumer::Data));
    auto q = QuadraticProblem::random(get_or<std::size_t>(spec, "dim", 20), get_or(spec, "mu", 0.1),
                                      get_or(spec, "L", 1.0), noise, rng);
    if (spec.contains("x0")) {
      const auto x0 = spec.at("x0").get<std::vector<double>>();
      if (x0.size() != q.n()) throw ConfigError("x0 has the wrong dimension");
      q.set_initial_point(ParamVector(q.layout(), x0));
    }
    return std::make_shared<QuadraticProblem>(std::move(q));
  }

  const double test_ratio = get_or(spec, "test_ratio", 0.2);
  const RngState split_state = split_rng(problem_root, Consumer::Split);

  if (kind == "mlp") {
    auto layers = get_or(spec, "layers", std::vector<std::size_t>{60, 32, 16, 1});
    if (layers.empty()) throw ConfigError("mlp layers must be nonempty");
    const auto path = resolve(base_dir, require<std::string>(spec, "data"));
    const DesignMatrix all = load_libsvm(path.string(), layers.front());
    const Split split = train_test_split(all.rows(), test_ratio, split_state);
    DesignMatrix train = all.subset(split.train);
    DesignMatrix test = all.subset(split.test);
    if (get_or(spec, "standardize", true)) {
      const auto scaler = FeatureScaler::fit(train);
      train = scaler.apply(train);
      test = scaler.apply(test);
    }
    auto mlp = std::make_shared<MlpWelschProblem>(std::move(layers), get_or(spec, "lambda", 0.1),
                                                  std::move(train), std::move(test), noise);
    mlp->set_init_scale(get_or(spec, "init_scale", 1.0));
    return mlp;
  }

  if (kind == "matrix-completion") {
    const bool center = get_or(spec, "center", true);
    if (spec.contains("synthetic")) {
      const auto& s = spec.at("synthetic");
      Rng rng(split_rng(problem_root, Consumer::Data));
      const auto sample = synth_lowrank(get_or<std::size_t>(s, "rows", 40),
                                        get_or<std::size_t>(s, "cols", 60),
                                        get_or<std::size_t>(s, "rank", 3), get_or(s, "noise", 0.1),
                                        get_or(s, "density", 0.3), rng);
      std::vector<Rating> observed;
      for (std::size_t i = 0; i < sample.rows; ++i) {
        for (std::size_t j = 0; j < sample.cols; ++j) {
          if (!sample.mask[i * sample.cols + j]) continue;
          Rating r;
          r.user = i;
          r.item = j;
          r.rating = sample.values[i * sample.cols + j];
          observed.push_back(r);
        }
      }
      const Split split = train_test_split(observed.size(), test_ratio, split_state);
      return std::make_shared<MatrixCompletionProblem>(
          sample.rows, sample.cols, to_entries(observed, split.train),
          to_entries(observed, split.test), center, noise);
    }
    const auto path = resolve(base_dir, require<std::string>(spec, "data"));
    const RatingsTable table = load_movielens(path.string(), get_or<std::size_t>(spec, "top_users", 100),
                                              get_or<std::size_t>(spec, "top_items", 200));
    const Split split = train_test_split(table.entries.size(), test_ratio, split_state);
    return std::make_shared<MatrixCompletionProblem>(
        table.n_users(), table.n_items(), to_entries(table.entries, split.train),
        to_entries(table.entries, split.test), center, noise);
  }
  throw ConfigError("unknown problem kind '" + kind + "'");
}

std::int64_t resolve_steps(const RunConfig& config, const StochasticOracle& problem,
                           const OptimizerConfig& opt) {
  if (!config.epochs) return config.steps;
  if (problem.dataset_size() == 0) throw ConfigError("epochs need a finite training set");
  const double steps = std::ceil(*config.epochs * static_cast<double>(problem.dataset_size()) /
                                 static_cast<double>(opt.batch_size));
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(steps));
}

OptimizerConfig effective_optimizer(const RunConfig& config, const OptimizerConfig& opt,
                                    std::int64_t steps) {
  OptimizerConfig out = opt;
  if (config.plain_step) out.plain_step = true;
  if (config.theory_schedule) {
    const auto params = theory_schedule(static_cast<double>(steps), config.theory_schedule->p,
                                        config.theory_schedule->q);
    out.eta = Schedule{params.eta, 0.0};
    out.beta = params.beta;
  }
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

std::optional<double> parse_opt(const std::string& field, std::size_t line) {
  if (field.empty()) return std::nullopt;
  if (field == "nan") return std::nan("");
  if (field == "inf") return HUGE_VAL;
  if (field == "-inf") return -HUGE_VAL;
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError("bad number '" + field + "'", line);
  }
  return v;
}

template <typename Int>
Int parse_int_field(const std::string& field, std::size_t line) {
  Int v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError("bad integer '" + field + "'", line);
  }
  return v;
}

}  // namespace

std::string format_row(const MetricsRow& r) {
  std::string out = r.run_id;
  out += ',' + std::to_string(r.seed);
  out += ',' + std::to_string(r.t);
  out += ',' + opt_number(r.wall_ms);
  out += ',' + format_number(r.train_loss);
  out += ',' + format_number(r.stationarity);
  out += ',' + opt_number(r.test_metric);
  out += ',' + opt_number(r.momentum_error);
  out += ',' + opt_number(r.s_t);
  out += ',' + opt_number(r.w_t);
  return out;
}

std::vector<MetricsRow> parse_metrics_csv(std::istream& in) {
  std::vector<MetricsRow> rows;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kCsvHeader) throw ParseError("unexpected CSV header", lineno);
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 10) throw ParseError("expected 10 fields", lineno);
    MetricsRow r;
    r.run_id = f[0];
    r.seed = parse_int_field<std::uint64_t>(f[1], lineno);
    r.t = parse_int_field<std::int64_t>(f[2], lineno);
    r.wall_ms = parse_opt(f[3], lineno);
    r.train_loss = parse_opt(f[4], lineno).value_or(std::nan(""));
    r.stationarity = parse_opt(f[5], lineno).value_or(std::nan(""));
    r.test_metric = parse_opt(f[6], lineno);
    r.momentum_error = parse_opt(f[7], lineno);
    r.s_t = parse_opt(f[8], lineno);
    r.w_t = parse_opt(f[9], lineno);
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw ParseError("missing CSV header", lineno);
  return rows;
}

std::vector<MetricsRow> read_metrics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_metrics_csv(in);
}

std::string render_csv(const RunResult& result) {
  std::string out = kCsvVersionLine;
  out += '\n';
  out += kCsvHeader;
  out += '\n';
  for (const auto& r : result.rows) {
    out += format_row(r);
    out += '\n';
  }
  if (result.aborted) out += "# aborted: " + result.abort_message + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Runs

RunResult run_single(const StochasticOracle& problem, const RunConfig& config,
                     const OptimizerEntry& entry, std::uint64_t seed) {
  RunResult result;
  result.label = entry.label;
  result.seed = seed;
  result.steps = resolve_steps(config, problem, entry.config);
  const OptimizerConfig opt = effective_optimizer(config, entry.config, result.steps);
  const RngState root{seed, 0};
  const RngState gap_root = split_rng(root, Consumer::Lmo).derive(0x6A70000000000000ULL);
  const auto start = std::chrono::steady_clock::now();

  OptimizerState state;
  auto record = [&](const StepRecord* rec) {
    MetricsRow row;
    row.run_id = entry.label;
    row.seed = seed;
    row.t = state.t;
    if (config.wall_time) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              start)
                        .count();
    }
    const auto full = problem.full_loss_gradient(state.x);
    row.train_loss = full.loss;
    if (is_constrained(opt.kind)) {
      Rng gap_rng(gap_root.derive(static_cast<std::uint64_t>(state.t)));
      row.stationarity = frank_wolfe_gap(opt.geometry, full.gradient, state.x, gap_rng);
    } else {
      row.stationarity = norms(full.gradient).l2;
    }
    row.test_metric = problem.test_metric(state.x);
    if (config.full_grad_diagnostics) {
      ParamVector e = state.m;
      e -= full.gradient;
      row.momentum_error = norms(e).l2;
    }
    if (rec) {
      row.s_t = rec->s;
      row.w_t = rec->w;
    }
    result.rows.push_back(std::move(row));
  };

  try {
    state = initialize(problem, opt, root);
    record(nullptr);
    for (std::int64_t t = 1; t <= result.steps; ++t) {
      const StepRecord rec = step(state, problem, opt);
      if (t % config.eval_every == 0 || t == result.steps) record(&rec);
    }
  } catch (const NumericError& e) {
    result.aborted = true;
    result.abort_message = "t=" + std::to_string(state.t) + " block=" + e.block() + ": " + e.what();
  }
  return result;
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RANSOM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

namespace {

template <typename Fn>
void parallel_for(std::size_t jobs, Fn fn) {
  const std::size_t workers = worker_count(jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < jobs; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

json stats(const std::vector<double>& v) {
  json out;
  out["values"] = v;
  if (v.empty()) {
    out["mean"] = nullptr;
    out["std"] = nullptr;
    return out;
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  out["mean"] = mean;
  out["std"] = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return out;
}

}  // namespace

json summarize(const std::vector<RunResult>& runs) {
  json out;
  out["csv_version"] = kCsvVersionLine + 2;
  json per = json::object();
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunResult*>> groups;
  for (const auto& r : runs) {
    if (!groups.count(r.label)) order.push_back(r.label);
    groups[r.label].push_back(&r);
  }
  for (const auto& label : order) {
    std::vector<double> test, loss, stat;
    std::vector<std::uint64_t> seeds, aborted;
    for (const auto* r : groups[label]) {
      seeds.push_back(r->seed);
      if (r->aborted) aborted.push_back(r->seed);
      if (r->rows.empty()) continue;
      const auto& last = r->rows.back();
      if (last.test_metric) test.push_back(*last.test_metric);
      loss.push_back(last.train_loss);
      stat.push_back(last.stationarity);
    }
    json g;
    g["seeds"] = seeds;
    g["n_runs"] = seeds.size();
    g["final_test_metric"] = stats(test);
    g["final_train_loss"] = stats(loss);
    g["final_stationarity"] = stats(stat);
    g["aborted_seeds"] = aborted;
    per[label] = g;
  }
  out["optimizers"] = per;
  return out;
}

ExperimentResult run_experiment(const RunConfig& config) {
  const auto problem = build_problem(config.problem, config.base_dir);
  ExperimentResult out;
  for (const auto& entry : config.optimizers) {
    for (auto seed : config.seeds) {
      RunResult r;
      r.label = entry.label;
      r.seed = seed;
      out.runs.push_back(std::move(r));
    }
  }
  const std::size_t n_seeds = config.seeds.size();
  parallel_for(out.runs.size(), [&](std::size_t i) {
    out.runs[i] = run_single(*problem, config, config.optimizers[i / n_seeds], config.seeds[i % n_seeds]);
  });

  out.summary = summarize(out.runs);
  out.summary["test_metric_name"] = problem->test_metric_name();
  out.summary["annotations"] = config.annotations;
  for (const auto& r : out.runs) out.any_aborted = out.any_aborted || r.aborted;
  out.summary["aborted"] = out.any_aborted;

  if (!config.output_dir.empty()) {
    fs::create_directories(config.output_dir);
    for (auto& r : out.runs) {
      r.csv_path = config.output_dir / (r.label + "_seed" + std::to_string(r.seed) + ".csv");
      std::ofstream f(r.csv_path, std::ios::binary);
      f << render_csv(r);
      if (!f) throw DataError("cannot write " + r.csv_path.string());
    }
    std::ofstream f(config.output_dir / "summary.json", std::ios::binary);
    f << out.summary.dump(2) << '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rates

SlopeFit fit_rate_slope(const std::vector<double>& horizons, const std::vector<double>& values) {
  if (horizons.size() != values.size()) throw ConfigError("fit_rate_slope: size mismatch");
  std::vector<double> sorted = horizons;
  std::sort(sorted.begin(), sorted.end());
  if (std::unique(sorted.begin(), sorted.end()) - sorted.begin() < 3) {
    throw ConfigError("fit_rate_slope needs at least 3 distinct horizons");
  }
  const std::size_t n = horizons.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(horizons[i] > 0.0) || !(values[i] > 0.0)) {
      throw ConfigError("fit_rate_slope needs positive horizons and values");
    }
    lx[i] = std::log(horizons[i]);
    ly[i] = std::log(values[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

double tail_average(const std::vector<MetricsRow>& rows, double burn_in_fraction) {
  if (rows.empty()) throw ConfigError("tail_average: no rows");
  const double cutoff = burn_in_fraction * static_cast<double>(rows.back().t);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : rows) {
    if (static_cast<double>(r.t) > cutoff) {
      sum += r.stationarity;
      ++count;
    }
  }
  if (count == 0) return rows.back().stationarity;
  return sum / static_cast<double>(count);
}

RateSuiteResult rate_suite(const RunConfig& config, const std::vector<std::int64_t>& horizons,
                           double burn_in_fraction) {
  if (horizons.size() < 3) throw ConfigError("rate suite needs at least 3 horizons");
  const auto problem = build_problem(config.problem, config.base_dir);
  const auto& entry = config.optimizers.front();
  const std::size_t n_seeds = config.seeds.size();
  std::vector<double> averages(horizons.size() * n_seeds);
  parallel_for(averages.size(), [&](std::size_t i) {
    RunConfig c = config;
    c.epochs.reset();
    c.steps = horizons[i / n_seeds];
    c.eval_every = std::max<std::int64_t>(1, c.steps / 100);
    const auto run = run_single(*problem, c, entry, config.seeds[i % n_seeds]);
    if (run.aborted) throw NumericError("rate suite run aborted: " + run.abort_message, "");
    averages[i] = tail_average(run.rows, burn_in_fraction);
  });
  RateSuiteResult out;
  std::vector<double> xs, ys;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    RatePoint p;
    p.horizon = horizons[h];
    p.per_seed.assign(averages.begin() + static_cast<std::ptrdiff_t>(h * n_seeds),
                      averages.begin() + static_cast<std::ptrdiff_t>((h + 1) * n_seeds));
    for (double v : p.per_seed) p.mean += v;
    p.mean /= static_cast<double>(n_seeds);
    xs.push_back(static_cast<double>(p.horizon));
    ys.push_back(p.mean);
    out.points.push_back(std::move(p));
  }
  out.fit = fit_rate_slope(xs, ys);
  return out;
}

}  // namespace ransom
