#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ransom/optim.hpp"

namespace ransom {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kCsvVersionLine = "# ransom-metrics v1";
inline constexpr const char* kCsvHeader =
    "run_id,seed,t,wall_ms,train_loss,stationarity,test_metric,momentum_error,s_t,w_t";

/// One optimizer column of an experiment.
struct OptimizerEntry {
  std::string label;
  OptimizerConfig config;
};

struct TheoryAnnotation {
  double p = 2.0;
  double q = 2.0;
};

struct RunConfig {
  nlohmann::json problem;  ///< problem spec, see build_problem
  std::vector<OptimizerEntry> optimizers;
  std::int64_t steps = 0;  ///< T; derived from `epochs` when that is given instead
  std::optional<double> epochs;
  std::vector<std::uint64_t> seeds{1};
  std::int64_t eval_every = 1;
  std::filesystem::path output_dir = "out";
  std::filesystem::path base_dir = ".";  ///< relative data paths resolve against this
  bool full_grad_diagnostics = false;
  bool wall_time = false;
  /// When set, every optimizer uses constant (eta, beta) = theory_schedule(T, p, q).
  std::optional<TheoryAnnotation> theory_schedule;
  bool plain_step = false;
  nlohmann::json annotations = nlohmann::json::object();
};

/// Parses and validates a config document. Throws ConfigError naming the key.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// Builds the objective described by `spec`. Data files resolve against base_dir.
std::shared_ptr<const StochasticOracle> build_problem(const nlohmann::json& spec,
                                                      const std::filesystem::path& base_dir);

/// Steps implied by the config for a given problem (epochs * n / B, rounded up).
std::int64_t resolve_steps(const RunConfig& config, const StochasticOracle& problem,
                           const OptimizerConfig& opt);

/// Applies theory_schedule and plain_step overrides to one optimizer entry.
OptimizerConfig effective_optimizer(const RunConfig& config, const OptimizerConfig& opt,
                                    std::int64_t steps);

struct MetricsRow {
  std::string run_id;
  std::uint64_t seed = 0;
  std::int64_t t = 0;
  std::optional<double> wall_ms;
  double train_loss = 0.0;
  double stationarity = 0.0;
  std::optional<double> test_metric;
  std::optional<double> momentum_error;
  std::optional<double> s_t;
  std::optional<double> w_t;
};

std::string format_number(double v);
std::string format_row(const MetricsRow& row);
std::vector<MetricsRow> parse_metrics_csv(std::istream& in);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

struct RunResult {
  std::string label;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  std::vector<MetricsRow> rows;
  bool aborted = false;
  std::string abort_message;
  std::filesystem::path csv_path;
};

/// One optimizer, one seed. Rows at t = 0, every eval_every steps, and at T.
/// A NumericError stops the run and is recorded in the result.
RunResult run_single(const StochasticOracle& problem, const RunConfig& config,
                     const OptimizerEntry& entry, std::uint64_t seed);

std::string render_csv(const RunResult& result);

struct ExperimentResult {
  std::vector<RunResult> runs;
  nlohmann::json summary;
  bool any_aborted = false;
};

/// Runs every (optimizer, seed) pair on a worker pool, writes one CSV per run
/// and summary.json into output_dir (skipped when output_dir is empty).
ExperimentResult run_experiment(const RunConfig& config);

/// Per-optimizer mean and sample std of the final test metric, final train
/// loss and final stationarity. A pure reduction of the runs' rows.
nlohmann::json summarize(const std::vector<RunResult>& runs);

/// Worker count: RANSOM_THREADS if set, else hardware concurrency, capped by `jobs`.
std::size_t worker_count(std::size_t jobs);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares of log(value) on log(T). Needs >= 3 distinct T and positive values.
SlopeFit fit_rate_slope(const std::vector<double>& horizons, const std::vector<double>& values);

/// Mean stationarity over rows with t > burn_in_fraction * T.
double tail_average(const std::vector<MetricsRow>& rows, double burn_in_fraction);

struct RatePoint {
  std::int64_t horizon = 0;
  double mean = 0.0;  ///< mean over seeds of tail_average
  std::vector<double> per_seed;
};

struct RateSuiteResult {
  std::vector<RatePoint> points;
  SlopeFit fit;
};

/// Runs the first optimizer of `config` for each horizon (theory schedule
/// applied when configured) and fits the slope of avg stationarity vs T.
RateSuiteResult rate_suite(const RunConfig& config, const std::vector<std::int64_t>& horizons,
                           double burn_in_fraction = 0.0);

}  // namespace ransom
