// Monte Carlo experiment runner: builds delay pdfs with the queue simulator,
// runs seeded trials (SAGE and/or genie) over the experiment's configuration
// sweep, and aggregates NRMSE / detection metrics with bootstrap CIs into
// deterministic CSV rows.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ptpsync/clock_model.hpp"
#include "ptpsync/genie.hpp"
#include "ptpsync/init.hpp"
#include "ptpsync/metrics.hpp"
#include "ptpsync/queue_sim.hpp"
#include "ptpsync/sage.hpp"

namespace ptpsync {

enum class ExperimentFamily {
  kDelayPdfs,     // write empirical pdfs per load, no trials
  kPSweep,        // NRMSE vs number of exchanges
  kLoadSweep,     // NRMSE vs background load
  kParamCases,    // NRMSE across (phi, delta) cases
  kDetection,     // P_m / P_f vs number of exchanges
  kMixtureOrder,  // NRMSE vs GMM component count
  kPrevMismatch,  // previous-window pdf from a different load
  kPrevNoise,     // noisy previous-window parameter estimates
};

std::string family_name(ExperimentFamily f);
ExperimentFamily family_from_name(const std::string& name);

struct TrafficSettings {
  std::string model = "tm1";
  std::vector<double> load;  // one entry per path
  int num_switches = 10;
  double link_rate = 1e9;
  double sync_packet_bits = 720.0;
  double pdf_bin_width = 0.1e-6;  // seconds
  int pdf_samples = 200000;
};

struct ExperimentSpec {
  ExperimentFamily family = ExperimentFamily::kPSweep;
  Scenario scenario;  // base scenario; P/P_t overridden by sweeps
  TrafficSettings traffic;
  IntegrationGrid grid;
  int mixture_components = 4;
  double init_kappa = 1e6;

  std::vector<int> p_sweep;
  std::vector<double> load_sweep;
  std::vector<std::pair<double, double>> param_cases;  // (phi, delta)
  std::vector<int> mixture_sweep;
  std::vector<double> mismatch_loads;
  std::vector<std::pair<double, double>> noise_cases;  // (sigma linear, sigma phi)

  int trials = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  bool run_sage = true;
  bool run_genie = true;
  int trace_trials = 0;
  int bootstrap_resamples = 1000;
  double schedule_spacing = 60e-6;
  double schedule_reply_offset = 30e-6;
  SageConfig sage;
  EmOptions em;
};

struct TrialResult {
  int trial = 0;
  ClockParams truth;
  bool has_sage = false;
  double sage_offset = 0.0, sage_skew = 0.0;
  bool has_genie = false;
  double genie_offset = 0.0, genie_skew = 0.0;
  std::vector<std::uint8_t> eta_true, eta_hat;
  int iterations = 0;
  bool converged = false;
  double wall_ms = 0.0;
  bool sage_failed = false, genie_failed = false;
  std::string error;
  std::vector<SageTraceRow> trace;  // kept for the first trace_trials trials
};

// Fully wired single-trial context; built per config point.
struct TrialContext {
  Scenario scenario;
  double schedule_spacing = 60e-6;
  double schedule_reply_offset = 30e-6;
  std::vector<HistogramSampler> fwd_sampler, rev_sampler;            // current window
  std::vector<HistogramSampler> prev_fwd_sampler, prev_rev_sampler;  // previous window
  std::vector<DelayPdf> fwd_pdf, rev_pdf;                            // genie inputs
  IntegrationGrid grid;
  int components = 4;
  double init_kappa = 1e6;
  double prev_noise_linear = 0.0;  // std for delta and path-delay estimates
  double prev_noise_phi = 0.0;     // std for the skew estimate
  bool run_sage = true;
  bool run_genie = true;
  bool keep_trace = false;
  SageConfig sage_cfg;
  EmOptions em;
};

TrialResult run_trial(const TrialContext& ctx, std::uint64_t seed, int trial);

struct CsvRow {
  std::string experiment;
  std::string config_point;
  std::string estimator;
  std::string metric;
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int trials = 0;
};

struct ConfigPointResult {
  std::string label;
  std::vector<TrialResult> trials;
};

struct ExperimentResult {
  std::vector<CsvRow> rows;
  std::vector<ConfigPointResult> points;
};

// Builds (and caches) the empirical delay pdf for one load setting.
EmpiricalPdf build_load_pdf(const TrafficSettings& traffic, double load, std::uint64_t seed);

// Runs the experiment. When out_dir is non-empty, writes results.csv,
// trace/*.csv and pdf/*.txt under it. Trial failures are recorded and the
// experiment continues; the per-point failure rate appears as a metric row.
ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir);

void write_results_csv(const std::vector<CsvRow>& rows, const std::filesystem::path& file);
std::string format_csv(const std::vector<CsvRow>& rows);

}  // namespace ptpsync
