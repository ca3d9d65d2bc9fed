#include "ptpsync/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "ptpsync/rng.hpp"

namespace ptpsync {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string fmt_us(double seconds) { return fmt(seconds * 1e6); }

// Percentile bootstrap of the mean of per-trial values.
BootstrapResult bootstrap_mean(const std::vector<double>& vals, int resamples,
                               std::uint64_t seed) {
  BootstrapResult out;
  double m = 0.0;
  for (double v : vals) m += v;
  out.value = vals.empty() ? 0.0 : m / vals.size();
  if (resamples < 2 || vals.size() < 2) {
    out.lo = out.hi = out.value;
    return out;
  }
  auto rng = make_rng(seed, 0x6d65616eULL);  // "mean"
  std::uniform_int_distribution<std::size_t> pick(0, vals.size() - 1);
  std::vector<double> stats(resamples);
  for (int r = 0; r < resamples; ++r) {
    double acc = 0.0;
    for (std::size_t t = 0; t < vals.size(); ++t) acc += vals[pick(rng)];
    stats[r] = acc / vals.size();
  }
  std::sort(stats.begin(), stats.end());
  auto pct = [&](double q) {
    const double pos = q * (resamples - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return i + 1 < stats.size() ? stats[i] * (1.0 - f) + stats[i + 1] * f : stats[i];
  };
  out.lo = pct(0.025);
  out.hi = pct(0.975);
  double mean = 0.0;
  for (double s : stats) mean += s;
  mean /= resamples;
  double var = 0.0;
  for (double s : stats) var += (s - mean) * (s - mean);
  out.se = std::sqrt(var / (resamples - 1));
  return out;
}

}  // namespace

std::string family_name(ExperimentFamily f) {
  switch (f) {
    case ExperimentFamily::kDelayPdfs: return "pdfs";
    case ExperimentFamily::kPSweep: return "p-sweep";
    case ExperimentFamily::kLoadSweep: return "load-sweep";
    case ExperimentFamily::kParamCases: return "param-cases";
    case ExperimentFamily::kDetection: return "detection";
    case ExperimentFamily::kMixtureOrder: return "mixture-order";
    case ExperimentFamily::kPrevMismatch: return "prev-mismatch";
    case ExperimentFamily::kPrevNoise: return "prev-noise";
  }
  return "unknown";
}

ExperimentFamily family_from_name(const std::string& name) {
  for (ExperimentFamily f :
       {ExperimentFamily::kDelayPdfs, ExperimentFamily::kPSweep, ExperimentFamily::kLoadSweep,
        ExperimentFamily::kParamCases, ExperimentFamily::kDetection,
        ExperimentFamily::kMixtureOrder, ExperimentFamily::kPrevMismatch,
        ExperimentFamily::kPrevNoise}) {
    if (family_name(f) == name) return f;
  }
  throw std::invalid_argument("unknown experiment family: " + name);
}

EmpiricalPdf build_load_pdf(const TrafficSettings& traffic, double load, std::uint64_t seed) {
  SwitchCascadeConfig cfg;
  cfg.num_switches = traffic.num_switches;
  cfg.link_rate = traffic.link_rate;
  cfg.background_load = load;
  cfg.sync_packet_bits = traffic.sync_packet_bits;
  CascadeDelaySampler sampler(cfg);
  // one stream per (seed, load); load keyed by its fixed-point microsecond image
  auto rng = make_rng(seed, 0x706466ULL, static_cast<std::uint64_t>(load * 1e6));
  std::vector<double> samples(traffic.pdf_samples);
  for (double& s : samples) s = sampler.sample(rng);
  return build_empirical_pdf(samples, traffic.pdf_bin_width);
}

TrialResult run_trial(const TrialContext& ctx, std::uint64_t seed, int trial) {
  TrialResult out;
  out.trial = trial;
  out.truth = ctx.scenario.clock;
  out.eta_true.resize(ctx.scenario.paths.size());
  for (std::size_t i = 0; i < ctx.scenario.paths.size(); ++i) {
    out.eta_true[i] = ctx.scenario.paths[i].is_asymmetric ? 1 : 0;
  }

  auto rng = make_rng(seed, 0x74726961ULL, static_cast<std::uint64_t>(trial));  // "tria"
  const SendSchedule schedule = uniform_schedule(ctx.schedule_spacing, ctx.schedule_reply_offset);

  const int n = ctx.scenario.num_paths();
  std::vector<PathDelaySamplers> cur(n), prev(n);
  for (int i = 0; i < n; ++i) {
    cur[i].forward = [&ctx, i](std::mt19937_64& r) { return ctx.fwd_sampler[i].sample(r); };
    cur[i].reverse = [&ctx, i](std::mt19937_64& r) { return ctx.rev_sampler[i].sample(r); };
    prev[i].forward = [&ctx, i](std::mt19937_64& r) { return ctx.prev_fwd_sampler[i].sample(r); };
    prev[i].reverse = [&ctx, i](std::mt19937_64& r) { return ctx.prev_rev_sampler[i].sample(r); };
  }

  TwoWayData data;
  data.records = generate_timestamps(ctx.scenario, cur, schedule, rng);

  if (ctx.scenario.prev_window_exchanges > 0) {
    Scenario prev_scn = ctx.scenario;
    prev_scn.exchanges_per_path = ctx.scenario.prev_window_exchanges;
    const auto prev_records = generate_timestamps(prev_scn, prev, schedule, rng);
    PrevEstimates est;
    est.clock = ctx.scenario.clock;
    est.fwd_delay.resize(n);
    est.rev_delay.resize(n);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      est.fwd_delay[i] = ctx.scenario.paths[i].forward_delay();
      est.rev_delay[i] = ctx.scenario.paths[i].reverse_delay();
      if (ctx.prev_noise_linear > 0.0) {
        est.fwd_delay[i] += ctx.prev_noise_linear * gauss(rng);
        est.rev_delay[i] += ctx.prev_noise_linear * gauss(rng);
      }
    }
    if (ctx.prev_noise_linear > 0.0) est.clock.offset += ctx.prev_noise_linear * gauss(rng);
    if (ctx.prev_noise_phi > 0.0) est.clock.skew += ctx.prev_noise_phi * gauss(rng);
    data.prev = prev_window_residuals(prev_records, est);
  } else {
    data.prev.fwd.assign(n, {});
    data.prev.rev.assign(n, {});
  }

  if (ctx.run_sage) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      InitConfig icfg;
      icfg.fwd_components = ctx.components;
      icfg.rev_components = ctx.components;
      icfg.d_tau = ctx.scenario.d_tau;
      icfg.kappa = ctx.init_kappa;
      icfg.em = ctx.em;
      icfg.grid = ctx.grid;
      const SageState init = initialize(data, icfg);
      const SageResult res = run_sage(data, init, ctx.sage_cfg);
      out.has_sage = true;
      out.sage_offset = res.state.clock.offset;
      out.sage_skew = res.state.clock.skew;
      out.eta_hat = classify_paths(res.state);
      out.iterations = res.iterations;
      out.converged = res.converged;
      if (ctx.keep_trace) out.trace = res.trace;
    } catch (const std::exception& e) {
      out.sage_failed = true;
      out.error = e.what();
    }
    out.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }

  if (ctx.run_genie) {
    try {
      GenieInputs gin;
      gin.records = data.records;
      gin.known_eta = out.eta_true;
      gin.fwd_pdf = ctx.fwd_pdf;
      gin.rev_pdf = ctx.rev_pdf;
      gin.grid = ctx.grid;
      const GenieEstimate ge = genie_estimate(gin);
      out.has_genie = true;
      out.genie_offset = ge.offset;
      out.genie_skew = ge.skew;
    } catch (const std::exception& e) {
      out.genie_failed = true;
      out.error += out.error.empty() ? e.what() : std::string("; ") + e.what();
    }
  }
  return out;
}

namespace {

std::vector<TrialResult> run_point(const TrialContext& ctx, int trials, std::uint64_t seed,
                                   int threads) {
  std::vector<TrialResult> results(trials);
  if (threads <= 1) {
    for (int t = 0; t < trials; ++t) results[t] = run_trial(ctx, seed, t);
    return results;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= trials) return;
      results[t] = run_trial(ctx, seed, t);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return results;
}

struct PointMetrics {
  std::vector<CsvRow> rows;
};

void append_estimator_rows(std::vector<CsvRow>& rows, const std::string& experiment,
                           const std::string& point, const std::string& estimator,
                           const std::vector<const TrialResult*>& ok, int total, int resamples,
                           std::uint64_t seed, bool offsets_and_skews) {
  CsvRow base;
  base.experiment = experiment;
  base.config_point = point;
  base.estimator = estimator;
  base.trials = static_cast<int>(ok.size());
  if (offsets_and_skews && !ok.empty()) {
    std::vector<double> est_d, est_p, tru_d, tru_p, skews;
    for (const TrialResult* r : ok) {
      const bool sage = estimator == "sage";
      est_d.push_back(sage ? r->sage_offset : r->genie_offset);
      est_p.push_back(sage ? r->sage_skew : r->genie_skew);
      tru_d.push_back(r->truth.offset);
      tru_p.push_back(r->truth.skew);
      skews.push_back(r->truth.skew);
    }
    const auto bd = bootstrap_nrmse(est_d, tru_d, skews, resamples, seed ^ 0x64ULL);
    CsvRow r1 = base;
    r1.metric = "nrmse_offset";
    r1.value = bd.value;
    r1.ci_lo = bd.lo;
    r1.ci_hi = bd.hi;
    rows.push_back(r1);
    const auto bp = bootstrap_nrmse(est_p, tru_p, skews, resamples, seed ^ 0x70ULL);
    CsvRow r2 = base;
    r2.metric = "nrmse_skew";
    r2.value = bp.value;
    r2.ci_lo = bp.lo;
    r2.ci_hi = bp.hi;
    rows.push_back(r2);
  }
  CsvRow rf = base;
  rf.metric = "fail_rate";
  rf.trials = total;
  rf.value = total > 0 ? 1.0 - static_cast<double>(ok.size()) / total : 0.0;
  rf.ci_lo = rf.ci_hi = rf.value;
  rows.push_back(rf);
}

void append_point_rows(std::vector<CsvRow>& rows, const ExperimentSpec& spec,
                       const std::string& point, const std::vector<TrialResult>& trials,
                       bool detection) {
  const std::string exp = family_name(spec.family);
  if (spec.run_sage) {
    std::vector<const TrialResult*> ok;
    for (const auto& t : trials) {
      if (t.has_sage && !t.sage_failed) ok.push_back(&t);
    }
    append_estimator_rows(rows, exp, point, "sage", ok, static_cast<int>(trials.size()),
                          spec.bootstrap_resamples, spec.seed, true);
    if (!ok.empty()) {
      std::vector<double> iters;
      for (const TrialResult* t : ok) iters.push_back(t->iterations);
      const auto bi = bootstrap_mean(iters, 0, spec.seed);
      CsvRow r;
      r.experiment = exp;
      r.config_point = point;
      r.estimator = "sage";
      r.metric = "iterations_mean";
      r.value = bi.value;
      r.ci_lo = r.ci_hi = bi.value;
      r.trials = static_cast<int>(ok.size());
      rows.push_back(r);
    }
    if (detection && !ok.empty()) {
      std::vector<std::vector<std::uint8_t>> truth, est;
      std::vector<double> miss_vals, false_vals;
      for (const TrialResult* t : ok) {
        truth.push_back(t->eta_true);
        est.push_back(t->eta_hat);
        const auto one = detection_rates(std::span(&t->eta_true, 1), std::span(&t->eta_hat, 1));
        miss_vals.push_back(one.p_miss);
        false_vals.push_back(one.p_false);
      }
      const auto agg = detection_rates(truth, est);
      const auto bm = bootstrap_mean(miss_vals, spec.bootstrap_resamples, spec.seed ^ 0x6dULL);
      const auto bf = bootstrap_mean(false_vals, spec.bootstrap_resamples, spec.seed ^ 0x66ULL);
      CsvRow rm;
      rm.experiment = exp;
      rm.config_point = point;
      rm.estimator = "sage";
      rm.metric = "p_miss";
      rm.value = agg.p_miss;
      rm.ci_lo = bm.lo;
      rm.ci_hi = bm.hi;
      rm.trials = static_cast<int>(ok.size());
      rows.push_back(rm);
      CsvRow rfa = rm;
      rfa.metric = "p_false";
      rfa.value = agg.p_false;
      rfa.ci_lo = bf.lo;
      rfa.ci_hi = bf.hi;
      rows.push_back(rfa);
    }
  }
  if (spec.run_genie) {
    std::vector<const TrialResult*> ok;
    for (const auto& t : trials) {
      if (t.has_genie && !t.genie_failed) ok.push_back(&t);
    }
    append_estimator_rows(rows, exp, point, "genie", ok, static_cast<int>(trials.size()),
                          spec.bootstrap_resamples, spec.seed, true);
  }
}

void write_traces(const ExperimentResult& result, const std::string& exp,
                  const std::filesystem::path& dir) {
  for (const auto& point : result.points) {
    for (const auto& trial : point.trials) {
      if (trial.trace.empty()) continue;
      const auto file =
          dir / (exp + "_" + point.label + "_trial" + std::to_string(trial.trial) + ".csv");
      std::ofstream out(file);
      out << "iteration,log_likelihood,skew,offset_us";
      for (std::size_t i = 0; i < trial.trace.front().asym_prob.size(); ++i) {
        out << ",pi_" << i + 1;
      }
      out << "\n";
      for (const auto& row : trial.trace) {
        out << row.iteration << "," << fmt(row.log_likelihood) << "," << fmt(row.skew) << ","
            << fmt_us(row.offset);
        for (double pi : row.asym_prob) out << "," << fmt(pi);
        out << "\n";
      }
    }
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
  ExperimentResult result;
  const std::string exp = family_name(spec.family);
  if (spec.traffic.load.size() != spec.scenario.paths.size()) {
    throw std::invalid_argument("one load entry required per path");
  }

  // Delay pdfs are cached per load; the harness trials sample from exactly
  // the histogram the genie is given, so the genie's pdf knowledge is exact.
  std::map<double, EmpiricalPdf> pdf_cache;
  auto pdf_for = [&](double load) -> const EmpiricalPdf& {
    auto it = pdf_cache.find(load);
    if (it == pdf_cache.end()) {
      it = pdf_cache.emplace(load, build_load_pdf(spec.traffic, load, spec.seed)).first;
    }
    return it->second;
  };

  if (spec.family == ExperimentFamily::kDelayPdfs) {
    const std::vector<double> loads =
        spec.load_sweep.empty() ? std::vector<double>{0.2, 0.4, 0.6, 0.8} : spec.load_sweep;
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir / "pdf");
    for (double load : loads) {
      const EmpiricalPdf& pdf = pdf_for(load);
      CsvRow r;
      r.experiment = exp;
      r.config_point = "load=" + fmt(load);
      r.estimator = "queue-sim";
      r.metric = "mean_delay_us";
      r.value = pdf.mean() * 1e6;
      r.ci_lo = r.ci_hi = r.value;
      r.trials = static_cast<int>(pdf.sample_count);
      result.rows.push_back(r);
      if (!out_dir.empty()) {
        char name[64];
        std::snprintf(name, sizeof(name), "tm1_load%02d.txt", static_cast<int>(load * 100 + 0.5));
        save_empirical_pdf(pdf, out_dir / "pdf" / name);
      }
    }
    if (!out_dir.empty()) write_results_csv(result.rows, out_dir / "results.csv");
    return result;
  }

  auto make_ctx = [&](const Scenario& scn, const std::vector<double>& loads,
                      const std::vector<double>& prev_loads, int components,
                      double noise_lin, double noise_phi) {
    TrialContext ctx;
    ctx.scenario = scn;
    ctx.schedule_spacing = spec.schedule_spacing;
    ctx.schedule_reply_offset = spec.schedule_reply_offset;
    ctx.grid = spec.grid;
    ctx.components = components;
    ctx.init_kappa = spec.init_kappa;
    ctx.prev_noise_linear = noise_lin;
    ctx.prev_noise_phi = noise_phi;
    ctx.run_sage = spec.run_sage;
    ctx.run_genie = spec.run_genie;
    ctx.keep_trace = false;
    ctx.sage_cfg = spec.sage;
    ctx.em = spec.em;
    for (std::size_t i = 0; i < scn.paths.size(); ++i) {
      const EmpiricalPdf& pdf = pdf_for(loads[i]);
      ctx.fwd_sampler.emplace_back(pdf);
      ctx.rev_sampler.emplace_back(pdf);
      ctx.fwd_pdf.emplace_back(pdf);
      ctx.rev_pdf.emplace_back(pdf);
      const EmpiricalPdf& prev_pdf = pdf_for(prev_loads[i]);
      ctx.prev_fwd_sampler.emplace_back(prev_pdf);
      ctx.prev_rev_sampler.emplace_back(prev_pdf);
    }
    return ctx;
  };

  struct Point {
    std::string label;
    TrialContext ctx;
  };
  std::vector<Point> points;

  const std::vector<double>& base_loads = spec.traffic.load;
  switch (spec.family) {
    case ExperimentFamily::kPSweep:
    case ExperimentFamily::kDetection: {
      std::vector<int> ps = spec.p_sweep.empty()
                                ? std::vector<int>{20, 60, 100, 140, 200}
                                : spec.p_sweep;
      for (int p : ps) {
        Scenario scn = spec.scenario;
        scn.exchanges_per_path = p;
        scn.prev_window_exchanges = p;  // P_t = P
        points.push_back({"P=" + std::to_string(p),
                          make_ctx(scn, base_loads, base_loads, spec.mixture_components, 0, 0)});
      }
      break;
    }
    case ExperimentFamily::kLoadSweep: {
      std::vector<double> loads =
          spec.load_sweep.empty() ? std::vector<double>{0.2, 0.4, 0.6, 0.8} : spec.load_sweep;
      for (double load : loads) {
        std::vector<double> per_path(spec.scenario.paths.size(), load);
        points.push_back({"load=" + fmt(load), make_ctx(spec.scenario, per_path, per_path,
                                                        spec.mixture_components, 0, 0)});
      }
      break;
    }
    case ExperimentFamily::kParamCases: {
      auto cases = spec.param_cases.empty()
                       ? std::vector<std::pair<double, double>>{{1.01, 1e-6}, {1.01, 0.0}, {1.0, 0.0}}
                       : spec.param_cases;
      for (const auto& [phi, delta] : cases) {
        Scenario scn = spec.scenario;
        scn.clock = {phi, delta};
        points.push_back({"phi=" + fmt(phi) + ";delta_us=" + fmt_us(delta),
                          make_ctx(scn, base_loads, base_loads, spec.mixture_components, 0, 0)});
      }
      break;
    }
    case ExperimentFamily::kMixtureOrder: {
      std::vector<int> comps =
          spec.mixture_sweep.empty() ? std::vector<int>{2, 4, 6} : spec.mixture_sweep;
      for (int m : comps) {
        points.push_back(
            {"components=" + std::to_string(m), make_ctx(spec.scenario, base_loads, base_loads, m, 0, 0)});
      }
      break;
    }
    case ExperimentFamily::kPrevMismatch: {
      std::vector<double> prev_loads =
          spec.mismatch_loads.empty() ? std::vector<double>{0.5, 0.6, 0.7} : spec.mismatch_loads;
      for (double pl : prev_loads) {
        std::vector<double> per_path(spec.scenario.paths.size(), pl);
        points.push_back({"prev_load=" + fmt(pl), make_ctx(spec.scenario, base_loads, per_path,
                                                           spec.mixture_components, 0, 0)});
      }
      break;
    }
    case ExperimentFamily::kPrevNoise: {
      auto cases = spec.noise_cases.empty()
                       ? std::vector<std::pair<double, double>>{{0.0, 0.0},
                                                                {1.01e-7, 1.01e-4},
                                                                {2.02e-7, 2.02e-4},
                                                                {4.04e-7, 4.04e-4},
                                                                {8.08e-7, 8.08e-4}}
                       : spec.noise_cases;
      for (const auto& [lin, phi] : cases) {
        points.push_back({"noise_lin=" + fmt(lin) + ";noise_phi=" + fmt(phi),
                          make_ctx(spec.scenario, base_loads, base_loads, spec.mixture_components,
                                   lin, phi)});
      }
      break;
    }
    default:
      break;
  }

  const bool detection = spec.family == ExperimentFamily::kDetection;
  for (auto& point : points) {
    point.ctx.keep_trace = false;
    std::vector<TrialResult> trials = run_point(point.ctx, spec.trials, spec.seed, spec.threads);
    // re-run the first trace_trials trials with trace capture (cheap, seeded)
    if (spec.trace_trials > 0 && spec.run_sage) {
      TrialContext tctx = point.ctx;
      tctx.keep_trace = true;
      for (int t = 0; t < std::min(spec.trace_trials, spec.trials); ++t) {
        trials[t] = run_trial(tctx, spec.seed, t);
      }
    }
    append_point_rows(result.rows, spec, point.label, trials, detection);
    result.points.push_back({point.label, std::move(trials)});
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_results_csv(result.rows, out_dir / "results.csv");
    if (spec.trace_trials > 0) {
      std::filesystem::create_directories(out_dir / "trace");
      write_traces(result, exp, out_dir / "trace");
    }
  }
  return result;
}

std::string format_csv(const std::vector<CsvRow>& rows) {
  std::ostringstream out;
  out << "experiment,config-point,estimator,metric,value,ci_lo,ci_hi,trials\n";
  for (const auto& r : rows) {
    out << r.experiment << "," << r.config_point << "," << r.estimator << "," << r.metric << ","
        << fmt(r.value) << "," << fmt(r.ci_lo) << "," << fmt(r.ci_hi) << "," << r.trials << "\n";
  }
  return out.str();
}

void write_results_csv(const std::vector<CsvRow>& rows, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  out << format_csv(rows);
}

}  // namespace ptpsync
