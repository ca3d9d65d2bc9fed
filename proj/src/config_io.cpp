#include "ptpsync/config_io.hpp"

#include <fstream>

#include <json.hpp>

namespace ptpsync {

namespace {

using nlohmann::json;

Scenario parse_scenario(const json& j) {
  Scenario scn;
  const int n = j.at("N").get<int>();
  scn.exchanges_per_path = j.at("P").get<int>();
  scn.prev_window_exchanges = j.value("P_t", scn.exchanges_per_path);
  scn.clock.skew = j.value("phi", 1.01);
  scn.clock.offset = j.value("delta_us", 1.0) * 1e-6;
  scn.d_tau = j.value("d_tau_us", 2.0) * 1e-6;
  std::vector<double> d_us(n, 1.0), tau_us(n, 0.0);
  if (j.contains("d_us")) d_us = j.at("d_us").get<std::vector<double>>();
  if (j.contains("tau_us")) tau_us = j.at("tau_us").get<std::vector<double>>();
  if (static_cast<int>(d_us.size()) != n || static_cast<int>(tau_us.size()) != n) {
    throw std::invalid_argument("d_us and tau_us must have N entries");
  }
  scn.paths.resize(n);
  for (int i = 0; i < n; ++i) {
    scn.paths[i].det_delay = d_us[i] * 1e-6;
    scn.paths[i].asymmetry = tau_us[i] * 1e-6;
    scn.paths[i].is_asymmetric = tau_us[i] != 0.0;
  }
  scn.validate();
  return scn;
}

}  // namespace

ExperimentSpec parse_experiment_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentSpec spec;
  spec.family = family_from_name(j.value("experiment", "p-sweep"));
  spec.scenario = parse_scenario(j.at("scenario"));

  if (j.contains("traffic")) {
    const json& t = j.at("traffic");
    spec.traffic.model = t.value("model", "tm1");
    if (spec.traffic.model != "tm1") {
      throw std::invalid_argument("unsupported traffic model: " + spec.traffic.model);
    }
    if (t.contains("load")) {
      if (t.at("load").is_array()) {
        spec.traffic.load = t.at("load").get<std::vector<double>>();
      } else {
        spec.traffic.load.assign(spec.scenario.paths.size(), t.at("load").get<double>());
      }
    }
    spec.traffic.num_switches = t.value("num_switches", 10);
    spec.traffic.link_rate = t.value("link_rate_bps", 1e9);
    spec.traffic.sync_packet_bits = t.value("sync_packet_bytes", 90.0) * 8.0;
    spec.traffic.pdf_bin_width = t.value("pdf_bin_width_us", 0.1) * 1e-6;
    spec.traffic.pdf_samples = t.value("pdf_samples", 200000);
  }
  if (spec.traffic.load.empty()) spec.traffic.load.assign(spec.scenario.paths.size(), 0.6);

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    spec.grid.phi_lo = g.value("phi_lo", 0.5);
    spec.grid.phi_hi = g.value("phi_hi", 2.0);
    spec.grid.phi_step = g.value("phi_step", 0.001);
    spec.grid.lin_lo = g.value("lin_lo_us", -10.0) * 1e-6;
    spec.grid.lin_hi = g.value("lin_hi_us", 10.0) * 1e-6;
    spec.grid.lin_step = g.value("lin_step_us", 0.01) * 1e-6;
  }
  spec.grid.validate();

  spec.mixture_components = j.value("mixture_components", 4);
  spec.init_kappa = j.value("kappa", 1e6);
  spec.trials = j.value("trials", 100);
  spec.seed = j.value("seed", 1ULL);
  spec.threads = j.value("threads", 1);
  spec.trace_trials = j.value("trace_trials", 0);
  spec.bootstrap_resamples = j.value("bootstrap_resamples", 1000);
  if (j.contains("schedule_spacing_us")) {
    spec.schedule_spacing = j.at("schedule_spacing_us").get<double>() * 1e-6;
  }
  if (j.contains("schedule_reply_offset_us")) {
    spec.schedule_reply_offset = j.at("schedule_reply_offset_us").get<double>() * 1e-6;
  }
  if (j.contains("estimators")) {
    spec.run_sage = false;
    spec.run_genie = false;
    for (const auto& e : j.at("estimators")) {
      if (e.get<std::string>() == "sage") spec.run_sage = true;
      if (e.get<std::string>() == "genie") spec.run_genie = true;
    }
  }

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    if (s.contains("P")) spec.p_sweep = s.at("P").get<std::vector<int>>();
    if (s.contains("load")) spec.load_sweep = s.at("load").get<std::vector<double>>();
    if (s.contains("mixture_components")) {
      spec.mixture_sweep = s.at("mixture_components").get<std::vector<int>>();
    }
    if (s.contains("prev_load")) spec.mismatch_loads = s.at("prev_load").get<std::vector<double>>();
    if (s.contains("param_cases")) {
      for (const auto& c : s.at("param_cases")) {
        spec.param_cases.emplace_back(c.at("phi").get<double>(),
                                      c.at("delta_us").get<double>() * 1e-6);
      }
    }
    if (s.contains("noise_cases")) {
      for (const auto& c : s.at("noise_cases")) {
        spec.noise_cases.emplace_back(c.at("sigma_linear").get<double>(),
                                      c.at("sigma_phi").get<double>());
      }
    }
  }
  return spec;
}

ExperimentSpec parse_experiment_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config file " + file.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_experiment_json(text);
}

}  // namespace ptpsync
