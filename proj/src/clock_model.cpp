#include "ptpsync/clock_model.hpp"

#include <cmath>
#include <string>

namespace ptpsync {

SendSchedule uniform_schedule(double spacing, double reply_offset) {
  SendSchedule s;
  s.t1 = [spacing](int, int j) { return spacing * j; };
  s.t4 = [spacing, reply_offset](int, int j) { return spacing * j + reply_offset; };
  return s;
}

std::vector<PathRecords> generate_timestamps(const Scenario& scenario,
                                             const std::vector<PathDelaySamplers>& delays,
                                             const SendSchedule& schedule,
                                             std::mt19937_64& rng) {
  scenario.validate();
  if (delays.size() != scenario.paths.size()) {
    throw std::invalid_argument("one delay sampler pair required per path");
  }
  const double phi = scenario.clock.skew;
  const double delta = scenario.clock.offset;
  std::vector<PathRecords> out(scenario.paths.size());
  for (std::size_t i = 0; i < scenario.paths.size(); ++i) {
    const PathConfig& path = scenario.paths[i];
    const double d_ms = path.forward_delay();
    const double d_sm = path.reverse_delay();
    out[i].resize(scenario.exchanges_per_path);
    for (int j = 0; j < scenario.exchanges_per_path; ++j) {
      const double w1 = delays[i].forward(rng);
      const double w2 = delays[i].reverse(rng);
      if (!(w1 > 0.0) || !(w2 > 0.0)) {
        throw model_violation("non-positive queuing delay sampled on path " + std::to_string(i));
      }
      ExchangeRecord& r = out[i][j];
      r.t1 = schedule.t1(static_cast<int>(i), j);
      r.t4 = schedule.t4(static_cast<int>(i), j);
      r.t2 = (r.t1 + d_ms + w1) * phi + delta;
      r.t3 = (r.t4 - d_sm - w2) * phi + delta;
    }
  }
  return out;
}

PrevWindowResiduals prev_window_residuals(const std::vector<PathRecords>& prev_records,
                                          const PrevEstimates& est) {
  if (!(est.clock.skew > 0.0) || !std::isfinite(est.clock.skew)) {
    throw std::invalid_argument("previous skew estimate must be positive and finite");
  }
  if (!std::isfinite(est.clock.offset)) {
    throw std::invalid_argument("previous offset estimate must be finite");
  }
  if (est.fwd_delay.size() != prev_records.size() || est.rev_delay.size() != prev_records.size()) {
    throw std::invalid_argument("one delay estimate pair required per path");
  }
  const double phi = est.clock.skew;
  const double delta = est.clock.offset;
  PrevWindowResiduals out;
  out.fwd.resize(prev_records.size());
  out.rev.resize(prev_records.size());
  for (std::size_t i = 0; i < prev_records.size(); ++i) {
    out.fwd[i].reserve(prev_records[i].size());
    out.rev[i].reserve(prev_records[i].size());
    for (const ExchangeRecord& r : prev_records[i]) {
      out.fwd[i].push_back((r.t2 - delta) / phi - r.t1 - est.fwd_delay[i]);
      out.rev[i].push_back((delta - r.t3) / phi + r.t4 - est.rev_delay[i]);
    }
  }
  out.validate();
  return out;
}

}  // namespace ptpsync
