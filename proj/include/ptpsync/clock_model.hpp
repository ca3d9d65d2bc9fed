// Timestamp generation for the two-way message-exchange model
//   t2 = (t1 + d_ms + w1)*phi + delta,   t3 = (t4 - d_sm - w2)*phi + delta
// and recovery of queuing-delay residuals from a previous window.

#pragma once

#include <functional>
#include <random>

#include "ptpsync/types.hpp"

namespace ptpsync {

// Send-time rule supplying the master-side timestamps t1 and t4 for exchange
// round j on path i. The estimators never depend on the rule.
struct SendSchedule {
  std::function<double(int path, int round)> t1;
  std::function<double(int path, int round)> t4;
};

// The schedule used throughout the experiments: t1 = spacing*j,
// t4 = spacing*j + reply_offset, identical on every path.
SendSchedule uniform_schedule(double spacing = 60e-6, double reply_offset = 30e-6);

// Draws one queuing delay in seconds; must be strictly positive.
using DelaySampler = std::function<double(std::mt19937_64&)>;

struct PathDelaySamplers {
  DelaySampler forward;
  DelaySampler reverse;
};

// Generates the P two-way exchanges on every path of the scenario. Draw
// order is fixed (path-major, round-minor, forward before reverse) so a given
// rng state yields reproducible data. Throws model_violation if a sampler
// returns a non-positive delay.
std::vector<PathRecords> generate_timestamps(const Scenario& scenario,
                                             const std::vector<PathDelaySamplers>& delays,
                                             const SendSchedule& schedule,
                                             std::mt19937_64& rng);

// Previous-window parameter estimates used to turn stored timestamps into
// queuing-delay residuals.
struct PrevEstimates {
  ClockParams clock;
  std::vector<double> fwd_delay;  // d~_i^{ms} per path
  std::vector<double> rev_delay;  // d~_i^{sm} per path
};

// w~1 = (t2 - delta)/phi - t1 - d_ms ;  w~2 = (delta - t3)/phi + t4 - d_sm.
// Throws std::invalid_argument on a non-positive skew estimate.
PrevWindowResiduals prev_window_residuals(const std::vector<PathRecords>& prev_records,
                                          const PrevEstimates& est);

}  // namespace ptpsync
