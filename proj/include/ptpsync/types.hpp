// Core domain types for two-way message-exchange clock synchronization.
//
// All times and delays are stored in seconds (double precision); microseconds
// appear only at I/O boundaries.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ptpsync {

// Thrown when sampled data or parameters violate a model assumption
// (e.g. a non-positive queuing delay).
class model_violation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Relative clock skew (phi, dimensionless) and offset (delta, seconds) of the
// slave clock with respect to the master clock: c(t) = phi*t + delta.
struct ClockParams {
  double skew = 1.0;
  double offset = 0.0;

  void validate() const;
};

// One master-slave communication path. The forward (master-to-slave)
// deterministic delay is det_delay + asymmetry on an asymmetric path and
// det_delay otherwise; the reverse delay is always det_delay.
struct PathConfig {
  double det_delay = 0.0;   // d_i, seconds, >= 0
  double asymmetry = 0.0;   // tau_i, seconds
  bool is_asymmetric = false;  // eta_i

  double forward_delay() const { return det_delay + (is_asymmetric ? asymmetry : 0.0); }
  double reverse_delay() const { return det_delay; }
};

// Ground-truth description of one synchronization window.
struct Scenario {
  std::vector<PathConfig> paths;  // N paths
  ClockParams clock;
  int exchanges_per_path = 0;     // P
  int prev_window_exchanges = 0;  // P_t
  double d_tau = 0.0;             // asymmetry threshold, seconds

  int num_paths() const { return static_cast<int>(paths.size()); }
  int num_asymmetric() const;

  // Checks the scenario invariants: positive finite skew, d_i >= 0,
  // |tau_i| >= d_tau on asymmetric paths, tau_i = 0 on symmetric ones,
  // fewer asymmetric paths than N/2, P >= 1, P_t >= 0.
  void validate() const;
};

// The four timestamps of one two-way exchange: master send (t1), slave
// receive (t2), slave send (t3), master receive (t4).
struct ExchangeRecord {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
  double t4 = 0.0;
};

using PathRecords = std::vector<ExchangeRecord>;

// Queuing-delay residuals recovered from the previous window, per path and
// direction; inputs to the GMM fits and the previous-window likelihood terms.
struct PrevWindowResiduals {
  std::vector<std::vector<double>> fwd;  // w~_{1i}, [path][j], length P_t each
  std::vector<std::vector<double>> rev;  // w~_{2i}

  int num_paths() const { return static_cast<int>(fwd.size()); }
  int exchanges() const { return fwd.empty() ? 0 : static_cast<int>(fwd.front().size()); }
  void validate() const;
};

// Observed data consumed by the estimators: current-window timestamps plus
// previous-window residuals.
struct TwoWayData {
  std::vector<PathRecords> records;  // [path][round]
  PrevWindowResiduals prev;

  int num_paths() const { return static_cast<int>(records.size()); }
  int exchanges_per_path() const {
    return records.empty() ? 0 : static_cast<int>(records.front().size());
  }
  int prev_exchanges() const { return prev.exchanges(); }
  void validate() const;
};

}  // namespace ptpsync
