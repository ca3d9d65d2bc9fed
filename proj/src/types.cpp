#include "ptpsync/types.hpp"

#include <cmath>

namespace ptpsync {

void ClockParams::validate() const {
  if (!std::isfinite(skew) || !std::isfinite(offset)) {
    throw std::invalid_argument("clock parameters must be finite");
  }
  if (skew <= 0.0) {
    throw std::invalid_argument("clock skew must be positive");
  }
}

int Scenario::num_asymmetric() const {
  int k = 0;
  for (const auto& p : paths) k += p.is_asymmetric ? 1 : 0;
  return k;
}

void Scenario::validate() const {
  clock.validate();
  if (paths.empty()) throw std::invalid_argument("scenario has no paths");
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& p = paths[i];
    if (!(p.det_delay >= 0.0) || !std::isfinite(p.det_delay)) {
      throw std::invalid_argument("det_delay must be finite and >= 0 on path " + std::to_string(i));
    }
    if (!std::isfinite(p.asymmetry)) {
      throw std::invalid_argument("asymmetry must be finite on path " + std::to_string(i));
    }
    if (p.is_asymmetric) {
      if (std::fabs(p.asymmetry) < d_tau) {
        throw std::invalid_argument("asymmetric path " + std::to_string(i) +
                                    " has |tau| < d_tau");
      }
    } else if (p.asymmetry != 0.0) {
      throw std::invalid_argument("symmetric path " + std::to_string(i) + " has nonzero tau");
    }
  }
  if (2 * num_asymmetric() >= num_paths()) {
    throw std::invalid_argument("fewer than half of the paths may be asymmetric");
  }
  if (exchanges_per_path < 1) throw std::invalid_argument("P must be >= 1");
  if (prev_window_exchanges < 0) throw std::invalid_argument("P_t must be >= 0");
  if (!(d_tau >= 0.0) || !std::isfinite(d_tau)) {
    throw std::invalid_argument("d_tau must be finite and >= 0");
  }
}

void PrevWindowResiduals::validate() const {
  if (fwd.size() != rev.size()) {
    throw std::invalid_argument("forward/reverse residual path counts differ");
  }
  const std::size_t n = fwd.empty() ? 0 : fwd.front().size();
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    if (fwd[i].size() != n || rev[i].size() != n) {
      throw std::invalid_argument("residual lengths inconsistent across paths");
    }
  }
}

void TwoWayData::validate() const {
  if (records.empty()) throw std::invalid_argument("no timestamp records");
  const std::size_t p = records.front().size();
  for (const auto& r : records) {
    if (r.size() != p) throw std::invalid_argument("exchange counts differ across paths");
  }
  if (p == 0) throw std::invalid_argument("empty exchange records");
  prev.validate();
  if (prev.num_paths() != 0 && prev.num_paths() != num_paths()) {
    throw std::invalid_argument("residual path count does not match record path count");
  }
}

}  // namespace ptpsync
