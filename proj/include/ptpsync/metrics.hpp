// Experiment metrics: skew-normalized RMSE, detection rates, bootstrap CIs.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ptpsync {

// sqrt( mean over trials of (estimate - truth)^2 / true_skew^2 ).
double nrmse(std::span<const double> estimates, std::span<const double> truths,
             std::span<const double> true_skews);

struct DetectionRates {
  double p_miss = 0.0;   // asymmetric paths classified symmetric
  double p_false = 0.0;  // symmetric paths classified asymmetric
};

// Pools paths over all trials. Each element pairs the true and estimated
// indicator vectors of one trial.
DetectionRates detection_rates(std::span<const std::vector<std::uint8_t>> truth,
                               std::span<const std::vector<std::uint8_t>> estimated);

struct BootstrapResult {
  double value = 0.0;  // point estimate on the full sample
  double lo = 0.0;     // 2.5% percentile
  double hi = 0.0;     // 97.5% percentile
  double se = 0.0;     // std of the bootstrap distribution
};

// Percentile bootstrap of the NRMSE over trials.
BootstrapResult bootstrap_nrmse(std::span<const double> estimates, std::span<const double> truths,
                                std::span<const double> true_skews, int resamples,
                                std::uint64_t seed);

}  // namespace ptpsync
