#include "ptpsync/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ptpsync/rng.hpp"

namespace ptpsync {

double nrmse(std::span<const double> estimates, std::span<const double> truths,
             std::span<const double> true_skews) {
  if (estimates.empty() || estimates.size() != truths.size() ||
      estimates.size() != true_skews.size()) {
    throw std::invalid_argument("nrmse needs equal-length non-empty inputs");
  }
  double acc = 0.0;
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    const double e = (estimates[t] - truths[t]) / true_skews[t];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(estimates.size()));
}

DetectionRates detection_rates(std::span<const std::vector<std::uint8_t>> truth,
                               std::span<const std::vector<std::uint8_t>> estimated) {
  if (truth.size() != estimated.size()) {
    throw std::invalid_argument("detection_rates needs matching trial counts");
  }
  long long asym = 0, miss = 0, sym = 0, false_alarm = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (truth[t].size() != estimated[t].size()) {
      throw std::invalid_argument("path counts differ within a trial");
    }
    for (std::size_t i = 0; i < truth[t].size(); ++i) {
      if (truth[t][i]) {
        ++asym;
        if (!estimated[t][i]) ++miss;
      } else {
        ++sym;
        if (estimated[t][i]) ++false_alarm;
      }
    }
  }
  DetectionRates out;
  out.p_miss = asym > 0 ? static_cast<double>(miss) / asym : 0.0;
  out.p_false = sym > 0 ? static_cast<double>(false_alarm) / sym : 0.0;
  return out;
}

BootstrapResult bootstrap_nrmse(std::span<const double> estimates, std::span<const double> truths,
                                std::span<const double> true_skews, int resamples,
                                std::uint64_t seed) {
  BootstrapResult out;
  out.value = nrmse(estimates, truths, true_skews);
  if (resamples < 2) return out;
  const std::size_t n = estimates.size();
  auto rng = make_rng(seed, 0x626f6f74ULL);  // "boot"
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> stats(resamples);
  for (int r = 0; r < resamples; ++r) {
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t idx = pick(rng);
      const double e = (estimates[idx] - truths[idx]) / true_skews[idx];
      acc += e * e;
    }
    stats[r] = std::sqrt(acc / static_cast<double>(n));
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

}  // namespace ptpsync
