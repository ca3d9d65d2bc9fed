// Queuing-delay source: a cascade of store-and-forward switches with
// two-class non-preemptive priority queues carrying TM-1-style background
// traffic. Each sync packet sees a fresh steady-state queue at every switch
// (i.i.d. per-exchange sampling), so the end-to-end delay is the sum over
// switches of the residual service of any in-progress background packet plus
// the sync transmission time.

#pragma once

#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "ptpsync/types.hpp"

namespace ptpsync {

struct SizeMixEntry {
  double bits = 0.0;
  double prob = 0.0;
};

// 64 B / 576 B / 1518 B at 0.5 / 0.3 / 0.2, resembling ITU-T G.8261 TM-1.
std::vector<SizeMixEntry> tm1_size_mix();

struct SwitchCascadeConfig {
  int num_switches = 10;
  double link_rate = 1e9;           // bits/second
  double background_load = 0.6;     // fraction of capacity, in (0,1)
  double sync_packet_bits = 720.0;  // 90-byte PTP event message
  std::vector<SizeMixEntry> background_size_mix = tm1_size_mix();

  void validate() const;
};

// Stateless equilibrium sampler. At each switch the sync packet finds the
// server busy with probability rho; the in-service background packet is
// size-biased and its residual uniform over its transmission time.
class CascadeDelaySampler {
 public:
  explicit CascadeDelaySampler(SwitchCascadeConfig config);

  // One end-to-end delay in seconds; strictly positive.
  double sample(std::mt19937_64& rng) const;

  const SwitchCascadeConfig& config() const { return config_; }

 private:
  SwitchCascadeConfig config_;
  std::vector<double> size_biased_cdf_;  // cumulative P(in-service size <= entry)
  std::vector<double> service_time_;     // per-entry transmission time, seconds
  double sync_time_ = 0.0;
};

// Normalized histogram of strictly positive delay samples over uniform bins.
struct EmpiricalPdf {
  std::vector<double> bin_edges;  // size bins()+1, uniform spacing
  std::vector<double> densities;  // per second
  std::size_t sample_count = 0;

  int bins() const { return static_cast<int>(densities.size()); }
  double bin_width() const { return bin_edges[1] - bin_edges[0]; }
  double support_lo() const { return bin_edges.front(); }
  double support_hi() const { return bin_edges.back(); }

  // Piecewise-constant density; zero outside the support.
  double density_at(double x) const;
  double log_density_at(double x) const;  // -inf outside the support

  double mean() const;

  // Checks positive support, non-negative densities and unit total mass.
  void validate() const;
};

// Builds the normalized histogram. Throws on an empty sample list, a
// non-positive bin width, or any non-positive sample (Assumption 2).
EmpiricalPdf build_empirical_pdf(std::span<const double> samples, double bin_width);

// Two-column text serialization: bin center in seconds, density per second.
void save_empirical_pdf(const EmpiricalPdf& pdf, const std::filesystem::path& file);
EmpiricalPdf load_empirical_pdf(const std::filesystem::path& file);

// Inverse-CDF sampler over an EmpiricalPdf (uniform within the chosen bin).
// Draws are distributed exactly per the histogram density.
class HistogramSampler {
 public:
  explicit HistogramSampler(const EmpiricalPdf& pdf);
  double sample(std::mt19937_64& rng) const;

 private:
  std::vector<double> cdf_;  // cumulative mass at the right edge of each bin
  std::vector<double> edges_;
};

}  // namespace ptpsync
