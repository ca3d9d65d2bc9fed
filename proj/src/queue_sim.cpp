#include "ptpsync/queue_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ptpsync {

std::vector<SizeMixEntry> tm1_size_mix() {
  return {{64.0 * 8.0, 0.5}, {576.0 * 8.0, 0.3}, {1518.0 * 8.0, 0.2}};
}

void SwitchCascadeConfig::validate() const {
  if (num_switches < 1) throw std::invalid_argument("need at least one switch");
  if (!(link_rate > 0.0)) throw std::invalid_argument("link rate must be positive");
  if (!(background_load > 0.0) || !(background_load < 1.0)) {
    throw std::invalid_argument("background load must lie in (0,1)");
  }
  if (!(sync_packet_bits > 0.0)) throw std::invalid_argument("sync packet size must be positive");
  if (background_size_mix.empty()) throw std::invalid_argument("empty background size mix");
  double total = 0.0;
  for (const auto& e : background_size_mix) {
    if (!(e.bits > 0.0) || !(e.prob >= 0.0)) {
      throw std::invalid_argument("invalid background size mix entry");
    }
    total += e.prob;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("background size mix probabilities must sum to 1");
  }
}

CascadeDelaySampler::CascadeDelaySampler(SwitchCascadeConfig config) : config_(std::move(config)) {
  config_.validate();
  sync_time_ = config_.sync_packet_bits / config_.link_rate;
  // In-service packet is length-biased: P(entry) proportional to prob * bits.
  double norm = 0.0;
  for (const auto& e : config_.background_size_mix) norm += e.prob * e.bits;
  double acc = 0.0;
  for (const auto& e : config_.background_size_mix) {
    acc += e.prob * e.bits / norm;
    size_biased_cdf_.push_back(acc);
    service_time_.push_back(e.bits / config_.link_rate);
  }
  size_biased_cdf_.back() = 1.0;
}

double CascadeDelaySampler::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double delay = 0.0;
  for (int s = 0; s < config_.num_switches; ++s) {
    delay += sync_time_;
    if (unit(rng) < config_.background_load) {
      const double u = unit(rng);
      const std::size_t idx =
          std::lower_bound(size_biased_cdf_.begin(), size_biased_cdf_.end(), u) -
          size_biased_cdf_.begin();
      delay += unit(rng) * service_time_[std::min(idx, service_time_.size() - 1)];
    }
  }
  return delay;
}

double EmpiricalPdf::density_at(double x) const {
  if (x < support_lo() || x >= support_hi()) return 0.0;
  const auto idx = static_cast<std::size_t>((x - support_lo()) / bin_width());
  return densities[std::min(idx, densities.size() - 1)];
}

double EmpiricalPdf::log_density_at(double x) const {
  const double d = density_at(x);
  return d > 0.0 ? std::log(d) : -std::numeric_limits<double>::infinity();
}

double EmpiricalPdf::mean() const {
  double m = 0.0;
  const double w = bin_width();
  for (int b = 0; b < bins(); ++b) {
    m += densities[b] * w * 0.5 * (bin_edges[b] + bin_edges[b + 1]);
  }
  return m;
}

void EmpiricalPdf::validate() const {
  if (densities.empty() || bin_edges.size() != densities.size() + 1) {
    throw std::invalid_argument("empirical pdf shape invalid");
  }
  if (!(support_lo() > 0.0)) {
    throw model_violation("empirical pdf support must be strictly positive");
  }
  double mass = 0.0;
  for (int b = 0; b < bins(); ++b) {
    if (!(densities[b] >= 0.0)) throw std::invalid_argument("negative density");
    mass += densities[b] * (bin_edges[b + 1] - bin_edges[b]);
  }
  if (std::fabs(mass - 1.0) > 1e-9) {
    throw std::invalid_argument("empirical pdf does not integrate to 1");
  }
}

EmpiricalPdf build_empirical_pdf(std::span<const double> samples, double bin_width) {
  if (samples.empty()) throw std::invalid_argument("cannot build a pdf from zero samples");
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be positive");
  double lo = samples[0], hi = samples[0];
  for (double x : samples) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw model_violation("delay samples must be strictly positive and finite");
    }
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  // Align the first edge on a bin-width lattice just below the smallest
  // sample; anchor it at the minimum itself when the lattice would reach zero,
  // keeping the support strictly positive.
  double first = std::floor(lo / bin_width) * bin_width;
  if (!(first > 0.0)) first = lo;
  const int nbins = std::max(1, static_cast<int>(std::floor((hi - first) / bin_width)) + 1);

  EmpiricalPdf pdf;
  pdf.sample_count = samples.size();
  pdf.bin_edges.resize(nbins + 1);
  for (int b = 0; b <= nbins; ++b) pdf.bin_edges[b] = first + b * bin_width;
  pdf.densities.assign(nbins, 0.0);
  for (double x : samples) {
    auto idx = static_cast<std::size_t>((x - first) / bin_width);
    idx = std::min(idx, static_cast<std::size_t>(nbins - 1));
    pdf.densities[idx] += 1.0;
  }
  const double norm = 1.0 / (static_cast<double>(samples.size()) * bin_width);
  for (double& d : pdf.densities) d *= norm;
  pdf.validate();
  return pdf;
}

void save_empirical_pdf(const EmpiricalPdf& pdf, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  char line[64];
  for (int b = 0; b < pdf.bins(); ++b) {
    const double center = 0.5 * (pdf.bin_edges[b] + pdf.bin_edges[b + 1]);
    std::snprintf(line, sizeof(line), "%.12e %.12e\n", center, pdf.densities[b]);
    out << line;
  }
}

EmpiricalPdf load_empirical_pdf(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::vector<double> centers, densities;
  double c = 0.0, d = 0.0;
  while (in >> c >> d) {
    centers.push_back(c);
    densities.push_back(d);
  }
  if (centers.size() < 1) throw std::runtime_error("empty pdf file " + file.string());
  const double w = centers.size() > 1 ? centers[1] - centers[0] : centers[0];
  EmpiricalPdf pdf;
  pdf.densities = densities;
  pdf.bin_edges.resize(centers.size() + 1);
  for (std::size_t b = 0; b < centers.size(); ++b) pdf.bin_edges[b] = centers[b] - 0.5 * w;
  pdf.bin_edges.back() = centers.back() + 0.5 * w;
  pdf.sample_count = 0;
  pdf.validate();
  return pdf;
}

HistogramSampler::HistogramSampler(const EmpiricalPdf& pdf) {
  pdf.validate();
  edges_ = pdf.bin_edges;
  cdf_.resize(pdf.bins());
  double acc = 0.0;
  for (int b = 0; b < pdf.bins(); ++b) {
    acc += pdf.densities[b] * (edges_[b + 1] - edges_[b]);
    cdf_[b] = acc;
  }
  cdf_.back() = 1.0;
}

double HistogramSampler::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  const std::size_t b =
      std::min(static_cast<std::size_t>(std::lower_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin()),
               cdf_.size() - 1);
  return edges_[b] + unit(rng) * (edges_[b + 1] - edges_[b]);
}

}  // namespace ptpsync
