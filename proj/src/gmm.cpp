#include "ptpsync/gmm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ptpsync {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454836;  // ln(2*pi)
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

double log_normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * (kLogTwoPi + z * z) - std::log(sigma);
}

void GmmParams::validate() const {
  if (weights.size() != means.size() || weights.size() != stds.size() || weights.empty()) {
    throw std::invalid_argument("mixture parameter vectors must be non-empty and equal length");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(weights[k] >= 0.0) || weights[k] > 1.0) {
      throw std::invalid_argument("mixture weight outside [0,1]");
    }
    if (!std::isfinite(means[k])) throw std::invalid_argument("mixture mean not finite");
    if (!(stds[k] > 0.0) || !std::isfinite(stds[k])) {
      throw std::invalid_argument("mixture std must be positive and finite");
    }
    total += weights[k];
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture weights must sum to 1");
  }
}

double GmmParams::pdf(double x) const {
  return std::exp(log_pdf(x));
}

double GmmParams::log_pdf(double x) const {
  double m = kNegInf;
  const int n = size();
  // two passes: max shift, then sum
  std::array<double, 16> small;
  std::vector<double> big;
  double* terms = nullptr;
  if (n <= 16) {
    terms = small.data();
  } else {
    big.resize(n);
    terms = big.data();
  }
  for (int k = 0; k < n; ++k) {
    const double t = (weights[k] > 0.0)
                         ? std::log(weights[k]) + log_normal_pdf(x, means[k], stds[k])
                         : kNegInf;
    terms[k] = t;
    if (t > m) m = t;
  }
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += std::exp(terms[k] - m);
  return m + std::log(s);
}

GmmParams GmmParams::mirrored() const {
  GmmParams out = *this;
  for (double& mu : out.means) mu = -mu;
  return out;
}

EmFitResult fit_em(std::span<const double> samples, int num_components, const EmOptions& opts) {
  const int n = static_cast<int>(samples.size());
  const int k = num_components;
  if (k < 1) throw std::invalid_argument("need at least one mixture component");
  if (n < k) throw std::invalid_argument("need at least as many samples as components");

  // Seed: k-quantile means of the sorted samples, equal weights, shared
  // initial std equal to the population std (floored).
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double var = 0.0;
  for (double x : sorted) var += (x - mean) * (x - mean);
  var /= n;
  const double init_sigma = std::max(std::sqrt(var), opts.sigma_floor);

  GmmParams p;
  p.weights.assign(k, 1.0 / k);
  p.stds.assign(k, init_sigma);
  p.means.resize(k);
  for (int c = 0; c < k; ++c) {
    const double q = (c + 0.5) / k;
    p.means[c] = sorted[static_cast<std::size_t>(q * (n - 1) + 0.5)];
  }

  std::vector<double> resp(static_cast<std::size_t>(n) * k);
  std::vector<double> logw(k);

  double ll_prev = kNegInf;
  EmFitResult out;
  out.params = p;

  for (int it = 1; it <= opts.max_iter; ++it) {
    for (int c = 0; c < k; ++c) {
      logw[c] = p.weights[c] > 0.0 ? std::log(p.weights[c]) : kNegInf;
    }

    // E-step and log-likelihood in one sweep.
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      double m = kNegInf;
      double* r = &resp[static_cast<std::size_t>(i) * k];
      for (int c = 0; c < k; ++c) {
        r[c] = logw[c] + log_normal_pdf(samples[i], p.means[c], p.stds[c]);
        if (r[c] > m) m = r[c];
      }
      double s = 0.0;
      for (int c = 0; c < k; ++c) s += std::exp(r[c] - m);
      const double log_norm = m + std::log(s);
      ll += log_norm;
      for (int c = 0; c < k; ++c) r[c] = std::exp(r[c] - log_norm);
    }

    // M-step.
    for (int c = 0; c < k; ++c) {
      double nk = 0.0, mu = 0.0;
      for (int i = 0; i < n; ++i) {
        nk += resp[static_cast<std::size_t>(i) * k + c];
        mu += resp[static_cast<std::size_t>(i) * k + c] * samples[i];
      }
      if (nk <= 0.0) {
        // starved component: keep its parameters, zero its weight
        p.weights[c] = 0.0;
        continue;
      }
      mu /= nk;
      double v = 0.0;
      for (int i = 0; i < n; ++i) {
        const double dx = samples[i] - mu;
        v += resp[static_cast<std::size_t>(i) * k + c] * dx * dx;
      }
      v /= nk;
      p.weights[c] = nk / n;
      p.means[c] = mu;
      p.stds[c] = std::max(std::sqrt(v), opts.sigma_floor);
    }

    out.params = p;
    out.log_likelihood = ll;
    out.iterations = it;
    if (ll_prev != kNegInf) {
      const double denom = std::max(std::fabs(ll), 1.0);
      if (std::fabs(ll - ll_prev) / denom < opts.tol) {
        out.converged = true;
        break;
      }
    }
    ll_prev = ll;
  }
  return out;
}

}  // namespace ptpsync
