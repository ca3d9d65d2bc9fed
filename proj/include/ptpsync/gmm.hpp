// One-dimensional Gaussian mixture model: pdf evaluation (linear and
// log-sum-exp form) and classic EM fitting, used to approximate queuing-delay
// pdfs and to seed the SAGE iteration.

#pragma once

#include <span>
#include <vector>

namespace ptpsync {

struct GmmParams {
  std::vector<double> weights;  // on the simplex
  std::vector<double> means;    // seconds
  std::vector<double> stds;     // seconds, >= floor

  int size() const { return static_cast<int>(weights.size()); }

  // Checks simplex weights (sum 1 within 1e-12), positive finite stds,
  // equal component counts.
  void validate() const;

  double pdf(double x) const;
  double log_pdf(double x) const;  // log-sum-exp over components

  // Mixture of -w for w ~ this mixture (means negated).
  GmmParams mirrored() const;
};

// log of the normal density with mean mu, std sigma at x.
double log_normal_pdf(double x, double mu, double sigma);

struct EmOptions {
  double tol = 1e-8;          // relative log-likelihood change
  int max_iter = 500;
  double sigma_floor = 1e-9;  // seconds; no returned std falls below this
};

struct EmFitResult {
  GmmParams params;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Classic EM for a 1-D GMM. Seeding: k-quantile means of the sorted samples,
// equal weights, common initial sigma equal to the population std of the
// samples. The per-iteration log-likelihood is non-decreasing; variances are
// clamped at the floor. If max_iter is reached before the tolerance the best
// parameters so far are returned with converged = false.
EmFitResult fit_em(std::span<const double> samples, int num_components,
                   const EmOptions& opts = {});

}  // namespace ptpsync
