// Queuing-delay pdf handle accepted by the posterior-sum estimators: either
// an empirical histogram (piecewise-constant, zero outside its support) or a
// Gaussian mixture.

#pragma once

#include <memory>
#include <variant>

#include "ptpsync/gmm.hpp"
#include "ptpsync/queue_sim.hpp"

namespace ptpsync {

class DelayPdf {
 public:
  DelayPdf() = default;
  explicit DelayPdf(EmpiricalPdf pdf, bool mirrored = false)
      : kind_(Kind::kEmpirical), emp_(std::make_shared<EmpiricalPdf>(std::move(pdf))), neg_(mirrored) {
    emp_->validate();
  }
  explicit DelayPdf(GmmParams gmm) : kind_(Kind::kGmm), gmm_(std::make_shared<GmmParams>(std::move(gmm))) {
    gmm_->validate();
  }

  bool is_empirical() const { return kind_ == Kind::kEmpirical; }

  double log_density(double x) const {
    if (kind_ == Kind::kEmpirical) return emp_->log_density_at(neg_ ? -x : x);
    return gmm_->log_pdf(x);
  }
  double density(double x) const { return std::exp(log_density(x)); }

  // Hard support for the empirical case; an effective support for the
  // mixture case (mu +- kGmmSupportSigmas sigma, beyond which the density is
  // below exp(-128) of its peak and cannot influence double-precision sums).
  double support_lo() const;
  double support_hi() const;

  // Distribution of -w. Mixtures negate their means; histograms flip lazily.
  DelayPdf mirrored() const;

  const EmpiricalPdf& empirical() const { return *emp_; }
  bool empirical_mirrored() const { return neg_; }
  const GmmParams& gmm() const { return *gmm_; }

  static constexpr double kGmmSupportSigmas = 16.0;

 private:
  enum class Kind { kEmpirical, kGmm };
  Kind kind_ = Kind::kEmpirical;
  std::shared_ptr<const EmpiricalPdf> emp_;
  std::shared_ptr<const GmmParams> gmm_;
  bool neg_ = false;
};

}  // namespace ptpsync
