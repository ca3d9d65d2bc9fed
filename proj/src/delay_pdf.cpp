#include "ptpsync/delay_pdf.hpp"

#include <algorithm>

namespace ptpsync {

double DelayPdf::support_lo() const {
  if (kind_ == Kind::kEmpirical) {
    return neg_ ? -emp_->support_hi() : emp_->support_lo();
  }
  double lo = gmm_->means[0] - kGmmSupportSigmas * gmm_->stds[0];
  for (int k = 1; k < gmm_->size(); ++k) {
    lo = std::min(lo, gmm_->means[k] - kGmmSupportSigmas * gmm_->stds[k]);
  }
  return lo;
}

double DelayPdf::support_hi() const {
  if (kind_ == Kind::kEmpirical) {
    return neg_ ? -emp_->support_lo() : emp_->support_hi();
  }
  double hi = gmm_->means[0] + kGmmSupportSigmas * gmm_->stds[0];
  for (int k = 1; k < gmm_->size(); ++k) {
    hi = std::max(hi, gmm_->means[k] + kGmmSupportSigmas * gmm_->stds[k]);
  }
  return hi;
}

DelayPdf DelayPdf::mirrored() const {
  DelayPdf out = *this;
  if (kind_ == Kind::kEmpirical) {
    out.neg_ = !neg_;
  } else {
    out.gmm_ = std::make_shared<GmmParams>(gmm_->mirrored());
  }
  return out;
}

}  // namespace ptpsync
