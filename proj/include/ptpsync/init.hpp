// Ad-hoc initialization of the SAGE state: GMM fits on the previous-window
// residuals, per-path per-direction invariant skew/intercept estimates, and
// the softmax seeding of the asymmetry probabilities.

#pragma once

#include <span>

#include "ptpsync/delay_pdf.hpp"
#include "ptpsync/genie.hpp"
#include "ptpsync/sage.hpp"

namespace ptpsync {

class init_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SingleDirectionEstimate {
  double skew = 0.0;       // phi
  double intercept = 0.0;  // gamma
};

// Posterior-mean estimates of (phi, gamma) for the one-direction model
//   t_recv = (t_send + w) * phi + gamma,  w ~ delay_pdf i.i.d.,
// under the right-invariant prior on the location-scale pair, evaluated by
// 2-D Riemann summation on the grid (phi axis x linear axis for gamma).
// Throws init_error when the grid carries no posterior mass.
SingleDirectionEstimate single_direction_estimate(std::span<const double> t_send,
                                                  std::span<const double> t_recv,
                                                  const DelayPdf& delay_pdf,
                                                  const IntegrationGrid& grid);

struct InitConfig {
  int fwd_components = 4;  // M_i, identical across paths
  int rev_components = 4;  // L_i
  double d_tau = 2e-6;     // seconds
  double kappa = 1e6;      // softmax scale; delays of microsecond order
  EmOptions em;
  IntegrationGrid grid;
};

// Builds SageState^(0) from the observed data. Requires P_t >= 1 (the
// initial mixtures are fitted on the previous-window residuals).
SageState initialize(const TwoWayData& data, const InitConfig& cfg);

}  // namespace ptpsync
