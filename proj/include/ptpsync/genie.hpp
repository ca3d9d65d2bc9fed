// Genie optimum invariant clock skew/offset estimators: posterior means under
// the right-invariant prior, assuming known asymmetric-path set and known
// queuing-delay pdfs. The (N+K+2)-dimensional integrals are evaluated as
// Riemann sums over a uniform grid; for fixed (phi, delta) the integrand
// factorizes over paths, so each path contributes an independent 1-D sum over
// its d_i (and tau_i) cells. All accumulation is done in the log domain with
// a single running max-shift per ratio.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ptpsync/delay_pdf.hpp"
#include "ptpsync/types.hpp"

namespace ptpsync {

class genie_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Midpoint-rule cells: phi_lo + (c+0.5)*phi_step, etc. The linear grid is
// shared by delta, every d_i and every tau_i.
struct IntegrationGrid {
  double phi_lo = 0.5;
  double phi_hi = 2.0;
  double phi_step = 1e-3;
  double lin_lo = -10e-6;
  double lin_hi = 10e-6;
  double lin_step = 0.01e-6;

  int phi_bins() const { return static_cast<int>((phi_hi - phi_lo) / phi_step + 0.5); }
  int lin_bins() const { return static_cast<int>((lin_hi - lin_lo) / lin_step + 0.5); }
  double phi_at(int c) const { return phi_lo + (c + 0.5) * phi_step; }
  double lin_at(int c) const { return lin_lo + (c + 0.5) * lin_step; }
  void validate() const;
};

struct GenieInputs {
  std::vector<PathRecords> records;
  std::vector<std::uint8_t> known_eta;  // eta_i, known to the genie
  std::vector<DelayPdf> fwd_pdf;        // f_{1i}
  std::vector<DelayPdf> rev_pdf;        // f_{2i}
  IntegrationGrid grid;

  int num_paths() const { return static_cast<int>(records.size()); }
  int num_asymmetric() const;
  void validate() const;
};

// log of Gamma1*Gamma0 at one parameter point. d has one entry per path; tau
// has one entry per asymmetric path, in path order. Returns -inf when any
// factor falls outside its pdf support.
double genie_log_gamma(const GenieInputs& inputs, double phi, double delta,
                       std::span<const double> d, std::span<const double> tau);

struct GenieEstimate {
  double offset = 0.0;
  double skew = 0.0;
  double interior_mass = 0.0;  // posterior fraction on cells interior in every dimension
};

// Evaluates the posterior-mean ratios. Throws genie_error when the grid
// carries no posterior mass, or when >= 99.9% of the mass sits on boundary
// cells ("grid too small").
GenieEstimate genie_estimate(const GenieInputs& inputs);

// Same computation without the boundary-mass error; returns the interior
// mass fraction for diagnostics.
double posterior_mass_diagnostic(const GenieInputs& inputs);

}  // namespace ptpsync
