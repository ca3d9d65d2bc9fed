// Robust joint clock skew/offset estimator: the relaxed maximum-likelihood
// problem over the full parameter vector (clock, per-path delays and
// asymmetries, asymmetry probabilities, forward/reverse mixture parameters)
// solved by the space-alternating generalized EM iteration. Each cycle
// refreshes the responsibilities after every parameter-group update, so the
// incomplete-data log-likelihood never decreases.

#pragma once

#include <cstdint>
#include <vector>

#include "ptpsync/gmm.hpp"
#include "ptpsync/types.hpp"

namespace ptpsync {

// Full parameter vector carried across SAGE iterations.
struct SageState {
  ClockParams clock;                 // phi, delta
  std::vector<double> det_delay;     // d_i
  std::vector<double> asymmetry;     // tau_i
  std::vector<double> asym_prob;     // pi_i in (0,1)
  std::vector<GmmParams> fwd_mix;    // alpha_{ik}, mu_{1ik}, sigma_{1ik}
  std::vector<GmmParams> rev_mix;    // beta_{il}, mu_{2il}, sigma_{2il}

  int num_paths() const { return static_cast<int>(det_delay.size()); }
  void validate() const;
};

// Posterior component/asymmetry memberships from the E-step. chi1 and chi0
// split each current-window exchange across (asymmetric, symmetric) branches
// and mixture component pairs (k,l); a_tilde does the same for the
// previous-window residuals. For every (i,j): sum_{k,l}(chi1+chi0) = 1 and
// sum_{k,l} a_tilde = 1. Normalizers are kept in log form for the tests.
struct Responsibilities {
  struct Path {
    std::vector<double> chi1;        // [j*M*L + k*L + l]
    std::vector<double> chi0;
    std::vector<double> a_tilde;     // [jt*M*L + k*L + l]
    std::vector<double> log_norm;        // log D_ij, length P
    std::vector<double> log_norm_prev;   // log D~_ij, length P_t
    int M = 0, L = 0;
  };
  std::vector<Path> paths;
};

enum class SkewRootConvention {
  kQuadraticMinusC,  // positive root of a*phi^2 + b*phi - c = 0
  kPaperPrinted,     // (sqrt(b^2 - 4ac) - b) / (2a) as printed
};

struct SageConfig {
  double tol_abs = 1e-8;
  double tol_rel = 1e-10;
  int max_iter = 200;
  double sigma_floor = 1e-9;          // seconds
  double starvation_eps = 1e-300;     // freeze a parameter group denominator below this
  double ll_decrease_slack = 1e-7;    // hard error beyond this
  SkewRootConvention skew_convention = SkewRootConvention::kQuadraticMinusC;
};

// Incomplete-data log-likelihood of the relaxed problem, including the
// previous-window mixture terms and the -2NP ln(phi) term. Mixture sums are
// evaluated with log-sum-exp. Throws on a non-finite per-exchange term,
// naming the offending (path, round).
double incomplete_log_likelihood(const SageState& state, const TwoWayData& data);

// E-step: responsibilities under the current parameters, normalizers via
// log-sum-exp. Throws if any normalizer vanishes.
Responsibilities e_step(const SageState& state, const TwoWayData& data);

struct MixingUpdate {
  std::vector<double> pi;
  std::vector<std::vector<double>> alpha;  // per path
  std::vector<std::vector<double>> beta;
};
MixingUpdate update_mixing(const Responsibilities& resp, const TwoWayData& data);

struct MeanUpdate {
  std::vector<std::vector<double>> mu_fwd, mu_rev;
  std::vector<std::vector<std::uint8_t>> frozen_fwd, frozen_rev;  // starved components
};
MeanUpdate update_means(const Responsibilities& resp, const SageState& state,
                        const TwoWayData& data, const SageConfig& cfg = {});

struct VarianceUpdate {
  std::vector<std::vector<double>> var_fwd, var_rev;  // sigma^2, floored
  std::vector<std::vector<std::uint8_t>> frozen_fwd, frozen_rev;
};
// Uses the means already stored in `state` (the SAGE ordering updates means
// first), then clamps at cfg.sigma_floor^2.
VarianceUpdate update_variances(const Responsibilities& resp, const SageState& state,
                                const TwoWayData& data, const SageConfig& cfg = {});

struct PathDelayUpdate {
  std::vector<double> d;
  std::vector<std::uint8_t> frozen;
};
PathDelayUpdate update_path_delays(const Responsibilities& resp, const SageState& state,
                                   const TwoWayData& data, const SageConfig& cfg = {});

struct AsymmetryUpdate {
  std::vector<double> tau;
  std::vector<std::uint8_t> frozen;  // chi1 mass vanished: tau kept at its previous value
};
AsymmetryUpdate update_asymmetries(const Responsibilities& resp, const SageState& state,
                                   const TwoWayData& data, const SageConfig& cfg = {});

double update_offset(const Responsibilities& resp, const SageState& state,
                     const TwoWayData& data);

// Positive root of the skew stationarity quadratic. With the printed
// convention this evaluates (sqrt(b^2-4ac)-b)/(2a) directly; the default
// convention passes -c through the same arithmetic. Returns NaN when the
// discriminant is negative or the root is non-positive.
double skew_quadratic_root(double a, double b, double c);

struct SkewUpdate {
  double phi = 0.0;
  bool used_fallback = false;  // bracketed numeric maximization of Q was used
  double a = 0.0, b = 0.0, c = 0.0;
};
SkewUpdate update_skew(const Responsibilities& resp, const SageState& state,
                       const TwoWayData& data, const SageConfig& cfg = {});

// Expected complete-data log-likelihood (the Q-function) at the candidate
// parameters, holding the responsibilities fixed. Test hook: every
// parameter-group update must not decrease Q.
double q_function(const SageState& candidate, const Responsibilities& resp,
                  const TwoWayData& data);

struct SageTraceRow {
  int iteration = 0;
  double log_likelihood = 0.0;
  double skew = 0.0;
  double offset = 0.0;
  std::vector<double> asym_prob;
};

struct SageResult {
  SageState state;
  std::vector<SageTraceRow> trace;  // row 0 is the initial state
  int iterations = 0;
  bool converged = false;
  int skew_fallbacks = 0;
  int frozen_events = 0;
};

// Runs full SAGE cycles (steps 1-16: E-step, then mixing / means / variances
// / path delays / asymmetries / offset / skew updates, each followed by an
// E-step refresh) until |dLL| < tol or max_iter. Throws sage_error if the
// log-likelihood decreases beyond the slack.
SageResult run_sage(const TwoWayData& data, const SageState& init, const SageConfig& cfg = {});

class sage_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// eta_i = 1 iff pi_i >= 0.5 (boundary inclusive).
std::vector<std::uint8_t> classify_paths(const SageState& state);

}  // namespace ptpsync
