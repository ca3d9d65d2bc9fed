#include "ptpsync/sage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

namespace ptpsync {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454836;

double lse2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double lse(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

// Residuals of one exchange under the candidate parameters.
struct Args {
  double fwd0;  // (t2 - delta)/phi - d_i - t1
  double fwd1;  // fwd0 - tau_i
  double rev;   // t4 - d_i + (delta - t3)/phi
};

Args exchange_args(const SageState& s, int i, const ExchangeRecord& r) {
  const double phi = s.clock.skew;
  const double delta = s.clock.offset;
  Args a;
  a.fwd0 = (r.t2 - delta) / phi - s.det_delay[i] - r.t1;
  a.fwd1 = a.fwd0 - s.asymmetry[i];
  a.rev = r.t4 - s.det_delay[i] + (delta - r.t3) / phi;
  return a;
}

// Per-component constants log(w_k) - log(sigma_k) - 0.5*log(2*pi).
std::vector<double> log_prefixes(const GmmParams& g) {
  std::vector<double> pre(g.size());
  for (int k = 0; k < g.size(); ++k) {
    pre[k] = safe_log(g.weights[k]) - std::log(g.stds[k]) - 0.5 * kLogTwoPi;
  }
  return pre;
}

double comp_log(const GmmParams& g, const std::vector<double>& pre, int k, double x) {
  const double z = (x - g.means[k]) / g.stds[k];
  return pre[k] - 0.5 * z * z;
}

// Golden-section maximization of f on [lo, hi].
template <typename F>
double golden_max(F&& f, double lo, double hi, double tol, int max_iter = 200) {
  const double gr = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

void SageState::validate() const {
  clock.validate();
  const std::size_t n = det_delay.size();
  if (n == 0 || asymmetry.size() != n || asym_prob.size() != n || fwd_mix.size() != n ||
      rev_mix.size() != n) {
    throw std::invalid_argument("SAGE state vectors must be non-empty and equal length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(det_delay[i]) || !std::isfinite(asymmetry[i])) {
      throw std::invalid_argument("path parameters must be finite");
    }
    if (!(asym_prob[i] >= 0.0) || !(asym_prob[i] <= 1.0)) {
      throw std::invalid_argument("pi_i must lie in [0,1]");
    }
    fwd_mix[i].validate();
    rev_mix[i].validate();
  }
}

double incomplete_log_likelihood(const SageState& state, const TwoWayData& data) {
  const int n = data.num_paths();
  const int p = data.exchanges_per_path();
  double ll = 0.0;
  std::vector<double> buf;
  for (int i = 0; i < n; ++i) {
    const GmmParams& fm = state.fwd_mix[i];
    const GmmParams& rm = state.rev_mix[i];
    const auto fpre = log_prefixes(fm);
    const auto rpre = log_prefixes(rm);
    const double lpi = safe_log(state.asym_prob[i]);
    const double l1mpi = safe_log(1.0 - state.asym_prob[i]);
    for (int j = 0; j < p; ++j) {
      const Args a = exchange_args(state, i, data.records[i][j]);
      buf.clear();
      for (int k = 0; k < fm.size(); ++k) buf.push_back(comp_log(fm, fpre, k, a.fwd1));
      const double la1 = lse(buf);
      buf.clear();
      for (int k = 0; k < fm.size(); ++k) buf.push_back(comp_log(fm, fpre, k, a.fwd0));
      const double la0 = lse(buf);
      buf.clear();
      for (int l = 0; l < rm.size(); ++l) buf.push_back(comp_log(rm, rpre, l, a.rev));
      const double lb = lse(buf);
      const double term = lse2(lpi + la1, l1mpi + la0) + lb;
      if (!std::isfinite(term)) {
        throw sage_error("non-finite likelihood term at path " + std::to_string(i) + ", round " +
                         std::to_string(j));
      }
      ll += term;
    }
    for (int jt = 0; jt < data.prev_exchanges(); ++jt) {
      buf.clear();
      for (int k = 0; k < fm.size(); ++k) {
        buf.push_back(comp_log(fm, fpre, k, data.prev.fwd[i][jt]));
      }
      const double t1 = lse(buf);
      buf.clear();
      for (int l = 0; l < rm.size(); ++l) {
        buf.push_back(comp_log(rm, rpre, l, data.prev.rev[i][jt]));
      }
      const double t2 = lse(buf);
      if (!std::isfinite(t1) || !std::isfinite(t2)) {
        throw sage_error("non-finite previous-window term at path " + std::to_string(i) +
                         ", round " + std::to_string(jt));
      }
      ll += t1 + t2;
    }
  }
  ll -= 2.0 * n * p * std::log(state.clock.skew);
  return ll;
}

Responsibilities e_step(const SageState& state, const TwoWayData& data) {
  const int n = data.num_paths();
  const int p = data.exchanges_per_path();
  const int pt = data.prev_exchanges();
  Responsibilities resp;
  resp.paths.resize(n);
  std::vector<double> logrev, logfwd1, logfwd0, terms;
  for (int i = 0; i < n; ++i) {
    const GmmParams& fm = state.fwd_mix[i];
    const GmmParams& rm = state.rev_mix[i];
    const auto fpre = log_prefixes(fm);
    const auto rpre = log_prefixes(rm);
    const int M = fm.size();
    const int L = rm.size();
    auto& rp = resp.paths[i];
    rp.M = M;
    rp.L = L;
    rp.chi1.resize(static_cast<std::size_t>(p) * M * L);
    rp.chi0.resize(static_cast<std::size_t>(p) * M * L);
    rp.a_tilde.resize(static_cast<std::size_t>(pt) * M * L);
    rp.log_norm.resize(p);
    rp.log_norm_prev.resize(pt);

    const double lpi = safe_log(state.asym_prob[i]);
    const double l1mpi = safe_log(1.0 - state.asym_prob[i]);
    logrev.resize(L);
    logfwd1.resize(M);
    logfwd0.resize(M);
    terms.resize(2 * static_cast<std::size_t>(M) * L);

    for (int j = 0; j < p; ++j) {
      const Args a = exchange_args(state, i, data.records[i][j]);
      for (int l = 0; l < L; ++l) logrev[l] = comp_log(rm, rpre, l, a.rev);
      for (int k = 0; k < M; ++k) {
        logfwd1[k] = lpi + comp_log(fm, fpre, k, a.fwd1);
        logfwd0[k] = l1mpi + comp_log(fm, fpre, k, a.fwd0);
      }
      double m = kNegInf;
      for (int k = 0; k < M; ++k) {
        for (int l = 0; l < L; ++l) {
          const double t1 = logfwd1[k] + logrev[l];
          const double t0 = logfwd0[k] + logrev[l];
          terms[2 * (static_cast<std::size_t>(k) * L + l)] = t1;
          terms[2 * (static_cast<std::size_t>(k) * L + l) + 1] = t0;
          m = std::max(m, std::max(t1, t0));
        }
      }
      if (m == kNegInf || !std::isfinite(m)) {
        throw sage_error("E-step normalizer vanished at path " + std::to_string(i) + ", round " +
                         std::to_string(j));
      }
      double s = 0.0;
      for (double t : terms) s += std::exp(t - m);
      const double logd = m + std::log(s);
      rp.log_norm[j] = logd;
      double* c1 = &rp.chi1[static_cast<std::size_t>(j) * M * L];
      double* c0 = &rp.chi0[static_cast<std::size_t>(j) * M * L];
      for (int k = 0; k < M; ++k) {
        for (int l = 0; l < L; ++l) {
          c1[k * L + l] = std::exp(terms[2 * (static_cast<std::size_t>(k) * L + l)] - logd);
          c0[k * L + l] = std::exp(terms[2 * (static_cast<std::size_t>(k) * L + l) + 1] - logd);
        }
      }
    }

    for (int jt = 0; jt < pt; ++jt) {
      for (int k = 0; k < M; ++k) logfwd0[k] = comp_log(fm, fpre, k, data.prev.fwd[i][jt]);
      for (int l = 0; l < L; ++l) logrev[l] = comp_log(rm, rpre, l, data.prev.rev[i][jt]);
      const double logd = lse(std::span<const double>(logfwd0.data(), M)) +
                          lse(std::span<const double>(logrev.data(), L));
      if (!std::isfinite(logd)) {
        throw sage_error("previous-window normalizer vanished at path " + std::to_string(i) +
                         ", round " + std::to_string(jt));
      }
      rp.log_norm_prev[jt] = logd;
      double* at = &rp.a_tilde[static_cast<std::size_t>(jt) * M * L];
      for (int k = 0; k < M; ++k) {
        for (int l = 0; l < L; ++l) {
          at[k * L + l] = std::exp(logfwd0[k] + logrev[l] - logd);
        }
      }
    }
  }
  return resp;
}

MixingUpdate update_mixing(const Responsibilities& resp, const TwoWayData& data) {
  const int n = static_cast<int>(resp.paths.size());
  const int p = data.exchanges_per_path();
  const int pt = data.prev_exchanges();
  MixingUpdate out;
  out.pi.resize(n);
  out.alpha.resize(n);
  out.beta.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& rp = resp.paths[i];
    const int M = rp.M, L = rp.L;
    out.alpha[i].assign(M, 0.0);
    out.beta[i].assign(L, 0.0);
    double pi_sum = 0.0;
    for (int j = 0; j < p; ++j) {
      const double* c1 = &rp.chi1[static_cast<std::size_t>(j) * M * L];
      const double* c0 = &rp.chi0[static_cast<std::size_t>(j) * M * L];
      for (int k = 0; k < M; ++k) {
        for (int l = 0; l < L; ++l) {
          const double both = c1[k * L + l] + c0[k * L + l];
          pi_sum += c1[k * L + l];
          out.alpha[i][k] += both;
          out.beta[i][l] += both;
        }
      }
    }
    for (int jt = 0; jt < pt; ++jt) {
      const double* at = &rp.a_tilde[static_cast<std::size_t>(jt) * M * L];
      for (int k = 0; k < M; ++k) {
        for (int l = 0; l < L; ++l) {
          out.alpha[i][k] += at[k * L + l];
          out.beta[i][l] += at[k * L + l];
        }
      }
    }
    out.pi[i] = pi_sum / p;
    for (double& a : out.alpha[i]) a /= (p + pt);
    for (double& b : out.beta[i]) b /= (p + pt);
  }
  return out;
}

MeanUpdate update_means(const Responsibilities& resp, const SageState& state,
                        const TwoWayData& data, const SageConfig& cfg) {
  const int n = static_cast<int>(resp.paths.size());
  const int p = data.exchanges_per_path();
  const int pt = data.prev_exchanges();
  MeanUpdate out;
  out.mu_fwd.resize(n);
  out.mu_rev.resize(n);
  out.frozen_fwd.resize(n);
  out.frozen_rev.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& rp = resp.paths[i];
    const int M = rp.M, L = rp.L;
    std::vector<double> den_f(M, 0.0), num_f(M, 0.0), den_r(L, 0.0), num_r(L, 0.0);
    for (int j = 0; j < p; ++j) {
      const Args a = exchange_args(state, i, data.records[i][j]);
      const double base = a.fwd0;  // (t2 - delta)/phi - d_i - t1
      const double* c1 = &rp.chi1[static_cast<std::size_t>(j) * M * L];
      const double* c0 = &rp.chi0[static_cast<std::size_t>(j) * M * L];
      for (int k = 0; k < M; ++k) {
        for (int l = 0; l < L; ++l) {
          const double x1 = c1[k * L + l];
          const double both = x1 + c0[k * L + l];
          den_f[k] += both;
          num_f[k] += base * both - x1 * state.asymmetry[i];
          den_r[l] += both;
          num_r[l] += a.rev * both;
        }
      }
    }
    for (int jt = 0; jt < pt; ++jt) {
      const double* at = &rp.a_tilde[static_cast<std::size_t>(jt) * M * L];
      for (int k = 0; k < M; ++k) {
        for (int l = 0; l < L; ++l) {
          den_f[k] += at[k * L + l];
          num_f[k] += at[k * L + l] * data.prev.fwd[i][jt];
          den_r[l] += at[k * L + l];
          num_r[l] += at[k * L + l] * data.prev.rev[i][jt];
        }
      }
    }
    out.mu_fwd[i].resize(M);
    out.frozen_fwd[i].assign(M, 0);
    for (int k = 0; k < M; ++k) {
      if (den_f[k] < cfg.starvation_eps) {
        out.mu_fwd[i][k] = state.fwd_mix[i].means[k];
        out.frozen_fwd[i][k] = 1;
      } else {
        out.mu_fwd[i][k] = num_f[k] / den_f[k];
      }
    }
    out.mu_rev[i].resize(L);
    out.frozen_rev[i].assign(L, 0);
    for (int l = 0; l < L; ++l) {
      if (den_r[l] < cfg.starvation_eps) {
        out.mu_rev[i][l] = state.rev_mix[i].means[l];
        out.frozen_rev[i][l] = 1;
      } else {
        out.mu_rev[i][l] = num_r[l] / den_r[l];
      }
    }
  }
  return out;
}

VarianceUpdate update_variances(const Responsibilities& resp, const SageState& state,
                                const TwoWayData& data, const SageConfig& cfg) {
  const int n = static_cast<int>(resp.paths.size());
  const int p = data.exchanges_per_path();
  const int pt = data.prev_exchanges();
  const double floor2 = cfg.sigma_floor * cfg.sigma_floor;
  VarianceUpdate out;
  out.var_fwd.resize(n);
  out.var_rev.resize(n);
  out.frozen_fwd.resize(n);
  out.frozen_rev.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& rp = resp.paths[i];
    const int M = rp.M, L = rp.L;
    const auto& mu_f = state.fwd_mix[i].means;
    const auto& mu_r = state.rev_mix[i].means;
    std::vector<double> den_f(M, 0.0), num_f(M, 0.0), den_r(L, 0.0), num_r(L, 0.0);
    for (int j = 0; j < p; ++j) {
      const Args a = exchange_args(state, i, data.records[i][j]);
      const double* c1 = &rp.chi1[static_cast<std::size_t>(j) * M * L];
      const double* c0 = &rp.chi0[static_cast<std::size_t>(j) * M * L];
      for (int k = 0; k < M; ++k) {
        const double e1 = a.fwd1 - mu_f[k];
        const double e0 = a.fwd0 - mu_f[k];
        for (int l = 0; l < L; ++l) {
          const double x1 = c1[k * L + l];
          const double x0 = c0[k * L + l];
          den_f[k] += x1 + x0;
          num_f[k] += x1 * e1 * e1 + x0 * e0 * e0;
          const double er = a.rev - mu_r[l];
          den_r[l] += x1 + x0;
          num_r[l] += (x1 + x0) * er * er;
        }
      }
    }
    for (int jt = 0; jt < pt; ++jt) {
      const double* at = &rp.a_tilde[static_cast<std::size_t>(jt) * M * L];
      for (int k = 0; k < M; ++k) {
        const double ef = data.prev.fwd[i][jt] - mu_f[k];
        for (int l = 0; l < L; ++l) {
          den_f[k] += at[k * L + l];
          num_f[k] += at[k * L + l] * ef * ef;
          const double er = data.prev.rev[i][jt] - mu_r[l];
          den_r[l] += at[k * L + l];
          num_r[l] += at[k * L + l] * er * er;
        }
      }
    }
    out.var_fwd[i].resize(M);
    out.frozen_fwd[i].assign(M, 0);
    for (int k = 0; k < M; ++k) {
      if (den_f[k] < cfg.starvation_eps) {
        out.var_fwd[i][k] = state.fwd_mix[i].stds[k] * state.fwd_mix[i].stds[k];
        out.frozen_fwd[i][k] = 1;
      } else {
        out.var_fwd[i][k] = std::max(num_f[k] / den_f[k], floor2);
      }
    }
    out.var_rev[i].resize(L);
    out.frozen_rev[i].assign(L, 0);
    for (int l = 0; l < L; ++l) {
      if (den_r[l] < cfg.starvation_eps) {
        out.var_rev[i][l] = state.rev_mix[i].stds[l] * state.rev_mix[i].stds[l];
        out.frozen_rev[i][l] = 1;
      } else {
        out.var_rev[i][l] = std::max(num_r[l] / den_r[l], floor2);
      }
    }
  }
  return out;
}

PathDelayUpdate update_path_delays(const Responsibilities& resp, const SageState& state,
                                   const TwoWayData& data, const SageConfig& cfg) {
  const int n = static_cast<int>(resp.paths.size());
  const int p = data.exchanges_per_path();
  PathDelayUpdate out;
  out.d.resize(n);
  out.frozen.assign(n, 0);
  const double phi = state.clock.skew;
  const double delta = state.clock.offset;
  for (int i = 0; i < n; ++i) {
    const auto& rp = resp.paths[i];
    const int M = rp.M, L = rp.L;
    const auto& fm = state.fwd_mix[i];
    const auto& rm = state.rev_mix[i];
    double den = 0.0, num = 0.0;
    for (int j = 0; j < p; ++j) {
      const ExchangeRecord& r = data.records[i][j];
      const double fwd_no_d = (r.t2 - delta) / phi - r.t1;          // forward arg + d_i
      const double rev_no_d = r.t4 + (delta - r.t3) / phi;          // reverse arg + d_i
      const double* c1 = &rp.chi1[static_cast<std::size_t>(j) * M * L];
      const double* c0 = &rp.chi0[static_cast<std::size_t>(j) * M * L];
      for (int k = 0; k < M; ++k) {
        const double inv_s1 = 1.0 / (fm.stds[k] * fm.stds[k]);
        const double f1 = (fwd_no_d - state.asymmetry[i] - fm.means[k]) * inv_s1;
        const double f0 = (fwd_no_d - fm.means[k]) * inv_s1;
        for (int l = 0; l < L; ++l) {
          const double inv_s2 = 1.0 / (rm.stds[l] * rm.stds[l]);
          const double rv = (rev_no_d - rm.means[l]) * inv_s2;
          const double x1 = c1[k * L + l];
          const double x0 = c0[k * L + l];
          den += (x1 + x0) * (inv_s1 + inv_s2);
          num += x1 * (rv + f1) + x0 * (f0 + rv);
        }
      }
    }
    if (den < cfg.starvation_eps) {
      out.d[i] = state.det_delay[i];
      out.frozen[i] = 1;
    } else {
      out.d[i] = num / den;
    }
  }
  return out;
}

AsymmetryUpdate update_asymmetries(const Responsibilities& resp, const SageState& state,
                                   const TwoWayData& data, const SageConfig& cfg) {
  const int n = static_cast<int>(resp.paths.size());
  const int p = data.exchanges_per_path();
  AsymmetryUpdate out;
  out.tau.resize(n);
  out.frozen.assign(n, 0);
  const double phi = state.clock.skew;
  const double delta = state.clock.offset;
  for (int i = 0; i < n; ++i) {
    const auto& rp = resp.paths[i];
    const int M = rp.M, L = rp.L;
    const auto& fm = state.fwd_mix[i];
    double den = 0.0, num = 0.0;
    for (int j = 0; j < p; ++j) {
      const ExchangeRecord& r = data.records[i][j];
      const double fwd0 = (r.t2 - delta) / phi - state.det_delay[i] - r.t1;
      const double* c1 = &rp.chi1[static_cast<std::size_t>(j) * M * L];
      for (int k = 0; k < M; ++k) {
        const double inv_s1 = 1.0 / (fm.stds[k] * fm.stds[k]);
        double chi_k = 0.0;
        for (int l = 0; l < L; ++l) chi_k += c1[k * L + l];
        den += chi_k * inv_s1;
        num += chi_k * (fwd0 - fm.means[k]) * inv_s1;
      }
    }
    if (den < cfg.starvation_eps) {
      out.tau[i] = state.asymmetry[i];
      out.frozen[i] = 1;
    } else {
      out.tau[i] = num / den;
    }
  }
  return out;
}

double update_offset(const Responsibilities& resp, const SageState& state,
                     const TwoWayData& data) {
  const int n = static_cast<int>(resp.paths.size());
  const int p = data.exchanges_per_path();
  const double phi = state.clock.skew;
  double den = 0.0, num = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& rp = resp.paths[i];
    const int M = rp.M, L = rp.L;
    const auto& fm = state.fwd_mix[i];
    const auto& rm = state.rev_mix[i];
    for (int j = 0; j < p; ++j) {
      const ExchangeRecord& r = data.records[i][j];
      const double f_base = r.t2 / phi - state.det_delay[i] - r.t1;
      const double r_base = r.t4 - r.t3 / phi - state.det_delay[i];
      const double* c1 = &rp.chi1[static_cast<std::size_t>(j) * M * L];
      const double* c0 = &rp.chi0[static_cast<std::size_t>(j) * M * L];
      for (int k = 0; k < M; ++k) {
        const double inv_s1 = 1.0 / (fm.stds[k] * fm.stds[k]);
        const double f1 = (f_base - state.asymmetry[i] - fm.means[k]) * inv_s1;
        const double f0 = (f_base - fm.means[k]) * inv_s1;
        for (int l = 0; l < L; ++l) {
          const double inv_s2 = 1.0 / (rm.stds[l] * rm.stds[l]);
          const double rv = (r_base - rm.means[l]) * inv_s2;
          const double x1 = c1[k * L + l];
          const double x0 = c0[k * L + l];
          den += (x1 + x0) * (inv_s1 + inv_s2);
          num += x1 * (f1 - rv) + x0 * (f0 - rv);
        }
      }
    }
  }
  return phi * num / den;
}

double skew_quadratic_root(double a, double b, double c) {
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (std::sqrt(disc) - b) / (2.0 * a);
}

SkewUpdate update_skew(const Responsibilities& resp, const SageState& state,
                       const TwoWayData& data, const SageConfig& cfg) {
  const int n = static_cast<int>(resp.paths.size());
  const int p = data.exchanges_per_path();
  SkewUpdate out;
  out.a = 2.0 * n * p;
  double b = 0.0, c = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& rp = resp.paths[i];
    const int M = rp.M, L = rp.L;
    const auto& fm = state.fwd_mix[i];
    const auto& rm = state.rev_mix[i];
    for (int j = 0; j < p; ++j) {
      const ExchangeRecord& r = data.records[i][j];
      const double t2d = r.t2 - state.clock.offset;   // t2 - delta
      const double dt3 = state.clock.offset - r.t3;   // delta - t3
      const double* c1 = &rp.chi1[static_cast<std::size_t>(j) * M * L];
      const double* c0 = &rp.chi0[static_cast<std::size_t>(j) * M * L];
      for (int k = 0; k < M; ++k) {
        const double inv_s1 = 1.0 / (fm.stds[k] * fm.stds[k]);
        const double fwd_const0 = state.det_delay[i] + r.t1 + fm.means[k];
        const double fwd_const1 = fwd_const0 + state.asymmetry[i];
        for (int l = 0; l < L; ++l) {
          const double inv_s2 = 1.0 / (rm.stds[l] * rm.stds[l]);
          const double rev_const = r.t4 - state.det_delay[i] - rm.means[l];
          const double x1 = c1[k * L + l];
          const double x0 = c0[k * L + l];
          c += (x1 + x0) * (t2d * t2d * inv_s1 + dt3 * dt3 * inv_s2);
          b += x1 * (fwd_const1 * t2d * inv_s1 - rev_const * dt3 * inv_s2) +
               x0 * (fwd_const0 * t2d * inv_s1 - rev_const * dt3 * inv_s2);
        }
      }
    }
  }
  out.b = b;
  out.c = c;
  const double signed_c = (cfg.skew_convention == SkewRootConvention::kQuadraticMinusC) ? -c : c;
  double phi = skew_quadratic_root(out.a, b, signed_c);
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    // Bracketed numeric maximization of Q preserves the SAGE monotonicity
    // guarantee when the closed form is infeasible.
    out.used_fallback = true;
    SageState cand = state;
    const double lo = state.clock.skew * 0.5;
    const double hi = state.clock.skew * 2.0;
    phi = golden_max(
        [&](double x) {
          cand.clock.skew = x;
          return q_function(cand, resp, data);
        },
        lo, hi, 1e-12 * state.clock.skew);
  }
  out.phi = phi;
  return out;
}

double q_function(const SageState& candidate, const Responsibilities& resp,
                  const TwoWayData& data) {
  const int n = data.num_paths();
  const int p = data.exchanges_per_path();
  const int pt = data.prev_exchanges();
  double q = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& rp = resp.paths[i];
    const int M = rp.M, L = rp.L;
    const GmmParams& fm = candidate.fwd_mix[i];
    const GmmParams& rm = candidate.rev_mix[i];
    const auto fpre = log_prefixes(fm);
    const auto rpre = log_prefixes(rm);
    const double lpi = safe_log(candidate.asym_prob[i]);
    const double l1mpi = safe_log(1.0 - candidate.asym_prob[i]);
    for (int j = 0; j < p; ++j) {
      const Args a = exchange_args(candidate, i, data.records[i][j]);
      const double* c1 = &rp.chi1[static_cast<std::size_t>(j) * M * L];
      const double* c0 = &rp.chi0[static_cast<std::size_t>(j) * M * L];
      for (int k = 0; k < M; ++k) {
        const double lf1 = comp_log(fm, fpre, k, a.fwd1);
        const double lf0 = comp_log(fm, fpre, k, a.fwd0);
        for (int l = 0; l < L; ++l) {
          const double lr = comp_log(rm, rpre, l, a.rev);
          const double x1 = c1[k * L + l];
          const double x0 = c0[k * L + l];
          if (x1 > 0.0) q += x1 * (lpi + lf1 + lr);
          if (x0 > 0.0) q += x0 * (l1mpi + lf0 + lr);
        }
      }
    }
    for (int jt = 0; jt < pt; ++jt) {
      const double* at = &rp.a_tilde[static_cast<std::size_t>(jt) * M * L];
      for (int k = 0; k < M; ++k) {
        const double lf = comp_log(fm, fpre, k, data.prev.fwd[i][jt]);
        for (int l = 0; l < L; ++l) {
          const double lr = comp_log(rm, rpre, l, data.prev.rev[i][jt]);
          if (at[k * L + l] > 0.0) q += at[k * L + l] * (lf + lr);
        }
      }
    }
  }
  q -= 2.0 * n * p * std::log(candidate.clock.skew);
  return q;
}

namespace {

int count_frozen(const std::vector<std::vector<std::uint8_t>>& flags) {
  int c = 0;
  for (const auto& v : flags) {
    for (auto f : v) c += f;
  }
  return c;
}

}  // namespace

SageResult run_sage(const TwoWayData& data, const SageState& init, const SageConfig& cfg) {
  data.validate();
  init.validate();
  if (static_cast<int>(init.det_delay.size()) != data.num_paths()) {
    throw std::invalid_argument("state/path count mismatch");
  }

  SageResult out;
  out.state = init;
  SageState& s = out.state;

  double ll_prev = incomplete_log_likelihood(s, data);
  SageTraceRow row{0, ll_prev, s.clock.skew, s.clock.offset, s.asym_prob};
  out.trace.push_back(row);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    // steps 1-2
    Responsibilities resp = e_step(s, data);

    // steps 3-4
    MixingUpdate mix = update_mixing(resp, data);
    s.asym_prob = mix.pi;
    for (int i = 0; i < s.num_paths(); ++i) {
      s.fwd_mix[i].weights = mix.alpha[i];
      s.rev_mix[i].weights = mix.beta[i];
    }
    resp = e_step(s, data);

    // steps 5-6
    MeanUpdate means = update_means(resp, s, data, cfg);
    out.frozen_events += count_frozen(means.frozen_fwd) + count_frozen(means.frozen_rev);
    for (int i = 0; i < s.num_paths(); ++i) {
      s.fwd_mix[i].means = means.mu_fwd[i];
      s.rev_mix[i].means = means.mu_rev[i];
    }
    resp = e_step(s, data);

    // steps 7-8
    VarianceUpdate vars = update_variances(resp, s, data, cfg);
    out.frozen_events += count_frozen(vars.frozen_fwd) + count_frozen(vars.frozen_rev);
    for (int i = 0; i < s.num_paths(); ++i) {
      for (int k = 0; k < s.fwd_mix[i].size(); ++k) {
        s.fwd_mix[i].stds[k] = std::sqrt(vars.var_fwd[i][k]);
      }
      for (int l = 0; l < s.rev_mix[i].size(); ++l) {
        s.rev_mix[i].stds[l] = std::sqrt(vars.var_rev[i][l]);
      }
    }
    resp = e_step(s, data);

    // steps 9-10
    PathDelayUpdate dd = update_path_delays(resp, s, data, cfg);
    for (auto f : dd.frozen) out.frozen_events += f;
    s.det_delay = dd.d;
    resp = e_step(s, data);

    // steps 11-12
    AsymmetryUpdate tt = update_asymmetries(resp, s, data, cfg);
    for (auto f : tt.frozen) out.frozen_events += f;
    s.asymmetry = tt.tau;
    resp = e_step(s, data);

    // steps 13-14
    s.clock.offset = update_offset(resp, s, data);
    resp = e_step(s, data);

    // steps 15-16
    SkewUpdate sk = update_skew(resp, s, data, cfg);
    if (sk.used_fallback) ++out.skew_fallbacks;
    s.clock.skew = sk.phi;
    if (!(s.clock.skew > 0.0)) {
      throw sage_error("skew update produced a non-positive estimate");
    }

    const double ll = incomplete_log_likelihood(s, data);
    if (ll + cfg.ll_decrease_slack < ll_prev) {
      throw sage_error("incomplete log-likelihood decreased by " + std::to_string(ll_prev - ll) +
                       " at iteration " + std::to_string(it));
    }
    out.iterations = it;
    row = {it, ll, s.clock.skew, s.clock.offset, s.asym_prob};
    out.trace.push_back(row);

    const double diff = std::fabs(ll - ll_prev);
    if (diff < cfg.tol_abs && diff <= cfg.tol_rel * std::fabs(ll)) {
      out.converged = true;
      break;
    }
    ll_prev = ll;
  }
  return out;
}

std::vector<std::uint8_t> classify_paths(const SageState& state) {
  std::vector<std::uint8_t> eta(state.asym_prob.size());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    eta[i] = state.asym_prob[i] >= 0.5 ? 1 : 0;
  }
  return eta;
}

}  // namespace ptpsync
