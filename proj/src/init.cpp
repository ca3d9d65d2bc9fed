#include "ptpsync/init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ptpsync {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Sound upper bound on the log-density, used for early abandonment.
double log_density_bound(const DelayPdf& pdf) {
  if (pdf.is_empirical()) {
    double m = 0.0;
    for (double d : pdf.empirical().densities) m = std::max(m, d);
    return m > 0.0 ? std::log(m) : kNegInf;
  }
  const GmmParams& g = pdf.gmm();
  double peak = 0.0;
  for (int k = 0; k < g.size(); ++k) {
    peak += g.weights[k] / (2.5066282746310002 * g.stds[k]);
  }
  return std::log(peak);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

SingleDirectionEstimate single_direction_estimate(std::span<const double> t_send,
                                                  std::span<const double> t_recv,
                                                  const DelayPdf& delay_pdf,
                                                  const IntegrationGrid& grid) {
  grid.validate();
  const int p = static_cast<int>(t_send.size());
  if (p < 2 || t_recv.size() != t_send.size()) {
    throw std::invalid_argument("single-direction estimate needs >= 2 paired timestamps");
  }
  const double wlo = delay_pdf.support_lo();
  const double whi = delay_pdf.support_hi();
  const double lmax = log_density_bound(delay_pdf);
  const double expo = p + 3.0;

  const int Gphi = grid.phi_bins();
  const int Gg = grid.lin_bins();
  const double gc_lo = grid.lin_at(0);
  const double gc_hi = grid.lin_at(Gg - 1);

  double max_log = kNegInf;
  double den = 0.0, num_gamma = 0.0, num_phi = 0.0;
  std::vector<double> a0(p);

  for (int cp = 0; cp < Gphi; ++cp) {
    const double phi = grid.phi_at(cp);
    for (int j = 0; j < p; ++j) a0[j] = t_recv[j] / phi - t_send[j];
    const auto mm = std::minmax_element(a0.begin(), a0.end());
    if (*mm.second - *mm.first > whi - wlo) continue;  // no gamma can fit every sample
    // gamma/phi must land in [maxA0 - whi, minA0 - wlo]
    const double glo = phi * (*mm.second - whi);
    const double ghi = phi * (*mm.first - wlo);
    if (glo > gc_hi || ghi < gc_lo) continue;
    int clo = static_cast<int>(std::ceil((glo - grid.lin_lo) / grid.lin_step - 0.5)) - 2;
    int chi = static_cast<int>(std::floor((ghi - grid.lin_lo) / grid.lin_step - 0.5)) + 2;
    clo = std::max(clo, 0);
    chi = std::min(chi, Gg - 1);
    const double lphi = expo * std::log(phi);

    for (int cg = clo; cg <= chi; ++cg) {
      const double gamma = grid.lin_at(cg);
      const double shift = gamma / phi;
      // Cells provably more than 60 nats below the running peak cannot move
      // the double-precision sums; abandon them as soon as the partial
      // log-product plus the best-possible remainder falls under that bar.
      const double bar = max_log == kNegInf ? kNegInf : max_log + lphi - 60.0;
      double v = 0.0;
      bool dropped = false;
      for (int j = 0; j < p; ++j) {
        v += delay_pdf.log_density(a0[j] - shift);
        if (v == kNegInf || (bar != kNegInf && v + (p - 1 - j) * lmax < bar)) {
          dropped = true;
          break;
        }
      }
      if (dropped) continue;
      const double logw = v - lphi;
      if (logw > max_log) {
        const double r = max_log == kNegInf ? 0.0 : std::exp(max_log - logw);
        den *= r;
        num_gamma *= r;
        num_phi *= r;
        max_log = logw;
      }
      const double w = std::exp(logw - max_log);
      den += w;
      num_gamma += w * gamma;
      num_phi += w * phi;
    }
  }

  if (!(den > 0.0)) {
    throw init_error("single-direction posterior has no mass on the grid; widen the limits");
  }
  SingleDirectionEstimate out;
  out.intercept = num_gamma / den;
  out.skew = num_phi / den;
  return out;
}

SageState initialize(const TwoWayData& data, const InitConfig& cfg) {
  data.validate();
  const int n = data.num_paths();
  if (data.prev_exchanges() < 1) {
    throw init_error("initialization needs previous-window residuals (P_t >= 1)");
  }
  if (cfg.fwd_components < 1 || cfg.rev_components < 1) {
    throw std::invalid_argument("component counts must be >= 1");
  }

  SageState s;
  s.det_delay.resize(n);
  s.asymmetry.resize(n);
  s.asym_prob.resize(n);
  s.fwd_mix.resize(n);
  s.rev_mix.resize(n);

  std::vector<double> gamma_hat(n), zeta_hat(n), phi_i(n), delta_i(n);
  std::vector<double> send(data.exchanges_per_path()), recv(data.exchanges_per_path());

  for (int i = 0; i < n; ++i) {
    s.fwd_mix[i] = fit_em(data.prev.fwd[i], cfg.fwd_components, cfg.em).params;
    s.rev_mix[i] = fit_em(data.prev.rev[i], cfg.rev_components, cfg.em).params;

    // forward: t2 = (t1 + w1)*phi + gamma_i
    for (int j = 0; j < data.exchanges_per_path(); ++j) {
      send[j] = data.records[i][j].t1;
      recv[j] = data.records[i][j].t2;
    }
    const auto fwd =
        single_direction_estimate(send, recv, DelayPdf(s.fwd_mix[i]), cfg.grid);
    gamma_hat[i] = fwd.intercept;

    // reverse: t3 = (t4 - w2)*phi + zeta_i, i.e. the same model with -w2
    for (int j = 0; j < data.exchanges_per_path(); ++j) {
      send[j] = data.records[i][j].t4;
      recv[j] = data.records[i][j].t3;
    }
    const auto rev =
        single_direction_estimate(send, recv, DelayPdf(s.rev_mix[i]).mirrored(), cfg.grid);
    zeta_hat[i] = rev.intercept;

    phi_i[i] = 0.5 * (fwd.skew + rev.skew);
    delta_i[i] = 0.5 * (gamma_hat[i] + zeta_hat[i]);
  }

  const double delta0 = median_of(delta_i);
  const double phi0 = std::accumulate(phi_i.begin(), phi_i.end(), 0.0) / n;
  s.clock = {phi0, delta0};

  for (int i = 0; i < n; ++i) {
    const double d_fwd = (gamma_hat[i] - delta0) / phi0;
    const double d_rev = (delta0 - zeta_hat[i]) / phi0;
    const double gap = std::fabs(d_fwd - d_rev);
    double pi = sigmoid((gap - cfg.d_tau) * cfg.kappa);
    pi = std::min(std::max(pi, 1e-15), 1.0 - 1e-15);
    s.asym_prob[i] = pi;
    if (gap <= cfg.d_tau) {
      s.det_delay[i] = 0.5 * (d_fwd + d_rev);
      s.asymmetry[i] = 0.0;
    } else {
      s.det_delay[i] = d_rev;
      s.asymmetry[i] = d_fwd - d_rev;
    }
  }
  s.validate();
  return s;
}

}  // namespace ptpsync
