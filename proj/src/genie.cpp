#include "ptpsync/genie.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ptpsync {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Uniform-bin log-density lattice in direct orientation (mirroring resolved).
struct LatticePdf {
  double lo = 0.0;
  double h = 0.0;
  std::vector<double> logdens;

  double hi() const { return lo + h * static_cast<double>(logdens.size()); }
  int bins() const { return static_cast<int>(logdens.size()); }
  double bin_log(long long m) const {
    return (m >= 0 && m < bins()) ? logdens[static_cast<std::size_t>(m)] : kNegInf;
  }
};

LatticePdf make_lattice(const DelayPdf& pdf) {
  const EmpiricalPdf& e = pdf.empirical();
  LatticePdf out;
  out.h = e.bin_width();
  const int nb = e.bins();
  out.logdens.resize(nb);
  if (pdf.empirical_mirrored()) {
    out.lo = -e.support_hi();
    for (int b = 0; b < nb; ++b) {
      const double d = e.densities[nb - 1 - b];
      out.logdens[b] = d > 0.0 ? std::log(d) : kNegInf;
    }
  } else {
    out.lo = e.support_lo();
    for (int b = 0; b < nb; ++b) {
      out.logdens[b] = e.densities[b] > 0.0 ? std::log(e.densities[b]) : kNegInf;
    }
  }
  return out;
}

// Piecewise-constant L(u) = sum_j log f(shift_j - u) on [qlo, qhi], built from
// the bin-crossing events of every sample and evaluated at ascending queries.
class StepLogProduct {
 public:
  void build(std::span<const double> shifts, const LatticePdf& pdf, double qlo, double qhi) {
    qlo_ = qlo;
    qhi_ = qhi;
    events_.clear();
    sum0_ = 0.0;
    bad0_ = 0;
    if (!(qhi > qlo)) {
      empty_ = true;
      return;
    }
    empty_ = false;
    for (double a : shifts) {
      // state at qlo
      const double x0 = a - qlo;
      const long long b0 = (x0 >= pdf.lo && x0 < pdf.hi())
                               ? static_cast<long long>((x0 - pdf.lo) / pdf.h)
                               : -1;
      const double l0 = b0 >= 0 ? pdf.bin_log(b0) : kNegInf;
      if (l0 == kNegInf) {
        ++bad0_;
      } else {
        sum0_ += l0;
      }
      // crossings at u = a - (lo + m*h) inside (qlo, qhi]
      const long long m_min =
          static_cast<long long>(std::ceil((a - qhi - pdf.lo) / pdf.h));
      long long m_max = static_cast<long long>(std::ceil((a - qlo - pdf.lo) / pdf.h)) - 1;
      const long long lo_m = std::max<long long>(m_min, 0);
      const long long hi_m = std::min<long long>(m_max, pdf.bins());
      for (long long m = lo_m; m <= hi_m; ++m) {
        const double u = a - (pdf.lo + static_cast<double>(m) * pdf.h);
        if (!(u > qlo) || u > qhi) continue;
        events_.push_back(Event{u, pdf.bin_log(m), pdf.bin_log(m - 1)});
      }
    }
    std::sort(events_.begin(), events_.end(),
              [](const Event& x, const Event& y) { return x.u < y.u; });
    breaks_.resize(events_.size());
    sum_after_.resize(events_.size());
    bad_after_.resize(events_.size());
    double sum = sum0_;
    int bad = bad0_;
    for (std::size_t t = 0; t < events_.size(); ++t) {
      const Event& ev = events_[t];
      if (ev.old_val == kNegInf) {
        --bad;
      } else {
        sum -= ev.old_val;
      }
      if (ev.new_val == kNegInf) {
        ++bad;
      } else {
        sum += ev.new_val;
      }
      breaks_[t] = ev.u;
      sum_after_[t] = sum;
      bad_after_[t] = bad;
    }
  }

  struct Cursor {
    std::size_t pos = 0;
  };

  // u must be non-decreasing across calls with the same cursor.
  double eval(Cursor& c, double u) const {
    if (empty_ || u < qlo_ || u > qhi_) return kNegInf;
    while (c.pos < breaks_.size() && breaks_[c.pos] < u) ++c.pos;
    if (c.pos == 0) return bad0_ > 0 ? kNegInf : sum0_;
    return bad_after_[c.pos - 1] > 0 ? kNegInf : sum_after_[c.pos - 1];
  }

 private:
  struct Event {
    double u;
    double old_val;
    double new_val;
  };
  std::vector<Event> events_;
  std::vector<double> breaks_;
  std::vector<double> sum_after_;
  std::vector<int> bad_after_;
  double qlo_ = 0.0, qhi_ = 0.0, sum0_ = 0.0;
  int bad0_ = 0;
  bool empty_ = true;
};

// Streaming log-domain accumulation of the three ratio sums plus the interior
// mass, with one running max-shift shared by all of them.
struct StreamSums {
  double max_log = kNegInf;
  double den = 0.0, num_delta = 0.0, num_phi = 0.0, den_int = 0.0;

  void add(double logw, double logw_int, double delta, double phi, bool phidelta_interior) {
    if (logw == kNegInf) return;
    if (logw > max_log) {
      const double r = max_log == kNegInf ? 0.0 : std::exp(max_log - logw);
      den *= r;
      num_delta *= r;
      num_phi *= r;
      den_int *= r;
      max_log = logw;
    }
    const double w = std::exp(logw - max_log);
    den += w;
    num_delta += w * delta;
    num_phi += w * phi;
    if (phidelta_interior && logw_int != kNegInf) {
      den_int += std::exp(logw_int - max_log);
    }
  }
};

struct PathSum {
  double log_all = kNegInf;
  double log_interior = kNegInf;
};

// --- generic (any pdf kind) path/cell evaluation; exhaustive over the grid ---

PathSum generic_path_sum(const PathRecords& recs, const DelayPdf& f1, const DelayPdf& f2,
                         bool asym, double phi, double delta, const IntegrationGrid& g) {
  const int G = g.lin_bins();
  const int P = static_cast<int>(recs.size());
  double vmax = kNegInf;
  auto fwd_base = [&](const ExchangeRecord& r) { return (r.t2 - delta) / phi - r.t1; };
  auto rev_base = [&](const ExchangeRecord& r) { return r.t4 + (delta - r.t3) / phi; };
  std::vector<double> fb(P), rb(P);
  for (int j = 0; j < P; ++j) {
    fb[j] = fwd_base(recs[j]);
    rb[j] = rev_base(recs[j]);
  }
  double sum_all = 0.0, sum_int = 0.0;
  if (!asym) {
    std::vector<double> vals(G, kNegInf);
    for (int a = 0; a < G; ++a) {
      const double d = g.lin_at(a);
      double v = 0.0;
      for (int j = 0; j < P && v != kNegInf; ++j) {
        const double l = f1.log_density(fb[j] - d) + f2.log_density(rb[j] - d);
        v = l == kNegInf ? kNegInf : v + l;
      }
      vals[a] = v;
      vmax = std::max(vmax, v);
    }
    if (vmax == kNegInf) return {};
    for (int a = 0; a < G; ++a) {
      if (vals[a] == kNegInf) continue;
      const double e = std::exp(vals[a] - vmax);
      sum_all += e;
      if (a > 0 && a < G - 1) sum_int += e;
    }
  } else {
    std::vector<double> vals(static_cast<std::size_t>(G) * G, kNegInf);
    for (int a = 0; a < G; ++a) {
      const double d = g.lin_at(a);
      double v2 = 0.0;
      for (int j = 0; j < P && v2 != kNegInf; ++j) {
        const double l = f2.log_density(rb[j] - d);
        v2 = l == kNegInf ? kNegInf : v2 + l;
      }
      if (v2 == kNegInf) continue;
      for (int b = 0; b < G; ++b) {
        const double u = d + g.lin_at(b);
        double v = v2;
        for (int j = 0; j < P && v != kNegInf; ++j) {
          const double l = f1.log_density(fb[j] - u);
          v = l == kNegInf ? kNegInf : v + l;
        }
        vals[static_cast<std::size_t>(a) * G + b] = v;
        vmax = std::max(vmax, v);
      }
    }
    if (vmax == kNegInf) return {};
    for (int a = 0; a < G; ++a) {
      for (int b = 0; b < G; ++b) {
        const double v = vals[static_cast<std::size_t>(a) * G + b];
        if (v == kNegInf) continue;
        const double e = std::exp(v - vmax);
        sum_all += e;
        if (a > 0 && a < G - 1 && b > 0 && b < G - 1) sum_int += e;
      }
    }
  }
  PathSum out;
  out.log_all = sum_all > 0.0 ? vmax + std::log(sum_all) : kNegInf;
  out.log_interior = sum_int > 0.0 ? vmax + std::log(sum_int) : kNegInf;
  return out;
}

// --- fast path for all-empirical pdfs ---

struct PathPhiCtx {
  bool asym = false;
  std::vector<double> A0, B0;
  double minA0 = 0, maxA0 = 0, minB0 = 0, maxB0 = 0;
  double w1lo = 0, w1hi = 0, w2lo = 0, w2hi = 0;
  StepLogProduct L1, L2;
  bool feasible = false;
  double s_lo = 0, s_hi = 0;  // conservative feasible s = delta/phi interval
};

struct FastWorkspace {
  std::vector<PathPhiCtx> paths;
  std::vector<double> cell_vals;
  std::vector<double> f1buf;
  std::vector<double> prefix_all, prefix_int;
  std::vector<double> prescan;
};

// Per-cell evaluation; returns the log posterior weight (without the phi
// power term) for all cells and for interior-(d,tau) cells.
bool fast_cell(const IntegrationGrid& g, std::vector<PathPhiCtx>& paths, double phi, double s,
               FastWorkspace& ws, double& log_all, double& log_int) {
  const int G = g.lin_bins();
  log_all = 0.0;
  log_int = 0.0;
  for (auto& pc : paths) {
    // d cell-index window from the reverse factors, forward for symmetric
    double lo = pc.maxB0 + s - pc.w2hi;
    double hi = pc.minB0 + s - pc.w2lo;
    if (!pc.asym) {
      lo = std::max(lo, pc.maxA0 - s - pc.w1hi);
      hi = std::min(hi, pc.minA0 - s - pc.w1lo);
    }
    int alo = static_cast<int>(std::ceil((lo - g.lin_lo) / g.lin_step - 0.5)) - 1;
    int ahi = static_cast<int>(std::floor((hi - g.lin_lo) / g.lin_step - 0.5)) + 1;
    alo = std::max(alo, 0);
    ahi = std::min(ahi, G - 1);
    if (alo > ahi) return false;

    StepLogProduct::Cursor c1, c2;
    if (!pc.asym) {
      auto& vals = ws.cell_vals;
      vals.clear();
      double vmax = kNegInf;
      for (int a = alo; a <= ahi; ++a) {
        const double d = g.lin_at(a);
        const double v = pc.L1.eval(c1, d + s) + pc.L2.eval(c2, d - s);
        vals.push_back(v);
        if (v > vmax) vmax = v;
      }
      if (vmax == kNegInf) return false;
      double sum_all = 0.0, sum_int = 0.0;
      for (int a = alo; a <= ahi; ++a) {
        const double v = vals[a - alo];
        if (v == kNegInf) continue;
        const double e = std::exp(v - vmax);
        sum_all += e;
        if (a > 0 && a < G - 1) sum_int += e;
      }
      if (!(sum_all > 0.0)) return false;
      log_all += vmax + std::log(sum_all);
      log_int = (sum_int > 0.0 && log_int != kNegInf) ? log_int + vmax + std::log(sum_int)
                                                      : kNegInf;
    } else {
      // u = d + tau lives on the doubled lattice u(m) = 2*lin_lo + m*step.
      const double u0 = 2.0 * g.lin_lo;
      double ulo = pc.maxA0 - s - pc.w1hi;
      double uhi = pc.minA0 - s - pc.w1lo;
      long long mlo = static_cast<long long>(std::ceil((ulo - u0) / g.lin_step)) - 1;
      long long mhi = static_cast<long long>(std::floor((uhi - u0) / g.lin_step)) + 1;
      mlo = std::max<long long>(mlo, static_cast<long long>(alo) + 1);
      mhi = std::min<long long>(mhi, static_cast<long long>(ahi) + G);
      if (mlo > mhi) return false;
      const int nm = static_cast<int>(mhi - mlo + 1);
      auto& raw = ws.f1buf;
      raw.clear();
      double m1 = kNegInf;
      for (long long m = mlo; m <= mhi; ++m) {
        const double v = pc.L1.eval(c1, u0 + static_cast<double>(m) * g.lin_step + s);
        raw.push_back(v);
        if (v > m1) m1 = v;
      }
      if (m1 == kNegInf) return false;
      auto& pre = ws.prefix_all;
      pre.assign(nm + 1, 0.0);
      for (int t = 0; t < nm; ++t) {
        pre[t + 1] = pre[t] + (raw[t] == kNegInf ? 0.0 : std::exp(raw[t] - m1));
      }
      // window sum of exp(L1 - m1) for m in [a+1+boff, a+G-1-eoff] cap [mlo, mhi]
      auto window = [&](long long wlo, long long whi) -> double {
        wlo = std::max(wlo, mlo);
        whi = std::min(whi, mhi);
        if (wlo > whi) return 0.0;
        return std::max(0.0, pre[whi - mlo + 1] - pre[wlo - mlo]);
      };
      double m2 = kNegInf;
      auto& vals = ws.cell_vals;
      vals.clear();
      for (int a = alo; a <= ahi; ++a) {
        const double v = pc.L2.eval(c2, g.lin_at(a) - s);
        vals.push_back(v);
        if (v > m2) m2 = v;
      }
      if (m2 == kNegInf) return false;
      double sum_all = 0.0, sum_int = 0.0;
      for (int a = alo; a <= ahi; ++a) {
        const double v2 = vals[a - alo];
        if (v2 == kNegInf) continue;
        const double e2 = std::exp(v2 - m2);
        sum_all += e2 * window(a + 1, a + G);
        if (a > 0 && a < G - 1) sum_int += e2 * window(a + 2, a + G - 1);
      }
      if (!(sum_all > 0.0)) return false;
      log_all += m1 + m2 + std::log(sum_all);
      log_int = (sum_int > 0.0 && log_int != kNegInf) ? log_int + m1 + m2 + std::log(sum_int)
                                                      : kNegInf;
    }
  }
  return true;
}

GenieEstimate estimate_core(const GenieInputs& in, bool throw_on_boundary) {
  in.validate();
  const IntegrationGrid& g = in.grid;
  const int n = in.num_paths();
  const int p = static_cast<int>(in.records.front().size());
  const int K = in.num_asymmetric();
  const double expo = 2.0 * n * p - n - K + 3.0;

  bool all_empirical = true;
  for (int i = 0; i < n; ++i) {
    all_empirical = all_empirical && in.fwd_pdf[i].is_empirical() && in.rev_pdf[i].is_empirical();
  }

  StreamSums sums;
  const int Gphi = g.phi_bins();
  const int Gd = g.lin_bins();

  if (!all_empirical) {
    // Exhaustive evaluation; practical for the small grids used with
    // analytic mixtures.
    for (int cp = 0; cp < Gphi; ++cp) {
      const double phi = g.phi_at(cp);
      const double lphi = expo * std::log(phi);
      for (int cd = 0; cd < Gd; ++cd) {
        const double delta = g.lin_at(cd);
        double la = 0.0, li = 0.0;
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) {
          const PathSum ps = generic_path_sum(in.records[i], in.fwd_pdf[i], in.rev_pdf[i],
                                              in.known_eta[i] != 0, phi, delta, g);
          if (ps.log_all == kNegInf) {
            ok = false;
            break;
          }
          la += ps.log_all;
          li = (ps.log_interior == kNegInf || li == kNegInf) ? kNegInf : li + ps.log_interior;
        }
        if (!ok) continue;
        const bool inter = cp > 0 && cp < Gphi - 1 && cd > 0 && cd < Gd - 1;
        sums.add(la - lphi, li == kNegInf ? kNegInf : li - lphi, delta, phi, inter);
      }
    }
  } else {
    FastWorkspace ws;
    ws.paths.resize(n);
    std::vector<LatticePdf> lat_f(n), lat_r(n);
    for (int i = 0; i < n; ++i) {
      lat_f[i] = make_lattice(in.fwd_pdf[i]);
      lat_r[i] = make_lattice(in.rev_pdf[i]);
    }
    const double gc_lo = g.lin_at(0);
    const double gc_hi = g.lin_at(Gd - 1);
    const double pad = 2.0 * g.lin_step;

    for (int cp = 0; cp < Gphi; ++cp) {
      const double phi = g.phi_at(cp);
      const double lphi = expo * std::log(phi);
      bool feasible = true;
      double s_lo = -std::numeric_limits<double>::infinity();
      double s_hi = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n && feasible; ++i) {
        PathPhiCtx& pc = ws.paths[i];
        pc.asym = in.known_eta[i] != 0;
        const auto& recs = in.records[i];
        pc.A0.resize(p);
        pc.B0.resize(p);
        for (int j = 0; j < p; ++j) {
          pc.A0[j] = recs[j].t2 / phi - recs[j].t1;
          pc.B0[j] = recs[j].t4 - recs[j].t3 / phi;
        }
        auto mm1 = std::minmax_element(pc.A0.begin(), pc.A0.end());
        auto mm2 = std::minmax_element(pc.B0.begin(), pc.B0.end());
        pc.minA0 = *mm1.first;
        pc.maxA0 = *mm1.second;
        pc.minB0 = *mm2.first;
        pc.maxB0 = *mm2.second;
        pc.w1lo = in.fwd_pdf[i].support_lo();
        pc.w1hi = in.fwd_pdf[i].support_hi();
        pc.w2lo = in.rev_pdf[i].support_lo();
        pc.w2hi = in.rev_pdf[i].support_hi();
        // spread feasibility at this phi
        if (pc.maxA0 - pc.minA0 > pc.w1hi - pc.w1lo || pc.maxB0 - pc.minB0 > pc.w2hi - pc.w2lo) {
          feasible = false;
          break;
        }
        // conservative s-interval
        double lo_s, hi_s;
        if (!pc.asym) {
          lo_s = 0.5 * (pc.maxA0 - pc.w1hi - pc.minB0 + pc.w2lo);
          hi_s = 0.5 * (pc.minA0 - pc.w1lo - pc.maxB0 + pc.w2hi);
          lo_s = std::max(lo_s, pc.maxA0 - pc.w1hi - gc_hi);
          hi_s = std::min(hi_s, pc.minA0 - pc.w1lo - gc_lo);
        } else {
          lo_s = 0.5 * (pc.maxA0 - pc.w1hi - pc.minB0 + pc.w2lo - gc_hi);
          hi_s = 0.5 * (pc.minA0 - pc.w1lo - pc.maxB0 + pc.w2hi - gc_lo);
          lo_s = std::max(lo_s, pc.maxA0 - pc.w1hi - 2.0 * gc_hi);
          hi_s = std::min(hi_s, pc.minA0 - pc.w1lo - 2.0 * gc_lo);
        }
        lo_s = std::max(lo_s, gc_lo - pc.minB0 + pc.w2lo);
        hi_s = std::min(hi_s, gc_hi - pc.maxB0 + pc.w2hi);
        s_lo = std::max(s_lo, lo_s);
        s_hi = std::min(s_hi, hi_s);
        if (s_lo > s_hi) {
          feasible = false;
          break;
        }
        pc.L1.build(pc.A0, lat_f[i], pc.maxA0 - pc.w1hi - pad, pc.minA0 - pc.w1lo + pad);
        pc.L2.build(pc.B0, lat_r[i], pc.maxB0 - pc.w2hi - pad, pc.minB0 - pc.w2lo + pad);
      }
      if (!feasible) continue;

      int clo = static_cast<int>(std::ceil((phi * s_lo - g.lin_lo) / g.lin_step - 0.5)) - 2;
      int chi = static_cast<int>(std::floor((phi * s_hi - g.lin_lo) / g.lin_step - 0.5)) + 2;
      clo = std::max(clo, 0);
      chi = std::min(chi, Gd - 1);
      if (clo > chi) continue;

      // Stride-8 prescan locates the mass; the exact sweep covers the hull of
      // cells within 46 nats of the slice peak (everything else is below
      // double-precision resolution of the accumulated sums).
      constexpr int kStride = 8;
      constexpr double kDropNats = 46.0;
      ws.prescan.clear();
      double pre_max = kNegInf;
      std::vector<int> pre_cells;
      for (int cd = clo;; cd += kStride) {
        if (cd > chi) cd = chi;
        const double delta = g.lin_at(cd);
        double la, li;
        const bool ok = fast_cell(g, ws.paths, phi, delta / phi, ws, la, li);
        ws.prescan.push_back(ok ? la : kNegInf);
        pre_cells.push_back(cd);
        if (ok && la > pre_max) pre_max = la;
        if (cd == chi) break;
      }
      if (pre_max == kNegInf) continue;
      if (pre_max - lphi < sums.max_log - 120.0) continue;  // slice cannot matter
      int hull_lo = chi, hull_hi = clo;
      for (std::size_t t = 0; t < pre_cells.size(); ++t) {
        if (ws.prescan[t] >= pre_max - kDropNats) {
          hull_lo = std::min(hull_lo, pre_cells[t]);
          hull_hi = std::max(hull_hi, pre_cells[t]);
        }
      }
      hull_lo = std::max(clo, hull_lo - kStride);
      hull_hi = std::min(chi, hull_hi + kStride);

      for (int cd = hull_lo; cd <= hull_hi; ++cd) {
        const double delta = g.lin_at(cd);
        double la, li;
        if (!fast_cell(g, ws.paths, phi, delta / phi, ws, la, li)) continue;
        const bool inter = cp > 0 && cp < Gphi - 1 && cd > 0 && cd < Gd - 1;
        sums.add(la - lphi, li == kNegInf ? kNegInf : li - lphi, delta, phi, inter);
      }
    }
  }

  if (!(sums.den > 0.0)) {
    throw genie_error("no posterior mass on the integration grid; widen the limits");
  }
  GenieEstimate out;
  out.offset = sums.num_delta / sums.den;
  out.skew = sums.num_phi / sums.den;
  out.interior_mass = sums.den_int / sums.den;
  if (throw_on_boundary && out.interior_mass < 1e-3) {
    throw genie_error("grid too small: >= 99.9% of the posterior mass lies on boundary cells");
  }
  return out;
}

}  // namespace

void IntegrationGrid::validate() const {
  if (!(phi_step > 0.0) || !(lin_step > 0.0)) throw std::invalid_argument("grid steps must be positive");
  if (!(phi_hi > phi_lo) || !(lin_hi > lin_lo)) throw std::invalid_argument("grid ranges empty");
  if (!(phi_lo > 0.0)) throw std::invalid_argument("phi range must be positive");
  if (!std::isfinite(phi_hi) || !std::isfinite(lin_hi) || !std::isfinite(phi_lo) ||
      !std::isfinite(lin_lo)) {
    throw std::invalid_argument("grid ranges must be finite");
  }
  if (phi_bins() < 1 || lin_bins() < 1) throw std::invalid_argument("grid has no cells");
}

int GenieInputs::num_asymmetric() const {
  int k = 0;
  for (auto e : known_eta) k += e ? 1 : 0;
  return k;
}

void GenieInputs::validate() const {
  grid.validate();
  const int n = num_paths();
  if (n == 0) throw std::invalid_argument("genie needs at least one path");
  if (static_cast<int>(known_eta.size()) != n || static_cast<int>(fwd_pdf.size()) != n ||
      static_cast<int>(rev_pdf.size()) != n) {
    throw std::invalid_argument("per-path inputs must match the path count");
  }
  const std::size_t p = records.front().size();
  if (p == 0) throw std::invalid_argument("empty records");
  for (const auto& r : records) {
    if (r.size() != p) throw std::invalid_argument("exchange counts differ across paths");
  }
  if (2 * num_asymmetric() >= n) {
    throw std::invalid_argument("genie requires fewer asymmetric paths than N/2");
  }
}

double genie_log_gamma(const GenieInputs& inputs, double phi, double delta,
                       std::span<const double> d, std::span<const double> tau) {
  const int n = inputs.num_paths();
  if (static_cast<int>(d.size()) != n) throw std::invalid_argument("one d per path required");
  double total = 0.0;
  int t = 0;
  for (int i = 0; i < n; ++i) {
    const double shift = inputs.known_eta[i] ? tau[t++] : 0.0;
    for (const ExchangeRecord& r : inputs.records[i]) {
      const double fwd = (r.t2 - delta) / phi - d[i] - shift - r.t1;
      const double rev = r.t4 - d[i] + (delta - r.t3) / phi;
      const double l = inputs.fwd_pdf[i].log_density(fwd) + inputs.rev_pdf[i].log_density(rev);
      if (l == kNegInf) return kNegInf;
      total += l;
    }
  }
  return total;
}

GenieEstimate genie_estimate(const GenieInputs& inputs) { return estimate_core(inputs, true); }

double posterior_mass_diagnostic(const GenieInputs& inputs) {
  return estimate_core(inputs, false).interior_mass;
}

}  // namespace ptpsync
