#include "occmob/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "occmob/common.hpp"

namespace occmob {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool clean(double x) { return std::isfinite(x); }
}  // namespace

TimeSeries fill_gaps(const std::vector<double>& raw) {
  TimeSeries ts;
  ts.v = raw;
  ts.interpolated.assign(raw.size(), 0);
  const int n = int(raw.size());
  int first = -1, last = -1;
  for (int i = 0; i < n; ++i)
    if (clean(raw[std::size_t(i)])) {
      if (first < 0) first = i;
      last = i;
    }
  require(first >= 0, ErrorCode::Numeric, "fill_gaps: series has no valid entries");
  // leading/trailing gaps: hold the nearest value, flagged
  for (int i = 0; i < first; ++i) {
    ts.v[std::size_t(i)] = raw[std::size_t(first)];
    ts.interpolated[std::size_t(i)] = 1;
  }
  for (int i = last + 1; i < n; ++i) {
    ts.v[std::size_t(i)] = raw[std::size_t(last)];
    ts.interpolated[std::size_t(i)] = 1;
  }
  int i = first;
  while (i <= last) {
    if (clean(raw[std::size_t(i)])) {
      ++i;
      continue;
    }
    int j = i;
    while (!clean(raw[std::size_t(j)])) ++j;
    const double lo = ts.v[std::size_t(i - 1)], hi = raw[std::size_t(j)];
    for (int k = i; k < j; ++k) {
      const double w = double(k - i + 1) / double(j - i + 1);
      ts.v[std::size_t(k)] = lo + w * (hi - lo);
      ts.interpolated[std::size_t(k)] = 1;
    }
    i = j;
  }
  ts.transforms = "gaps:linear-interpolated-then-dropped";
  return ts;
}

HpResult hp_filter(const std::vector<double>& series, double lambda) {
  const int n = int(series.size());
  require(n >= 4, ErrorCode::Numeric, "hp_filter: need at least 4 observations");
  for (double v : series)
    require(std::isfinite(v), ErrorCode::Numeric, "hp_filter: interior gaps must be filled first");

  // A = I + lambda D'D is SPD pentadiagonal; factor A = L D L' with bandwidth 2.
  std::vector<double> d0(std::size_t(n), 0.0), d1(std::size_t(n), 0.0), d2(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double a = 1.0;
    if (i >= 2 && i <= n - 3)
      a += 6.0 * lambda;
    else if (i == 1 || i == n - 2)
      a += 5.0 * lambda;
    else
      a += 1.0 * lambda;
    d0[std::size_t(i)] = a;
  }
  for (int i = 0; i + 1 < n; ++i)
    d1[std::size_t(i)] = (i == 0 || i == n - 2) ? -2.0 * lambda : -4.0 * lambda;
  for (int i = 0; i + 2 < n; ++i) d2[std::size_t(i)] = lambda;

  std::vector<double> D(std::size_t(n), 0.0), L1(std::size_t(n), 0.0), L2(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double di = d0[std::size_t(i)];
    if (i >= 1) di -= L1[std::size_t(i - 1)] * L1[std::size_t(i - 1)] * D[std::size_t(i - 1)];
    if (i >= 2) di -= L2[std::size_t(i - 2)] * L2[std::size_t(i - 2)] * D[std::size_t(i - 2)];
    D[std::size_t(i)] = di;
    if (i + 1 < n) {
      double e = d1[std::size_t(i)];
      if (i >= 1) e -= L1[std::size_t(i - 1)] * L2[std::size_t(i - 1)] * D[std::size_t(i - 1)];
      L1[std::size_t(i)] = e / di;
    }
    if (i + 2 < n) L2[std::size_t(i)] = d2[std::size_t(i)] / di;
  }
  // solve L z = y, D w = z, L' x = w
  std::vector<double> z(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double v = series[std::size_t(i)];
    if (i >= 1) v -= L1[std::size_t(i - 1)] * z[std::size_t(i - 1)];
    if (i >= 2) v -= L2[std::size_t(i - 2)] * z[std::size_t(i - 2)];
    z[std::size_t(i)] = v;
  }
  HpResult out;
  out.trend.assign(std::size_t(n), 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double v = z[std::size_t(i)] / D[std::size_t(i)];
    if (i + 1 < n) v -= L1[std::size_t(i)] * out.trend[std::size_t(i + 1)];
    if (i + 2 < n) v -= L2[std::size_t(i)] * out.trend[std::size_t(i + 2)];
    out.trend[std::size_t(i)] = v;
  }
  out.cycle.resize(std::size_t(n));
  for (int i = 0; i < n; ++i) out.cycle[std::size_t(i)] = series[std::size_t(i)] - out.trend[std::size_t(i)];
  return out;
}

std::vector<double> centered_ma(const std::vector<double>& v, int window) {
  require(window >= 1 && window % 2 == 1, ErrorCode::Config, "centered_ma: odd window required");
  const int half = window / 2;
  const int n = int(v.size());
  std::vector<double> out;
  for (int i = half; i < n - half; ++i) {
    double acc = 0.0;
    for (int j = -half; j <= half; ++j) acc += v[std::size_t(i + j)];
    out.push_back(acc / window);
  }
  return out;
}

Eigen::VectorXd ols(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& y) {
  require(regressors.rows() == y.size() && regressors.rows() > regressors.cols(),
          ErrorCode::Numeric, "ols: not enough observations");
  Eigen::MatrixXd x(regressors.rows(), regressors.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(regressors.cols()) = regressors;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  require(qr.rank() == x.cols(), ErrorCode::Numeric, "ols: collinear regressors");
  return qr.solve(y);
}

std::vector<ProfilePoint> mobility_duration_profile(const std::vector<SpellRecord>& spells,
                                                    const std::vector<int>& at_least,
                                                    MoverLevel level, const SpellFilter& filter) {
  std::vector<ProfilePoint> out;
  for (int x : at_least) {
    ProfilePoint p;
    p.at_least_months = x;
    long long movers = 0, all = 0;
    for (const auto& s : spells) {
      if (filter && !filter(s)) continue;
      if (s.duration_months < x) continue;
      ++all;
      const bool mover = level == MoverLevel::Mog ? s.mover_mog() : s.mover_category();
      if (mover) ++movers;
    }
    p.n = all;
    if (all == 0) {
      p.missing = true;  // never zero-fill an empty duration cell
    } else {
      p.share = double(movers) / double(all);
    }
    out.push_back(p);
  }
  return out;
}

MobilityRates gross_net_excess(const Eigen::MatrixXd& category_flows, double total_spells) {
  const int n = int(category_flows.rows());
  require(category_flows.minCoeff() >= 0.0, ErrorCode::Numeric,
          "gross_net_excess: flows must be nonnegative");
  require(total_spells > 0.0, ErrorCode::Numeric, "gross_net_excess: zero spell total");
  MobilityRates r;
  r.gross.resize(n);
  r.net.resize(n);
  Eigen::VectorXd out_flows(n), in_flows(n);
  double total_moves = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = category_flows.row(i).sum();
    double out_i = row - category_flows(i, i);
    double in_i = category_flows.col(i).sum() - category_flows(i, i);
    out_flows(i) = out_i;
    in_flows(i) = in_i;
    total_moves += out_i;
    r.gross(i) = row > 0.0 ? out_i / row : 0.0;
    r.net(i) = row > 0.0 ? (in_i - out_i) / row : 0.0;
  }
  double sum_min = 0.0, sum_absdiff = 0.0;
  for (int i = 0; i < n; ++i) {
    sum_min += std::min(in_flows(i), out_flows(i));
    sum_absdiff += std::abs(in_flows(i) - out_flows(i));
  }
  r.aggregate_gross = total_moves / total_spells;
  r.aggregate_net = 0.5 * sum_absdiff / total_spells;
  r.aggregate_excess = sum_min / total_spells;
  r.identity_gap = std::abs(sum_min + 0.5 * sum_absdiff - total_moves);
  r.spell_count = (long long)(total_spells);
  return r;
}

SurvivalCurve survival_and_hazard(const std::vector<SpellRecord>& spells,
                                  const std::vector<int>& marks, const SpellFilter& filter) {
  SurvivalCurve out;
  out.marks = marks;
  int max_month = 1;
  std::vector<int> durs;
  for (const auto& s : spells) {
    if (filter && !filter(s)) continue;
    durs.push_back(s.duration_months);
    max_month = std::max(max_month, s.duration_months);
  }
  out.n = (long long)durs.size();
  require(out.n > 0, ErrorCode::Numeric, "survival_and_hazard: no spells");
  // exits at month d for a spell of duration d; at risk entering month m are
  // spells with duration >= m
  std::vector<long long> exits(std::size_t(max_month) + 1, 0);
  for (int d : durs) ++exits[std::size_t(d)];
  double surv = 1.0;
  long long at_risk = out.n;
  std::vector<double> s_by_month(std::size_t(max_month) + 1, 1.0);
  for (int m = 1; m <= max_month; ++m) {
    const double h = at_risk > 0 ? double(exits[std::size_t(m)]) / double(at_risk) : 0.0;
    out.hazard.push_back(h);
    surv *= 1.0 - h;
    s_by_month[std::size_t(m)] = surv;
    at_risk -= exits[std::size_t(m)];
  }
  for (int mark : marks)
    out.survival.push_back(mark <= max_month ? s_by_month[std::size_t(mark)]
                                             : s_by_month[std::size_t(max_month)] * 0.0);
  return out;
}

RepeatMobility repeat_mobility(const std::vector<SpellRecord>& spells, int repeat_window_weeks,
                               MoverLevel level) {
  RepeatMobility out;
  auto pairs = repeat_pairs(spells, repeat_window_weeks);
  long long ss = 0, mm = 0;
  for (const auto& pr : pairs) {
    const bool m1 =
        level == MoverLevel::Mog ? pr.first->mover_mog() : pr.first->mover_category();
    const bool m2 =
        level == MoverLevel::Mog ? pr.second->mover_mog() : pr.second->mover_category();
    if (!m1) {
      ++out.pairs_stay;
      if (!m2) ++ss;
    } else {
      ++out.pairs_move;
      if (m2) ++mm;
    }
  }
  out.stay_after_stay = out.pairs_stay > 0 ? double(ss) / double(out.pairs_stay) : kNaN;
  out.move_after_move = out.pairs_move > 0 ? double(mm) / double(out.pairs_move) : kNaN;
  return out;
}

TenureReturns returns_to_tenure(const std::vector<WageSample>& samples) {
  TenureReturns out;
  out.n = (long long)samples.size();
  require(out.n >= 10, ErrorCode::Numeric, "returns_to_tenure: too few wage observations");
  Eigen::MatrixXd x(out.n, 4);
  Eigen::VectorXd y(out.n);
  for (long long i = 0; i < out.n; ++i) {
    const auto& s = samples[std::size_t(i)];
    x(i, 0) = s.occ_tenure_years;
    x(i, 1) = s.occ_tenure_years * s.occ_tenure_years;
    x(i, 2) = s.experience_years;
    x(i, 3) = s.experience_years * s.experience_years;
    y(i) = s.log_wage;
  }
  Eigen::VectorXd beta = ols(x, y);
  out.ret_5yr = beta(1) * 5.0 + beta(2) * 25.0;
  out.ret_10yr = beta(1) * 10.0 + beta(2) * 100.0;
  return out;
}

double mm_ratio(const std::vector<double>& accepted, MinMode mode) {
  require(!accepted.empty(), ErrorCode::Numeric, "mm_ratio: empty set");
  std::vector<double> v = accepted;
  std::sort(v.begin(), v.end());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  double mn = v.front();
  if (mode == MinMode::Percentile1) mn = v[std::size_t(double(v.size() - 1) * 0.01)];
  require(mn > 0.0, ErrorCode::Numeric, "mm_ratio: nonpositive minimum");
  return mean / mn;
}

// --- cyclical machinery ------------------------------------------------------

namespace {

struct CycleStats {
  double sd = kNaN;
  double rho1 = kNaN;
};

// log -> 5Q MA -> HP -> cycle, tracking interpolation-tainted entries
struct CycleSeries {
  std::vector<double> cycle;
  std::vector<char> tainted;
  int offset = 0;  // quarters clipped at each edge by the moving average
};

CycleSeries cycle_of(const std::vector<double>& raw, bool logs, int ma_window, double hp_lambda) {
  std::vector<double> base(raw.size(), kNaN);
  int n_clean = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (clean(raw[i]) && (!logs || raw[i] > 0.0)) {
      base[i] = logs ? std::log(raw[i]) : raw[i];
      ++n_clean;
    }
  }
  if (n_clean < ma_window + 4) {
    // nothing measurable this window: everything tainted, downstream statistics skip it
    CycleSeries empty;
    const std::size_t m = raw.size() > std::size_t(ma_window) ? raw.size() - ma_window + 1 : 1;
    empty.cycle.assign(m, 0.0);
    empty.tainted.assign(m, 1);
    empty.offset = ma_window / 2;
    return empty;
  }
  TimeSeries filled = fill_gaps(base);
  std::vector<double> ma = centered_ma(filled.v, ma_window);
  const int half = ma_window / 2;
  std::vector<char> taint(ma.size(), 0);
  for (std::size_t i = 0; i < ma.size(); ++i)
    for (int j = -half; j <= half; ++j)
      if (filled.interpolated[i + std::size_t(half + j)]) taint[i] = 1;
  HpResult hp = hp_filter(ma, hp_lambda);
  CycleSeries out;
  out.cycle = hp.cycle;
  out.tainted = taint;
  out.offset = half;
  return out;
}

CycleStats stats_of(const CycleSeries& s) {
  CycleStats out;
  std::vector<double> v;
  for (std::size_t i = 0; i < s.cycle.size(); ++i)
    if (!s.tainted[i]) v.push_back(s.cycle[i]);
  if (v.size() < 8) return out;
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= double(v.size() - 1);
  out.sd = std::sqrt(var);
  // lag-1 autocorrelation on consecutive clean pairs
  double num = 0.0, den = 0.0;
  int pairs = 0;
  for (std::size_t i = 1; i < s.cycle.size(); ++i)
    if (!s.tainted[i] && !s.tainted[i - 1]) {
      num += (s.cycle[i] - mean) * (s.cycle[i - 1] - mean);
      ++pairs;
    }
  for (double x : v) den += (x - mean) * (x - mean);
  if (pairs >= 8 && den > 0.0) out.rho1 = num / den * double(v.size()) / double(pairs);
  return out;
}

double corr_of(const CycleSeries& a, const CycleSeries& b) {
  std::vector<double> xa, xb;
  for (std::size_t i = 0; i < a.cycle.size() && i < b.cycle.size(); ++i)
    if (!a.tainted[i] && !b.tainted[i]) {
      xa.push_back(a.cycle[i]);
      xb.push_back(b.cycle[i]);
    }
  if (xa.size() < 8) return kNaN;
  double ma = std::accumulate(xa.begin(), xa.end(), 0.0) / double(xa.size());
  double mb = std::accumulate(xb.begin(), xb.end(), 0.0) / double(xb.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < xa.size(); ++i) {
    sab += (xa[i] - ma) * (xb[i] - mb);
    saa += (xa[i] - ma) * (xa[i] - ma);
    sbb += (xb[i] - mb) * (xb[i] - mb);
  }
  return saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : kNaN;
}

double slope_on(const CycleSeries& y, const CycleSeries& x) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < y.cycle.size() && i < x.cycle.size(); ++i)
    if (!y.tainted[i] && !x.tainted[i]) {
      xs.push_back(x.cycle[i]);
      ys.push_back(y.cycle[i]);
    }
  if (xs.size() < 8) return kNaN;
  Eigen::MatrixXd xm(xs.size(), 1);
  Eigen::VectorXd yv(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xm(Eigen::Index(i), 0) = xs[i];
    yv(Eigen::Index(i)) = ys[i];
  }
  return ols(xm, yv)(1);
}

struct WindowSeries {
  std::vector<double> u, v, theta, s, f, outpw, occm;
  std::vector<double> dur_mover, dur_stayer;     // mean completed durations (months)
  std::vector<std::array<double, 5>> bin_share;  // incomplete-duration shares
  int quarters = 0;
};

int month_to_quarter(int month) { return (4 * month + 2) / 13; }

WindowSeries build_series(const WindowPanel& w, MoverLevel occm_level, const MomentOptions& opt,
                          int n_occ) {
  WindowSeries out;
  const int nq = int(w.qtr_duration_bins.size());
  out.quarters = nq;
  out.u.assign(std::size_t(nq), kNaN);
  out.v.assign(std::size_t(nq), kNaN);
  out.theta.assign(std::size_t(nq), kNaN);
  out.s.assign(std::size_t(nq), kNaN);
  out.f.assign(std::size_t(nq), kNaN);
  out.outpw.assign(std::size_t(nq), kNaN);
  out.occm.assign(std::size_t(nq), kNaN);
  out.dur_mover.assign(std::size_t(nq), kNaN);
  out.dur_stayer.assign(std::size_t(nq), kNaN);
  out.bin_share.assign(std::size_t(nq), {kNaN, kNaN, kNaN, kNaN, kNaN});

  for (int q = 0; q < nq; ++q) {
    double usum = 0.0, esum = 0.0, ysum = 0.0, vsum = 0.0;
    for (int t = 13 * q; t < 13 * (q + 1) && t < w.measure_weeks; ++t) {
      usum += w.u_stock[std::size_t(t)];
      esum += w.e_stock[std::size_t(t)];
      ysum += w.y_sum[std::size_t(t)];
      vsum += w.vacancies[std::size_t(t)];
    }
    if (usum + esum > 0.0) out.u[std::size_t(q)] = usum / (usum + esum);
    if (usum + esum > 0.0) out.v[std::size_t(q)] = vsum / (usum + esum);
    if (usum > 0.0) out.theta[std::size_t(q)] = vsum / usum;
    if (esum > 0.0) out.outpw[std::size_t(q)] = ysum / esum;
    const auto& bins = w.qtr_duration_bins[std::size_t(q)];
    const double tot = double(w.qtr_unemployed_1_18[std::size_t(q)]);
    if (tot > 0.0)
      for (int j = 0; j < 5; ++j) out.bin_share[std::size_t(q)][std::size_t(j)] = bins[std::size_t(j)] / tot;
  }
  // monthly transition probabilities averaged into quarters
  std::vector<double> f_acc(std::size_t(nq), 0.0), f_n(std::size_t(nq), 0.0);
  std::vector<double> s_acc(std::size_t(nq), 0.0), s_n(std::size_t(nq), 0.0);
  for (int m = 0; m + 1 < int(w.months.size()); ++m) {
    const int q = month_to_quarter(m);
    if (q >= nq) break;
    const MonthAgg& mg = w.months[std::size_t(m)];
    if (mg.u_start > 0) {
      f_acc[std::size_t(q)] += double(mg.ue) / double(mg.u_start);
      f_n[std::size_t(q)] += 1.0;
    }
    if (mg.e_start > 0) {
      s_acc[std::size_t(q)] += double(mg.eu) / double(mg.e_start);
      s_n[std::size_t(q)] += 1.0;
    }
  }
  for (int q = 0; q < nq; ++q) {
    if (f_n[std::size_t(q)] > 0.0) out.f[std::size_t(q)] = f_acc[std::size_t(q)] / f_n[std::size_t(q)];
    if (s_n[std::size_t(q)] > 0.0) out.s[std::size_t(q)] = s_acc[std::size_t(q)] / s_n[std::size_t(q)];
  }
  // hires and completed durations by quarter of re-employment
  std::vector<long long> hires(std::size_t(nq), 0);
  std::vector<long long> movers(std::size_t(nq), 0);
  std::vector<double> dmov(std::size_t(nq), 0.0), dstay(std::size_t(nq), 0.0);
  std::vector<long long> nmov(std::size_t(nq), 0), nstay(std::size_t(nq), 0);
  const bool garbled = opt.garble_flows && opt.gamma.has_value() &&
                       occm_level == MoverLevel::Category && opt.gamma->size() == n_occ;
  std::vector<Eigen::MatrixXd> qflows;
  if (garbled) qflows.assign(std::size_t(nq), Eigen::MatrixXd::Zero(n_occ, n_occ));
  for (const auto& sp : w.spells) {
    const int q = (sp.end_week - w.spell_week_offset) / 13;
    if (q < 0 || q >= nq) continue;
    ++hires[std::size_t(q)];
    const bool mover = occm_level == MoverLevel::Mog ? sp.mover_mog() : sp.mover_category();
    if (mover) ++movers[std::size_t(q)];
    if (garbled) qflows[std::size_t(q)](sp.source_occ, sp.dest_occ) += 1.0;
    if (sp.mover_mog()) {
      dmov[std::size_t(q)] += sp.duration_months;
      ++nmov[std::size_t(q)];
    } else {
      dstay[std::size_t(q)] += sp.duration_months;
      ++nstay[std::size_t(q)];
    }
  }
  for (int q = 0; q < nq; ++q) {
    if (hires[std::size_t(q)] > 0) {
      if (garbled) {
        FlowMatrix fm;
        fm.m = qflows[std::size_t(q)];
        FlowMatrix gf = garble(fm, *opt.gamma);
        const double tot = gf.m.sum();
        out.occm[std::size_t(q)] = tot > 0.0 ? (tot - gf.m.diagonal().sum()) / tot : kNaN;
      } else {
        out.occm[std::size_t(q)] = double(movers[std::size_t(q)]) / double(hires[std::size_t(q)]);
      }
    }
    if (nmov[std::size_t(q)] > 0) out.dur_mover[std::size_t(q)] = dmov[std::size_t(q)] / double(nmov[std::size_t(q)]);
    if (nstay[std::size_t(q)] > 0) out.dur_stayer[std::size_t(q)] = dstay[std::size_t(q)] / double(nstay[std::size_t(q)]);
  }
  return out;
}

double mean_ignoring_nan(const std::vector<double>& v) {
  double acc = 0.0;
  int n = 0;
  for (double x : v)
    if (std::isfinite(x)) {
      acc += x;
      ++n;
    }
  return n > 0 ? acc / n : kNaN;
}

}  // namespace

MomentSet compute_moments(const PanelLog& log, const ModelParams& params,
                          const MomentOptions& opt) {
  MomentSet ms;
  const int no = params.n_occupations();
  const int nw = int(log.windows.size());
  require(nw > 0, ErrorCode::Numeric, "compute_moments: empty panel");

  // pooled spells (keep window grouping for repeat pairs)
  std::vector<SpellRecord> spells;
  for (const auto& w : log.windows)
    spells.insert(spells.end(), w.spells.begin(), w.spells.end());

  // --- levels -----------------------------------------------------------------
  {
    double usum = 0.0, esum = 0.0, ysum = 0.0;
    for (const auto& w : log.windows)
      for (int t = 0; t < w.measure_weeks; ++t) {
        usum += w.u_stock[std::size_t(t)];
        esum += w.e_stock[std::size_t(t)];
        ysum += w.y_sum[std::size_t(t)];
      }
    ms.set("mean_u", usum / (usum + esum), (long long)(usum + esum), "weekly stocks");
    ms.set("outpw_mean", esum > 0 ? ysum / esum : kNaN, (long long)esum, "weekly output per worker");
  }

  // --- mobility-duration profiles ----------------------------------------------
  std::vector<int> months12{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  auto set_profile = [&](const std::string& prefix, const std::vector<ProfilePoint>& pf) {
    for (const auto& p : pf) {
      const std::string name = prefix + "_m" + std::to_string(p.at_least_months);
      if (p.missing)
        ms.set_missing(name, "mobility-duration profile");
      else
        ms.set(name, p.share, p.n, "mobility-duration profile");
    }
  };
  set_profile("profile_mog", mobility_duration_profile(spells, months12, MoverLevel::Mog));
  set_profile("profile_cat", mobility_duration_profile(spells, months12, MoverLevel::Category));
  auto young = [](const SpellRecord& s) { return s.young(); };
  auto prime = [](const SpellRecord& s) { return s.prime(); };
  set_profile("profile_mog_young",
              mobility_duration_profile(spells, months12, MoverLevel::Mog, young));
  set_profile("profile_mog_prime",
              mobility_duration_profile(spells, months12, MoverLevel::Mog, prime));
  if (ms.has("profile_mog_m1")) {
    ms.set("gross_mog_mobility", ms.value("profile_mog_m1"), ms.m["profile_mog_m1"].n,
           "share of MOG movers among completed spells");
  }
  if (ms.has("profile_cat_m1"))
    ms.set("gross_task_mobility", ms.value("profile_cat_m1"), ms.m["profile_cat_m1"].n,
           "share of category movers among completed spells");
  if (ms.has("profile_mog_young_m1") && ms.has("profile_mog_prime_m1") &&
      ms.value("profile_mog_prime_m1") > 0.0)
    ms.set("occ_mobility_young_prime",
           ms.value("profile_mog_young_m1") / ms.value("profile_mog_prime_m1"),
           ms.m["profile_mog_young_m1"].n + ms.m["profile_mog_prime_m1"].n,
           "ratio of young to prime mobility");

  // --- durations: survival, shares, ratios ------------------------------------
  if (!spells.empty()) {
    SurvivalCurve sc = survival_and_hazard(spells, {4, 8, 12, 16});
    for (std::size_t i = 0; i < sc.marks.size(); ++i)
      ms.set("survival_" + std::to_string(sc.marks[i]) + "m", sc.survival[i], sc.n,
             "completed-spell survival");
    double dm = 0.0, ds = 0.0;
    long long nm = 0, nst = 0;
    for (const auto& s : spells) {
      if (s.mover_mog()) {
        dm += s.duration_months;
        ++nm;
      } else {
        ds += s.duration_months;
        ++nst;
      }
    }
    if (nm > 0 && nst > 0 && ds > 0.0)
      ms.set("udur_ratio_movers_stayers", (dm / nm) / (ds / nst), nm + nst,
             "mean completed duration ratio");
  }
  {
    // incomplete-duration shares averaged across quarters
    std::array<double, 5> acc{0, 0, 0, 0, 0};
    int nq_used = 0;
    for (const auto& w : log.windows)
      for (std::size_t q = 0; q < w.qtr_duration_bins.size(); ++q) {
        if (w.qtr_unemployed_1_18[q] <= 0) continue;
        ++nq_used;
        for (int j = 0; j < 5; ++j)
          acc[std::size_t(j)] +=
              double(w.qtr_duration_bins[q][std::size_t(j)]) / double(w.qtr_unemployed_1_18[q]);
      }
    const char* names[5] = {"dur_share_1_2", "dur_share_1_4", "dur_share_5_8", "dur_share_9_12",
                            "dur_share_13_18"};
    for (int j = 0; j < 5; ++j) {
      if (nq_used > 0)
        ms.set(names[j], acc[std::size_t(j)] / nq_used, nq_used, "quarter-averaged stock shares");
      else
        ms.set_missing(names[j], "quarter-averaged stock shares");
    }
  }

  // --- repeat mobility ----------------------------------------------------------
  {
    RepeatMobility rm = repeat_mobility(spells, log.config.repeat_window_weeks, MoverLevel::Mog);
    if (rm.pairs_stay > 0)
      ms.set("repeat_stay_after_stay", rm.stay_after_stay, rm.pairs_stay, "spell pairs");
    if (rm.pairs_move > 0)
      ms.set("repeat_move_after_move", rm.move_after_move, rm.pairs_move, "spell pairs");
  }

  // --- separations ---------------------------------------------------------------
  {
    long long ey = 0, sy = 0, ep = 0, sp = 0, er = 0, sr = 0, e_all = 0, s_all = 0;
    for (const auto& w : log.windows)
      for (const auto& mg : w.months) {
        ey += mg.e_young;
        sy += mg.sep_young;
        ep += mg.e_prime;
        sp += mg.sep_prime;
        er += mg.e_recent;
        sr += mg.sep_recent;
        e_all += mg.e_start;
        s_all += mg.eu;
      }
    if (ey > 0 && ep > 0 && sp > 0)
      ms.set("rel_sep_young_prime", (double(sy) / ey) / (double(sp) / ep), ey + ep,
             "monthly separation rates");
    if (er > 0 && e_all > 0 && s_all > 0)
      ms.set("rel_sep_recent_all", (double(sr) / er) / (double(s_all) / e_all), er,
             "monthly separation rates");
    long long emp0 = 0, flagged = 0;
    for (const auto& w : log.windows) {
      emp0 += w.employed_at_start;
      flagged += w.unemployed_within_3y;
    }
    if (emp0 > 0)
      ms.set("prob_unemp_3yr", double(flagged) / double(emp0), emp0,
             "employed at window start with a spell within 3 years");
  }
  {
    // monthly separation hazard in the first year after a hire, by mover status
    double exp_m = 0.0, exp_s = 0.0;
    long long sep_m = 0, sep_s = 0;
    for (const auto& w : log.windows)
      for (const auto& h : w.hires) {
        const int months_obs = std::min(h.employment_weeks / 4, 12);
        const bool separated_in_year = !h.censored && h.employment_weeks < 52;
        if (h.mover_mog) {
          exp_m += months_obs;
          sep_m += separated_in_year ? 1 : 0;
        } else {
          exp_s += months_obs;
          sep_s += separated_in_year ? 1 : 0;
        }
      }
    if (exp_m > 0.0)
      ms.set("sep_hazard_newhire_movers", double(sep_m) / exp_m, (long long)exp_m,
             "monthly hazard, first year");
    if (exp_s > 0.0)
      ms.set("sep_hazard_newhire_stayers", double(sep_s) / exp_s, (long long)exp_s,
             "monthly hazard, first year");
  }

  // --- wages ----------------------------------------------------------------------
  {
    std::vector<WageSample> samples;
    std::vector<double> wages;
    for (const auto& w : log.windows)
      for (const auto& s : w.wage_samples) {
        samples.push_back(s);
        wages.push_back(std::exp(double(s.log_wage)));
      }
    if (samples.size() >= 10) {
      TenureReturns tr = returns_to_tenure(samples);
      ms.set("ret_occ_5yr", tr.ret_5yr, tr.n, "OLS log wage on occupational tenure");
      ms.set("ret_occ_10yr", tr.ret_10yr, tr.n, "OLS log wage on occupational tenure");
      ms.set("mm_ratio", mm_ratio(wages, opt.mm_min_mode), (long long)wages.size(),
             "mean-to-min accepted wage");
    }
  }

  // --- reallocation frictions -------------------------------------------------------
  {
    double att = 0.0, suc = 0.0;
    for (const auto& w : log.windows) {
      att += w.realloc_attempts;
      suc += w.realloc_successes;
    }
    if (suc > 0.0) {
      ms.set("realloc_times_sampled", att / suc, (long long)suc, "attempts per accepted draw");
      ms.set("realloc_avg_cost", params.c * att / suc, (long long)suc,
             "cost paid per accepted draw, weekly output units");
    }
  }

  // --- gross/net/excess and cyclical net mobility ------------------------------------
  auto flows_of = [&](const std::function<bool(const SpellRecord&)>& take) {
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(no, no);
    double total = 0.0;
    for (const auto& s : spells)
      if (!take || take(s)) {
        f(s.source_occ, s.dest_occ) += 1.0;
        total += 1.0;
      }
    return std::pair<Eigen::MatrixXd, double>(f, total);
  };
  {
    auto [f, total] = flows_of(nullptr);
    if (total > 0.0) {
      MobilityRates mr = gross_net_excess(f, total);
      ms.set("aggregate_net_mobility", mr.aggregate_net, (long long)total, "category flows");
      ms.set("aggregate_excess_mobility", mr.aggregate_excess, (long long)total, "category flows");
      for (int o = 0; o < no; ++o)
        ms.set("net_" + params.occupations[std::size_t(o)].id + "_mean", mr.net(o),
               (long long)total, "per-category net mobility");
    }
  }

  // --- cyclical battery -----------------------------------------------------------------
  std::vector<CycleStats> st_u, st_v, st_th, st_s, st_f, st_out, st_occm;
  std::vector<double> c_uv, c_uf, c_us, c_uoutpw, c_uoccm, etas;
  std::vector<double> el_bins[5], sel_bins[5], sel_mov, sel_stay;
  // recession/expansion tagged spells pooled across windows
  std::vector<SpellRecord> rec_spells, exp_spells;

  for (const auto& w : log.windows) {
    WindowSeries s = build_series(w, opt.occm_level, opt, no);
    if (s.quarters < 24) continue;
    CycleSeries cu = cycle_of(s.u, true, opt.ma_window, opt.hp_lambda);
    CycleSeries cv = cycle_of(s.v, true, opt.ma_window, opt.hp_lambda);
    CycleSeries cth = cycle_of(s.theta, true, opt.ma_window, opt.hp_lambda);
    CycleSeries cs = cycle_of(s.s, true, opt.ma_window, opt.hp_lambda);
    CycleSeries cf = cycle_of(s.f, true, opt.ma_window, opt.hp_lambda);
    CycleSeries cy = cycle_of(s.outpw, true, opt.ma_window, opt.hp_lambda);
    CycleSeries cm = cycle_of(s.occm, true, opt.ma_window, opt.hp_lambda);
    st_u.push_back(stats_of(cu));
    st_v.push_back(stats_of(cv));
    st_th.push_back(stats_of(cth));
    st_s.push_back(stats_of(cs));
    st_f.push_back(stats_of(cf));
    st_out.push_back(stats_of(cy));
    st_occm.push_back(stats_of(cm));
    c_uv.push_back(corr_of(cu, cv));
    c_uf.push_back(corr_of(cu, cf));
    c_us.push_back(corr_of(cu, cs));
    c_uoutpw.push_back(corr_of(cu, cy));
    c_uoccm.push_back(corr_of(cu, cm));

    // matching elasticity from raw logs across quarters
    {
      std::vector<double> lf, lth;
      for (int q = 0; q < s.quarters; ++q)
        if (std::isfinite(s.f[std::size_t(q)]) && s.f[std::size_t(q)] > 0.0 &&
            std::isfinite(s.theta[std::size_t(q)]) && s.theta[std::size_t(q)] > 0.0) {
          lf.push_back(std::log(s.f[std::size_t(q)]));
          lth.push_back(std::log(s.theta[std::size_t(q)]));
        }
      if (lf.size() >= 12) {
        Eigen::MatrixXd xm(lf.size(), 1);
        Eigen::VectorXd yv(lf.size());
        for (std::size_t i = 0; i < lf.size(); ++i) {
          xm(Eigen::Index(i), 0) = lth[i];
          yv(Eigen::Index(i)) = lf[i];
        }
        etas.push_back(ols(xm, yv)(1));
      }
    }

    // duration-share elasticities and mean-duration semi-elasticities
    for (int j = 0; j < 5; ++j) {
      std::vector<double> share(std::size_t(s.quarters));
      for (int q = 0; q < s.quarters; ++q) share[std::size_t(q)] = s.bin_share[std::size_t(q)][std::size_t(j)];
      CycleSeries clog = cycle_of(share, true, opt.ma_window, opt.hp_lambda);
      CycleSeries clev = cycle_of(share, false, opt.ma_window, opt.hp_lambda);
      const double el = slope_on(clog, cu);
      const double sel = slope_on(clev, cu);
      if (std::isfinite(el)) el_bins[j].push_back(el);
      if (std::isfinite(sel)) sel_bins[j].push_back(sel);
    }
    {
      CycleSeries cdm = cycle_of(s.dur_mover, false, opt.ma_window, opt.hp_lambda);
      CycleSeries cds = cycle_of(s.dur_stayer, false, opt.ma_window, opt.hp_lambda);
      const double sm = slope_on(cdm, cu);
      const double ss2 = slope_on(cds, cu);
      if (std::isfinite(sm)) sel_mov.push_back(sm);
      if (std::isfinite(ss2)) sel_stay.push_back(ss2);
    }

    // recession/expansion classification from the HP log u cycle
    {
      std::vector<double> vals;
      for (std::size_t i = 0; i < cu.cycle.size(); ++i)
        if (!cu.tainted[i]) vals.push_back(cu.cycle[i]);
      if (vals.size() >= 12) {
        std::vector<double> sorted = vals;
        std::sort(sorted.begin(), sorted.end());
        double lo_cut, hi_cut;
        if (opt.recession_median_split) {
          lo_cut = sorted[sorted.size() / 2];
          hi_cut = sorted[(2 * sorted.size()) / 3];
        } else {
          lo_cut = sorted[sorted.size() / 3];
          hi_cut = sorted[(2 * sorted.size()) / 3];
        }
        for (const auto& sp : w.spells) {
          const int q = (sp.end_week - w.spell_week_offset) / 13;
          const int qi = q - cu.offset;
          if (qi < 0 || qi >= int(cu.cycle.size()) || cu.tainted[std::size_t(qi)]) continue;
          const double c = cu.cycle[std::size_t(qi)];
          if (c >= hi_cut)
            rec_spells.push_back(sp);  // high unemployment
          else if (c <= lo_cut)
            exp_spells.push_back(sp);
        }
      }
    }
  }

  auto set_stats = [&](const std::string& base, std::vector<CycleStats>& v) {
    std::vector<double> sds, rhos;
    for (const auto& s : v) {
      if (std::isfinite(s.sd)) sds.push_back(s.sd);
      if (std::isfinite(s.rho1)) rhos.push_back(s.rho1);
    }
    if (!sds.empty())
      ms.set("sigma_" + base, mean_ignoring_nan(sds), (long long)sds.size(), "HP cycle sd");
    if (!rhos.empty())
      ms.set("rho1_" + base, mean_ignoring_nan(rhos), (long long)rhos.size(), "HP cycle autocorr");
  };
  set_stats("u", st_u);
  set_stats("v", st_v);
  set_stats("theta", st_th);
  set_stats("s", st_s);
  set_stats("f", st_f);
  set_stats("outpw", st_out);
  set_stats("occm", st_occm);
  auto set_corr = [&](const std::string& name, std::vector<double>& v) {
    double m = mean_ignoring_nan(v);
    if (std::isfinite(m)) ms.set(name, m, (long long)v.size(), "HP cycle correlation");
  };
  set_corr("corr_u_v", c_uv);
  set_corr("corr_u_f", c_uf);
  set_corr("corr_u_s", c_us);
  set_corr("corr_u_outpw", c_uoutpw);
  set_corr("corr_u_occm", c_uoccm);
  if (!etas.empty())
    ms.set("eta_hat", mean_ignoring_nan(etas), (long long)etas.size(),
           "OLS log f on log theta, quarterly");

  const char* bin_names[5] = {"1_2", "1_4", "5_8", "9_12", "ge13"};
  for (int j = 0; j < 5; ++j) {
    if (!el_bins[j].empty())
      ms.set(std::string("elast_share_") + bin_names[j], mean_ignoring_nan(el_bins[j]),
             (long long)el_bins[j].size(), "HP log share on HP log u");
    if (!sel_bins[j].empty())
      ms.set(std::string("semielast_share_") + bin_names[j], mean_ignoring_nan(sel_bins[j]),
             (long long)sel_bins[j].size(), "HP share on HP log u");
  }
  if (!sel_mov.empty())
    ms.set("semielast_dur_movers", mean_ignoring_nan(sel_mov), (long long)sel_mov.size(),
           "HP mean duration on HP log u");
  if (!sel_stay.empty())
    ms.set("semielast_dur_stayers", mean_ignoring_nan(sel_stay), (long long)sel_stay.size(),
           "HP mean duration on HP log u");

  // cyclical net mobility and inflow shifts
  auto net_by_class = [&](const std::vector<SpellRecord>& cls, const std::string& tag) {
    if (cls.empty()) return;
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(no, no);
    for (const auto& s : cls) f(s.source_occ, s.dest_occ) += 1.0;
    const double total = double(cls.size());
    for (int o = 0; o < no; ++o) {
      const double in_o = f.col(o).sum() - f(o, o);
      const double out_o = f.row(o).sum() - f(o, o);
      ms.set("net_" + params.occupations[std::size_t(o)].id + "_" + tag, (in_o - out_o) / total,
             (long long)total, "net mobility by cycle phase");
    }
  };
  net_by_class(rec_spells, "rec");
  net_by_class(exp_spells, "exp");
  if (!rec_spells.empty() && !exp_spells.empty()) {
    auto inflow_share = [&](const std::vector<SpellRecord>& cls, int o) {
      double movers = 0.0, into = 0.0;
      for (const auto& s : cls)
        if (s.mover_category()) {
          movers += 1.0;
          if (s.dest_occ == o) into += 1.0;
        }
      return movers > 0.0 ? into / movers : kNaN;
    };
    for (int o = 0; o < no; ++o) {
      const double d = inflow_share(exp_spells, o) - inflow_share(rec_spells, o);
      if (std::isfinite(d))
        ms.set("delta_inflow_" + params.occupations[std::size_t(o)].id, d,
               (long long)(rec_spells.size() + exp_spells.size()), "exp minus rec inflow share");
    }
    auto prof_rec = mobility_duration_profile(rec_spells, {1, 9}, MoverLevel::Mog);
    auto prof_exp = mobility_duration_profile(exp_spells, {1, 9}, MoverLevel::Mog);
    if (!prof_rec[0].missing) ms.set("profile_mog_m1_rec", prof_rec[0].share, prof_rec[0].n, "cycle split");
    if (!prof_exp[0].missing) ms.set("profile_mog_m1_exp", prof_exp[0].share, prof_exp[0].n, "cycle split");
  }

  return ms;
}

}  // namespace occmob
