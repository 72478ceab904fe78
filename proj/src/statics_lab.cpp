#include "occmob/statics_lab.hpp"

#include <cmath>

#include "occmob/common.hpp"

namespace occmob {

void StationaryParams::validate() const {
  require(gamma > 0.0 && gamma <= 1.0, ErrorCode::Config,
          "StationaryParams: gamma must lie in (0,1]");
  require(beta > 0.0 && beta < 1.0, ErrorCode::Config, "StationaryParams: beta must lie in (0,1)");
  require(eta > 0.0 && eta < 1.0, ErrorCode::Config, "StationaryParams: eta must lie in (0,1)");
  require(k > 0.0 && c >= 0.0, ErrorCode::Config, "StationaryParams: k > 0, c >= 0");
  require(z_levels.size() >= 2 && F.size() == z_levels.size(), ErrorCode::Config,
          "StationaryParams: z grid and F must match");
  require(std::abs(F.sum() - 1.0) < 1e-10 && F.minCoeff() >= 0.0, ErrorCode::Config,
          "StationaryParams: F must be a probability vector");
  for (int i = 1; i < z_levels.size(); ++i)
    require(z_levels(i) > z_levels(i - 1), ErrorCode::Config,
            "StationaryParams: z_levels must be strictly increasing");
}

namespace {

double lambda_of_surplus(double surplus, const StationaryParams& p) {
  if (surplus <= 0.0) return 0.0;
  return std::pow(p.eta * surplus / p.k, p.eta / (1.0 - p.eta));
}

struct Aggregates {
  double EW = 0.0, EM = 0.0, R = 0.0;
};

// Scalar (W, M) fixed point at one z given the aggregates; contraction with
// modulus gamma*beta + (1-gamma) applied through the aggregate terms held fixed.
void values_at(double z, const StationaryParams& p, const Aggregates& ag, double& w_out,
               double& m_out, int max_iter = 100000, double tol = 1e-13) {
  const double y = p.y(z);
  double w = ag.EW, m = ag.EM;
  for (int it = 0; it < max_iter; ++it) {
    const double s = m - w;
    const double pos = s > 0.0 ? s : 0.0;
    const double d = lambda_of_surplus(pos, p) * (1.0 - p.eta) * pos;
    const double cont_u = std::max(ag.R, w + d);
    const double cont_m = w + (1.0 - p.delta) * pos;
    const double w_new = p.gamma * (p.b + p.beta * cont_u) + (1.0 - p.gamma) * ag.EW;
    const double m_new = p.gamma * (y + p.beta * cont_m) + (1.0 - p.gamma) * ag.EM;
    const double step = std::max(std::abs(w_new - w), std::abs(m_new - m));
    w = w_new;
    m = m_new;
    if (step < tol) break;
  }
  w_out = w;
  m_out = m;
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double flo,
              double /*fhi*/, int iters = 200) {
  for (int i = 0; i < iters; ++i) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if ((fm <= 0.0) == (flo <= 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

StationarySolution solve_with_r(const StationaryParams& p, bool r_fixed, double r_value,
                                double tol, int max_iter) {
  const int n = int(p.z_levels.size());
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, p.b / (1.0 - p.beta));
  Eigen::VectorXd m(n);
  for (int i = 0; i < n; ++i) m(i) = p.y(p.z_levels(i)) / (1.0 - p.beta);
  double r = r_fixed ? r_value : -p.c + p.F.dot(w);

  bool converged = false;
  for (int it = 0; it < max_iter; ++it) {
    const double ew = p.F.dot(w);
    const double em = p.F.dot(m);
    double step = 0.0;
    Eigen::VectorXd w_new(n), m_new(n);
    for (int i = 0; i < n; ++i) {
      const double s = m(i) - w(i);
      const double pos = s > 0.0 ? s : 0.0;
      const double d = lambda_of_surplus(pos, p) * (1.0 - p.eta) * pos;
      const double cont_u = std::max(r, w(i) + d);
      const double cont_m = w(i) + (1.0 - p.delta) * pos;
      w_new(i) = p.gamma * (p.b + p.beta * cont_u) + (1.0 - p.gamma) * ew;
      m_new(i) = p.gamma * (p.y(p.z_levels(i)) + p.beta * cont_m) + (1.0 - p.gamma) * em;
      step = std::max(step, std::abs(w_new(i) - w(i)));
      step = std::max(step, std::abs(m_new(i) - m(i)));
    }
    w = w_new;
    m = m_new;
    if (!r_fixed) {
      const double r_new = -p.c + p.F.dot(w);
      step = std::max(step, std::abs(r_new - r));
      r = r_new;
    }
    if (step < tol) {
      converged = true;
      break;
    }
  }
  require(converged, ErrorCode::Numeric, "solve_stationary: value iteration did not converge");

  StationarySolution sol;
  sol.R = r;
  sol.EW = p.F.dot(w);
  sol.EM = p.F.dot(m);

  Aggregates ag{sol.EW, sol.EM, sol.R};
  StationaryParams pc = p;
  sol.W_of_z = [pc, ag](double z) {
    double wv, mv;
    values_at(z, pc, ag, wv, mv);
    return wv;
  };
  sol.M_of_z = [pc, ag](double z) {
    double wv, mv;
    values_at(z, pc, ag, wv, mv);
    return mv;
  };
  sol.theta_of_z = [pc, ag](double z) {
    double wv, mv;
    values_at(z, pc, ag, wv, mv);
    const double s = mv - wv;
    return s > 0.0 ? std::pow(pc.eta * s / pc.k, 1.0 / (1.0 - pc.eta)) : 0.0;
  };

  const double zlo = p.z_levels(0), zhi = p.z_levels(n - 1);
  auto surplus = [&](double z) { return sol.M_of_z(z) - sol.W_of_z(z); };
  auto stay_gap = [&](double z) {
    double wv, mv;
    values_at(z, pc, ag, wv, mv);
    const double pos = std::max(mv - wv, 0.0);
    const double d = lambda_of_surplus(pos, pc) * (1.0 - pc.eta) * pos;
    return wv + d - sol.R;
  };

  const double s_lo = surplus(zlo), s_hi = surplus(zhi);
  if (s_hi < 0.0) {
    sol.all_markets_dead = true;
    sol.z_s = zhi;
    sol.z_s_interior = false;
  } else if (s_lo >= 0.0) {
    sol.z_s = zlo;
    sol.z_s_interior = false;
  } else {
    sol.z_s = bisect(surplus, zlo, zhi, s_lo, s_hi);
    sol.z_s_interior = true;
  }
  sol.W_s = sol.W_of_z(sol.z_s);

  const double g_lo = stay_gap(zlo), g_hi = stay_gap(zhi);
  if (g_lo >= 0.0) {
    sol.z_r = zlo;  // staying weakly preferred everywhere: no reallocation
    sol.z_r_interior = false;
  } else if (g_hi < 0.0) {
    sol.z_r = zhi;  // reallocation preferred everywhere
    sol.z_r_interior = false;
  } else {
    sol.z_r = bisect(stay_gap, zlo, zhi, g_lo, g_hi);
    sol.z_r_interior = true;
  }
  return sol;
}

}  // namespace

StationarySolution solve_stationary(const StationaryParams& params, double tol, int max_iter) {
  params.validate();
  if (params.x != 1.0 && params.production == LabProduction::Multiplicative) {
    // The reallocation draw resets human capital, so R comes from the x = 1 system.
    StationaryParams base = params;
    base.x = 1.0;
    StationarySolution bsol = solve_with_r(base, false, 0.0, tol, max_iter);
    return solve_with_r(params, true, bsol.R, tol, max_iter);
  }
  return solve_with_r(params, false, 0.0, tol, max_iter);
}

namespace {

StationaryParams perturbed(const StationaryParams& p, LabParam which, double factor) {
  StationaryParams q = p;
  switch (which) {
    case LabParam::C: q.c = p.c == 0.0 ? (factor - 1.0) : p.c * factor; break;
    case LabParam::B: q.b = p.b * factor; break;
    case LabParam::Gamma:
      q.gamma = std::min(p.gamma * factor, 1.0);
      break;
    case LabParam::X: q.x = p.x * factor; break;
  }
  return q;
}

}  // namespace

SignCheck lemma_sign_check(const StationaryParams& params, LabParam which, double rel_step) {
  SignCheck out;
  auto eval = [&](double factor) {
    StationarySolution s = solve_stationary(perturbed(params, which, factor));
    return s;
  };
  StationarySolution base = solve_stationary(params);
  StationarySolution up = eval(1.0 + rel_step);
  StationarySolution dn = eval(1.0 - rel_step);
  // Richardson sanity: the half-step difference must agree in sign
  StationarySolution up2 = eval(1.0 + rel_step / 2.0);
  StationarySolution dn2 = eval(1.0 - rel_step / 2.0);

  const double d1 = ((up.W_s - up.R) - (dn.W_s - dn.R)) / 2.0;
  const double d2 = ((up2.W_s - up2.R) - (dn2.W_s - dn2.R));
  out.d_gap = d1;
  out.d_cutoff_gap = ((up.z_s - up.z_r) - (dn.z_s - dn.z_r)) / 2.0;
  out.interior = base.z_s_interior && base.z_r_interior && up.z_s_interior && dn.z_s_interior &&
                 !base.all_markets_dead && (d1 == 0.0 || d1 * d2 > 0.0);
  return out;
}

double stationary_theta(const StationaryParams& p, double y_value) {
  if (y_value <= p.b) return 0.0;
  auto entry_gap = [&](double theta) {
    return std::pow(theta, p.eta - 1.0) *
               (p.eta * (y_value - p.b) - p.beta * (1.0 - p.eta) * theta * p.k) / (1.0 - p.beta) -
           p.k;
  };
  double lo = 1e-14, hi = 1.0;
  while (entry_gap(hi) > 0.0 && hi < 1e8) hi *= 2.0;
  return bisect(entry_gap, lo, hi, entry_gap(lo), entry_gap(hi));
}

namespace {

// gamma = 1 reservation equations, continuous in the candidate cutoff.
double frictional_reservation_gap(const StationaryParams& p, double z_r) {
  const double fac = (1.0 - p.eta) * p.k / p.eta;
  double integral = 0.0;
  const double theta_r = stationary_theta(p, p.y(z_r));
  for (int i = 0; i < p.z_levels.size(); ++i) {
    const double th = stationary_theta(p, p.y(p.z_levels(i)));
    integral += p.F(i) * std::max(th, theta_r);
  }
  return fac * (p.beta * integral - theta_r) - p.c * (1.0 - p.beta);
}

double frictionless_reservation_gap(const StationaryParams& p, double z_r) {
  double integral = 0.0;
  const double y_r = p.y(z_r);
  for (int i = 0; i < p.z_levels.size(); ++i)
    integral += p.F(i) * std::max(p.y(p.z_levels(i)), y_r);
  return p.beta * integral + (p.b - p.c) * (1.0 - p.beta) - y_r;
}

double solve_cutoff(const StationaryParams& p, bool frictional, bool* interior) {
  auto gap = [&](double z) {
    return frictional ? frictional_reservation_gap(p, z) : frictionless_reservation_gap(p, z);
  };
  const double zlo = p.z_levels(0), zhi = p.z_levels(p.z_levels.size() - 1);
  const double glo = gap(zlo), ghi = gap(zhi);
  if (interior) *interior = glo > 0.0 && ghi < 0.0;
  if (glo <= 0.0) return zlo;
  if (ghi >= 0.0) return zhi;
  return bisect(gap, zlo, zhi, glo, ghi);
}

double y_A(const StationaryParams& p, double z) {
  return p.production == LabProduction::Additive ? 1.0 : p.x * z;
}
double y_z(const StationaryParams& p, double z) {
  return p.production == LabProduction::Additive ? 1.0 : p.A * p.x;
  (void)z;
}

}  // namespace

double matching_cost_for_cutoff(const StationaryParams& params, bool frictional,
                                double z_r_target) {
  StationaryParams p = params;
  p.c = 0.0;
  const double gap = frictional ? frictional_reservation_gap(p, z_r_target)
                                : frictionless_reservation_gap(p, z_r_target);
  return gap / (1.0 - p.beta);
}

ReallocSlope realloc_slope(const StationaryParams& params, bool frictional, double fd_step) {
  require(params.gamma == 1.0, ErrorCode::Config, "realloc_slope: permanent-z case needs gamma=1");
  ReallocSlope out;
  out.z_r = solve_cutoff(params, frictional, &out.interior);
  require(out.interior, ErrorCode::Numeric, "realloc_slope: reallocation cutoff at grid corner");

  // closed form
  const int n = int(params.z_levels.size());
  double f_below = 0.0;
  for (int i = 0; i < n; ++i)
    if (params.z_levels(i) < out.z_r) f_below += params.F(i);
  const double ya_r = y_A(params, out.z_r);
  const double yz_r = y_z(params, out.z_r);

  double integral = 0.0;
  if (frictional) {
    auto cs = [&](double z) {
      const double th = stationary_theta(params, params.y(z));
      const double lam = std::pow(th, params.eta);
      return lam / (1.0 - params.beta + params.beta * lam);
    };
    const double cs_r = cs(out.z_r);
    for (int i = 0; i < n; ++i)
      if (params.z_levels(i) >= out.z_r)
        integral += params.F(i) * (cs(params.z_levels(i)) / cs_r) * y_A(params, params.z_levels(i));
  } else {
    for (int i = 0; i < n; ++i)
      if (params.z_levels(i) >= out.z_r) integral += params.F(i) * y_A(params, params.z_levels(i));
  }
  out.slope_closed =
      (params.beta * f_below * ya_r + params.beta * integral - ya_r) / ((1.0 - params.beta * f_below) * yz_r);

  // finite difference across two re-solves, shrinking the step if the cutoff
  // crosses an atom of F
  double h = fd_step * params.A;
  for (int attempt = 0; attempt < 6; ++attempt) {
    StationaryParams up = params, dn = params;
    up.A = params.A + h;
    dn.A = params.A - h;
    bool iu = false, id = false;
    const double zu = solve_cutoff(up, frictional, &iu);
    const double zd = solve_cutoff(dn, frictional, &id);
    double fu = 0.0, fd = 0.0;
    for (int i = 0; i < n; ++i) {
      if (params.z_levels(i) < zu) fu += params.F(i);
      if (params.z_levels(i) < zd) fd += params.F(i);
    }
    if (iu && id && fu == fd) {
      out.slope_fd = (zu - zd) / (2.0 * h);
      return out;
    }
    h /= 10.0;
  }
  require(false, ErrorCode::Numeric, "realloc_slope: finite difference failed to bracket cleanly");
  return out;
}

}  // namespace occmob
