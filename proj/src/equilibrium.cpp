#include "occmob/equilibrium.hpp"

#include <cmath>
#include <limits>

#include "occmob/common.hpp"

namespace occmob {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

Tightness market_tightness(double surplus, double k, double eta) {
  require(k > 0.0, ErrorCode::Config, "market_tightness: k must be > 0");
  require(eta > 0.0 && eta < 1.0, ErrorCode::Config, "market_tightness: eta must lie in (0,1)");
  Tightness t;
  if (!(surplus > 0.0)) return t;  // negative or zero surplus: no entry
  t.theta = std::pow(eta * surplus / k, 1.0 / (1.0 - eta));
  t.q_raw = std::pow(t.theta, eta - 1.0);
  t.q_prob = std::min(t.q_raw, 1.0);
  double lam = std::pow(t.theta, eta);
  t.lambda_clamped = lam > 1.0;
  t.lambda = std::min(lam, 1.0);
  return t;
}

SearchShares search_shares(const Eigen::VectorXd& net_values, const Eigen::VectorXd& alpha_row,
                           double nu) {
  const int n = int(net_values.size());
  require(alpha_row.size() == n, ErrorCode::Config, "search_shares: dimension mismatch");
  require(nu >= 0.0 && nu < 1.0, ErrorCode::Config, "search_shares: nu must lie in [0,1)");
  SearchShares out;
  out.shares = Eigen::VectorXd::Zero(n);

  const double expo = 1.0 / (1.0 - nu);
  double wsum = 0.0;
  for (int j = 0; j < n; ++j) {
    if (net_values(j) > 0.0 && alpha_row(j) > 0.0) {
      out.shares(j) = alpha_row(j) * std::pow(net_values(j), expo);
      wsum += out.shares(j);
    }
  }
  if (wsum > 0.0) {
    out.shares /= wsum;
  } else {
    // nothing worth directing search to: pick the draw-probability maximizer
    out.fallback = true;
    double asum = alpha_row.sum();
    require(asum > 0.0, ErrorCode::Numeric, "search_shares: empty access row");
    out.shares = alpha_row / asum;
  }
  for (int j = 0; j < n; ++j)
    if (out.shares(j) > 0.0 && alpha_row(j) > 0.0)
      out.draw_prob += std::pow(alpha_row(j), 1.0 - nu) * std::pow(out.shares(j), nu);
  return out;
}

namespace {

// E_{omega'} g(omega') with independent kernels: z chain, x chain (employment
// status specific), A chain. In: g over the full grid; out: expectation array.
void expectation(const Eigen::ArrayXd& g, Eigen::ArrayXd& out, const StateGrid& grid,
                 const Eigen::MatrixXd& x_kernel, int threads) {
  const int nz = grid.nz, nx = grid.nx, no = grid.no, na = grid.na;
  Eigen::ArrayXd tmp_a(g.size()), tmp_x(g.size());
  // stage 1: contract over A' -> tmp_a(z', x', o, a)
  const auto& pa = grid.a.transition;
  parallel_for(std::size_t(nx) * no, threads, [&](std::size_t xo) {
    const int ix = int(xo) / no, io = int(xo) % no;
    for (int ia = 0; ia < na; ++ia) {
      std::size_t base_out = grid.idx(0, ix, io, ia);
      for (int iz = 0; iz < nz; ++iz) tmp_a[base_out + iz] = 0.0;
      for (int iap = 0; iap < na; ++iap) {
        const double w = pa(ia, iap);
        if (w == 0.0) continue;
        std::size_t base_in = grid.idx(0, ix, io, iap);
        for (int iz = 0; iz < nz; ++iz) tmp_a[base_out + iz] += w * g[base_in + iz];
      }
    }
  });
  // stage 2: contract over x' -> tmp_x(z', x, o, a)
  parallel_for(std::size_t(nx) * no, threads, [&](std::size_t xo) {
    const int ix = int(xo) / no, io = int(xo) % no;
    for (int ia = 0; ia < na; ++ia) {
      std::size_t base_out = grid.idx(0, ix, io, ia);
      for (int iz = 0; iz < nz; ++iz) tmp_x[base_out + iz] = 0.0;
      for (int ixp = 0; ixp < nx; ++ixp) {
        const double w = x_kernel(ix, ixp);
        if (w == 0.0) continue;
        std::size_t base_in = grid.idx(0, ixp, io, ia);
        for (int iz = 0; iz < nz; ++iz) tmp_x[base_out + iz] += w * tmp_a[base_in + iz];
      }
    }
  });
  // stage 3: contract over z'
  const auto& pz = grid.z.transition;
  parallel_for(std::size_t(nx) * no, threads, [&](std::size_t xo) {
    const int ix = int(xo) / no, io = int(xo) % no;
    for (int ia = 0; ia < na; ++ia) {
      std::size_t base = grid.idx(0, ix, io, ia);
      Eigen::Map<const Eigen::VectorXd> vin(&tmp_x[base], nz);
      Eigen::Map<Eigen::VectorXd> vout(&out[base], nz);
      vout.noalias() = pz * vin;
    }
  });
}

}  // namespace

double bellman_step(const EquilibriumTables& in, EquilibriumTables& out, const StateGrid& grid,
                    const ModelParams& params, int threads, double* delta_min,
                    double* delta_max) {
  const int nz = grid.nz, nx = grid.nx, no = grid.no, na = grid.na;
  const double beta = params.beta();
  const double one_m_eta = 1.0 - params.eta;
  const std::size_t n = grid.size();
  const std::size_t nxoa = std::size_t(nx) * no * na;

  require(in.M.allFinite() && in.W_U.allFinite(), ErrorCode::Numeric,
          "bellman_step: non-finite value function input");

  // continuation payoffs evaluated at next-period states
  Eigen::ArrayXd cv_m(n), cv_u(n), ev(n);
  parallel_for(nxoa, threads, [&](std::size_t xoa) {
    const int ix = int(xoa / (std::size_t(no) * na));
    const int io = int((xoa / na) % no);
    const int ia = int(xoa % na);
    const double delta = params.delta_of(ix);
    const double r_here = in.R[xoa];
    const std::size_t base = grid.idx(0, ix, io, ia);
    for (int iz = 0; iz < nz; ++iz) {
      const std::size_t i = base + iz;
      const double surplus = in.M[i] - in.W_U[i];
      const double pos_surplus = surplus > 0.0 ? surplus : 0.0;
      cv_m[i] = in.W_U[i] + (1.0 - delta) * pos_surplus;
      // lambda(theta) = (eta*S/k)^(eta/(1-eta)) along the free-entry locus
      const double lam =
          pos_surplus > 0.0
              ? std::min(
                    std::pow(params.eta * pos_surplus / params.k, params.eta / (1.0 - params.eta)),
                    1.0)
              : 0.0;
      const double stay = in.W_U[i] + lam * one_m_eta * pos_surplus;
      cv_u[i] = stay > r_here ? stay : r_here;
    }
  });

  // M update: production + discounted expectation under the employed x kernel
  expectation(cv_m, ev, grid, grid.x_emp.transition, threads);
  parallel_for(nxoa, threads, [&](std::size_t xoa) {
    const int ix = int(xoa / (std::size_t(no) * na));
    const int io = int((xoa / na) % no);
    const int ia = int(xoa % na);
    const std::size_t base = grid.idx(0, ix, io, ia);
    for (int iz = 0; iz < nz; ++iz)
      out.M[base + iz] = grid.output(iz, ix, io, ia) + beta * ev[base + iz];
  });

  // W_U update under the unemployed x kernel
  expectation(cv_u, ev, grid, grid.x_unemp.transition, threads);
  parallel_for(nxoa, threads, [&](std::size_t xoa) {
    const int ix = int(xoa / (std::size_t(no) * na));
    const int io = int((xoa / na) % no);
    const int ia = int(xoa % na);
    const std::size_t base = grid.idx(0, ix, io, ia);
    for (int iz = 0; iz < nz; ++iz) out.W_U[base + iz] = params.b + beta * ev[base + iz];
  });

  // R update, at the updated W_U (the operator applies its unemployed-value
  // map inside the reallocation row). Every accepted draw is a different major
  // occupation, so the occupational human capital resets to x1 even when the
  // destination shares the task category. The failed-draw continuation
  // W_hat = b + beta E R keeps R independent of z.
  Eigen::MatrixXd draw_value(no, na);
  for (int io = 0; io < no; ++io)
    for (int ia = 0; ia < na; ++ia) {
      const std::size_t base = grid.idx(0, 0, io, ia);
      double acc = 0.0;
      for (int iz = 0; iz < nz; ++iz) acc += grid.z.ergodic(iz) * out.W_U[base + iz];
      draw_value(io, ia) = acc;
    }
  const auto& pa = grid.a.transition;
  const auto& xu = grid.x_unemp.transition;
  parallel_for(nxoa, threads, [&](std::size_t xoa) {
    const int ix = int(xoa / (std::size_t(no) * na));
    const int io = int((xoa / na) % no);
    const int ia = int(xoa % na);
    double er = 0.0;
    for (int ixp = 0; ixp < nx; ++ixp) {
      const double wx = xu(ix, ixp);
      if (wx == 0.0) continue;
      for (int iap = 0; iap < na; ++iap) {
        const double w = wx * pa(ia, iap);
        if (w != 0.0) er += w * in.R[(std::size_t(ixp) * no + io) * na + iap];
      }
    }
    const double w_hat = params.b + beta * er;
    out.W_hat[xoa] = w_hat;

    // The access row keeps its raw scale: excluding the own category caps the
    // achievable draw probability at (sum of off-diagonal alpha)^(1-nu), which
    // is what makes workers sample about twice per accepted draw.
    const auto& occ = params.occupations[std::size_t(io)];
    Eigen::VectorXd net(no), weights(no);
    for (int jo = 0; jo < no; ++jo) {
      weights(jo) = (params.exclude_own_category && jo == io) ? 0.0 : occ.alpha_row(jo);
      net(jo) = draw_value(jo, ia) - w_hat;
    }
    require(weights.sum() > 0.0, ErrorCode::Config, "bellman_step: empty search set for " + occ.id);
    SearchShares ss = search_shares(net, weights, params.nu);
    double val = 0.0, asum = 0.0;
    for (int jo = 0; jo < no; ++jo) {
      double aj = 0.0;
      if (ss.shares(jo) > 0.0 && weights(jo) > 0.0) {
        aj = std::pow(weights(jo), 1.0 - params.nu) * std::pow(ss.shares(jo), params.nu);
        val += aj * draw_value(jo, ia);
        asum += aj;
      }
      out.alpha_draws(Eigen::Index(xoa), jo) = aj;
    }
    out.R[xoa] = val + (1.0 - asum) * w_hat - params.c;
    out.draw_prob[xoa] = asum;
    out.shares.row(Eigen::Index(xoa)) = ss.shares.transpose();
  });

  double dmax = -std::numeric_limits<double>::infinity();
  double dmin = std::numeric_limits<double>::infinity();
  for (const auto* pair : {&out.M, &out.W_U, &out.R}) (void)pair;
  dmax = std::max({(out.M - in.M).maxCoeff(), (out.W_U - in.W_U).maxCoeff(),
                   (out.R - in.R).maxCoeff()});
  dmin = std::min({(out.M - in.M).minCoeff(), (out.W_U - in.W_U).minCoeff(),
                   (out.R - in.R).minCoeff()});
  if (delta_min) *delta_min = dmin;
  if (delta_max) *delta_max = dmax;
  const double delta = std::max(std::abs(dmin), std::abs(dmax));
  require(std::isfinite(delta), ErrorCode::Numeric, "bellman_step: non-finite update");
  return delta;
}

namespace {

EquilibriumTables make_tables(const StateGrid& grid) {
  EquilibriumTables t;
  const std::size_t n = grid.size();
  const std::size_t nxoa = std::size_t(grid.nx) * grid.no * grid.na;
  t.M = Eigen::ArrayXd::Zero(n);
  t.W_U = Eigen::ArrayXd::Zero(n);
  t.W_E = Eigen::ArrayXd::Zero(n);
  t.theta = Eigen::ArrayXd::Zero(n);
  t.lambda = Eigen::ArrayXd::Zero(n);
  t.wage = Eigen::ArrayXd::Constant(n, kNaN);
  t.R = Eigen::ArrayXd::Zero(nxoa);
  t.W_hat = Eigen::ArrayXd::Zero(nxoa);
  t.shares = Eigen::MatrixXd::Zero(Eigen::Index(nxoa), grid.no);
  t.alpha_draws = Eigen::MatrixXd::Zero(Eigen::Index(nxoa), grid.no);
  t.draw_prob = Eigen::ArrayXd::Zero(nxoa);
  t.separate.assign(n, 0);
  t.reallocate.assign(n, 0);
  t.z_s_idx = Eigen::ArrayXi::Zero(Eigen::Index(nxoa));
  t.z_r_idx = Eigen::ArrayXi::Zero(Eigen::Index(nxoa));
  t.z_s_level = Eigen::ArrayXd::Zero(Eigen::Index(nxoa));
  t.z_r_level = Eigen::ArrayXd::Zero(Eigen::Index(nxoa));
  return t;
}

}  // namespace

EquilibriumTables solve_equilibrium(const ModelParams& params, const StateGrid& grid,
                                    const SolveOptions& opts, SolveDiagnostics* diag) {
  require(opts.tol > 0.0, ErrorCode::Config, "solve_equilibrium: tol must be > 0");
  const double beta = params.beta();
  EquilibriumTables cur = make_tables(grid);
  EquilibriumTables next = make_tables(grid);

  if (opts.warm_start && opts.warm_start->M.size() == Eigen::Index(grid.size())) {
    cur.M = opts.warm_start->M;
    cur.W_U = opts.warm_start->W_U;
    cur.R = opts.warm_start->R;
  } else if (opts.init_from_production) {
    for (int ix = 0; ix < grid.nx; ++ix)
      for (int io = 0; io < grid.no; ++io)
        for (int ia = 0; ia < grid.na; ++ia)
          for (int iz = 0; iz < grid.nz; ++iz)
            cur.M[grid.idx(iz, ix, io, ia)] = grid.output(iz, ix, io, ia) / (1.0 - beta);
    cur.W_U.setConstant(params.b / (1.0 - beta));
  }

  // Plain iteration stops when the remaining fixed-point error
  // beta/(1-beta)*delta is below tol. The accelerated loop applies the
  // McQueen-Porteus midpoint shift (the operator moves every entry by exactly
  // beta*k under a constant shift k) and stops on the bracket width.
  const double stop_delta = opts.tol * (1.0 - beta) / beta;
  SolveDiagnostics local;
  SolveDiagnostics& d = diag ? *diag : local;
  d = SolveDiagnostics{};
  d.tol_delta = stop_delta;

  for (int it = 0; it < opts.max_iter; ++it) {
    double dmin = 0.0, dmax = 0.0;
    double delta = bellman_step(cur, next, grid, params, opts.threads, &dmin, &dmax);
    if (opts.accelerate) {
      const double shift = beta / (1.0 - beta) * 0.5 * (dmin + dmax);
      next.M += shift;
      next.W_U += shift;
      next.R += shift;
      d.last_delta = beta / (1.0 - beta) * 0.5 * (dmax - dmin);
      // the span bound saturates at roundoff on the value scale
      const double scale = std::max({1.0, next.M.abs().maxCoeff(), next.W_U.abs().maxCoeff()});
      const double fp_floor = 64.0 * std::numeric_limits<double>::epsilon() * scale;
      d.converged = d.last_delta < opts.tol || (dmax - dmin) < fp_floor;
    } else {
      d.last_delta = delta;
      d.converged = delta < stop_delta;
    }
    std::swap(cur, next);
    d.delta_trace.push_back(delta);
    d.iterations = it + 1;
    if (d.converged) break;
  }
  require(d.converged, ErrorCode::Numeric,
          "solve_equilibrium: max_iter exhausted, last sup-norm step " +
              std::to_string(d.last_delta) + " vs threshold " + std::to_string(stop_delta));

  finalize_tables(cur, grid, params);
  SolveDiagnostics ids = check_identities(cur, grid, params);
  ids.converged = d.converged;
  ids.iterations = d.iterations;
  ids.last_delta = d.last_delta;
  ids.tol_delta = d.tol_delta;
  ids.delta_trace = std::move(d.delta_trace);
  d = std::move(ids);
  return cur;
}

void finalize_tables(EquilibriumTables& t, const StateGrid& grid, const ModelParams& params) {
  const int nz = grid.nz, nx = grid.nx, no = grid.no, na = grid.na;
  const double one_m_eta = 1.0 - params.eta;

  // refresh the reallocation-stage objects from the converged values (the
  // accelerated solve shifts R after the last sweep stored them)
  {
    const double beta = params.beta();
    Eigen::MatrixXd draw_value(no, na);
    for (int io = 0; io < no; ++io)
      for (int ia = 0; ia < na; ++ia) {
        const std::size_t base = grid.idx(0, 0, io, ia);
        double acc = 0.0;
        for (int iz = 0; iz < nz; ++iz) acc += grid.z.ergodic(iz) * t.W_U[base + iz];
        draw_value(io, ia) = acc;
      }
    for (int ix = 0; ix < nx; ++ix)
      for (int io = 0; io < no; ++io)
        for (int ia = 0; ia < na; ++ia) {
          const std::size_t xoa = t.xoa(ix, io, ia, no, na);
          double er = 0.0;
          for (int ixp = 0; ixp < nx; ++ixp) {
            const double wx = grid.x_unemp.transition(ix, ixp);
            if (wx == 0.0) continue;
            for (int iap = 0; iap < na; ++iap) {
              const double w = wx * grid.a.transition(ia, iap);
              if (w != 0.0) er += w * t.R[(std::size_t(ixp) * no + io) * na + iap];
            }
          }
          const double w_hat = params.b + beta * er;
          t.W_hat[xoa] = w_hat;
          const auto& occ = params.occupations[std::size_t(io)];
          Eigen::VectorXd net(no), weights(no);
          for (int jo = 0; jo < no; ++jo) {
            weights(jo) = (params.exclude_own_category && jo == io) ? 0.0 : occ.alpha_row(jo);
            net(jo) = draw_value(jo, ia) - w_hat;
          }
          SearchShares ss = search_shares(net, weights, params.nu);
          double asum = 0.0;
          for (int jo = 0; jo < no; ++jo) {
            double aj = 0.0;
            if (ss.shares(jo) > 0.0 && weights(jo) > 0.0) {
              aj = std::pow(weights(jo), 1.0 - params.nu) * std::pow(ss.shares(jo), params.nu);
              asum += aj;
            }
            t.alpha_draws(Eigen::Index(xoa), jo) = aj;
          }
          t.draw_prob[xoa] = asum;
          t.shares.row(Eigen::Index(xoa)) = ss.shares.transpose();
        }
  }
  for (int ix = 0; ix < nx; ++ix)
    for (int io = 0; io < no; ++io)
      for (int ia = 0; ia < na; ++ia) {
        const std::size_t xoa = t.xoa(ix, io, ia, no, na);
        for (int iz = 0; iz < nz; ++iz) {
          const std::size_t i = grid.idx(iz, ix, io, ia);
          const double surplus = t.M[i] - t.W_U[i];
          Tightness tg = market_tightness(surplus, params.k, params.eta);
          t.theta[i] = tg.theta;
          t.lambda[i] = tg.lambda;
          t.W_E[i] = t.W_U[i] + (surplus > 0.0 ? one_m_eta * surplus : 0.0);
          t.separate[i] = surplus < 0.0 ? 1 : 0;
          const double stay = t.W_U[i] + tg.lambda * one_m_eta * std::max(surplus, 0.0);
          t.reallocate[i] = t.R[xoa] > stay ? 1 : 0;
        }
      }
  extract_cutoffs(t, grid);
  fill_wages(t, grid, params);
}

void extract_cutoffs(EquilibriumTables& t, const StateGrid& grid) {
  const int nz = grid.nz, nx = grid.nx, no = grid.no, na = grid.na;
  for (int ix = 0; ix < nx; ++ix)
    for (int io = 0; io < no; ++io)
      for (int ia = 0; ia < na; ++ia) {
        const std::size_t xoa = t.xoa(ix, io, ia, no, na);
        const std::size_t base = grid.idx(0, ix, io, ia);

        // z_s: smallest z with M - W_U >= 0; nz flags a dead market
        int is = nz;
        for (int iz = 0; iz < nz; ++iz) {
          if (t.M[base + iz] - t.W_U[base + iz] >= 0.0) {
            is = iz;
            break;
          }
        }
        t.z_s_idx[Eigen::Index(xoa)] = is;
        if (is == nz) {
          t.z_s_level[Eigen::Index(xoa)] = kNaN;
        } else if (is == 0) {
          t.z_s_level[Eigen::Index(xoa)] = grid.z.levels(0);
        } else {
          const double s0 = t.M[base + is - 1] - t.W_U[base + is - 1];
          const double s1 = t.M[base + is] - t.W_U[base + is];
          const double w = s1 == s0 ? 1.0 : -s0 / (s1 - s0);
          t.z_s_level[Eigen::Index(xoa)] =
              grid.z.levels(is - 1) + w * (grid.z.levels(is) - grid.z.levels(is - 1));
        }

        // z_r: smallest z where staying weakly beats reallocating. The stay
        // value includes the job-finding term, matching the policy rho; the
        // two conventions coincide wherever z_r <= z_s since theta = 0 there.
        const double r = t.R[xoa];
        auto stay_gap = [&](int iz) {
          const std::size_t i = base + iz;
          return t.W_U[i] + t.lambda[i] * (t.W_E[i] - t.W_U[i]) - r;
        };
        int ir = nz;
        for (int iz = 0; iz < nz; ++iz) {
          if (stay_gap(iz) >= 0.0) {
            ir = iz;
            break;
          }
        }
        t.z_r_idx[Eigen::Index(xoa)] = ir;
        if (ir == nz) {
          t.z_r_level[Eigen::Index(xoa)] = kNaN;
        } else if (ir == 0) {
          t.z_r_level[Eigen::Index(xoa)] = grid.z.levels(0);
        } else {
          const double g0 = stay_gap(ir - 1);
          const double g1 = stay_gap(ir);
          const double w = g1 == g0 ? 1.0 : -g0 / (g1 - g0);
          t.z_r_level[Eigen::Index(xoa)] =
              grid.z.levels(ir - 1) + w * (grid.z.levels(ir) - grid.z.levels(ir - 1));
        }
      }
}

void fill_wages(EquilibriumTables& t, const StateGrid& grid, const ModelParams& params) {
  const int nz = grid.nz, nx = grid.nx, no = grid.no, na = grid.na;
  const double beta = params.beta();
  const double one_m_eta = 1.0 - params.eta;
  // employed continuation of the worker: W_U' + (1-delta(x'))(1-eta) max(M'-W_U',0)
  Eigen::ArrayXd cont(grid.size()), ev(grid.size());
  for (int ix = 0; ix < nx; ++ix)
    for (int io = 0; io < no; ++io)
      for (int ia = 0; ia < na; ++ia) {
        const double delta = params.delta_of(ix);
        const std::size_t base = grid.idx(0, ix, io, ia);
        for (int iz = 0; iz < nz; ++iz) {
          const std::size_t i = base + iz;
          const double pos = std::max(t.M[i] - t.W_U[i], 0.0);
          cont[i] = t.W_U[i] + (1.0 - delta) * one_m_eta * pos;
        }
      }
  expectation(cont, ev, grid, grid.x_emp.transition, 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (t.M[i] - t.W_U[i] >= 0.0)
      t.wage[i] = t.W_E[i] - beta * ev[i];
    else
      t.wage[i] = kNaN;
  }
}

SolveDiagnostics check_identities(const EquilibriumTables& t, const StateGrid& grid,
                                  const ModelParams& params) {
  SolveDiagnostics d;
  const int nz = grid.nz, nx = grid.nx, no = grid.no, na = grid.na;
  for (int ix = 0; ix < nx; ++ix)
    for (int io = 0; io < no; ++io)
      for (int ia = 0; ia < na; ++ia) {
        const std::size_t xoa = t.xoa(ix, io, ia, no, na);
        const std::size_t base = grid.idx(0, ix, io, ia);
        d.shares_sum_dev =
            std::max(d.shares_sum_dev, std::abs(t.shares.row(Eigen::Index(xoa)).sum() - 1.0));
        d.draw_prob_excess = std::max(d.draw_prob_excess, t.draw_prob[xoa] - 1.0);
        for (int iz = 0; iz < nz; ++iz) {
          const std::size_t i = base + iz;
          const double surplus = t.M[i] - t.W_U[i];
          if (t.theta[i] > 0.0) {
            const double q_raw = std::pow(t.theta[i], params.eta - 1.0);
            d.free_entry_resid =
                std::max(d.free_entry_resid, std::abs(params.k - q_raw * params.eta * surplus));
            d.lambda_delta_max =
                std::max(d.lambda_delta_max, t.lambda[i] + params.delta_of(ix));
            if (std::pow(t.theta[i], params.eta) > 1.0) ++d.lambda_clamp_count;
          }
          if (surplus >= 0.0) {
            d.split_resid = std::max(
                d.split_resid,
                std::abs((t.W_E[i] - t.W_U[i]) - (1.0 - params.eta) * surplus));
          }
          if (iz > 0) {
            if (t.M[i] < t.M[i - 1] - 1e-9) ++d.monotonicity_violations;
            if (t.W_U[i] < t.W_U[i - 1] - 1e-9) ++d.monotonicity_violations;
          }
        }
      }
  return d;
}

}  // namespace occmob
