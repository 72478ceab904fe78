#include "occmob/density.hpp"

#include <cmath>

#include "occmob/common.hpp"

namespace occmob {

namespace {

// (z, x, o) layout with z contiguous
std::size_t zxo(const StateGrid& g, int iz, int ix, int io) {
  return (std::size_t(ix) * g.no + io) * g.nz + iz;
}

// applies the z kernel and a status-specific x kernel to one mass array
Eigen::ArrayXd shock_transition(const Eigen::ArrayXd& mass, const StateGrid& g,
                                const Eigen::MatrixXd& x_kernel) {
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(mass.size());
  // z' spreading: out(z',x,o) = sum_z mass(z,x,o) Pz(z,z'), then x mixing
  Eigen::ArrayXd zspread = Eigen::ArrayXd::Zero(mass.size());
  for (int ix = 0; ix < g.nx; ++ix)
    for (int io = 0; io < g.no; ++io) {
      const std::size_t base = zxo(g, 0, ix, io);
      Eigen::Map<const Eigen::VectorXd> vin(&mass[base], g.nz);
      Eigen::Map<Eigen::VectorXd> vout(&zspread[base], g.nz);
      vout.noalias() = g.z.transition.transpose() * vin;
    }
  for (int ixp = 0; ixp < g.nx; ++ixp)
    for (int io = 0; io < g.no; ++io) {
      const std::size_t bout = zxo(g, 0, ixp, io);
      for (int ix = 0; ix < g.nx; ++ix) {
        const double w = x_kernel(ix, ixp);
        if (w == 0.0) continue;
        const std::size_t bin = zxo(g, 0, ix, io);
        for (int iz = 0; iz < g.nz; ++iz) out[bout + iz] += w * zspread[bin + iz];
      }
    }
  return out;
}

}  // namespace

CrossSection CrossSection::zeros(const StateGrid& grid) {
  CrossSection cs;
  const std::size_t n = std::size_t(grid.nz) * grid.nx * grid.no;
  cs.u_entrant = Eigen::ArrayXd::Zero(n);
  cs.u_experienced = Eigen::ArrayXd::Zero(n);
  cs.e = Eigen::ArrayXd::Zero(n);
  return cs;
}

double CrossSection::unemployment_rate_eue() const {
  const double u = u_experienced.sum();
  const double denom = u + e.sum();
  return denom > 0.0 ? u / denom : 0.0;
}

Eigen::VectorXd CrossSection::occupation_sizes(const StateGrid& grid) const {
  Eigen::VectorXd sizes = Eigen::VectorXd::Zero(grid.no);
  for (int ix = 0; ix < grid.nx; ++ix)
    for (int io = 0; io < grid.no; ++io)
      for (int iz = 0; iz < grid.nz; ++iz) {
        const std::size_t i = zxo(grid, iz, ix, io);
        sizes(io) += u_entrant[i] + u_experienced[i] + e[i];
      }
  return sizes;
}

CrossSection step_density(const CrossSection& cs, int ia_next, const EquilibriumTables& tables,
                          const StateGrid& grid, const ModelParams& params, FlowAudit* audit) {
  const int nz = grid.nz, nx = grid.nx, no = grid.no, na = grid.na;
  const double mu = params.retirement_prob();
  const double mass_in = cs.total_mass();
  const Eigen::VectorXd sizes_in = cs.occupation_sizes(grid);

  // stage s: retirement, entry, z and x shocks
  Eigen::ArrayXd u_ent = (1.0 - mu) * shock_transition(cs.u_entrant, grid, grid.x_unemp.transition);
  Eigen::ArrayXd u_exp =
      (1.0 - mu) * shock_transition(cs.u_experienced, grid, grid.x_unemp.transition);
  Eigen::ArrayXd e_s = (1.0 - mu) * shock_transition(cs.e, grid, grid.x_emp.transition);
  const Eigen::VectorXd psi = params.psi_vector() / params.psi_vector().sum();
  for (int io = 0; io < no; ++io)
    for (int iz = 0; iz < nz; ++iz)
      u_ent[zxo(grid, iz, 0, io)] += mu * mass_in * psi(io) * grid.z.ergodic(iz);

  // stages r/m/p with policies at the new aggregate state
  CrossSection out = CrossSection::zeros(grid);
  Eigen::VectorXd departures = Eigen::VectorXd::Zero(no);       // cross-category draws out
  Eigen::VectorXd cross_arrivals = Eigen::VectorXd::Zero(no);   // cross-category draws in
  Eigen::VectorXd inflow_ent = Eigen::VectorXd::Zero(no);       // all draws arrive at x1
  Eigen::VectorXd inflow_exp = Eigen::VectorXd::Zero(no);

  for (int ix = 0; ix < nx; ++ix)
    for (int io = 0; io < no; ++io) {
      const std::size_t xoa = tables.xoa(ix, io, ia_next, no, na);
      const double draw_prob = tables.draw_prob[xoa];
      for (int iz = 0; iz < nz; ++iz) {
        const std::size_t i = zxo(grid, iz, ix, io);
        const std::size_t gi = grid.idx(iz, ix, io, ia_next);
        const double lam = tables.lambda[gi];
        const double d_prob = tables.separate[gi] != 0 ? 1.0 : params.delta_of(ix);
        const bool rho = tables.reallocate[gi] != 0;

        // employed: separation then production
        const double e_mass = e_s[i];
        out.e[i] += e_mass * (1.0 - d_prob);
        out.u_experienced[i] += e_mass * d_prob;  // newly separated sit out this period

        for (int pass = 0; pass < 2; ++pass) {
          const double u_mass = pass == 0 ? u_ent[i] : u_exp[i];
          if (u_mass == 0.0) continue;
          Eigen::ArrayXd& u_out = pass == 0 ? out.u_entrant : out.u_experienced;
          if (rho) {
            // accepted draws arrive at (x1, z ~ F) in the destination; failures wait
            Eigen::VectorXd& inflow = pass == 0 ? inflow_ent : inflow_exp;
            for (int jo = 0; jo < no; ++jo) {
              const double aj = tables.alpha_draws(Eigen::Index(xoa), jo);
              if (aj <= 0.0) continue;
              inflow(jo) += u_mass * aj;
              if (jo != io) {
                departures(io) += u_mass * aj;
                cross_arrivals(jo) += u_mass * aj;
              }
            }
            u_out[i] += u_mass * (1.0 - draw_prob);
          } else {
            u_out[i] += u_mass * (1.0 - lam);
            out.e[i] += u_mass * lam;
          }
        }
      }
    }

  // reallocation arrivals enter at x1 with z ~ F in the destination category
  for (int jo = 0; jo < no; ++jo)
    for (int iz = 0; iz < nz; ++iz) {
      const std::size_t i = zxo(grid, iz, 0, jo);
      out.u_entrant[i] += inflow_ent(jo) * grid.z.ergodic(iz);
      out.u_experienced[i] += inflow_exp(jo) * grid.z.ergodic(iz);
    }

  const double mass_err = std::abs(out.total_mass() - mass_in);
  if (audit) {
    audit->mass_error = mass_err;
    audit->entrant_contribution = Eigen::VectorXd(no);
    audit->mobility_contribution = cross_arrivals - departures;
    for (int io = 0; io < no; ++io)
      audit->entrant_contribution(io) = mu * (mass_in * psi(io) - sizes_in(io));
  }
  require(mass_err < 1e-9 * std::max(1.0, mass_in), ErrorCode::Numeric,
          "step_density: mass leak " + std::to_string(mass_err));
  return out;
}

CrossSection stationary_density(int ia_fixed, const EquilibriumTables& tables,
                                const StateGrid& grid, const ModelParams& params, double tol,
                                int max_iter, const CrossSection* start) {
  CrossSection cs = CrossSection::zeros(grid);
  if (start && start->e.size() == cs.e.size()) {
    cs = *start;
  } else {
    // start from everyone employed at the ergodic z, x1, initial occupation shares
    Eigen::VectorXd shares = params.init_occ_shares.size() == grid.no
                                 ? params.init_occ_shares
                                 : Eigen::VectorXd::Constant(grid.no, 1.0 / grid.no);
    for (int io = 0; io < grid.no; ++io)
      for (int iz = 0; iz < grid.nz; ++iz)
        cs.e[(std::size_t(0) * grid.no + io) * grid.nz + iz] =
            shares(io) * grid.z.ergodic(iz);
  }

  for (int it = 0; it < max_iter; ++it) {
    CrossSection next = step_density(cs, ia_fixed, tables, grid, params);
    double step = (next.e - cs.e).abs().maxCoeff();
    step = std::max(step, (next.u_experienced - cs.u_experienced).abs().maxCoeff());
    step = std::max(step, (next.u_entrant - cs.u_entrant).abs().maxCoeff());
    cs = next;
    if (step < tol) return cs;
  }
  throw Error(ErrorCode::Numeric, "stationary_density: no convergence");
}

}  // namespace occmob
