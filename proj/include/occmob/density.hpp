#pragma once

#include <Eigen/Dense>

#include "occmob/equilibrium.hpp"
#include "occmob/grids.hpp"

namespace occmob {

// Cross-sectional worker masses over (z, x, o) at the production stage.
// Unemployment is split into labor-market entrants (never employed) and
// experienced workers so that EUE-consistent unemployment is measurable.
struct CrossSection {
  Eigen::ArrayXd u_entrant;
  Eigen::ArrayXd u_experienced;
  Eigen::ArrayXd e;

  static CrossSection zeros(const StateGrid& grid);
  double total_mass() const { return u_entrant.sum() + u_experienced.sum() + e.sum(); }
  double unemployment_rate_eue() const;
  Eigen::VectorXd occupation_sizes(const StateGrid& grid) const;  // u + e per category
};

// Per-step occupation-size decomposition: entry/exit contribution and
// endogenous reallocation contribution add up to the size change exactly.
struct FlowAudit {
  Eigen::VectorXd entrant_contribution;
  Eigen::VectorXd mobility_contribution;
  double mass_error = 0.0;
};

// One period of the worker flow equations: retirement/entry, z and x shocks,
// separation, reallocation with draw probabilities, matching. Policies are
// those of the destination aggregate state.
CrossSection step_density(const CrossSection& cs, int ia_next, const EquilibriumTables& tables,
                          const StateGrid& grid, const ModelParams& params,
                          FlowAudit* audit = nullptr);

// Iterates at a fixed aggregate state until the cross-section is stationary.
CrossSection stationary_density(int ia_fixed, const EquilibriumTables& tables,
                                const StateGrid& grid, const ModelParams& params,
                                double tol = 1e-12, int max_iter = 200000,
                                const CrossSection* start = nullptr);

}  // namespace occmob
