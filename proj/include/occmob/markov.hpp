#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

namespace occmob {

// Weekly AR(1) in logs: ln s' = rho ln s + sigma eps.
struct Ar1Spec {
  double rho = 0.0;       // persistence per week, in [0,1)
  double sigma = 0.0;     // innovation s.d. per week
  int n_points = 2;       // grid size
  double coverage = 3.0;  // requested half-width in unconditional s.d. units (metadata;
                          // the Rouwenhorst grid width is sqrt(n-1) s.d. by construction)
  double location_shift = 1.0;  // multiplicative normalization applied to grid levels

  void validate() const;
  double unconditional_sd() const;
};

struct MarkovChain {
  Eigen::VectorXd levels;      // state values, strictly increasing
  bool levels_are_log = false;
  Eigen::MatrixXd transition;  // row-stochastic
  Eigen::VectorXd ergodic;     // stationary distribution (left fixed vector)

  int size() const { return int(levels.size()); }
  // max row-sum deviation from 1
  double row_stochastic_residual() const;
  // left fixed-vector residual ||pi P - pi||_inf
  double ergodic_residual() const;
  // first-order stochastic dominance of rows: row i weakly dominates row j for i > j
  bool rows_fosd_ordered(double tol = 1e-12) const;
};

// Left fixed vector of a row-stochastic matrix via a direct linear solve.
// Throws ErrorCode::Numeric with a diagnostic when the chain is reducible.
Eigen::VectorXd ergodic_distribution(const Eigen::MatrixXd& transition);

// Rouwenhorst discretization. Matches the AR(1) lag-1 autocorrelation exactly
// and the unconditional variance exactly; grid spans +-sqrt(n-1) unconditional
// s.d. in logs. Levels are exp(log grid) * location_shift.
MarkovChain discretize_ar1(const Ar1Spec& spec);

// Human-capital chains. Employed chain moves up one level with weekly
// probability 1/(52*mean_years_to_upgrade), absorbing at the top; unemployed
// chain moves down one level with probability gamma_d, absorbing at the bottom.
std::pair<MarkovChain, MarkovChain> build_hc_chains(const Eigen::VectorXd& x_levels,
                                                    double mean_years_to_upgrade, double gamma_d);

}  // namespace occmob
