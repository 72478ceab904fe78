#pragma once

#include <Eigen/Dense>
#include <vector>

#include "occmob/grids.hpp"
#include "occmob/params.hpp"

namespace occmob {

// Free-entry tightness of one submarket. q_raw is the power-form filling rate
// theta^(eta-1) entering the entry condition; lambda and q_prob are the
// probabilities used in flows, clamped at 1.
struct Tightness {
  double theta = 0.0;
  double lambda = 0.0;
  double q_raw = 0.0;
  double q_prob = 1.0;
  bool lambda_clamped = false;
};

Tightness market_tightness(double surplus, double k, double eta);

// Optimal search direction over candidate categories. net_values are
// integral W^U(x1, cat) dF minus W_hat for each candidate; weights is the
// matching access row. Returns shares summing to 1 and the implied total
// draw probability sum alpha(s).
struct SearchShares {
  Eigen::VectorXd shares;
  double draw_prob = 0.0;
  bool fallback = false;  // all net values nonpositive; shares = weights renormalized
};

SearchShares search_shares(const Eigen::VectorXd& net_values, const Eigen::VectorXd& alpha_row,
                           double nu);

// Arrays on the (z, x, o, A) grid (flat layout per StateGrid::idx) plus the
// z-independent reallocation objects on (x, o, A).
struct EquilibriumTables {
  Eigen::ArrayXd M;    // joint match value
  Eigen::ArrayXd W_U;  // unemployed worker value
  Eigen::ArrayXd W_E;  // employed worker value (Nash split)
  Eigen::ArrayXd theta;
  Eigen::ArrayXd lambda;
  Eigen::ArrayXd wage;  // NaN where the match is inactive

  // z-independent: [x][o][A] flat, index ix*(no*na) + io*na + ia
  Eigen::ArrayXd R;
  Eigen::ArrayXd W_hat;
  Eigen::MatrixXd shares;       // rows: (x,o,A) flat; cols: destination category
  Eigen::MatrixXd alpha_draws;  // alpha(s*_cat; o) per destination
  Eigen::ArrayXd draw_prob;     // implied total draw probability (row sum of alpha_draws)

  // policies
  std::vector<char> separate;     // endogenous separation d(omega)=1
  std::vector<char> reallocate;   // rho(omega)=1

  // cutoffs per (x,o,A): first-crossing grid index and interpolated level
  Eigen::ArrayXi z_s_idx, z_r_idx;  // nz means never crosses ("market dead" / all reallocate)
  Eigen::ArrayXd z_s_level, z_r_level;  // NaN when flagged

  std::size_t xoa(int ix, int io, int ia, int no, int na) const {
    return (std::size_t(ix) * no + io) * na + ia;
  }
};

struct SolveDiagnostics {
  bool converged = false;
  int iterations = 0;
  double last_delta = 0.0;
  double tol_delta = 0.0;          // stopping threshold on the sup-norm step
  std::vector<double> delta_trace; // sup-norm step per iteration
  // identity residuals at the fixed point
  double free_entry_resid = 0.0;   // |k - q_raw * eta * surplus| where theta > 0
  double split_resid = 0.0;        // |(W_E - W_U) - (1-eta)(M - W_U)| on active matches
  double shares_sum_dev = 0.0;     // |sum shares - 1|
  double draw_prob_excess = 0.0;   // max(sum alpha - 1, 0)
  double lambda_delta_max = 0.0;   // max lambda + delta over active points
  int monotonicity_violations = 0; // strict decreases of M or W_U in z
  int lambda_clamp_count = 0;
};

struct SolveOptions {
  double tol = 1e-7;       // bound on the remaining fixed-point error, value units
  int max_iter = 200000;
  int threads = 1;
  bool init_from_production = false;  // start from y/(1-beta) instead of zeros
  bool accelerate = true;  // McQueen-Porteus midpoint shifts on the common drift
  const EquilibriumTables* warm_start = nullptr;
};

// One application of the contraction operator: updates (M, W_U, R) from the
// previous tables and returns the sup-norm step.
double bellman_step(const EquilibriumTables& in, EquilibriumTables& out, const StateGrid& grid,
                    const ModelParams& params, int threads = 1, double* delta_min = nullptr,
                    double* delta_max = nullptr);

EquilibriumTables solve_equilibrium(const ModelParams& params, const StateGrid& grid,
                                    const SolveOptions& opts, SolveDiagnostics* diag = nullptr);

// Fills theta/lambda/W_E/wage/policies/shares/cutoffs from converged (M, W_U, R).
void finalize_tables(EquilibriumTables& t, const StateGrid& grid, const ModelParams& params);

void extract_cutoffs(EquilibriumTables& t, const StateGrid& grid);

// Wage on active matches from the recursive W_E definition.
void fill_wages(EquilibriumTables& t, const StateGrid& grid, const ModelParams& params);

SolveDiagnostics check_identities(const EquilibriumTables& t, const StateGrid& grid,
                                  const ModelParams& params);

}  // namespace occmob
