#pragma once

#include <Eigen/Dense>
#include <functional>

namespace occmob {

// Production for the stationary laboratory: output as a function of (A, z)
// including the optional human-capital multiplier x.
enum class LabProduction {
  Multiplicative,  // y = A * x * z
  Additive,        // y = A + z (x ignored)
};

// Single-occupation stationary environment: z retained with probability gamma,
// redrawn from F otherwise; A held constant.
struct StationaryParams {
  double gamma = 0.95;  // probability z is retained
  double b = 0.4;
  double c = 0.5;
  double k = 1.0;
  double eta = 0.5;
  double beta = 0.99;
  double delta = 0.0;  // proofs set delta = 0; kept configurable
  Eigen::VectorXd z_levels;
  Eigen::VectorXd F;  // iid redraw distribution over z_levels
  double x = 1.0;     // occupation-specific human capital multiplier
  double A = 1.0;
  LabProduction production = LabProduction::Multiplicative;

  double y(double z) const {
    return production == LabProduction::Additive ? A + z : A * x * z;
  }
  void validate() const;
};

struct StationarySolution {
  double R = 0.0;
  double EW = 0.0;   // E_F[W^U]
  double EM = 0.0;   // E_F[M]
  double W_s = 0.0;  // W^U at the separation cutoff
  double z_s = 0.0;  // separation cutoff level (match surplus zero)
  double z_r = 0.0;  // reallocation cutoff level (stay value equals R)
  bool z_s_interior = false;
  bool z_r_interior = false;
  bool all_markets_dead = false;

  // value functions at arbitrary z given the solved aggregates
  std::function<double(double)> W_of_z;
  std::function<double(double)> M_of_z;
  std::function<double(double)> theta_of_z;
};

StationarySolution solve_stationary(const StationaryParams& params, double tol = 1e-12,
                                    int max_iter = 200000);

// Two-sided relative perturbation of one parameter; returns the signed
// responses of W^s - R and z^s - z^r.
struct SignCheck {
  double d_gap = 0.0;       // change in W^s - R
  double d_cutoff_gap = 0.0;  // change in z^s - z^r
  bool interior = false;    // both baselines interior, signs assertable
};

enum class LabParam { C, B, Gamma, X };

SignCheck lemma_sign_check(const StationaryParams& params, LabParam which,
                           double rel_step = 0.01);

// gamma = 1 permanent-z case: reallocation cutoff slopes with respect to A.
struct ReallocSlope {
  double z_r = 0.0;          // cutoff at baseline A
  double slope_closed = 0.0; // closed-form d z_r / d A
  double slope_fd = 0.0;     // central finite difference across two solves
  bool interior = false;
};

// Frictional variant: matching frictions inside occupations, theta from the
// stationary free-entry condition. Frictionless variant: workers paid y(A,z)
// and matched instantly, with the same reallocation frictions.
ReallocSlope realloc_slope(const StationaryParams& params, bool frictional,
                           double fd_step = 1e-4);

// Reallocation cost that places the cutoff at z_r_target (used to compare the
// frictional and frictionless slopes at an identical cutoff).
double matching_cost_for_cutoff(const StationaryParams& params, bool frictional,
                                double z_r_target);

// Stationary theta at (A, z) from the gamma = 1 free-entry condition
// theta^(eta-1) [eta (y - b) - beta (1-eta) theta k] / (1-beta) = k.
double stationary_theta(const StationaryParams& params, double y_value);

}  // namespace occmob
