#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "occmob/markov.hpp"

namespace occmob {

// One task-based occupational category.
struct OccupationSpec {
  std::string id;          // NRC / RC / NRM / RM
  double p_bar = 1.0;      // constant productivity level
  double epsilon = 1.0;    // cyclical loading on ln A
  double psi = 0.25;       // entrant probability
  Eigen::VectorXd alpha_row;  // access weights over all categories (incl. own)
};

// p_o(A) = exp(ln p_bar + epsilon ln A)
double occupation_productivity(double a_level, const OccupationSpec& occ);

enum class ZNormMode {
  Auto,      // location shift set so ergodic E[z] * steady-state E[x] = 1
  Explicit,  // use z_proc.location_shift as given
};

// All structural parameters plus numerical settings.
struct ModelParams {
  // preferences / frictions
  double annual_interest = 0.04;
  double working_life_years = 40.0;
  double b = 0.830;       // unemployment flow
  double k = 124.83;      // vacancy cost per period
  double eta = 0.239;     // submarket matching elasticity (worker share = 1 - eta)
  double c = 7.604;       // per-period reallocation cost
  double delta_L = 0.0035;  // exogenous weekly separation, low human capital
  double delta_H = 0.0002;  // exogenous weekly separation, high human capital
  double nu = 0.04;         // search concavity

  // stochastic processes
  Ar1Spec z_proc{0.9983, 0.0072, 51, 3.0, 1.0};
  Ar1Spec a_proc{0.9985, 0.0020, 21, 3.0, 1.0};
  Eigen::VectorXd x_levels;  // {1, x2, x3}
  double mean_years_to_upgrade = 5.0;
  double gamma_d = 0.0032;

  // occupations
  std::vector<OccupationSpec> occupations;
  Eigen::VectorXd init_occ_shares;  // employment-size distribution at simulation start

  ZNormMode z_norm_mode = ZNormMode::Auto;
  bool exclude_own_category = false;  // drop the own-category column from the search set

  // derived weekly rates
  double weekly_interest() const;
  double retirement_prob() const;  // mu = d
  double beta() const;             // (1 - d) / (1 + r)
  double delta_of(int x_index) const { return x_index == 0 ? delta_L : delta_H; }

  int n_occupations() const { return int(occupations.size()); }
  Eigen::VectorXd psi_vector() const;

  void validate() const;

  static ModelParams table2();
};

}  // namespace occmob
