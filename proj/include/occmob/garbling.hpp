#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace occmob {

// Row-stochastic miscoding matrix with its reversibility certificates.
struct GarblingMatrix {
  Eigen::MatrixXd gamma;
  Eigen::VectorXd c;  // stationary occupation distribution
  std::vector<std::string> labels;

  double detailed_balance_residual = 0.0;  // ||diag(c) Gamma - (diag(c) Gamma)'||_inf
  double min_diagonal = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double square_residual = 0.0;         // ||Gamma Gamma - T_sym||_inf
  double symmetrization_residual = 0.0; // ||B - B'||_inf of the input before projection

  int size() const { return int(gamma.rows()); }
  void validate() const;  // throws when A2/A3 certificates fail
};

struct FlowMatrix {
  Eigen::MatrixXd m;  // counts or masses, flows from row occupation to column occupation
  std::vector<std::string> labels;
};

enum class Symmetrization {
  Uniform,          // average flows c_i T_ij and c_j T_ji with equal weights
  InverseVariance,  // weight by 1/c_i^2, appropriate for uniformly rounded tables
};

// Unique stationary distribution of a row-stochastic matrix (errors on reducible input).
Eigen::VectorXd stationary_occ_dist(const Eigen::MatrixXd& transition);

// Gamma = diag(sqrt(c))^-1 Q Lambda^(1/2) Q' diag(sqrt(c)) from the symmetric
// similarity transform of the stayer transition matrix. Inputs failing exact
// detailed balance are projected first; the residual is recorded.
GarblingMatrix estimate_gamma(const Eigen::MatrixXd& stayer_transition,
                              Symmetrization sym = Symmetrization::InverseVariance,
                              double max_asymmetry = 0.05);

GarblingMatrix estimate_gamma(const FlowMatrix& stayer_flows,
                              Symmetrization sym = Symmetrization::InverseVariance,
                              double max_asymmetry = 0.05);

// Report-only assumption check for a square stochastic matrix.
struct AssumptionReport {
  double min_diagonal = 0.0;
  bool a3_pass = false;  // strict diagonal dominance, all diagonals > 0.5
  double detailed_balance_residual = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  bool eigenvalues_admissible = false;  // real, in (0,1]
};

AssumptionReport validate_assumptions(const Eigen::MatrixXd& m);

// Iterative lower bound on the share of true movers given an observed mobility
// rate and a stayer miscoding probability; converges to (m - e)/(1 - e).
double true_mover_lower_bound(double observed_mobility, double miscoding_prob,
                              int max_iter = 1000, double tol = 1e-12);

struct DegarbleResult {
  FlowMatrix flows;
  double negative_mass_floored = 0.0;  // mass moved by flooring small negative cells
};

// Observed = Gamma' M Gamma; degarble applies the two-sided inverse.
FlowMatrix garble(const FlowMatrix& m, const GarblingMatrix& g);
DegarbleResult degarble(const FlowMatrix& observed, const GarblingMatrix& g);

// O x O x O repeat-flow tensor stored flat with index (i*O + j)*O + k.
struct Tensor3 {
  int n = 0;
  Eigen::VectorXd v;
  double& at(int i, int j, int k) { return v[(std::size_t(i) * n + j) * n + k]; }
  double at(int i, int j, int k) const { return v[(std::size_t(i) * n + j) * n + k]; }
};

// Mode-wise application of Gamma' (garble) / (Gamma')^-1 (degarble) on every
// index; equivalent to the triple-Kronecker operator without materializing it.
Tensor3 garble_repeat(const Tensor3& m, const GarblingMatrix& g);
Tensor3 degarble_repeat(const Tensor3& observed, const GarblingMatrix& g);

// Aggregates a flow matrix through an occupation -> group map (group index per
// occupation; negative drops the occupation).
FlowMatrix aggregate_flows(const FlowMatrix& flows, const std::vector<int>& group_of,
                           const std::vector<std::string>& group_labels);

}  // namespace occmob
