#pragma once

#include <Eigen/Dense>

#include "occmob/params.hpp"

namespace occmob {

// Discretized (z, x, o, A) state space with all transition kernels.
// p is a deterministic function of A, so no extra dimension is carried.
struct StateGrid {
  MarkovChain z;        // career-match productivity (levels)
  MarkovChain a;        // aggregate productivity (levels)
  MarkovChain x_emp;    // human capital while employed
  MarkovChain x_unemp;  // human capital while unemployed
  Eigen::VectorXd x_levels;
  Eigen::MatrixXd p_occ;  // [n_occ x n_a] occupation-wide productivity levels
  double z_location_shift = 1.0;  // applied multiplicative normalization
  double x_ss_mean = 1.0;         // steady-state employed mean of x used by the normalization

  int nz = 0, nx = 0, no = 0, na = 0;

  std::size_t size() const { return std::size_t(nz) * nx * no * na; }
  // layout: z contiguous
  std::size_t idx(int iz, int ix, int io, int ia) const {
    return ((std::size_t(ix) * no + io) * na + ia) * nz + iz;
  }
  double output(int iz, int ix, int io, int ia) const {
    return a.levels(ia) * p_occ(io, ia) * x_levels(ix) * z.levels(iz);
  }
};

// Builds chains from params, applies the z normalization (Auto mode picks the
// multiplicative shift so that ergodic E[z] times the steady-state employed
// mean of x equals one) and tabulates p_o(A).
StateGrid build_state_grid(const ModelParams& params);

// Stationary x distribution of the employed lifecycle (upgrades + retirement,
// ignoring unemployment spells); used for the Auto z normalization.
Eigen::VectorXd lifecycle_x_distribution(const ModelParams& params);

}  // namespace occmob
