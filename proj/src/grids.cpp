#include "occmob/grids.hpp"

#include <cmath>

#include "occmob/common.hpp"

namespace occmob {

Eigen::VectorXd lifecycle_x_distribution(const ModelParams& params) {
  const int h = int(params.x_levels.size());
  const double up = 1.0 / (52.0 * params.mean_years_to_upgrade);
  const double mu = params.retirement_prob();
  // worker dies with prob mu and is reborn at x1; otherwise upgrades with prob up
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(h, h);
  for (int i = 0; i < h; ++i) {
    t(i, 0) += mu;
    if (i + 1 < h) {
      t(i, i) += (1.0 - mu) * (1.0 - up);
      t(i, i + 1) += (1.0 - mu) * up;
    } else {
      t(i, i) += (1.0 - mu);
    }
  }
  return ergodic_distribution(t);
}

StateGrid build_state_grid(const ModelParams& params) {
  params.validate();
  StateGrid g;
  g.x_levels = params.x_levels;

  Ar1Spec zspec = params.z_proc;
  if (params.z_norm_mode == ZNormMode::Auto) {
    zspec.location_shift = 1.0;
    MarkovChain raw = discretize_ar1(zspec);
    Eigen::VectorXd xdist = lifecycle_x_distribution(params);
    const double x_mean = xdist.dot(params.x_levels);
    const double z_mean = raw.ergodic.dot(raw.levels);
    zspec.location_shift = 1.0 / (z_mean * x_mean);
    g.x_ss_mean = x_mean;
  } else {
    g.x_ss_mean = lifecycle_x_distribution(params).dot(params.x_levels);
  }
  g.z = discretize_ar1(zspec);
  g.z_location_shift = zspec.location_shift;
  g.a = discretize_ar1(params.a_proc);
  auto chains = build_hc_chains(params.x_levels, params.mean_years_to_upgrade, params.gamma_d);
  g.x_emp = chains.first;
  g.x_unemp = chains.second;

  g.nz = g.z.size();
  g.nx = int(params.x_levels.size());
  g.no = params.n_occupations();
  g.na = g.a.size();

  g.p_occ.resize(g.no, g.na);
  for (int o = 0; o < g.no; ++o)
    for (int ia = 0; ia < g.na; ++ia)
      g.p_occ(o, ia) = occupation_productivity(g.a.levels(ia), params.occupations[std::size_t(o)]);
  return g;
}

}  // namespace occmob
