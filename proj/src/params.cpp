#include "occmob/params.hpp"

#include <cmath>

#include "occmob/common.hpp"

namespace occmob {

double occupation_productivity(double a_level, const OccupationSpec& occ) {
  require(a_level > 0.0 && std::isfinite(a_level), ErrorCode::Numeric,
          "occupation_productivity: A must be positive and finite");
  return std::exp(std::log(occ.p_bar) + occ.epsilon * std::log(a_level));
}

double ModelParams::weekly_interest() const { return std::pow(1.0 + annual_interest, 1.0 / 52.0) - 1.0; }

double ModelParams::retirement_prob() const { return 1.0 / (working_life_years * 52.0); }

double ModelParams::beta() const { return (1.0 - retirement_prob()) / (1.0 + weekly_interest()); }

Eigen::VectorXd ModelParams::psi_vector() const {
  Eigen::VectorXd psi(n_occupations());
  for (int o = 0; o < n_occupations(); ++o) psi(o) = occupations[std::size_t(o)].psi;
  return psi;
}

void ModelParams::validate() const {
  const double beta_v = beta();
  require(beta_v > 0.0 && beta_v < 1.0, ErrorCode::Config, "ModelParams: beta must lie in (0,1)");
  require(eta > 0.0 && eta < 1.0, ErrorCode::Config, "ModelParams: eta must lie in (0,1)");
  require(k > 0.0, ErrorCode::Config, "ModelParams: k must be > 0");
  require(c >= 0.0, ErrorCode::Config, "ModelParams: c must be >= 0");
  require(b >= 0.0 && std::isfinite(b), ErrorCode::Config, "ModelParams: b must be finite");
  require(delta_L >= 0.0 && delta_L <= 1.0 && delta_H >= 0.0 && delta_H <= 1.0, ErrorCode::Config,
          "ModelParams: separation probabilities must lie in [0,1]");
  require(nu >= 0.0 && nu < 1.0, ErrorCode::Config, "ModelParams: nu must lie in [0,1)");
  z_proc.validate();
  a_proc.validate();
  require(x_levels.size() >= 1, ErrorCode::Config, "ModelParams: need at least one x level");
  require(!occupations.empty(), ErrorCode::Config, "ModelParams: need at least one occupation");

  const int no = n_occupations();
  double psi_sum = 0.0;
  for (const auto& occ : occupations) {
    require(occ.psi >= 0.0, ErrorCode::Config, "ModelParams: psi must be >= 0");
    psi_sum += occ.psi;
    require(occ.alpha_row.size() == no, ErrorCode::Config,
            "ModelParams: alpha_row must span all categories");
    for (int j = 0; j < no; ++j)
      require(occ.alpha_row(j) >= 0.0 && occ.alpha_row(j) <= 1.0, ErrorCode::Config,
              "ModelParams: alpha entries must lie in [0,1]");
    // printed calibration rows carry rounding; accept within 1e-2 (re-normalized on use)
    require(std::abs(occ.alpha_row.sum() - 1.0) < 1e-2, ErrorCode::Config,
            "ModelParams: alpha_row of " + occ.id + " must sum to 1");
    require(occ.p_bar > 0.0, ErrorCode::Config, "ModelParams: p_bar must be > 0");
  }
  require(std::abs(psi_sum - 1.0) < 1e-2, ErrorCode::Config, "ModelParams: psi must sum to 1");

  if (init_occ_shares.size() > 0) {
    require(init_occ_shares.size() == no, ErrorCode::Config,
            "ModelParams: init_occ_shares dimension mismatch");
    require(std::abs(init_occ_shares.sum() - 1.0) < 1e-2, ErrorCode::Config,
            "ModelParams: init_occ_shares must sum to 1");
    // employment-weighted normalizations of p_bar and epsilon (printed values carry rounding)
    double pbar_avg = 0.0, eps_avg = 0.0;
    for (int o = 0; o < no; ++o) {
      pbar_avg += init_occ_shares(o) * occupations[std::size_t(o)].p_bar;
      eps_avg += init_occ_shares(o) * occupations[std::size_t(o)].epsilon;
    }
    require(std::abs(pbar_avg - 1.0) < 0.05, ErrorCode::Config,
            "ModelParams: employment-weighted p_bar must average 1");
    require(std::abs(eps_avg - 1.0) < 0.05, ErrorCode::Config,
            "ModelParams: employment-weighted epsilon must average 1");
  }
}

ModelParams ModelParams::table2() {
  ModelParams p;
  p.x_levels = Eigen::VectorXd(3);
  p.x_levels << 1.0, 1.171, 1.458;

  auto occ = [](const std::string& id, double p_bar, double eps, double psi,
                std::initializer_list<double> alpha) {
    OccupationSpec o;
    o.id = id;
    o.p_bar = p_bar;
    o.epsilon = eps;
    o.psi = psi;
    o.alpha_row = Eigen::VectorXd(int(alpha.size()));
    int j = 0;
    for (double a : alpha) o.alpha_row(j++) = a;
    return o;
  };
  p.occupations = {
      occ("NRC", 1.019, 1.081, 0.620, {0.436, 0.560, 0.004, 0.000}),
      occ("RC", 0.988, 1.120, 0.145, {0.407, 0.383, 0.210, 0.000}),
      occ("NRM", 1.004, 0.532, 0.087, {0.000, 0.093, 0.384, 0.524}),
      occ("RM", 0.988, 1.283, 0.147, {0.000, 0.140, 0.767, 0.094}),
  };
  p.init_occ_shares = Eigen::VectorXd(4);
  p.init_occ_shares << 0.224, 0.292, 0.226, 0.258;
  // printed rows carry rounding; rescale to exact unit sums
  double psi_sum = 0.0;
  for (auto& occ : p.occupations) {
    occ.alpha_row /= occ.alpha_row.sum();
    psi_sum += occ.psi;
  }
  for (auto& occ : p.occupations) occ.psi /= psi_sum;
  return p;
}

}  // namespace occmob
