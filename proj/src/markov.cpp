#include "occmob/markov.hpp"

#include <cmath>
#include <vector>

#include "occmob/common.hpp"

namespace occmob {

void Ar1Spec::validate() const {
  require(std::isfinite(rho) && rho >= 0.0 && rho < 1.0, ErrorCode::Config,
          "Ar1Spec: rho must lie in [0,1)");
  require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::Config, "Ar1Spec: sigma must be > 0");
  require(n_points >= 2, ErrorCode::Config, "Ar1Spec: n_points must be >= 2");
  require(std::isfinite(coverage) && coverage > 0.0, ErrorCode::Config,
          "Ar1Spec: coverage must be > 0");
  require(std::isfinite(location_shift) && location_shift > 0.0, ErrorCode::Config,
          "Ar1Spec: location_shift must be > 0");
}

double Ar1Spec::unconditional_sd() const { return sigma / std::sqrt(1.0 - rho * rho); }

double MarkovChain::row_stochastic_residual() const {
  return (transition.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

double MarkovChain::ergodic_residual() const {
  Eigen::VectorXd r = transition.transpose() * ergodic - ergodic;
  return r.cwiseAbs().maxCoeff();
}

bool MarkovChain::rows_fosd_ordered(double tol) const {
  const int n = size();
  Eigen::MatrixXd cdf = transition;
  for (int j = 1; j < n; ++j) cdf.col(j) += cdf.col(j - 1);
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (cdf(i, j) > cdf(i - 1, j) + tol) return false;
  return true;
}

namespace {

// strong connectivity of the positive-entry digraph
bool strongly_connected(const Eigen::MatrixXd& P) {
  const int n = int(P.rows());
  auto reach = [&](bool transpose) {
    std::vector<char> seen(std::size_t(n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w = 0; w < n; ++w) {
        double edge = transpose ? P(w, v) : P(v, w);
        if (edge > 0.0 && !seen[std::size_t(w)]) {
          seen[std::size_t(w)] = 1;
          stack.push_back(w);
        }
      }
    }
    for (const char s : seen)
      if (!s) return false;
    return true;
  };
  return reach(false) && reach(true);
}

}  // namespace

Eigen::VectorXd ergodic_distribution(const Eigen::MatrixXd& transition) {
  const int n = int(transition.rows());
  require(n >= 1 && transition.cols() == n, ErrorCode::Numeric,
          "ergodic_distribution: matrix must be square");
  double rowdev = (transition.rowwise().sum().array() - 1.0).abs().maxCoeff();
  require(rowdev < 1e-9, ErrorCode::Numeric,
          "ergodic_distribution: rows do not sum to 1 (max deviation " + std::to_string(rowdev) +
              ")");
  require(transition.minCoeff() >= -1e-15, ErrorCode::Numeric,
          "ergodic_distribution: negative transition probability");
  require(strongly_connected(transition), ErrorCode::Numeric,
          "ergodic_distribution: chain is reducible, no unique stationary distribution");

  // Solve pi' (P - I) = 0 with the normalization sum(pi) = 1.
  Eigen::MatrixXd A = transition.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::VectorXd pi = A.partialPivLu().solve(rhs);
  // clean tiny negatives from roundoff
  for (int i = 0; i < n; ++i)
    if (pi(i) < 0.0 && pi(i) > -1e-13) pi(i) = 0.0;
  require(pi.minCoeff() >= 0.0, ErrorCode::Numeric,
          "ergodic_distribution: negative stationary mass");
  pi /= pi.sum();
  Eigen::VectorXd resid = transition.transpose() * pi - pi;
  require(resid.cwiseAbs().maxCoeff() < 1e-12, ErrorCode::Numeric,
          "ergodic_distribution: residual above 1e-12");
  return pi;
}

MarkovChain discretize_ar1(const Ar1Spec& spec) {
  spec.validate();
  const int n = spec.n_points;
  const double p = (1.0 + spec.rho) / 2.0;

  Eigen::MatrixXd P(2, 2);
  P << p, 1.0 - p, 1.0 - p, p;
  for (int m = 3; m <= n; ++m) {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(m, m);
    Q.topLeftCorner(m - 1, m - 1) += p * P;
    Q.topRightCorner(m - 1, m - 1) += (1.0 - p) * P;
    Q.bottomLeftCorner(m - 1, m - 1) += (1.0 - p) * P;
    Q.bottomRightCorner(m - 1, m - 1) += p * P;
    Q.middleRows(1, m - 2) *= 0.5;
    P = Q;
  }

  const double half_width = std::sqrt(double(n - 1)) * spec.unconditional_sd();
  Eigen::VectorXd loggrid = Eigen::VectorXd::LinSpaced(n, -half_width, half_width);

  MarkovChain chain;
  chain.levels = (loggrid.array().exp() * spec.location_shift).matrix();
  chain.levels_are_log = false;
  chain.transition = P;
  chain.ergodic = ergodic_distribution(P);
  return chain;
}

std::pair<MarkovChain, MarkovChain> build_hc_chains(const Eigen::VectorXd& x_levels,
                                                    double mean_years_to_upgrade, double gamma_d) {
  const int h = int(x_levels.size());
  require(h >= 1, ErrorCode::Config, "build_hc_chains: need at least one level");
  require(std::abs(x_levels(0) - 1.0) < 1e-12, ErrorCode::Config,
          "build_hc_chains: x_levels must start at 1");
  for (int i = 1; i < h; ++i)
    require(x_levels(i) > x_levels(i - 1), ErrorCode::Config,
            "build_hc_chains: x_levels must be strictly increasing");
  require(mean_years_to_upgrade > 0.0, ErrorCode::Config,
          "build_hc_chains: mean_years_to_upgrade must be > 0");
  require(gamma_d >= 0.0 && gamma_d <= 1.0, ErrorCode::Config,
          "build_hc_chains: gamma_d must lie in [0,1]");

  const double up = 1.0 / (52.0 * mean_years_to_upgrade);
  MarkovChain emp, unemp;
  emp.levels = unemp.levels = x_levels;
  emp.transition = Eigen::MatrixXd::Zero(h, h);
  unemp.transition = Eigen::MatrixXd::Zero(h, h);
  for (int i = 0; i < h; ++i) {
    if (i + 1 < h) {
      emp.transition(i, i) = 1.0 - up;
      emp.transition(i, i + 1) = up;
    } else {
      emp.transition(i, i) = 1.0;
    }
    if (i > 0) {
      unemp.transition(i, i) = 1.0 - gamma_d;
      unemp.transition(i, i - 1) = gamma_d;
    } else {
      unemp.transition(i, i) = 1.0;
    }
  }
  // Both chains are absorbing; the point-mass limits are their stationary vectors.
  emp.ergodic = Eigen::VectorXd::Zero(h);
  emp.ergodic(h - 1) = 1.0;
  unemp.ergodic = Eigen::VectorXd::Zero(h);
  unemp.ergodic(0) = 1.0;
  return {emp, unemp};
}

}  // namespace occmob
