#include "occmob/garbling.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "occmob/common.hpp"
#include "occmob/markov.hpp"

namespace occmob {

void GarblingMatrix::validate() const {
  const int n = size();
  require(n >= 1 && gamma.cols() == n, ErrorCode::Numeric, "GarblingMatrix: not square");
  double rowdev = (gamma.rowwise().sum().array() - 1.0).abs().maxCoeff();
  require(rowdev < 1e-10, ErrorCode::Numeric, "GarblingMatrix: rows must sum to 1 (dev " +
                                                  std::to_string(rowdev) + ")");
  require(min_diagonal > 0.5, ErrorCode::Numeric,
          "GarblingMatrix: A3 violated, min diagonal " + std::to_string(min_diagonal));
  require(min_eigenvalue > 0.0 && max_eigenvalue <= 1.0 + 1e-12, ErrorCode::Numeric,
          "GarblingMatrix: eigenvalues must lie in (0,1]");
}

Eigen::VectorXd stationary_occ_dist(const Eigen::MatrixXd& transition) {
  return ergodic_distribution(transition);
}

namespace {

// Projects flows F = diag(c) T onto detailed balance and returns the projected
// transition matrix together with its (recomputed) stationary vector.
void reversible_projection(const Eigen::MatrixXd& t, Symmetrization sym, Eigen::MatrixXd& t_sym,
                           Eigen::VectorXd& c_out, double& asym_resid) {
  const int n = int(t.rows());
  Eigen::VectorXd c = stationary_occ_dist(t);
  Eigen::MatrixXd f = c.asDiagonal() * t;
  asym_resid = (f - f.transpose()).cwiseAbs().maxCoeff();

  Eigen::MatrixXd fs(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double wi = 1.0, wj = 1.0;
      if (sym == Symmetrization::InverseVariance) {
        // rounding noise on row i scales with c_i, so weight by 1/c_i^2
        wi = 1.0 / (c(i) * c(i));
        wj = 1.0 / (c(j) * c(j));
      }
      fs(i, j) = (wi * f(i, j) + wj * f(j, i)) / (wi + wj);
    }
  Eigen::VectorXd rowsum = fs.rowwise().sum();
  for (int i = 0; i < n; ++i) {
    require(rowsum(i) > 0.0, ErrorCode::Numeric, "estimate_gamma: empty row after projection");
    t_sym.row(i) = fs.row(i) / rowsum(i);
  }
  c_out = stationary_occ_dist(t_sym);
}

}  // namespace

GarblingMatrix estimate_gamma(const Eigen::MatrixXd& stayer_transition, Symmetrization sym,
                              double max_asymmetry) {
  const int n = int(stayer_transition.rows());
  require(n >= 1 && stayer_transition.cols() == n, ErrorCode::Numeric,
          "estimate_gamma: matrix must be square");
  double rowdev = (stayer_transition.rowwise().sum().array() - 1.0).abs().maxCoeff();
  require(rowdev < 1e-6, ErrorCode::Numeric, "estimate_gamma: input rows must sum to 1");

  GarblingMatrix out;
  Eigen::MatrixXd t_sym(n, n);
  reversible_projection(stayer_transition, sym, t_sym, out.c, out.symmetrization_residual);
  require(out.symmetrization_residual <= max_asymmetry, ErrorCode::Numeric,
          "estimate_gamma: detailed-balance residual " +
              std::to_string(out.symmetrization_residual) + " exceeds tolerance " +
              std::to_string(max_asymmetry));

  Eigen::VectorXd s = out.c.cwiseSqrt();
  Eigen::MatrixXd bsym = s.asDiagonal() * t_sym * s.cwiseInverse().asDiagonal();
  bsym = 0.5 * (bsym + bsym.transpose());  // exact symmetry for the solver
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bsym);
  require(es.info() == Eigen::Success, ErrorCode::Numeric, "estimate_gamma: eigensolver failed");
  Eigen::VectorXd ev = es.eigenvalues();
  require(ev.minCoeff() > 0.0, ErrorCode::Numeric,
          "estimate_gamma: no admissible root, smallest eigenvalue " +
              std::to_string(ev.minCoeff()) + " is not positive (A2/A3 violated by input)");

  Eigen::MatrixXd root =
      es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  out.gamma = s.cwiseInverse().asDiagonal() * root * s.asDiagonal();

  out.min_diagonal = out.gamma.diagonal().minCoeff();
  out.min_eigenvalue = std::sqrt(ev.minCoeff());
  out.max_eigenvalue = std::sqrt(ev.maxCoeff());
  Eigen::MatrixXd cf = out.c.asDiagonal() * out.gamma;
  out.detailed_balance_residual = (cf - cf.transpose()).cwiseAbs().maxCoeff();
  out.square_residual = (out.gamma * out.gamma - t_sym).cwiseAbs().maxCoeff();
  out.validate();
  return out;
}

GarblingMatrix estimate_gamma(const FlowMatrix& stayer_flows, Symmetrization sym,
                              double max_asymmetry) {
  const int n = int(stayer_flows.m.rows());
  Eigen::MatrixXd t(n, n);
  for (int i = 0; i < n; ++i) {
    double rs = stayer_flows.m.row(i).sum();
    require(rs > 0.0, ErrorCode::Numeric, "estimate_gamma: empty flow row");
    t.row(i) = stayer_flows.m.row(i) / rs;
  }
  GarblingMatrix g = estimate_gamma(t, sym, max_asymmetry);
  g.labels = stayer_flows.labels;
  return g;
}

AssumptionReport validate_assumptions(const Eigen::MatrixXd& m) {
  AssumptionReport r;
  r.min_diagonal = m.diagonal().minCoeff();
  r.a3_pass = r.min_diagonal > 0.5;
  Eigen::VectorXd c = stationary_occ_dist(m);
  Eigen::MatrixXd f = c.asDiagonal() * m;
  r.detailed_balance_residual = (f - f.transpose()).cwiseAbs().maxCoeff();
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  double max_imag = es.eigenvalues().imag().cwiseAbs().maxCoeff();
  r.min_eigenvalue = es.eigenvalues().real().minCoeff();
  r.max_eigenvalue = es.eigenvalues().real().maxCoeff();
  r.eigenvalues_admissible =
      max_imag < 1e-10 && r.min_eigenvalue > 0.0 && r.max_eigenvalue <= 1.0 + 1e-12;
  return r;
}

double true_mover_lower_bound(double observed_mobility, double miscoding_prob, int max_iter,
                              double tol) {
  require(observed_mobility >= 0.0 && observed_mobility <= 1.0, ErrorCode::Config,
          "true_mover_lower_bound: mobility must lie in [0,1]");
  require(miscoding_prob >= 0.0 && miscoding_prob < 1.0, ErrorCode::Config,
          "true_mover_lower_bound: miscoding must lie in [0,1)");
  double t = 0.0;
  for (int i = 0; i < max_iter; ++i) {
    double next = observed_mobility - miscoding_prob * (1.0 - t);
    if (next < 0.0) next = 0.0;
    if (std::abs(next - t) < tol) return next;
    t = next;
  }
  return t;
}

FlowMatrix garble(const FlowMatrix& m, const GarblingMatrix& g) {
  FlowMatrix out;
  out.labels = m.labels;
  out.m = g.gamma.transpose() * m.m * g.gamma;
  return out;
}

DegarbleResult degarble(const FlowMatrix& observed, const GarblingMatrix& g) {
  DegarbleResult out;
  out.flows.labels = observed.labels;
  Eigen::MatrixXd inv = g.gamma.inverse();
  out.flows.m = inv.transpose() * observed.m * inv;
  const double total = out.flows.m.sum();
  double floored = 0.0;
  for (int i = 0; i < out.flows.m.rows(); ++i)
    for (int j = 0; j < out.flows.m.cols(); ++j)
      if (out.flows.m(i, j) < 0.0) {
        floored -= out.flows.m(i, j);
        out.flows.m(i, j) = 0.0;
      }
  if (floored > 0.0 && out.flows.m.sum() > 0.0) out.flows.m *= total / out.flows.m.sum();
  out.negative_mass_floored = floored;
  return out;
}

namespace {

Tensor3 apply_modewise(const Tensor3& m, const Eigen::MatrixXd& op) {
  const int n = m.n;
  Tensor3 out;
  out.n = n;
  out.v = Eigen::VectorXd::Zero(m.v.size());
  Tensor3 tmp = out;
  // mode 1: contract first index with op'
  for (int i2 = 0; i2 < n; ++i2)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += op(i, i2) * m.at(i, j, k);
        tmp.at(i2, j, k) = acc;
      }
  // mode 2
  Tensor3 tmp2 = out;
  for (int i = 0; i < n; ++i)
    for (int j2 = 0; j2 < n; ++j2)
      for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += op(j, j2) * tmp.at(i, j, k);
        tmp2.at(i, j2, k) = acc;
      }
  // mode 3
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k2 = 0; k2 < n; ++k2) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += op(k, k2) * tmp2.at(i, j, k);
        out.at(i, j, k2) = acc;
      }
  return out;
}

}  // namespace

Tensor3 garble_repeat(const Tensor3& m, const GarblingMatrix& g) {
  return apply_modewise(m, g.gamma);
}

Tensor3 degarble_repeat(const Tensor3& observed, const GarblingMatrix& g) {
  return apply_modewise(observed, g.gamma.inverse());
}

FlowMatrix aggregate_flows(const FlowMatrix& flows, const std::vector<int>& group_of,
                           const std::vector<std::string>& group_labels) {
  require(group_of.size() == std::size_t(flows.m.rows()), ErrorCode::Config,
          "aggregate_flows: crosswalk length mismatch");
  const int ng = int(group_labels.size());
  FlowMatrix out;
  out.labels = group_labels;
  out.m = Eigen::MatrixXd::Zero(ng, ng);
  for (int i = 0; i < flows.m.rows(); ++i) {
    if (group_of[std::size_t(i)] < 0) continue;
    for (int j = 0; j < flows.m.cols(); ++j) {
      if (group_of[std::size_t(j)] < 0) continue;
      out.m(group_of[std::size_t(i)], group_of[std::size_t(j)]) += flows.m(i, j);
    }
  }
  return out;
}

}  // namespace occmob
