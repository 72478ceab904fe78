#include <doctest.h>

#include <cmath>

#include "occmob/common.hpp"
#include "occmob/equilibrium.hpp"

using namespace occmob;

namespace {

// one occupation, two z points, one x level, one aggregate state
ModelParams toy_params() {
  ModelParams p = ModelParams::table2();
  p.occupations.resize(1);
  p.occupations[0].id = "ALL";
  p.occupations[0].psi = 1.0;
  p.occupations[0].p_bar = 1.0;
  p.occupations[0].epsilon = 1.0;
  p.occupations[0].alpha_row = Eigen::VectorXd::Ones(1);
  p.init_occ_shares = Eigen::VectorXd::Ones(1);
  p.exclude_own_category = false;  // a single occupation must keep its own column
  p.x_levels = Eigen::VectorXd::Ones(1);
  p.gamma_d = 0.0;
  p.delta_L = p.delta_H = 0.01;
  p.z_proc = Ar1Spec{0.9, 0.2, 2, 3.0, 1.0};
  p.a_proc = Ar1Spec{0.5, 0.01, 2, 3.0, 1.0};
  p.z_norm_mode = ZNormMode::Explicit;
  p.z_proc.location_shift = 1.0;
  p.b = 0.4;
  p.k = 2.0;
  p.eta = 0.5;
  p.c = 0.5;
  p.nu = 0.04;
  return p;
}

ModelParams small_params() {
  ModelParams p = ModelParams::table2();
  p.z_proc.n_points = 21;
  p.a_proc.n_points = 5;
  p.z_norm_mode = ZNormMode::Explicit;
  p.z_proc.location_shift = 0.67;
  return p;
}

}  // namespace

TEST_CASE("market tightness") {
  SUBCASE("zero surplus: no vacancies") {
    Tightness t = market_tightness(0.0, 124.83, 0.239);
    CHECK(t.theta == 0.0);
    CHECK(t.lambda == 0.0);
  }
  SUBCASE("surplus k/eta gives unit tightness") {
    Tightness t = market_tightness(124.83 / 0.239, 124.83, 0.239);
    CHECK(t.theta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.q_raw == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.lambda == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("calibrated parameters: free-entry residual at machine precision") {
    const double eta = 0.239, k = 124.83, s = 600.0;
    Tightness t = market_tightness(s, k, eta);
    CHECK(t.theta == doctest::Approx(std::pow(eta * s / k, 1.0 / (1.0 - eta))).epsilon(1e-14));
    CHECK(std::abs(k - t.q_raw * eta * s) < 1e-10);
    CHECK(t.lambda_clamped);  // theta > 1 here
    CHECK(t.lambda == 1.0);
  }
  SUBCASE("negative surplus maps to zero") {
    Tightness t = market_tightness(-5.0, 2.0, 0.5);
    CHECK(t.theta == 0.0);
  }
}

TEST_CASE("search shares") {
  SUBCASE("equal positive net values reproduce the access row") {
    Eigen::VectorXd net = Eigen::VectorXd::Constant(3, 2.0);
    Eigen::VectorXd alpha(3);
    alpha << 0.5, 0.3, 0.2;
    SearchShares s = search_shares(net, alpha, 0.04);
    for (int j = 0; j < 3; ++j) CHECK(s.shares(j) == doctest::Approx(alpha(j)).epsilon(1e-12));
    CHECK(s.draw_prob == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("single positive net value takes all effort") {
    Eigen::VectorXd net(3);
    net << -1.0, 0.5, -0.2;
    Eigen::VectorXd alpha(3);
    alpha << 0.5, 0.3, 0.2;
    SearchShares s = search_shares(net, alpha, 0.04);
    CHECK(s.shares(1) == 1.0);
    CHECK(s.shares(0) == 0.0);
    CHECK(s.draw_prob == doctest::Approx(std::pow(0.3, 0.96)).epsilon(1e-12));
  }
  SUBCASE("all nonpositive: fallback maximizes the draw probability") {
    Eigen::VectorXd net = Eigen::VectorXd::Constant(3, -1.0);
    Eigen::VectorXd alpha(3);
    alpha << 0.5, 0.3, 0.2;
    SearchShares s = search_shares(net, alpha, 0.04);
    CHECK(s.fallback);
    CHECK(s.shares(0) == doctest::Approx(0.5));
    CHECK(s.draw_prob == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("closed form beats a dense simplex grid") {
    RngStream rng(42, 3);
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::VectorXd net(3), alpha(3);
      for (int j = 0; j < 3; ++j) {
        net(j) = 0.2 + rng.next_double();
        alpha(j) = 0.1 + rng.next_double();
      }
      alpha /= alpha.sum();
      const double nu = 0.04;
      SearchShares s = search_shares(net, alpha, nu);
      auto objective = [&](double s0, double s1, double s2) {
        double v = 0.0;
        for (int j = 0; j < 3; ++j) {
          const double sj = j == 0 ? s0 : j == 1 ? s1 : s2;
          if (sj > 0.0) v += std::pow(alpha(j), 1.0 - nu) * std::pow(sj, nu) * net(j);
        }
        return v;
      };
      const double closed = objective(s.shares(0), s.shares(1), s.shares(2));
      double best = 0.0;
      const int grid = 140;  // about 10^4 simplex points
      for (int i = 0; i <= grid; ++i)
        for (int j = 0; j <= grid - i; ++j) {
          const double s0 = double(i) / grid, s1 = double(j) / grid;
          best = std::max(best, objective(s0, s1, 1.0 - s0 - s1));
        }
      CHECK(closed >= best - 1e-3);
    }
  }
}

TEST_CASE("degenerate economy: zero production, b = 0, costly reallocation") {
  ModelParams p = toy_params();
  p.b = 0.0;
  p.z_proc.location_shift = 1e-9;  // production numerically zero
  StateGrid grid = build_state_grid(p);
  SolveOptions opts;
  opts.tol = 1e-10;
  SolveDiagnostics diag;
  EquilibriumTables t = solve_equilibrium(p, grid, opts, &diag);
  REQUIRE(diag.converged);
  CHECK(t.M.abs().maxCoeff() < 1e-6);
  CHECK(t.W_U.abs().maxCoeff() < 1e-6);
  // with a guaranteed draw the worker pays c once if forced; the fallback
  // allocation keeps the draw probability at one, so R = -c
  CHECK(t.R.maxCoeff() == doctest::Approx(-p.c).epsilon(1e-6));
  CHECK(t.theta.maxCoeff() < 1e-10);  // roundoff-scale surplus only
}

TEST_CASE("two-point toy matches a standalone scalar fixed-point oracle") {
  ModelParams p = toy_params();
  StateGrid grid = build_state_grid(p);
  SolveOptions opts;
  opts.tol = 1e-9;
  SolveDiagnostics diag;
  EquilibriumTables t = solve_equilibrium(p, grid, opts, &diag);
  REQUIRE(diag.converged);

  // oracle: direct iteration on the 2x2-state system written out by hand,
  // a-chain and z-chain kronecker; single occupation so R uses own draws
  const double beta = p.beta();
  const auto& pz = grid.z.transition;
  const auto& pa = grid.a.transition;
  const Eigen::VectorXd f = grid.z.ergodic;
  double m[2][2] = {{0, 0}, {0, 0}}, w[2][2] = {{0, 0}, {0, 0}}, r[2] = {0, 0};
  for (int it = 0; it < 200000; ++it) {
    double mn[2][2], wn[2][2], rn[2];
    double delta = 0.0;
    for (int ia = 0; ia < 2; ++ia) {
      double draw = 0.0;
      for (int iz = 0; iz < 2; ++iz) draw += f(iz) * w[iz][ia];
      double er = 0.0;
      for (int ja = 0; ja < 2; ++ja) er += pa(ia, ja) * r[ja];
      const double w_hat = p.b + beta * er;
      const double net = draw - w_hat;
      // single destination: shares = 1, alpha = 1
      rn[ia] = net > 0.0 ? draw - p.c : w_hat - p.c;
      for (int iz = 0; iz < 2; ++iz) {
        double em = 0.0, eu = 0.0;
        for (int jz = 0; jz < 2; ++jz)
          for (int ja = 0; ja < 2; ++ja) {
            const double pr = pz(iz, jz) * pa(ia, ja);
            const double surplus = m[jz][ja] - w[jz][ja];
            const double pos = surplus > 0.0 ? surplus : 0.0;
            const double lam =
                pos > 0.0 ? std::min(std::pow(p.eta * pos / p.k, p.eta / (1.0 - p.eta)), 1.0)
                          : 0.0;
            em += pr * (w[jz][ja] + (1.0 - p.delta_L) * pos);
            eu += pr * std::max(r[ja], w[jz][ja] + lam * (1.0 - p.eta) * pos);
          }
        mn[iz][ia] = grid.output(iz, 0, 0, ia) + beta * em;
        wn[iz][ia] = p.b + beta * eu;
      }
      delta = std::max(delta, std::abs(rn[ia] - r[ia]));
    }
    for (int iz = 0; iz < 2; ++iz)
      for (int ia = 0; ia < 2; ++ia) {
        delta = std::max(delta, std::abs(mn[iz][ia] - m[iz][ia]));
        delta = std::max(delta, std::abs(wn[iz][ia] - w[iz][ia]));
        m[iz][ia] = mn[iz][ia];
        w[iz][ia] = wn[iz][ia];
      }
    for (int ia = 0; ia < 2; ++ia) r[ia] = rn[ia];
    if (delta < 1e-13) break;
  }
  for (int iz = 0; iz < 2; ++iz)
    for (int ia = 0; ia < 2; ++ia) {
      CHECK(t.M[grid.idx(iz, 0, 0, ia)] == doctest::Approx(m[iz][ia]).epsilon(1e-9));
      CHECK(t.W_U[grid.idx(iz, 0, 0, ia)] == doctest::Approx(w[iz][ia]).epsilon(1e-9));
    }
  for (int ia = 0; ia < 2; ++ia)
    CHECK(t.R[t.xoa(0, 0, ia, 1, 2)] == doctest::Approx(r[ia]).epsilon(1e-9));
}

TEST_CASE("successive deltas contract at rate beta") {
  ModelParams p = small_params();
  StateGrid grid = build_state_grid(p);
  SolveOptions opts;
  opts.tol = 1e-4;
  opts.accelerate = false;  // the raw operator; midpoint shifts would mask the rate
  SolveDiagnostics diag;
  solve_equilibrium(p, grid, opts, &diag);
  const double beta = p.beta();
  int checked = 0;
  for (std::size_t i = 1; i < diag.delta_trace.size(); ++i) {
    CHECK(diag.delta_trace[i] <= beta * diag.delta_trace[i - 1] + 1e-12);
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("fixed point is independent of the initialization") {
  ModelParams p = small_params();
  StateGrid grid = build_state_grid(p);
  SolveOptions a;
  a.tol = 1e-6;
  SolveOptions b = a;
  b.init_from_production = true;
  EquilibriumTables ta = solve_equilibrium(p, grid, a);
  EquilibriumTables tb = solve_equilibrium(p, grid, b);
  CHECK((ta.M - tb.M).abs().maxCoeff() < 10.0 * a.tol);
  CHECK((ta.W_U - tb.W_U).abs().maxCoeff() < 10.0 * a.tol);
  CHECK((ta.R - tb.R).abs().maxCoeff() < 10.0 * a.tol);
}

TEST_CASE("identities and structure at the small-grid fixed point") {
  ModelParams p = small_params();
  StateGrid grid = build_state_grid(p);
  SolveOptions opts;
  opts.tol = 1e-7;
  SolveDiagnostics diag;
  EquilibriumTables t = solve_equilibrium(p, grid, opts, &diag);

  CHECK(diag.free_entry_resid < 1e-8);
  CHECK(diag.split_resid < 1e-8);
  CHECK(diag.shares_sum_dev < 1e-10);
  CHECK(diag.draw_prob_excess < 1e-10);
  CHECK(diag.lambda_delta_max < 1.0);
  CHECK(diag.monotonicity_violations == 0);

  SUBCASE("R is constant in z by construction and W_hat matches its recursion") {
    // R is stored per (x,o,A); verify the reallocation-stage identity
    for (int ix = 0; ix < grid.nx; ++ix)
      for (int io = 0; io < grid.no; ++io)
        for (int ia = 0; ia < grid.na; ++ia) {
          const std::size_t xoa = t.xoa(ix, io, ia, grid.no, grid.na);
          double er = 0.0;
          for (int jx = 0; jx < grid.nx; ++jx)
            for (int ja = 0; ja < grid.na; ++ja)
              er += grid.x_unemp.transition(ix, jx) * grid.a.transition(ia, ja) *
                    t.R[t.xoa(jx, io, ja, grid.no, grid.na)];
          CHECK(t.W_hat[xoa] == doctest::Approx(p.b + p.beta() * er).epsilon(1e-8));
        }
  }

  SUBCASE("theta is zero exactly on nonpositive surplus") {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (t.M[i] - t.W_U[i] <= 0.0)
        CHECK(t.theta[i] == 0.0);
      else
        CHECK(t.theta[i] > 0.0);
    }
  }

  SUBCASE("prohibitive reallocation cost pins z_r at the grid minimum") {
    ModelParams pc = p;
    pc.c = 1e6;
    EquilibriumTables tc = solve_equilibrium(pc, grid, opts);
    for (int ix = 0; ix < grid.nx; ++ix)
      for (int io = 0; io < grid.no; ++io)
        for (int ia = 0; ia < grid.na; ++ia)
          CHECK(tc.z_r_idx[Eigen::Index(tc.xoa(ix, io, ia, grid.no, grid.na))] == 0);
  }

  SUBCASE("b above all production kills every market") {
    ModelParams pb = p;
    pb.b = 10.0;
    EquilibriumTables tb = solve_equilibrium(pb, grid, opts);
    CHECK(tb.theta.maxCoeff() == 0.0);
    for (Eigen::Index i = 0; i < tb.z_s_idx.size(); ++i)
      CHECK(tb.z_s_idx[i] == grid.nz);  // dead-market flag
  }
}

TEST_CASE("wages: static Nash split in the one-shot limit and boundary behavior") {
  // beta ~ 0 via a one-week working life would break other invariants, so use
  // the identity check on the solved toy instead
  ModelParams p = toy_params();
  StateGrid grid = build_state_grid(p);
  SolveOptions opts;
  opts.tol = 1e-10;
  EquilibriumTables t = solve_equilibrium(p, grid, opts);
  const double beta = p.beta();
  for (int iz = 0; iz < grid.nz; ++iz)
    for (int ia = 0; ia < grid.na; ++ia) {
      const std::size_t i = grid.idx(iz, 0, 0, ia);
      if (!(t.M[i] - t.W_U[i] >= 0.0)) continue;
      // recursive W_E identity: W_E = w + beta E[W_U' + (1-delta)(1-eta) S'+]
      double cont = 0.0;
      for (int jz = 0; jz < grid.nz; ++jz)
        for (int ja = 0; ja < grid.na; ++ja) {
          const std::size_t j = grid.idx(jz, 0, 0, ja);
          const double pos = std::max(t.M[j] - t.W_U[j], 0.0);
          cont += grid.z.transition(iz, jz) * grid.a.transition(ia, ja) *
                  (t.W_U[j] + (1.0 - p.delta_L) * (1.0 - p.eta) * pos);
        }
      CHECK(t.wage[i] == doctest::Approx(t.W_E[i] - beta * cont).epsilon(1e-9));
    }
  // surplus == 0 boundary: W_E equals W_U so the wage makes the worker indifferent
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (t.M[i] - t.W_U[i] == 0.0) CHECK(t.W_E[i] == t.W_U[i]);
}
