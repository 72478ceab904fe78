#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "occmob/common.hpp"
#include "occmob/garbling.hpp"
#include "occmob/io.hpp"

using namespace occmob;

namespace {

// admissible generator: reversible w.r.t. a random c, strictly diagonally dominant
GarblingMatrix random_admissible(int n, RngStream& rng) {
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) c(i) = 0.2 + rng.next_double();
  c /= c.sum();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) f(i, j) = f(j, i) = rng.next_double();
  // scale off-diagonal flow so that every row keeps diagonal above 0.55
  double worst = 0.0;
  for (int i = 0; i < n; ++i) worst = std::max(worst, f.row(i).sum() / c(i));
  f *= 0.45 / std::max(worst, 1e-12);
  GarblingMatrix g;
  g.gamma.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g.gamma(i, j) = i == j ? 0.0 : f(i, j) / c(i);
    g.gamma(i, i) = 1.0 - g.gamma.row(i).sum();
  }
  g.c = c;
  return g;
}

}  // namespace

TEST_CASE("identity input returns the identity garbling") {
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  // the identity chain is reducible; perturb infinitesimally off-diagonal
  Eigen::MatrixXd t = id;
  t.array() += 1e-9;
  for (int i = 0; i < 3; ++i) t.row(i) /= t.row(i).sum();
  GarblingMatrix g = estimate_gamma(t);
  CHECK((g.gamma - id).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("two-state forward construction recovers gamma to 1e-12") {
  Eigen::MatrixXd g0(2, 2);
  g0 << 0.9, 0.1, 0.1, 0.9;
  Eigen::MatrixXd t = g0 * g0;
  CHECK(t(0, 0) == doctest::Approx(0.82));
  GarblingMatrix g = estimate_gamma(t);
  CHECK((g.gamma - g0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("property: estimate_gamma(gamma^2) recovers gamma on the admissible set") {
  RngStream rng(7, 13);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + int(rng.next_double() * 9);
    GarblingMatrix g0 = random_admissible(n, rng);
    Eigen::MatrixXd t = g0.gamma * g0.gamma;
    GarblingMatrix g = estimate_gamma(t);
    CHECK((g.gamma - g0.gamma).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("stationary distribution: symmetric matrix gives uniform c") {
  Eigen::MatrixXd t(3, 3);
  t << 0.8, 0.15, 0.05, 0.15, 0.8, 0.05, 0.05, 0.05, 0.9;
  // symmetric T: uniform stationary
  Eigen::VectorXd c = stationary_occ_dist(t);
  for (int i = 0; i < 3; ++i) CHECK(c(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("stationary distribution recovers the c used to build a reversible chain") {
  RngStream rng(21, 5);
  GarblingMatrix g0 = random_admissible(5, rng);
  Eigen::VectorXd c = stationary_occ_dist(g0.gamma);
  CHECK((c - g0.c).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Table 3 square root reproduces Table 4 within 0.15pp") {
  FlowMatrix t3 = read_labeled_matrix_csv(fixture_path("table3_stayer_transitions_soc1990.csv"));
  FlowMatrix t4 = read_labeled_matrix_csv(fixture_path("table4_garbling_soc1990.csv"));
  GarblingMatrix g = estimate_gamma(t3);
  const Eigen::MatrixXd target = t4.m / 100.0;
  const double max_gap = (g.gamma - target).cwiseAbs().maxCoeff();
  CHECK(max_gap < 0.0015);
  CHECK(g.min_diagonal > 0.74);

  // implied stayer misclassification
  Eigen::MatrixXd t = t3.m;
  for (int i = 0; i < t.rows(); ++i) t.row(i) /= t.row(i).sum();
  Eigen::VectorXd c = stationary_occ_dist(t);
  const double mis = 1.0 - c.dot(t.diagonal());
  CHECK(mis == doctest::Approx(0.185).epsilon(0.3 / 18.5));

  // stationary c matches the row masses implied by the printed construction
  CHECK((g.c - c).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("validate_assumptions flags a weak diagonal and passes Table 4") {
  Eigen::MatrixXd bad(2, 2);
  bad << 0.45, 0.55, 0.55, 0.45;
  AssumptionReport r = validate_assumptions(bad);
  CHECK_FALSE(r.a3_pass);
  CHECK(r.min_diagonal == doctest::Approx(0.45));

  FlowMatrix t4 = read_labeled_matrix_csv(fixture_path("table4_garbling_soc1990.csv"));
  Eigen::MatrixXd g = t4.m / 100.0;
  for (int i = 0; i < g.rows(); ++i) g.row(i) /= g.row(i).sum();
  AssumptionReport rt = validate_assumptions(g);
  CHECK(rt.a3_pass);
  CHECK(rt.min_diagonal > 0.74);
}

TEST_CASE("iterative true-mover lower bound") {
  const double bound = true_mover_lower_bound(0.531, 0.20);
  CHECK(bound == doctest::Approx((0.531 - 0.2) / 0.8).epsilon(1e-10));
  CHECK(bound == doctest::Approx(0.4125).epsilon(0.012));  // the published rounding uses 53%
}

TEST_CASE("garble and degarble round trips") {
  RngStream rng(3, 9);
  GarblingMatrix g = random_admissible(4, rng);
  g = estimate_gamma(g.gamma * g.gamma);  // certificates populated

  FlowMatrix m;
  m.m.resize(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m.m(i, j) = 0.2 + rng.next_double();

  SUBCASE("gamma = I leaves flows unchanged") {
    GarblingMatrix id = g;
    id.gamma = Eigen::MatrixXd::Identity(4, 4);
    CHECK((garble(m, id).m - m.m).cwiseAbs().maxCoeff() == 0.0);
    CHECK((degarble(m, id).flows.m - m.m).cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("degarble inverts garble to 1e-10") {
    FlowMatrix fwd = garble(m, g);
    DegarbleResult back = degarble(fwd, g);
    CHECK((back.flows.m - m.m).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(back.negative_mass_floored == 0.0);
    FlowMatrix fwd2 = garble(back.flows, g);
    CHECK((fwd2.m - fwd.m).cwiseAbs().maxCoeff() < 1e-10);
  }

  SUBCASE("garbling preserves total mass and symmetric margins") {
    FlowMatrix fwd = garble(m, g);
    CHECK(fwd.m.sum() == doctest::Approx(m.m.sum()).epsilon(1e-12));
    // symmetric input: detailed balance preserves occupation margins
    FlowMatrix sym;
    sym.m = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) sym.m(i, j) = g.c(i) * g.gamma(i, j) + g.c(j) * g.gamma(j, i);
    FlowMatrix gs = garble(sym, g);
    CHECK((gs.m.rowwise().sum() - sym.m.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((gs.m.colwise().sum() - sym.m.colwise().sum()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("stayer-heavy flows: garbling inflates mobility and degarbling undoes it") {
  FlowMatrix t4 = read_labeled_matrix_csv(fixture_path("table4_garbling_soc1990.csv"));
  Eigen::MatrixXd gm = t4.m / 100.0;
  for (int i = 0; i < gm.rows(); ++i) gm.row(i) /= gm.row(i).sum();
  GarblingMatrix g = estimate_gamma(gm * gm);  // recover with certificates
  const int n = int(gm.rows());

  FlowMatrix m;
  m.m = Eigen::MatrixXd::Constant(n, n, 0.1 / (10.0 * n * (n - 1)));
  for (int i = 0; i < n; ++i) m.m(i, i) = 0.9 / n;
  const double true_mob = 1.0 - m.m.diagonal().sum() / m.m.sum();
  FlowMatrix obs = garble(m, g);
  const double obs_mob = 1.0 - obs.m.diagonal().sum() / obs.m.sum();
  CHECK(obs_mob > true_mob + 0.1);  // roughly the 20%-of-stayers effect
  DegarbleResult corrected = degarble(obs, g);
  const double corr_mob = 1.0 - corrected.flows.m.diagonal().sum() / corrected.flows.m.sum();
  CHECK(corr_mob == doctest::Approx(true_mob).epsilon(1e-8));
}

TEST_CASE("net-flow attenuation: garbling a zero-diagonal net matrix adds diagonal mass") {
  FlowMatrix t3 = read_labeled_matrix_csv(fixture_path("table3_stayer_transitions_soc1990.csv"));
  GarblingMatrix g = estimate_gamma(t3);
  const int n = g.size();
  FlowMatrix net;
  net.m = Eigen::MatrixXd::Zero(n, n);
  RngStream rng(5, 17);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) net.m(i, j) = rng.next_double();
  FlowMatrix obs = garble(net, g);
  CHECK(obs.m.diagonal().sum() > 0.01 * obs.m.sum());
  const double measured_mobility = 1.0 - obs.m.diagonal().sum() / obs.m.sum();
  CHECK(measured_mobility < 1.0);  // attenuated relative to the all-mover truth
}

TEST_CASE("repeat-flow tensor: mode-wise operator equals the dense Kronecker inverse") {
  RngStream rng(31, 2);
  GarblingMatrix g = random_admissible(3, rng);
  g = estimate_gamma(g.gamma * g.gamma);
  Tensor3 m;
  m.n = 3;
  m.v = Eigen::VectorXd::Zero(27);
  for (int i = 0; i < 27; ++i) m.v(i) = rng.next_double();

  SUBCASE("gamma = I leaves the tensor unchanged") {
    GarblingMatrix id = g;
    id.gamma = Eigen::MatrixXd::Identity(3, 3);
    Tensor3 out = degarble_repeat(m, id);
    CHECK((out.v - m.v).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("round trip to 1e-9") {
    Tensor3 fwd = garble_repeat(m, g);
    Tensor3 back = degarble_repeat(fwd, g);
    CHECK((back.v - m.v).cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("dense Kronecker oracle") {
    // obs stacked as vec with index (i*n + j)*n + k; the mode-wise operator
    // multiplies each index by gamma', i.e. vec(obs) = (G (x) G (x) G)' vec(m)
    Eigen::MatrixXd kron1 = Eigen::MatrixXd::Zero(9, 9);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d) kron1(3 * a + c, 3 * b + d) = g.gamma(a, b) * g.gamma(c, d);
    Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(27, 27);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int r = 0; r < 9; ++r)
          for (int s = 0; s < 9; ++s) kron(9 * a + r, 9 * b + s) = g.gamma(a, b) * kron1(r, s);
    Tensor3 fwd = garble_repeat(m, g);
    Eigen::VectorXd oracle = kron.transpose() * m.v;
    CHECK((fwd.v - oracle).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::VectorXd inv_oracle = kron.transpose().inverse() * fwd.v;
    Tensor3 back = degarble_repeat(fwd, g);
    CHECK((back.v - inv_oracle).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("corollary: (M^I, M^D) do not identify gamma when movers have diagonal mass") {
  // two constructed (gamma, M_s, M_m) triples producing identical observables
  auto u_of = [](double g) { return 2.0 * g * (1.0 - g); };
  auto make = [&](double g, double s, double md, double a) {
    Eigen::MatrixXd gamma(2, 2), ms(2, 2), mm(2, 2);
    gamma << 1.0 - g, g, g, 1.0 - g;
    ms << s, 0.0, 0.0, s;
    mm << md, a, a, md;
    Eigen::MatrixXd mi = gamma.transpose() * (ms + mm) * gamma;
    Eigen::MatrixXd md_obs = gamma.transpose() * mm * gamma + ms;
    return std::tuple(mi, md_obs, gamma);
  };
  const double g1 = 0.10, s1 = 10.0, md1 = 2.0, a1 = 4.0;
  auto [mi1, mdo1, gam1] = make(g1, s1, md1, a1);
  // second solution: pick g2, then (s2, md2, a2) matching the observables:
  // qI - qD = u*s, qD = u*md + (1-u)*a, md + a = (total - 2 s)/2
  const double g2 = 0.15;
  const double qI = mi1(0, 1), qD = mdo1(0, 1);
  const double u2 = u_of(g2);
  const double s2 = (qI - qD) / u2;
  const double half_m2 = (mi1.sum() - 2.0 * s2) / 2.0;
  const double a2 = (qD - u2 * half_m2) / (1.0 - 2.0 * u2);
  const double md2 = half_m2 - a2;
  auto [mi2, mdo2, gam2] = make(g2, s2, md2, a2);
  REQUIRE(md2 > 0.0);
  REQUIRE(a2 > 0.0);
  CHECK((mi1 - mi2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((mdo1 - mdo2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((gam1 - gam2).cwiseAbs().maxCoeff() > 0.04);  // genuinely different garblings
}

TEST_CASE("aggregating Table 3 flows to task categories keeps a valid garbling") {
  FlowMatrix t3 = read_labeled_matrix_csv(fixture_path("table3_stayer_transitions_soc1990.csv"));
  Crosswalk cw = read_crosswalk_csv(fixture_path("crosswalk_mog1990_to_task4.csv"));
  std::vector<std::string> groups;
  std::vector<int> gi = cw.group_indices(t3.labels, &groups);
  // flow-space aggregation: weight rows by the stationary occupation masses
  Eigen::MatrixXd t = t3.m;
  for (int i = 0; i < t.rows(); ++i) t.row(i) /= t.row(i).sum();
  Eigen::VectorXd c = stationary_occ_dist(t);
  FlowMatrix flows;
  flows.labels = t3.labels;
  flows.m = c.asDiagonal() * t;
  FlowMatrix agg = aggregate_flows(flows, gi, groups);
  CHECK(agg.m.rows() == 4);
  GarblingMatrix g4 = estimate_gamma(agg);
  CHECK(g4.min_diagonal > 0.5);
  CHECK(g4.min_eigenvalue > 0.0);
}
