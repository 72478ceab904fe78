#include <doctest.h>

#include <cmath>

#include "occmob/common.hpp"
#include "occmob/smm.hpp"

using namespace occmob;

TEST_CASE("objective: self-target gives zero loss, perturbations are positive") {
  SmmSpec spec;
  spec.free_params = {{"b", 0.1, 1.0, 0.8, ParamTransform::Identity}};
  spec.targets = {{"mean_u", 0.036, 1.0}, {"gross_task_mobility", 0.28, 1.0}};

  MomentSet self;
  self.set("mean_u", 0.036, 100, "");
  self.set("gross_task_mobility", 0.28, 100, "");
  CHECK(smm_objective(self, spec).loss == doctest::Approx(0.0));

  MomentSet off;
  off.set("mean_u", 0.036 * 1.1, 100, "");
  off.set("gross_task_mobility", 0.28, 100, "");
  SmmLoss l = smm_objective(off, spec);
  CHECK(l.loss > 0.0);
  CHECK(l.breakdown[0].contribution == doctest::Approx(0.01).epsilon(1e-9));  // (10%)^2

  MomentSet missing;
  missing.set("mean_u", 0.036, 100, "");
  SmmLoss lm = smm_objective(missing, spec);
  CHECK(lm.penalized);
  CHECK(lm.loss > 1.0);
}

TEST_CASE("scale floor protects near-zero targets") {
  SmmSpec spec;
  spec.free_params = {{"b", 0.1, 1.0, 0.8, ParamTransform::Identity}};
  spec.targets = {{"net_NRM_mean", 0.0, 1.0}};
  MomentSet ms;
  ms.set("net_NRM_mean", 0.001, 10, "");
  SmmLoss l = smm_objective(ms, spec);
  CHECK(l.loss == doctest::Approx(1.0).epsilon(1e-9));  // (0.001/1e-3)^2
}

TEST_CASE("calibrate: 1-D quadratic converges within 200 evaluations") {
  SmmSpec spec;
  spec.free_params = {{"b", -10.0, 10.0, 3.0, ParamTransform::Identity}};
  spec.multistarts = 2;
  spec.targets = {{"anything", 0.0, 1.0}};
  Objective obj = [](const std::vector<double>& theta) {
    const double d = theta[0] - 1.234;
    return d * d;
  };
  CalibrationResult res = calibrate(obj, spec, 200);
  CHECK(res.evaluations <= 200);
  CHECK(res.best_loss < 1e-6);
  CHECK(std::abs(res.best_theta[0] - 1.234) < 1e-3);
}

TEST_CASE("calibrate: zero budget returns the start point") {
  SmmSpec spec;
  spec.free_params = {{"b", 0.0, 1.0, 0.37, ParamTransform::Identity}};
  spec.targets = {{"anything", 0.0, 1.0}};
  Objective obj = [](const std::vector<double>&) { return 1.0; };
  CalibrationResult res = calibrate(obj, spec, 0);
  CHECK(res.best_theta[0] == doctest::Approx(0.37));
  CHECK(res.evaluations == 0);
}

TEST_CASE("calibrate: best-so-far is nonincreasing and runs are deterministic") {
  SmmSpec spec;
  spec.free_params = {{"b", -5.0, 5.0, 2.0, ParamTransform::Identity},
                      {"c", 0.1, 10.0, 1.0, ParamTransform::Log}};
  spec.multistarts = 3;
  spec.seed = 7;
  spec.targets = {{"anything", 0.0, 1.0}};
  Objective obj = [](const std::vector<double>& t) {
    return (t[0] - 0.5) * (t[0] - 0.5) + std::pow(std::log(t[1] / 2.0), 2);
  };
  CalibrationResult a = calibrate(obj, spec, 300);
  CalibrationResult b = calibrate(obj, spec, 300);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].loss == b.trace[i].loss);
    if (i > 0) CHECK(a.trace[i].best_so_far <= a.trace[i - 1].best_so_far);
  }
  CHECK(std::abs(a.best_theta[0] - 0.5) < 1e-4);
  CHECK(std::abs(a.best_theta[1] - 2.0) < 1e-3);
}

TEST_CASE("transforms respect bounds") {
  SmmSpec spec;
  spec.free_params = {{"b", 0.2, 0.9, 0.5, ParamTransform::Logit},
                      {"c", 0.01, 100.0, 1.0, ParamTransform::Log}};
  spec.multistarts = 4;
  spec.targets = {{"anything", 0.0, 1.0}};
  Objective obj = [&](const std::vector<double>& t) {
    CHECK(t[0] >= 0.2);
    CHECK(t[0] <= 0.9);
    CHECK(t[1] >= 0.01);
    CHECK(t[1] <= 100.0);
    return std::abs(t[0] - 0.4) + std::abs(std::log(t[1]));
  };
  calibrate(obj, spec, 150);
}

TEST_CASE("apply_free_param maps names onto structural fields") {
  ModelParams p = ModelParams::table2();
  apply_free_param(p, "b", 0.77);
  apply_free_param(p, "sigma_z", 0.009);
  apply_free_param(p, "x3", 1.5);
  CHECK(p.b == 0.77);
  CHECK(p.z_proc.sigma == 0.009);
  CHECK(p.x_levels(2) == 1.5);
  CHECK_THROWS_AS(apply_free_param(p, "nonsense", 1.0), Error);
}
