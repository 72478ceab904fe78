#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "occmob/moments.hpp"

namespace occmob {

enum class ParamTransform { Identity, Log, Logit };

struct FreeParam {
  std::string name;  // must map to exactly one ModelParams field
  double lower = 0.0;
  double upper = 1.0;
  double start = 0.5;
  ParamTransform transform = ParamTransform::Identity;
};

struct TargetMoment {
  std::string name;
  double value = 0.0;
  double weight = 1.0;
};

struct SmmSpec {
  std::vector<FreeParam> free_params;
  std::vector<TargetMoment> targets;
  double scale_floor = 1e-3;  // absolute floor for the percent-deviation scaling
  int multistarts = 3;
  std::uint64_t seed = 12345;  // common random numbers across evaluations

  void validate() const;
};

struct MomentBreakdown {
  std::string name;
  double target = 0.0;
  double simulated = 0.0;
  double contribution = 0.0;
  bool missing = false;
};

struct SmmLoss {
  double loss = 0.0;
  bool penalized = false;  // solver failure mapped to a large finite penalty
  std::vector<MomentBreakdown> breakdown;
};

// Pure part: weighted squared percent deviations of simulated vs target moments.
// Missing simulated moments contribute the penalty share.
SmmLoss smm_objective(const MomentSet& simulated, const SmmSpec& spec);

// Applies a named free parameter to a ModelParams instance.
void apply_free_param(ModelParams& params, const std::string& name, double value);

struct TracePoint {
  std::vector<double> theta;
  double loss = 0.0;
  double best_so_far = 0.0;
};

struct CalibrationResult {
  std::vector<double> best_theta;
  double best_loss = 0.0;
  std::vector<TracePoint> trace;
  int evaluations = 0;
};

using Objective = std::function<double(const std::vector<double>&)>;

// Derivative-free simplex search with bound transforms and multistart;
// deterministic given the spec seed. Budget counts objective evaluations.
CalibrationResult calibrate(const Objective& objective, const SmmSpec& spec, int budget);

}  // namespace occmob
