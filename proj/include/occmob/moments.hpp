#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "occmob/garbling.hpp"
#include "occmob/simulate.hpp"
#include "occmob/spells.hpp"

namespace occmob {

struct Moment {
  double value = 0.0;
  long long n = 0;  // sample size behind the moment
  std::string provenance;
  bool missing = false;
};

struct MomentSet {
  std::map<std::string, Moment> m;

  void set(const std::string& name, double value, long long n, const std::string& prov) {
    m[name] = Moment{value, n, prov, false};
  }
  void set_missing(const std::string& name, const std::string& prov) {
    m[name] = Moment{0.0, 0, prov, true};
  }
  bool has(const std::string& name) const {
    auto it = m.find(name);
    return it != m.end() && !it->second.missing;
  }
  double value(const std::string& name) const { return m.at(name).value; }
};

// Quarterly series with transform provenance.
struct TimeSeries {
  std::vector<double> v;
  std::vector<char> interpolated;  // gap quarters filled linearly, dropped from statistics
  std::string transforms;
};

// Interpolates interior NaN gaps linearly and records which entries were filled.
TimeSeries fill_gaps(const std::vector<double>& raw);

// Exact HP filter via a banded Cholesky solve of (I + lambda D'D) trend = y.
struct HpResult {
  std::vector<double> trend;
  std::vector<double> cycle;
};
HpResult hp_filter(const std::vector<double>& series, double lambda = 1600.0);

// Centered moving average; the clipped edges are dropped by the caller.
std::vector<double> centered_ma(const std::vector<double>& v, int window);

// OLS with an intercept; throws on rank deficiency.
Eigen::VectorXd ols(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& y);

// --- spell statistics ------------------------------------------------------

enum class MoverLevel { Mog, Category };

struct ProfilePoint {
  int at_least_months = 0;
  double share = 0.0;
  long long n = 0;
  bool missing = false;
};

using SpellFilter = std::function<bool(const SpellRecord&)>;

std::vector<ProfilePoint> mobility_duration_profile(const std::vector<SpellRecord>& spells,
                                                    const std::vector<int>& at_least,
                                                    MoverLevel level,
                                                    const SpellFilter& filter = nullptr);

struct MobilityRates {
  Eigen::VectorXd gross;     // per occupation, movers out of spells originating there
  Eigen::VectorXd net;       // per occupation, (in - out)/spells originating there
  double aggregate_gross = 0.0;
  double aggregate_net = 0.0;     // 0.5 sum |in - out| / all moves denominator EUE
  double aggregate_excess = 0.0;  // sum min(in, out) / EUE
  double identity_gap = 0.0;      // |sum min + 0.5 sum|diff| - total moves|
  long long spell_count = 0;
};

MobilityRates gross_net_excess(const Eigen::MatrixXd& category_flows, double total_spells);

struct SurvivalCurve {
  std::vector<int> marks;
  std::vector<double> survival;  // P(duration > mark months)
  std::vector<double> hazard;    // per-month exit probability, months 1..max
  long long n = 0;
};

SurvivalCurve survival_and_hazard(const std::vector<SpellRecord>& spells,
                                  const std::vector<int>& marks,
                                  const SpellFilter& filter = nullptr);

struct RepeatMobility {
  double stay_after_stay = 0.0;
  double move_after_move = 0.0;
  long long pairs_stay = 0, pairs_move = 0;
};

RepeatMobility repeat_mobility(const std::vector<SpellRecord>& spells, int repeat_window_weeks,
                               MoverLevel level);

struct TenureReturns {
  double ret_5yr = 0.0;
  double ret_10yr = 0.0;
  long long n = 0;
};

// log wage on a quadratic in occupational tenure with quadratic experience
// controls; returns the implied cumulative 5- and 10-year returns.
TenureReturns returns_to_tenure(const std::vector<WageSample>& samples);

enum class MinMode { Exact, Percentile1 };
double mm_ratio(const std::vector<double>& accepted, MinMode mode = MinMode::Exact);

// --- cyclical statistics ---------------------------------------------------

struct MomentOptions {
  std::optional<GarblingMatrix> gamma;  // category-level garbling overlay for occm
  bool garble_flows = false;            // apply gamma to simulated flows before occm
  MoverLevel occm_level = MoverLevel::Mog;
  bool recession_median_split = false;  // default: top/bottom third of HP log u
  MinMode mm_min_mode = MinMode::Exact;
  double hp_lambda = 1600.0;
  int ma_window = 5;
};

// Full named battery from a simulated panel.
MomentSet compute_moments(const PanelLog& log, const ModelParams& params,
                          const MomentOptions& options = {});

}  // namespace occmob
