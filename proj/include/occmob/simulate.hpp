#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "occmob/equilibrium.hpp"
#include "occmob/grids.hpp"
#include "occmob/spells.hpp"

namespace occmob {

struct SimConfig {
  int windows = 10;
  int years = 30;
  int agents = 30000;
  int burnin_years = 10;
  std::uint64_t seed = 12345;
  int wage_sample_stride = 4;  // sample wages from every stride-th agent, once a year
  int blocks = 64;             // fixed agent partition; determinism across thread counts
  int threads = 1;
  int repeat_window_weeks = 234;
  bool antithetic_windows = true;  // odd windows use the antithetic twin path
  bool record_weekly = false;      // keep full weekly histories (small runs only)

  int measure_weeks() const { return years * 52; }
  int burnin_weeks() const { return burnin_years * 52; }
  int total_weeks() const { return measure_weeks() + burnin_weeks(); }
};

// Reproducible aggregate-state path from the ergodic start. The antithetic
// variant flips every uniform draw; pairing each window with its antithetic
// twin removes most of the window-mean sampling noise of the near-unit-root
// aggregate process.
std::vector<int> draw_aggregate_path(const MarkovChain& chain, int weeks, std::uint64_t seed,
                                     std::uint64_t stream = 0, bool antithetic = false);

struct WageSample {
  float log_wage;
  float occ_tenure_years;
  float experience_years;
  float age_years;
};

// Monthly stock-based transition counts (months are 4-week blocks).
struct MonthAgg {
  std::int64_t u_start = 0;       // EUE unemployed at month start
  std::int64_t e_start = 0;
  std::int64_t ue = 0;            // employed at next month start among u_start
  std::int64_t eu = 0;            // unemployed at next month start among e_start
  std::int64_t e_young = 0, sep_young = 0;
  std::int64_t e_prime = 0, sep_prime = 0;
  std::int64_t e_recent = 0, sep_recent = 0;  // job tenure <= 52 weeks at month start
};

// One simulated measurement window.
struct WindowPanel {
  int window_id = 0;
  int measure_weeks = 0;
  int spell_week_offset = 0;  // spells carry absolute window weeks; measured span starts here
  std::vector<int> a_path;    // A index per measured week

  // weekly aggregates over the measured span
  std::vector<double> u_stock;  // EUE unemployed (jobless >= 4 weeks)
  std::vector<double> e_stock;
  std::vector<double> y_sum;       // output of the employed
  std::vector<double> vacancies;   // sum of submarket theta over the matching pool

  std::vector<MonthAgg> months;

  // quarterly incomplete-duration distribution (ongoing months 1-2/1-4/5-8/9-12/13-18)
  std::vector<std::array<std::int64_t, 5>> qtr_duration_bins;
  std::vector<std::int64_t> qtr_unemployed_1_18;

  std::vector<SpellRecord> spells;
  std::vector<HireRecord> hires;
  std::vector<WageSample> wage_samples;

  // agents employed at the measurement start and whether they had an EUE spell
  // within three years
  std::int64_t employed_at_start = 0;
  std::int64_t unemployed_within_3y = 0;

  double realloc_attempts = 0.0;
  double realloc_successes = 0.0;
  double realloc_cost_paid = 0.0;

  // full weekly histories when SimConfig::record_weekly is set
  std::vector<std::vector<AgentWeek>> weekly;
};

struct PanelLog {
  std::vector<WindowPanel> windows;
  SimConfig config;
};

PanelLog simulate_agents(const EquilibriumTables& tables, const StateGrid& grid,
                         const ModelParams& params, const SimConfig& config);

// Single-window variant with an externally supplied A path (length must cover
// burn-in plus measurement). An initial cross-section, when given, replaces
// the default all-employed age-heuristic start.
struct CrossSectionInit {
  const Eigen::ArrayXd* u_entrant = nullptr;
  const Eigen::ArrayXd* u_experienced = nullptr;
  const Eigen::ArrayXd* e = nullptr;
};

WindowPanel simulate_window(const EquilibriumTables& tables, const StateGrid& grid,
                            const ModelParams& params, const SimConfig& config, int window_id,
                            const std::vector<int>& a_path,
                            const CrossSectionInit& init = {});

}  // namespace occmob
