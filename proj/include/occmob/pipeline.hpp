#pragma once

#include <string>

#include "occmob/io.hpp"

namespace occmob {

struct SolvedModel {
  StateGrid grid;
  EquilibriumTables tables;
  SolveDiagnostics diag;
};

SolvedModel solve_model(const RunConfig& config);

// The calibrated z normalization: location shift that makes measured output
// per worker average one at the mean-A stationary cross-section.
double normalize_z_shift(const RunConfig& config);

// Loads the solved tables from cache when present (rebuilding the grid with
// the cached normalization), otherwise solves and caches.
SolvedModel load_or_solve(const RunConfig& config, const std::string& cache_path);
PanelLog simulate_model(const RunConfig& config, const SolvedModel& model);
MomentSet pipeline_moments(const RunConfig& config, const PanelLog& panel);

// plot-ready CSV exports (profiles, survival, duration shares, net-mobility bars)
void write_report_csvs(const std::string& dir, const RunConfig& config, const MomentSet& moments,
                       const ArtifactMeta& meta);

}  // namespace occmob
