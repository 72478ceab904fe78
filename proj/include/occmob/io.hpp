#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "occmob/common.hpp"
#include "occmob/equilibrium.hpp"
#include "occmob/garbling.hpp"
#include "occmob/moments.hpp"
#include "occmob/params.hpp"
#include "occmob/simulate.hpp"

namespace occmob {

// Fully resolved run configuration (defaults = Table 2 calibration).
struct RunConfig {
  ModelParams params = ModelParams::table2();
  SolveOptions solve;
  SimConfig sim;
  MomentOptions moments;
  std::string gamma_csv;      // optional category-level garbling matrix for occm
  std::string output_dir = "out";
  int threads = 0;  // 0: use OCCMOB_THREADS or hardware default

  int resolved_threads() const { return threads > 0 ? threads : default_thread_count(); }
};

// Parses JSON with layered defaults; unknown keys are rejected.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);
std::string resolved_config_json(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);

// Artifact metadata stamped into every output file.
struct ArtifactMeta {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string grids;
  std::string header_line() const;
};

ArtifactMeta make_meta(const RunConfig& config, const StateGrid& grid);

// --- CSV ---------------------------------------------------------------------

void write_labeled_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                              const std::vector<std::string>& labels, const ArtifactMeta* meta);
FlowMatrix read_labeled_matrix_csv(const std::string& path);

void write_tensor_csv(const std::string& path, const Tensor3& t,
                      const std::vector<std::string>& labels, const ArtifactMeta* meta);
Tensor3 read_tensor_csv(const std::string& path, std::vector<std::string>* labels = nullptr);

// occupation label -> group label crosswalk (columns: occupation,group)
struct Crosswalk {
  std::vector<std::string> occupations;
  std::vector<std::string> groups;  // empty group drops the occupation
  // maps flow-matrix labels to group indices; -1 drops
  std::vector<int> group_indices(const std::vector<std::string>& labels,
                                 std::vector<std::string>* group_labels) const;
};
Crosswalk read_crosswalk_csv(const std::string& path);

// --- binary table cache --------------------------------------------------------

void save_tables(const std::string& path, const EquilibriumTables& tables, const StateGrid& grid,
                 const ArtifactMeta& meta);
EquilibriumTables load_tables(const std::string& path, const StateGrid& grid,
                              std::uint64_t expect_config_hash);
double read_cached_shift(const std::string& path);

// --- moments / reports -----------------------------------------------------------

void write_moments_json(const std::string& path, const MomentSet& moments,
                        const ArtifactMeta& meta);
void write_moments_csv(const std::string& path, const MomentSet& moments,
                       const ArtifactMeta& meta);
MomentSet read_moments_json(const std::string& path);

void write_cutoffs_csv(const std::string& path, const EquilibriumTables& tables,
                       const StateGrid& grid, const ModelParams& params,
                       const ArtifactMeta& meta);
void write_tightness_csv(const std::string& path, const EquilibriumTables& tables,
                         const StateGrid& grid, const ModelParams& params,
                         const ArtifactMeta& meta);

// columnar panel persistence (schema-versioned)
void save_panel(const std::string& path, const PanelLog& log, const ArtifactMeta& meta);
PanelLog load_panel(const std::string& path, std::uint64_t expect_config_hash);

std::string fixture_path(const std::string& name);

}  // namespace occmob
