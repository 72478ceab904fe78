#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "occmob/common.hpp"
#include "occmob/pipeline.hpp"
#include "occmob/statics_lab.hpp"
#include "occmob/smm.hpp"

using namespace occmob;
namespace fs = std::filesystem;

namespace {

RunConfig load_or_default(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return load_config(path);
}

void echo_config(const RunConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir + "/resolved_config.json");
  require(out.good(), ErrorCode::Io, "cannot write resolved config");
  out << resolved_config_json(cfg) << "\n";
}

int cmd_solve(const RunConfig& cfg) {
  echo_config(cfg, cfg.output_dir);
  SolvedModel m = solve_model(cfg);
  ArtifactMeta meta = make_meta(cfg, m.grid);
  save_tables(cfg.output_dir + "/tables.bin", m.tables, m.grid, meta);
  write_cutoffs_csv(cfg.output_dir + "/cutoffs.csv", m.tables, m.grid, cfg.params, meta);
  write_tightness_csv(cfg.output_dir + "/tightness.csv", m.tables, m.grid, cfg.params, meta);
  std::printf("solved in %d iterations, last step %.3e; identities: free-entry %.2e, split %.2e\n",
              m.diag.iterations, m.diag.last_delta, m.diag.free_entry_resid, m.diag.split_resid);
  return 0;
}

int cmd_simulate(const RunConfig& cfg) {
  echo_config(cfg, cfg.output_dir);
  SolvedModel m = load_or_solve(cfg, cfg.output_dir + "/tables.bin");
  PanelLog log = simulate_model(cfg, m);
  save_panel(cfg.output_dir + "/panel.bin", log, make_meta(cfg, m.grid));
  long long spells = 0;
  for (const auto& w : log.windows) spells += (long long)w.spells.size();
  std::printf("simulated %d windows, %lld completed spells\n", int(log.windows.size()), spells);
  return 0;
}

int cmd_moments(const RunConfig& cfg) {
  echo_config(cfg, cfg.output_dir);
  StateGrid grid = build_state_grid(cfg.params);
  const std::string panel_path = cfg.output_dir + "/panel.bin";
  require(fs::exists(panel_path), ErrorCode::Io,
          "missing panel artifact " + panel_path + "; run `occmob simulate` first");
  PanelLog log = load_panel(panel_path, config_hash(cfg));
  log.config = cfg.sim;
  MomentSet ms = pipeline_moments(cfg, log);
  ArtifactMeta meta = make_meta(cfg, grid);
  write_moments_json(cfg.output_dir + "/moments.json", ms, meta);
  write_moments_csv(cfg.output_dir + "/moments.csv", ms, meta);
  write_report_csvs(cfg.output_dir, cfg, ms, meta);
  std::printf("wrote %d moments\n", int(ms.m.size()));
  return 0;
}

int cmd_statics(const RunConfig& cfg) {
  echo_config(cfg, cfg.output_dir);
  StationaryParams p;
  p.beta = cfg.params.beta();
  p.eta = cfg.params.eta;
  p.b = 0.7;
  p.c = 1.0;
  p.k = 2.0;
  p.gamma = 0.95;
  const int n = 121;
  p.z_levels = Eigen::VectorXd::LinSpaced(n, 0.5, 1.5);
  p.F = Eigen::VectorXd::Constant(n, 1.0 / n);
  std::ofstream out(cfg.output_dir + "/statics_sweep.csv");
  require(out.good(), ErrorCode::Io, "cannot write statics sweep");
  out << "param,value,W_s_minus_R,z_s_minus_z_r,z_s,z_r\n";
  for (double scale : {0.90, 0.95, 1.00, 1.05, 1.10}) {
    for (auto [tag, which] : {std::pair{"c", LabParam::C}, {"b", LabParam::B},
                              {"gamma", LabParam::Gamma}, {"x", LabParam::X}}) {
      StationaryParams q = p;
      switch (which) {
        case LabParam::C: q.c = p.c * scale; break;
        case LabParam::B: q.b = p.b * scale; break;
        case LabParam::Gamma: q.gamma = std::min(p.gamma * scale, 1.0); break;
        case LabParam::X: q.x = p.x * scale; break;
      }
      StationarySolution s = solve_stationary(q);
      double value = which == LabParam::C   ? q.c
                     : which == LabParam::B ? q.b
                     : which == LabParam::Gamma ? q.gamma
                                                : q.x;
      out << tag << "," << value << "," << (s.W_s - s.R) << "," << (s.z_s - s.z_r) << "," << s.z_s
          << "," << s.z_r << "\n";
    }
  }
  std::puts("wrote statics_sweep.csv");
  return 0;
}

int cmd_gamma(const std::string& mode, const std::string& input, const std::string& apply_to,
              const std::string& output, const std::string& aggregate) {
  FlowMatrix in = read_labeled_matrix_csv(input);
  if (!aggregate.empty()) {
    Crosswalk cw = read_crosswalk_csv(aggregate);
    std::vector<std::string> groups;
    std::vector<int> gi = cw.group_indices(in.labels, &groups);
    Eigen::MatrixXd t = in.m;
    for (int i = 0; i < t.rows(); ++i) t.row(i) /= t.row(i).sum();
    Eigen::VectorXd c = stationary_occ_dist(t);
    FlowMatrix flows;
    flows.labels = in.labels;
    flows.m = c.asDiagonal() * t;
    in = aggregate_flows(flows, gi, groups);
  }
  if (mode == "estimate") {
    GarblingMatrix g = estimate_gamma(in);
    write_labeled_matrix_csv(output, g.gamma, in.labels, nullptr);
    std::printf(
        "gamma: %dx%d min diag %.4f, eigenvalues [%.4f, %.4f], detailed-balance %.2e, "
        "symmetrization residual %.2e\n",
        g.size(), g.size(), g.min_diagonal, g.min_eigenvalue, g.max_eigenvalue,
        g.detailed_balance_residual, g.symmetrization_residual);
    return 0;
  }
  if (mode == "validate") {
    Eigen::MatrixXd t = in.m;
    for (int i = 0; i < t.rows(); ++i) t.row(i) /= t.row(i).sum();
    AssumptionReport r = validate_assumptions(t);
    std::printf("min diagonal %.4f (A3 %s), detailed-balance residual %.3e, eigenvalues "
                "[%.4f, %.4f] (%s)\n",
                r.min_diagonal, r.a3_pass ? "pass" : "FAIL", r.detailed_balance_residual,
                r.min_eigenvalue, r.max_eigenvalue,
                r.eigenvalues_admissible ? "admissible" : "NOT admissible");
    return 0;
  }
  require(!apply_to.empty(), ErrorCode::Config, "gamma " + mode + " requires --flows");
  GarblingMatrix g = estimate_gamma(in);
  FlowMatrix flows = read_labeled_matrix_csv(apply_to);
  if (mode == "apply") {
    write_labeled_matrix_csv(output, garble(flows, g).m, flows.labels, nullptr);
  } else if (mode == "invert") {
    DegarbleResult r = degarble(flows, g);
    write_labeled_matrix_csv(output, r.flows.m, flows.labels, nullptr);
    if (r.negative_mass_floored > 0.0)
      std::printf("floored negative mass %.3e and renormalized\n", r.negative_mass_floored);
  } else if (mode == "repeat") {
    std::vector<std::string> labels;
    Tensor3 t = read_tensor_csv(apply_to, &labels);
    Tensor3 r = degarble_repeat(t, g);
    write_tensor_csv(output, r, labels, nullptr);
  } else {
    throw Error(ErrorCode::Config, "unknown gamma mode " + mode);
  }
  return 0;
}

int cmd_calibrate(const RunConfig& cfg, int budget) {
  echo_config(cfg, cfg.output_dir);
  // desk-scale self-contained spec: three structural parameters against the
  // headline moment battery at the configured simulation scale
  SmmSpec spec;
  spec.seed = cfg.sim.seed;
  spec.free_params = {
      {"b", 0.5, 0.95, cfg.params.b, ParamTransform::Logit},
      {"c", 0.5, 40.0, cfg.params.c, ParamTransform::Log},
      {"sigma_z", 0.002, 0.02, cfg.params.z_proc.sigma, ParamTransform::Log},
  };
  spec.targets = {
      {"mean_u", 0.035, 1.0},          {"gross_task_mobility", 0.289, 1.0},
      {"gross_mog_mobility", 0.445, 1.0}, {"repeat_stay_after_stay", 0.634, 1.0},
      {"profile_mog_m9", 0.546, 1.0},  {"udur_ratio_movers_stayers", 1.139, 1.0},
  };
  std::ofstream trace(cfg.output_dir + "/calibration_trace.csv");
  require(trace.good(), ErrorCode::Io, "cannot write calibration trace");
  trace << "eval,b,c,sigma_z,loss,best\n";
  int eval_id = 0;
  Objective obj = [&](const std::vector<double>& theta) {
    RunConfig local = cfg;
    apply_free_param(local.params, "b", theta[0]);
    apply_free_param(local.params, "c", theta[1]);
    apply_free_param(local.params, "sigma_z", theta[2]);
    double loss;
    try {
      SolvedModel m = solve_model(local);
      PanelLog log = simulate_model(local, m);
      MomentSet ms = pipeline_moments(local, log);
      loss = smm_objective(ms, spec).loss;
    } catch (const Error& e) {
      std::fprintf(stderr, "evaluation penalized: %s\n", e.what());
      loss = 1e6;
    }
    ++eval_id;
    trace << eval_id << "," << theta[0] << "," << theta[1] << "," << theta[2] << "," << loss
          << ",\n";
    return loss;
  };
  CalibrationResult res = calibrate(obj, spec, budget);
  std::printf("best loss %.6f at b=%.4f c=%.4f sigma_z=%.5f after %d evaluations\n", res.best_loss,
              res.best_theta[0], res.best_theta[1], res.best_theta[2], res.evaluations);
  return 0;
}

int cmd_report(const RunConfig& cfg) {
  StateGrid grid = build_state_grid(cfg.params);
  const std::string path = cfg.output_dir + "/moments.json";
  require(fs::exists(path), ErrorCode::Io, "missing " + path + "; run `occmob moments` first");
  MomentSet ms = read_moments_json(path);
  std::printf("%-32s %14s %10s\n", "moment", "value", "n");
  for (const auto& [name, mom] : ms.m) {
    if (mom.missing)
      std::printf("%-32s %14s %10s\n", name.c_str(), "missing", "-");
    else
      std::printf("%-32s %14.6f %10lld\n", name.c_str(), mom.value, mom.n);
  }
  (void)grid;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"occmob: multi-occupation business-cycle labor market model"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration file");

  auto* solve = app.add_subcommand("solve", "solve the equilibrium and export cutoffs");
  auto* simulate = app.add_subcommand("simulate", "simulate worker panels");
  auto* moments = app.add_subcommand("moments", "compute the moment battery from a panel");
  auto* statics = app.add_subcommand("statics", "stationary comparative-statics sweep");
  auto* report = app.add_subcommand("report", "print the moment battery");

  auto* gamma = app.add_subcommand("gamma", "garbling-matrix estimation and correction");
  std::string gmode, ginput, gflows, goutput = "gamma_out.csv", gaggregate;
  gamma->add_option("mode", gmode, "estimate|apply|invert|repeat|validate")->required();
  gamma->add_option("--input", ginput, "stayer transition or flow matrix CSV")->required();
  gamma->add_option("--flows", gflows, "flow matrix / tensor CSV to correct");
  gamma->add_option("--output", goutput, "output CSV");
  gamma->add_option("--aggregate", gaggregate, "crosswalk CSV for flow-space aggregation");

  auto* calibrate_cmd = app.add_subcommand("calibrate", "simulated method of moments");
  int budget = 60;
  calibrate_cmd->add_option("--budget", budget, "objective evaluation budget");

  try {
    app.parse(argc, argv);
    RunConfig cfg = load_or_default(config_path);
    if (solve->parsed()) return cmd_solve(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (moments->parsed()) return cmd_moments(cfg);
    if (statics->parsed()) return cmd_statics(cfg);
    if (report->parsed()) return cmd_report(cfg);
    if (gamma->parsed()) return cmd_gamma(gmode, ginput, gflows, goutput, gaggregate);
    if (calibrate_cmd->parsed()) return cmd_calibrate(cfg, budget);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return int(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return int(ErrorCode::Numeric);
  }
  return 0;
}
