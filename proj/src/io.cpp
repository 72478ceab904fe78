#include "occmob/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "occmob/common.hpp"

namespace occmob {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    require(ok, ErrorCode::Config, "config: unknown key '" + it.key() + "' in " + where);
  }
}

double get_num(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Config, std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  check_keys(j, {"params", "solve", "simulate", "moments", "threads", "output_dir"}, "root");

  if (j.contains("params")) {
    const json& p = j.at("params");
    check_keys(p,
               {"b", "k", "eta", "c", "nu", "delta_L", "delta_H", "gamma_d",
                "mean_years_to_upgrade", "annual_interest", "working_life_years", "x_levels", "z",
                "A", "z_norm_mode", "occupations", "init_occ_shares", "exclude_own_category"},
               "params");
    ModelParams& m = cfg.params;
    m.b = get_num(p, "b", m.b);
    m.k = get_num(p, "k", m.k);
    m.eta = get_num(p, "eta", m.eta);
    m.c = get_num(p, "c", m.c);
    m.nu = get_num(p, "nu", m.nu);
    m.delta_L = get_num(p, "delta_L", m.delta_L);
    m.delta_H = get_num(p, "delta_H", m.delta_H);
    m.gamma_d = get_num(p, "gamma_d", m.gamma_d);
    m.mean_years_to_upgrade = get_num(p, "mean_years_to_upgrade", m.mean_years_to_upgrade);
    m.annual_interest = get_num(p, "annual_interest", m.annual_interest);
    m.working_life_years = get_num(p, "working_life_years", m.working_life_years);
    if (p.contains("x_levels")) {
      auto v = p.at("x_levels").get<std::vector<double>>();
      m.x_levels = Eigen::Map<Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
    }
    auto read_ar1 = [&](const char* key, Ar1Spec& spec) {
      if (!p.contains(key)) return;
      const json& a = p.at(key);
      check_keys(a, {"rho", "sigma", "n", "coverage", "location_shift"}, key);
      spec.rho = get_num(a, "rho", spec.rho);
      spec.sigma = get_num(a, "sigma", spec.sigma);
      spec.n_points = int(get_num(a, "n", spec.n_points));
      spec.coverage = get_num(a, "coverage", spec.coverage);
      spec.location_shift = get_num(a, "location_shift", spec.location_shift);
    };
    read_ar1("z", m.z_proc);
    read_ar1("A", m.a_proc);
    if (p.contains("z_norm_mode")) {
      const std::string mode = p.at("z_norm_mode").get<std::string>();
      require(mode == "auto" || mode == "explicit", ErrorCode::Config,
              "config: z_norm_mode must be auto or explicit");
      m.z_norm_mode = mode == "auto" ? ZNormMode::Auto : ZNormMode::Explicit;
    }
    if (p.contains("exclude_own_category"))
      m.exclude_own_category = p.at("exclude_own_category").get<bool>();
    if (p.contains("occupations")) {
      m.occupations.clear();
      for (const json& o : p.at("occupations")) {
        check_keys(o, {"id", "p_bar", "epsilon", "psi", "alpha"}, "occupations[]");
        OccupationSpec os;
        os.id = o.at("id").get<std::string>();
        os.p_bar = get_num(o, "p_bar", 1.0);
        os.epsilon = get_num(o, "epsilon", 1.0);
        os.psi = get_num(o, "psi", 0.0);
        auto a = o.at("alpha").get<std::vector<double>>();
        os.alpha_row = Eigen::Map<Eigen::VectorXd>(a.data(), Eigen::Index(a.size()));
        m.occupations.push_back(os);
      }
    }
    if (p.contains("init_occ_shares")) {
      auto v = p.at("init_occ_shares").get<std::vector<double>>();
      m.init_occ_shares = Eigen::Map<Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
    }
  }
  if (j.contains("solve")) {
    const json& s = j.at("solve");
    check_keys(s, {"tol", "max_iter", "init_from_production"}, "solve");
    cfg.solve.tol = get_num(s, "tol", cfg.solve.tol);
    cfg.solve.max_iter = int(get_num(s, "max_iter", cfg.solve.max_iter));
    if (s.contains("init_from_production"))
      cfg.solve.init_from_production = s.at("init_from_production").get<bool>();
  }
  if (j.contains("simulate")) {
    const json& s = j.at("simulate");
    check_keys(s,
               {"windows", "years", "agents", "burnin_years", "seed", "wage_sample_stride",
                "blocks", "repeat_window_weeks", "record_weekly", "antithetic_windows"},
               "simulate");
    cfg.sim.windows = int(get_num(s, "windows", cfg.sim.windows));
    cfg.sim.years = int(get_num(s, "years", cfg.sim.years));
    cfg.sim.agents = int(get_num(s, "agents", cfg.sim.agents));
    cfg.sim.burnin_years = int(get_num(s, "burnin_years", cfg.sim.burnin_years));
    cfg.sim.seed = std::uint64_t(get_num(s, "seed", double(cfg.sim.seed)));
    cfg.sim.wage_sample_stride = int(get_num(s, "wage_sample_stride", cfg.sim.wage_sample_stride));
    cfg.sim.blocks = int(get_num(s, "blocks", cfg.sim.blocks));
    cfg.sim.repeat_window_weeks =
        int(get_num(s, "repeat_window_weeks", cfg.sim.repeat_window_weeks));
    if (s.contains("record_weekly")) cfg.sim.record_weekly = s.at("record_weekly").get<bool>();
    if (s.contains("antithetic_windows"))
      cfg.sim.antithetic_windows = s.at("antithetic_windows").get<bool>();
  }
  if (j.contains("moments")) {
    const json& s = j.at("moments");
    check_keys(s, {"occm_level", "garble_flows", "recession_median_split", "mm_min_mode",
                   "gamma_csv"},
               "moments");
    if (s.contains("occm_level")) {
      const std::string lvl = s.at("occm_level").get<std::string>();
      require(lvl == "mog" || lvl == "category", ErrorCode::Config,
              "config: occm_level must be mog or category");
      cfg.moments.occm_level = lvl == "mog" ? MoverLevel::Mog : MoverLevel::Category;
    }
    if (s.contains("garble_flows")) cfg.moments.garble_flows = s.at("garble_flows").get<bool>();
    if (s.contains("recession_median_split"))
      cfg.moments.recession_median_split = s.at("recession_median_split").get<bool>();
    if (s.contains("mm_min_mode")) {
      const std::string mm = s.at("mm_min_mode").get<std::string>();
      require(mm == "exact" || mm == "p1", ErrorCode::Config,
              "config: mm_min_mode must be exact or p1");
      cfg.moments.mm_min_mode = mm == "exact" ? MinMode::Exact : MinMode::Percentile1;
    }
    if (s.contains("gamma_csv")) cfg.gamma_csv = s.at("gamma_csv").get<std::string>();
  }
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();

  cfg.params.validate();
  cfg.solve.threads = cfg.resolved_threads();
  cfg.sim.threads = cfg.resolved_threads();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string resolved_config_json(const RunConfig& c) {
  json j;
  const ModelParams& m = c.params;
  j["params"]["b"] = m.b;
  j["params"]["k"] = m.k;
  j["params"]["eta"] = m.eta;
  j["params"]["c"] = m.c;
  j["params"]["nu"] = m.nu;
  j["params"]["delta_L"] = m.delta_L;
  j["params"]["delta_H"] = m.delta_H;
  j["params"]["gamma_d"] = m.gamma_d;
  j["params"]["mean_years_to_upgrade"] = m.mean_years_to_upgrade;
  j["params"]["annual_interest"] = m.annual_interest;
  j["params"]["working_life_years"] = m.working_life_years;
  j["params"]["x_levels"] = std::vector<double>(m.x_levels.data(), m.x_levels.data() + m.x_levels.size());
  for (const char* k : {"z", "A"}) {
    const Ar1Spec& s = std::string(k) == "z" ? m.z_proc : m.a_proc;
    j["params"][k]["rho"] = s.rho;
    j["params"][k]["sigma"] = s.sigma;
    j["params"][k]["n"] = s.n_points;
    j["params"][k]["coverage"] = s.coverage;
    j["params"][k]["location_shift"] = s.location_shift;
  }
  j["params"]["z_norm_mode"] = m.z_norm_mode == ZNormMode::Auto ? "auto" : "explicit";
  j["params"]["exclude_own_category"] = m.exclude_own_category;
  for (const auto& o : m.occupations) {
    json jo;
    jo["id"] = o.id;
    jo["p_bar"] = o.p_bar;
    jo["epsilon"] = o.epsilon;
    jo["psi"] = o.psi;
    jo["alpha"] = std::vector<double>(o.alpha_row.data(), o.alpha_row.data() + o.alpha_row.size());
    j["params"]["occupations"].push_back(jo);
  }
  j["params"]["init_occ_shares"] = std::vector<double>(
      m.init_occ_shares.data(), m.init_occ_shares.data() + m.init_occ_shares.size());
  j["solve"]["tol"] = c.solve.tol;
  j["solve"]["max_iter"] = c.solve.max_iter;
  j["solve"]["init_from_production"] = c.solve.init_from_production;
  j["simulate"]["windows"] = c.sim.windows;
  j["simulate"]["years"] = c.sim.years;
  j["simulate"]["agents"] = c.sim.agents;
  j["simulate"]["burnin_years"] = c.sim.burnin_years;
  j["simulate"]["seed"] = c.sim.seed;
  j["simulate"]["wage_sample_stride"] = c.sim.wage_sample_stride;
  j["simulate"]["blocks"] = c.sim.blocks;
  j["simulate"]["repeat_window_weeks"] = c.sim.repeat_window_weeks;
  j["simulate"]["record_weekly"] = c.sim.record_weekly;
  j["simulate"]["antithetic_windows"] = c.sim.antithetic_windows;
  j["moments"]["occm_level"] = c.moments.occm_level == MoverLevel::Mog ? "mog" : "category";
  j["moments"]["garble_flows"] = c.moments.garble_flows;
  j["moments"]["recession_median_split"] = c.moments.recession_median_split;
  j["moments"]["mm_min_mode"] = c.moments.mm_min_mode == MinMode::Exact ? "exact" : "p1";
  j["moments"]["gamma_csv"] = c.gamma_csv;
  j["output_dir"] = c.output_dir;
  return j.dump(2);
}

std::uint64_t config_hash(const RunConfig& config) {
  // FNV-1a over the canonical resolved JSON. Threads and the output directory
  // are excluded: neither is allowed to change any artifact byte.
  RunConfig canonical = config;
  canonical.output_dir.clear();
  const std::string s = resolved_config_json(canonical);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string ArtifactMeta::header_line() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "# occmob %s config=%016" PRIx64 " seed=%" PRIu64 " %s",
                kVersion, config_hash, seed, grids.c_str());
  return buf;
}

ArtifactMeta make_meta(const RunConfig& config, const StateGrid& grid) {
  ArtifactMeta meta;
  meta.config_hash = config_hash(config);
  meta.seed = config.sim.seed;
  char buf[96];
  std::snprintf(buf, sizeof buf, "grids=z%d,x%d,o%d,a%d rouwenhorst", grid.nz, grid.nx, grid.no,
                grid.na);
  meta.grids = buf;
  return meta;
}

void write_labeled_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                              const std::vector<std::string>& labels, const ArtifactMeta* meta) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot write " + path);
  if (meta) out << meta->header_line() << "\n";
  out << "occupation";
  for (const auto& l : labels) out << "," << l;
  out << "\n";
  for (int i = 0; i < m.rows(); ++i) {
    out << labels[std::size_t(i)];
    for (int j = 0; j < m.cols(); ++j) out << "," << fmt(m(i, j));
    out << "\n";
  }
}

FlowMatrix read_labeled_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open " + path);
  std::string line;
  std::vector<std::vector<double>> rows;
  FlowMatrix fm;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header_done) {
      header_done = true;  // first non-comment line is the label header
      continue;
    }
    require(cells.size() >= 2, ErrorCode::Io, "malformed matrix row in " + path);
    fm.labels.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t i = 1; i < cells.size(); ++i) row.push_back(std::stod(cells[i]));
    rows.push_back(row);
  }
  const int n = int(rows.size());
  require(n > 0, ErrorCode::Io, "empty matrix in " + path);
  fm.m.resize(n, int(rows[0].size()));
  for (int i = 0; i < n; ++i) {
    require(int(rows[std::size_t(i)].size()) == fm.m.cols(), ErrorCode::Io,
            "ragged matrix in " + path);
    for (int j = 0; j < fm.m.cols(); ++j) fm.m(i, j) = rows[std::size_t(i)][std::size_t(j)];
  }
  return fm;
}

void write_tensor_csv(const std::string& path, const Tensor3& t,
                      const std::vector<std::string>& labels, const ArtifactMeta* meta) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot write " + path);
  if (meta) out << meta->header_line() << "\n";
  out << "i,j,k,mass\n";
  for (int i = 0; i < t.n; ++i)
    for (int j = 0; j < t.n; ++j)
      for (int k = 0; k < t.n; ++k)
        out << labels[std::size_t(i)] << "," << labels[std::size_t(j)] << ","
            << labels[std::size_t(k)] << "," << fmt(t.at(i, j, k)) << "\n";
}

Tensor3 read_tensor_csv(const std::string& path, std::vector<std::string>* labels_out) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open " + path);
  std::string line;
  std::vector<std::string> labels;
  std::vector<std::tuple<std::string, std::string, std::string, double>> entries;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_done) {
      header_done = true;
      continue;
    }
    std::stringstream ss(line);
    std::string i, j, k, v;
    std::getline(ss, i, ',');
    std::getline(ss, j, ',');
    std::getline(ss, k, ',');
    std::getline(ss, v, ',');
    entries.emplace_back(i, j, k, std::stod(v));
    for (const auto& l : {i, j, k})
      if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
  }
  Tensor3 t;
  t.n = int(labels.size());
  t.v = Eigen::VectorXd::Zero(Eigen::Index(t.n) * t.n * t.n);
  auto idx_of = [&](const std::string& l) {
    return int(std::find(labels.begin(), labels.end(), l) - labels.begin());
  };
  for (const auto& [i, j, k, v] : entries) t.at(idx_of(i), idx_of(j), idx_of(k)) = v;
  if (labels_out) *labels_out = labels;
  return t;
}

Crosswalk read_crosswalk_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open " + path);
  Crosswalk cw;
  std::string line;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_done) {
      header_done = true;
      continue;
    }
    std::stringstream ss(line);
    std::string occ, grp;
    std::getline(ss, occ, ',');
    std::getline(ss, grp, ',');
    cw.occupations.push_back(occ);
    cw.groups.push_back(grp);
  }
  return cw;
}

std::vector<int> Crosswalk::group_indices(const std::vector<std::string>& labels,
                                          std::vector<std::string>* group_labels) const {
  std::vector<std::string> groups_unique;
  for (const auto& g : groups)
    if (!g.empty() && std::find(groups_unique.begin(), groups_unique.end(), g) == groups_unique.end())
      groups_unique.push_back(g);
  std::vector<int> out;
  for (const auto& l : labels) {
    int gi = -1;
    for (std::size_t i = 0; i < occupations.size(); ++i)
      if (occupations[i] == l && !groups[i].empty()) {
        gi = int(std::find(groups_unique.begin(), groups_unique.end(), groups[i]) -
                 groups_unique.begin());
        break;
      }
    out.push_back(gi);
  }
  if (group_labels) *group_labels = groups_unique;
  return out;
}

namespace {

constexpr std::uint32_t kTablesMagic = 0x4f434d54;  // "OCMT"
constexpr std::uint32_t kTablesVersion = 1;
constexpr std::uint32_t kPanelMagic = 0x4f434d50;  // "OCMP"
constexpr std::uint32_t kPanelVersion = 1;

template <typename T>
void put(std::ofstream& o, const T& v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
void get_v(std::ifstream& i, T& v) {
  i.read(reinterpret_cast<char*>(&v), sizeof v);
}
void put_arr(std::ofstream& o, const double* p, std::size_t n) {
  o.write(reinterpret_cast<const char*>(p), std::streamsize(n * sizeof(double)));
}
void get_arr(std::ifstream& i, double* p, std::size_t n) {
  i.read(reinterpret_cast<char*>(p), std::streamsize(n * sizeof(double)));
}

}  // namespace

void save_tables(const std::string& path, const EquilibriumTables& t, const StateGrid& grid,
                 const ArtifactMeta& meta) {
  std::ofstream o(path, std::ios::binary);
  require(o.good(), ErrorCode::Io, "cannot write " + path);
  put(o, kTablesMagic);
  put(o, kTablesVersion);
  put(o, meta.config_hash);
  put(o, std::int32_t(grid.nz));
  put(o, std::int32_t(grid.nx));
  put(o, std::int32_t(grid.no));
  put(o, std::int32_t(grid.na));
  put(o, grid.z_location_shift);
  const std::size_t n = grid.size();
  const std::size_t nxoa = std::size_t(grid.nx) * grid.no * grid.na;
  for (const Eigen::ArrayXd* a : {&t.M, &t.W_U, &t.W_E, &t.theta, &t.lambda, &t.wage})
    put_arr(o, a->data(), n);
  for (const Eigen::ArrayXd* a : {&t.R, &t.W_hat, &t.draw_prob}) put_arr(o, a->data(), nxoa);
  put_arr(o, t.shares.data(), nxoa * std::size_t(grid.no));
  put_arr(o, t.alpha_draws.data(), nxoa * std::size_t(grid.no));
  o.write(reinterpret_cast<const char*>(t.separate.data()), std::streamsize(n));
  o.write(reinterpret_cast<const char*>(t.reallocate.data()), std::streamsize(n));
  o.write(reinterpret_cast<const char*>(t.z_s_idx.data()), std::streamsize(nxoa * sizeof(int)));
  o.write(reinterpret_cast<const char*>(t.z_r_idx.data()), std::streamsize(nxoa * sizeof(int)));
  put_arr(o, t.z_s_level.data(), nxoa);
  put_arr(o, t.z_r_level.data(), nxoa);
}

EquilibriumTables load_tables(const std::string& path, const StateGrid& grid,
                              std::uint64_t expect_config_hash) {
  std::ifstream i(path, std::ios::binary);
  require(i.good(), ErrorCode::Io, "cannot open table cache " + path);
  std::uint32_t magic = 0, version = 0;
  std::uint64_t hash = 0;
  get_v(i, magic);
  get_v(i, version);
  get_v(i, hash);
  require(magic == kTablesMagic && version == kTablesVersion, ErrorCode::Io,
          "table cache format mismatch in " + path);
  require(hash == expect_config_hash, ErrorCode::Io,
          "table cache was produced by a different configuration: " + path);
  std::int32_t nz = 0, nx = 0, no = 0, na = 0;
  get_v(i, nz);
  get_v(i, nx);
  get_v(i, no);
  get_v(i, na);
  double shift = 0.0;
  get_v(i, shift);
  require(nz == grid.nz && nx == grid.nx && no == grid.no && na == grid.na, ErrorCode::Io,
          "table cache grid mismatch in " + path);
  require(std::abs(shift - grid.z_location_shift) < 1e-12, ErrorCode::Io,
          "table cache z normalization mismatch in " + path);
  EquilibriumTables t;
  const std::size_t n = grid.size();
  const std::size_t nxoa = std::size_t(grid.nx) * grid.no * grid.na;
  for (Eigen::ArrayXd* a : {&t.M, &t.W_U, &t.W_E, &t.theta, &t.lambda, &t.wage}) {
    a->resize(Eigen::Index(n));
    get_arr(i, a->data(), n);
  }
  for (Eigen::ArrayXd* a : {&t.R, &t.W_hat, &t.draw_prob}) {
    a->resize(Eigen::Index(nxoa));
    get_arr(i, a->data(), nxoa);
  }
  t.shares.resize(Eigen::Index(nxoa), no);
  get_arr(i, t.shares.data(), nxoa * std::size_t(no));
  t.alpha_draws.resize(Eigen::Index(nxoa), no);
  get_arr(i, t.alpha_draws.data(), nxoa * std::size_t(no));
  t.separate.resize(n);
  t.reallocate.resize(n);
  i.read(reinterpret_cast<char*>(t.separate.data()), std::streamsize(n));
  i.read(reinterpret_cast<char*>(t.reallocate.data()), std::streamsize(n));
  t.z_s_idx.resize(Eigen::Index(nxoa));
  t.z_r_idx.resize(Eigen::Index(nxoa));
  i.read(reinterpret_cast<char*>(t.z_s_idx.data()), std::streamsize(nxoa * sizeof(int)));
  i.read(reinterpret_cast<char*>(t.z_r_idx.data()), std::streamsize(nxoa * sizeof(int)));
  t.z_s_level.resize(Eigen::Index(nxoa));
  t.z_r_level.resize(Eigen::Index(nxoa));
  get_arr(i, t.z_s_level.data(), nxoa);
  get_arr(i, t.z_r_level.data(), nxoa);
  require(i.good(), ErrorCode::Io, "truncated table cache " + path);
  return t;
}

void write_moments_json(const std::string& path, const MomentSet& moments,
                        const ArtifactMeta& meta) {
  json j;
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, meta.config_hash);
  j["meta"]["version"] = kVersion;
  j["meta"]["config"] = hash;
  j["meta"]["seed"] = meta.seed;
  j["meta"]["grids"] = meta.grids;
  for (const auto& [name, mom] : moments.m) {
    j["moments"][name]["value"] = mom.value;
    j["moments"][name]["n"] = mom.n;
    j["moments"][name]["provenance"] = mom.provenance;
    j["moments"][name]["missing"] = mom.missing;
  }
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot write " + path);
  out << j.dump(2) << "\n";
}

MomentSet read_moments_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open " + path);
  json j;
  in >> j;
  MomentSet ms;
  for (auto it = j.at("moments").begin(); it != j.at("moments").end(); ++it) {
    Moment m;
    m.value = it.value().at("value").get<double>();
    m.n = it.value().at("n").get<long long>();
    m.provenance = it.value().at("provenance").get<std::string>();
    m.missing = it.value().at("missing").get<bool>();
    ms.m[it.key()] = m;
  }
  return ms;
}

void write_moments_csv(const std::string& path, const MomentSet& moments,
                       const ArtifactMeta& meta) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot write " + path);
  out << meta.header_line() << "\n";
  out << "moment,value,n,missing,provenance\n";
  for (const auto& [name, mom] : moments.m)
    out << name << "," << fmt(mom.value) << "," << mom.n << "," << (mom.missing ? 1 : 0) << ","
        << mom.provenance << "\n";
}

void write_cutoffs_csv(const std::string& path, const EquilibriumTables& tables,
                       const StateGrid& grid, const ModelParams& params,
                       const ArtifactMeta& meta) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot write " + path);
  out << meta.header_line() << "\n";
  out << "occupation,x_index,a_index,a_level,z_s_index,z_s_level,z_r_index,z_r_level,market_dead\n";
  for (int io = 0; io < grid.no; ++io)
    for (int ix = 0; ix < grid.nx; ++ix)
      for (int ia = 0; ia < grid.na; ++ia) {
        const std::size_t xoa = tables.xoa(ix, io, ia, grid.no, grid.na);
        const bool dead = tables.z_s_idx[Eigen::Index(xoa)] >= grid.nz;
        out << params.occupations[std::size_t(io)].id << "," << ix << "," << ia << ","
            << fmt(grid.a.levels(ia)) << "," << tables.z_s_idx[Eigen::Index(xoa)] << ","
            << fmt(tables.z_s_level[Eigen::Index(xoa)]) << "," << tables.z_r_idx[Eigen::Index(xoa)]
            << "," << fmt(tables.z_r_level[Eigen::Index(xoa)]) << "," << (dead ? 1 : 0) << "\n";
      }
}

void write_tightness_csv(const std::string& path, const EquilibriumTables& tables,
                         const StateGrid& grid, const ModelParams& params,
                         const ArtifactMeta& meta) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot write " + path);
  out << meta.header_line() << "\n";
  out << "occupation,x_index,a_index,z_index,z_level,theta,lambda,wage\n";
  for (int io = 0; io < grid.no; ++io)
    for (int ix = 0; ix < grid.nx; ++ix)
      for (int ia = 0; ia < grid.na; ++ia)
        for (int iz = 0; iz < grid.nz; ++iz) {
          const std::size_t i = grid.idx(iz, ix, io, ia);
          out << params.occupations[std::size_t(io)].id << "," << ix << "," << ia << "," << iz
              << "," << fmt(grid.z.levels(iz)) << "," << fmt(tables.theta[i]) << ","
              << fmt(tables.lambda[i]) << "," << fmt(tables.wage[i]) << "\n";
        }
}

void save_panel(const std::string& path, const PanelLog& log, const ArtifactMeta& meta) {
  std::ofstream o(path, std::ios::binary);
  require(o.good(), ErrorCode::Io, "cannot write " + path);
  put(o, kPanelMagic);
  put(o, kPanelVersion);
  put(o, meta.config_hash);
  put(o, std::int32_t(log.windows.size()));
  put(o, std::int32_t(log.config.repeat_window_weeks));
  for (const auto& w : log.windows) {
    put(o, std::int32_t(w.window_id));
    put(o, std::int32_t(w.measure_weeks));
    put(o, std::int32_t(w.spell_week_offset));
    put(o, std::int64_t(w.employed_at_start));
    put(o, std::int64_t(w.unemployed_within_3y));
    put(o, w.realloc_attempts);
    put(o, w.realloc_successes);
    put(o, w.realloc_cost_paid);
    auto put_dvec = [&](const std::vector<double>& v) {
      put(o, std::int64_t(v.size()));
      o.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
    };
    put_dvec(w.u_stock);
    put_dvec(w.e_stock);
    put_dvec(w.y_sum);
    put_dvec(w.vacancies);
    put(o, std::int64_t(w.a_path.size()));
    o.write(reinterpret_cast<const char*>(w.a_path.data()),
            std::streamsize(w.a_path.size() * sizeof(int)));
    put(o, std::int64_t(w.months.size()));
    o.write(reinterpret_cast<const char*>(w.months.data()),
            std::streamsize(w.months.size() * sizeof(MonthAgg)));
    put(o, std::int64_t(w.qtr_duration_bins.size()));
    o.write(reinterpret_cast<const char*>(w.qtr_duration_bins.data()),
            std::streamsize(w.qtr_duration_bins.size() * sizeof(std::array<std::int64_t, 5>)));
    o.write(reinterpret_cast<const char*>(w.qtr_unemployed_1_18.data()),
            std::streamsize(w.qtr_unemployed_1_18.size() * sizeof(std::int64_t)));
    put(o, std::int64_t(w.spells.size()));
    o.write(reinterpret_cast<const char*>(w.spells.data()),
            std::streamsize(w.spells.size() * sizeof(SpellRecord)));
    put(o, std::int64_t(w.hires.size()));
    o.write(reinterpret_cast<const char*>(w.hires.data()),
            std::streamsize(w.hires.size() * sizeof(HireRecord)));
    put(o, std::int64_t(w.wage_samples.size()));
    o.write(reinterpret_cast<const char*>(w.wage_samples.data()),
            std::streamsize(w.wage_samples.size() * sizeof(WageSample)));
  }
}

PanelLog load_panel(const std::string& path, std::uint64_t expect_config_hash) {
  std::ifstream i(path, std::ios::binary);
  require(i.good(), ErrorCode::Io, "cannot open panel " + path);
  std::uint32_t magic = 0, version = 0;
  std::uint64_t hash = 0;
  get_v(i, magic);
  get_v(i, version);
  get_v(i, hash);
  require(magic == kPanelMagic && version == kPanelVersion, ErrorCode::Io,
          "panel format mismatch in " + path);
  require(hash == expect_config_hash, ErrorCode::Io,
          "panel was produced by a different configuration: " + path);
  PanelLog log;
  std::int32_t n_windows = 0, repeat_weeks = 0;
  get_v(i, n_windows);
  get_v(i, repeat_weeks);
  log.config.repeat_window_weeks = repeat_weeks;
  for (int wi = 0; wi < n_windows; ++wi) {
    WindowPanel w;
    std::int32_t id = 0, mw = 0, off = 0;
    std::int64_t e0 = 0, f3 = 0;
    get_v(i, id);
    get_v(i, mw);
    get_v(i, off);
    get_v(i, e0);
    get_v(i, f3);
    get_v(i, w.realloc_attempts);
    get_v(i, w.realloc_successes);
    get_v(i, w.realloc_cost_paid);
    w.window_id = id;
    w.measure_weeks = mw;
    w.spell_week_offset = off;
    w.employed_at_start = e0;
    w.unemployed_within_3y = f3;
    auto get_dvec = [&](std::vector<double>& v) {
      std::int64_t n = 0;
      get_v(i, n);
      v.resize(std::size_t(n));
      i.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
    };
    get_dvec(w.u_stock);
    get_dvec(w.e_stock);
    get_dvec(w.y_sum);
    get_dvec(w.vacancies);
    std::int64_t n = 0;
    get_v(i, n);
    w.a_path.resize(std::size_t(n));
    i.read(reinterpret_cast<char*>(w.a_path.data()), std::streamsize(n * std::streamsize(sizeof(int))));
    get_v(i, n);
    w.months.resize(std::size_t(n));
    i.read(reinterpret_cast<char*>(w.months.data()), std::streamsize(std::size_t(n) * sizeof(MonthAgg)));
    get_v(i, n);
    w.qtr_duration_bins.resize(std::size_t(n));
    i.read(reinterpret_cast<char*>(w.qtr_duration_bins.data()),
           std::streamsize(std::size_t(n) * sizeof(std::array<std::int64_t, 5>)));
    w.qtr_unemployed_1_18.resize(std::size_t(n));
    i.read(reinterpret_cast<char*>(w.qtr_unemployed_1_18.data()),
           std::streamsize(std::size_t(n) * sizeof(std::int64_t)));
    get_v(i, n);
    w.spells.resize(std::size_t(n));
    i.read(reinterpret_cast<char*>(w.spells.data()),
           std::streamsize(std::size_t(n) * sizeof(SpellRecord)));
    get_v(i, n);
    w.hires.resize(std::size_t(n));
    i.read(reinterpret_cast<char*>(w.hires.data()),
           std::streamsize(std::size_t(n) * sizeof(HireRecord)));
    get_v(i, n);
    w.wage_samples.resize(std::size_t(n));
    i.read(reinterpret_cast<char*>(w.wage_samples.data()),
           std::streamsize(std::size_t(n) * sizeof(WageSample)));
    require(i.good(), ErrorCode::Io, "truncated panel " + path);
    log.windows.push_back(std::move(w));
  }
  return log;
}

double read_cached_shift(const std::string& path) {
  std::ifstream i(path, std::ios::binary);
  require(i.good(), ErrorCode::Io, "cannot open table cache " + path);
  std::uint32_t magic = 0, version = 0;
  std::uint64_t hash = 0;
  std::int32_t dims[4];
  get_v(i, magic);
  get_v(i, version);
  get_v(i, hash);
  for (auto& d : dims) get_v(i, d);
  double shift = 0.0;
  get_v(i, shift);
  require(i.good() && magic == kTablesMagic, ErrorCode::Io, "bad table cache " + path);
  return shift;
}

std::string fixture_path(const std::string& name) { return std::string(OCCMOB_DATA_DIR) + "/" + name; }

}  // namespace occmob
