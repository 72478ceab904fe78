#include "occmob/simulate.hpp"

#include <cmath>

#include "occmob/common.hpp"

namespace occmob {

namespace {

std::vector<double> row_cdf(const Eigen::MatrixXd& m, int row) {
  std::vector<double> cdf(std::size_t(m.cols()));
  double acc = 0.0;
  for (int j = 0; j < m.cols(); ++j) {
    acc += m(row, j);
    cdf[std::size_t(j)] = acc;
  }
  cdf.back() = 1.0;
  return cdf;
}

std::vector<double> vec_cdf(const Eigen::VectorXd& v) {
  std::vector<double> cdf(std::size_t(v.size()));
  double acc = 0.0;
  for (int j = 0; j < v.size(); ++j) {
    acc += v(j);
    cdf[std::size_t(j)] = acc;
  }
  cdf.back() = 1.0;
  return cdf;
}

// Precomputed sampling tables shared read-only by all agents.
struct Sampler {
  std::vector<std::vector<double>> z_rows, xe_rows, xu_rows, a_rows;
  std::vector<double> z_erg, psi, init_shares;
  std::vector<std::vector<double>> realloc_dest;  // per (x,o,A): destination cdf given success

  Sampler(const EquilibriumTables& t, const StateGrid& g, const ModelParams& p) {
    for (int i = 0; i < g.nz; ++i) z_rows.push_back(row_cdf(g.z.transition, i));
    for (int i = 0; i < g.nx; ++i) xe_rows.push_back(row_cdf(g.x_emp.transition, i));
    for (int i = 0; i < g.nx; ++i) xu_rows.push_back(row_cdf(g.x_unemp.transition, i));
    for (int i = 0; i < g.na; ++i) a_rows.push_back(row_cdf(g.a.transition, i));
    z_erg = vec_cdf(g.z.ergodic);
    psi = vec_cdf(p.psi_vector() / p.psi_vector().sum());
    Eigen::VectorXd shares = p.init_occ_shares.size() == g.no
                                 ? p.init_occ_shares
                                 : Eigen::VectorXd::Constant(g.no, 1.0 / g.no);
    init_shares = vec_cdf(shares / shares.sum());
    const std::size_t nxoa = std::size_t(g.nx) * g.no * g.na;
    realloc_dest.resize(nxoa);
    for (std::size_t i = 0; i < nxoa; ++i) {
      const double total = t.draw_prob[i];
      Eigen::VectorXd dest = t.alpha_draws.row(Eigen::Index(i)).transpose();
      if (total > 0.0) dest /= total;
      realloc_dest[i] = vec_cdf(dest.cwiseMax(0.0));
    }
  }
};

struct Agent {
  int iz = 0, ix = 0, io = 0;
  bool employed = false;
  bool ever_employed = false;
  int weeks_since_entry = 0;
  int occ_tenure = 0;   // employed weeks in the current occupation
  int experience = 0;   // employed weeks since entry
  int job_tenure = 0;   // weeks in the current job
  int jobless_weeks = 0;
};

struct BlockAccum {
  WindowPanel panel;
  std::vector<char> employed_at_ms;
  std::vector<char> flagged_unemp_3y;
};

}  // namespace

std::vector<int> draw_aggregate_path(const MarkovChain& chain, int weeks, std::uint64_t seed,
                                     std::uint64_t stream, bool antithetic) {
  require(weeks >= 1, ErrorCode::Config, "draw_aggregate_path: weeks must be >= 1");
  RngStream rng(seed, 0x41504154ULL /*APAT*/, stream);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < chain.size(); ++i) rows.push_back(row_cdf(chain.transition, i));
  std::vector<double> erg = vec_cdf(chain.ergodic);
  auto pick = [&](const std::vector<double>& cdf, double u) {
    int lo = 0, hi = int(cdf.size()) - 1;
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (cdf[std::size_t(mid)] <= u)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  };
  auto uniform = [&](RngStream& r) {
    const double u = r.next_double();
    return antithetic ? 1.0 - u : u;
  };
  std::vector<int> path{};
  path.resize(std::size_t(weeks));
  RngStream init(seed, 0x41504154ULL, stream, 1);
  int state = pick(erg, uniform(init));
  for (int t = 0; t < weeks; ++t) {
    path[std::size_t(t)] = state;
    state = pick(rows[std::size_t(state)], uniform(rng));
  }
  return path;
}

WindowPanel simulate_window(const EquilibriumTables& tables, const StateGrid& grid,
                            const ModelParams& params, const SimConfig& config, int window_id,
                            const std::vector<int>& a_path, const CrossSectionInit& init) {
  require(config.agents >= 1, ErrorCode::Config, "simulate_window: need at least one agent");
  const int total_weeks = int(a_path.size());
  const int t0 = config.burnin_weeks();
  const int t1 = total_weeks;
  const int measure_weeks = t1 - t0;
  require(measure_weeks >= 52, ErrorCode::Config, "simulate_window: measurement span too short");
  const int n_months = measure_weeks / 4;
  const int n_quarters = measure_weeks / 13;

  const Sampler sampler(tables, grid, params);
  const double mu = params.retirement_prob();
  const int no = grid.no, na = grid.na;

  // optional start distribution over (status, z, x, o) cells
  std::vector<double> init_cdf;
  const std::size_t n_cells = std::size_t(grid.nx) * grid.no * grid.nz;
  const bool have_init = init.e && init.u_entrant && init.u_experienced;
  if (have_init) {
    init_cdf.resize(3 * n_cells);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_cells; ++i) {
      acc += (*init.u_entrant)[Eigen::Index(i)];
      init_cdf[i] = acc;
    }
    for (std::size_t i = 0; i < n_cells; ++i) {
      acc += (*init.u_experienced)[Eigen::Index(i)];
      init_cdf[n_cells + i] = acc;
    }
    for (std::size_t i = 0; i < n_cells; ++i) {
      acc += (*init.e)[Eigen::Index(i)];
      init_cdf[2 * n_cells + i] = acc;
    }
    for (auto& v : init_cdf) v /= acc;
    init_cdf.back() = 1.0;
  }

  WindowSpec wspec;
  wspec.measure_start = t0;
  wspec.measure_end = t1;
  wspec.repeat_window_weeks = config.repeat_window_weeks;

  const int n_blocks = std::max(1, std::min(config.blocks, config.agents));
  std::vector<BlockAccum> blocks{std::size_t(n_blocks)};
  for (auto& b : blocks) {
    b.panel.window_id = window_id;
    b.panel.measure_weeks = measure_weeks;
    b.panel.spell_week_offset = t0;
    b.panel.u_stock.assign(std::size_t(measure_weeks), 0.0);
    b.panel.e_stock.assign(std::size_t(measure_weeks), 0.0);
    b.panel.y_sum.assign(std::size_t(measure_weeks), 0.0);
    b.panel.vacancies.assign(std::size_t(measure_weeks), 0.0);
    b.panel.months.assign(std::size_t(n_months), MonthAgg{});
    b.panel.qtr_duration_bins.assign(std::size_t(n_quarters), {0, 0, 0, 0, 0});
    b.panel.qtr_unemployed_1_18.assign(std::size_t(n_quarters), 0);
  }

  parallel_for(std::size_t(n_blocks), config.threads, [&](std::size_t bi) {
    BlockAccum& acc = blocks[bi];
    std::vector<AgentWeek> weekly{}; weekly.resize(std::size_t(total_weeks));
    // month-start snapshot state for transition accounting
    for (int agent = int(bi); agent < config.agents; agent += n_blocks) {
      RngStream rng(config.seed, 0x4147454eULL /*AGEN*/, std::uint64_t(window_id),
                    std::uint64_t(agent));
      Agent a;
      a.weeks_since_entry = int(rng.next_double() * params.working_life_years * 52.0);
      a.experience = a.weeks_since_entry;
      a.occ_tenure = std::min(a.weeks_since_entry, 520);
      a.job_tenure = std::min(a.weeks_since_entry, 156);
      if (have_init) {
        const int cell = rng.next_index(init_cdf);
        const int status = cell / int(n_cells);
        const std::size_t flat = std::size_t(cell) % n_cells;
        a.iz = int(flat % std::size_t(grid.nz));
        a.io = int((flat / std::size_t(grid.nz)) % std::size_t(grid.no));
        a.ix = int(flat / (std::size_t(grid.nz) * grid.no));
        a.employed = status == 2;
        a.ever_employed = status != 0;
        a.jobless_weeks = a.employed ? 0 : 8;
      } else {
        // uniform age over the working life, employed start, x consistent with age
        a.io = rng.next_index(sampler.init_shares);
        a.iz = rng.next_index(sampler.z_erg);
        a.employed = true;
        a.ever_employed = true;
        {
          // upgrades accumulated over the history so far: geometric waiting times
          const double up = 1.0 / (52.0 * params.mean_years_to_upgrade);
          int ups = 0;
          double acc_weeks = 0.0;
          while (ups < grid.nx - 1) {
            acc_weeks += std::ceil(std::log1p(-rng.next_double()) / std::log1p(-up));
            if (acc_weeks > a.weeks_since_entry) break;
            ++ups;
          }
          a.ix = ups;
        }
      }

      bool prev_u_stock = false, prev_employed = a.employed;
      bool prev_young = false, prev_prime = false, prev_recent = false;

      for (int t = 0; t < total_weeks; ++t) {
        const int ia = a_path[std::size_t(t)];
        bool discontinuity = false;
        bool realloc_event = false;

        // retirement and replacement
        if (rng.bernoulli(mu)) {
          a = Agent{};
          a.io = rng.next_index(sampler.psi);
          a.iz = rng.next_index(sampler.z_erg);
          discontinuity = true;
        } else {
          // beginning-of-period shocks
          a.iz = rng.next_index(sampler.z_rows[std::size_t(a.iz)]);
          a.ix = rng.next_index(a.employed ? sampler.xe_rows[std::size_t(a.ix)]
                                           : sampler.xu_rows[std::size_t(a.ix)]);
        }

        bool newly_separated = false;
        const std::size_t gi0 = grid.idx(a.iz, a.ix, a.io, ia);
        if (a.employed) {
          const bool endog = tables.separate[gi0] != 0;
          if (endog || rng.bernoulli(params.delta_of(a.ix))) {
            a.employed = false;
            newly_separated = true;
            a.jobless_weeks = 0;
          }
        }

        if (!a.employed && !newly_separated) {
          const std::size_t xoa = tables.xoa(a.ix, a.io, ia, no, na);
          if (tables.reallocate[gi0] != 0) {
            if (t >= t0) {
              acc.panel.realloc_attempts += 1.0;
              acc.panel.realloc_cost_paid += params.c;
            }
            if (rng.next_double() < tables.draw_prob[xoa]) {
              const int dest = rng.next_index(sampler.realloc_dest[xoa]);
              a.io = dest;
              a.iz = rng.next_index(sampler.z_erg);
              a.ix = 0;  // a new major occupation resets the occupational capital
              a.occ_tenure = 0;
              realloc_event = true;
              if (t >= t0) acc.panel.realloc_successes += 1.0;
            }
            // no matching in the period of an attempted draw
          } else {
            const double theta = tables.theta[grid.idx(a.iz, a.ix, a.io, ia)];
            if (t >= t0) acc.panel.vacancies[std::size_t(t - t0)] += theta;
            if (rng.bernoulli(tables.lambda[grid.idx(a.iz, a.ix, a.io, ia)])) {
              a.employed = true;
              a.ever_employed = true;
              a.job_tenure = 0;
            }
          }
        }

        // production stage bookkeeping
        if (a.employed) {
          a.jobless_weeks = 0;
          ++a.occ_tenure;
          ++a.experience;
          ++a.job_tenure;
        } else {
          ++a.jobless_weeks;
        }
        ++a.weeks_since_entry;

        AgentWeek wk;
        wk.weeks_since_entry = a.weeks_since_entry;
        wk.occ = std::int16_t(a.io);
        wk.z_index = std::int16_t(a.iz);
        wk.x_index = std::int8_t(a.ix);
        wk.employed = a.employed ? 1 : 0;
        wk.ever_employed = a.ever_employed ? 1 : 0;
        wk.realloc = realloc_event ? 1 : 0;
        wk.discontinuity = discontinuity ? 1 : 0;
        weekly[std::size_t(t)] = wk;

        if (t >= t0) {
          const int tm = t - t0;
          const bool in_u_stock = !a.employed && a.ever_employed && a.jobless_weeks >= 4;
          if (a.employed) {
            acc.panel.e_stock[std::size_t(tm)] += 1.0;
            acc.panel.y_sum[std::size_t(tm)] += grid.output(a.iz, a.ix, a.io, a_path[std::size_t(t)]);
          } else if (in_u_stock) {
            acc.panel.u_stock[std::size_t(tm)] += 1.0;
          }

          if (tm == 0) {
            acc.employed_at_ms.push_back(a.employed ? 1 : 0);
            acc.flagged_unemp_3y.push_back(0);
          }
          if (tm < 156 && !acc.employed_at_ms.empty() && acc.employed_at_ms.back() &&
              in_u_stock && !acc.flagged_unemp_3y.empty())
            acc.flagged_unemp_3y.back() = 1;

          if (tm % 4 == 0) {
            const int month = tm / 4;
            if (month < n_months) {
              MonthAgg& mg = acc.panel.months[std::size_t(month)];
              const double age = 20.0 + a.weeks_since_entry / 52.0;
              if (in_u_stock) ++mg.u_start;
              if (a.employed) {
                ++mg.e_start;
                if (age >= 20.0 && age <= 30.0) ++mg.e_young;
                if (age >= 35.0 && age <= 55.0) ++mg.e_prime;
                if (a.job_tenure <= 52) ++mg.e_recent;
              }
              if (month > 0) {
                MonthAgg& pm = acc.panel.months[std::size_t(month - 1)];
                if (prev_u_stock && a.employed) ++pm.ue;
                if (prev_employed && !a.employed) {
                  ++pm.eu;
                  if (prev_young) ++pm.sep_young;
                  if (prev_prime) ++pm.sep_prime;
                  if (prev_recent) ++pm.sep_recent;
                }
              }
              prev_u_stock = in_u_stock;
              prev_employed = a.employed;
              prev_young = age >= 20.0 && age <= 30.0;
              prev_prime = age >= 35.0 && age <= 55.0;
              prev_recent = a.job_tenure <= 52;
            }
          }
          if (tm % 13 == 0) {
            const int q = tm / 13;
            if (q < n_quarters && !a.employed && a.ever_employed) {
              const int months_ongoing = a.jobless_weeks / 4;
              if (months_ongoing >= 1 && months_ongoing <= 18) {
                auto& bins = acc.panel.qtr_duration_bins[std::size_t(q)];
                ++acc.panel.qtr_unemployed_1_18[std::size_t(q)];
                if (months_ongoing <= 2) ++bins[0];
                if (months_ongoing <= 4) ++bins[1];
                if (months_ongoing >= 5 && months_ongoing <= 8) ++bins[2];
                if (months_ongoing >= 9 && months_ongoing <= 12) ++bins[3];
                if (months_ongoing >= 13) ++bins[4];
              }
            }
          }
          if (a.employed && (agent % config.wage_sample_stride == 0) && (tm % 52 == 26)) {
            const double w = tables.wage[grid.idx(a.iz, a.ix, a.io, a_path[std::size_t(t)])];
            if (std::isfinite(w) && w > 0.0)
              acc.panel.wage_samples.push_back(
                  {float(std::log(w)), float(a.occ_tenure / 52.0), float(a.experience / 52.0),
                   float(20.0 + a.weeks_since_entry / 52.0)});
          }
        }
      }

      SpellExtraction ex = extract_spells(weekly, agent, window_id, wspec);
      for (auto& s : ex.spells) acc.panel.spells.push_back(s);
      for (auto& h : ex.hires) acc.panel.hires.push_back(h);
      if (config.record_weekly) acc.panel.weekly.push_back(weekly);
    }
  });

  // merge blocks in fixed order
  WindowPanel out = std::move(blocks[0].panel);
  std::int64_t emp_ms = 0, flagged = 0;
  for (std::size_t i = 0; i < blocks[0].employed_at_ms.size(); ++i) {
    emp_ms += blocks[0].employed_at_ms[i];
    if (blocks[0].employed_at_ms[i] && blocks[0].flagged_unemp_3y[i]) ++flagged;
  }
  for (int bi = 1; bi < n_blocks; ++bi) {
    WindowPanel& p = blocks[std::size_t(bi)].panel;
    for (int t = 0; t < measure_weeks; ++t) {
      out.u_stock[std::size_t(t)] += p.u_stock[std::size_t(t)];
      out.e_stock[std::size_t(t)] += p.e_stock[std::size_t(t)];
      out.y_sum[std::size_t(t)] += p.y_sum[std::size_t(t)];
      out.vacancies[std::size_t(t)] += p.vacancies[std::size_t(t)];
    }
    for (int m = 0; m < n_months; ++m) {
      MonthAgg& d = out.months[std::size_t(m)];
      const MonthAgg& s = p.months[std::size_t(m)];
      d.u_start += s.u_start;
      d.e_start += s.e_start;
      d.ue += s.ue;
      d.eu += s.eu;
      d.e_young += s.e_young;
      d.sep_young += s.sep_young;
      d.e_prime += s.e_prime;
      d.sep_prime += s.sep_prime;
      d.e_recent += s.e_recent;
      d.sep_recent += s.sep_recent;
    }
    for (int q = 0; q < n_quarters; ++q) {
      for (int j = 0; j < 5; ++j)
        out.qtr_duration_bins[std::size_t(q)][std::size_t(j)] +=
            p.qtr_duration_bins[std::size_t(q)][std::size_t(j)];
      out.qtr_unemployed_1_18[std::size_t(q)] += p.qtr_unemployed_1_18[std::size_t(q)];
    }
    out.spells.insert(out.spells.end(), p.spells.begin(), p.spells.end());
    out.hires.insert(out.hires.end(), p.hires.begin(), p.hires.end());
    out.wage_samples.insert(out.wage_samples.end(), p.wage_samples.begin(), p.wage_samples.end());
    out.realloc_attempts += p.realloc_attempts;
    out.realloc_successes += p.realloc_successes;
    out.realloc_cost_paid += p.realloc_cost_paid;
    for (std::size_t i = 0; i < blocks[std::size_t(bi)].employed_at_ms.size(); ++i) {
      emp_ms += blocks[std::size_t(bi)].employed_at_ms[i];
      if (blocks[std::size_t(bi)].employed_at_ms[i] && blocks[std::size_t(bi)].flagged_unemp_3y[i])
        ++flagged;
    }
    for (auto& wv : p.weekly) out.weekly.push_back(std::move(wv));
  }
  out.employed_at_start = emp_ms;
  out.unemployed_within_3y = flagged;
  out.a_path.assign(a_path.begin() + t0, a_path.end());
  return out;
}

PanelLog simulate_agents(const EquilibriumTables& tables, const StateGrid& grid,
                         const ModelParams& params, const SimConfig& config) {
  PanelLog log;
  log.config = config;
  for (int w = 0; w < config.windows; ++w) {
    const bool anti = config.antithetic_windows && (w % 2 == 1);
    const std::uint64_t stream = config.antithetic_windows ? std::uint64_t(w / 2) : std::uint64_t(w);
    std::vector<int> path =
        draw_aggregate_path(grid.a, config.total_weeks(), config.seed, stream, anti);
    log.windows.push_back(simulate_window(tables, grid, params, config, w, path));
  }
  return log;
}

}  // namespace occmob
