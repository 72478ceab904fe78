#include "occmob/spells.hpp"

#include <algorithm>

#include "occmob/common.hpp"

namespace occmob {

SpellExtraction extract_spells(const std::vector<AgentWeek>& weeks, int agent_id, int window_id,
                               const WindowSpec& spec) {
  SpellExtraction out;
  require(spec.measure_end <= int(weeks.size()) && spec.measure_start >= 0 &&
              spec.measure_end > spec.measure_start,
          ErrorCode::Config, "extract_spells: window shorter than the measurement span");
  const int t0 = spec.measure_start, t1 = spec.measure_end;

  int spell_start = -1;
  int realloc_count = 0;
  std::int16_t source_occ = 0;

  int hire_week = -1;  // open employment run following a recorded spell
  bool hire_mover = false;

  auto close_hire = [&](int t, bool censored) {
    if (hire_week < 0) return;
    out.hires.push_back({window_id, hire_week, t - hire_week, censored ? std::int8_t(1) : std::int8_t(0),
                         hire_mover ? std::int8_t(1) : std::int8_t(0)});
    hire_week = -1;
  };

  for (int t = 0; t < t1; ++t) {
    const AgentWeek& w = weeks[std::size_t(t)];
    if (w.discontinuity) {
      if (spell_start >= 0) ++out.censored_spells;
      spell_start = -1;
      close_hire(t, true);
    }
    if (w.employed) {
      if (spell_start >= 0) {
        const int months = (t - spell_start) / 4;
        if (months < spec.min_months) {
          ++out.sub_month_spells;
        } else if (spell_start < t0) {
          ++out.censored_spells;  // left-truncated relative to the measurement span
        } else {
          SpellRecord s;
          s.agent = agent_id;
          s.window = window_id;
          s.start_week = spell_start;
          s.end_week = t;
          s.duration_months = months;
          s.source_occ = source_occ;
          s.dest_occ = w.occ;
          s.realloc_count = std::int16_t(realloc_count);
          s.age_weeks_at_end = w.weeks_since_entry;
          out.spells.push_back(s);
          hire_week = t;
          hire_mover = realloc_count > 0;
        }
        spell_start = -1;
      }
    } else if (w.ever_employed) {
      if (spell_start < 0) {
        spell_start = t;
        realloc_count = 0;
        source_occ = w.occ;
        close_hire(t, false);  // the employment run ends at this separation
      }
      if (w.realloc) ++realloc_count;
    }
  }
  if (spell_start >= 0) ++out.censored_spells;  // unfinished at the window edge
  close_hire(t1, true);
  return out;
}

std::vector<SpellPair> repeat_pairs(const std::vector<SpellRecord>& spells,
                                    int repeat_window_weeks) {
  // spells arrive grouped by (window, agent) and ordered in time
  std::vector<SpellPair> pairs;
  for (std::size_t i = 1; i < spells.size(); ++i) {
    const SpellRecord& a = spells[i - 1];
    const SpellRecord& b = spells[i];
    if (a.agent != b.agent || a.window != b.window) continue;
    if (b.end_week - a.start_week <= repeat_window_weeks) pairs.push_back({&a, &b});
  }
  return pairs;
}

}  // namespace occmob
