#pragma once

#include <cstdint>
#include <vector>

namespace occmob {

// One production-stage observation of an agent slot.
struct AgentWeek {
  std::int32_t weeks_since_entry = 0;
  std::int16_t occ = 0;
  std::int16_t z_index = 0;
  std::int8_t x_index = 0;
  std::int8_t employed = 0;
  std::int8_t ever_employed = 0;
  std::int8_t realloc = 0;        // accepted an occupation draw this week
  std::int8_t discontinuity = 0;  // slot was replaced by a new entrant this week
};

// Completed employment -> unemployment -> employment episode.
struct SpellRecord {
  std::int32_t agent = 0;
  std::int32_t window = 0;
  std::int32_t start_week = 0;  // first jobless week (window time)
  std::int32_t end_week = 0;    // week of re-employment
  std::int32_t duration_months = 0;
  std::int16_t source_occ = 0;
  std::int16_t dest_occ = 0;
  std::int16_t realloc_count = 0;  // draws accepted during the spell
  std::int32_t age_weeks_at_end = 0;

  bool mover_mog() const { return realloc_count > 0; }  // any major-occupation change
  bool mover_category() const { return source_occ != dest_occ; }
  double age_years() const { return 20.0 + age_weeks_at_end / 52.0; }
  bool young() const { return age_years() >= 20.0 && age_years() <= 30.0; }
  bool prime() const { return age_years() >= 35.0 && age_years() <= 55.0; }
  int end_month(int measure_start) const { return (end_week - measure_start) / 4; }
  int end_quarter(int measure_start) const { return (end_week - measure_start) / 13; }
};

// Employment run following a completed spell; used for new-hire separation hazards.
struct HireRecord {
  std::int32_t window = 0;
  std::int32_t hire_week = 0;
  std::int32_t employment_weeks = 0;
  std::int8_t censored = 0;
  std::int8_t mover_mog = 0;
};

struct WindowSpec {
  int measure_start = 0;  // first measured week
  int measure_end = 0;    // one past the last measured week
  int min_months = 1;
  int repeat_window_weeks = 234;  // about 4.5 years, the repeat-mobility span
};

struct SpellExtraction {
  std::vector<SpellRecord> spells;
  std::vector<HireRecord> hires;
  int censored_spells = 0;
  int sub_month_spells = 0;  // jobless gaps shorter than one month, never counted
};

// Derives monthly EUE spells from weekly records: a month is 4 consecutive
// weeks; a spell must last at least one full month; spells truncated by the
// window edges or by a slot replacement are censored and excluded.
SpellExtraction extract_spells(const std::vector<AgentWeek>& weeks, int agent_id, int window_id,
                               const WindowSpec& spec);

// Consecutive completed spell pairs of the same agent within the repeat span.
struct SpellPair {
  const SpellRecord* first;
  const SpellRecord* second;
};

std::vector<SpellPair> repeat_pairs(const std::vector<SpellRecord>& spells,
                                    int repeat_window_weeks);

}  // namespace occmob
