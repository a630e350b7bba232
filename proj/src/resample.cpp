#include "sepsis/resample.hpp"

#include "sepsis/parallel.hpp"

#include <algorithm>

namespace sepsis {

namespace {

Timestamp floor_div(Timestamp a, Timestamp b) {
  Timestamp q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

Timestamp ceil_div(Timestamp a, Timestamp b) { return -floor_div(-a, b); }

void compute_first_observed(GridSeries& grid) {
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    grid.first_observed_step[c] = -1;
    const auto col = grid.values.col(static_cast<Eigen::Index>(c));
    for (Eigen::Index k = 0; k < col.size(); ++k) {
      if (!is_missing(col[k])) {
        grid.first_observed_step[c] = k;
        break;
      }
    }
  }
}

}  // namespace

GridSeries resample_to_grid(const PatientSeries& series) {
  std::optional<Timestamp> first, last;
  for (const auto& obs : series.channels) {
    if (obs.empty()) continue;
    first = first ? std::min(*first, obs.front().time) : obs.front().time;
    last = last ? std::max(*last, obs.back().time) : obs.back().time;
  }
  if (!first) throw Error("empty series");

  GridSeries grid;
  grid.patient_id = series.patient_id;
  grid.grid_start = floor_div(*first, kStepSeconds) * kStepSeconds;
  const Timestamp grid_end = ceil_div(*last, kStepSeconds) * kStepSeconds;
  const auto steps = static_cast<Eigen::Index>((grid_end - grid.grid_start) / kStepSeconds + 1);

  grid.values.setConstant(steps, kNumChannels, kMissing);
  grid.observed.setZero(steps, kNumChannels);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const auto& obs = series.channels[c];
    const auto col = static_cast<Eigen::Index>(c);
    std::size_t j = 0;
    double carried = kMissing;
    for (Eigen::Index k = 0; k < steps; ++k) {
      const Timestamp cell_time = grid.time_at(k);
      while (j < obs.size() && obs[j].time <= cell_time) {
        carried = obs[j].value;
        ++grid.observed(k, col);
        ++j;
      }
      grid.values(k, col) = carried;
    }
  }
  compute_first_observed(grid);
  return grid;
}

GridSeries fill_missing(GridSeries grid) {
  compute_first_observed(grid);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    auto col = grid.values.col(static_cast<Eigen::Index>(c));
    const Eigen::Index first = grid.first_observed_step[c];
    grid.unobserved[c] = first < 0;
    if (first < 0) continue;
    double carried = col[first];
    for (Eigen::Index k = first; k < col.size(); ++k) {
      if (is_missing(col[k])) {
        col[k] = carried;
      } else {
        carried = col[k];
      }
    }
    for (Eigen::Index k = 0; k < first; ++k) col[k] = col[first];
  }
  return grid;
}

std::vector<WindowUnit> segment_windows(const GridSeries& grid, int window_steps,
                                        int stride_steps) {
  if (window_steps < 1) throw Error("window_steps must be >= 1");
  if (stride_steps < window_steps) throw Error("overlapping windows are not supported");

  std::vector<WindowUnit> units;
  const bool has_counts = grid.observed.rows() == grid.values.rows();
  for (Eigen::Index s = 0; s + window_steps <= grid.steps(); s += stride_steps) {
    WindowUnit u;
    u.patient_id = grid.patient_id;
    u.start_time = grid.time_at(s);
    u.unit_id = make_unit_id(u.patient_id, u.start_time);
    u.grid = grid.values.middleRows(s, window_steps);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      const auto col = static_cast<Eigen::Index>(c);
      u.channel_observed_counts[c] =
          has_counts ? grid.observed.block(s, col, window_steps, 1).sum() : 0;
      const Eigen::Index first = grid.first_observed_step[c];
      if (first >= s + window_steps) u.grid.col(col).setConstant(kMissing);
    }
    units.push_back(std::move(u));
  }
  return units;
}

std::vector<WindowUnit> label_and_prune(std::vector<WindowUnit> units,
                                        const std::vector<Timestamp>& onset_times,
                                        int horizon_steps) {
  if (onset_times.empty()) {
    for (auto& u : units) u.label = Label::negative;
    return units;
  }
  const Timestamp first_onset = *std::min_element(onset_times.begin(), onset_times.end());
  const Timestamp horizon = static_cast<Timestamp>(horizon_steps) * kStepSeconds;

  std::vector<WindowUnit> kept;
  kept.reserve(units.size());
  for (auto& u : units) {
    const Timestamp end = u.end_time();
    if (first_onset <= end) continue;
    const bool positive = std::any_of(onset_times.begin(), onset_times.end(), [&](Timestamp t) {
      return t > end && t <= end + horizon;
    });
    u.label = positive ? Label::positive : Label::negative;
    kept.push_back(std::move(u));
  }
  return kept;
}

UnitVerdict validate_unit(const WindowUnit& unit, const ValidityRule& rule) {
  for (auto c : kAllChannels) {
    if (c == VitalChannel::gcs && rule.gcs_optional) continue;
    if (unit.channel_observed_counts[index(c)] < rule.min_obs_per_channel) {
      return {false, "sparse:" + std::string(channel_name(c))};
    }
    if (unit.channel_all_missing(c)) return {false, "missing:" + std::string(channel_name(c))};
  }
  return {};
}

QsofaScore unit_qsofa(const WindowUnit& unit) {
  const auto last = unit.grid.rows() - 1;
  const auto at = [&](VitalChannel c) {
    return last < 0 ? kMissing : unit.grid(last, static_cast<Eigen::Index>(index(c)));
  };
  const double gcs = at(VitalChannel::gcs);
  // A missing respiration or SBP cannot meet its criterion: NaN comparisons are false.
  return compute_qsofa(at(VitalChannel::respiration), at(VitalChannel::systolicbp),
                       is_missing(gcs) ? std::nullopt : std::optional<double>(gcs));
}

std::vector<WindowUnit> preprocess_patient(const PatientSeries& series,
                                           const PreprocessConfig& config,
                                           RejectionReport& report, PreprocessStats& stats) {
  ++stats.patients;
  auto raw = sanity_filter(series, config.plausibility);
  report.merge(raw.report);
  auto filtered = sanity_filter(derive_pulse_pressure(std::move(raw.series)), config.plausibility);
  report.merge(filtered.report);
  if (filtered.series.observation_count() == 0) {
    ++stats.patients_without_data;
    return {};
  }

  const auto grid = fill_missing(resample_to_grid(filtered.series));
  auto units = segment_windows(grid, config.window_steps, config.window_steps);
  stats.units_segmented += units.size();

  auto onsets = series.onset_times;
  std::sort(onsets.begin(), onsets.end());
  const auto before = units.size();
  units = label_and_prune(std::move(units), onsets, config.horizon_steps);
  stats.units_dropped_post_onset += before - units.size();

  std::vector<WindowUnit> accepted;
  accepted.reserve(units.size());
  for (auto& u : units) {
    const auto verdict = validate_unit(u, config.validity);
    if (!verdict.accepted) {
      ++stats.units_rejected;
      ++stats.rejections_by_reason[verdict.reason];
      ++report.rejected_units[u.patient_id];
      continue;
    }
    const auto gcs = static_cast<Eigen::Index>(index(VitalChannel::gcs));
    if (config.validity.gcs_optional && u.channel_observed_counts[index(VitalChannel::gcs)] == 0) {
      u.grid.col(gcs).setConstant(kMissing);
    }
    ++stats.units_accepted;
    accepted.push_back(std::move(u));
  }
  return accepted;
}

PreprocessResult preprocess_cohort(const SeriesMap& series,
                                   const std::map<std::string, std::vector<Timestamp>>& onsets,
                                   const std::map<std::string, Demographics>& demographics,
                                   const PreprocessConfig& config, int workers) {
  config.plausibility.validate();

  std::vector<const PatientSeries*> patients;
  patients.reserve(series.size());
  for (const auto& [pid, s] : series) patients.push_back(&s);

  struct Slot {
    std::vector<WindowUnit> units;
    RejectionReport report;
    PreprocessStats stats;
  };
  std::vector<Slot> slots(patients.size());

  WorkerPool pool(workers);
  pool.parallel_for(patients.size(), [&](std::size_t i) {
    PatientSeries s = *patients[i];
    if (const auto it = onsets.find(s.patient_id); it != onsets.end()) s.onset_times = it->second;
    slots[i].units = preprocess_patient(s, config, slots[i].report, slots[i].stats);
  });

  PreprocessResult result;
  result.dataset.demographics = demographics;
  auto& st = result.stats;
  for (auto& slot : slots) {
    result.rejections.merge(slot.report);
    st.patients += slot.stats.patients;
    st.patients_without_data += slot.stats.patients_without_data;
    st.units_segmented += slot.stats.units_segmented;
    st.units_dropped_post_onset += slot.stats.units_dropped_post_onset;
    st.units_rejected += slot.stats.units_rejected;
    st.units_accepted += slot.stats.units_accepted;
    for (const auto& [reason, n] : slot.stats.rejections_by_reason) {
      st.rejections_by_reason[reason] += n;
    }
    for (auto& u : slot.units) result.dataset.units.push_back(std::move(u));
  }
  return result;
}

}  // namespace sepsis
