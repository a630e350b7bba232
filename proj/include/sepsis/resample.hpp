#pragma once

#include "sepsis/core.hpp"
#include "sepsis/ingest.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sepsis {

/// Per-patient values on an absolute 300 s grid.
struct GridSeries {
  std::string patient_id;
  Timestamp grid_start = 0;  // multiple of 300
  WindowGrid values;         // sentinel where no value is known yet
  /// Raw observations landing in each cell (cell T collects obs in (T-300, T]).
  Eigen::Matrix<int, Eigen::Dynamic, static_cast<int>(kNumChannels)> observed;
  /// First step holding a real (not back-filled) value; -1 when never observed.
  std::array<Eigen::Index, kNumChannels> first_observed_step{};
  /// Set by fill_missing for channels that stay all-sentinel.
  std::array<bool, kNumChannels> unobserved{};

  Eigen::Index steps() const { return values.rows(); }
  Timestamp time_at(Eigen::Index step) const { return grid_start + step * kStepSeconds; }
};

/// Last observation carried forward onto cells floor(first/300)*300 ..
/// ceil(last/300)*300. Throws "empty series" without observations.
GridSeries resample_to_grid(const PatientSeries& series);

/// Forward fill, then backward fill, per channel.
GridSeries fill_missing(GridSeries grid);

/// Consecutive full windows from grid_start; the trailing partial window is
/// dropped. Channels whose only values in a window were back-filled from
/// later observations are blanked, so a unit never sees data past its end.
std::vector<WindowUnit> segment_windows(const GridSeries& grid, int window_steps = kWindowSteps,
                                        int stride_steps = kWindowSteps);

/// Positive iff an onset lies in (end, end + horizon]. Units ending at or
/// after the first onset are dropped.
std::vector<WindowUnit> label_and_prune(std::vector<WindowUnit> units,
                                        const std::vector<Timestamp>& onset_times,
                                        int horizon_steps = kHorizonSteps);

struct ValidityRule {
  int min_obs_per_channel = 1;
  bool gcs_optional = false;
};

struct UnitVerdict {
  bool accepted = true;
  std::string reason;  // e.g. "sparse:respiration", "missing:gcs"
};

UnitVerdict validate_unit(const WindowUnit& unit, const ValidityRule& rule = {});

/// qSOFA from the unit's last step.
QsofaScore unit_qsofa(const WindowUnit& unit);

struct PreprocessConfig {
  PlausibilityTable plausibility;
  ValidityRule validity;
  int window_steps = kWindowSteps;
  int horizon_steps = kHorizonSteps;
};

struct PreprocessStats {
  std::size_t patients = 0;
  std::size_t patients_without_data = 0;
  std::size_t units_segmented = 0;
  std::size_t units_dropped_post_onset = 0;
  std::size_t units_rejected = 0;
  std::size_t units_accepted = 0;
  std::map<std::string, std::size_t> rejections_by_reason;
};

struct PreprocessResult {
  CohortDataset dataset;
  RejectionReport rejections;
  PreprocessStats stats;
};

/// Units for one patient after derive_pulse_pressure, sanity_filter, resample,
/// fill, segment, label and validate. Rejected units are counted in `report`.
std::vector<WindowUnit> preprocess_patient(const PatientSeries& series,
                                           const PreprocessConfig& config,
                                           RejectionReport& report, PreprocessStats& stats);

/// Full cohort. Output order is (patient_id, start_time) whatever the worker count.
PreprocessResult preprocess_cohort(const SeriesMap& series,
                                   const std::map<std::string, std::vector<Timestamp>>& onsets,
                                   const std::map<std::string, Demographics>& demographics,
                                   const PreprocessConfig& config, int workers = 1);

}  // namespace sepsis
