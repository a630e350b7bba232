#pragma once

#include "sepsis/core.hpp"
#include "sepsis/ingest.hpp"
#include "sepsis/resample.hpp"

#include <array>
#include <cstdint>
#include <istream>
#include <string>
#include <vector>

namespace sepsis {

/// Generator settings. Per-channel arrays are indexed by VitalChannel; the pp
/// entries are ignored because pp is derived at ingest.
struct SynthConfig {
  std::size_t n_patients = 500;
  std::uint64_t seed = 0;
  double target_unit_prevalence = 0.244;
  std::array<double, kNumChannels> mean_sampling_interval_s{300, 300, 300, 300, 300, 300, 300, 3600};
  std::array<double, kNumChannels> missing_rate{0.08, 0.08, 0.08, 0.03, 0.05, 0.05, 0.0, 0.1};
  double sampling_jitter = 0.3;  // relative half-width of the interval jitter
  double drift_hours_before_onset = 4.0;
  /// Stationary SD of the autocorrelated noise per channel.
  std::array<double, kNumChannels> noise_scale{6.0, 4.0, 4.5, 5.0, 1.8, 0.9, 0.0, 0.3};
  double noise_time_constant_s = 3600.0;
  double measurement_noise = 0.3;  // white noise, in units of noise_scale
  /// 0: risk is additive in the vitals. 1: the heart-rate/blood-pressure part
  /// only shows up in how the two move together.
  double interaction_strength = 0.8;
  /// Drift amplitude at full risk.
  double heartrate_effect = 50.0;
  double bp_effect = 42.0;
  double respiration_effect = 3.0;
  double spo2_effect = 1.5;
  int min_windows = 1;
  int max_windows = 4;
  double age_mean = 64.0;
  double age_sd = 16.0;
  double age_unknown_rate = 0.04;
  double gender_unknown_rate = 0.02;
  std::vector<std::string> ethnicities{"caucasian", "african_american", "hispanic", "asian", "other"};
  std::vector<double> ethnicity_weights{0.62, 0.14, 0.1, 0.06, 0.08};
  double ethnicity_unknown_rate = 0.05;
  PlausibilityTable plausibility;

  void validate() const;
};

/// "eicu-like" (5-minute sampling, 500 patients) or "hospital-like" (sparser
/// sampling, 200 patients, prevalence 0.12).
SynthConfig synth_preset(std::string_view name);

struct GeneratedCohort {
  std::string vitals_csv;        // patient_id,timestamp,channel,value
  std::string demographics_csv;  // patient_id,age,gender,ethnicity
  std::string onsets_csv;        // patient_id,onset_timestamp
  std::size_t sepsis_patients = 0;
  std::size_t planned_units = 0;
  std::size_t planned_positive_units = 0;
};

/// Byte-identical output for equal configs at any worker count.
GeneratedCohort generate_cohort(const SynthConfig& config, int workers = 1);

struct CohortSummary {
  std::size_t patients = 0;
  std::size_t units = 0;
  std::size_t positive_units = 0;
  double prevalence = 0.0;
  /// 1 - raw observations / (72 * units) over accepted units, floored at 0.
  std::array<double, kNumChannels> missingness{};
  RejectionReport rejections;
};

/// Runs the standard preprocessing on the three files and summarizes it.
CohortSummary describe_cohort(std::istream& vitals, std::istream& demographics, std::istream& onsets,
                              const PreprocessConfig& config = {}, int workers = 1);
CohortSummary describe_dataset(const CohortDataset& dataset, std::size_t patients);

std::string render_summary(const CohortSummary& summary);

}  // namespace sepsis
