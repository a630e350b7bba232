#pragma once

#include "sepsis/core.hpp"

#include <istream>
#include <map>
#include <optional>
#include <string>

namespace sepsis {

/// Inclusive per-channel bounds; observations outside are implausible.
struct PlausibilityTable {
  struct Bounds {
    double min = 0.0;
    double max = 0.0;
  };
  std::array<Bounds, kNumChannels> bounds;

  PlausibilityTable();

  const Bounds& operator[](VitalChannel c) const { return bounds[index(c)]; }
  Bounds& operator[](VitalChannel c) { return bounds[index(c)]; }

  bool contains(VitalChannel c, double v) const {
    const auto& b = bounds[index(c)];
    return v >= b.min && v <= b.max;
  }
  /// Throws unless min < max for every channel.
  void validate() const;
};

struct RejectionReport {
  std::size_t malformed = 0;
  std::size_t non_finite = 0;
  std::size_t out_of_range = 0;
  std::size_t duplicate_timestamp = 0;
  std::map<std::string, std::size_t> rejected_units;  // per patient

  std::size_t total() const { return malformed + non_finite + out_of_range + duplicate_timestamp; }
  RejectionReport& merge(const RejectionReport& other);
};

using SeriesMap = std::map<std::string, PatientSeries>;

struct ParsedVitals {
  SeriesMap series;
  RejectionReport report;
};

/// Reads long (`patient_id,timestamp,channel,value`) or wide
/// (`patient_id,timestamp,<channel>...`) vitals CSV; the layout is detected from
/// the header. Bad rows are counted and skipped; a missing or unusable header
/// throws. Per channel, observations come back sorted by timestamp and a
/// repeated (patient, channel, timestamp) keeps the row that appeared last.
ParsedVitals parse_vitals(std::istream& in);

/// `patient_id,age,gender,ethnicity`; empty cells mean unknown.
std::map<std::string, Demographics> parse_demographics(std::istream& in);

/// `patient_id,onset_timestamp`; returned lists are sorted ascending.
std::map<std::string, std::vector<Timestamp>> parse_onsets(std::istream& in);

/// Adds pp = systolic - diastolic wherever both are observed at the same
/// timestamp. Existing pp observations win.
PatientSeries derive_pulse_pressure(PatientSeries series);

struct FilteredSeries {
  PatientSeries series;
  RejectionReport report;
};

FilteredSeries sanity_filter(PatientSeries series, const PlausibilityTable& table);

struct QsofaScore {
  int score = 0;
  bool gcs_missing = false;
};

/// Standard qSOFA: RR >= 22, SBP <= 100, GCS < 15. An unknown GCS adds nothing
/// and is flagged.
QsofaScore compute_qsofa(double respiration, double systolic_bp, std::optional<double> gcs);

}  // namespace sepsis
