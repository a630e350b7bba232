#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sepsis {

/// Raised for malformed input, violated preconditions and degenerate data.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seconds since epoch. All interval arithmetic stays in integers.
using Timestamp = std::int64_t;

inline constexpr Timestamp kStepSeconds = 300;
inline constexpr int kWindowSteps = 72;   // 6 h of 5-minute steps
inline constexpr int kHorizonSteps = 36;  // 3 h label horizon

/// Missing-value sentinel used in grids and feature matrices.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return v != v; }

enum class VitalChannel : std::uint8_t {
  systolicbp,
  diastolicbp,
  meanbp,
  heartrate,
  respiration,
  spo2,
  pp,
  gcs,
};

inline constexpr std::size_t kNumChannels = 8;

inline constexpr std::array<VitalChannel, kNumChannels> kAllChannels = {
    VitalChannel::systolicbp, VitalChannel::diastolicbp, VitalChannel::meanbp,
    VitalChannel::heartrate,  VitalChannel::respiration, VitalChannel::spo2,
    VitalChannel::pp,         VitalChannel::gcs,
};

constexpr std::size_t index(VitalChannel c) { return static_cast<std::size_t>(c); }

std::string_view channel_name(VitalChannel c);
std::optional<VitalChannel> parse_channel(std::string_view name);

struct VitalSample {
  std::string patient_id;
  Timestamp timestamp = 0;
  VitalChannel channel = VitalChannel::heartrate;
  double value = 0.0;
};

struct Observation {
  Timestamp time = 0;
  double value = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

enum class Gender : std::uint8_t { male, female, unknown };

std::string_view gender_name(Gender g);
Gender parse_gender(std::string_view s);

struct Demographics {
  std::string patient_id;
  std::optional<int> age;
  Gender gender = Gender::unknown;
  std::optional<std::string> ethnicity;

  friend bool operator==(const Demographics&, const Demographics&) = default;
};

struct PatientSeries {
  std::string patient_id;
  std::array<std::vector<Observation>, kNumChannels> channels;
  std::optional<Demographics> demographics;
  std::vector<Timestamp> onset_times;  // ascending

  std::vector<Observation>& operator[](VitalChannel c) { return channels[index(c)]; }
  const std::vector<Observation>& operator[](VitalChannel c) const {
    return channels[index(c)];
  }

  std::size_t observation_count() const;

  friend bool operator==(const PatientSeries&, const PatientSeries&) = default;
};

/// Steps x channels, column-major so each channel is a contiguous column.
using WindowGrid = Eigen::Matrix<double, Eigen::Dynamic, static_cast<int>(kNumChannels)>;

enum class Label : std::uint8_t { negative = 0, positive = 1 };

struct WindowUnit {
  std::string unit_id;
  std::string patient_id;
  Timestamp start_time = 0;
  WindowGrid grid;
  Label label = Label::negative;
  std::array<int, kNumChannels> channel_observed_counts{};

  int steps() const { return static_cast<int>(grid.rows()); }
  /// Exclusive end of the covered interval: start + steps * 300 s.
  Timestamp end_time() const { return start_time + steps() * kStepSeconds; }
  bool channel_all_missing(VitalChannel c) const;
};

struct Provenance {
  std::string source = "unknown";
  std::optional<std::uint64_t> seed;
};

struct CohortDataset {
  std::vector<WindowUnit> units;
  std::map<std::string, Demographics> demographics;
  Provenance provenance;

  /// Demographics for a patient, or nullptr when the patient has none on file.
  const Demographics* find_demographics(const std::string& patient_id) const;
};

/// Positive-unit count over total unit count. Throws on an empty cohort.
double prevalence(const CohortDataset& dataset);

std::string make_unit_id(std::string_view patient_id, Timestamp start_time);

}  // namespace sepsis
