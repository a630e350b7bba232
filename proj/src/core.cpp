#include "sepsis/core.hpp"

namespace sepsis {

namespace {
constexpr std::array<std::string_view, kNumChannels> kChannelNames = {
    "systolicbp", "diastolicbp", "meanbp", "heartrate", "respiration", "spo2", "pp", "gcs",
};
}  // namespace

std::string_view channel_name(VitalChannel c) { return kChannelNames[index(c)]; }

std::optional<VitalChannel> parse_channel(std::string_view name) {
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    if (kChannelNames[i] == name) return kAllChannels[i];
  }
  return std::nullopt;
}

std::string_view gender_name(Gender g) {
  switch (g) {
    case Gender::male:
      return "male";
    case Gender::female:
      return "female";
    case Gender::unknown:
      break;
  }
  return "unknown";
}

Gender parse_gender(std::string_view s) {
  if (s == "male" || s == "M" || s == "m" || s == "Male") return Gender::male;
  if (s == "female" || s == "F" || s == "f" || s == "Female") return Gender::female;
  return Gender::unknown;
}

std::size_t PatientSeries::observation_count() const {
  std::size_t n = 0;
  for (const auto& ch : channels) n += ch.size();
  return n;
}

bool WindowUnit::channel_all_missing(VitalChannel c) const {
  const auto col = grid.col(static_cast<Eigen::Index>(index(c)));
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    if (!is_missing(col[i])) return false;
  }
  return true;
}

const Demographics* CohortDataset::find_demographics(const std::string& patient_id) const {
  const auto it = demographics.find(patient_id);
  return it == demographics.end() ? nullptr : &it->second;
}

double prevalence(const CohortDataset& dataset) {
  if (dataset.units.empty()) throw Error("empty cohort");
  std::size_t positives = 0;
  for (const auto& u : dataset.units) positives += u.label == Label::positive ? 1 : 0;
  return static_cast<double>(positives) / static_cast<double>(dataset.units.size());
}

std::string make_unit_id(std::string_view patient_id, Timestamp start_time) {
  std::string id(patient_id);
  id += '@';
  id += std::to_string(start_time);
  return id;
}

}  // namespace sepsis
