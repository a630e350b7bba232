#include "sepsis/ingest.hpp"

#include "sepsis/text.hpp"

#include <algorithm>
#include <cmath>

namespace sepsis {

PlausibilityTable::PlausibilityTable() {
  (*this)[VitalChannel::heartrate] = {20, 300};
  (*this)[VitalChannel::respiration] = {4, 80};
  (*this)[VitalChannel::spo2] = {50, 100};
  (*this)[VitalChannel::systolicbp] = {40, 300};
  (*this)[VitalChannel::diastolicbp] = {20, 200};
  (*this)[VitalChannel::meanbp] = {30, 250};
  (*this)[VitalChannel::pp] = {5, 250};
  (*this)[VitalChannel::gcs] = {3, 15};
}

void PlausibilityTable::validate() const {
  for (auto c : kAllChannels) {
    const auto& b = (*this)[c];
    if (!(b.min < b.max)) {
      throw Error("plausibility bounds for " + std::string(channel_name(c)) +
                  " must satisfy min < max");
    }
  }
}

RejectionReport& RejectionReport::merge(const RejectionReport& other) {
  malformed += other.malformed;
  non_finite += other.non_finite;
  out_of_range += other.out_of_range;
  duplicate_timestamp += other.duplicate_timestamp;
  for (const auto& [pid, n] : other.rejected_units) rejected_units[pid] += n;
  return *this;
}

namespace {

struct RawObservation {
  Timestamp time;
  double value;
};

using RawChannels = std::array<std::vector<RawObservation>, kNumChannels>;

std::optional<std::size_t> find_column(const std::vector<std::string>& header,
                                       std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (text::trim(header[i]) == name) return i;
  }
  return std::nullopt;
}

// Stable sort by time, then collapse equal timestamps keeping the last row in
// file order.
std::vector<Observation> normalize(std::vector<RawObservation> raw, std::size_t& duplicates) {
  std::stable_sort(raw.begin(), raw.end(),
                   [](const RawObservation& a, const RawObservation& b) { return a.time < b.time; });
  std::vector<Observation> out;
  out.reserve(raw.size());
  for (const auto& r : raw) {
    if (!out.empty() && out.back().time == r.time) {
      out.back().value = r.value;
      ++duplicates;
    } else {
      out.push_back({r.time, r.value});
    }
  }
  return out;
}

enum class CellStatus { ok, malformed, non_finite };

CellStatus parse_value(std::string_view cell, double& out) {
  const auto v = text::parse_double(cell);
  if (!v) return CellStatus::malformed;
  if (!std::isfinite(*v)) return CellStatus::non_finite;
  out = *v;
  return CellStatus::ok;
}

}  // namespace

ParsedVitals parse_vitals(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("vitals: missing header row");
  const auto header = text::split_csv(line);
  const auto pid_col = find_column(header, "patient_id");
  const auto ts_col = find_column(header, "timestamp");
  if (!pid_col || !ts_col) throw Error("vitals: header must name patient_id and timestamp");

  const auto channel_col = find_column(header, "channel");
  const auto value_col = find_column(header, "value");
  const bool long_format = channel_col && value_col;

  std::array<std::optional<std::size_t>, kNumChannels> wide_cols;
  if (!long_format) {
    bool any = false;
    for (auto c : kAllChannels) {
      wide_cols[index(c)] = find_column(header, channel_name(c));
      any = any || wide_cols[index(c)].has_value();
    }
    if (!any) throw Error("vitals: header names no vital-sign channel");
  }

  ParsedVitals result;
  auto& report = result.report;
  std::map<std::string, RawChannels> raw;

  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto cells = text::split_csv(line);
    if (cells.size() != header.size()) {
      ++report.malformed;
      continue;
    }
    const auto pid = std::string(text::trim(cells[*pid_col]));
    const auto ts = text::parse_int(cells[*ts_col]);
    if (pid.empty() || !ts) {
      ++report.malformed;
      continue;
    }

    if (long_format) {
      const auto channel = parse_channel(text::trim(cells[*channel_col]));
      double v = 0.0;
      if (!channel) {
        ++report.malformed;
        continue;
      }
      switch (parse_value(cells[*value_col], v)) {
        case CellStatus::malformed:
          ++report.malformed;
          continue;
        case CellStatus::non_finite:
          ++report.non_finite;
          continue;
        case CellStatus::ok:
          break;
      }
      raw[pid][index(*channel)].push_back({*ts, v});
      continue;
    }

    // Wide rows are all-or-nothing: one bad cell rejects the row.
    std::array<std::optional<double>, kNumChannels> values;
    CellStatus row_status = CellStatus::ok;
    for (auto c : kAllChannels) {
      const auto& col = wide_cols[index(c)];
      if (!col || text::trim(cells[*col]).empty()) continue;
      double v = 0.0;
      const auto st = parse_value(cells[*col], v);
      if (st != CellStatus::ok) {
        row_status = st == CellStatus::malformed || row_status == CellStatus::malformed
                         ? CellStatus::malformed
                         : CellStatus::non_finite;
        continue;
      }
      values[index(c)] = v;
    }
    if (row_status == CellStatus::malformed) {
      ++report.malformed;
      continue;
    }
    if (row_status == CellStatus::non_finite) {
      ++report.non_finite;
      continue;
    }
    auto& chans = raw[pid];
    for (auto c : kAllChannels) {
      if (values[index(c)]) chans[index(c)].push_back({*ts, *values[index(c)]});
    }
  }

  for (auto& [pid, chans] : raw) {
    PatientSeries s;
    s.patient_id = pid;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      s.channels[c] = normalize(std::move(chans[c]), report.duplicate_timestamp);
    }
    result.series.emplace(pid, std::move(s));
  }
  return result;
}

std::map<std::string, Demographics> parse_demographics(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("demographics: missing header row");
  const auto header = text::split_csv(line);
  const auto pid_col = find_column(header, "patient_id");
  if (!pid_col) throw Error("demographics: header must name patient_id");
  const auto age_col = find_column(header, "age");
  const auto gender_col = find_column(header, "gender");
  const auto eth_col = find_column(header, "ethnicity");

  std::map<std::string, Demographics> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto cells = text::split_csv(line);
    if (cells.size() != header.size()) {
      throw Error("demographics: line " + std::to_string(line_no) + ": expected " +
                  std::to_string(header.size()) + " fields");
    }
    Demographics d;
    d.patient_id = std::string(text::trim(cells[*pid_col]));
    if (age_col) {
      const auto cell = text::trim(cells[*age_col]);
      if (!cell.empty() && cell != "unknown") {
        const auto age = text::parse_int(cell);
        if (!age || *age < 0) {
          throw Error("demographics: line " + std::to_string(line_no) + ": bad age '" +
                      std::string(cell) + "'");
        }
        d.age = static_cast<int>(*age);
      }
    }
    if (gender_col) d.gender = parse_gender(text::trim(cells[*gender_col]));
    if (eth_col) {
      const auto cell = text::trim(cells[*eth_col]);
      if (!cell.empty() && cell != "unknown") d.ethnicity = std::string(cell);
    }
    if (!out.emplace(d.patient_id, d).second) {
      throw Error("demographics: line " + std::to_string(line_no) + ": duplicate patient_id '" +
                  d.patient_id + "'");
    }
  }
  return out;
}

std::map<std::string, std::vector<Timestamp>> parse_onsets(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("onsets: missing header row");
  const auto header = text::split_csv(line);
  const auto pid_col = find_column(header, "patient_id");
  const auto ts_col = find_column(header, "onset_timestamp");
  if (!pid_col || !ts_col) throw Error("onsets: header must name patient_id and onset_timestamp");

  std::map<std::string, std::vector<Timestamp>> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto cells = text::split_csv(line);
    const auto ts = cells.size() == header.size() ? text::parse_int(cells[*ts_col]) : std::nullopt;
    if (!ts) throw Error("onsets: line " + std::to_string(line_no) + ": malformed row");
    out[std::string(text::trim(cells[*pid_col]))].push_back(*ts);
  }
  for (auto& [pid, times] : out) {
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
  }
  return out;
}

PatientSeries derive_pulse_pressure(PatientSeries series) {
  const auto& sbp = series[VitalChannel::systolicbp];
  const auto& dbp = series[VitalChannel::diastolicbp];
  auto& pp = series[VitalChannel::pp];

  std::vector<Observation> derived;
  std::size_t i = 0, j = 0;
  while (i < sbp.size() && j < dbp.size()) {
    if (sbp[i].time < dbp[j].time) {
      ++i;
    } else if (dbp[j].time < sbp[i].time) {
      ++j;
    } else {
      derived.push_back({sbp[i].time, sbp[i].value - dbp[j].value});
      ++i;
      ++j;
    }
  }

  std::vector<Observation> merged;
  merged.reserve(pp.size() + derived.size());
  std::size_t a = 0, b = 0;
  while (a < pp.size() || b < derived.size()) {
    if (b == derived.size() || (a < pp.size() && pp[a].time <= derived[b].time)) {
      if (b < derived.size() && pp[a].time == derived[b].time) ++b;
      merged.push_back(pp[a++]);
    } else {
      merged.push_back(derived[b++]);
    }
  }
  pp = std::move(merged);
  return series;
}

FilteredSeries sanity_filter(PatientSeries series, const PlausibilityTable& table) {
  FilteredSeries out;
  for (auto c : kAllChannels) {
    auto& obs = series[c];
    const auto before = obs.size();
    std::erase_if(obs, [&](const Observation& o) { return !table.contains(c, o.value); });
    out.report.out_of_range += before - obs.size();
  }
  out.series = std::move(series);
  return out;
}

QsofaScore compute_qsofa(double respiration, double systolic_bp, std::optional<double> gcs) {
  QsofaScore q;
  q.score += respiration >= 22.0 ? 1 : 0;
  q.score += systolic_bp <= 100.0 ? 1 : 0;
  if (gcs && !is_missing(*gcs)) {
    q.score += *gcs < 15.0 ? 1 : 0;
  } else {
    q.gcs_missing = true;
  }
  return q;
}

}  // namespace sepsis
