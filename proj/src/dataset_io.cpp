#include "sepsis/dataset_io.hpp"

#include "sepsis/resample.hpp"
#include "sepsis/text.hpp"

#include <map>
#include <string>

namespace sepsis {

namespace {

int label_value(Label l) { return l == Label::positive ? 1 : 0; }

Label parse_label(std::string_view s, const std::string& where) {
  if (s == "1") return Label::positive;
  if (s == "0") return Label::negative;
  throw Error(where + ": label must be 0 or 1");
}

std::vector<std::string> read_header(std::istream& in, const std::string& file,
                                     const std::vector<std::string>& expected) {
  std::string line;
  if (!std::getline(in, line)) throw Error(file + ": missing header row");
  auto header = text::split_csv(line);
  for (auto& h : header) h = std::string(text::trim(h));
  if (header != expected) throw Error(file + ": unexpected header");
  return header;
}

std::vector<std::string> units_header() {
  std::vector<std::string> h{"unit_id", "patient_id", "step"};
  for (const auto c : kAllChannels) h.emplace_back(channel_name(c));
  h.emplace_back("label");
  return h;
}

std::vector<std::string> summary_header() {
  std::vector<std::string> h{"unit_id", "patient_id", "start_time", "label", "qsofa", "gcs_missing"};
  for (const auto c : kAllChannels) h.push_back(std::string(channel_name(c)) + "_obs");
  return h;
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
  return out;
}

}  // namespace

void write_units_csv(std::ostream& out, const CohortDataset& dataset) {
  out << join(units_header()) << '\n';
  for (const auto& u : dataset.units) {
    const auto id = text::csv_escape(u.unit_id);
    const auto pid = text::csv_escape(u.patient_id);
    for (Eigen::Index s = 0; s < u.grid.rows(); ++s) {
      out << id << ',' << pid << ',' << s;
      for (Eigen::Index c = 0; c < u.grid.cols(); ++c) out << ',' << text::format_cell(u.grid(s, c));
      out << ',' << label_value(u.label) << '\n';
    }
  }
}

void write_units_summary_csv(std::ostream& out, const CohortDataset& dataset) {
  out << join(summary_header()) << '\n';
  for (const auto& u : dataset.units) {
    const auto q = unit_qsofa(u);
    out << text::csv_escape(u.unit_id) << ',' << text::csv_escape(u.patient_id) << ',' << u.start_time << ','
        << label_value(u.label) << ',' << q.score << ',' << (q.gcs_missing ? 1 : 0);
    for (const auto n : u.channel_observed_counts) out << ',' << n;
    out << '\n';
  }
}

CohortDataset read_units(std::istream& units, std::istream& summary) {
  CohortDataset dataset;
  dataset.provenance.source = "units file";
  std::map<std::string, std::size_t> position;

  const auto sh = read_header(summary, "units summary", summary_header());
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(summary, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto where = "units summary line " + std::to_string(line_no);
    const auto cells = text::split_csv(line);
    if (cells.size() != sh.size()) throw Error(where + ": expected " + std::to_string(sh.size()) + " fields");
    WindowUnit u;
    u.unit_id = cells[0];
    u.patient_id = cells[1];
    const auto start = text::parse_int(cells[2]);
    if (!start) throw Error(where + ": bad start_time");
    u.start_time = *start;
    u.label = parse_label(text::trim(cells[3]), where);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      const auto n = text::parse_int(cells[6 + c]);
      if (!n || *n < 0) throw Error(where + ": bad observation count");
      u.channel_observed_counts[c] = static_cast<int>(*n);
    }
    if (!position.emplace(u.unit_id, dataset.units.size()).second) {
      throw Error(where + ": duplicate unit_id '" + u.unit_id + "'");
    }
    dataset.units.push_back(std::move(u));
  }

  const auto uh = read_header(units, "units", units_header());
  std::map<std::string, std::vector<std::array<double, kNumChannels>>> rows;
  line_no = 1;
  while (std::getline(units, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto where = "units line " + std::to_string(line_no);
    const auto cells = text::split_csv(line);
    if (cells.size() != uh.size()) throw Error(where + ": expected " + std::to_string(uh.size()) + " fields");
    const auto it = position.find(cells[0]);
    if (it == position.end()) throw Error(where + ": unit '" + cells[0] + "' is not in the summary");
    auto& u = dataset.units[it->second];
    if (cells[1] != u.patient_id) throw Error(where + ": patient_id disagrees with the summary");
    if (parse_label(text::trim(cells[3 + kNumChannels]), where) != u.label) {
      throw Error(where + ": label disagrees with the summary");
    }
    auto& steps = rows[cells[0]];
    const auto step = text::parse_int(cells[2]);
    if (!step || *step != static_cast<long long>(steps.size())) throw Error(where + ": steps must run 0, 1, 2, ...");
    std::array<double, kNumChannels> values{};
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      const auto cell = text::trim(cells[3 + c]);
      if (cell.empty()) {
        values[c] = kMissing;
        continue;
      }
      const auto v = text::parse_double(cell);
      if (!v) throw Error(where + ": bad value '" + std::string(cell) + "'");
      values[c] = *v;
    }
    steps.push_back(values);
  }

  for (auto& u : dataset.units) {
    const auto it = rows.find(u.unit_id);
    if (it == rows.end()) throw Error("units: no rows for unit '" + u.unit_id + "'");
    const auto& steps = it->second;
    u.grid.resize(static_cast<Eigen::Index>(steps.size()), kNumChannels);
    for (std::size_t s = 0; s < steps.size(); ++s) {
      for (std::size_t c = 0; c < kNumChannels; ++c) {
        u.grid(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c)) = steps[s][c];
      }
    }
  }
  return dataset;
}

}  // namespace sepsis
