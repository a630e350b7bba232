#include "sepsis/features.hpp"

#include "sepsis/parallel.hpp"
#include "sepsis/resample.hpp"
#include "sepsis/text.hpp"

#include <numeric>
#include <set>

namespace sepsis {

namespace {
constexpr std::array<std::string_view, 7> kStatNames = {"mean",   "std",    "max",     "min",
                                                        "kurtosis", "median", "skewness"};

Eigen::Index col_of(VitalChannel c) { return static_cast<Eigen::Index>(index(c)); }
}  // namespace

std::string_view stat_name(Stat s) { return kStatNames[static_cast<std::size_t>(s)]; }

std::optional<Stat> parse_stat(std::string_view s) {
  for (std::size_t i = 0; i < kStatNames.size(); ++i) {
    if (kStatNames[i] == s) return kAllStats[i];
  }
  return std::nullopt;
}

void FeatureRecipe::validate(int window_steps) const {
  const auto check_steps = [&](const std::vector<int>& steps, std::string_view what) {
    for (int s : steps) {
      if (s < 0 || s >= window_steps) {
        throw Error("recipe: " + std::string(what) + " step " + std::to_string(s) +
                    " outside [0, " + std::to_string(window_steps) + ")");
      }
    }
  };
  check_steps(lag_steps, "lag");
  check_steps(diff_steps, "diff");
  for (int w : stat_window_steps) {
    if (w < 1 || w > window_steps) {
      throw Error("recipe: stat window " + std::to_string(w) + " outside [1, " +
                  std::to_string(window_steps) + "]");
    }
  }
  if (dft_harmonics < 0 || dft_harmonics >= window_steps / 2) {
    throw Error("recipe: dft harmonics must be in [0, " + std::to_string(window_steps / 2) + ")");
  }
  const auto names = column_names();
  if (std::set<std::string>(names.begin(), names.end()).size() != names.size()) {
    throw Error("recipe: duplicate column names (repeated step or ethnicity?)");
  }
}

std::vector<std::string> FeatureRecipe::column_names() const {
  std::vector<std::string> names;
  for (auto c : kAllChannels) {
    const std::string ch(channel_name(c));
    for (int l : lag_steps) names.push_back(ch + "_lag_" + std::to_string(l));
    for (int d : diff_steps) names.push_back(ch + "_diff_" + std::to_string(d));
    for (int w : stat_window_steps) {
      for (Stat s : stats) names.push_back(ch + "_" + std::string(stat_name(s)) + "_" + std::to_string(w));
    }
    for (int k = 1; k <= dft_harmonics; ++k) names.push_back(ch + "_dft_" + std::to_string(k));
  }
  if (include_demographics) {
    names.emplace_back("age");
    names.emplace_back("gender");
    for (const auto& e : ethnicities) names.push_back("ethnicity_" + e);
  }
  if (include_qsofa) names.emplace_back("qsofa");
  return names;
}

ChannelValues lag_values(const WindowUnit& unit, int lag) {
  if (lag < 0 || lag >= unit.steps()) throw Error("recipe: lag out of range");
  ChannelValues out;
  for (auto c : kAllChannels) {
    out[index(c)] = unit.channel_all_missing(c) ? kMissing : lag_value(unit.grid.col(col_of(c)), lag);
  }
  return out;
}

ChannelValues lagged_differences(const WindowUnit& unit, int lag) {
  if (lag < 0 || lag >= unit.steps()) throw Error("recipe: diff step out of range");
  ChannelValues out;
  for (auto c : kAllChannels) {
    out[index(c)] =
        unit.channel_all_missing(c) ? kMissing : lagged_difference(unit.grid.col(col_of(c)), lag);
  }
  return out;
}

ChannelValues dft_magnitudes(const WindowUnit& unit, int k) {
  if (k < 1) throw Error("recipe: dft harmonic must be >= 1");
  ChannelValues out;
  for (auto c : kAllChannels) {
    out[index(c)] = unit.channel_all_missing(c) ? kMissing : dft_magnitude(unit.grid.col(col_of(c)), k);
  }
  return out;
}

std::array<WindowStats<double>, kNumChannels> rolling_stats(const WindowUnit& unit,
                                                            int window_steps) {
  if (window_steps < 1 || window_steps > unit.steps()) throw Error("recipe: stat window out of range");
  std::array<WindowStats<double>, kNumChannels> out;
  for (auto c : kAllChannels) {
    if (unit.channel_all_missing(c)) {
      out[index(c)] = {kMissing, kMissing, kMissing, kMissing, kMissing, kMissing, kMissing};
    } else {
      out[index(c)] = window_statistics(unit.grid.col(col_of(c)).tail(window_steps));
    }
  }
  return out;
}

std::vector<double> encode_demographics(const Demographics* demo,
                                        const std::vector<std::string>& ethnicities) {
  std::vector<double> out;
  out.reserve(2 + ethnicities.size());
  if (demo == nullptr) {
    out.assign(2 + ethnicities.size(), kMissing);
    return out;
  }
  out.push_back(demo->age ? static_cast<double>(*demo->age) : kMissing);
  switch (demo->gender) {
    case Gender::male: out.push_back(0.0); break;
    case Gender::female: out.push_back(1.0); break;
    case Gender::unknown: out.push_back(kMissing); break;
  }
  for (const auto& e : ethnicities) {
    out.push_back(!demo->ethnicity ? kMissing : (*demo->ethnicity == e ? 1.0 : 0.0));
  }
  return out;
}

Eigen::RowVectorXd feature_row(const WindowUnit& unit, const Demographics* demo,
                               const FeatureRecipe& recipe) {
  std::vector<double> row;
  row.reserve(160);

  std::vector<ChannelValues> lags, diffs, dfts;
  for (int l : recipe.lag_steps) lags.push_back(lag_values(unit, l));
  for (int d : recipe.diff_steps) diffs.push_back(lagged_differences(unit, d));
  for (int k = 1; k <= recipe.dft_harmonics; ++k) dfts.push_back(dft_magnitudes(unit, k));
  std::vector<std::array<WindowStats<double>, kNumChannels>> stats;
  for (int w : recipe.stat_window_steps) stats.push_back(rolling_stats(unit, w));

  for (std::size_t c = 0; c < kNumChannels; ++c) {
    for (const auto& v : lags) row.push_back(v[c]);
    for (const auto& v : diffs) row.push_back(v[c]);
    for (const auto& per_window : stats) {
      for (Stat s : recipe.stats) row.push_back(per_window[c][s]);
    }
    for (const auto& v : dfts) row.push_back(v[c]);
  }
  if (recipe.include_demographics) {
    for (double v : encode_demographics(demo, recipe.ethnicities)) row.push_back(v);
  }
  if (recipe.include_qsofa) row.push_back(static_cast<double>(unit_qsofa(unit).score));
  return Eigen::Map<const Eigen::RowVectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
}

std::optional<Eigen::Index> FeatureMatrix::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<Eigen::Index>(i);
  }
  return std::nullopt;
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<Eigen::Index>& rows) const {
  FeatureMatrix out;
  out.columns = columns;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), cols());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  out.unit_ids.reserve(rows.size());
  out.patient_ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    const auto dst = static_cast<Eigen::Index>(i);
    out.values.row(dst) = values.row(r);
    out.labels[dst] = labels[r];
    out.unit_ids.push_back(unit_ids[static_cast<std::size_t>(r)]);
    out.patient_ids.push_back(patient_ids[static_cast<std::size_t>(r)]);
  }
  return out;
}

FeatureMatrix build_feature_matrix(const CohortDataset& dataset, const FeatureRecipe& recipe,
                                   int workers) {
  recipe.validate();
  for (const auto& u : dataset.units) {
    if (u.steps() != kWindowSteps) {
      throw Error("unit " + u.unit_id + " has " + std::to_string(u.steps()) + " steps, expected " +
                  std::to_string(kWindowSteps));
    }
  }

  std::vector<std::size_t> order(dataset.units.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ua = dataset.units[a];
    const auto& ub = dataset.units[b];
    if (ua.patient_id != ub.patient_id) return ua.patient_id < ub.patient_id;
    return ua.start_time < ub.start_time;
  });

  FeatureMatrix m;
  m.columns = recipe.column_names();
  const auto n = static_cast<Eigen::Index>(order.size());
  m.values.resize(n, static_cast<Eigen::Index>(m.columns.size()));
  m.labels.resize(n);
  m.unit_ids.resize(order.size());
  m.patient_ids.resize(order.size());

  WorkerPool pool(workers);
  pool.parallel_for(order.size(), [&](std::size_t i) {
    const auto& u = dataset.units[order[i]];
    const auto r = static_cast<Eigen::Index>(i);
    m.values.row(r) = feature_row(u, dataset.find_demographics(u.patient_id), recipe);
    m.labels[r] = u.label == Label::positive ? 1 : 0;
    m.unit_ids[i] = u.unit_id;
    m.patient_ids[i] = u.patient_id;
  });
  return m;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
  out << "unit_id,patient_id,label";
  for (const auto& c : m.columns) out << ',' << c;
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto i = static_cast<std::size_t>(r);
    out << text::csv_escape(m.unit_ids[i]) << ',' << text::csv_escape(m.patient_ids[i]) << ','
        << m.labels[r];
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << text::format_cell(m.values(r, c));
    out << '\n';
  }
}

FeatureMatrix read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("feature matrix: missing header row");
  const auto header = text::split_csv(line);
  if (header.size() < 3 || header[0] != "unit_id" || header[1] != "patient_id" ||
      header[2] != "label") {
    throw Error("feature matrix: header must start with unit_id,patient_id,label");
  }
  FeatureMatrix m;
  m.columns.assign(header.begin() + 3, header.end());

  std::vector<double> cells;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split_csv(line);
    const auto where = "feature matrix: line " + std::to_string(line_no);
    if (fields.size() != header.size()) throw Error(where + ": expected " + std::to_string(header.size()) + " fields");
    const auto label = text::parse_int(fields[2]);
    if (!label || (*label != 0 && *label != 1)) throw Error(where + ": label must be 0 or 1");
    m.unit_ids.push_back(fields[0]);
    m.patient_ids.push_back(fields[1]);
    labels.push_back(static_cast<int>(*label));
    for (std::size_t c = 3; c < fields.size(); ++c) {
      if (text::trim(fields[c]).empty()) {
        cells.push_back(kMissing);
        continue;
      }
      const auto v = text::parse_double(fields[c]);
      if (!v) throw Error(where + ": bad number in column " + header[c]);
      cells.push_back(*v);
    }
  }
  const auto rows = static_cast<Eigen::Index>(labels.size());
  const auto cols = static_cast<Eigen::Index>(m.columns.size());
  m.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      cells.data(), rows, cols);
  m.labels = Eigen::Map<const Eigen::VectorXi>(labels.data(), rows);
  return m;
}

}  // namespace sepsis
