#include "helpers.hpp"

#include "sepsis/resample.hpp"

#include <doctest.h>

#include <set>

using namespace sepsis;

namespace {

PatientSeries hr_series(std::initializer_list<Observation> obs) {
  PatientSeries s;
  s.patient_id = "p";
  s[VitalChannel::heartrate].assign(obs);
  return s;
}

constexpr auto kHr = static_cast<Eigen::Index>(index(VitalChannel::heartrate));

GridSeries column_grid(std::initializer_list<double> values) {
  GridSeries g;
  g.patient_id = "p";
  g.values.setConstant(static_cast<Eigen::Index>(values.size()), kNumChannels, kMissing);
  Eigen::Index k = 0;
  for (double v : values) g.values(k++, kHr) = v;
  g.observed.setZero(g.values.rows(), kNumChannels);
  return g;
}

WindowUnit unit_ending_at(Timestamp end) {
  WindowUnit u;
  u.patient_id = "p";
  u.start_time = end - kWindowSteps * kStepSeconds;
  u.grid.setZero(kWindowSteps, kNumChannels);
  return u;
}

// All observations on a regular 300 s lattice for `hours`, every channel.
PatientSeries dense_series(const std::string& pid, Timestamp start, int hours, Rng& rng) {
  PatientSeries s;
  s.patient_id = pid;
  for (Timestamp t = start; t < start + hours * 3600; t += 300) {
    const Timestamp at = t + static_cast<Timestamp>(rng.uniform_int(0, 299));
    for (auto c : kAllChannels) {
      if (c == VitalChannel::pp || rng.bernoulli(0.2)) continue;
      const double lo = c == VitalChannel::gcs           ? 3
                        : c == VitalChannel::respiration ? 14
                        : c == VitalChannel::diastolicbp ? 40
                                                         : 90;
      s[c].push_back({at, std::round(rng.uniform(lo, lo + 10))});
    }
  }
  return s;
}

}  // namespace

TEST_CASE("resample_to_grid carries the last observation forward") {
  const auto g = resample_to_grid(hr_series({{0, 80}, {460, 90}}));
  CHECK(g.grid_start == 0);
  REQUIRE(g.steps() == 3);
  CHECK(g.values(0, kHr) == 80);
  CHECK(g.values(1, kHr) == 80);
  CHECK(g.values(2, kHr) == 90);
}

TEST_CASE("resample_to_grid with a single observation") {
  const auto g = resample_to_grid(hr_series({{0, 75}}));
  REQUIRE(g.steps() == 1);
  CHECK(g.values(0, kHr) == 75);
}

TEST_CASE("resample_to_grid with an observation between cells") {
  const auto g = resample_to_grid(hr_series({{460, 88}}));
  CHECK(g.grid_start == 300);
  REQUIRE(g.steps() == 2);
  CHECK(is_missing(g.values(0, kHr)));
  CHECK(g.values(1, kHr) == 88);
  CHECK(g.grid_start % kStepSeconds == 0);
}

TEST_CASE("resample_to_grid of an empty series throws") {
  PatientSeries s;
  CHECK_THROWS_WITH_AS(resample_to_grid(s), "empty series", Error);
}

TEST_CASE("fill_missing") {
  SUBCASE("forward then backward") {
    const auto g = fill_missing(column_grid({kMissing, 5, kMissing, 7}));
    CHECK(g.values(0, kHr) == 5);
    CHECK(g.values(1, kHr) == 5);
    CHECK(g.values(2, kHr) == 5);
    CHECK(g.values(3, kHr) == 7);
    CHECK_FALSE(g.unobserved[index(VitalChannel::heartrate)]);
  }
  SUBCASE("unobserved channel stays missing and is flagged") {
    const auto g = fill_missing(column_grid({kMissing, kMissing}));
    CHECK(is_missing(g.values(0, kHr)));
    CHECK(is_missing(g.values(1, kHr)));
    CHECK(g.unobserved[index(VitalChannel::heartrate)]);
  }
  SUBCASE("forward only") {
    const auto g = fill_missing(column_grid({3, kMissing, kMissing}));
    CHECK(g.values(1, kHr) == 3);
    CHECK(g.values(2, kHr) == 3);
  }
}

TEST_CASE("segment_windows cuts full non-overlapping windows") {
  GridSeries g = column_grid({});
  g.values.setConstant(150, kNumChannels, 1.0);
  g.observed.setOnes(150, kNumChannels);
  g = fill_missing(g);
  auto units = segment_windows(g);
  REQUIRE(units.size() == 2);
  CHECK(units[0].start_time == 0);
  CHECK(units[1].start_time == 72 * 300);
  CHECK(units[0].channel_observed_counts[0] == 72);

  g.values.setConstant(72, kNumChannels, 1.0);
  g.observed.setOnes(72, kNumChannels);
  CHECK(segment_windows(fill_missing(g)).size() == 1);

  g.values.setConstant(71, kNumChannels, 1.0);
  g.observed.setOnes(71, kNumChannels);
  CHECK(segment_windows(fill_missing(g)).empty());
}

TEST_CASE("segment_windows blanks channels first seen after the window") {
  GridSeries g = column_grid({});
  g.values.setConstant(144, kNumChannels, kMissing);
  g.observed.setZero(144, kNumChannels);
  g.values(100, kHr) = 70;
  g.observed(100, kHr) = 1;
  const auto units = segment_windows(fill_missing(g));
  REQUIRE(units.size() == 2);
  CHECK(units[0].channel_all_missing(VitalChannel::heartrate));
  CHECK(units[1].grid(0, kHr) == 70);
}

TEST_CASE("label_and_prune uses the half-open horizon") {
  SUBCASE("onset inside the horizon") {
    const auto out = label_and_prune({unit_ending_at(21600)}, {30000});
    REQUIRE(out.size() == 1);
    CHECK(out[0].label == Label::positive);
  }
  SUBCASE("onset beyond the horizon") {
    const auto out = label_and_prune({unit_ending_at(21600)}, {33000});
    REQUIRE(out.size() == 1);
    CHECK(out[0].label == Label::negative);
  }
  SUBCASE("onset inside the window drops the unit") {
    CHECK(label_and_prune({unit_ending_at(21600)}, {10000}).empty());
  }
  SUBCASE("onset exactly at the end drops the unit") {
    CHECK(label_and_prune({unit_ending_at(21600)}, {21600}).empty());
  }
}

TEST_CASE("label horizon boundary is exact") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const Timestamp end = static_cast<Timestamp>(rng.uniform_int(72, 10000)) * kStepSeconds;
    const Timestamp edge = end + kHorizonSteps * kStepSeconds;
    CHECK(label_and_prune({unit_ending_at(end)}, {edge})[0].label == Label::positive);
    CHECK(label_and_prune({unit_ending_at(end)}, {edge + 1})[0].label == Label::negative);
    CHECK(label_and_prune({unit_ending_at(end)}, {end + 1})[0].label == Label::positive);
  }
}

TEST_CASE("validate_unit") {
  auto u = testing::make_unit("p", 0, [](std::size_t, int) { return 80.0; });
  CHECK(validate_unit(u).accepted);

  u.channel_observed_counts[index(VitalChannel::respiration)] = 0;
  const auto v = validate_unit(u);
  CHECK_FALSE(v.accepted);
  CHECK(v.reason == "sparse:respiration");

  auto g = testing::make_unit("p", 0, [](std::size_t, int) { return 80.0; });
  g.channel_observed_counts[index(VitalChannel::gcs)] = 0;
  g.grid.col(static_cast<Eigen::Index>(index(VitalChannel::gcs))).setConstant(kMissing);
  CHECK_FALSE(validate_unit(g).accepted);
  CHECK(validate_unit(g, {1, true}).accepted);

  auto m = testing::make_unit("p", 0, [](std::size_t, int) { return 80.0; });
  m.grid.col(static_cast<Eigen::Index>(index(VitalChannel::spo2))).setConstant(kMissing);
  CHECK(validate_unit(m).reason == "missing:spo2");

  auto s = testing::make_unit("p", 0, [](std::size_t, int) { return 80.0; });
  s.channel_observed_counts[index(VitalChannel::heartrate)] = 3;
  CHECK_FALSE(validate_unit(s, {4, false}).accepted);
  CHECK(validate_unit(s, {3, false}).accepted);
}

TEST_CASE("unit_qsofa reads the last step") {
  auto u = testing::make_unit("p", 0, [](std::size_t c, int) {
    switch (static_cast<VitalChannel>(c)) {
      case VitalChannel::respiration: return 24.0;
      case VitalChannel::systolicbp: return 95.0;
      case VitalChannel::gcs: return 14.0;
      default: return 80.0;
    }
  });
  CHECK(unit_qsofa(u).score == 3);
}

TEST_CASE("preprocessing properties on random patients") {
  Rng rng(21);
  PreprocessConfig config;
  std::size_t total_units = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto series = dense_series("p", 1'600'000'000 + trial * 7, static_cast<int>(rng.uniform_int(5, 30)), rng);
    std::vector<Timestamp> onsets;
    if (rng.bernoulli(0.5)) onsets.push_back(1'600'000'000 + rng.uniform_int(3600, 30 * 3600));

    RejectionReport report;
    PreprocessStats stats;
    auto s = series;
    s.onset_times = onsets;
    const auto units = preprocess_patient(s, config, report, stats);
    RejectionReport report2;
    PreprocessStats stats2;
    const auto again = preprocess_patient(s, config, report2, stats2);
    REQUIRE(units.size() == again.size());
    total_units += units.size();

    std::set<double> raw_values[kNumChannels];
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      for (const auto& o : series.channels[c]) raw_values[c].insert(o.value);
    }
    for (std::size_t i = 0; i < units.size(); ++i) {
      CHECK(testing::bit_equal(units[i].grid, again[i].grid));
      CHECK(units[i].label == again[i].label);
      CHECK(units[i].start_time % kStepSeconds == 0);
      if (i > 0) CHECK(units[i].start_time >= units[i - 1].end_time());
      for (std::size_t c = 0; c < kNumChannels; ++c) {
        if (static_cast<VitalChannel>(c) == VitalChannel::pp) continue;
        for (Eigen::Index k = 0; k < units[i].grid.rows(); ++k) {
          const double v = units[i].grid(k, static_cast<Eigen::Index>(c));
          if (!is_missing(v)) CHECK(raw_values[c].count(v) == 1);
        }
      }
      if (!onsets.empty()) CHECK(units[i].end_time() < onsets.front());
    }
  }
  CHECK(total_units > 30);
}

TEST_CASE("preprocess_cohort output is independent of worker count") {
  Rng rng(4);
  SeriesMap series;
  std::map<std::string, std::vector<Timestamp>> onsets;
  for (int p = 0; p < 12; ++p) {
    const std::string pid = "p" + std::to_string(p);
    series[pid] = dense_series(pid, 1'600'000'000, 20, rng);
    if (p % 3 == 0) onsets[pid] = {1'600'000'000 + 15 * 3600};
  }
  const auto a = preprocess_cohort(series, onsets, {}, {}, 1);
  const auto b = preprocess_cohort(series, onsets, {}, {}, 4);
  REQUIRE(a.dataset.units.size() == b.dataset.units.size());
  CHECK(a.dataset.units.size() > 0);
  for (std::size_t i = 0; i < a.dataset.units.size(); ++i) {
    CHECK(a.dataset.units[i].unit_id == b.dataset.units[i].unit_id);
    CHECK(testing::bit_equal(a.dataset.units[i].grid, b.dataset.units[i].grid));
  }
  CHECK(a.stats.units_accepted == a.dataset.units.size());
}
