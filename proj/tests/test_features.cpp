#include "helpers.hpp"
#include "oracles.hpp"

#include "sepsis/features.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace sepsis;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

std::vector<double> to_std(const Eigen::VectorXd& x) { return {x.data(), x.data() + x.size()}; }

Eigen::VectorXd random_vector(Rng& rng, int n) {
  Eigen::VectorXd x(n);
  const double scale = std::exp(rng.uniform(-3, 5));
  const double offset = rng.uniform(-200, 200);
  for (int i = 0; i < n; ++i) x[i] = offset + scale * rng.normal();
  return x;
}

}  // namespace

TEST_CASE("window statistics of small vectors") {
  const auto s = window_statistics(vec({1, 2, 3}));
  CHECK(s.mean == 2);
  CHECK(s.std == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(s.skewness == doctest::Approx(0.0));
  CHECK(s.median == 2);
  CHECK(s.max == 3);
  CHECK(s.min == 1);

  const auto k = window_statistics(vec({1, 1, 3, 3}));
  CHECK(k.kurtosis == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(k.median == 2);

  const auto c = window_statistics(vec({4, 4, 4}));
  CHECK(c.std == 0);
  CHECK(is_missing(c.skewness));
  CHECK(is_missing(c.kurtosis));
}

TEST_CASE("window statistics agree with the moment oracle") {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = trial % 2 == 0 ? 72 : static_cast<int>(rng.uniform_int(2, 72));
    const auto x = random_vector(rng, n);
    const auto s = window_statistics(x);
    const auto o = oracle::moments(to_std(x));
    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    CHECK(std::abs(s.mean - o.mean) <= 1e-10 * scale);
    CHECK(std::abs(s.std - o.std) <= 1e-10 * scale);
    CHECK(s.max == o.max);
    CHECK(s.min == o.min);
    CHECK(s.median == o.median);
    CHECK(std::abs(s.skewness - o.skewness) <= 1e-10);
    CHECK(std::abs(s.kurtosis - o.kurtosis) <= 1e-10);
  }
}

TEST_CASE("window statistics are affine equivariant") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = random_vector(rng, 72);
    const double a = rng.uniform(0.1, 5) * (rng.bernoulli(0.5) ? 1 : -1), b = rng.uniform(-50, 50);
    const Eigen::VectorXd y = (a * x.array() + b).matrix();
    const auto sx = window_statistics(x), sy = window_statistics(y);
    const double tol = 1e-9 * (1 + std::abs(b) + std::abs(a) * x.cwiseAbs().maxCoeff());
    CHECK(std::abs(sy.mean - (a * sx.mean + b)) <= tol);
    CHECK(std::abs(sy.std - std::abs(a) * sx.std) <= tol);
    CHECK(std::abs(sy.kurtosis - sx.kurtosis) <= 1e-8);
    const Eigen::VectorXd neg = -x;
    CHECK(std::abs(window_statistics(neg).skewness + sx.skewness) <= 1e-10);
  }
}

TEST_CASE("dft magnitudes") {
  CHECK(dft_magnitude(vec({1, -1, 1, -1}), 1) == doctest::Approx(0.0));
  CHECK(dft_magnitude(vec({1, -1, 1, -1}), 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dft_magnitude(vec({5, 5, 5, 5, 5}), 1) == 0.0);
  CHECK(dft_magnitude(vec({5, 5, 5, 5, 5}), 2) == 0.0);
}

TEST_CASE("dft magnitudes agree with the naive transform and ignore shifts") {
  Rng rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = random_vector(rng, 72);
    const double scale = std::max(1.0, (x.array() - x.mean()).abs().maxCoeff());
    for (int k = 1; k <= 4; ++k) {
      CHECK(std::abs(dft_magnitude(x, k) - oracle::dft(to_std(x), k)) <= 1e-9 * scale);
      const Eigen::VectorXd shifted = (x.array() + rng.uniform(-100, 100)).matrix();
      CHECK(std::abs(dft_magnitude(shifted, k) - dft_magnitude(x, k)) <= 1e-9 * scale);
    }
  }
}

TEST_CASE("lags and lagged differences") {
  const auto constant = testing::make_unit("p", 0, [](std::size_t, int) { return 80.0; });
  CHECK(lag_values(constant, 6)[0] == 80);
  CHECK(lagged_differences(constant, 6)[0] == 0);

  const auto ramp = testing::make_unit("p", 0, [](std::size_t, int s) { return static_cast<double>(s); });
  CHECK(lag_values(ramp, 1)[3] == 70);
  CHECK(lagged_differences(ramp, 3)[3] == 3);

  const auto falling = testing::make_unit("p", 0, [](std::size_t, int s) { return 120.0 - 20.0 * s / 71.0; });
  const auto d = lagged_differences(falling, 12)[index(VitalChannel::systolicbp)];
  CHECK(d < 0);
  CHECK(d == falling.grid(71, 0) - falling.grid(59, 0));

  auto no_gcs = constant;
  no_gcs.grid.col(static_cast<Eigen::Index>(index(VitalChannel::gcs))).setConstant(kMissing);
  CHECK(is_missing(lag_values(no_gcs, 1)[index(VitalChannel::gcs)]));
  CHECK(is_missing(dft_magnitudes(no_gcs, 1)[index(VitalChannel::gcs)]));
  CHECK(is_missing(rolling_stats(no_gcs, 72)[index(VitalChannel::gcs)].mean));

  CHECK_THROWS_AS(lag_values(constant, 72), Error);
}

TEST_CASE("rolling stats use the trailing window") {
  const auto ramp = testing::make_unit("p", 0, [](std::size_t, int s) { return static_cast<double>(s); });
  const auto s = rolling_stats(ramp, 12)[0];
  CHECK(s.min == 60);
  CHECK(s.max == 71);
  CHECK(s.mean == doctest::Approx(65.5));
}

TEST_CASE("encode_demographics") {
  Demographics d{"p", 67, Gender::female, std::string("b")};
  CHECK(encode_demographics(&d) == std::vector<double>{67, 1});
  d.gender = Gender::male;
  CHECK(encode_demographics(&d)[1] == 0);
  const auto unknown = encode_demographics(nullptr);
  REQUIRE(unknown.size() == 2);
  CHECK(is_missing(unknown[0]));
  CHECK(is_missing(unknown[1]));
  const auto onehot = encode_demographics(&d, {"a", "b"});
  CHECK(onehot == std::vector<double>{67, 0, 0, 1});
}

TEST_CASE("recipe column counts and names") {
  const FeatureRecipe r;
  const auto names = r.column_names();
  CHECK(names.size() == 138);
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == 138);
  CHECK(std::find(names.begin(), names.end(), "heartrate_lag_3") != names.end());
  CHECK(names.back() == "gender");

  FeatureRecipe small;
  small.lag_steps = {1};
  small.diff_steps.clear();
  small.stats.clear();
  small.dft_harmonics = 0;
  CHECK(small.column_names().size() == 10);

  FeatureRecipe bad;
  bad.lag_steps = {72};
  CHECK_THROWS_AS(bad.validate(), Error);
  FeatureRecipe bad_k;
  bad_k.dft_harmonics = 36;
  CHECK_THROWS_AS(bad_k.validate(), Error);
}

TEST_CASE("build_feature_matrix orders rows and is pure") {
  Rng rng(2);
  CohortDataset d;
  for (const char* pid : {"b", "a"}) {
    for (int w : {1, 0}) {
      d.units.push_back(testing::make_unit(pid, w * 21600, [&](std::size_t, int) { return rng.uniform(60, 100); }));
    }
  }
  d.units.push_back(d.units[0]);
  d.units.back().patient_id = "c";
  d.units.back().unit_id = make_unit_id("c", d.units[0].start_time);
  d.demographics["a"] = {"a", 50, Gender::male, std::nullopt};

  const auto m = build_feature_matrix(d, FeatureRecipe{});
  REQUIRE(m.rows() == 5);
  CHECK(m.cols() == 138);
  CHECK(m.patient_ids == std::vector<std::string>{"a", "a", "b", "b", "c"});
  CHECK(m.unit_ids[0] == make_unit_id("a", 0));
  CHECK(m.values(0, 136) == 50);
  CHECK(is_missing(m.values(2, 136)));
  // b's first unit and the copy under patient c are the same unit.
  CHECK(testing::bit_equal(m.values.row(3).head(136), m.values.row(4).head(136)));

  const auto parallel = build_feature_matrix(d, FeatureRecipe{}, 4);
  CHECK(testing::bit_equal(m.values, parallel.values));
}

TEST_CASE("feature CSV round trip") {
  Rng rng(8);
  auto m = testing::random_matrix(rng, 20, 5, 0.2);
  m.patient_ids[0] = "needs,quote";
  std::ostringstream out;
  write_feature_csv(out, m);
  std::istringstream in(out.str());
  const auto back = read_feature_csv(in);
  CHECK(back.columns == m.columns);
  CHECK(back.unit_ids == m.unit_ids);
  CHECK(back.patient_ids == m.patient_ids);
  CHECK(back.labels == m.labels);
  CHECK(testing::bit_equal(back.values, m.values));
}
