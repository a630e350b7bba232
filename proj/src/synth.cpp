#include "sepsis/synth.hpp"

#include "sepsis/parallel.hpp"
#include "sepsis/random.hpp"
#include "sepsis/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

namespace sepsis {

namespace {

constexpr Timestamp kEpoch = 1'599'999'900;  // multiple of the grid step
constexpr std::uint64_t kPlanStream = 0xC0407ULL;
constexpr Timestamp kWindowSeconds = kWindowSteps * kStepSeconds;
constexpr Timestamp kHorizonSeconds = kHorizonSteps * kStepSeconds;

void check(bool ok, const std::string& what) {
  if (!ok) throw Error("synth config: " + what);
}

std::string patient_name(std::size_t i, std::size_t n) {
  auto digits = std::to_string(i + 1);
  const auto width = std::max<std::size_t>(4, std::to_string(n).size());
  return "p" + std::string(width - digits.size(), '0') + digits;
}

double round1(double v) { return std::round(v * 10.0) / 10.0; }

// Ornstein-Uhlenbeck noise evaluated at increasing times.
class OuNoise {
 public:
  OuNoise(double sd, double tau) : sd_(sd), tau_(tau) {}

  double at(Timestamp t, Rng& rng) {
    if (!started_) {
      started_ = true;
      x_ = sd_ * rng.normal();
    } else {
      const double a = std::exp(-static_cast<double>(t - last_) / tau_);
      x_ = a * x_ + sd_ * std::sqrt(1.0 - a * a) * rng.normal();
    }
    last_ = t;
    return x_;
  }

 private:
  double sd_;
  double tau_;
  double x_ = 0.0;
  Timestamp last_ = 0;
  bool started_ = false;
};

struct Episode {
  Timestamp peak = 0;
  double sign = 1.0;
};

// Linear rise over `drift` seconds ending at `peak`; zero outside.
double ramp(Timestamp t, Timestamp peak, double drift, bool hold_after) {
  const double start = static_cast<double>(peak) - drift;
  const double x = (static_cast<double>(t) - start) / drift;
  if (x <= 0.0) return 0.0;
  if (t > peak) return hold_after ? 1.0 : 0.0;
  return std::min(x, 1.0);
}

struct PatientPlan {
  int windows = 1;
  bool septic = false;
};

struct PatientOutput {
  std::string vitals;
  std::string demographics;
  std::string onsets;
};

PatientOutput generate_patient(const SynthConfig& cfg, const std::string& pid, const PatientPlan& plan,
                               Rng& rng) {
  const double drift = cfg.drift_hours_before_onset * 3600.0;
  const double s = cfg.interaction_strength;
  const Timestamp t0 = kEpoch + rng.uniform_int(0, 364) * 86400 + rng.uniform_int(0, 287) * kStepSeconds;
  const Timestamp data_end = t0 + plan.windows * kWindowSeconds;

  Timestamp onset = 0;
  double phenotype = 1.0;
  if (plan.septic) {
    onset = data_end + rng.uniform_int(1, kHorizonSeconds);
    phenotype = rng.bernoulli(0.5) ? 1.0 : -1.0;
  }
  const double hit_factor = (1.0 - s) + s * phenotype;
  const Timestamp t_end = plan.septic ? onset + 7200 : data_end + 1800;

  std::vector<Episode> episodes;
  for (int w = 0; w < plan.windows; ++w) {
    if (plan.septic && w == plan.windows - 1) continue;
    if (!rng.bernoulli(s)) continue;
    const Timestamp end = t0 + (w + 1) * kWindowSeconds;
    episodes.push_back({end + rng.uniform_int(1, kHorizonSeconds), rng.bernoulli(0.5) ? 1.0 : -1.0});
  }

  const auto risk = [&](Timestamp t) { return plan.septic ? ramp(t, onset, drift, true) : 0.0; };
  const auto distraction = [&](Timestamp t) {
    double d = 0.0;
    for (const auto& e : episodes) d += e.sign * ramp(t, e.peak, drift, false);
    return d;
  };

  // Patient baselines.
  const double hr0 = rng.normal(82.0, 12.0);
  const double resp0 = rng.normal(17.0, 2.5);
  const double sbp0 = rng.normal(124.0, 15.0);
  const double dbp0 = 0.55 * sbp0 + rng.normal(4.0, 5.0);
  const double spo20 = std::min(99.5, rng.normal(96.5, 1.2));
  const double gcs0 = rng.bernoulli(0.85) ? 15.0 : static_cast<double>(rng.uniform_int(12, 14));

  const auto& sd = cfg.noise_scale;
  const auto ch = [](VitalChannel c) { return index(c); };
  std::array<OuNoise, kNumChannels> noise{
      OuNoise(sd[0], cfg.noise_time_constant_s), OuNoise(sd[1], cfg.noise_time_constant_s),
      OuNoise(sd[2], cfg.noise_time_constant_s), OuNoise(sd[3], cfg.noise_time_constant_s),
      OuNoise(sd[4], cfg.noise_time_constant_s), OuNoise(sd[5], cfg.noise_time_constant_s),
      OuNoise(sd[6], cfg.noise_time_constant_s), OuNoise(sd[7], cfg.noise_time_constant_s)};

  std::vector<std::tuple<Timestamp, int, double>> rows;
  const auto& bounds = cfg.plausibility;
  const auto clip = [&](VitalChannel c, double v) {
    return std::clamp(v, bounds[c].min, bounds[c].max);
  };
  const auto measure = [&](VitalChannel c, Timestamp t, double base, double effect) {
    const auto i = ch(c);
    return base + noise[i].at(t, rng) + effect + cfg.measurement_noise * sd[i] * rng.normal();
  };

  const auto sample_times = [&](VitalChannel c) {
    std::vector<Timestamp> times;
    const double interval = cfg.mean_sampling_interval_s[ch(c)];
    for (Timestamp t = t0; t <= t_end;) {
      if (t == t0 || !rng.bernoulli(cfg.missing_rate[ch(c)])) times.push_back(t);
      const double step = interval * (1.0 + cfg.sampling_jitter * (2.0 * rng.uniform() - 1.0));
      t += std::max<Timestamp>(60, std::llround(step));
    }
    return times;
  };

  // Blood pressure: one cuff reading gives all three values.
  for (const auto t : sample_times(VitalChannel::systolicbp)) {
    const double eff = cfg.bp_effect * (-risk(t) * hit_factor + distraction(t));
    const double sbp = round1(clip(VitalChannel::systolicbp, measure(VitalChannel::systolicbp, t, sbp0, eff)));
    double dbp = measure(VitalChannel::diastolicbp, t, dbp0, 0.6 * eff);
    dbp = round1(clip(VitalChannel::diastolicbp, std::min(dbp, sbp - 10.0)));
    double map = measure(VitalChannel::meanbp, t, (sbp0 + 2.0 * dbp0) / 3.0, (eff + 1.2 * eff) / 3.0);
    map = round1(clip(VitalChannel::meanbp, std::clamp(map, dbp, sbp)));
    rows.emplace_back(t, static_cast<int>(ch(VitalChannel::systolicbp)), sbp);
    rows.emplace_back(t, static_cast<int>(ch(VitalChannel::diastolicbp)), dbp);
    rows.emplace_back(t, static_cast<int>(ch(VitalChannel::meanbp)), map);
  }
  for (const auto t : sample_times(VitalChannel::heartrate)) {
    const double eff = cfg.heartrate_effect * (risk(t) * hit_factor + distraction(t));
    rows.emplace_back(t, static_cast<int>(ch(VitalChannel::heartrate)),
                      round1(clip(VitalChannel::heartrate, measure(VitalChannel::heartrate, t, hr0, eff))));
  }
  for (const auto t : sample_times(VitalChannel::respiration)) {
    const double eff = cfg.respiration_effect * risk(t);
    rows.emplace_back(t, static_cast<int>(ch(VitalChannel::respiration)),
                      round1(clip(VitalChannel::respiration, measure(VitalChannel::respiration, t, resp0, eff))));
  }
  for (const auto t : sample_times(VitalChannel::spo2)) {
    const double eff = -cfg.spo2_effect * risk(t);
    const double v = std::min(100.0, measure(VitalChannel::spo2, t, spo20, eff));
    rows.emplace_back(t, static_cast<int>(ch(VitalChannel::spo2)), round1(clip(VitalChannel::spo2, v)));
  }
  for (const auto t : sample_times(VitalChannel::gcs)) {
    const double v = std::round(measure(VitalChannel::gcs, t, gcs0, 0.0));
    rows.emplace_back(t, static_cast<int>(ch(VitalChannel::gcs)), clip(VitalChannel::gcs, v));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });

  PatientOutput out;
  for (const auto& [t, c, v] : rows) {
    out.vitals += pid + ',' + std::to_string(t) + ',' +
                  std::string(channel_name(kAllChannels[static_cast<std::size_t>(c)])) + ',' +
                  text::format_double(v) + '\n';
  }
  if (plan.septic) out.onsets = pid + ',' + std::to_string(onset) + '\n';

  std::string age;
  if (!rng.bernoulli(cfg.age_unknown_rate)) {
    age = std::to_string(std::clamp<long long>(std::llround(rng.normal(cfg.age_mean, cfg.age_sd)), 18, 95));
  }
  std::string gender = "unknown";
  if (!rng.bernoulli(cfg.gender_unknown_rate)) gender = rng.bernoulli(0.5) ? "male" : "female";
  std::string ethnicity = "unknown";
  if (!cfg.ethnicities.empty() && !rng.bernoulli(cfg.ethnicity_unknown_rate)) {
    const double total = std::accumulate(cfg.ethnicity_weights.begin(), cfg.ethnicity_weights.end(), 0.0);
    double u = rng.uniform() * total;
    std::size_t k = 0;
    while (k + 1 < cfg.ethnicities.size() && u >= cfg.ethnicity_weights[k]) u -= cfg.ethnicity_weights[k++];
    ethnicity = cfg.ethnicities[k];
  }
  out.demographics = pid + ',' + age + ',' + gender + ',' + ethnicity + '\n';
  return out;
}

}  // namespace

void SynthConfig::validate() const {
  check(n_patients >= 1, "n_patients must be at least 1");
  check(target_unit_prevalence > 0.0 && target_unit_prevalence < 1.0, "prevalence must be in (0, 1)");
  for (const auto c : kAllChannels) {
    if (c == VitalChannel::pp) continue;
    const auto i = index(c);
    const auto name = std::string(channel_name(c));
    check(mean_sampling_interval_s[i] >= 60.0, "sampling interval of " + name + " must be at least 60 s");
    check(missing_rate[i] >= 0.0 && missing_rate[i] < 1.0, "missing rate of " + name + " must be in [0, 1)");
    check(noise_scale[i] >= 0.0, "noise scale of " + name + " must be non-negative");
  }
  check(sampling_jitter >= 0.0 && sampling_jitter < 1.0, "jitter must be in [0, 1)");
  check(drift_hours_before_onset > 0.0, "drift hours must be positive");
  check(noise_time_constant_s > 0.0, "noise time constant must be positive");
  check(measurement_noise >= 0.0, "measurement noise must be non-negative");
  check(interaction_strength >= 0.0 && interaction_strength <= 1.0, "interaction strength must be in [0, 1]");
  check(min_windows >= 1 && min_windows <= max_windows, "need 1 <= min_windows <= max_windows");
  check(age_sd >= 0.0, "age sd must be non-negative");
  for (const double r : {age_unknown_rate, gender_unknown_rate, ethnicity_unknown_rate}) {
    check(r >= 0.0 && r < 1.0, "unknown rates must be in [0, 1)");
  }
  check(ethnicities.size() == ethnicity_weights.size(), "one weight per ethnicity");
  for (const double w : ethnicity_weights) check(w >= 0.0, "ethnicity weights must be non-negative");
  plausibility.validate();
}

SynthConfig synth_preset(std::string_view name) {
  SynthConfig c;
  if (name == "eicu-like") return c;
  if (name == "hospital-like") {
    c.n_patients = 200;
    c.target_unit_prevalence = 0.12;
    c.mean_sampling_interval_s = {1800, 1800, 1800, 900, 1800, 900, 1800, 7200};
    c.missing_rate = {0.15, 0.15, 0.15, 0.1, 0.15, 0.1, 0.0, 0.2};
    c.min_windows = 2;
    c.max_windows = 6;
    return c;
  }
  throw Error("unknown preset '" + std::string(name) + "' (expected eicu-like or hospital-like)");
}

GeneratedCohort generate_cohort(const SynthConfig& config, int workers) {
  config.validate();
  const auto n = config.n_patients;
  Rng planner(derive_seed(config.seed, kPlanStream));
  std::vector<PatientPlan> plans(n);
  std::size_t units = 0;
  for (auto& p : plans) {
    p.windows = static_cast<int>(planner.uniform_int(config.min_windows, config.max_windows));
    units += static_cast<std::size_t>(p.windows);
  }
  const auto septic = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::llround(config.target_unit_prevalence * static_cast<double>(units))));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  planner.shuffle(order);
  for (std::size_t j = 0; j < septic; ++j) plans[order[j]].septic = true;

  std::vector<PatientOutput> outputs(n);
  WorkerPool pool(workers);
  pool.parallel_for(n, [&](std::size_t i) {
    Rng rng(derive_seed(config.seed, i + 1));
    outputs[i] = generate_patient(config, patient_name(i, n), plans[i], rng);
  });

  GeneratedCohort cohort;
  cohort.vitals_csv = "patient_id,timestamp,channel,value\n";
  cohort.demographics_csv = "patient_id,age,gender,ethnicity\n";
  cohort.onsets_csv = "patient_id,onset_timestamp\n";
  for (const auto& o : outputs) {
    cohort.vitals_csv += o.vitals;
    cohort.demographics_csv += o.demographics;
    cohort.onsets_csv += o.onsets;
  }
  cohort.sepsis_patients = septic;
  cohort.planned_units = units;
  cohort.planned_positive_units = septic;
  return cohort;
}

CohortSummary describe_dataset(const CohortDataset& dataset, std::size_t patients) {
  CohortSummary s;
  s.patients = patients;
  s.units = dataset.units.size();
  std::array<double, kNumChannels> observed{};
  for (const auto& u : dataset.units) {
    if (u.label == Label::positive) ++s.positive_units;
    for (std::size_t c = 0; c < kNumChannels; ++c) observed[c] += u.channel_observed_counts[c];
  }
  if (s.units == 0) return s;
  s.prevalence = static_cast<double>(s.positive_units) / static_cast<double>(s.units);
  const double cells = static_cast<double>(s.units) * kWindowSteps;
  for (std::size_t c = 0; c < kNumChannels; ++c) s.missingness[c] = std::max(0.0, 1.0 - observed[c] / cells);
  return s;
}

CohortSummary describe_cohort(std::istream& vitals, std::istream& demographics, std::istream& onsets,
                              const PreprocessConfig& config, int workers) {
  auto parsed = parse_vitals(vitals);
  const auto demo = parse_demographics(demographics);
  const auto onset_map = parse_onsets(onsets);
  const auto result = preprocess_cohort(parsed.series, onset_map, demo, config, workers);
  auto summary = describe_dataset(result.dataset, parsed.series.size());
  summary.rejections = parsed.report;
  summary.rejections.merge(result.rejections);
  return summary;
}

std::string render_summary(const CohortSummary& s) {
  std::ostringstream out;
  out << "patients: " << s.patients << '\n'
      << "units: " << s.units << '\n'
      << "positive_units: " << s.positive_units << '\n'
      << "prevalence: " << text::format_double(s.prevalence, 4) << '\n'
      << "rejected_rows: " << s.rejections.total() << '\n';
  for (const auto c : kAllChannels) {
    out << "missingness." << channel_name(c) << ": " << text::format_double(s.missingness[index(c)], 4) << '\n';
  }
  return out.str();
}

}  // namespace sepsis
