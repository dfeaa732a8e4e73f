#include "facsim/distributions.h"

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "facsim/error.h"

namespace facsim {
namespace {

ErrorCode normalize_error(std::vector<double> w) {
  try {
    normalize(w);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;
}

TEST(NormalizeTest, Examples) {
  const std::vector<double> four = {1, 1, 1, 1};
  for (double v : normalize(four)) EXPECT_DOUBLE_EQ(v, 0.25);
  const std::vector<double> one_hot = {2, 0, 0};
  EXPECT_EQ(normalize(one_hot), (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(normalize_error({0, 0}), ErrorCode::kAllZeroWeights);
  EXPECT_EQ(normalize_error({1, -1}), ErrorCode::kNegativeWeight);
}

TEST(NormalizeTest, IdempotentAndProportional) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w(24);
    for (auto& v : w) v = u(rng);
    const auto a = normalize(w);
    const auto b = normalize(a);
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      total += a[i];
      EXPECT_NEAR(a[i], b[i], 1e-15);
      EXPECT_NEAR(a[i] / a[0], w[i] / w[0], 1e-12 * (w[i] / w[0] + 1));
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(CalendarTest, MonthsAndWeekdays) {
  Calendar cal{2};  // Wednesday
  EXPECT_EQ(cal.day_of_week(0), 2);
  EXPECT_EQ(cal.day_of_week(5), 0);
  EXPECT_EQ(cal.month(0), 0);
  EXPECT_EQ(cal.month(31), 1);
  EXPECT_EQ(cal.month(58), 1);
  EXPECT_EQ(cal.month(59), 2);
  EXPECT_EQ(cal.month(364), 11);
  EXPECT_EQ(cal.month(365), 0);
  EXPECT_EQ(cal.day_of_month(59), 1);
  EXPECT_EQ(parse_weekday("sunday"), 6);
  EXPECT_FALSE(parse_weekday("funday").has_value());
}

TEST(TimestepWeightTest, UniformIsConstant) {
  const auto w = TemporalWeights::uniform();
  const Calendar cal;
  for (double t : {0.0, 3600.0 * 13.5, 86400.0 * 200.0, 86400.0 * 364 + 86399.0}) {
    EXPECT_NEAR(timestep_weight(w, cal, t), 1.0 / (24.0 * 7.0 * 12.0), 1e-15);
  }
}

TEST(TimestepWeightTest, SingleHourMass) {
  auto w = TemporalWeights::uniform();
  w.hourly.fill(0.0);
  w.hourly[16] = 1.0;
  const Calendar cal;
  for (int h = 0; h < 24; ++h) {
    const double v = timestep_weight(w, cal, h * 3600.0 + 1800.0);
    if (h == 16) {
      EXPECT_GT(v, 0.0);
    } else {
      EXPECT_EQ(v, 0.0);
    }
  }
}

TEST(TimestepWeightTest, MatchesPerFactorProduct) {
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  std::vector<double> h(24), d(7), m(12);
  for (auto& v : h) v = u(rng);
  for (auto& v : d) v = u(rng);
  for (auto& v : m) v = u(rng);
  const auto w = TemporalWeights::from_raw(h, d, m);
  const double sh = std::accumulate(h.begin(), h.end(), 0.0);
  const double sd = std::accumulate(d.begin(), d.end(), 0.0);
  const double sm = std::accumulate(m.begin(), m.end(), 0.0);
  const Calendar cal{4};
  // Day 100 is April 11th; weekday (4 + 100) % 7 = 6.
  const double t = 100 * 86400.0 + 7 * 3600.0 + 10.0;
  const double expected = (h[7] / sh) * (d[6] / sd) * (m[3] / sm);
  EXPECT_NEAR(timestep_weight(w, cal, t), expected, 1e-15);
}

TEST(TemporalWeightsTest, WrongLength) {
  const std::vector<double> short_hourly(23, 1.0), d(7, 1.0), m(12, 1.0);
  EXPECT_THROW(TemporalWeights::from_raw(short_hourly, d, m), Error);
}

JobMixDistribution two_type_mix() {
  return JobMixDistribution::from_raw(
      {{WorkloadType::kTraining, 3.0}, {WorkloadType::kFineTuning, 1.0}},
      {{WorkloadType::kTraining, {{1, 1.0}, {2, 1.0}, {4, 2.0}}},
       {WorkloadType::kFineTuning, {{8, 1.0}}}});
}

TEST(SampleJobTest, DegenerateDistributions) {
  auto w = TemporalWeights::uniform();
  w.hourly.fill(0.0);
  w.hourly[9] = 1.0;
  const auto mix = JobMixDistribution::from_raw({{WorkloadType::kFineTuning, 1.0}},
                                                {{WorkloadType::kFineTuning, {{16, 1.0}}}});
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const auto job = sample_job(mix, w, 3, rng);
    EXPECT_EQ(job.type, WorkloadType::kFineTuning);
    EXPECT_EQ(job.node_count, 16);
    EXPECT_GE(job.arrival_s, 3 * 86400.0 + 9 * 3600.0);
    EXPECT_LT(job.arrival_s, 3 * 86400.0 + 10 * 3600.0);
  }
}

// Each category frequency lies within 3.5 sigma of its binomial expectation,
// and the Pearson statistic stays below the 99.9% chi-square quantile.
void expect_frequencies(const std::vector<long>& counts, const std::vector<double>& probs,
                        long n, double chi2_limit) {
  double chi2 = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double mean = n * probs[i];
    const double sigma = std::sqrt(n * probs[i] * (1.0 - probs[i]));
    EXPECT_LE(std::abs(counts[i] - mean), 3.5 * sigma + 1e-9) << "category " << i;
    if (mean > 0) chi2 += (counts[i] - mean) * (counts[i] - mean) / mean;
  }
  EXPECT_LT(chi2, chi2_limit);
}

TEST(SampleJobTest, EmpiricalFrequencies) {
  std::vector<double> raw_hours(24);
  for (int h = 0; h < 24; ++h) raw_hours[h] = 1.0 + (h >= 17 && h <= 21 ? 2.0 : 0.0);
  const std::vector<double> d(7, 1.0), m(12, 1.0);
  const auto w = TemporalWeights::from_raw(raw_hours, d, m);
  const auto mix = two_type_mix();
  JobSampler sampler(mix, w);
  Rng rng(2024);
  const long n = 100000;
  std::vector<long> hours(24), types(2), train_nodes(3);
  for (long k = 0; k < n; ++k) {
    const auto job = sampler.sample(0, rng);
    ++hours[static_cast<int>(job.arrival_s / 3600.0)];
    if (job.type == WorkloadType::kTraining) {
      ++types[0];
      ASSERT_TRUE(job.node_count == 1 || job.node_count == 2 || job.node_count == 4);
      ++train_nodes[job.node_count == 4 ? 2 : job.node_count - 1];
    } else {
      ++types[1];
      ASSERT_EQ(job.node_count, 8);
    }
  }
  // 99.9% quantiles for 23 and 1 degrees of freedom.
  expect_frequencies(hours, std::vector<double>(w.hourly.begin(), w.hourly.end()), n, 49.73);
  expect_frequencies(types, {0.75, 0.25}, n, 10.83);
  expect_frequencies(train_nodes, {0.25, 0.25, 0.5}, types[0], 13.82);
}

TEST(SampleJobTest, SeededReproducibility) {
  const auto mix = two_type_mix();
  const auto w = TemporalWeights::uniform();
  Rng a(77), b(77);
  for (int k = 0; k < 500; ++k) {
    const auto x = sample_job(mix, w, k % 365, a);
    const auto y = sample_job(mix, w, k % 365, b);
    EXPECT_EQ(x.arrival_s, y.arrival_s);
    EXPECT_EQ(x.type, y.type);
    EXPECT_EQ(x.node_count, y.node_count);
  }
}

TEST(WeightsFileTest, ParsesAllKeys) {
  const auto file = parse_weights(R"({
    "hourly": [1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,5],
    "day_of_week": [1,1,1,1,1,0,0],
    "monthly": [1,1,1,1,1,1,1,1,1,1,1,1],
    "type_probs": {"training": 2, "fine_tuning": 2},
    "node_count_probs": {"training": {"1": 1}, "fine_tuning": {"4": 3, "8": 1}}
  })");
  EXPECT_NEAR(file.temporal.hourly[23], 5.0 / 28.0, 1e-15);
  EXPECT_EQ(file.temporal.day_of_week[6], 0.0);
  ASSERT_TRUE(file.job_mix.has_value());
  EXPECT_DOUBLE_EQ(file.job_mix->type_probs.at(WorkloadType::kTraining), 0.5);
  EXPECT_DOUBLE_EQ(file.job_mix->node_count_probs.at(WorkloadType::kFineTuning).at(4), 0.75);
}

TEST(WeightsFileTest, TemporalOnly) {
  const auto file = parse_weights(R"({"hourly": [1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1],
    "day_of_week": [1,1,1,1,1,1,1], "monthly": [1,1,1,1,1,1,1,1,1,1,1,1]})");
  EXPECT_FALSE(file.job_mix.has_value());
}

TEST(WeightsFileTest, BundledFilesLoad) {
  for (const char* name : {"data/weights_colocation.json", "data/weights_inference.json"}) {
    EXPECT_NO_THROW(load_weights(name)) << name;
  }
}

TEST(ValidateMixTest, RejectsBadMixes) {
  InferenceMix mix = {{"a", 0.5, 1, 10.0, 1.0}, {"b", 0.4, 1, 10.0, 1.0}};
  EXPECT_THROW(validate_mix(mix), Error);
  mix[1].probability = 0.5;
  EXPECT_NO_THROW(validate_mix(mix));
  mix[1].nodes_per_instance = 0;
  EXPECT_THROW(validate_mix(mix), Error);
  mix[1].nodes_per_instance = 1;
  mix[0].max_rate_pps = 0.0;
  EXPECT_THROW(validate_mix(mix), Error);
}

}  // namespace
}  // namespace facsim
