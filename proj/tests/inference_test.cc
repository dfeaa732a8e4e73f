#include "facsim/inference.h"

#include <cmath>

#include <gtest/gtest.h>

#include "facsim/error.h"
#include "test_util.h"

namespace facsim {
namespace {

using testing::constant_profile;

InferenceMix paper_mix() {
  return {{"conversation", 0.619, 1, 50.0, 10.0}, {"coding", 0.381, 1, 100.0, 10.0}};
}

FacilityConfig facility_of(int n_total, long days) {
  FacilityConfig f;
  f.n_total = n_total;
  f.horizon_days = days;
  f.rated_power_mw = 1.0;
  return f;
}

PowerProfile rate_sample(const std::string& type, double rate, double power_w,
                         double duration_s = 600.0) {
  auto p = constant_profile(power_w, duration_s, 1, WorkloadType::kInferenceRateSample, 1.0);
  p.inference_type = type;
  p.request_rate_pps = rate;
  return p;
}

TEST(AllocateNodesTest, ConversationCodingSplit) {
  const auto alloc = allocate_nodes(paper_mix(), 284);
  EXPECT_EQ(alloc.nodes_max, (std::vector<int>{217, 67}));
  EXPECT_TRUE(alloc.rebalanced.empty());
}

TEST(AllocateNodesTest, SingleTypeAndSymmetry) {
  InferenceMix one = {{"only", 1.0, 2, 10.0, 1.0}};
  EXPECT_EQ(allocate_nodes(one, 97).nodes_max, std::vector<int>{97});
  InferenceMix two = {{"a", 0.5, 1, 20.0, 1.0}, {"b", 0.5, 1, 20.0, 1.0}};
  EXPECT_EQ(allocate_nodes(two, 100).nodes_max, (std::vector<int>{50, 50}));
  // Odd total: the tie goes to the earlier type.
  EXPECT_EQ(allocate_nodes(two, 101).nodes_max, (std::vector<int>{51, 50}));
}

TEST(AllocateNodesTest, ExactSumOnRandomMixes) {
  Rng rng(12);
  std::uniform_real_distribution<double> p(0.01, 1.0), rate(1.0, 200.0);
  std::uniform_int_distribution<int> n(1, 4), types(1, 6), total(24, 3000);
  for (int trial = 0; trial < 200; ++trial) {
    InferenceMix mix(types(rng));
    double sum = 0.0;
    for (auto& t : mix) {
      t.probability = p(rng);
      t.nodes_per_instance = n(rng);
      t.max_rate_pps = rate(rng);
      sum += t.probability;
    }
    for (auto& t : mix) t.probability /= sum;
    double check = 0.0;
    for (auto& t : mix) check += t.probability;
    mix.back().probability += 1.0 - check;
    const int n_total = total(rng);
    const auto alloc = allocate_nodes(mix, n_total);
    int assigned = 0;
    for (std::size_t i = 0; i < mix.size(); ++i) {
      assigned += alloc.nodes_max[i];
      EXPECT_GE(alloc.nodes_max[i], mix[i].nodes_per_instance);
    }
    EXPECT_EQ(assigned, n_total);
  }
}

TEST(AllocateNodesTest, RebalancesStarvedType) {
  InferenceMix mix = {{"big", 0.999, 1, 1.0, 1.0}, {"tiny", 0.001, 2, 1000.0, 1.0}};
  const auto alloc = allocate_nodes(mix, 10);
  EXPECT_EQ(alloc.nodes_max, (std::vector<int>{8, 2}));
  EXPECT_EQ(alloc.rebalanced, std::vector<std::string>{"tiny"});
  try {
    allocate_nodes(mix, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateMix);
  }
}

TEST(InstancesRequiredTest, Examples) {
  const auto mix = paper_mix();
  const auto alloc = allocate_nodes(mix, 284);
  EXPECT_EQ(instances_required(0.0, mix[0], alloc.nodes_max[0]), 0);
  const double total = 3430.0;
  const int conversation = instances_required(total * 0.619, mix[0], alloc.nodes_max[0]);
  const int coding = instances_required(total * 0.381, mix[1], alloc.nodes_max[1]);
  EXPECT_EQ(conversation, 43);
  EXPECT_EQ(coding, 14);
  EXPECT_EQ(instances_required(1e9, mix[0], alloc.nodes_max[0]), 217);
  InferenceType pair{"pair", 1.0, 2, 10.0, 1.0};
  EXPECT_EQ(instances_required(1e9, pair, 7), 3);
}

TEST(DistributeRateTest, Examples) {
  const InferenceType t{"x", 1.0, 1, 50.0, 1.0};
  auto s = distribute_rate(100.0, 2, t);
  EXPECT_EQ(s.per_instance_pps, 50.0);
  EXPECT_EQ(s.incomplete_pps, 0.0);
  s = distribute_rate(120.0, 2, t);
  EXPECT_EQ(s.per_instance_pps, 50.0);
  EXPECT_EQ(s.incomplete_pps, 20.0);
  s = distribute_rate(0.0, 0, t);
  EXPECT_EQ(s.per_instance_pps, 0.0);
  EXPECT_FALSE(s.orphaned);
  s = distribute_rate(7.0, 0, t);
  EXPECT_EQ(s.incomplete_pps, 7.0);
  EXPECT_TRUE(s.orphaned);
}

TEST(RequestSeriesTest, SumsToDailyTotal) {
  const auto mix = paper_mix();
  auto w = TemporalWeights::uniform();
  w.hourly[18] = 0.5;
  const auto f = facility_of(284, 7);
  const auto s = build_request_series(1e6, mix, w, f);
  double total = 0.0;
  for (const auto& per_type : s.requests) {
    for (double r : per_type) {
      EXPECT_GE(r, 0.0);
      total += r;
    }
  }
  EXPECT_NEAR(total, 7e6, 7e6 * 1e-12);
  EXPECT_NEAR(s.rate_pps(0, 10), s.requests[0][10] / 60.0, 1e-12);
}

TEST(CalibrateRequestsTest, ClosedFormSingleType) {
  // One type, one node per instance, uniform weights: K is the same every
  // step, so utilization = ceil(R / (86400 * rmax)) / N.
  const InferenceMix mix = {{"only", 1.0, 1, 40.0, 1.0}};
  const auto f = facility_of(200, 3);
  const auto alloc = allocate_nodes(mix, 200);
  CalibrationTarget target;
  target.mu_avg_target = 0.3;
  const auto cal = calibrate_daily_requests(target, mix, TemporalWeights::uniform(), alloc, f);
  const double closed_form = 0.3 * 200 * 40.0 * 86400.0;
  EXPECT_LE(std::abs(cal.utilization - 0.3), 0.005);
  // Within tolerance plus one instance of granularity.
  EXPECT_LE(std::abs(cal.daily_requests - closed_form), (0.005 * 200 + 1) * 40.0 * 86400.0);
}

TEST(CalibrateRequestsTest, CeilingIsEnforced) {
  const InferenceMix mix = {{"pair", 1.0, 2, 40.0, 1.0}};
  const auto f = facility_of(9, 1);
  const auto alloc = allocate_nodes(mix, 9);
  EXPECT_NEAR(alloc.utilization_ceiling(mix, 9), 8.0 / 9.0, 1e-15);
  CalibrationTarget target;
  target.mu_avg_target = 0.95;
  try {
    calibrate_daily_requests(target, mix, TemporalWeights::uniform(), alloc, f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCannotReachTarget);
  }
}

TEST(CalibrateRequestsTest, UtilizationMonotoneInDailyRequests) {
  const auto mix = paper_mix();
  std::vector<double> hourly(24), d(7, 1.0), m(12, 1.0);
  for (int h = 0; h < 24; ++h) hourly[h] = 1.0 + std::sin(h / 3.0) * 0.8;
  const auto w = TemporalWeights::from_raw(hourly, d, m);
  const auto f = facility_of(284, 2);
  const auto alloc = allocate_nodes(mix, 284);
  double prev = 0.0;
  for (double daily = 1e6; daily < 1e10; daily *= 1.7) {
    const double u = mean_inference_utilization(build_request_series(daily, mix, w, f), mix,
                                                alloc, 284);
    EXPECT_GE(u, prev);
    EXPECT_LE(u, alloc.utilization_ceiling(mix, 284) + 1e-15);
    prev = u;
  }
}

ProfileBank paper_bank() {
  ProfileBank bank;
  for (double r : {10.0, 50.0}) bank.add(rate_sample("conversation", r, 1000.0 + 30.0 * r));
  for (double r : {20.0, 100.0}) bank.add(rate_sample("coding", r, 1000.0 + 15.0 * r));
  return bank;
}

TEST(SimulateInferenceTest, ZeroTrafficIsIdleFloor) {
  const auto mix = paper_mix();
  const auto f = facility_of(284, 2);
  const auto alloc = allocate_nodes(mix, 284);
  const auto s = build_request_series(0.0, mix, TemporalWeights::uniform(), f);
  const auto r = simulate_inference(s, mix, alloc, paper_bank(), f);
  for (double p : r.series.power_kw) EXPECT_NEAR(p, 119.28, 1e-9);
  for (double u : r.series.utilization) EXPECT_EQ(u, 0.0);
}

TEST(SimulateInferenceTest, ConservationAndPowerAccounting) {
  const auto mix = paper_mix();
  const auto f = facility_of(284, 1);
  const auto alloc = allocate_nodes(mix, 284);
  // Past saturation so both regimes appear.
  std::vector<double> hourly(24, 1.0), d(7, 1.0), m(12, 1.0);
  hourly[20] = 40.0;
  const auto w = TemporalWeights::from_raw(hourly, d, m);
  const auto s = build_request_series(3e8, mix, w, f);
  const auto r = simulate_inference(s, mix, alloc, paper_bank(), f);
  const auto& acc = *r.series.requests;
  bool saw_loss = false;
  for (std::size_t t = 0; t < r.series.size(); ++t) {
    EXPECT_NEAR(acc.incoming_pps[t], acc.effective_pps[t] + acc.incomplete_pps[t],
                1e-9 * std::max(1.0, acc.incoming_pps[t]));
    for (std::size_t i = 0; i < mix.size(); ++i) {
      const double cap = std::floor(alloc.nodes_max[i] / 1.0) * mix[i].max_rate_pps;
      if (acc.type_incoming_pps[i][t] <= cap) EXPECT_EQ(acc.type_incomplete_pps[i][t], 0.0);
      if (acc.instances[i][t] > 0) {
        EXPECT_LE(acc.type_effective_pps[i][t] / acc.instances[i][t],
                  mix[i].max_rate_pps * (1 + 1e-12));
      }
      saw_loss |= acc.type_incomplete_pps[i][t] > 0.0;
    }
  }
  EXPECT_TRUE(saw_loss);
  EXPECT_NEAR(series_energy_kwh(r.series), r.ledger.job_energy_kwh + r.ledger.idle_energy_kwh,
              1e-9 * series_energy_kwh(r.series));
}

TEST(SimulateInferenceTest, NearestSampleAndPhaseOffsets) {
  ProfileBank bank;
  // Square wave sample: 2 kW for 30 s, 1 kW for 30 s.
  auto sq = testing::make_profile({{0.0, 2000.0}, {30.0, 1000.0}, {60.0, 1000.0}}, 1,
                                  WorkloadType::kInferenceRateSample, 1.0);
  sq.inference_type = "x";
  sq.request_rate_pps = 10.0;
  bank.add(sq);
  const EnergyCurve& curve = bank.curve(0);
  // Window of 30 s at offsets 0 and 30: 2 kW + 1 kW.
  EXPECT_NEAR(inference_step_power_kw(curve, 2, 0.0, 30.0, 30.0), 3.0, 1e-12);
  EXPECT_NEAR(inference_step_power_kw(curve, 2, 0.0, 30.0, 0.0), 4.0, 1e-12);
  // Wraps past the end of the sample.
  EXPECT_NEAR(inference_step_power_kw(curve, 1, 45.0, 30.0, 0.0), 1.5, 1e-12);
}

TEST(SimulateInferenceTest, MorePowerWithMoreInstances) {
  const InferenceMix mix = {{"x", 1.0, 1, 10.0, 1.0}};
  ProfileBank bank;
  bank.add(rate_sample("x", 5.0, 1500.0));
  bank.add(rate_sample("x", 10.0, 2000.0));
  const auto f = facility_of(50, 1);
  const auto alloc = allocate_nodes(mix, 50);
  double prev = 0.0;
  for (double daily : {0.0, 1e5, 2e6, 8e6, 4e7}) {
    const auto r = simulate_inference(build_request_series(daily, mix, TemporalWeights::uniform(), f),
                                      mix, alloc, bank, f);
    EXPECT_GE(r.series.power_kw[0], prev);
    prev = r.series.power_kw[0];
  }
}

TEST(SimulateInferenceTest, MissingRateSample) {
  const auto mix = paper_mix();
  ProfileBank bank;
  bank.add(rate_sample("conversation", 10.0, 1000.0));
  const auto f = facility_of(284, 1);
  const auto s = build_request_series(1e6, mix, TemporalWeights::uniform(), f);
  try {
    simulate_inference(s, mix, allocate_nodes(mix, 284), bank, f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingRateSample);
  }
}

}  // namespace
}  // namespace facsim
