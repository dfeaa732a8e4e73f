#include "facsim/engine.h"

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "facsim/error.h"
#include "oracles.h"
#include "test_util.h"

namespace facsim {
namespace {

using testing::constant_profile;
using testing::rel_err;

FacilityConfig facility_of(int n_total, long days, double timestep_s = 60.0) {
  FacilityConfig f;
  f.n_total = n_total;
  f.horizon_days = days;
  f.timestep_s = timestep_s;
  f.rated_power_mw = 1.0;
  return f;
}

Job make_job(std::size_t id, int nodes, double arrival_s, double duration_s,
             ProfileIndex profile = 0) {
  Job j;
  j.id = id;
  j.node_count = nodes;
  j.arrival_s = arrival_s;
  j.duration_s = duration_s;
  j.profile = profile;
  return j;
}

TEST(ScheduleFifoTest, SingleJobStartsOnArrival) {
  JobList list;
  list.jobs = {make_job(0, 3, 100.0, 50.0)};
  const auto out = schedule_fifo(list, 4);
  EXPECT_EQ(out.jobs[0].start_s, 100.0);
  EXPECT_EQ(out.jobs[0].end_s, 150.0);
}

TEST(ScheduleFifoTest, FullFacilityJobsSerialize) {
  JobList list;
  list.jobs = {make_job(0, 4, 10.0, 30.0), make_job(1, 4, 10.0, 30.0)};
  const auto out = schedule_fifo(list, 4);
  EXPECT_EQ(out.jobs[1].start_s, 40.0);
}

TEST(ScheduleFifoTest, NoBackfill) {
  // The 1-node job arriving third fits right away but must wait behind the
  // 4-node job.
  JobList list;
  list.jobs = {make_job(0, 3, 0.0, 100.0), make_job(1, 4, 1.0, 10.0), make_job(2, 1, 2.0, 5.0)};
  const auto out = schedule_fifo(list, 4);
  EXPECT_EQ(out.jobs[1].start_s, 100.0);
  EXPECT_EQ(out.jobs[2].start_s, 110.0);
}

TEST(ScheduleFifoTest, JobTooLarge) {
  JobList list;
  list.jobs = {make_job(0, 5, 0.0, 1.0)};
  try {
    schedule_fifo(list, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kJobTooLarge);
  }
}

TEST(ScheduleFifoTest, MatchesEventOracle) {
  Rng rng(31337);
  std::uniform_int_distribution<int> n_total_d(1, 5), n_jobs_d(0, 10);
  std::uniform_int_distribution<int> arrival_d(0, 40), duration_d(1, 20);
  for (int trial = 0; trial < 500; ++trial) {
    const int n_total = n_total_d(rng);
    std::uniform_int_distribution<int> nodes_d(1, n_total);
    std::vector<testing::OracleJob> ref;
    JobList list;
    const int count = n_jobs_d(rng);
    for (int k = 0; k < count; ++k) {
      ref.push_back({static_cast<double>(arrival_d(rng)), static_cast<double>(duration_d(rng)),
                     nodes_d(rng)});
    }
    std::stable_sort(ref.begin(), ref.end(),
                     [](const auto& a, const auto& b) { return a.arrival_s < b.arrival_s; });
    for (int k = 0; k < count; ++k) {
      list.jobs.push_back(make_job(k, ref[k].nodes, ref[k].arrival_s, ref[k].duration_s));
    }
    const auto expected = testing::fifo_oracle(ref, n_total);
    const auto out = schedule_fifo(list, n_total);
    for (int k = 0; k < count; ++k) {
      ASSERT_EQ(out.jobs[k].start_s, expected[k]) << "trial " << trial << " job " << k;
    }
  }
}

TEST(SimulateTest, IdleFacility) {
  ProfileBank bank;
  const auto f = facility_of(2840, 1);
  const auto r = simulate(JobList{}, bank, f);
  ASSERT_EQ(r.series.size(), 1440u);
  for (double p : r.series.power_kw) EXPECT_NEAR(p, 2840 * 0.42, 1e-9);
  EXPECT_NEAR(r.ledger.idle_energy_kwh, 2840 * 0.42 * 24, 1e-6);
}

TEST(SimulateTest, OneNodeOneHourJob) {
  ProfileBank bank;
  bank.add(constant_profile(3520.0, 3600.0, 1, WorkloadType::kTraining, 60.0));
  const auto f = facility_of(1, 1);
  JobList list;
  list.jobs = {make_job(0, 1, 0.0, 3600.0)};
  const auto r = simulate(schedule_fifo(list, 1), bank, f);
  EXPECT_NEAR(r.ledger.job_energy_kwh, 3.52, 1e-12);
  for (int i = 0; i < 60; ++i) {
    EXPECT_NEAR(r.series.power_kw[i], 3.52, 1e-12);
    EXPECT_EQ(r.series.occupied_nodes[i], 1.0);
    EXPECT_EQ(r.series.running_jobs[i], 1);
  }
  EXPECT_NEAR(r.series.power_kw[60], 0.42, 1e-12);
  EXPECT_NEAR(r.ledger.idle_energy_kwh, 0.42 * 23, 1e-9);
}

TEST(SimulateTest, OffGridStartsSplitEnergy) {
  ProfileBank bank;
  bank.add(constant_profile(2000.0, 90.0, 2, WorkloadType::kTraining, 1.0));
  const auto f = facility_of(4, 1);
  JobList list;
  list.jobs = {make_job(0, 2, 30.0, 90.0)};
  const auto r = simulate(schedule_fifo(list, 4), bank, f);
  // Step 0 holds 30 s of the job, step 1 the remaining 60 s.
  EXPECT_NEAR(r.series.occupied_nodes[0], 1.0, 1e-12);
  EXPECT_NEAR(r.series.occupied_nodes[1], 2.0, 1e-12);
  EXPECT_NEAR(r.series.power_kw[0], (2000.0 * 30 + 420.0 * (4 * 60 - 60)) / 60 / 1000, 1e-12);
  EXPECT_NEAR(r.series.power_kw[1], 2.0 + 2 * 0.42, 1e-12);
  EXPECT_EQ(r.series.running_jobs[0], 0);
  EXPECT_EQ(r.series.running_jobs[1], 1);
}

TEST(SimulateTest, QueueCountsAndTruncation) {
  ProfileBank bank;
  bank.add(constant_profile(1000.0, 86400.0, 1, WorkloadType::kTraining, 60.0));
  const auto f = facility_of(1, 1);
  JobList list;
  list.jobs = {make_job(0, 1, 0.0, 86400.0), make_job(1, 1, 120.0, 86400.0)};
  const auto r = simulate(schedule_fifo(list, 1), bank, f);
  EXPECT_EQ(r.series.queued_jobs[1], 0);
  EXPECT_EQ(r.series.queued_jobs[2], 1);
  EXPECT_EQ(r.series.queued_jobs.back(), 1);
  EXPECT_EQ(r.ledger.truncated_jobs, 0u);

  list.jobs = {make_job(0, 1, 3600.0, 86400.0)};
  const auto t = simulate(schedule_fifo(list, 1), bank, f);
  EXPECT_EQ(t.ledger.truncated_jobs, 1u);
  EXPECT_NEAR(t.ledger.job_energy_kwh, 23.0, 1e-9);
}

TEST(SimulateTest, RejectsInfeasibleSchedule) {
  ProfileBank bank;
  bank.add(constant_profile(1000.0, 100.0, 2, WorkloadType::kTraining, 1.0));
  JobList list;
  list.jobs = {make_job(0, 2, 0.0, 100.0), make_job(1, 2, 0.0, 100.0)};
  for (auto& j : list.jobs) {
    j.start_s = 0.0;
    j.end_s = 100.0;
  }
  try {
    simulate(list, bank, facility_of(3, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasibleSchedule);
  }
}

// Random colocation workload over `days` with profiles inside per-node bounds.
struct RandomRun {
  ProfileBank bank;
  JobList jobs;
  FacilityConfig facility;
};

RandomRun random_run(std::uint64_t seed, long days) {
  Rng rng(seed);
  RandomRun run;
  run.facility = facility_of(std::uniform_int_distribution<int>(8, 64)(rng), days);
  for (int nodes : {1, 2, 4, 8}) {
    ShapeParams shape;
    shape.node_count = nodes;
    shape.base_kw = 0.42 * nodes;
    shape.plateau_kw = 3.3 * nodes;
    shape.dip_fraction = 0.3;
    shape.duration_s = std::uniform_real_distribution<double>(600.0, 7200.0)(rng);
    shape.seed = seed * 10 + nodes;
    shape.sample_interval_s = 1.0;
    run.bank.add(resample(synthesize_profile(shape), run.facility.timestep_s));
  }
  std::uniform_real_distribution<double> arrival(0.0, run.facility.horizon_s());
  std::uniform_int_distribution<int> pick(0, 3);
  const int count = std::uniform_int_distribution<int>(0, 300)(rng);
  for (int k = 0; k < count; ++k) {
    const auto p = static_cast<ProfileIndex>(pick(rng));
    run.jobs.jobs.push_back(make_job(k, run.bank.at(p).node_count, arrival(rng),
                                     run.bank.at(p).duration_s, p));
  }
  run.jobs = schedule_fifo(run.jobs, run.facility.n_total);
  return run;
}

TEST(SimulateTest, EnergyConservationAndBounds) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto run = random_run(seed, 3);
    const auto r = simulate(run.jobs, run.bank, run.facility);
    const double total = series_energy_kwh(r.series);
    EXPECT_LT(rel_err(total, r.ledger.job_energy_kwh + r.ledger.idle_energy_kwh), 1e-9);
    const double lo = run.facility.n_total * 0.42, hi = run.facility.n_total * 3.52;
    for (double p : r.series.power_kw) {
      EXPECT_GE(p, lo - 1e-9);
      EXPECT_LE(p, hi + 1e-9);
    }
    EXPECT_TRUE(audit_concurrency(r.series, run.facility).passed);

    // Mean utilization from the series agrees with the busy node-seconds
    // of the schedule clipped to the horizon.
    double busy = 0.0;
    for (const auto& j : run.jobs.jobs) {
      busy += j.node_count * std::max(0.0, std::min(j.end_s, run.facility.horizon_s()) -
                                               std::min(j.start_s, run.facility.horizon_s()));
    }
    const double mean_u = std::accumulate(r.series.utilization.begin(),
                                          r.series.utilization.end(), 0.0) /
                          static_cast<double>(r.series.size());
    EXPECT_NEAR(mean_u, busy / (run.facility.n_total * run.facility.horizon_s()), 1e-12);
  }
}

TEST(AuditTest, FlagsFirstOffendingStep) {
  const auto run = random_run(4, 1);
  auto r = simulate(run.jobs, run.bank, run.facility);
  ASSERT_TRUE(audit_concurrency(r.series, run.facility).passed);
  r.series.occupied_nodes[77] = run.facility.n_total + 1.0;
  r.series.occupied_nodes[90] = run.facility.n_total + 1.0;
  const auto report = audit_concurrency(r.series, run.facility);
  EXPECT_FALSE(report.passed);
  EXPECT_EQ(report.first_offending_step, 77u);

  auto s = simulate(run.jobs, run.bank, run.facility).series;
  s.power_kw[5] = -1.0;
  EXPECT_EQ(audit_concurrency(s, run.facility).first_offending_step, 5u);
}

TEST(NodePoolTest, ReleasesAtOrBefore) {
  NodePool pool(4);
  pool.acquire(3, 0.0, 10.0);
  pool.acquire(1, 0.0, 20.0);
  EXPECT_EQ(pool.free_count(), 0);
  pool.release_until(9.99);
  EXPECT_EQ(pool.free_count(), 0);
  pool.release_until(10.0);
  EXPECT_EQ(pool.free_count(), 3);
  EXPECT_EQ(pool.next_release(), 20.0);
  EXPECT_EQ(pool.intervals().size(), 2u);
}

}  // namespace
}  // namespace facsim
