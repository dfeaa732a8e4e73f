#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "facsim/distributions.h"
#include "facsim/facility.h"
#include "facsim/profiles.h"

namespace facsim {

struct Job {
  std::size_t id = 0;
  WorkloadType type = WorkloadType::kTraining;
  int node_count = 1;
  double duration_s = 0.0;
  ProfileIndex profile = 0;
  double arrival_s = 0.0;
  // Set by the scheduler; NaN until then.
  double start_s = std::numeric_limits<double>::quiet_NaN();
  double end_s = std::numeric_limits<double>::quiet_NaN();

  bool scheduled() const { return start_s == start_s; }
};

struct JobList {
  std::vector<Job> jobs;  // non-decreasing arrival_s
  double calibrated_daily_count = 0.0;
};

struct CalibrationTarget {
  double mu_avg_target = 0.5;
  double tolerance_pp = 0.5;
  int max_iterations = 40;
};

enum class CountModel {
  kPoisson,
  // Cumulative rounding of the expected counts; totals are exact.
  kDeterministic,
};

struct JobGenOptions {
  CountModel count_model = CountModel::kPoisson;
  // Doubling search for the upper bracket gives up beyond this daily count.
  double max_daily_count = 1e7;
};

// Sum of node_count * duration_s over the jobs, divided by the node-seconds
// available. Not clipped: overlapping demand beyond capacity counts in full.
double estimate_utilization(std::span<const Job> jobs, int n_total, double horizon_s);

// Expected number of jobs arriving on each horizon day for a given average
// daily count (day-of-week x monthly weights, normalized over the horizon).
std::vector<double> expected_daily_counts(double daily_count, const TemporalWeights& weights,
                                          const FacilityConfig& facility);

JobList generate_jobs(double daily_count, const JobMixDistribution& mix,
                      const TemporalWeights& weights, const ProfileBank& bank,
                      const FacilityConfig& facility, std::uint64_t seed,
                      CountModel count_model = CountModel::kPoisson);

struct BisectionStep {
  double daily_count = 0.0;
  double estimate = 0.0;
  double lo = 0.0, estimate_lo = 0.0;
  double hi = 0.0, estimate_hi = 0.0;
};

struct JobCalibration {
  double daily_count = 0.0;
  double estimate = 0.0;
  int iterations = 0;
  JobList jobs;
  std::vector<BisectionStep> history;
};

// Bisection on the average daily job count. Every candidate regenerates its
// job list from derive_seed(seed, evaluation index).
JobCalibration calibrate_daily_jobs(const CalibrationTarget& target,
                                    const JobMixDistribution& mix,
                                    const TemporalWeights& weights, const ProfileBank& bank,
                                    const FacilityConfig& facility, std::uint64_t seed,
                                    const JobGenOptions& options = {});

}  // namespace facsim
