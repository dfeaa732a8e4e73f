#include "facsim/jobgen.h"

#include <algorithm>
#include <cmath>
#include <optional>

#include "facsim/error.h"

namespace facsim {

namespace {

void require_profiles(const JobMixDistribution& mix, const ProfileBank& bank) {
  for (const auto& [type, p] : mix.type_probs) {
    if (p == 0.0) continue;
    for (const auto& [n, q] : mix.node_count_probs.at(type)) {
      if (q > 0.0 && !bank.contains(JobKey{type, n})) {
        throw Error(ErrorCode::kUnknownProfileKey,
                    std::string(to_string(type)) + "/" + std::to_string(n));
      }
    }
  }
}

std::vector<long> daily_counts(double daily_count, const TemporalWeights& weights,
                               const FacilityConfig& facility, CountModel model, Rng& rng) {
  const auto expected = expected_daily_counts(daily_count, weights, facility);
  std::vector<long> counts(expected.size(), 0);
  if (model == CountModel::kPoisson) {
    for (std::size_t d = 0; d < expected.size(); ++d) {
      if (expected[d] > 0.0) counts[d] = std::poisson_distribution<long>(expected[d])(rng);
    }
  } else {
    double cumulative = 0.0;
    long emitted = 0;
    for (std::size_t d = 0; d < expected.size(); ++d) {
      cumulative += expected[d];
      const long total = std::lround(cumulative);
      counts[d] = total - emitted;
      emitted = total;
    }
  }
  return counts;
}

// Streams the jobs of one generated list, day by day in arrival order.
template <typename Visit>
void for_each_job(double daily_count, const JobMixDistribution& mix,
                  const TemporalWeights& weights, const ProfileBank& bank,
                  const FacilityConfig& facility, std::uint64_t seed, CountModel model,
                  Visit&& visit) {
  Rng rng(seed);
  const auto counts = daily_counts(daily_count, weights, facility, model, rng);
  JobSampler sampler(mix, weights);
  std::vector<Job> day_jobs;
  for (std::size_t d = 0; d < counts.size(); ++d) {
    day_jobs.clear();
    for (long k = 0; k < counts[d]; ++k) {
      const auto s = sampler.sample(static_cast<long>(d), rng);
      Job job;
      job.type = s.type;
      job.node_count = s.node_count;
      job.arrival_s = s.arrival_s;
      job.profile = lookup(bank, JobKey{s.type, s.node_count}, rng);
      job.duration_s = bank.at(job.profile).duration_s;
      day_jobs.push_back(job);
    }
    std::stable_sort(day_jobs.begin(), day_jobs.end(),
                     [](const Job& a, const Job& b) { return a.arrival_s < b.arrival_s; });
    for (const auto& job : day_jobs) visit(job);
  }
}

double expected_node_seconds_per_job(const JobMixDistribution& mix, const ProfileBank& bank) {
  double total = 0.0;
  for (const auto& [type, p] : mix.type_probs) {
    if (p == 0.0) continue;
    for (const auto& [n, q] : mix.node_count_probs.at(type)) {
      if (q > 0.0) total += p * q * bank.mean_node_seconds(JobKey{type, n});
    }
  }
  return total;
}

}  // namespace

double estimate_utilization(std::span<const Job> jobs, int n_total, double horizon_s) {
  double node_seconds = 0.0;
  for (const auto& job : jobs) node_seconds += job.node_count * job.duration_s;
  return node_seconds / (static_cast<double>(n_total) * horizon_s);
}

std::vector<double> expected_daily_counts(double daily_count, const TemporalWeights& weights,
                                          const FacilityConfig& facility) {
  const auto days = static_cast<std::size_t>(facility.horizon_days);
  std::vector<double> w(days);
  double total = 0.0;
  for (std::size_t d = 0; d < days; ++d) {
    const auto day = static_cast<long>(d);
    w[d] = weights.day_of_week[facility.calendar.day_of_week(day)] *
           weights.monthly[facility.calendar.month(day)];
    total += w[d];
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kAllZeroWeights, "day-of-week x monthly weights vanish on the horizon");
  }
  for (auto& x : w) x = daily_count * static_cast<double>(days) * x / total;
  return w;
}

JobList generate_jobs(double daily_count, const JobMixDistribution& mix,
                      const TemporalWeights& weights, const ProfileBank& bank,
                      const FacilityConfig& facility, std::uint64_t seed, CountModel count_model) {
  if (!(daily_count >= 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "daily job count must be >= 0");
  }
  require_profiles(mix, bank);
  JobList list;
  list.calibrated_daily_count = daily_count;
  if (daily_count == 0.0) return list;
  list.jobs.reserve(static_cast<std::size_t>(daily_count * facility.horizon_days * 1.05) + 16);
  for_each_job(daily_count, mix, weights, bank, facility, seed, count_model,
               [&](const Job& job) {
                 list.jobs.push_back(job);
                 list.jobs.back().id = list.jobs.size() - 1;
               });
  return list;
}

JobCalibration calibrate_daily_jobs(const CalibrationTarget& target,
                                    const JobMixDistribution& mix,
                                    const TemporalWeights& weights, const ProfileBank& bank,
                                    const FacilityConfig& facility, std::uint64_t seed,
                                    const JobGenOptions& options) {
  if (!(target.mu_avg_target > 0.0 && target.mu_avg_target <= 1.0) ||
      !(target.tolerance_pp > 0.0) || target.max_iterations < 1) {
    throw Error(ErrorCode::kConfigInvalid, "calibration target out of range");
  }
  require_profiles(mix, bank);
  if (!(expected_node_seconds_per_job(mix, bank) > 0.0)) {
    throw Error(ErrorCode::kCannotReachTarget, "jobs in the mix carry no node-hours");
  }

  const double mu = target.mu_avg_target;
  const double tol = target.tolerance_pp / 100.0;
  const double capacity = static_cast<double>(facility.n_total) * facility.horizon_s();

  JobCalibration result;
  std::uint64_t evaluation = 0;
  std::optional<std::uint64_t> converged_seed;
  double best_gap = std::numeric_limits<double>::infinity();

  auto evaluate = [&](double count) {
    const std::uint64_t sub_seed = derive_seed(seed, evaluation++);
    double node_seconds = 0.0;
    if (count > 0.0) {
      for_each_job(count, mix, weights, bank, facility, sub_seed, options.count_model,
                   [&](const Job& job) { node_seconds += job.node_count * job.duration_s; });
    }
    const double estimate = node_seconds / capacity;
    if (std::abs(estimate - mu) < best_gap) {
      best_gap = std::abs(estimate - mu);
      result.daily_count = count;
      result.estimate = estimate;
    }
    return std::pair{estimate, sub_seed};
  };

  if (mu <= tol) {
    // Zero load already satisfies the target.
    result.daily_count = 0.0;
    result.estimate = 0.0;
    result.jobs.calibrated_daily_count = 0.0;
    return result;
  }

  double lo = 0.0, f_lo = 0.0;
  double hi = 1.0;
  double f_hi = evaluate(hi).first;
  while (f_hi < 2.0 * mu) {
    if (f_hi < mu) {
      lo = hi;
      f_lo = f_hi;
    }
    hi *= 2.0;
    if (hi > options.max_daily_count) {
      throw Error(ErrorCode::kCannotReachTarget,
                  "no daily job count below " + std::to_string(options.max_daily_count) +
                      " brackets the target utilization");
    }
    f_hi = evaluate(hi).first;
  }

  for (int it = 0; it < target.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto [f_mid, sub_seed] = evaluate(mid);
    result.history.push_back({mid, f_mid, lo, f_lo, hi, f_hi});
    result.iterations = it + 1;
    if (std::abs(f_mid - mu) <= tol) {
      result.daily_count = mid;
      result.estimate = f_mid;
      converged_seed = sub_seed;
      break;
    }
    if (f_mid < mu) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }

  if (!converged_seed) {
    throw Error(ErrorCode::kNonConvergence,
                "best iterate " + std::to_string(result.daily_count) + " jobs/day at " +
                    std::to_string(100.0 * result.estimate) + "% estimated utilization");
  }
  result.jobs = generate_jobs(result.daily_count, mix, weights, bank, facility, *converged_seed,
                              options.count_model);
  return result;
}

}  // namespace facsim
