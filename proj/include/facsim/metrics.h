#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "facsim/jobgen.h"
#include "facsim/timeseries.h"

namespace facsim {

// Nearest-rank percentile of an ascending-sorted sample: the value at rank
// ceil(p/100 * n), with p = 0 giving the minimum.
double nearest_rank(std::span<const double> sorted, double percentile);

struct Stats {
  double mean = 0.0;
  double std = 0.0;  // population
  double median = 0.0;
  double p90 = 0.0;
  double max = 0.0;
};

Stats describe(std::span<const double> values);

struct QueueStats {
  double queued_fraction_pct = 0.0;
  // Mean over queued jobs only; absent when nothing queued.
  std::optional<double> mean_queue_time_h;
};

QueueStats queue_stats(std::span<const Job> jobs);

struct ColocationMetrics {
  double jobs_per_day = 0.0;
  QueueStats queue;
};

struct InferenceMetrics {
  double daily_prompts = 0.0;
  double incoming_pps = 0.0;
  double effective_pps = 0.0;
  double incomplete_pps = 0.0;
};

struct AggregateSummary {
  Stats power_mw;
  double peak_to_average = 1.0;
  Stats utilization_pct;
  double energy_mwh = 0.0;
  double horizon_days = 0.0;
  std::optional<ColocationMetrics> colocation;
  std::optional<InferenceMetrics> inference;
};

AggregateSummary summarize_run(const FacilityTimeseries& series,
                               std::optional<std::span<const Job>> jobs = std::nullopt);

enum class PeriodMode { kHourOfDay, kDayOfWeek };

struct PeriodicBin {
  double median = 0.0;
  std::vector<double> bands;  // one value per requested percentile
};

// Facility power (MW) distribution per hour of day (24 bins) or per
// weekday x hour (168 bins, Monday 00:00 first).
struct PeriodicProfile {
  PeriodMode mode = PeriodMode::kHourOfDay;
  std::vector<double> percentiles;
  std::vector<PeriodicBin> bins;
};

inline constexpr std::array<double, 4> kDefaultBands = {10.0, 25.0, 75.0, 90.0};

PeriodicProfile periodic_profile(const FacilityTimeseries& series, PeriodMode mode,
                                 std::span<const double> percentiles = kDefaultBands);

// "bin,median,p10,p25,p75,p90" with 6-decimal values.
void write_periodic_csv(std::ostream& out, const PeriodicProfile& profile);

// Stable key order, one "key: value" per line; absent values print "---".
void write_summary_text(std::ostream& out, const AggregateSummary& summary);
void write_summary_json(std::ostream& out, const AggregateSummary& summary);

}  // namespace facsim
