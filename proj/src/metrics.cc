#include "facsim/metrics.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "facsim/error.h"

namespace facsim {

double nearest_rank(std::span<const double> sorted, double percentile) {
  if (sorted.empty()) throw Error(ErrorCode::kEmptySeries, "percentile of empty sample");
  const auto n = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n - 1e-9));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

Stats describe(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptySeries, "no values to describe");
  Stats s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(values.size()));
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.median = nearest_rank(sorted, 50.0);
  s.p90 = nearest_rank(sorted, 90.0);
  s.max = sorted.back();
  return s;
}

QueueStats queue_stats(std::span<const Job> jobs) {
  QueueStats q;
  if (jobs.empty()) return q;
  std::size_t queued = 0;
  double wait_s = 0.0;
  for (const auto& job : jobs) {
    if (job.start_s > job.arrival_s) {
      ++queued;
      wait_s += job.start_s - job.arrival_s;
    }
  }
  q.queued_fraction_pct = 100.0 * static_cast<double>(queued) / static_cast<double>(jobs.size());
  if (queued > 0) q.mean_queue_time_h = wait_s / static_cast<double>(queued) / 3600.0;
  return q;
}

AggregateSummary summarize_run(const FacilityTimeseries& series,
                               std::optional<std::span<const Job>> jobs) {
  if (series.size() == 0) throw Error(ErrorCode::kEmptySeries, "series has no steps");
  AggregateSummary out;
  std::vector<double> mw(series.power_kw.size());
  std::transform(series.power_kw.begin(), series.power_kw.end(), mw.begin(),
                 [](double kw) { return kw / 1000.0; });
  out.power_mw = describe(mw);
  out.peak_to_average = out.power_mw.mean > 0.0 ? out.power_mw.max / out.power_mw.mean : 1.0;

  std::vector<double> pct(series.utilization.size());
  std::transform(series.utilization.begin(), series.utilization.end(), pct.begin(),
                 [](double u) { return 100.0 * u; });
  out.utilization_pct = describe(pct);

  out.horizon_days = static_cast<double>(series.size()) * series.timestep_s / kSecondsPerDay;
  out.energy_mwh = out.power_mw.mean * static_cast<double>(series.size()) * series.timestep_s /
                   kSecondsPerHour;

  if (jobs) {
    ColocationMetrics c;
    c.jobs_per_day = static_cast<double>(jobs->size()) / out.horizon_days;
    c.queue = queue_stats(*jobs);
    out.colocation = c;
  }
  if (series.requests) {
    const auto& r = *series.requests;
    InferenceMetrics m;
    double prompts = 0.0;
    for (double rate : r.incoming_pps) prompts += rate * series.timestep_s;
    m.daily_prompts = prompts / out.horizon_days;
    m.incoming_pps = describe(r.incoming_pps).mean;
    m.effective_pps = describe(r.effective_pps).mean;
    m.incomplete_pps = describe(r.incomplete_pps).mean;
    out.inference = m;
  }
  return out;
}

PeriodicProfile periodic_profile(const FacilityTimeseries& series, PeriodMode mode,
                                 std::span<const double> percentiles) {
  const double period_s = mode == PeriodMode::kHourOfDay ? kSecondsPerDay : 7 * kSecondsPerDay;
  const double span_s = static_cast<double>(series.size()) * series.timestep_s;
  if (span_s + 1e-9 < period_s) {
    throw Error(ErrorCode::kInsufficientSpan, "series shorter than one full period");
  }
  const std::size_t nbins = mode == PeriodMode::kHourOfDay ? 24 : 168;
  std::vector<std::vector<double>> buckets(nbins);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double t = series.timestamp_s(i);
    const auto day = static_cast<long>(std::floor(t / kSecondsPerDay));
    const auto hour = static_cast<std::size_t>(
        std::floor((t - static_cast<double>(day) * kSecondsPerDay) / kSecondsPerHour));
    std::size_t bin = std::min<std::size_t>(hour, 23);
    if (mode == PeriodMode::kDayOfWeek) {
      bin += 24 * static_cast<std::size_t>(series.calendar.day_of_week(day));
    }
    buckets[bin].push_back(series.power_kw[i] / 1000.0);
  }

  PeriodicProfile profile;
  profile.mode = mode;
  profile.percentiles.assign(percentiles.begin(), percentiles.end());
  profile.bins.reserve(nbins);
  for (auto& bucket : buckets) {
    std::sort(bucket.begin(), bucket.end());
    PeriodicBin bin;
    if (!bucket.empty()) {
      bin.median = nearest_rank(bucket, 50.0);
      for (double p : percentiles) bin.bands.push_back(nearest_rank(bucket, p));
    } else {
      bin.bands.assign(percentiles.size(), 0.0);
    }
    profile.bins.push_back(std::move(bin));
  }
  return profile;
}

void write_periodic_csv(std::ostream& out, const PeriodicProfile& profile) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "bin,median");
  for (double p : profile.percentiles) fmt::format_to(std::back_inserter(buf), ",p{:g}", p);
  buf.push_back('\n');
  for (std::size_t b = 0; b < profile.bins.size(); ++b) {
    fmt::format_to(std::back_inserter(buf), "{},{:.6f}", b, profile.bins[b].median);
    for (double v : profile.bins[b].bands) fmt::format_to(std::back_inserter(buf), ",{:.6f}", v);
    buf.push_back('\n');
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

namespace {

// Ordered (key, value) pairs shared by the text and JSON writers.
std::vector<std::pair<std::string, std::optional<double>>> summary_fields(
    const AggregateSummary& s) {
  std::vector<std::pair<std::string, std::optional<double>>> f = {
      {"horizon_days", s.horizon_days},
      {"power_mean_mw", s.power_mw.mean},
      {"power_std_mw", s.power_mw.std},
      {"power_median_mw", s.power_mw.median},
      {"power_p90_mw", s.power_mw.p90},
      {"power_max_mw", s.power_mw.max},
      {"peak_to_average", s.peak_to_average},
      {"utilization_mean_pct", s.utilization_pct.mean},
      {"utilization_std_pct", s.utilization_pct.std},
      {"utilization_median_pct", s.utilization_pct.median},
      {"utilization_p90_pct", s.utilization_pct.p90},
      {"utilization_max_pct", s.utilization_pct.max},
      {"energy_mwh", s.energy_mwh},
  };
  if (s.colocation) {
    f.emplace_back("jobs_per_day", s.colocation->jobs_per_day);
    f.emplace_back("jobs_queued_pct", s.colocation->queue.queued_fraction_pct);
    f.emplace_back("job_queue_time_h", s.colocation->queue.mean_queue_time_h);
  }
  if (s.inference) {
    f.emplace_back("daily_prompts", s.inference->daily_prompts);
    f.emplace_back("incoming_pps", s.inference->incoming_pps);
    f.emplace_back("effective_pps", s.inference->effective_pps);
    f.emplace_back("incomplete_pps", s.inference->incomplete_pps);
  }
  return f;
}

}  // namespace

void write_summary_text(std::ostream& out, const AggregateSummary& summary) {
  fmt::memory_buffer buf;
  for (const auto& [key, value] : summary_fields(summary)) {
    if (value) {
      fmt::format_to(std::back_inserter(buf), "{}: {:.6f}\n", key, *value);
    } else {
      fmt::format_to(std::back_inserter(buf), "{}: ---\n", key);
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_summary_json(std::ostream& out, const AggregateSummary& summary) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [key, value] : summary_fields(summary)) {
    if (value) {
      j[key] = *value;
    } else {
      j[key] = nullptr;
    }
  }
  out << j.dump(2) << '\n';
}

}  // namespace facsim
