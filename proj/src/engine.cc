#include "facsim/engine.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "facsim/error.h"

namespace facsim {

namespace {

constexpr double kJoulesPerKwh = 3.6e6;

// First grid step whose start time is >= t.
std::size_t first_step_at_or_after(double t, double dt) {
  if (t <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(t / dt));
}

void add_span(std::vector<long>& diff, std::size_t from, std::size_t to) {
  if (from >= to) return;
  diff[std::min(from, diff.size() - 1)] += 1;
  diff[std::min(to, diff.size() - 1)] -= 1;
}

void check_feasible(const JobList& list, const FacilityConfig& facility) {
  std::vector<std::pair<double, int>> events;
  events.reserve(2 * list.jobs.size());
  for (const auto& job : list.jobs) {
    if (!job.scheduled()) {
      throw Error(ErrorCode::kInfeasibleSchedule, "job " + std::to_string(job.id) + " is unscheduled");
    }
    if (job.start_s < job.arrival_s) {
      throw Error(ErrorCode::kInfeasibleSchedule,
                  "job " + std::to_string(job.id) + " starts before it arrives");
    }
    if (job.node_count > facility.n_total) {
      throw Error(ErrorCode::kJobTooLarge, "job " + std::to_string(job.id));
    }
    events.emplace_back(job.start_s, job.node_count);
    events.emplace_back(job.end_s, -job.node_count);
  }
  // Releases sort before acquisitions at equal times.
  std::sort(events.begin(), events.end());
  long busy = 0;
  for (const auto& [t, delta] : events) {
    busy += delta;
    if (busy > facility.n_total) {
      throw Error(ErrorCode::kInfeasibleSchedule,
                  std::to_string(busy) + " nodes busy at t=" + std::to_string(t));
    }
  }
}

}  // namespace

void NodePool::release_until(double t) {
  while (!releases_.empty() && releases_.top().first <= t) {
    free_ += releases_.top().second;
    releases_.pop();
  }
}

void NodePool::acquire(int nodes, double start_s, double end_s) {
  free_ -= nodes;
  releases_.emplace(end_s, nodes);
  intervals_.push_back({start_s, end_s, nodes});
}

JobList schedule_fifo(JobList list, NodePool& pool) {
  std::stable_sort(list.jobs.begin(), list.jobs.end(),
                   [](const Job& a, const Job& b) { return a.arrival_s < b.arrival_s; });
  double cursor = -std::numeric_limits<double>::infinity();
  for (auto& job : list.jobs) {
    if (job.node_count > pool.n_total() || job.node_count < 1) {
      throw Error(ErrorCode::kJobTooLarge, "job " + std::to_string(job.id) + " needs " +
                                               std::to_string(job.node_count) + " of " +
                                               std::to_string(pool.n_total()) + " nodes");
    }
    double t = std::max(job.arrival_s, cursor);
    pool.release_until(t);
    while (pool.free_count() < job.node_count) {
      t = std::max(t, pool.next_release());
      pool.release_until(t);
    }
    job.start_s = t;
    job.end_s = t + job.duration_s;
    pool.acquire(job.node_count, job.start_s, job.end_s);
    cursor = t;
  }
  return list;
}

JobList schedule_fifo(JobList jobs, int n_total) {
  NodePool pool(n_total);
  return schedule_fifo(std::move(jobs), pool);
}

SimulationResult simulate(const JobList& list, const ProfileBank& bank,
                          const FacilityConfig& facility) {
  check_feasible(list, facility);

  const std::size_t steps = facility.steps();
  const double dt = facility.timestep_s;
  const double t_end = static_cast<double>(steps) * dt;

  SimulationResult result;
  auto& series = result.series;
  series.timestep_s = dt;
  series.calendar = facility.calendar;
  series.resize(steps);

  std::vector<double> job_energy_j(steps, 0.0);
  std::vector<double> busy_node_s(steps, 0.0);
  std::vector<long> running_diff(steps + 1, 0);
  std::vector<long> queued_diff(steps + 1, 0);

  for (const auto& job : list.jobs) {
    const double start = job.start_s;
    const double visible_start = std::min(start, t_end);
    add_span(queued_diff, first_step_at_or_after(job.arrival_s, dt),
             first_step_at_or_after(visible_start, dt));
    if (start >= t_end) continue;

    const double end = std::min(job.end_s, t_end);
    if (job.end_s > t_end) ++result.ledger.truncated_jobs;
    add_span(running_diff, first_step_at_or_after(start, dt), first_step_at_or_after(end, dt));

    const auto& curve = bank.curve(job.profile);
    auto step = static_cast<std::size_t>(std::floor(start / dt));
    double delivered = 0.0;
    while (step < steps && static_cast<double>(step) * dt < end) {
      const double step_begin = std::max(static_cast<double>(step) * dt, start);
      const double step_end = std::min(static_cast<double>(step + 1) * dt, end);
      const double cumulative = curve.energy_until(step_end - start);
      job_energy_j[step] += cumulative - delivered;
      busy_node_s[step] += job.node_count * (step_end - step_begin);
      delivered = cumulative;
      ++step;
    }
    result.ledger.job_energy_kwh += delivered / kJoulesPerKwh;
  }

  const double idle_w = facility.node_idle_kw * 1000.0;
  const double node_s_per_step = static_cast<double>(facility.n_total) * dt;
  long running = 0;
  long queued = 0;
  double idle_energy_j = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double idle_j = idle_w * (node_s_per_step - busy_node_s[i]);
    idle_energy_j += idle_j;
    series.power_kw[i] = (job_energy_j[i] + idle_j) / dt / 1000.0;
    series.occupied_nodes[i] = busy_node_s[i] / dt;
    series.utilization[i] = series.occupied_nodes[i] / facility.n_total;
    running += running_diff[i];
    queued += queued_diff[i];
    series.running_jobs[i] = running;
    series.queued_jobs[i] = queued;
  }
  result.ledger.idle_energy_kwh = idle_energy_j / kJoulesPerKwh;
  return result;
}

AuditReport audit_concurrency(const FacilityTimeseries& series, const FacilityConfig& facility) {
  AuditReport report;
  const std::size_t n = series.size();
  if (series.occupied_nodes.size() != n || series.utilization.size() != n ||
      series.running_jobs.size() != n || series.queued_jobs.size() != n) {
    report.passed = false;
    report.message = "series columns have mismatched lengths";
    return report;
  }
  const double cap = facility.n_total * (1.0 + 1e-9);
  auto fail = [&](std::size_t step, const std::string& why) {
    report.passed = false;
    report.first_offending_step = step;
    report.message = "step " + std::to_string(step) + ": " + why;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double occ = series.occupied_nodes[i];
    if (!(occ <= cap)) {
      fail(i, "occupied nodes " + std::to_string(occ) + " exceed " + std::to_string(facility.n_total));
      break;
    }
    if (!(occ >= -1e-9 * facility.n_total)) {
      fail(i, "negative occupancy");
      break;
    }
    if (std::abs(series.utilization[i] - occ / facility.n_total) > 1e-12) {
      fail(i, "utilization disagrees with occupancy");
      break;
    }
    if (series.running_jobs[i] < 0 || series.queued_jobs[i] < 0) {
      fail(i, "negative job count");
      break;
    }
    if (!std::isfinite(series.power_kw[i]) || series.power_kw[i] < 0.0) {
      fail(i, "power is negative or not finite");
      break;
    }
  }
  if (report.passed) report.message = "ok";
  return report;
}

double series_energy_kwh(const FacilityTimeseries& series) {
  double kwh = 0.0;
  for (double p : series.power_kw) kwh += p * series.timestep_s / 3600.0;
  return kwh;
}

}  // namespace facsim
