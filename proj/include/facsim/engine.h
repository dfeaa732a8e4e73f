#pragma once

#include <cstddef>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "facsim/facility.h"
#include "facsim/jobgen.h"
#include "facsim/profiles.h"
#include "facsim/timeseries.h"

namespace facsim {

// Finite node pool. Tracks free nodes at the scheduler's current time and
// keeps every busy interval for auditing.
class NodePool {
 public:
  struct Interval {
    double start_s;
    double end_s;
    int nodes;
  };

  explicit NodePool(int n_total) : n_total_(n_total), free_(n_total) {}

  int n_total() const { return n_total_; }
  int free_count() const { return free_; }

  // Returns every interval ending at or before `t` to the pool.
  void release_until(double t);
  // Earliest pending release; requires at least one busy interval.
  double next_release() const { return releases_.top().first; }
  bool idle() const { return releases_.empty(); }

  void acquire(int nodes, double start_s, double end_s);

  const std::vector<Interval>& intervals() const { return intervals_; }

 private:
  using Release = std::pair<double, int>;
  int n_total_;
  int free_;
  std::priority_queue<Release, std::vector<Release>, std::greater<>> releases_;
  std::vector<Interval> intervals_;
};

// Strict first-in-first-out without backfill: a job starts once enough nodes
// are free and every earlier arrival has started.
JobList schedule_fifo(JobList jobs, NodePool& pool);
JobList schedule_fifo(JobList jobs, int n_total);

struct EnergyLedger {
  double job_energy_kwh = 0.0;   // profile energy delivered inside the horizon
  double idle_energy_kwh = 0.0;  // free nodes at node_idle_kw
  std::size_t truncated_jobs = 0;  // still running at the end of the horizon
};

struct SimulationResult {
  FacilityTimeseries series;
  EnergyLedger ledger;
};

// Replays a scheduled job list on the reporting grid. Per step, power is the
// energy of every active profile inside the step plus idle draw of free
// node-seconds, divided by the step length.
SimulationResult simulate(const JobList& jobs, const ProfileBank& bank,
                          const FacilityConfig& facility);

struct AuditReport {
  bool passed = true;
  std::optional<std::size_t> first_offending_step;
  std::string message;
};

AuditReport audit_concurrency(const FacilityTimeseries& series, const FacilityConfig& facility);

// Facility energy over the horizon, sum of power * timestep.
double series_energy_kwh(const FacilityTimeseries& series);

}  // namespace facsim
