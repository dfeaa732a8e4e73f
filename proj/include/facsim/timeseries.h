#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "facsim/distributions.h"

namespace facsim {

// Request bookkeeping of an inference run, rates in prompts/second.
// Per-type vectors are indexed [type][step].
struct RequestAccounting {
  std::vector<std::string> type_names;
  std::vector<double> incoming_pps;
  std::vector<double> effective_pps;
  std::vector<double> incomplete_pps;
  std::vector<std::vector<double>> type_incoming_pps;
  std::vector<std::vector<double>> type_effective_pps;
  std::vector<std::vector<double>> type_incomplete_pps;
  std::vector<std::vector<int>> instances;
};

// Fixed-grid facility series. Step i covers [i*timestep_s, (i+1)*timestep_s).
// power_kw and occupied_nodes are means over the step; running_jobs and
// queued_jobs are counts at the start of the step.
struct FacilityTimeseries {
  double timestep_s = 60.0;
  Calendar calendar;
  std::vector<double> power_kw;
  std::vector<double> occupied_nodes;
  std::vector<double> utilization;
  std::vector<long> running_jobs;
  std::vector<long> queued_jobs;
  std::optional<RequestAccounting> requests;

  std::size_t size() const { return power_kw.size(); }
  double timestamp_s(std::size_t step) const { return static_cast<double>(step) * timestep_s; }
  void resize(std::size_t steps);
};

// ISO-8601 label ("2001-01-01T00:00:00") for seconds since horizon start.
// The year label is the first non-leap year from 2001 on whose January 1st
// matches the calendar's start weekday.
std::string iso_timestamp(const Calendar& calendar, double seconds);
int label_year(const Calendar& calendar);

void write_timeseries_csv(std::ostream& out, const FacilityTimeseries& series);
FacilityTimeseries read_timeseries_csv(std::istream& in);

}  // namespace facsim
