#pragma once

#include <string>
#include <vector>

#include "facsim/distributions.h"

namespace facsim {

// Node architecture and simulation horizon of one facility. The horizon
// starts at t = 0 (midnight, January 1st of the calendar year) and spans
// whole days.
struct FacilityConfig {
  int n_total = 2840;
  double node_tdp_kw = 3.52;
  double node_idle_kw = 0.42;
  double rated_power_mw = 10.0;
  long horizon_days = 365;
  double timestep_s = 60.0;
  Calendar calendar;

  double horizon_s() const { return static_cast<double>(horizon_days) * kSecondsPerDay; }
  std::size_t steps() const;

  // Every broken invariant, empty when valid.
  std::vector<std::string> violations() const;
};

}  // namespace facsim
