#include "facsim/facility.h"

#include <cmath>

namespace facsim {

std::size_t FacilityConfig::steps() const {
  return static_cast<std::size_t>(std::llround(horizon_s() / timestep_s));
}

std::vector<std::string> FacilityConfig::violations() const {
  std::vector<std::string> out;
  if (n_total < 1) out.emplace_back("facility.n_total must be >= 1");
  if (!(node_idle_kw >= 0.0)) out.emplace_back("facility.node_idle_kw must be >= 0");
  if (!(node_idle_kw <= node_tdp_kw)) {
    out.emplace_back("facility.node_idle_kw must not exceed node_tdp_kw");
  }
  if (!(rated_power_mw > 0.0)) out.emplace_back("facility.rated_power_mw must be positive");
  if (horizon_days < 1) out.emplace_back("facility.horizon_days must be >= 1");
  if (!(timestep_s > 0.0)) {
    out.emplace_back("facility.timestep_s must be positive");
  } else {
    const double per_hour = 3600.0 / timestep_s;
    if (std::abs(per_hour - std::round(per_hour)) > 1e-9) {
      out.emplace_back("facility.timestep_s must divide one hour evenly");
    }
  }
  if (calendar.start_weekday < 0 || calendar.start_weekday > 6) {
    out.emplace_back("facility.start_weekday out of range");
  }
  return out;
}

}  // namespace facsim
