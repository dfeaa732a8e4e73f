#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "facsim/distributions.h"
#include "facsim/engine.h"
#include "facsim/facility.h"
#include "facsim/jobgen.h"
#include "facsim/profiles.h"

namespace facsim {

// Nodes reserved per inference type, indexed like the mix.
struct NodeAllocation {
  std::vector<int> nodes_max;
  // Types that rounded to fewer than one instance and were topped up.
  std::vector<std::string> rebalanced;

  // sum_i floor(N_i / n_i) * n_i / n_total
  double utilization_ceiling(const InferenceMix& mix, int n_total) const;
};

// Largest-remainder split of n_total proportional to p_i * n_i / max_rate_i.
NodeAllocation allocate_nodes(const InferenceMix& mix, int n_total);

// min(ceil(rate / max_rate), floor(nodes_max / n)).
int instances_required(double rate_pps, const InferenceType& type, int nodes_max);

struct RateSplit {
  double per_instance_pps = 0.0;
  double incomplete_pps = 0.0;
  bool orphaned = false;  // load arrived with no instance to serve it
};

RateSplit distribute_rate(double rate_pps, int instances, const InferenceType& type);

// Request counts per type and step; rates assume uniform arrivals in a step.
struct RequestRateSeries {
  double timestep_s = 60.0;
  double daily_requests = 0.0;
  std::vector<std::vector<double>> requests;  // [type][step]

  std::size_t steps() const { return requests.empty() ? 0 : requests.front().size(); }
  double rate_pps(std::size_t type, std::size_t step) const {
    return requests[type][step] / timestep_s;
  }
};

// Distributes daily_requests * horizon_days over the steps in proportion to
// the temporal weights and over types in proportion to p_i.
RequestRateSeries build_request_series(double daily_requests, const InferenceMix& mix,
                                       const TemporalWeights& weights,
                                       const FacilityConfig& facility);

// Mean over steps of sum_i K_i,t * n_i / n_total.
double mean_inference_utilization(const RequestRateSeries& series, const InferenceMix& mix,
                                  const NodeAllocation& allocation, int n_total);

struct RequestCalibration {
  double daily_requests = 0.0;
  double utilization = 0.0;
  int iterations = 0;
  RequestRateSeries series;
};

RequestCalibration calibrate_daily_requests(const CalibrationTarget& target,
                                            const InferenceMix& mix,
                                            const TemporalWeights& weights,
                                            const NodeAllocation& allocation,
                                            const FacilityConfig& facility);

struct InferenceOptions {
  // Offset between consecutive instances into the rate sample; 0 runs all
  // instances in phase. Negative means one timestep.
  double stagger_s = -1.0;
  std::uint64_t seed = 0;  // replicate selection
};

// Draw of `instances` copies of a rate sample over one step, in kW. Instance
// k reads the sample at step_start_s + k * stagger_s, wrapping around.
double inference_step_power_kw(const EnergyCurve& sample, int instances, double step_start_s,
                               double timestep_s, double stagger_s);

SimulationResult simulate_inference(const RequestRateSeries& series, const InferenceMix& mix,
                                    const NodeAllocation& allocation, const ProfileBank& bank,
                                    const FacilityConfig& facility,
                                    const InferenceOptions& options = {});

}  // namespace facsim
