#include "facsim/inference.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "facsim/error.h"

namespace facsim {

namespace {

constexpr double kJoulesPerKwh = 3.6e6;

// Requests per step for one request per day on average, before splitting
// across types: sum over the horizon equals horizon_days.
std::vector<double> unit_step_shares(const TemporalWeights& weights,
                                     const FacilityConfig& facility) {
  const std::size_t steps = facility.steps();
  std::vector<double> share(steps);
  double total = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    share[t] = timestep_weight(weights, facility.calendar,
                               static_cast<double>(t) * facility.timestep_s);
    total += share[t];
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kAllZeroWeights, "temporal weights vanish");
  const auto days = static_cast<double>(facility.horizon_days);
  for (auto& s : share) s = s * days / total;
  return share;
}

double utilization_at(double daily_requests, const std::vector<double>& shares,
                      const InferenceMix& mix, const NodeAllocation& allocation, int n_total,
                      double dt) {
  double occupied = 0.0;
  for (double share : shares) {
    for (std::size_t i = 0; i < mix.size(); ++i) {
      const double rate = daily_requests * mix[i].probability * share / dt;
      occupied += static_cast<double>(instances_required(rate, mix[i], allocation.nodes_max[i]) *
                                      mix[i].nodes_per_instance);
    }
  }
  return occupied / (static_cast<double>(n_total) * static_cast<double>(shares.size()));
}

}  // namespace

double NodeAllocation::utilization_ceiling(const InferenceMix& mix, int n_total) const {
  long usable = 0;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    usable += static_cast<long>(nodes_max[i] / mix[i].nodes_per_instance) *
              mix[i].nodes_per_instance;
  }
  return static_cast<double>(usable) / n_total;
}

NodeAllocation allocate_nodes(const InferenceMix& mix, int n_total) {
  validate_mix(mix);
  if (n_total < 1) throw Error(ErrorCode::kDegenerateMix, "facility has no nodes");
  const std::size_t n = mix.size();
  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i) {
    weight[i] = mix[i].probability * mix[i].nodes_per_instance / mix[i].max_rate_pps;
  }
  const double total_weight = std::accumulate(weight.begin(), weight.end(), 0.0);

  NodeAllocation alloc;
  alloc.nodes_max.assign(n, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double quota = n_total * weight[i] / total_weight;
    const double whole = std::floor(quota);
    alloc.nodes_max[i] = static_cast<int>(whole);
    assigned += alloc.nodes_max[i];
    remainders.emplace_back(quota - whole, i);
  }
  // Largest remainders first; ties go to the earlier type.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n_total; ++k) {
    ++alloc.nodes_max[remainders[k % n].second];
    ++assigned;
  }

  // Every requested type needs room for at least one instance.
  for (std::size_t i = 0; i < n; ++i) {
    if (mix[i].probability <= 0.0 || alloc.nodes_max[i] >= mix[i].nodes_per_instance) continue;
    alloc.rebalanced.push_back(mix[i].name);
    while (alloc.nodes_max[i] < mix[i].nodes_per_instance) {
      std::size_t donor = n;
      int best_surplus = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const int floor_j = mix[j].probability > 0.0 ? mix[j].nodes_per_instance : 0;
        const int surplus = alloc.nodes_max[j] - floor_j;
        if (surplus > best_surplus) {
          best_surplus = surplus;
          donor = j;
        }
      }
      if (donor == n) {
        throw Error(ErrorCode::kDegenerateMix,
                    "not enough nodes to host one instance of every type");
      }
      --alloc.nodes_max[donor];
      ++alloc.nodes_max[i];
    }
  }
  return alloc;
}

int instances_required(double rate_pps, const InferenceType& type, int nodes_max) {
  if (!(rate_pps > 0.0)) return 0;
  const int cap = nodes_max / type.nodes_per_instance;
  const double needed = std::ceil(rate_pps / type.max_rate_pps);
  return needed >= cap ? cap : static_cast<int>(needed);
}

RateSplit distribute_rate(double rate_pps, int instances, const InferenceType& type) {
  RateSplit split;
  if (instances <= 0) {
    split.incomplete_pps = std::max(rate_pps, 0.0);
    split.orphaned = rate_pps > 0.0;
    return split;
  }
  split.per_instance_pps = std::min(rate_pps / instances, type.max_rate_pps);
  if (rate_pps <= instances * type.max_rate_pps) {
    split.incomplete_pps = 0.0;
  } else {
    split.incomplete_pps = rate_pps - instances * split.per_instance_pps;
  }
  return split;
}

RequestRateSeries build_request_series(double daily_requests, const InferenceMix& mix,
                                       const TemporalWeights& weights,
                                       const FacilityConfig& facility) {
  const auto shares = unit_step_shares(weights, facility);
  RequestRateSeries series;
  series.timestep_s = facility.timestep_s;
  series.daily_requests = daily_requests;
  series.requests.resize(mix.size());
  for (std::size_t i = 0; i < mix.size(); ++i) {
    series.requests[i].resize(shares.size());
    for (std::size_t t = 0; t < shares.size(); ++t) {
      series.requests[i][t] = daily_requests * mix[i].probability * shares[t];
    }
  }
  return series;
}

double mean_inference_utilization(const RequestRateSeries& series, const InferenceMix& mix,
                                  const NodeAllocation& allocation, int n_total) {
  const std::size_t steps = series.steps();
  if (steps == 0) return 0.0;
  double occupied = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < mix.size(); ++i) {
      occupied += static_cast<double>(
          instances_required(series.rate_pps(i, t), mix[i], allocation.nodes_max[i]) *
          mix[i].nodes_per_instance);
    }
  }
  return occupied / (static_cast<double>(n_total) * static_cast<double>(steps));
}

RequestCalibration calibrate_daily_requests(const CalibrationTarget& target,
                                            const InferenceMix& mix,
                                            const TemporalWeights& weights,
                                            const NodeAllocation& allocation,
                                            const FacilityConfig& facility) {
  validate_mix(mix);
  if (allocation.nodes_max.size() != mix.size()) {
    throw Error(ErrorCode::kDegenerateMix, "allocation does not match the mix");
  }
  if (!(target.mu_avg_target > 0.0 && target.mu_avg_target <= 1.0) ||
      !(target.tolerance_pp > 0.0) || target.max_iterations < 1) {
    throw Error(ErrorCode::kConfigInvalid, "calibration target out of range");
  }
  const double mu = target.mu_avg_target;
  const double tol = target.tolerance_pp / 100.0;
  const double ceiling = allocation.utilization_ceiling(mix, facility.n_total);
  if (mu > ceiling + 1e-12) {
    throw Error(ErrorCode::kCannotReachTarget,
                "target exceeds the saturation utilization of " + std::to_string(100.0 * ceiling) +
                    "%");
  }

  const auto shares = unit_step_shares(weights, facility);
  auto util = [&](double daily) {
    return utilization_at(daily, shares, mix, allocation, facility.n_total, facility.timestep_s);
  };

  RequestCalibration result;
  double lo = 0.0;
  double hi = 1.0;
  double f_hi = util(hi);
  while (f_hi < mu) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e18) {
      throw Error(ErrorCode::kCannotReachTarget, "request count search diverged");
    }
    f_hi = util(hi);
  }

  double best_gap = std::abs(f_hi - mu);
  result.daily_requests = hi;
  result.utilization = f_hi;
  bool converged = best_gap <= tol;
  for (int it = 0; it < target.max_iterations && !converged; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = util(mid);
    result.iterations = it + 1;
    if (std::abs(f_mid - mu) < best_gap) {
      best_gap = std::abs(f_mid - mu);
      result.daily_requests = mid;
      result.utilization = f_mid;
    }
    if (std::abs(f_mid - mu) <= tol) {
      converged = true;
    } else if (f_mid < mu) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::kNonConvergence,
                "best iterate " + std::to_string(result.daily_requests) + " requests/day at " +
                    std::to_string(100.0 * result.utilization) + "% utilization");
  }
  result.series = build_request_series(result.daily_requests, mix, weights, facility);
  return result;
}

double inference_step_power_kw(const EnergyCurve& sample, int instances, double step_start_s,
                               double timestep_s, double stagger_s) {
  double watts = 0.0;
  for (int k = 0; k < instances; ++k) {
    watts += sample.window_mean_w(step_start_s + k * stagger_s, timestep_s);
  }
  return watts / 1000.0;
}

SimulationResult simulate_inference(const RequestRateSeries& requests, const InferenceMix& mix,
                                    const NodeAllocation& allocation, const ProfileBank& bank,
                                    const FacilityConfig& facility,
                                    const InferenceOptions& options) {
  validate_mix(mix);
  const std::size_t steps = facility.steps();
  if (requests.requests.size() != mix.size() || requests.steps() != steps) {
    throw Error(ErrorCode::kConfigInvalid, "request series does not match facility horizon");
  }
  for (const auto& type : mix) {
    if (type.probability > 0.0 && !bank.has_rate_samples(type.name)) {
      throw Error(ErrorCode::kMissingRateSample,
                  "no rate samples for inference type '" + type.name + "'");
    }
  }
  const double dt = facility.timestep_s;
  const double stagger = options.stagger_s < 0.0 ? dt : options.stagger_s;
  Rng rng(options.seed);

  SimulationResult result;
  auto& series = result.series;
  series.timestep_s = dt;
  series.calendar = facility.calendar;
  series.resize(steps);
  auto& acc = series.requests.emplace();
  acc.incoming_pps.assign(steps, 0.0);
  acc.effective_pps.assign(steps, 0.0);
  acc.incomplete_pps.assign(steps, 0.0);
  for (const auto& type : mix) {
    acc.type_names.push_back(type.name);
    acc.type_incoming_pps.emplace_back(steps, 0.0);
    acc.type_effective_pps.emplace_back(steps, 0.0);
    acc.type_incomplete_pps.emplace_back(steps, 0.0);
    acc.instances.emplace_back(steps, 0);
  }

  double instance_energy_j = 0.0;
  double idle_energy_j = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const double step_start = static_cast<double>(t) * dt;
    double power_kw = 0.0;
    long occupied = 0;
    long instances_total = 0;
    for (std::size_t i = 0; i < mix.size(); ++i) {
      const double rate = requests.rate_pps(i, t);
      const int k = instances_required(rate, mix[i], allocation.nodes_max[i]);
      const RateSplit split = distribute_rate(rate, k, mix[i]);
      if (k > 0) {
        const double measured = bank.nearest_rate(mix[i].name, split.per_instance_pps);
        const ProfileIndex idx = lookup_rate(bank, mix[i].name, measured, rng);
        power_kw += inference_step_power_kw(bank.curve(idx), k, step_start, dt, stagger);
      }
      occupied += static_cast<long>(k) * mix[i].nodes_per_instance;
      instances_total += k;
      const double effective = k * split.per_instance_pps;
      acc.type_incoming_pps[i][t] = rate;
      acc.type_effective_pps[i][t] = effective;
      acc.type_incomplete_pps[i][t] = split.incomplete_pps;
      acc.instances[i][t] = k;
      acc.incoming_pps[t] += rate;
      acc.effective_pps[t] += effective;
      acc.incomplete_pps[t] += split.incomplete_pps;
    }
    const double idle_kw = static_cast<double>(facility.n_total - occupied) * facility.node_idle_kw;
    instance_energy_j += power_kw * 1000.0 * dt;
    idle_energy_j += idle_kw * 1000.0 * dt;
    series.power_kw[t] = power_kw + idle_kw;
    series.occupied_nodes[t] = static_cast<double>(occupied);
    series.utilization[t] = static_cast<double>(occupied) / facility.n_total;
    series.running_jobs[t] = instances_total;
    series.queued_jobs[t] = 0;
  }
  result.ledger.job_energy_kwh = instance_energy_j / kJoulesPerKwh;
  result.ledger.idle_energy_kwh = idle_energy_j / kJoulesPerKwh;
  return result;
}

}  // namespace facsim
