#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facsim/rng.h"

namespace facsim {

enum class WorkloadType {
  kTraining,
  kFineTuning,
  kInferenceOffline,
  kInferenceRateSample,
};

std::string_view to_string(WorkloadType type);
// Accepts the snake_case names used in sidecars and weight files.
std::optional<WorkloadType> parse_workload_type(std::string_view name);

struct PowerSample {
  double elapsed_s = 0.0;
  double power_w = 0.0;
};

// A measured (or synthesized) power trace of one workload execution.
//
// Samples follow a sample-and-hold reading: sample k holds its power over
// [elapsed_k, elapsed_{k+1}); the final row only marks the end of the trace,
// so duration_s equals the last elapsed_s. Power is the aggregate over all
// node_count nodes of the run.
struct PowerProfile {
  std::string id;
  WorkloadType workload_type = WorkloadType::kTraining;
  int node_count = 1;
  double duration_s = 0.0;
  std::vector<PowerSample> samples;
  std::optional<double> request_rate_pps;
  double sample_interval_s = 0.1;
  // Inference service this rate sample belongs to ("coding", ...). Empty for
  // job profiles.
  std::string inference_type;

  // Integral of the held power over [0, duration_s], in joules.
  double energy_j() const;
};

struct ProfileSummary {
  double mean_power_kw = 0.0;
  double std_power_kw = 0.0;
  double duration_h = 0.0;
  double energy_kwh = 0.0;
};

// Column mapping for traces that do not use the canonical header. Values are
// multiplied by the scale factors on read (e.g. ms -> s, kW -> W).
struct TraceSchema {
  std::string time_column = "elapsed_s";
  std::string power_column = "power_w";
  double time_scale = 1.0;
  double power_scale = 1.0;
};

struct ProfileMetadata {
  std::string id;
  WorkloadType workload_type = WorkloadType::kTraining;
  int node_count = 1;
  std::optional<double> request_rate_pps;
  double sample_interval_s = 0.1;
  std::string inference_type;
  TraceSchema schema;
};

// Reads a sidecar "<trace>.meta.json".
ProfileMetadata load_metadata(const std::filesystem::path& path);

PowerProfile parse_trace(std::istream& in, const ProfileMetadata& metadata);
PowerProfile load_trace(const std::filesystem::path& path,
                        const ProfileMetadata& metadata);

// Time-bucket means on a grid of `timestep_s`; the last bucket is truncated
// at duration_s so both energy and duration carry over unchanged.
PowerProfile resample(const PowerProfile& profile, double timestep_s);

ProfileSummary summarize(const PowerProfile& profile);

struct ShapeParams {
  double base_kw = 0.42;
  double plateau_kw = 3.52;
  double ramp_s = 180.0;
  double period_s = 60.0;
  double dip_fraction = 0.0;
  double duration_s = 1800.0;
  int node_count = 1;
  std::uint64_t seed = 0;
  double sample_interval_s = 0.1;
  // Amplitude of the uniform noise added to the oscillation phase, in [0, 1].
  double jitter = 0.1;
  WorkloadType workload_type = WorkloadType::kTraining;
  std::string id;
  std::optional<double> request_rate_pps;
  std::string inference_type;
};

// Ramp from base to plateau, then a raised-cosine dip towards
// plateau * (1 - dip_fraction) every period_s with seeded phase jitter.
// Output never leaves [base_kw, plateau_kw] during the ramp and
// [plateau_kw * (1 - dip_fraction), plateau_kw] afterwards.
PowerProfile synthesize_profile(const ShapeParams& params);

// Piecewise-linear cumulative energy of a held power trace.
class EnergyCurve {
 public:
  EnergyCurve() = default;
  explicit EnergyCurve(const PowerProfile& profile);

  double duration_s() const { return duration_s_; }
  double total_j() const { return cumulative_j_.empty() ? 0.0 : cumulative_j_.back(); }

  // Energy delivered over [0, t]; t is clamped into [0, duration_s].
  double energy_until(double t) const;

  // Mean power over [offset, offset + width) treating the trace as periodic.
  double window_mean_w(double offset, double width) const;

 private:
  double wrapped_energy(double t) const;

  std::vector<double> times_;
  std::vector<double> power_w_;
  std::vector<double> cumulative_j_;
  double duration_s_ = 0.0;
};

struct JobKey {
  WorkloadType type = WorkloadType::kTraining;
  int node_count = 1;
  auto operator<=>(const JobKey&) const = default;
};

using ProfileIndex = std::size_t;

// Collection of profiles grouped by job key or by (inference type, rate).
// Several replicates may share a key. Treat as immutable once built.
class ProfileBank {
 public:
  ProfileIndex add(PowerProfile profile);

  std::size_t size() const { return profiles_.size(); }
  const PowerProfile& at(ProfileIndex index) const { return profiles_.at(index); }
  const EnergyCurve& curve(ProfileIndex index) const { return curves_.at(index); }

  bool contains(const JobKey& key) const { return job_groups_.count(key) > 0; }
  std::span<const ProfileIndex> replicates(const JobKey& key) const;
  std::set<int> node_counts(WorkloadType type) const;

  // Mean of node_count * duration_s over the replicates of a key.
  double mean_node_seconds(const JobKey& key) const;

  bool has_rate_samples(std::string_view inference_type) const;
  // Measured rate closest to `rate_pps` (ties go to the lower rate).
  double nearest_rate(std::string_view inference_type, double rate_pps) const;
  std::span<const ProfileIndex> rate_replicates(std::string_view inference_type,
                                                double rate_pps) const;

  // Copy of the bank with every profile resampled to `timestep_s`.
  ProfileBank resampled(double timestep_s) const;

  // Loads every "*.csv" trace in `dir` (sorted by name) with its
  // "<stem>.meta.json" sidecar.
  static ProfileBank load_directory(const std::filesystem::path& dir);

 private:
  std::vector<PowerProfile> profiles_;
  std::vector<EnergyCurve> curves_;
  std::map<JobKey, std::vector<ProfileIndex>> job_groups_;
  std::map<std::string, std::map<double, std::vector<ProfileIndex>>, std::less<>>
      rate_groups_;
};

// Uniformly picks one replicate for `key`.
ProfileIndex lookup(const ProfileBank& bank, const JobKey& key, Rng& rng);
ProfileIndex lookup_rate(const ProfileBank& bank, std::string_view inference_type,
                         double rate_pps, Rng& rng);

}  // namespace facsim
