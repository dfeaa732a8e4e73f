#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facsim/profiles.h"
#include "facsim/rng.h"

namespace facsim {

inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr double kSecondsPerDay = 86400.0;

// Scales non-negative weights to sum to one.
std::vector<double> normalize(std::span<const double> weights);

// Fixed non-leap year; day 0 is January 1st and falls on start_weekday
// (0 = Monday ... 6 = Sunday). Horizons longer than a year wrap.
struct Calendar {
  int start_weekday = 0;

  int day_of_week(long day) const { return static_cast<int>((start_weekday + day) % 7); }
  int month(long day) const;
  int day_of_month(long day) const;  // 1-based
  long year_offset(long day) const { return day / 365; }
};

std::optional<int> parse_weekday(std::string_view name);

struct TemporalWeights {
  std::array<double, 24> hourly{};
  std::array<double, 7> day_of_week{};
  std::array<double, 12> monthly{};

  static TemporalWeights uniform();
  // Validates lengths and normalizes each vector.
  static TemporalWeights from_raw(std::span<const double> hourly,
                                  std::span<const double> day_of_week,
                                  std::span<const double> monthly);
};

// hourly[h] * day_of_week[d] * monthly[m] at `timestamp_s` seconds from the
// start of the horizon.
double timestep_weight(const TemporalWeights& weights, const Calendar& calendar,
                       double timestamp_s);

struct JobMixDistribution {
  std::map<WorkloadType, double> type_probs;
  std::map<WorkloadType, std::map<int, double>> node_count_probs;

  // Normalizes every map; each type with positive probability needs a
  // node-count distribution.
  static JobMixDistribution from_raw(std::map<WorkloadType, double> type_weights,
                                     std::map<WorkloadType, std::map<int, double>> node_weights);
};

struct InferenceType {
  std::string name;
  double probability = 0.0;     // share of requests of this type
  int nodes_per_instance = 1;
  double max_rate_pps = 0.0;    // per-instance rate at the latency cap
  double latency_cap_s = 0.0;
};

using InferenceMix = std::vector<InferenceType>;

// Throws DegenerateMix unless probabilities sum to 1 (1e-9), nodes >= 1 and
// rates > 0.
void validate_mix(const InferenceMix& mix);

struct SampledJob {
  double arrival_s = 0.0;
  WorkloadType type = WorkloadType::kTraining;
  int node_count = 1;
};

// Caches the categorical distributions so repeated draws stay cheap.
class JobSampler {
 public:
  JobSampler(const JobMixDistribution& mix, const TemporalWeights& weights);

  SampledJob sample(long day, Rng& rng);

 private:
  std::discrete_distribution<int> hour_;
  std::vector<WorkloadType> types_;
  std::discrete_distribution<int> type_;
  std::vector<std::vector<int>> node_counts_;
  std::vector<std::discrete_distribution<int>> node_count_;
};

SampledJob sample_job(const JobMixDistribution& mix, const TemporalWeights& weights,
                      long day, Rng& rng);

struct WeightsFile {
  TemporalWeights temporal;
  std::optional<JobMixDistribution> job_mix;
};

// JSON object with keys hourly, day_of_week, monthly and optionally
// type_probs, node_count_probs.
WeightsFile load_weights(const std::filesystem::path& path);
WeightsFile parse_weights(std::string_view text);

}  // namespace facsim
