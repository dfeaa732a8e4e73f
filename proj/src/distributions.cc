#include "facsim/distributions.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "facsim/error.h"

namespace facsim {

namespace {

constexpr std::array<int, 12> kMonthDays = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

template <std::size_t N>
std::array<double, N> normalized_array(std::span<const double> raw, std::string_view what) {
  if (raw.size() != N) {
    throw Error(ErrorCode::kConfigInvalid, std::string(what) + " needs " + std::to_string(N) +
                                               " entries, got " + std::to_string(raw.size()));
  }
  auto norm = normalize(raw);
  std::array<double, N> out{};
  std::copy(norm.begin(), norm.end(), out.begin());
  return out;
}

template <typename Key>
std::map<Key, double> normalized_map(const std::map<Key, double>& raw) {
  std::vector<double> values;
  values.reserve(raw.size());
  for (const auto& [_, v] : raw) values.push_back(v);
  auto norm = normalize(values);
  std::map<Key, double> out;
  std::size_t i = 0;
  for (const auto& [k, _] : raw) out[k] = norm[i++];
  return out;
}

}  // namespace

std::vector<double> normalize(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || std::isnan(w)) throw Error(ErrorCode::kNegativeWeight, "weights must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kAllZeroWeights, "weights are all zero");
  std::vector<double> out(weights.begin(), weights.end());
  for (double& w : out) w /= total;
  return out;
}

int Calendar::month(long day) const {
  int d = static_cast<int>(day % 365);
  for (int m = 0; m < 12; ++m) {
    if (d < kMonthDays[m]) return m;
    d -= kMonthDays[m];
  }
  return 11;
}

int Calendar::day_of_month(long day) const {
  int d = static_cast<int>(day % 365);
  for (int m = 0; m < 12; ++m) {
    if (d < kMonthDays[m]) return d + 1;
    d -= kMonthDays[m];
  }
  return d + 1;
}

std::optional<int> parse_weekday(std::string_view name) {
  static constexpr std::array<std::string_view, 7> kNames = {
      "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};
  for (int i = 0; i < 7; ++i) {
    if (name == kNames[i]) return i;
  }
  return std::nullopt;
}

TemporalWeights TemporalWeights::uniform() {
  TemporalWeights w;
  w.hourly.fill(1.0 / 24.0);
  w.day_of_week.fill(1.0 / 7.0);
  w.monthly.fill(1.0 / 12.0);
  return w;
}

TemporalWeights TemporalWeights::from_raw(std::span<const double> hourly,
                                          std::span<const double> day_of_week,
                                          std::span<const double> monthly) {
  TemporalWeights w;
  w.hourly = normalized_array<24>(hourly, "hourly");
  w.day_of_week = normalized_array<7>(day_of_week, "day_of_week");
  w.monthly = normalized_array<12>(monthly, "monthly");
  return w;
}

double timestep_weight(const TemporalWeights& weights, const Calendar& calendar,
                       double timestamp_s) {
  const auto day = static_cast<long>(std::floor(timestamp_s / kSecondsPerDay));
  const auto hour = static_cast<int>(
      std::floor((timestamp_s - static_cast<double>(day) * kSecondsPerDay) / kSecondsPerHour));
  return weights.hourly[std::clamp(hour, 0, 23)] *
         weights.day_of_week[calendar.day_of_week(day)] * weights.monthly[calendar.month(day)];
}

JobMixDistribution JobMixDistribution::from_raw(
    std::map<WorkloadType, double> type_weights,
    std::map<WorkloadType, std::map<int, double>> node_weights) {
  JobMixDistribution mix;
  mix.type_probs = normalized_map(type_weights);
  for (const auto& [type, p] : mix.type_probs) {
    if (p == 0.0) continue;
    auto it = node_weights.find(type);
    if (it == node_weights.end() || it->second.empty()) {
      throw Error(ErrorCode::kConfigInvalid,
                  "no node_count_probs for type '" + std::string(to_string(type)) + "'");
    }
    for (const auto& [n, _] : it->second) {
      if (n < 1) throw Error(ErrorCode::kConfigInvalid, "node counts must be >= 1");
    }
    mix.node_count_probs[type] = normalized_map(it->second);
  }
  return mix;
}

void validate_mix(const InferenceMix& mix) {
  if (mix.empty()) throw Error(ErrorCode::kDegenerateMix, "inference mix is empty");
  double total = 0.0;
  for (const auto& t : mix) {
    if (t.probability < 0.0) throw Error(ErrorCode::kDegenerateMix, t.name + ": negative p");
    if (t.nodes_per_instance < 1) throw Error(ErrorCode::kDegenerateMix, t.name + ": n < 1");
    if (!(t.max_rate_pps > 0.0)) {
      throw Error(ErrorCode::kDegenerateMix, t.name + ": max rate must be positive");
    }
    total += t.probability;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kDegenerateMix, "request probabilities must sum to 1");
  }
}

JobSampler::JobSampler(const JobMixDistribution& mix, const TemporalWeights& weights)
    : hour_(weights.hourly.begin(), weights.hourly.end()) {
  std::vector<double> type_probs;
  for (const auto& [type, p] : mix.type_probs) {
    types_.push_back(type);
    type_probs.push_back(p);
    std::vector<int> counts;
    std::vector<double> probs;
    if (auto it = mix.node_count_probs.find(type); it != mix.node_count_probs.end()) {
      for (const auto& [n, q] : it->second) {
        counts.push_back(n);
        probs.push_back(q);
      }
    }
    if (counts.empty()) {
      // Only reachable for zero-probability types.
      counts.push_back(1);
      probs.push_back(1.0);
    }
    node_counts_.push_back(std::move(counts));
    node_count_.emplace_back(probs.begin(), probs.end());
  }
  type_ = std::discrete_distribution<int>(type_probs.begin(), type_probs.end());
}

SampledJob JobSampler::sample(long day, Rng& rng) {
  std::uniform_real_distribution<double> within_hour(0.0, kSecondsPerHour);
  SampledJob job;
  const int hour = hour_(rng);
  job.arrival_s = static_cast<double>(day) * kSecondsPerDay + hour * kSecondsPerHour +
                  within_hour(rng);
  const int t = type_(rng);
  job.type = types_[t];
  job.node_count = node_counts_[t][node_count_[t](rng)];
  return job;
}

SampledJob sample_job(const JobMixDistribution& mix, const TemporalWeights& weights,
                      long day, Rng& rng) {
  JobSampler sampler(mix, weights);
  return sampler.sample(day, rng);
}

WeightsFile parse_weights(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigParse, std::string("weights: ") + e.what());
  }
  WeightsFile out;
  try {
    auto hourly = j.at("hourly").get<std::vector<double>>();
    auto dow = j.at("day_of_week").get<std::vector<double>>();
    auto monthly = j.at("monthly").get<std::vector<double>>();
    out.temporal = TemporalWeights::from_raw(hourly, dow, monthly);
    if (j.contains("type_probs")) {
      std::map<WorkloadType, double> types;
      for (const auto& [name, v] : j["type_probs"].items()) {
        auto type = parse_workload_type(name);
        if (!type) throw Error(ErrorCode::kConfigInvalid, "unknown workload type '" + name + "'");
        types[*type] = v.get<double>();
      }
      std::map<WorkloadType, std::map<int, double>> nodes;
      if (j.contains("node_count_probs")) {
        for (const auto& [name, counts] : j["node_count_probs"].items()) {
          auto type = parse_workload_type(name);
          if (!type) throw Error(ErrorCode::kConfigInvalid, "unknown workload type '" + name + "'");
          for (const auto& [n, v] : counts.items()) {
            nodes[*type][std::stoi(n)] = v.get<double>();
          }
        }
      }
      out.job_mix = JobMixDistribution::from_raw(std::move(types), std::move(nodes));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigParse, std::string("weights: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::kConfigParse, "weights: node count keys must be integers");
  }
  return out;
}

WeightsFile load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open weights file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_weights(buf.str());
}

}  // namespace facsim
