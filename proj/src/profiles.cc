#include "facsim/profiles.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "facsim/error.h"

namespace facsim {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return fields;
}

std::optional<double> parse_double(std::string_view s) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

void validate_metadata(const ProfileMetadata& m) {
  if (m.node_count < 1) {
    throw Error(ErrorCode::kMalformedTrace, "node_count must be >= 1 for '" + m.id + "'");
  }
  if (!(m.sample_interval_s > 0.0)) {
    throw Error(ErrorCode::kMalformedTrace, "sample_interval_s must be positive");
  }
  const bool is_rate = m.workload_type == WorkloadType::kInferenceRateSample;
  if (is_rate && !(m.request_rate_pps && *m.request_rate_pps > 0.0)) {
    throw Error(ErrorCode::kMalformedTrace,
                "rate sample '" + m.id + "' requires a positive request_rate_pps");
  }
  if (!is_rate && m.request_rate_pps) {
    throw Error(ErrorCode::kMalformedTrace,
                "request_rate_pps is only allowed on inference_rate_sample profiles");
  }
}

// Shared by loaded and resampled profiles.
double held_energy(std::span<const PowerSample> samples) {
  double energy = 0.0;
  for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
    energy += samples[k].power_w * (samples[k + 1].elapsed_s - samples[k].elapsed_s);
  }
  return energy;
}

}  // namespace

std::string_view to_string(WorkloadType type) {
  switch (type) {
    case WorkloadType::kTraining: return "training";
    case WorkloadType::kFineTuning: return "fine_tuning";
    case WorkloadType::kInferenceOffline: return "inference_offline";
    case WorkloadType::kInferenceRateSample: return "inference_rate_sample";
  }
  return "unknown";
}

std::optional<WorkloadType> parse_workload_type(std::string_view name) {
  if (name == "training") return WorkloadType::kTraining;
  if (name == "fine_tuning") return WorkloadType::kFineTuning;
  if (name == "inference_offline") return WorkloadType::kInferenceOffline;
  if (name == "inference_rate_sample") return WorkloadType::kInferenceRateSample;
  return std::nullopt;
}

double PowerProfile::energy_j() const { return held_energy(samples); }

ProfileMetadata load_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open metadata " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedTrace, path.string() + ": " + e.what());
  }
  ProfileMetadata m;
  try {
    m.id = j.value("id", path.stem().stem().string());
    auto type = parse_workload_type(j.at("workload_type").get<std::string>());
    if (!type) throw Error(ErrorCode::kMalformedTrace, "unknown workload_type in " + path.string());
    m.workload_type = *type;
    m.node_count = j.at("node_count").get<int>();
    if (j.contains("request_rate_pps") && !j["request_rate_pps"].is_null()) {
      m.request_rate_pps = j["request_rate_pps"].get<double>();
    }
    m.sample_interval_s = j.value("sample_interval_s", 0.1);
    m.inference_type = j.value("inference_type", std::string{});
    if (j.contains("schema")) {
      const auto& s = j["schema"];
      m.schema.time_column = s.value("time_column", m.schema.time_column);
      m.schema.power_column = s.value("power_column", m.schema.power_column);
      m.schema.time_scale = s.value("time_scale", 1.0);
      m.schema.power_scale = s.value("power_scale", 1.0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedTrace, path.string() + ": " + e.what());
  }
  validate_metadata(m);
  return m;
}

PowerProfile parse_trace(std::istream& in, const ProfileMetadata& metadata) {
  validate_metadata(metadata);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kEmptyTrace, "trace '" + metadata.id + "' has no header");
  }
  auto header = split_commas(line);
  auto column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::kMalformedTrace,
                  "trace '" + metadata.id + "' lacks column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t time_col = column(metadata.schema.time_column);
  const std::size_t power_col = column(metadata.schema.power_column);

  PowerProfile profile;
  profile.id = metadata.id;
  profile.workload_type = metadata.workload_type;
  profile.node_count = metadata.node_count;
  profile.request_rate_pps = metadata.request_rate_pps;
  profile.sample_interval_s = metadata.sample_interval_s;
  profile.inference_type = metadata.inference_type;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kMalformedTrace,
                  metadata.id + ":" + std::to_string(line_no) + ": wrong field count");
    }
    auto t = parse_double(fields[time_col]);
    auto p = parse_double(fields[power_col]);
    if (!t || !p) {
      throw Error(ErrorCode::kMalformedTrace,
                  metadata.id + ":" + std::to_string(line_no) + ": not a number");
    }
    PowerSample sample{*t * metadata.schema.time_scale, *p * metadata.schema.power_scale};
    if (sample.power_w < 0.0) {
      throw Error(ErrorCode::kNegativePower,
                  metadata.id + ":" + std::to_string(line_no) + ": negative power");
    }
    if (sample.elapsed_s < 0.0 ||
        (!profile.samples.empty() && sample.elapsed_s <= profile.samples.back().elapsed_s)) {
      throw Error(ErrorCode::kMalformedTrace,
                  metadata.id + ":" + std::to_string(line_no) + ": time not strictly increasing");
    }
    profile.samples.push_back(sample);
  }
  if (profile.samples.size() < 2) {
    throw Error(ErrorCode::kEmptyTrace,
                "trace '" + metadata.id + "' needs at least two samples");
  }
  // Traces are rebased to start at zero elapsed time.
  const double origin = profile.samples.front().elapsed_s;
  for (auto& s : profile.samples) s.elapsed_s -= origin;
  profile.duration_s = profile.samples.back().elapsed_s;
  return profile;
}

PowerProfile load_trace(const std::filesystem::path& path, const ProfileMetadata& metadata) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open trace " + path.string());
  return parse_trace(in, metadata);
}

PowerProfile resample(const PowerProfile& profile, double timestep_s) {
  if (!(timestep_s >= profile.sample_interval_s)) {
    throw Error(ErrorCode::kTimestepTooSmall,
                "timestep " + std::to_string(timestep_s) + " s is finer than the sample interval");
  }
  if (profile.samples.size() < 2) throw Error(ErrorCode::kEmptyTrace, profile.id);

  const EnergyCurve curve(profile);
  const double duration = profile.duration_s;
  const auto buckets = static_cast<std::size_t>(
      std::max(1.0, std::ceil(duration / timestep_s - 1e-9)));

  PowerProfile out = profile;
  out.samples.clear();
  out.samples.reserve(buckets + 1);
  out.sample_interval_s = timestep_s;
  double prev_energy = 0.0;
  for (std::size_t j = 0; j < buckets; ++j) {
    const double begin = static_cast<double>(j) * timestep_s;
    const double end = j + 1 == buckets ? duration : begin + timestep_s;
    const double energy = curve.energy_until(end);
    out.samples.push_back({begin, (energy - prev_energy) / (end - begin)});
    prev_energy = energy;
  }
  out.samples.push_back({duration, out.samples.back().power_w});
  out.duration_s = duration;
  return out;
}

ProfileSummary summarize(const PowerProfile& profile) {
  if (profile.samples.size() < 2 || !(profile.duration_s > 0.0)) {
    throw Error(ErrorCode::kEmptyTrace, "cannot summarize '" + profile.id + "'");
  }
  const auto& s = profile.samples;
  const double duration = s.back().elapsed_s - s.front().elapsed_s;
  const double mean_w = held_energy(s) / duration;
  double var = 0.0;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const double d = s[k].power_w - mean_w;
    var += d * d * (s[k + 1].elapsed_s - s[k].elapsed_s);
  }
  var /= duration;

  ProfileSummary summary;
  summary.mean_power_kw = mean_w / 1000.0;
  summary.std_power_kw = std::sqrt(var) / 1000.0;
  summary.duration_h = duration / 3600.0;
  summary.energy_kwh = summary.mean_power_kw * summary.duration_h;
  return summary;
}

PowerProfile synthesize_profile(const ShapeParams& p) {
  const bool ok = p.base_kw >= 0.0 && p.base_kw <= p.plateau_kw && p.ramp_s >= 0.0 &&
                  p.duration_s > p.ramp_s && p.dip_fraction >= 0.0 &&
                  p.dip_fraction <= 1.0 && (p.dip_fraction == 0.0 || p.period_s > 0.0) &&
                  p.sample_interval_s > 0.0 && p.node_count >= 1 && p.jitter >= 0.0 &&
                  p.jitter <= 1.0 && std::isfinite(p.duration_s);
  if (!ok) throw Error(ErrorCode::kInvalidShapeParams, "invalid shape for '" + p.id + "'");
  const bool is_rate = p.workload_type == WorkloadType::kInferenceRateSample;
  if (is_rate != p.request_rate_pps.has_value()) {
    throw Error(ErrorCode::kInvalidShapeParams,
                "request_rate_pps must be set exactly for rate samples");
  }

  PowerProfile profile;
  profile.id = p.id;
  profile.workload_type = p.workload_type;
  profile.node_count = p.node_count;
  profile.duration_s = p.duration_s;
  profile.request_rate_pps = p.request_rate_pps;
  profile.sample_interval_s = p.sample_interval_s;
  profile.inference_type = p.inference_type;

  Rng rng(p.seed);
  std::uniform_real_distribution<double> noise(-p.jitter, p.jitter);
  auto power_at = [&](double t) {
    const double n = noise(rng);
    if (t < p.ramp_s) {
      return p.base_kw + (p.plateau_kw - p.base_kw) * t / p.ramp_s;
    }
    if (p.dip_fraction == 0.0) return p.plateau_kw;
    const double phase = 2.0 * std::numbers::pi * (t - p.ramp_s) / p.period_s;
    const double depth = std::clamp(0.5 * (1.0 - std::cos(phase)) + n, 0.0, 1.0);
    return p.plateau_kw * (1.0 - p.dip_fraction * depth);
  };

  const auto steps = static_cast<std::size_t>(std::floor(p.duration_s / p.sample_interval_s + 1e-9));
  profile.samples.reserve(steps + 2);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * p.sample_interval_s;
    if (t > p.duration_s) break;
    profile.samples.push_back({t, 1000.0 * power_at(t)});
  }
  if (p.duration_s - profile.samples.back().elapsed_s > 1e-9 * p.duration_s) {
    profile.samples.push_back({p.duration_s, 1000.0 * power_at(p.duration_s)});
  } else {
    profile.samples.back().elapsed_s = p.duration_s;
  }
  return profile;
}

EnergyCurve::EnergyCurve(const PowerProfile& profile) {
  const auto& s = profile.samples;
  if (s.empty()) return;
  const double origin = s.front().elapsed_s;
  times_.reserve(s.size());
  power_w_.reserve(s.size());
  cumulative_j_.reserve(s.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k > 0) acc += s[k - 1].power_w * (s[k].elapsed_s - s[k - 1].elapsed_s);
    times_.push_back(s[k].elapsed_s - origin);
    power_w_.push_back(s[k].power_w);
    cumulative_j_.push_back(acc);
  }
  duration_s_ = times_.back();
}

double EnergyCurve::energy_until(double t) const {
  if (times_.empty() || t <= 0.0) return 0.0;
  if (t >= duration_s_) return cumulative_j_.back();
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const auto k = static_cast<std::size_t>(it - times_.begin()) - 1;
  return cumulative_j_[k] + power_w_[k] * (t - times_[k]);
}

double EnergyCurve::wrapped_energy(double t) const {
  const double cycles = std::floor(t / duration_s_);
  return cycles * total_j() + energy_until(t - cycles * duration_s_);
}

double EnergyCurve::window_mean_w(double offset, double width) const {
  if (!(duration_s_ > 0.0) || !(width > 0.0)) return 0.0;
  const double start = offset - std::floor(offset / duration_s_) * duration_s_;
  return (wrapped_energy(start + width) - wrapped_energy(start)) / width;
}

ProfileIndex ProfileBank::add(PowerProfile profile) {
  const ProfileIndex index = profiles_.size();
  if (profile.workload_type == WorkloadType::kInferenceRateSample) {
    if (!profile.request_rate_pps) {
      throw Error(ErrorCode::kMalformedTrace, "rate sample '" + profile.id + "' lacks a rate");
    }
    rate_groups_[profile.inference_type][*profile.request_rate_pps].push_back(index);
  } else {
    job_groups_[JobKey{profile.workload_type, profile.node_count}].push_back(index);
  }
  curves_.emplace_back(profile);
  profiles_.push_back(std::move(profile));
  return index;
}

std::span<const ProfileIndex> ProfileBank::replicates(const JobKey& key) const {
  auto it = job_groups_.find(key);
  if (it == job_groups_.end()) return {};
  return it->second;
}

std::set<int> ProfileBank::node_counts(WorkloadType type) const {
  std::set<int> out;
  for (const auto& [key, _] : job_groups_) {
    if (key.type == type) out.insert(key.node_count);
  }
  return out;
}

double ProfileBank::mean_node_seconds(const JobKey& key) const {
  auto reps = replicates(key);
  if (reps.empty()) {
    throw Error(ErrorCode::kUnknownProfileKey,
                std::string(to_string(key.type)) + "/" + std::to_string(key.node_count));
  }
  double sum = 0.0;
  for (auto idx : reps) sum += profiles_[idx].node_count * profiles_[idx].duration_s;
  return sum / static_cast<double>(reps.size());
}

bool ProfileBank::has_rate_samples(std::string_view inference_type) const {
  auto it = rate_groups_.find(inference_type);
  return it != rate_groups_.end() && !it->second.empty();
}

double ProfileBank::nearest_rate(std::string_view inference_type, double rate_pps) const {
  auto it = rate_groups_.find(inference_type);
  if (it == rate_groups_.end() || it->second.empty()) {
    throw Error(ErrorCode::kMissingRateSample,
                "no rate samples for inference type '" + std::string(inference_type) + "'");
  }
  const auto& rates = it->second;
  auto hi = rates.lower_bound(rate_pps);
  if (hi == rates.end()) return std::prev(hi)->first;
  if (hi == rates.begin()) return hi->first;
  auto lo = std::prev(hi);
  return (rate_pps - lo->first) <= (hi->first - rate_pps) ? lo->first : hi->first;
}

std::span<const ProfileIndex> ProfileBank::rate_replicates(std::string_view inference_type,
                                                           double rate_pps) const {
  auto it = rate_groups_.find(inference_type);
  if (it == rate_groups_.end()) return {};
  auto r = it->second.find(rate_pps);
  if (r == it->second.end()) return {};
  return r->second;
}

ProfileBank ProfileBank::resampled(double timestep_s) const {
  ProfileBank out;
  for (const auto& p : profiles_) {
    out.add(p.sample_interval_s >= timestep_s ? p : resample(p, timestep_s));
  }
  return out;
}

ProfileBank ProfileBank::load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "profile directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> traces;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      traces.push_back(entry.path());
    }
  }
  std::sort(traces.begin(), traces.end());
  ProfileBank bank;
  for (const auto& trace : traces) {
    auto sidecar = trace;
    sidecar.replace_extension(".meta.json");
    if (!std::filesystem::exists(sidecar)) {
      throw Error(ErrorCode::kIo, "missing sidecar " + sidecar.string());
    }
    bank.add(load_trace(trace, load_metadata(sidecar)));
  }
  return bank;
}

ProfileIndex lookup(const ProfileBank& bank, const JobKey& key, Rng& rng) {
  auto reps = bank.replicates(key);
  if (reps.empty()) {
    throw Error(ErrorCode::kUnknownProfileKey,
                std::string(to_string(key.type)) + "/" + std::to_string(key.node_count));
  }
  if (reps.size() == 1) return reps.front();
  std::uniform_int_distribution<std::size_t> pick(0, reps.size() - 1);
  return reps[pick(rng)];
}

ProfileIndex lookup_rate(const ProfileBank& bank, std::string_view inference_type,
                         double rate_pps, Rng& rng) {
  auto reps = bank.rate_replicates(inference_type, rate_pps);
  if (reps.empty()) {
    throw Error(ErrorCode::kUnknownProfileKey,
                std::string(inference_type) + "@" + std::to_string(rate_pps));
  }
  if (reps.size() == 1) return reps.front();
  std::uniform_int_distribution<std::size_t> pick(0, reps.size() - 1);
  return reps[pick(rng)];
}

}  // namespace facsim
