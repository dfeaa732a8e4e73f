#include "facsim/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "facsim/error.h"

namespace facsim {

namespace {

using nlohmann::json;

// Reads optional typed fields, recording type errors as violations instead
// of stopping at the first one.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& violations) : violations_(violations) {}

  template <typename T>
  void get(const json& obj, const char* key, const std::string& where, T& out) {
    if (!obj.is_object() || !obj.contains(key) || obj[key].is_null()) return;
    try {
      out = obj[key].get<T>();
    } catch (const json::exception&) {
      violations_.push_back(where + key + " has the wrong type");
    }
  }

  template <typename T>
  bool require(const json& obj, const char* key, const std::string& where, T& out) {
    if (!obj.is_object() || !obj.contains(key) || obj[key].is_null()) {
      violations_.push_back(where + key + " is required");
      return false;
    }
    const auto before = violations_.size();
    get(obj, key, where, out);
    return violations_.size() == before;
  }

 private:
  std::vector<std::string>& violations_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

ShapeParams parse_shape(const json& j, const std::string& where, Reader& r,
                        std::vector<std::string>& violations) {
  ShapeParams s;
  std::string type = "training";
  r.get(j, "workload_type", where, type);
  if (auto parsed = parse_workload_type(type)) {
    s.workload_type = *parsed;
  } else {
    violations.push_back(where + "workload_type '" + type + "' is unknown");
  }
  r.get(j, "node_count", where, s.node_count);
  r.get(j, "base_kw", where, s.base_kw);
  r.get(j, "plateau_kw", where, s.plateau_kw);
  r.get(j, "ramp_s", where, s.ramp_s);
  r.get(j, "period_s", where, s.period_s);
  r.get(j, "dip_fraction", where, s.dip_fraction);
  r.get(j, "duration_s", where, s.duration_s);
  r.get(j, "seed", where, s.seed);
  r.get(j, "sample_interval_s", where, s.sample_interval_s);
  r.get(j, "jitter", where, s.jitter);
  r.get(j, "inference_type", where, s.inference_type);
  if (j.contains("request_rate_pps") && !j["request_rate_pps"].is_null()) {
    double rate = 0.0;
    r.get(j, "request_rate_pps", where, rate);
    s.request_rate_pps = rate;
  }
  const bool ok = s.base_kw >= 0.0 && s.base_kw <= s.plateau_kw && s.ramp_s >= 0.0 &&
                  s.duration_s > s.ramp_s && s.dip_fraction >= 0.0 && s.dip_fraction <= 1.0 &&
                  (s.dip_fraction == 0.0 || s.period_s > 0.0) && s.sample_interval_s > 0.0 &&
                  s.node_count >= 1 && s.jitter >= 0.0 && s.jitter <= 1.0;
  if (!ok) violations.push_back(where + "shape parameters are inconsistent");
  const bool is_rate = s.workload_type == WorkloadType::kInferenceRateSample;
  if (is_rate && !(s.request_rate_pps && *s.request_rate_pps > 0.0)) {
    violations.push_back(where + "rate samples need a positive request_rate_pps");
  }
  if (!is_rate && s.request_rate_pps) {
    violations.push_back(where + "request_rate_pps only applies to inference_rate_sample");
  }
  return s;
}

}  // namespace

std::string_view to_string(Mode mode) {
  return mode == Mode::kColocation ? "colocation" : "inference";
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigParse, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kConfigParse, "config must be a JSON object");

  std::vector<std::string> violations;
  Reader r(violations);
  RunConfig cfg;
  cfg.source_text = std::string(text);

  std::string mode;
  if (r.require(j, "mode", "", mode)) {
    if (mode == "colocation") {
      cfg.mode = Mode::kColocation;
    } else if (mode == "inference") {
      cfg.mode = Mode::kInference;
    } else {
      violations.push_back("mode must be 'colocation' or 'inference'");
    }
  }
  r.get(j, "seed", "", cfg.seed);

  if (r.require(j, "targets", "", cfg.targets)) {
    if (cfg.targets.empty()) violations.emplace_back("targets must not be empty");
    for (double t : cfg.targets) {
      if (!(t > 0.0 && t <= 1.0)) {
        violations.push_back("target " + std::to_string(t) + " out of (0,1]");
      }
    }
  }

  const json facility = j.value("facility", json::object());
  auto& f = cfg.facility;
  r.get(facility, "n_total", "facility.", f.n_total);
  r.get(facility, "node_tdp_kw", "facility.", f.node_tdp_kw);
  r.get(facility, "node_idle_kw", "facility.", f.node_idle_kw);
  r.get(facility, "rated_power_mw", "facility.", f.rated_power_mw);
  r.get(facility, "horizon_days", "facility.", f.horizon_days);
  r.get(facility, "timestep_s", "facility.", f.timestep_s);
  std::string weekday = "monday";
  r.get(facility, "start_weekday", "facility.", weekday);
  if (auto wd = parse_weekday(weekday)) {
    f.calendar.start_weekday = *wd;
  } else {
    violations.push_back("facility.start_weekday '" + weekday + "' is not a weekday name");
  }
  for (auto& v : f.violations()) violations.push_back(std::move(v));

  const json calibration = j.value("calibration", json::object());
  r.get(calibration, "tolerance_pp", "calibration.", cfg.calibration.tolerance_pp);
  r.get(calibration, "max_iterations", "calibration.", cfg.calibration.max_iterations);
  r.get(calibration, "max_daily_count", "calibration.", cfg.jobgen.max_daily_count);
  std::string count_model = "poisson";
  r.get(calibration, "count_model", "calibration.", count_model);
  if (count_model == "poisson") {
    cfg.jobgen.count_model = CountModel::kPoisson;
  } else if (count_model == "deterministic") {
    cfg.jobgen.count_model = CountModel::kDeterministic;
  } else {
    violations.push_back("calibration.count_model must be 'poisson' or 'deterministic'");
  }
  if (!(cfg.calibration.tolerance_pp > 0.0)) {
    violations.emplace_back("calibration.tolerance_pp must be positive");
  }
  if (cfg.calibration.max_iterations < 1) {
    violations.emplace_back("calibration.max_iterations must be >= 1");
  }

  const json paths = j.value("paths", json::object());
  std::string weights_file, profile_dir, output_dir = "out";
  if (r.require(paths, "weights_file", "paths.", weights_file)) {
    cfg.weights_file = resolve(base_dir, weights_file);
    try {
      cfg.weights = load_weights(cfg.weights_file);
    } catch (const Error& e) {
      violations.push_back(std::string("paths.weights_file: ") + e.what());
    }
  }
  r.get(paths, "profile_dir", "paths.", profile_dir);
  if (!profile_dir.empty()) {
    cfg.profile_dir = resolve(base_dir, profile_dir);
    if (!std::filesystem::is_directory(*cfg.profile_dir)) {
      violations.push_back("paths.profile_dir does not exist: " + cfg.profile_dir->string());
    }
  }
  r.get(paths, "output_dir", "paths.", output_dir);
  cfg.output_dir = resolve(base_dir, output_dir);

  if (j.contains("synthetic_profiles")) {
    const auto& list = j["synthetic_profiles"];
    if (!list.is_array()) {
      violations.emplace_back("synthetic_profiles must be an array");
    } else {
      for (std::size_t k = 0; k < list.size(); ++k) {
        const std::string where = "synthetic_profiles[" + std::to_string(k) + "].";
        SyntheticProfileEntry entry;
        entry.shape = parse_shape(list[k], where, r, violations);
        r.get(list[k], "replicates", where, entry.replicates);
        if (entry.replicates < 1) violations.push_back(where + "replicates must be >= 1");
        cfg.synthetic_profiles.push_back(std::move(entry));
      }
    }
  }
  if (!cfg.profile_dir && cfg.synthetic_profiles.empty()) {
    violations.emplace_back("either paths.profile_dir or synthetic_profiles is required");
  }

  if (cfg.mode == Mode::kColocation) {
    if (!cfg.weights.job_mix && !cfg.weights_file.empty() &&
        std::filesystem::exists(cfg.weights_file)) {
      violations.emplace_back("colocation mode needs type_probs/node_count_probs in the weights file");
    }
    if (cfg.weights.job_mix) {
      for (const auto& [type, counts] : cfg.weights.job_mix->node_count_probs) {
        for (const auto& [n, p] : counts) {
          if (p > 0.0 && n > f.n_total) {
            violations.push_back("node count " + std::to_string(n) + " exceeds facility.n_total");
          }
        }
      }
      if (!cfg.profile_dir) {
        std::set<JobKey> available;
        for (const auto& entry : cfg.synthetic_profiles) {
          available.insert(JobKey{entry.shape.workload_type, entry.shape.node_count});
        }
        for (const auto& [type, counts] : cfg.weights.job_mix->node_count_probs) {
          if (cfg.weights.job_mix->type_probs.at(type) == 0.0) continue;
          for (const auto& [n, p] : counts) {
            if (p > 0.0 && !available.count(JobKey{type, n})) {
              violations.push_back("no profile for " + std::string(to_string(type)) + " on " +
                                   std::to_string(n) + " nodes");
            }
          }
        }
      }
    }
  }

  if (j.contains("inference_mix")) {
    const auto& list = j["inference_mix"];
    if (!list.is_array()) {
      violations.emplace_back("inference_mix must be an array");
    } else {
      for (std::size_t k = 0; k < list.size(); ++k) {
        const std::string where = "inference_mix[" + std::to_string(k) + "].";
        InferenceType t;
        r.require(list[k], "name", where, t.name);
        r.require(list[k], "probability", where, t.probability);
        r.get(list[k], "nodes_per_instance", where, t.nodes_per_instance);
        r.require(list[k], "max_rate_pps", where, t.max_rate_pps);
        r.get(list[k], "latency_cap_s", where, t.latency_cap_s);
        cfg.inference_mix.push_back(std::move(t));
      }
    }
  }
  r.get(j.value("inference", json::object()), "stagger_s", "inference.", cfg.inference.stagger_s);
  if (cfg.mode == Mode::kInference) {
    if (cfg.inference_mix.empty()) {
      violations.emplace_back("inference mode requires inference_mix");
    } else {
      try {
        validate_mix(cfg.inference_mix);
      } catch (const Error& e) {
        violations.push_back(std::string("inference_mix: ") + e.what());
      }
      std::set<std::string> names;
      for (const auto& t : cfg.inference_mix) {
        if (!names.insert(t.name).second) violations.push_back("duplicate inference type " + t.name);
      }
      if (!cfg.profile_dir) {
        for (const auto& t : cfg.inference_mix) {
          bool found = false;
          for (const auto& entry : cfg.synthetic_profiles) {
            found |= entry.shape.workload_type == WorkloadType::kInferenceRateSample &&
                     entry.shape.inference_type == t.name;
          }
          if (t.probability > 0.0 && !found) {
            violations.push_back("no rate samples for inference type " + t.name);
          }
        }
      }
    }
  }

  if (!violations.empty()) throw Error(ErrorCode::kConfigInvalid, std::move(violations));
  return cfg;
}

RunConfig validate_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfigParse, "cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

ProfileBank build_profile_bank(const RunConfig& config) {
  ProfileBank bank;
  if (config.profile_dir) bank = ProfileBank::load_directory(*config.profile_dir);
  for (const auto& entry : config.synthetic_profiles) {
    for (int r = 0; r < entry.replicates; ++r) {
      ShapeParams shape = entry.shape;
      shape.seed = derive_seed(entry.shape.seed, static_cast<std::uint64_t>(r));
      if (shape.id.empty()) {
        shape.id = shape.workload_type == WorkloadType::kInferenceRateSample
                       ? shape.inference_type + "_" + std::to_string(*shape.request_rate_pps) + "pps"
                       : std::string(to_string(shape.workload_type)) + "_" +
                             std::to_string(shape.node_count) + "n";
      }
      shape.id += "_r" + std::to_string(r);
      bank.add(synthesize_profile(shape));
    }
  }
  return bank;
}

}  // namespace facsim
