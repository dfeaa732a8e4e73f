#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "facsim/distributions.h"
#include "facsim/facility.h"
#include "facsim/inference.h"
#include "facsim/jobgen.h"
#include "facsim/profiles.h"

namespace facsim {

enum class Mode { kColocation, kInference };

std::string_view to_string(Mode mode);

// One synthetic profile shape expanded into `replicates` seeded copies.
struct SyntheticProfileEntry {
  ShapeParams shape;
  int replicates = 1;
};

struct RunConfig {
  Mode mode = Mode::kColocation;
  std::uint64_t seed = 0;
  std::vector<double> targets;
  FacilityConfig facility;
  // mu_avg_target is taken from `targets`; only tolerance and iterations apply.
  CalibrationTarget calibration;
  JobGenOptions jobgen;

  std::filesystem::path weights_file;
  std::optional<std::filesystem::path> profile_dir;
  std::filesystem::path output_dir = "out";

  WeightsFile weights;
  std::vector<SyntheticProfileEntry> synthetic_profiles;
  InferenceMix inference_mix;
  InferenceOptions inference;

  // Raw config bytes, hashed into the run manifest.
  std::string source_text;
};

// Relative paths resolve against base_dir. Throws ConfigParse on syntax
// errors and ConfigInvalid listing every violation found.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig validate_config(const std::filesystem::path& path);

// Synthesizes the configured profiles or loads profile_dir.
ProfileBank build_profile_bank(const RunConfig& config);

}  // namespace facsim
