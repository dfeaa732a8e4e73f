#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "facsim/config.h"
#include "facsim/engine.h"
#include "facsim/metrics.h"

namespace facsim {

inline constexpr std::string_view kVersion = "0.1.0";

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
  int parallel = 1;
};

struct TargetResult {
  double target = 0.0;
  std::string label;  // directory name, target in percent
  std::uint64_t seed = 0;
  // Jobs per day (colocation) or requests per day (inference).
  double calibrated_daily_count = 0.0;
  SimulationResult simulation;
  std::optional<JobList> jobs;
  AuditReport audit;
  AggregateSummary summary;
};

// Calibrates and simulates one target. `bank` must already be resampled to
// the facility timestep.
TargetResult run_target(const RunConfig& config, const ProfileBank& bank, double target,
                        std::uint64_t seed);

struct RunReport {
  std::filesystem::path mode_dir;
  std::vector<TargetResult> targets;
  std::vector<std::filesystem::path> files;
};

// Runs every target and writes <out>/<mode>/<target_pct>/{timeseries.csv,
// summary.txt, summary.json, daily_profile.csv, weekly_profile.csv} plus
// <out>/<mode>/manifest.json. Nothing is written unless every target passes
// its audit (AuditFailure otherwise).
RunReport run(const RunConfig& config, const RunOptions& options = {});

std::string target_label(double target);
std::string fnv1a64_hex(std::string_view bytes);

}  // namespace facsim
