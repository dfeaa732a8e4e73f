// facsim: facility-level power simulation from node-level workload profiles.
//
//   facsim run --config <path> [--seed N] [--out DIR] [--parallel K]
//   facsim validate --config <path>
//   facsim summarize --series <file>
//
// Exit codes: 0 success, 1 config error, 2 runtime error, 3 audit failure.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "facsim/config.h"
#include "facsim/error.h"
#include "facsim/metrics.h"
#include "facsim/runner.h"
#include "facsim/timeseries.h"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitAudit = 3;

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("FACSIM_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

int exit_code_for(const facsim::Error& e) {
  switch (e.code()) {
    case facsim::ErrorCode::kConfigParse:
    case facsim::ErrorCode::kConfigInvalid:
      return kExitConfig;
    case facsim::ErrorCode::kAuditFailure:
      return kExitAudit;
    default:
      return kExitRuntime;
  }
}

void print_error(const facsim::Error& e) {
  if (e.violations().empty()) {
    std::cerr << "error: " << e.what() << '\n';
    return;
  }
  std::cerr << "error: " << facsim::to_string(e.code()) << '\n';
  for (const auto& v : e.violations()) std::cerr << "  - " << v << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Facility-level power simulation from node-level workload profiles"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int parallel = 1;
  auto* run_cmd = app.add_subcommand("run", "Calibrate, simulate and write reports");
  run_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();
  run_cmd->add_option("--seed", seed, "Override the configured seed");
  run_cmd->add_option("--out", out_dir, "Override the output directory");
  run_cmd->add_option("--parallel", parallel, "Targets simulated concurrently")
      ->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate", "Check a configuration file");
  validate_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();

  std::string series_path;
  auto* summarize_cmd = app.add_subcommand("summarize", "Aggregate metrics of a timeseries file");
  summarize_cmd->add_option("--series", series_path, "timeseries.csv written by run")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const auto config = facsim::validate_config(config_path);
      facsim::RunOptions options;
      options.seed = seed;
      if (!out_dir.empty()) options.output_dir = out_dir;
      options.parallel = parallel;
      const auto report = facsim::run(config, options);
      for (const auto& t : report.targets) {
        std::cout << t.label << "%: mean utilization "
                  << t.summary.utilization_pct.mean << "%, mean power "
                  << t.summary.power_mw.mean << " MW, PAR " << t.summary.peak_to_average
                  << '\n';
      }
      std::cout << "wrote " << report.files.size() << " files under "
                << report.mode_dir.string() << '\n';
    } else if (*validate_cmd) {
      const auto config = facsim::validate_config(config_path);
      std::cout << "ok: " << facsim::to_string(config.mode) << " config with "
                << config.targets.size() << " target(s)\n";
    } else if (*summarize_cmd) {
      std::ifstream in(series_path);
      if (!in) throw facsim::Error(facsim::ErrorCode::kIo, "cannot open " + series_path);
      const auto series = facsim::read_timeseries_csv(in);
      facsim::write_summary_text(std::cout, facsim::summarize_run(series));
    }
  } catch (const facsim::Error& e) {
    print_error(e);
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
