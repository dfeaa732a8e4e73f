#include "facsim/runner.h"

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "facsim/error.h"
#include "facsim/inference.h"

namespace facsim {

namespace {

void write_file(const std::filesystem::path& path, const auto& writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  writer(out);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace

std::string target_label(double target) { return fmt::format("{:g}", target * 100.0); }

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

TargetResult run_target(const RunConfig& config, const ProfileBank& bank, double target,
                        std::uint64_t seed) {
  TargetResult out;
  out.target = target;
  out.label = target_label(target);
  out.seed = seed;
  CalibrationTarget calibration = config.calibration;
  calibration.mu_avg_target = target;
  const auto& facility = config.facility;

  if (config.mode == Mode::kColocation) {
    auto cal = calibrate_daily_jobs(calibration, *config.weights.job_mix, config.weights.temporal,
                                    bank, facility, seed, config.jobgen);
    spdlog::info("target {}%: {:.2f} jobs/day, estimated utilization {:.2f}% after {} steps",
                 out.label, cal.daily_count, 100.0 * cal.estimate, cal.iterations);
    out.calibrated_daily_count = cal.daily_count;
    out.jobs = schedule_fifo(std::move(cal.jobs), facility.n_total);
    out.simulation = simulate(*out.jobs, bank, facility);
    out.summary = summarize_run(out.simulation.series, std::span<const Job>(out.jobs->jobs));
  } else {
    const auto allocation = allocate_nodes(config.inference_mix, facility.n_total);
    for (const auto& name : allocation.rebalanced) {
      spdlog::warn("DegenerateMix: inference type '{}' topped up to one instance", name);
    }
    auto cal = calibrate_daily_requests(calibration, config.inference_mix,
                                        config.weights.temporal, allocation, facility);
    spdlog::info("target {}%: {:.0f} requests/day, utilization {:.2f}%", out.label,
                 cal.daily_requests, 100.0 * cal.utilization);
    out.calibrated_daily_count = cal.daily_requests;
    InferenceOptions options = config.inference;
    options.seed = seed;
    out.simulation = simulate_inference(cal.series, config.inference_mix, allocation, bank,
                                        facility, options);
    out.summary = summarize_run(out.simulation.series);
  }
  out.audit = audit_concurrency(out.simulation.series, facility);
  return out;
}

RunReport run(const RunConfig& config, const RunOptions& options) {
  const std::uint64_t seed = options.seed.value_or(config.seed);
  const auto out_root = options.output_dir.value_or(config.output_dir);

  spdlog::info("building profile bank");
  const ProfileBank bank = build_profile_bank(config).resampled(config.facility.timestep_s);

  RunReport report;
  report.mode_dir = out_root / std::string(to_string(config.mode));
  report.targets.resize(config.targets.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= config.targets.size()) return;
      try {
        report.targets[k] = run_target(config, bank, config.targets[k], seed ^ k);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(options.parallel,
                                                static_cast<int>(config.targets.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (const auto& t : report.targets) {
    if (!t.audit.passed) {
      throw Error(ErrorCode::kAuditFailure, "target " + t.label + "%: " + t.audit.message);
    }
  }

  nlohmann::ordered_json manifest;
  manifest["tool"] = "facsim";
  manifest["version"] = std::string(kVersion);
  manifest["mode"] = std::string(to_string(config.mode));
  manifest["config_hash"] = "fnv1a64:" + fnv1a64_hex(config.source_text);
  manifest["seed"] = seed;
  manifest["targets"] = nlohmann::ordered_json::array();

  for (const auto& t : report.targets) {
    const auto dir = report.mode_dir / t.label;
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    auto emit = [&](const std::string& name, const auto& writer) {
      write_file(dir / name, writer);
      report.files.push_back(dir / name);
      files.push_back(t.label + "/" + name);
    };
    emit("timeseries.csv",
         [&](std::ostream& o) { write_timeseries_csv(o, t.simulation.series); });
    emit("daily_profile.csv", [&](std::ostream& o) {
      write_periodic_csv(o, periodic_profile(t.simulation.series, PeriodMode::kHourOfDay));
    });
    if (config.facility.horizon_days >= 7) {
      emit("weekly_profile.csv", [&](std::ostream& o) {
        write_periodic_csv(o, periodic_profile(t.simulation.series, PeriodMode::kDayOfWeek));
      });
    } else {
      spdlog::warn("horizon shorter than a week; skipping weekly profile");
    }
    emit("summary.txt", [&](std::ostream& o) { write_summary_text(o, t.summary); });
    emit("summary.json", [&](std::ostream& o) { write_summary_json(o, t.summary); });

    nlohmann::ordered_json entry;
    entry["target"] = t.target;
    entry["directory"] = t.label;
    entry["seed"] = t.seed;
    entry["calibrated_daily_count"] = t.calibrated_daily_count;
    entry["mean_utilization_pct"] = t.summary.utilization_pct.mean;
    entry["truncated_jobs"] = t.simulation.ledger.truncated_jobs;
    entry["files"] = files;
    manifest["targets"].push_back(std::move(entry));
  }
  const auto manifest_path = report.mode_dir / "manifest.json";
  write_file(manifest_path, [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });
  report.files.push_back(manifest_path);
  return report;
}

}  // namespace facsim
