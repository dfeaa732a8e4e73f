#include "facsim/timeseries.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "facsim/error.h"

namespace facsim {

namespace {

constexpr std::array<int, 12> kMonthStart = {0,   31,  59,  90,  120, 151,
                                             181, 212, 243, 273, 304, 334};

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

long days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

// 0 = Monday.
int weekday_of(int y, unsigned m, unsigned d) {
  const long days = days_from_civil(y, m, d);
  return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double to_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kMalformedTrace,
                "timeseries line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

void FacilityTimeseries::resize(std::size_t steps) {
  power_kw.assign(steps, 0.0);
  occupied_nodes.assign(steps, 0.0);
  utilization.assign(steps, 0.0);
  running_jobs.assign(steps, 0);
  queued_jobs.assign(steps, 0);
}

int label_year(const Calendar& calendar) {
  for (int y = 2001;; ++y) {
    if (!is_leap(y) && weekday_of(y, 1, 1) == calendar.start_weekday) return y;
  }
}

std::string iso_timestamp(const Calendar& calendar, double seconds) {
  const auto total = static_cast<long long>(std::llround(seconds));
  const long day = static_cast<long>(total / 86400);
  const long rem = static_cast<long>(total % 86400);
  const int year = label_year(calendar) + static_cast<int>(calendar.year_offset(day));
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}", year,
                     calendar.month(day) + 1, calendar.day_of_month(day), rem / 3600,
                     (rem / 60) % 60, rem % 60);
}

void write_timeseries_csv(std::ostream& out, const FacilityTimeseries& series) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf),
                 "timestamp,power_kw,occupied_nodes,utilization,running_jobs,queued_jobs");
  const auto* req = series.requests ? &*series.requests : nullptr;
  if (req) {
    fmt::format_to(std::back_inserter(buf), ",incoming_pps,effective_pps,incomplete_pps");
    for (const auto& name : req->type_names) {
      fmt::format_to(std::back_inserter(buf), ",instances_{}", name);
    }
  }
  buf.push_back('\n');
  const int year0 = label_year(series.calendar);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto total = static_cast<long long>(std::llround(series.timestamp_s(i)));
    const long day = static_cast<long>(total / 86400);
    const long rem = static_cast<long>(total % 86400);
    fmt::format_to(std::back_inserter(buf),
                   "{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d},{:.6f},{:.6f},{:.6f},{},{}",
                   year0 + series.calendar.year_offset(day), series.calendar.month(day) + 1,
                   series.calendar.day_of_month(day), rem / 3600, (rem / 60) % 60, rem % 60,
                   series.power_kw[i], series.occupied_nodes[i], series.utilization[i],
                   series.running_jobs[i], series.queued_jobs[i]);
    if (req) {
      fmt::format_to(std::back_inserter(buf), ",{:.6f},{:.6f},{:.6f}", req->incoming_pps[i],
                     req->effective_pps[i], req->incomplete_pps[i]);
      for (const auto& inst : req->instances) {
        fmt::format_to(std::back_inserter(buf), ",{}", inst[i]);
      }
    }
    buf.push_back('\n');
    if (buf.size() > (1 << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

FacilityTimeseries read_timeseries_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kEmptySeries, "timeseries has no header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::array<std::string, 6> base = {"timestamp",   "power_kw",     "occupied_nodes",
                                           "utilization", "running_jobs", "queued_jobs"};
  for (std::size_t c = 0; c < base.size(); ++c) {
    if (c >= header.size() || header[c] != base[c]) {
      throw Error(ErrorCode::kMalformedTrace, "timeseries header must start with " +
                                                  base[0] + ",...," + base[5]);
    }
  }
  const auto incoming = find("incoming_pps");
  const auto effective = find("effective_pps");
  const auto incomplete = find("incomplete_pps");

  FacilityTimeseries series;
  std::vector<std::size_t> instance_cols;
  if (incoming && effective && incomplete) {
    series.requests.emplace();
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c].rfind("instances_", 0) == 0) {
        series.requests->type_names.push_back(header[c].substr(10));
        series.requests->instances.emplace_back();
        instance_cols.push_back(c);
      }
    }
  }

  std::vector<double> seconds;
  int year0 = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) {
      throw Error(ErrorCode::kMalformedTrace,
                  "timeseries line " + std::to_string(line_no) + ": wrong field count");
    }
    int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
    if (std::sscanf(f[0].c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &hh, &mm, &ss) != 6 ||
        mo < 1 || mo > 12) {
      throw Error(ErrorCode::kMalformedTrace,
                  "timeseries line " + std::to_string(line_no) + ": bad timestamp");
    }
    if (seconds.empty()) {
      year0 = y;
      series.calendar.start_weekday = weekday_of(y, 1, 1);
    }
    const long day = static_cast<long>(y - year0) * 365 + kMonthStart[mo - 1] + d - 1;
    seconds.push_back(static_cast<double>(day) * 86400.0 + hh * 3600.0 + mm * 60.0 + ss);
    series.power_kw.push_back(to_double(f[1], line_no));
    series.occupied_nodes.push_back(to_double(f[2], line_no));
    series.utilization.push_back(to_double(f[3], line_no));
    series.running_jobs.push_back(std::stol(f[4]));
    series.queued_jobs.push_back(std::stol(f[5]));
    if (series.requests) {
      series.requests->incoming_pps.push_back(to_double(f[*incoming], line_no));
      series.requests->effective_pps.push_back(to_double(f[*effective], line_no));
      series.requests->incomplete_pps.push_back(to_double(f[*incomplete], line_no));
      for (std::size_t k = 0; k < instance_cols.size(); ++k) {
        series.requests->instances[k].push_back(std::stoi(f[instance_cols[k]]));
      }
    }
  }
  if (seconds.empty()) throw Error(ErrorCode::kEmptySeries, "timeseries has no rows");
  if (seconds.front() != 0.0) {
    throw Error(ErrorCode::kMalformedTrace, "timeseries must start at January 1st 00:00");
  }
  series.timestep_s = seconds.size() > 1 ? seconds[1] - seconds[0] : 60.0;
  if (!(series.timestep_s > 0.0)) {
    throw Error(ErrorCode::kMalformedTrace, "timestamps must increase");
  }
  return series;
}

}  // namespace facsim
