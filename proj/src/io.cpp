#include "telestab/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "telestab/errors.hpp"

namespace telestab {

namespace fs = std::filesystem;

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trajectory_csv(const TrajectoryLog& log) {
  std::string out = kTrajectoryHeader;
  out += '\n';
  for (const auto& r : log.dense) {
    for (double v : {r.t, r.q_m, r.qd_m, r.q_s, r.qd_s, r.F_m, r.F_s, r.F_h}) {
      out += format_number(v);
      out += ',';
    }
    out += format_number(r.F_e);
    out += '\n';
  }
  return out;
}

std::string events_csv(const TrajectoryLog& log) {
  std::string out = kEventHeader;
  out += '\n';
  for (const auto& e : log.events) {
    out += format_number(e.t_hat) + ',' + format_number(e.h_k) + ',' +
           format_number(e.t_update) + ',' + to_string(e.channel) + ',' +
           (e.dropped ? "1" : "0") + '\n';
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create directory for '" + path + "': " + ec.message());
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename onto '" + path + "': " + ec.message());
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest::RunManifest(std::string command, std::string config_hash,
                         std::uint64_t seed)
    : command_(std::move(command)),
      hash_(std::move(config_hash)),
      seed_(seed),
      started_(utc_timestamp()) {}

void RunManifest::add(const std::string& file, std::size_t rows) {
  outputs_.push_back({file, rows});
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& o : outputs_) outs.push_back({{"file", o.file}, {"rows", o.rows}});
  return {{"tool", "telestab"},
          {"version", TELESTAB_VERSION},
          {"command", command_},
          {"config_hash", hash_},
          {"seed", seed_},
          {"started", started_},
          {"finished", finished_},
          {"outputs", outs}};
}

void RunManifest::write(const std::string& dir) {
  finished_ = utc_timestamp();
  write_file_atomic((fs::path(dir) / "manifest.json").string(),
                    to_json().dump(2) + "\n");
}

std::string trajectory_svg(const TrajectoryLog& log, const std::string& title) {
  const double W = 800, H = 400, pad = 50;
  double t0 = 0, t1 = 1, lo = -1, hi = 1;
  if (!log.dense.empty()) {
    t0 = log.dense.front().t;
    t1 = std::max(log.dense.back().t, t0 + 1e-9);
    lo = hi = log.dense.front().q_m;
    for (const auto& r : log.dense)
      for (double q : {r.q_m, r.q_s})
        if (std::isfinite(q)) {
          lo = std::min(lo, q);
          hi = std::max(hi, q);
        }
    if (hi - lo < 1e-9) {
      lo -= 1;
      hi += 1;
    }
  }
  auto px = [&](double t) { return pad + (t - t0) / (t1 - t0) * (W - 2 * pad); };
  auto py = [&](double q) { return H - pad - (q - lo) / (hi - lo) * (H - 2 * pad); };
  // At most ~2000 vertices per curve.
  const std::size_t stride = std::max<std::size_t>(1, log.dense.size() / 2000);
  auto path = [&](bool master) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    bool first = true;
    for (std::size_t i = 0; i < log.dense.size(); i += stride) {
      const auto& r = log.dense[i];
      const double q = master ? r.q_m : r.q_s;
      if (!std::isfinite(q)) break;
      os << (first ? 'M' : 'L') << px(r.t) << ',' << py(q) << ' ';
      first = false;
    }
    return os.str();
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
     << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << pad << "\" y=\"25\" font-family=\"sans-serif\" font-size=\"14\">"
     << title << "</text>\n"
     << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad
     << "\" y2=\"" << H - pad << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\""
     << H - pad << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << W - pad << "\" y=\"" << H - pad + 20
     << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">t = "
     << t1 << " s</text>\n"
     << "<text x=\"5\" y=\"" << pad << "\" font-family=\"sans-serif\" font-size=\"12\">"
     << hi << "</text>\n"
     << "<text x=\"5\" y=\"" << H - pad << "\" font-family=\"sans-serif\" font-size=\"12\">"
     << lo << "</text>\n"
     << "<path d=\"" << path(true) << "\" fill=\"none\" stroke=\"#1f77b4\"/>\n"
     << "<path d=\"" << path(false) << "\" fill=\"none\" stroke=\"#d62728\"/>\n"
     << "<text x=\"" << W - 150 << "\" y=\"25\" font-family=\"sans-serif\" "
        "font-size=\"12\" fill=\"#1f77b4\">q_m</text>\n"
     << "<text x=\"" << W - 100 << "\" y=\"25\" font-family=\"sans-serif\" "
        "font-size=\"12\" fill=\"#d62728\">q_s</text>\n"
     << "</svg>\n";
  return os.str();
}

}  // namespace telestab
