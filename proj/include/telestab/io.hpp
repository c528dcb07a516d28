#pragma once

// CSV serialization, atomic file output, run manifests and SVG plots.

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "telestab/simulator.hpp"

namespace telestab {

inline constexpr const char* kTrajectoryHeader = "t,q_m,qd_m,q_s,qd_s,F_m,F_s,F_h,F_e";
inline constexpr const char* kEventHeader = "t_hat,h_k,t_update,channel,dropped";

// Decimal with 17 significant digits.
std::string format_number(double v);

std::string trajectory_csv(const TrajectoryLog& log);
std::string events_csv(const TrajectoryLog& log);

// Writes via a temporary file in the same directory and renames it over the
// target. Creates parent directories. Throws IoError.
void write_file_atomic(const std::string& path, const std::string& contents);

struct OutputEntry {
  std::string file;  // relative to the output directory
  std::size_t rows = 0;  // data rows, header excluded; 0 for non-tables
};

class RunManifest {
 public:
  RunManifest(std::string command, std::string config_hash, std::uint64_t seed);

  void add(const std::string& file, std::size_t rows = 0);
  const std::vector<OutputEntry>& outputs() const { return outputs_; }
  nlohmann::json to_json() const;
  // Stamps the finish time and writes manifest.json atomically.
  void write(const std::string& dir);

 private:
  std::string command_;
  std::string hash_;
  std::uint64_t seed_;
  std::string started_;
  std::string finished_;
  std::vector<OutputEntry> outputs_;
};

std::string utc_timestamp();

// Positions of master and slave over time, as a standalone SVG document.
std::string trajectory_svg(const TrajectoryLog& log, const std::string& title);

}  // namespace telestab
