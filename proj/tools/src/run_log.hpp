#pragma once

#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

namespace artic::cli {

// Machine-readable record of one subcommand run: input fingerprints,
// the effective config, seed, and wall-clock timings. Written next to
// the first output (<output>.runlog.json) unless --log overrides it.
class RunLog {
 public:
  RunLog(std::string subcommand, nlohmann::json config_snapshot,
         std::uint64_t seed, int jobs);

  void add_input(const std::string& path);
  void add_output(const std::string& path);
  void note(const std::string& key, const nlohmann::json& value);

  // Duration since construction, recorded under timings_ms.
  void stamp(const std::string& label);

  // Resolves the log path and writes the JSON file.
  void write(const std::string& log_flag) const;

 private:
  nlohmann::json root_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace artic::cli
