#include "run_log.hpp"

#include <fstream>
#include <stdexcept>

#include "artic/hash.hpp"

namespace artic::cli {

RunLog::RunLog(std::string subcommand, nlohmann::json config_snapshot,
               std::uint64_t seed, int jobs)
    : start_(std::chrono::steady_clock::now()) {
  root_["subcommand"] = std::move(subcommand);
  root_["seed"] = seed;
  root_["jobs"] = jobs;
  root_["config"] = std::move(config_snapshot);
  root_["inputs"] = nlohmann::json::array();
  root_["outputs"] = nlohmann::json::array();
  root_["timings_ms"] = nlohmann::json::object();
}

void RunLog::add_input(const std::string& path) {
  root_["inputs"].push_back(
      {{"path", path}, {"fnv1a64", fnv1a64_file(path)}});
}

void RunLog::add_output(const std::string& path) {
  root_["outputs"].push_back(path);
  outputs_.push_back(path);
}

void RunLog::note(const std::string& key, const nlohmann::json& value) {
  root_["notes"][key] = value;
}

void RunLog::stamp(const std::string& label) {
  const auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::steady_clock::now() - start_);
  root_["timings_ms"][label] = static_cast<double>(elapsed.count()) / 1000.0;
}

void RunLog::write(const std::string& log_flag) const {
  std::string path = log_flag;
  if (path.empty()) {
    if (outputs_.empty()) return;  // nothing produced, nowhere to anchor
    path = outputs_.front() + ".runlog.json";
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write run log: " + path);
  out << root_.dump(2) << "\n";
}

}  // namespace artic::cli
