#include "manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <utility>

#include "artic/mesh_io.hpp"

#include <json.hpp>

namespace artic::cli {

namespace {

using nlohmann::json;

std::vector<std::string> name_list(const json& j, const char* key,
                                   const std::string& path) {
  if (!j.contains(key) || !j[key].is_array())
    throw std::runtime_error("manifest " + path + ": missing array '" + key +
                             "'");
  std::vector<std::string> names;
  for (const auto& v : j[key]) {
    if (!v.is_string())
      throw std::runtime_error("manifest " + path + ": '" + key +
                               "' entries must be strings");
    names.push_back(v.get<std::string>());
  }
  if (names.empty())
    throw std::runtime_error("manifest " + path + ": '" + key + "' is empty");
  return names;
}

std::size_t name_index(const std::vector<std::string>& names,
                       const std::string& name, const char* what,
                       const std::string& path) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw std::runtime_error("manifest " + path + ": unknown " + what + " '" +
                             name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

std::string resolve(const std::string& manifest_path,
                    const std::string& entry) {
  std::filesystem::path p(entry);
  if (p.is_relative())
    p = std::filesystem::path(manifest_path).parent_path() / p;
  return p.string();
}

}  // namespace

std::vector<BootstrapInput> load_scan_manifest(
    const std::string& manifest_path, std::vector<std::string>& speakers,
    std::vector<std::string>& poses) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest " + manifest_path + ": " + e.what());
  }
  speakers = name_list(j, "speakers", manifest_path);
  poses = name_list(j, "poses", manifest_path);
  if (!j.contains("scans") || !j["scans"].is_array())
    throw std::runtime_error("manifest " + manifest_path +
                             ": missing array 'scans'");
  std::vector<BootstrapInput> inputs;
  for (const auto& entry : j["scans"]) {
    if (!entry.is_object() || !entry.contains("speaker") ||
        !entry.contains("pose") || !entry.contains("cloud"))
      throw std::runtime_error("manifest " + manifest_path +
                               ": scan entries need speaker/pose/cloud");
    BootstrapInput input;
    input.speaker = name_index(speakers, entry["speaker"].get<std::string>(),
                               "speaker", manifest_path);
    input.pose = name_index(poses, entry["pose"].get<std::string>(), "pose",
                            manifest_path);
    input.cloud =
        load_cloud(resolve(manifest_path, entry["cloud"].get<std::string>()));
    if (entry.contains("landmarks"))
      input.landmarks = load_scan_landmarks(
          resolve(manifest_path, entry["landmarks"].get<std::string>()));
    inputs.push_back(std::move(input));
  }
  return inputs;
}

}  // namespace artic::cli
