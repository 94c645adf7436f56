#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "artic/diffusion.hpp"
#include "artic/fitting.hpp"
#include "artic/palate.hpp"
#include "artic/registration.hpp"
#include "artic/tracking.hpp"

#include <json.hpp>

namespace artic::cli {

// Invalid configuration or command line; mapped to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SynthSection {
  std::string surface = "tongue";  // or "sphere"
  double sphere_radius = 10.0;
  int sphere_subdivisions = 2;
  std::size_t speakers = 6;
  std::size_t poses = 5;
  std::size_t speaker_rank = 3;
  std::size_t pose_rank = 2;
  double amplitude = 3.0;
  double cloud_density = 2.0;
  double cloud_noise = 0.0;
  std::size_t frames = 200;
  std::size_t markers = 3;
  double phantom_noise = 20.0;
};

struct ModelSection {
  std::size_t speaker_rank = 0;  // 0 keeps the full rank
  std::size_t pose_rank = 0;
};

struct BootstrapSection {
  int tongue_iterations = 5;
  int palate_iterations = 1;
  std::string mode = "multilinear";  // or "single-mode"
};

struct EvaluateSection {
  double generalization_h = 2.0;
  std::size_t specificity_samples = 100;
};

// Effective settings for one run: published defaults overridden by the
// optional JSON config file. Unknown keys anywhere are rejected; every
// non-empty path entry must exist when the file is validated.
struct PipelineConfig {
  std::uint64_t seed = 0;
  int jobs = 1;

  DiffusionConfig diffusion;
  MatchWeights tongue_match;   // gamma_min 0, series 40
  MatchWeights palate_match;   // gamma_min 10, series 10
  PalateAlignConfig palate_align;
  AugmentConfig augment;
  FitConfig tongue_fit;        // h = 0.5
  FitConfig palate_fit;        // h = 1
  BootstrapSection bootstrap;
  EvaluateSection evaluate;
  TrackConfig track;
  ModelSection model;
  SynthSection synth;

  std::map<std::string, std::string> paths;

  PipelineConfig();

  // Resolves a path entry: flag value wins, then the config entry.
  // Throws ConfigError naming the key when both are empty.
  std::string require_path(const std::string& key,
                           const std::string& flag_value) const;
  std::string optional_path(const std::string& key,
                            const std::string& flag_value) const;

  nlohmann::json snapshot() const;
};

PipelineConfig load_config(const std::string& path);

}  // namespace artic::cli
