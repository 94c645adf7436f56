#pragma once

#include <cstddef>
#include <string>

#include "cli_config.hpp"

namespace artic::cli {

// Shared run settings after flag/config merging.
struct Context {
  PipelineConfig config;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string log;  // --log override, empty = next to the first output
};

struct IoFlags {
  std::string in;
  std::string out;
};

struct MatchFlags {
  std::string templ;
  std::string cloud;
  std::string landmarks;
  std::string template_landmarks;
  std::string init;
  std::string out;
  std::string field;
  std::string target = "tongue";  // picks the weight block
};

struct AlignFlags {
  std::string reference;
  std::string target;
  std::string palate;
  std::string out;
  std::string transform;
};

struct AugmentFlags {
  std::string cloud;
  std::string palate;
  std::string out;
};

struct BuildFlags {
  std::string manifest;
  std::string out;
};

struct FitFlags {
  std::string model;
  std::string cloud;
  std::string landmarks;
  std::string template_landmarks;
  std::string out;
  std::string coords;
  std::string mode = "multilinear";  // or "pca"
  std::string target = "tongue";     // picks the fit block
};

struct BootstrapFlags {
  std::string templ;
  std::string template_landmarks;
  std::string manifest;
  std::string out_dir;
  std::string out_model;
  std::string target = "tongue";
};

struct EvaluateFlags {
  std::string manifest;
  std::string out_dir;
  std::size_t fixed_speaker = 0;  // anchor row for pose-mode curves
  std::size_t fixed_pose = 0;     // anchor column for speaker-mode curves
  std::string regions;
  std::string region;
};

struct TrackFlags {
  std::string model;
  std::string markers;
  std::string correspondences;
  std::string out;
  std::string anatomy;      // fixed-mode speaker coordinates (JSON)
  std::string out_anatomy;  // estimated anatomy over the trajectory
  std::string mode;         // overrides config when nonempty
};

struct SynthFlags {
  std::string out_dir;
};

void cmd_denoise(const Context& ctx, const IoFlags& flags);
void cmd_segment(const Context& ctx, const IoFlags& flags);
void cmd_extract_cloud(const Context& ctx, const IoFlags& flags);
void cmd_match_template(const Context& ctx, const MatchFlags& flags);
void cmd_align_palate(const Context& ctx, const AlignFlags& flags);
void cmd_augment_cloud(const Context& ctx, const AugmentFlags& flags);
void cmd_build_model(const Context& ctx, const BuildFlags& flags);
void cmd_fit_model(const Context& ctx, const FitFlags& flags);
void cmd_bootstrap(const Context& ctx, const BootstrapFlags& flags);
void cmd_evaluate(const Context& ctx, const EvaluateFlags& flags);
void cmd_track(const Context& ctx, const TrackFlags& flags);
void cmd_synth(const Context& ctx, const SynthFlags& flags);

}  // namespace artic::cli
