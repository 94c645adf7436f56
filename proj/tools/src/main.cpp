#include <cstdint>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cli_config.hpp"
#include "commands.hpp"

namespace {

using artic::cli::Context;

std::string template_key(const std::string& target) {
  return target == "palate" ? "palate_template" : "template";
}

std::string landmarks_key(const std::string& target) {
  return target == "palate" ? "palate_landmarks" : "template_landmarks";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Multilinear tongue modeling toolkit: volume preprocessing, template "
      "matching, model building, evaluation, and marker tracking",
      "artic"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "artic 1.0.0");

  std::string config_path;
  std::string log_path;
  long long seed_flag = 0;
  int jobs_flag = 1;
  app.add_option("--config", config_path, "JSON settings file")
      ->check(CLI::ExistingFile);
  auto* seed_opt =
      app.add_option("--seed", seed_flag, "Random seed (overrides the config)")
          ->check(CLI::NonNegativeNumber);
  auto* jobs_opt =
      app.add_option("--jobs", jobs_flag, "Worker threads (overrides the config)")
          ->check(CLI::PositiveNumber);
  app.add_option("--log", log_path,
                 "Run-log path (default: <first output>.runlog.json)");

  const auto targets = CLI::IsMember({"tongue", "palate"});
  std::function<void(const Context&)> run;

  artic::cli::IoFlags denoise_flags;
  auto* denoise = app.add_subcommand(
      "denoise", "Edge-preserving anisotropic smoothing of a gray volume");
  denoise->fallthrough();
  denoise->add_option("--in", denoise_flags.in, "Input volume (MVOL1)")
      ->required()
      ->check(CLI::ExistingFile);
  denoise->add_option("--out", denoise_flags.out, "Output volume (MVOL1)")
      ->required();
  denoise->callback([&] {
    run = [&](const Context& ctx) { cmd_denoise(ctx, denoise_flags); };
  });

  artic::cli::IoFlags segment_flags;
  auto* segment = app.add_subcommand(
      "segment", "Histogram-threshold tissue/background labeling");
  segment->fallthrough();
  segment->add_option("--in", segment_flags.in, "Input volume (MVOL1)")
      ->required()
      ->check(CLI::ExistingFile);
  segment->add_option("--out", segment_flags.out, "Output partition (MVOL1)")
      ->required();
  segment->callback([&] {
    run = [&](const Context& ctx) { cmd_segment(ctx, segment_flags); };
  });

  artic::cli::IoFlags extract_flags;
  auto* extract = app.add_subcommand(
      "extract-cloud", "Oriented boundary points of a tissue partition");
  extract->fallthrough();
  extract->add_option("--in", extract_flags.in, "Input partition (MVOL1)")
      ->required()
      ->check(CLI::ExistingFile);
  extract->add_option("--out", extract_flags.out, "Output cloud (OBJ v/vn)")
      ->required();
  extract->callback([&] {
    run = [&](const Context& ctx) { cmd_extract_cloud(ctx, extract_flags); };
  });

  artic::cli::MatchFlags match_flags;
  auto* match = app.add_subcommand(
      "match-template", "Deform a template mesh onto an oriented point cloud");
  match->fallthrough();
  match->add_option("--template", match_flags.templ, "Template mesh (OBJ)")
      ->check(CLI::ExistingFile);
  match->add_option("--cloud", match_flags.cloud, "Target cloud (OBJ v/vn)")
      ->required()
      ->check(CLI::ExistingFile);
  match->add_option("--landmarks", match_flags.landmarks,
                    "Scan landmark positions (JSON)")
      ->check(CLI::ExistingFile);
  match->add_option("--template-landmarks", match_flags.template_landmarks,
                    "Template landmark table (JSON)")
      ->check(CLI::ExistingFile);
  match->add_option("--init", match_flags.init,
                    "Initial deformation field (MDEF)")
      ->check(CLI::ExistingFile);
  match->add_option("--out", match_flags.out, "Deformed mesh (OBJ)")
      ->required();
  match->add_option("--field", match_flags.field,
                    "Final deformation field (MDEF)");
  match->add_option("--target", match_flags.target,
                    "Weight preset: tongue or palate")
      ->transform(targets);
  match->callback([&] {
    run = [&](const Context& ctx) {
      artic::cli::MatchFlags f = match_flags;
      f.templ = ctx.config.require_path(template_key(f.target), f.templ);
      f.template_landmarks = ctx.config.optional_path(
          landmarks_key(f.target), f.template_landmarks);
      cmd_match_template(ctx, f);
    };
  });

  artic::cli::AlignFlags align_flags;
  auto* align = app.add_subcommand(
      "align-palate",
      "Rigidly place the palate of a reference scan into another scan");
  align->fallthrough();
  align->add_option("--reference", align_flags.reference,
                    "Reference volume the palate was matched in (MVOL1)")
      ->required()
      ->check(CLI::ExistingFile);
  align->add_option("--target", align_flags.target, "Target volume (MVOL1)")
      ->required()
      ->check(CLI::ExistingFile);
  align->add_option("--palate", align_flags.palate,
                    "Palate mesh in reference coordinates (OBJ)")
      ->check(CLI::ExistingFile);
  align->add_option("--out", align_flags.out, "Placed palate mesh (OBJ)")
      ->required();
  align->add_option("--transform", align_flags.transform,
                    "Recovered rigid motion (JSON)");
  align->callback([&] {
    run = [&](const Context& ctx) {
      artic::cli::AlignFlags f = align_flags;
      f.palate = ctx.config.require_path("palate_template", f.palate);
      cmd_align_palate(ctx, f);
    };
  });

  artic::cli::AugmentFlags augment_flags;
  auto* augment = app.add_subcommand(
      "augment-cloud",
      "Replace the palate region of a cloud with palate mesh points");
  augment->fallthrough();
  augment->add_option("--cloud", augment_flags.cloud, "Input cloud (OBJ v/vn)")
      ->required()
      ->check(CLI::ExistingFile);
  augment->add_option("--palate", augment_flags.palate,
                      "Placed palate mesh (OBJ)")
      ->check(CLI::ExistingFile);
  augment->add_option("--out", augment_flags.out, "Augmented cloud (OBJ v/vn)")
      ->required();
  augment->callback([&] {
    run = [&](const Context& ctx) {
      artic::cli::AugmentFlags f = augment_flags;
      f.palate = ctx.config.require_path("palate_template", f.palate);
      cmd_augment_cloud(ctx, f);
    };
  });

  artic::cli::BuildFlags build_flags;
  auto* build = app.add_subcommand(
      "build-model", "Decompose a registered mesh collection into a model");
  build->fallthrough();
  build->add_option("--manifest", build_flags.manifest,
                    "Collection manifest (JSON)")
      ->check(CLI::ExistingFile);
  build->add_option("--out", build_flags.out, "Output model (MLTM)")
      ->required();
  build->callback([&] {
    run = [&](const Context& ctx) {
      artic::cli::BuildFlags f = build_flags;
      f.manifest = ctx.config.require_path("manifest", f.manifest);
      cmd_build_model(ctx, f);
    };
  });

  artic::cli::FitFlags fit_flags;
  auto* fit = app.add_subcommand(
      "fit-model", "Fit model coordinates to an oriented point cloud");
  fit->fallthrough();
  fit->add_option("--model", fit_flags.model, "Model (MLTM)")
      ->check(CLI::ExistingFile);
  fit->add_option("--cloud", fit_flags.cloud, "Target cloud (OBJ v/vn)")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--landmarks", fit_flags.landmarks,
                  "Scan landmark positions (JSON)")
      ->check(CLI::ExistingFile);
  fit->add_option("--template-landmarks", fit_flags.template_landmarks,
                  "Template landmark table (JSON)")
      ->check(CLI::ExistingFile);
  fit->add_option("--out", fit_flags.out, "Fitted mesh (OBJ)")->required();
  fit->add_option("--coords", fit_flags.coords,
                  "Fitted mode coordinates (JSON)");
  fit->add_option("--mode", fit_flags.mode,
                  "Coordinate blocks: multilinear or pca")
      ->transform(CLI::IsMember({"multilinear", "pca"}));
  fit->add_option("--target", fit_flags.target,
                  "Fit preset: tongue or palate")
      ->transform(targets);
  fit->callback([&] {
    run = [&](const Context& ctx) {
      artic::cli::FitFlags f = fit_flags;
      f.model = ctx.config.require_path("model", f.model);
      if (!f.landmarks.empty())
        f.template_landmarks = ctx.config.require_path(
            landmarks_key(f.target), f.template_landmarks);
      cmd_fit_model(ctx, f);
    };
  });

  artic::cli::BootstrapFlags bootstrap_flags;
  auto* boot = app.add_subcommand(
      "bootstrap",
      "Alternate template matching and model fitting over a scan corpus");
  boot->fallthrough();
  boot->add_option("--template", bootstrap_flags.templ, "Template mesh (OBJ)")
      ->check(CLI::ExistingFile);
  boot->add_option("--template-landmarks", bootstrap_flags.template_landmarks,
                   "Template landmark table (JSON)")
      ->check(CLI::ExistingFile);
  boot->add_option("--manifest", bootstrap_flags.manifest,
                   "Scan manifest (JSON)")
      ->check(CLI::ExistingFile);
  boot->add_option("--out-dir", bootstrap_flags.out_dir,
                   "Output directory for the registered collection")
      ->required();
  boot->add_option("--out-model", bootstrap_flags.out_model,
                   "Also write the model built from the result (MLTM)");
  boot->add_option("--target", bootstrap_flags.target,
                   "Preset: tongue or palate")
      ->transform(targets);
  boot->callback([&] {
    run = [&](const Context& ctx) {
      artic::cli::BootstrapFlags f = bootstrap_flags;
      f.templ = ctx.config.require_path(template_key(f.target), f.templ);
      f.template_landmarks = ctx.config.optional_path(
          landmarks_key(f.target), f.template_landmarks);
      f.manifest = ctx.config.require_path("manifest", f.manifest);
      cmd_bootstrap(ctx, f);
    };
  });

  artic::cli::EvaluateFlags eval_flags;
  auto* evaluate = app.add_subcommand(
      "evaluate", "Compactness, generalization, and specificity curves");
  evaluate->fallthrough();
  evaluate->add_option("--manifest", eval_flags.manifest,
                       "Collection manifest (JSON)")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--out-dir", eval_flags.out_dir,
                       "Output directory for the metric CSV files")
      ->required();
  evaluate->add_option("--fixed-speaker", eval_flags.fixed_speaker,
                       "Speaker row anchoring pose-mode curves");
  evaluate->add_option("--fixed-pose", eval_flags.fixed_pose,
                       "Pose column anchoring speaker-mode curves");
  evaluate->add_option("--regions", eval_flags.regions,
                       "Region mask table (JSON)")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--region", eval_flags.region,
                       "Mask name restricting specificity distances");
  evaluate->callback([&] {
    run = [&](const Context& ctx) {
      artic::cli::EvaluateFlags f = eval_flags;
      f.manifest = ctx.config.require_path("manifest", f.manifest);
      if (!f.region.empty())
        f.regions = ctx.config.require_path("region_masks", f.regions);
      cmd_evaluate(ctx, f);
    };
  });

  artic::cli::TrackFlags track_flags;
  auto* track = app.add_subcommand(
      "track", "Recover mode coordinates per frame from marker recordings");
  track->fallthrough();
  track->add_option("--model", track_flags.model, "Model (MLTM)")
      ->check(CLI::ExistingFile);
  track->add_option("--markers", track_flags.markers,
                    "Marker sequence (JSON)")
      ->check(CLI::ExistingFile);
  track->add_option("--correspondences", track_flags.correspondences,
                    "Marker-to-vertex table (JSON)")
      ->check(CLI::ExistingFile);
  track->add_option("--out", track_flags.out, "Trajectory (CSV)")->required();
  track->add_option("--anatomy", track_flags.anatomy,
                    "Fixed speaker coordinates (JSON, fixed mode)")
      ->check(CLI::ExistingFile);
  track->add_option("--out-anatomy", track_flags.out_anatomy,
                    "Mean speaker coordinates over the trajectory (JSON)");
  track->add_option("--mode", track_flags.mode,
                    "Anatomy handling: free or fixed (overrides the config)")
      ->transform(CLI::IsMember({"free", "fixed"}));
  track->callback([&] {
    run = [&](const Context& ctx) {
      artic::cli::TrackFlags f = track_flags;
      f.model = ctx.config.require_path("model", f.model);
      f.markers = ctx.config.require_path("markers", f.markers);
      f.correspondences =
          ctx.config.require_path("marker_correspondences", f.correspondences);
      cmd_track(ctx, f);
    };
  });

  artic::cli::SynthFlags synth_flags;
  auto* synth = app.add_subcommand(
      "synth", "Generate a synthetic corpus with known ground truth");
  synth->fallthrough();
  synth->add_option("--out-dir", synth_flags.out_dir, "Output directory")
      ->required();
  synth->callback([&] {
    run = [&](const Context& ctx) { cmd_synth(ctx, synth_flags); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the message and usage hint
    return code == 0 ? 0 : 2;
  }

  try {
    Context ctx;
    ctx.config = artic::cli::load_config(config_path);
    ctx.seed =
        seed_opt->count() ? static_cast<std::uint64_t>(seed_flag) : ctx.config.seed;
    ctx.jobs = jobs_opt->count() ? jobs_flag : ctx.config.jobs;
    ctx.log = log_path;
    run(ctx);
  } catch (const artic::cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
