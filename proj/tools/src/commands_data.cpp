#include "commands.hpp"

#include <cstddef>
#include <string>

#include "artic/diffusion.hpp"
#include "artic/mesh_io.hpp"
#include "artic/palate.hpp"
#include "artic/registration.hpp"
#include "artic/volume.hpp"
#include "run_log.hpp"

namespace artic::cli {

namespace {

const MatchWeights& match_for_target(const Context& ctx,
                                     const std::string& target) {
  if (target == "tongue") return ctx.config.tongue_match;
  if (target == "palate") return ctx.config.palate_match;
  throw ConfigError("--target must be 'tongue' or 'palate', got '" + target +
                    "'");
}

}  // namespace

void cmd_denoise(const Context& ctx, const IoFlags& flags) {
  RunLog log("denoise", ctx.config.snapshot(), ctx.seed, ctx.jobs);
  const GrayVolume in = load_volume(flags.in);
  validate_gray(in);
  log.add_input(flags.in);

  DiffusionConfig cfg = ctx.config.diffusion;
  cfg.jobs = ctx.jobs;
  const GrayVolume out = denoise_eed(in, cfg);
  log.stamp("denoise");

  save_volume(out, flags.out);
  log.add_output(flags.out);
  log.write(ctx.log);
}

void cmd_segment(const Context& ctx, const IoFlags& flags) {
  RunLog log("segment", ctx.config.snapshot(), ctx.seed, ctx.jobs);
  const GrayVolume in = load_volume(flags.in);
  validate_gray(in);
  log.add_input(flags.in);

  int threshold = 0;
  const TissuePartition partition = segment(in, &threshold);
  log.stamp("segment");
  log.note("threshold", threshold);

  save_partition(partition, flags.out);
  log.add_output(flags.out);
  log.write(ctx.log);
}

void cmd_extract_cloud(const Context& ctx, const IoFlags& flags) {
  RunLog log("extract-cloud", ctx.config.snapshot(), ctx.seed, ctx.jobs);
  const TissuePartition partition = load_partition(flags.in);
  log.add_input(flags.in);

  const OrientedPointCloud cloud = extract_surface(partition);
  log.stamp("extract");
  log.note("points", cloud.size());

  save_cloud(cloud, flags.out);
  log.add_output(flags.out);
  log.write(ctx.log);
}

void cmd_match_template(const Context& ctx, const MatchFlags& flags) {
  RunLog log("match-template", ctx.config.snapshot(), ctx.seed, ctx.jobs);
  const MatchWeights& weights = match_for_target(ctx, flags.target);

  SurfaceMesh templ = load_obj(flags.templ);
  log.add_input(flags.templ);
  if (!flags.template_landmarks.empty()) {
    templ.landmarks = load_template_landmarks(flags.template_landmarks);
    log.add_input(flags.template_landmarks);
  }

  const OrientedPointCloud cloud = load_cloud(flags.cloud);
  log.add_input(flags.cloud);

  LandmarkSet landmarks;
  if (!flags.landmarks.empty()) {
    landmarks = load_scan_landmarks(flags.landmarks);
    log.add_input(flags.landmarks);
  }

  DeformationField init;
  const DeformationField* init_ptr = nullptr;
  if (!flags.init.empty()) {
    init = load_field(flags.init);
    log.add_input(flags.init);
    init_ptr = &init;
  }

  const MatchResult result =
      match_template(templ, cloud, landmarks, weights, init_ptr);
  log.stamp("match");
  log.note("final_energy", result.stats.energies.back());
  log.note("final_mean_residual", result.stats.mean_residuals.back());
  log.note("final_valid_count", result.stats.valid_counts.back());

  save_obj(result.mesh, flags.out);
  log.add_output(flags.out);
  if (!flags.field.empty()) {
    save_field(result.field, flags.field);
    log.add_output(flags.field);
  }
  log.write(ctx.log);
}

void cmd_align_palate(const Context& ctx, const AlignFlags& flags) {
  RunLog log("align-palate", ctx.config.snapshot(), ctx.seed, ctx.jobs);
  const GrayVolume reference = load_volume(flags.reference);
  validate_gray(reference);
  log.add_input(flags.reference);
  const GrayVolume target = load_volume(flags.target);
  validate_gray(target);
  log.add_input(flags.target);
  const SurfaceMesh palate = load_obj(flags.palate);
  log.add_input(flags.palate);

  PalateAlignConfig cfg = ctx.config.palate_align;
  cfg.seed = ctx.seed;
  const PalateAlignResult result = align_palate(reference, target, palate, cfg);
  log.stamp("align");
  log.note("score", result.score);
  log.note("identity_score", result.identity_score);

  save_obj(result.mesh, flags.out);
  log.add_output(flags.out);
  if (!flags.transform.empty()) {
    save_transform(result.transform, flags.transform);
    log.add_output(flags.transform);
  }
  log.write(ctx.log);
}

void cmd_augment_cloud(const Context& ctx, const AugmentFlags& flags) {
  RunLog log("augment-cloud", ctx.config.snapshot(), ctx.seed, ctx.jobs);
  const OrientedPointCloud cloud = load_cloud(flags.cloud);
  log.add_input(flags.cloud);
  const SurfaceMesh palate = load_obj(flags.palate);
  log.add_input(flags.palate);

  const AugmentResult result = augment_cloud(cloud, palate, ctx.config.augment);
  log.stamp("augment");
  log.note("removed", result.removed);
  log.note("injected", result.injected);

  save_cloud(result.cloud, flags.out);
  log.add_output(flags.out);
  log.write(ctx.log);
}

}  // namespace artic::cli
