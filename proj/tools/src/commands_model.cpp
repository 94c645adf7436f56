#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "artic/evaluation.hpp"
#include "artic/fitting.hpp"
#include "artic/hash.hpp"
#include "artic/mesh_io.hpp"
#include "artic/model.hpp"
#include "artic/synth.hpp"
#include "artic/tracking.hpp"
#include "artic/volume.hpp"
#include "manifest.hpp"
#include "run_log.hpp"

#include <json.hpp>

namespace artic::cli {

namespace {

using nlohmann::json;

const FitConfig& fit_for_target(const Context& ctx,
                                const std::string& target) {
  if (target == "tongue") return ctx.config.tongue_fit;
  if (target == "palate") return ctx.config.palate_fit;
  throw ConfigError("--target must be 'tongue' or 'palate', got '" + target +
                    "'");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Truncation requested in the model section; 0 keeps the full rank.
MultilinearModel truncated_model(const Context& ctx,
                                 const MultilinearModel& model) {
  const std::size_t sr = ctx.config.model.speaker_rank
                             ? ctx.config.model.speaker_rank
                             : model.speaker_rank();
  const std::size_t pr = ctx.config.model.pose_rank ? ctx.config.model.pose_rank
                                                    : model.pose_rank();
  if (sr == model.speaker_rank() && pr == model.pose_rank()) return model;
  return truncate(model, sr, pr);
}

MultilinearModel model_from_collection(const Context& ctx,
                                       const MeshCollection& collection,
                                       RunLog& log) {
  MeshCollection complete = collection;
  if (!complete.complete()) {
    std::size_t observed = 0;
    for (const auto& row : collection.cells)
      for (const auto& cell : row) observed += cell.has_value() ? 1 : 0;
    complete = complete_missing(collection);
    log.note("completed_cells", collection.speaker_count() *
                                        collection.pose_count() -
                                    observed);
  }
  const TrainingTensor tensor = build_tensor(complete);
  return hosvd(tensor, complete);
}

Eigen::VectorXd load_speaker_coords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open coordinates: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("coordinates " + path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("speaker") || !j["speaker"].is_array())
    throw std::runtime_error("coordinates " + path +
                             ": missing array 'speaker'");
  const auto values = j["speaker"].get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<long>(values.size()));
}

void write_coords(const std::string& path, const Eigen::VectorXd& speaker,
                  const Eigen::VectorXd* pose) {
  json j;
  j["speaker"] = to_vector(speaker);
  if (pose) j["pose"] = to_vector(*pose);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write coordinates: " + path);
  out << j.dump(2) << "\n";
}

void save_curves(const MetricCurve& curve, const std::string& stem,
                 RunLog& log) {
  save_curve_csv(curve, stem + ".csv");
  log.add_output(stem + ".csv");
}

}  // namespace

void cmd_build_model(const Context& ctx, const BuildFlags& flags) {
  RunLog log("build-model", ctx.config.snapshot(), ctx.seed, ctx.jobs);
  const MeshCollection collection = load_collection(flags.manifest);
  log.add_input(flags.manifest);

  const MultilinearModel model =
      truncated_model(ctx, model_from_collection(ctx, collection, log));
  log.stamp("build");
  log.note("speaker_rank", model.speaker_rank());
  log.note("pose_rank", model.pose_rank());
  log.note("vertices", model.vertex_count());

  save_model(model, flags.out);
  log.add_output(flags.out);
  log.write(ctx.log);
}

void cmd_fit_model(const Context& ctx, const FitFlags& flags) {
  RunLog log("fit-model", ctx.config.snapshot(), ctx.seed, ctx.jobs);
  const FitConfig& cfg = fit_for_target(ctx, flags.target);
  if (flags.mode != "multilinear" && flags.mode != "pca")
    throw ConfigError("--mode must be 'multilinear' or 'pca', got '" +
                      flags.mode + "'");
  if (flags.landmarks.empty() != flags.template_landmarks.empty())
    throw ConfigError(
        "--landmarks and --template-landmarks must be given together");

  const MultilinearModel model = load_model(flags.model);
  log.add_input(flags.model);
  const OrientedPointCloud cloud = load_cloud(flags.cloud);
  log.add_input(flags.cloud);

  IndexedLandmarks landmarks;
  if (!flags.landmarks.empty()) {
    const auto table = load_template_landmarks(flags.template_landmarks);
    log.add_input(flags.template_landmarks);
    landmarks = resolve_landmarks(table, load_scan_landmarks(flags.landmarks));
    log.add_input(flags.landmarks);
  }

  const FitResult fit = flags.mode == "pca"
                            ? fit_pca(model, cloud, landmarks, cfg)
                            : fit_model(model, cloud, landmarks, cfg);
  log.stamp("fit");
  log.note("energy", fit.energy);
  log.note("mean_residual", fit.mean_residual);
  log.note("used_count", fit.used_count);

  save_obj(fit.mesh, flags.out);
  log.add_output(flags.out);
  if (!flags.coords.empty()) {
    write_coords(flags.coords, fit.speaker, &fit.pose);
    log.add_output(flags.coords);
  }
  log.write(ctx.log);
}

void cmd_bootstrap(const Context& ctx, const BootstrapFlags& flags) {
  RunLog log("bootstrap", ctx.config.snapshot(), ctx.seed, ctx.jobs);

  BootstrapConfig cfg;
  if (flags.target == "tongue") {
    cfg.match = ctx.config.tongue_match;
    cfg.fit = ctx.config.tongue_fit;
    cfg.iterations = ctx.config.bootstrap.tongue_iterations;
  } else if (flags.target == "palate") {
    cfg.match = ctx.config.palate_match;
    cfg.fit = ctx.config.palate_fit;
    cfg.iterations = ctx.config.bootstrap.palate_iterations;
  } else {
    throw ConfigError("--target must be 'tongue' or 'palate', got '" +
                      flags.target + "'");
  }
  cfg.mode = ctx.config.bootstrap.mode == "single-mode"
                 ? BootstrapMode::SingleMode
                 : BootstrapMode::Multilinear;
  cfg.jobs = ctx.jobs;

  SurfaceMesh templ = load_obj(flags.templ);
  log.add_input(flags.templ);
  if (!flags.template_landmarks.empty()) {
    templ.landmarks = load_template_landmarks(flags.template_landmarks);
    log.add_input(flags.template_landmarks);
  }

  std::vector<std::string> speakers;
  std::vector<std::string> poses;
  const std::vector<BootstrapInput> inputs =
      load_scan_manifest(flags.manifest, speakers, poses);
  log.add_input(flags.manifest);

  const BootstrapResult result =
      bootstrap(templ, speakers, poses, inputs, cfg);
  log.stamp("bootstrap");
  log.note("iteration_residuals", result.iteration_residuals);

  std::filesystem::create_directories(flags.out_dir);
  const std::string manifest =
      (std::filesystem::path(flags.out_dir) / "collection.json").string();
  save_collection(result.collection,
                  (std::filesystem::path(flags.out_dir) / "meshes").string(),
                  manifest);
  log.add_output(manifest);

  if (!flags.out_model.empty()) {
    const MultilinearModel model = truncated_model(
        ctx, model_from_collection(ctx, result.collection, log));
    save_model(model, flags.out_model);
    log.add_output(flags.out_model);
  }
  log.write(ctx.log);
}

void cmd_evaluate(const Context& ctx, const EvaluateFlags& flags) {
  RunLog log("evaluate", ctx.config.snapshot(), ctx.seed, ctx.jobs);
  const MeshCollection loaded = load_collection(flags.manifest);
  log.add_input(flags.manifest);
  const MeshCollection collection =
      loaded.complete() ? loaded : complete_missing(loaded);

  if (flags.fixed_speaker >= collection.speaker_count())
    throw ConfigError("--fixed-speaker out of range");
  if (flags.fixed_pose >= collection.pose_count())
    throw ConfigError("--fixed-pose out of range");
  if (flags.regions.empty() != flags.region.empty())
    throw ConfigError("--regions and --region must be given together");

  const MultilinearModel model = hosvd(build_tensor(collection), collection);

  std::vector<std::uint32_t> region(model.vertex_count());
  std::iota(region.begin(), region.end(), 0);
  if (!flags.regions.empty()) {
    const RegionMasks masks = load_region_masks(flags.regions);
    log.add_input(flags.regions);
    bool found = false;
    for (const auto& [name, vertices] : masks)
      if (name == flags.region) {
        region = vertices;
        found = true;
      }
    if (!found)
      throw ConfigError("--region '" + flags.region + "' not in " +
                        flags.regions);
  }

  std::filesystem::create_directories(flags.out_dir);
  const std::filesystem::path out(flags.out_dir);
  const double h = ctx.config.evaluate.generalization_h;
  const std::size_t samples = ctx.config.evaluate.specificity_samples;

  save_curves(compactness(model, TensorMode::Speaker),
              (out / "compactness_speaker").string(), log);
  save_curves(compactness(model, TensorMode::Pose),
              (out / "compactness_pose").string(), log);
  log.stamp("compactness");

  save_curves(generalization(collection, TensorMode::Speaker, flags.fixed_pose,
                             h, ctx.jobs),
              (out / "generalization_speaker").string(), log);
  save_curves(generalization(collection, TensorMode::Pose,
                             flags.fixed_speaker, h, ctx.jobs),
              (out / "generalization_pose").string(), log);
  log.stamp("generalization");

  save_curves(specificity(model, collection, region, TensorMode::Speaker,
                          flags.fixed_pose, samples, ctx.seed, ctx.jobs),
              (out / "specificity_speaker").string(), log);
  save_curves(specificity(model, collection, region, TensorMode::Pose,
                          flags.fixed_speaker, samples, ctx.seed, ctx.jobs),
              (out / "specificity_pose").string(), log);
  log.stamp("specificity");
  log.write(ctx.log);
}

void cmd_track(const Context& ctx, const TrackFlags& flags) {
  RunLog log("track", ctx.config.snapshot(), ctx.seed, ctx.jobs);
  TrackConfig cfg = ctx.config.track;
  if (!flags.mode.empty()) {
    if (flags.mode == "free")
      cfg.mode = AnatomyMode::Free;
    else if (flags.mode == "fixed")
      cfg.mode = AnatomyMode::Fixed;
    else
      throw ConfigError("--mode must be 'free' or 'fixed', got '" +
                        flags.mode + "'");
  }
  if (cfg.mode == AnatomyMode::Fixed && flags.anatomy.empty())
    throw ConfigError("fixed mode needs --anatomy with speaker coordinates");

  const MultilinearModel model = load_model(flags.model);
  log.add_input(flags.model);
  const MarkerSequence sequence = load_markers(flags.markers);
  log.add_input(flags.markers);
  const MarkerCorrespondences corr =
      load_marker_correspondences(flags.correspondences);
  log.add_input(flags.correspondences);
  if (!flags.anatomy.empty()) {
    cfg.fixed_speaker = load_speaker_coords(flags.anatomy);
    log.add_input(flags.anatomy);
  }

  const Trajectory trajectory = track(model, sequence, corr, cfg);
  log.stamp("track");

  std::ofstream out(flags.out);
  if (!out) throw std::runtime_error("cannot write trajectory: " + flags.out);
  out << "frame,time,energy,mean_residual";
  for (std::size_t i = 0; i < model.speaker_rank(); ++i) out << ",s" << i;
  for (std::size_t i = 0; i < model.pose_rank(); ++i) out << ",p" << i;
  out << "\n";
  for (std::size_t f = 0; f < trajectory.frames.size(); ++f) {
    const TrackedFrame& frame = trajectory.frames[f];
    out << f << "," << fmt(sequence.times[f]) << "," << fmt(frame.energy)
        << "," << fmt(frame.mean_residual);
    for (long i = 0; i < frame.speaker.size(); ++i)
      out << "," << fmt(frame.speaker[i]);
    for (long i = 0; i < frame.pose.size(); ++i) out << "," << fmt(frame.pose[i]);
    out << "\n";
  }
  out.close();
  log.add_output(flags.out);

  double mean_residual = 0.0;
  for (const auto& frame : trajectory.frames)
    mean_residual += frame.mean_residual;
  if (!trajectory.frames.empty())
    mean_residual /= static_cast<double>(trajectory.frames.size());
  log.note("mean_residual", mean_residual);

  if (!flags.out_anatomy.empty()) {
    write_coords(flags.out_anatomy, estimate_anatomy(trajectory), nullptr);
    log.add_output(flags.out_anatomy);
  }
  log.write(ctx.log);
}

void cmd_synth(const Context& ctx, const SynthFlags& flags) {
  RunLog log("synth", ctx.config.snapshot(), ctx.seed, ctx.jobs);
  const SynthSection& sy = ctx.config.synth;
  std::filesystem::create_directories(flags.out_dir);
  const std::filesystem::path out(flags.out_dir);

  SurfaceMesh templ;
  if (sy.surface == "tongue") {
    templ = make_tongue_template();
  } else {
    templ = make_closed_surface(sy.sphere_radius, sy.sphere_subdivisions, 0.15,
                                mix_seed(ctx.seed, 1));
    const std::size_t n = templ.vertex_count();
    templ.landmarks = {{"a", 0},
                       {"b", static_cast<std::uint32_t>(n / 4)},
                       {"c", static_cast<std::uint32_t>(n / 2)},
                       {"d", static_cast<std::uint32_t>(3 * n / 4)}};
  }

  save_obj(templ, (out / "template.obj").string());
  log.add_output((out / "template.obj").string());
  save_template_landmarks(templ.landmarks,
                          (out / "template_landmarks.json").string());
  log.add_output((out / "template_landmarks.json").string());

  if (sy.surface == "tongue") {
    save_region_masks(tongue_regions(templ), (out / "regions.json").string());
    log.add_output((out / "regions.json").string());
  }
  const std::vector<std::uint32_t> mask = midsagittal_mask(templ);
  save_region_masks({{"midsagittal", mask}},
                    (out / "midsagittal.json").string());
  log.add_output((out / "midsagittal.json").string());

  SynthModelSpec model_spec;
  model_spec.speakers = sy.speakers;
  model_spec.poses = sy.poses;
  model_spec.speaker_rank = sy.speaker_rank;
  model_spec.pose_rank = sy.pose_rank;
  model_spec.amplitude = sy.amplitude;
  model_spec.seed = mix_seed(ctx.seed, 2);
  const SynthModelResult synth = synth_model(templ, model_spec);
  log.stamp("model");

  save_collection(synth.collection, (out / "meshes").string(),
                  (out / "collection.json").string());
  log.add_output((out / "collection.json").string());
  save_model(synth.model, (out / "model.mltm").string());
  log.add_output((out / "model.mltm").string());

  // One cloud and one landmark file per training mesh, tied together by
  // a scan manifest, so the matching pipeline can run on this corpus.
  std::filesystem::create_directories(out / "clouds");
  std::filesystem::create_directories(out / "landmarks");
  json scans;
  scans["speakers"] = synth.collection.speakers;
  scans["poses"] = synth.collection.poses;
  scans["scans"] = json::array();
  for (std::size_t i = 0; i < synth.collection.speaker_count(); ++i)
    for (std::size_t k = 0; k < synth.collection.pose_count(); ++k) {
      const SurfaceMesh& mesh = *synth.collection.cells[i][k];
      const std::string stem =
          synth.collection.speakers[i] + "_" + synth.collection.poses[k];
      SynthCloudSpec cloud_spec;
      cloud_spec.density = sy.cloud_density;
      cloud_spec.noise_sigma = sy.cloud_noise;
      cloud_spec.seed = mix_seed(mix_seed(ctx.seed, 3),
                                 i * synth.collection.pose_count() + k);
      const OrientedPointCloud cloud = synth_cloud(mesh, cloud_spec);
      save_cloud(cloud, (out / "clouds" / (stem + ".obj")).string());

      LandmarkSet landmarks;
      for (const auto& [name, index] : templ.landmarks)
        landmarks.push_back({name, mesh.vertices[index]});
      save_scan_landmarks(landmarks,
                          (out / "landmarks" / (stem + ".json")).string());

      scans["scans"].push_back(
          {{"speaker", synth.collection.speakers[i]},
           {"pose", synth.collection.poses[k]},
           {"cloud", "clouds/" + stem + ".obj"},
           {"landmarks", "landmarks/" + stem + ".json"}});
    }
  {
    std::ofstream scan_out((out / "scans.json").string());
    if (!scan_out)
      throw std::runtime_error("cannot write scan manifest: " +
                               (out / "scans.json").string());
    scan_out << scans.dump(2) << "\n";
  }
  log.add_output((out / "scans.json").string());
  log.stamp("clouds");

  // Marker vertices spread evenly along the midsagittal band.
  if (sy.markers == 0 || sy.markers > mask.size())
    throw ConfigError("synth.markers must be in [1, midsagittal size]");
  std::vector<std::uint32_t> marker_vertices;
  std::vector<std::string> marker_names;
  for (std::size_t i = 0; i < sy.markers; ++i) {
    marker_vertices.push_back(mask[(2 * i + 1) * mask.size() /
                                   (2 * sy.markers)]);
    marker_names.push_back("m" + std::to_string(i));
  }

  SynthSequenceSpec seq_spec;
  seq_spec.frames = sy.frames;
  seq_spec.seed = mix_seed(ctx.seed, 4);
  const SynthSequenceResult seq =
      synth_sequence(synth.model, marker_names, marker_vertices, seq_spec);
  log.stamp("sequence");

  save_markers(seq.sequence, (out / "markers.json").string());
  log.add_output((out / "markers.json").string());
  MarkerCorrespondences corr;
  for (std::size_t i = 0; i < sy.markers; ++i)
    corr[marker_names[i]] = marker_vertices[i];
  save_marker_correspondences(
      corr, (out / "marker_correspondences.json").string());
  log.add_output((out / "marker_correspondences.json").string());

  json truth;
  truth["speaker"] = to_vector(seq.true_speaker);
  truth["poses"] = json::array();
  for (const auto& pose : seq.true_poses) truth["poses"].push_back(to_vector(pose));
  {
    std::ofstream truth_out((out / "sequence_truth.json").string());
    if (!truth_out)
      throw std::runtime_error("cannot write sequence truth: " +
                               (out / "sequence_truth.json").string());
    truth_out << truth.dump(2) << "\n";
  }
  log.add_output((out / "sequence_truth.json").string());

  // Watertight solid rasterized to a two-plateau gray phantom for the
  // volume pipeline.
  const SurfaceMesh solid = make_closed_surface(
      sy.sphere_radius, sy.sphere_subdivisions, 0.15, mix_seed(ctx.seed, 5));
  SynthVolumeSpec vol_spec;
  vol_spec.noise_sigma = sy.phantom_noise;
  vol_spec.seed = mix_seed(ctx.seed, 6);
  save_volume(synth_volume(solid, vol_spec), (out / "phantom.mvol").string());
  log.add_output((out / "phantom.mvol").string());
  log.stamp("phantom");
  log.write(ctx.log);
}

}  // namespace artic::cli
