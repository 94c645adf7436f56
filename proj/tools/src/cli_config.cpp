#include "cli_config.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>

namespace artic::cli {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw ConfigError("config: unknown key '" + where + key + "'");
}

double get_double(const json& j, const std::string& where, const char* key,
                  double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number())
    throw ConfigError("config: '" + where + key + "' must be a number");
  return j[key].get<double>();
}

int get_int(const json& j, const std::string& where, const char* key,
            int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer())
    throw ConfigError("config: '" + where + key + "' must be an integer");
  return j[key].get<int>();
}

std::size_t get_size(const json& j, const std::string& where, const char* key,
                     std::size_t fallback) {
  const int v = get_int(j, where, key, static_cast<int>(fallback));
  if (v < 0)
    throw ConfigError("config: '" + where + key + "' must be nonnegative");
  return static_cast<std::size_t>(v);
}

std::string get_string(const json& j, const std::string& where,
                       const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string())
    throw ConfigError("config: '" + where + key + "' must be a string");
  return j[key].get<std::string>();
}

bool get_bool(const json& j, const std::string& where, const char* key,
              bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean())
    throw ConfigError("config: '" + where + key + "' must be a boolean");
  return j[key].get<bool>();
}

void read_match(const json& j, const std::string& where, MatchWeights& w) {
  check_keys(j, where,
             {"alpha", "beta", "beta_min", "gamma", "gamma_min",
              "series_length", "search_radius", "max_normal_angle"});
  w.alpha = get_double(j, where, "alpha", w.alpha);
  w.beta = get_double(j, where, "beta", w.beta);
  w.beta_min = get_double(j, where, "beta_min", w.beta_min);
  w.gamma = get_double(j, where, "gamma", w.gamma);
  w.gamma_min = get_double(j, where, "gamma_min", w.gamma_min);
  w.series_length = get_int(j, where, "series_length", w.series_length);
  w.search_radius = get_double(j, where, "search_radius", w.search_radius);
  w.max_normal_angle =
      get_double(j, where, "max_normal_angle", w.max_normal_angle);
  w.validate();
}

void read_fit(const json& j, const std::string& where, FitConfig& f) {
  check_keys(j, where,
             {"alpha", "gamma", "h", "series", "alternations", "search_radius",
              "max_normal_angle", "convergence_tolerance", "max_alternations",
              "rescale"});
  f.alpha = get_double(j, where, "alpha", f.alpha);
  f.gamma = get_double(j, where, "gamma", f.gamma);
  f.h = get_double(j, where, "h", f.h);
  f.series = get_int(j, where, "series", f.series);
  f.alternations = get_int(j, where, "alternations", f.alternations);
  f.search_radius = get_double(j, where, "search_radius", f.search_radius);
  f.max_normal_angle =
      get_double(j, where, "max_normal_angle", f.max_normal_angle);
  f.convergence_tolerance =
      get_double(j, where, "convergence_tolerance", f.convergence_tolerance);
  f.max_alternations =
      get_int(j, where, "max_alternations", f.max_alternations);
  f.rescale = get_bool(j, where, "rescale", f.rescale);
  f.validate();
}

json match_json(const MatchWeights& w) {
  return {{"alpha", w.alpha},
          {"beta", w.beta},
          {"beta_min", w.beta_min},
          {"gamma", w.gamma},
          {"gamma_min", w.gamma_min},
          {"series_length", w.series_length},
          {"search_radius", w.search_radius},
          {"max_normal_angle", w.max_normal_angle}};
}

json fit_json(const FitConfig& f) {
  return {{"alpha", f.alpha},
          {"gamma", f.gamma},
          {"h", f.h},
          {"series", f.series},
          {"alternations", f.alternations},
          {"search_radius", f.search_radius},
          {"max_normal_angle", f.max_normal_angle},
          {"convergence_tolerance", f.convergence_tolerance},
          {"max_alternations", f.max_alternations},
          {"rescale", f.rescale}};
}

}  // namespace

PipelineConfig::PipelineConfig() {
  palate_match.gamma_min = 10.0;
  palate_match.series_length = 10;
  tongue_fit.h = 0.5;
  palate_fit.h = 1.0;
}

std::string PipelineConfig::require_path(const std::string& key,
                                         const std::string& flag_value) const {
  const std::string path = optional_path(key, flag_value);
  if (path.empty())
    throw ConfigError("missing required path '" + key +
                      "' (flag or config paths entry)");
  return path;
}

std::string PipelineConfig::optional_path(
    const std::string& key, const std::string& flag_value) const {
  if (!flag_value.empty()) return flag_value;
  const auto it = paths.find(key);
  return it == paths.end() ? std::string() : it->second;
}

nlohmann::json PipelineConfig::snapshot() const {
  json j;
  j["seed"] = seed;
  j["jobs"] = jobs;
  j["diffusion"] = {{"sigma", diffusion.sigma},
                    {"lambda", diffusion.lambda},
                    {"tau", diffusion.tau},
                    {"steps", diffusion.steps}};
  j["tongue_match"] = match_json(tongue_match);
  j["palate_match"] = match_json(palate_match);
  j["palate_align"] = {{"profile_length", palate_align.profile_length},
                       {"profile_step", palate_align.profile_step},
                       {"max_sweeps", palate_align.max_sweeps},
                       {"starts", palate_align.starts},
                       {"translation_jitter", palate_align.translation_jitter},
                       {"rotation_jitter_deg",
                        palate_align.rotation_jitter_deg}};
  j["augment"] = {{"footprint_scale", augment.footprint_scale}};
  j["tongue_fit"] = fit_json(tongue_fit);
  j["palate_fit"] = fit_json(palate_fit);
  j["bootstrap"] = {{"tongue_iterations", bootstrap.tongue_iterations},
                    {"palate_iterations", bootstrap.palate_iterations},
                    {"mode", bootstrap.mode}};
  j["evaluate"] = {{"generalization_h", evaluate.generalization_h},
                   {"specificity_samples", evaluate.specificity_samples}};
  j["track"] = {{"alpha", track.alpha},
                {"beta", track.beta},
                {"gamma", track.gamma},
                {"h", track.h},
                {"mode", track.mode == AnatomyMode::Fixed ? "fixed" : "free"},
                {"convergence_tolerance", track.convergence_tolerance},
                {"max_alternations", track.max_alternations}};
  j["model"] = {{"speaker_rank", model.speaker_rank},
                {"pose_rank", model.pose_rank}};
  j["synth"] = {{"surface", synth.surface},
                {"sphere_radius", synth.sphere_radius},
                {"sphere_subdivisions", synth.sphere_subdivisions},
                {"speakers", synth.speakers},
                {"poses", synth.poses},
                {"speaker_rank", synth.speaker_rank},
                {"pose_rank", synth.pose_rank},
                {"amplitude", synth.amplitude},
                {"cloud_density", synth.cloud_density},
                {"cloud_noise", synth.cloud_noise},
                {"frames", synth.frames},
                {"markers", synth.markers},
                {"phantom_noise", synth.phantom_noise}};
  j["paths"] = paths;
  return j;
}

PipelineConfig load_config(const std::string& path) {
  PipelineConfig cfg;
  if (path.empty()) return cfg;

  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  check_keys(j, "",
             {"seed", "jobs", "diffusion", "tongue_match", "palate_match",
              "palate_align", "augment", "tongue_fit", "palate_fit",
              "bootstrap", "evaluate", "track", "model", "synth", "paths"});

  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0)
      throw ConfigError("config: 'seed' must be a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  cfg.jobs = get_int(j, "", "jobs", cfg.jobs);
  if (cfg.jobs < 1) throw ConfigError("config: 'jobs' must be positive");

  if (j.contains("diffusion")) {
    const json& d = j["diffusion"];
    check_keys(d, "diffusion.", {"sigma", "lambda", "tau", "steps"});
    cfg.diffusion.sigma = get_double(d, "diffusion.", "sigma",
                                     cfg.diffusion.sigma);
    cfg.diffusion.lambda = get_double(d, "diffusion.", "lambda",
                                      cfg.diffusion.lambda);
    cfg.diffusion.tau = get_double(d, "diffusion.", "tau", cfg.diffusion.tau);
    cfg.diffusion.steps = get_int(d, "diffusion.", "steps",
                                  cfg.diffusion.steps);
    if (cfg.diffusion.sigma <= 0 || cfg.diffusion.lambda <= 0 ||
        cfg.diffusion.tau <= 0 || cfg.diffusion.steps < 1)
      throw ConfigError("config: diffusion parameters must be positive");
  }

  if (j.contains("tongue_match"))
    read_match(j["tongue_match"], "tongue_match.", cfg.tongue_match);
  if (j.contains("palate_match"))
    read_match(j["palate_match"], "palate_match.", cfg.palate_match);

  if (j.contains("palate_align")) {
    const json& p = j["palate_align"];
    check_keys(p, "palate_align.",
               {"profile_length", "profile_step", "max_sweeps", "starts",
                "translation_jitter", "rotation_jitter_deg"});
    auto& a = cfg.palate_align;
    a.profile_length = get_int(p, "palate_align.", "profile_length",
                               a.profile_length);
    a.profile_step = get_double(p, "palate_align.", "profile_step",
                                a.profile_step);
    a.max_sweeps = get_int(p, "palate_align.", "max_sweeps", a.max_sweeps);
    a.starts = get_int(p, "palate_align.", "starts", a.starts);
    a.translation_jitter = get_double(p, "palate_align.", "translation_jitter",
                                      a.translation_jitter);
    a.rotation_jitter_deg = get_double(
        p, "palate_align.", "rotation_jitter_deg", a.rotation_jitter_deg);
    if (a.profile_length < 1 || a.profile_step <= 0 || a.max_sweeps < 1 ||
        a.starts < 1 || a.translation_jitter < 0 || a.rotation_jitter_deg < 0)
      throw ConfigError("config: invalid palate_align parameters");
  }

  if (j.contains("augment")) {
    const json& aj = j["augment"];
    check_keys(aj, "augment.", {"footprint_scale"});
    cfg.augment.footprint_scale = get_double(aj, "augment.", "footprint_scale",
                                             cfg.augment.footprint_scale);
    if (cfg.augment.footprint_scale <= 0)
      throw ConfigError("config: 'augment.footprint_scale' must be positive");
  }

  if (j.contains("tongue_fit"))
    read_fit(j["tongue_fit"], "tongue_fit.", cfg.tongue_fit);
  if (j.contains("palate_fit"))
    read_fit(j["palate_fit"], "palate_fit.", cfg.palate_fit);

  if (j.contains("bootstrap")) {
    const json& b = j["bootstrap"];
    check_keys(b, "bootstrap.",
               {"tongue_iterations", "palate_iterations", "mode"});
    cfg.bootstrap.tongue_iterations = get_int(
        b, "bootstrap.", "tongue_iterations", cfg.bootstrap.tongue_iterations);
    cfg.bootstrap.palate_iterations = get_int(
        b, "bootstrap.", "palate_iterations", cfg.bootstrap.palate_iterations);
    cfg.bootstrap.mode = get_string(b, "bootstrap.", "mode",
                                    cfg.bootstrap.mode);
    if (cfg.bootstrap.mode != "multilinear" &&
        cfg.bootstrap.mode != "single-mode")
      throw ConfigError(
          "config: 'bootstrap.mode' must be multilinear or single-mode");
    if (cfg.bootstrap.tongue_iterations < 1 ||
        cfg.bootstrap.palate_iterations < 1)
      throw ConfigError("config: bootstrap iterations must be positive");
  }

  if (j.contains("evaluate")) {
    const json& e = j["evaluate"];
    check_keys(e, "evaluate.", {"generalization_h", "specificity_samples"});
    cfg.evaluate.generalization_h = get_double(
        e, "evaluate.", "generalization_h", cfg.evaluate.generalization_h);
    cfg.evaluate.specificity_samples = get_size(
        e, "evaluate.", "specificity_samples", cfg.evaluate.specificity_samples);
    if (cfg.evaluate.generalization_h <= 0 ||
        cfg.evaluate.specificity_samples < 1)
      throw ConfigError("config: invalid evaluate parameters");
  }

  if (j.contains("track")) {
    const json& t = j["track"];
    check_keys(t, "track.",
               {"alpha", "beta", "gamma", "h", "mode", "convergence_tolerance",
                "max_alternations"});
    cfg.track.alpha = get_double(t, "track.", "alpha", cfg.track.alpha);
    cfg.track.beta = get_double(t, "track.", "beta", cfg.track.beta);
    cfg.track.gamma = get_double(t, "track.", "gamma", cfg.track.gamma);
    cfg.track.h = get_double(t, "track.", "h", cfg.track.h);
    const std::string mode = get_string(t, "track.", "mode", "free");
    if (mode == "free")
      cfg.track.mode = AnatomyMode::Free;
    else if (mode == "fixed")
      cfg.track.mode = AnatomyMode::Fixed;
    else
      throw ConfigError("config: 'track.mode' must be free or fixed");
    cfg.track.convergence_tolerance = get_double(
        t, "track.", "convergence_tolerance", cfg.track.convergence_tolerance);
    cfg.track.max_alternations =
        get_int(t, "track.", "max_alternations", cfg.track.max_alternations);
  }

  if (j.contains("model")) {
    const json& m = j["model"];
    check_keys(m, "model.", {"speaker_rank", "pose_rank"});
    cfg.model.speaker_rank =
        get_size(m, "model.", "speaker_rank", cfg.model.speaker_rank);
    cfg.model.pose_rank = get_size(m, "model.", "pose_rank",
                                   cfg.model.pose_rank);
  }

  if (j.contains("synth")) {
    const json& s = j["synth"];
    check_keys(s, "synth.",
               {"surface", "sphere_radius", "sphere_subdivisions", "speakers",
                "poses", "speaker_rank", "pose_rank", "amplitude",
                "cloud_density", "cloud_noise", "frames", "markers",
                "phantom_noise"});
    auto& sy = cfg.synth;
    sy.surface = get_string(s, "synth.", "surface", sy.surface);
    if (sy.surface != "tongue" && sy.surface != "sphere")
      throw ConfigError("config: 'synth.surface' must be tongue or sphere");
    sy.sphere_radius = get_double(s, "synth.", "sphere_radius",
                                  sy.sphere_radius);
    sy.sphere_subdivisions = get_int(s, "synth.", "sphere_subdivisions",
                                     sy.sphere_subdivisions);
    sy.speakers = get_size(s, "synth.", "speakers", sy.speakers);
    sy.poses = get_size(s, "synth.", "poses", sy.poses);
    sy.speaker_rank = get_size(s, "synth.", "speaker_rank", sy.speaker_rank);
    sy.pose_rank = get_size(s, "synth.", "pose_rank", sy.pose_rank);
    sy.amplitude = get_double(s, "synth.", "amplitude", sy.amplitude);
    sy.cloud_density = get_double(s, "synth.", "cloud_density",
                                  sy.cloud_density);
    sy.cloud_noise = get_double(s, "synth.", "cloud_noise", sy.cloud_noise);
    sy.frames = get_size(s, "synth.", "frames", sy.frames);
    sy.markers = get_size(s, "synth.", "markers", sy.markers);
    sy.phantom_noise = get_double(s, "synth.", "phantom_noise",
                                  sy.phantom_noise);
  }

  if (j.contains("paths")) {
    const json& p = j["paths"];
    check_keys(p, "paths.",
               {"template", "palate_template", "template_landmarks",
                "palate_landmarks", "region_masks", "midsagittal_mask",
                "model", "markers", "marker_correspondences", "manifest"});
    for (const auto& [key, value] : p.items()) {
      if (!value.is_string())
        throw ConfigError("config: 'paths." + key + "' must be a string");
      cfg.paths[key] = value.get<std::string>();
    }
    const std::filesystem::path base =
        std::filesystem::path(path).parent_path();
    for (auto& [key, entry] : cfg.paths) {
      if (entry.empty()) continue;
      std::filesystem::path e(entry);
      if (e.is_relative()) e = base / e;
      if (!std::filesystem::exists(e))
        throw ConfigError("config: path for '" + key +
                          "' does not exist: " + e.string());
      entry = e.string();
    }
  }

  return cfg;
}

}  // namespace artic::cli
