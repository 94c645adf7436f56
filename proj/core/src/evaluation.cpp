#include "artic/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "artic/fitting.hpp"
#include "artic/hash.hpp"
#include "artic/parallel.hpp"
#include "artic/random.hpp"

namespace artic {
namespace {

void append_stats(MetricCurve& curve, std::size_t dimension,
                  const std::vector<double>& values) {
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  if (values.size() > 1) {
    for (const double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size() - 1);
  }
  curve.dimension.push_back(dimension);
  curve.mean.push_back(mean);
  curve.stddev.push_back(std::sqrt(var));
}

double mean_vertex_distance(const SurfaceMesh& a, const SurfaceMesh& b) {
  double sum = 0.0;
  for (std::size_t v = 0; v < a.vertices.size(); ++v)
    sum += (a.vertices[v] - b.vertices[v]).norm();
  return sum / static_cast<double>(a.vertices.size());
}

double region_distance(const SurfaceMesh& a, const SurfaceMesh& b,
                       const std::vector<std::uint32_t>& region) {
  double sum = 0.0;
  for (const std::uint32_t v : region)
    sum += (a.vertices[v] - b.vertices[v]).norm();
  return sum / static_cast<double>(region.size());
}

std::vector<const SurfaceMesh*> flatten(const MeshCollection& collection) {
  std::vector<const SurfaceMesh*> meshes;
  for (const auto& row : collection.cells)
    for (const auto& cell : row) {
      if (!cell) throw std::invalid_argument("evaluate: incomplete collection");
      meshes.push_back(&*cell);
    }
  return meshes;
}

void check_region(const std::vector<std::uint32_t>& region,
                  std::size_t vertex_count) {
  if (region.empty()) throw std::invalid_argument("evaluate: empty region");
  for (const std::uint32_t v : region)
    if (v >= vertex_count)
      throw std::invalid_argument("evaluate: region vertex out of range");
}

Eigen::VectorXd draw_coords(const ModeStatistics& stats, Rng& rng) {
  Eigen::VectorXd x(stats.mean.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x[i] = stats.mean[i] + stats.stddev[i] * rng.truncated_normal(3.0);
  return x;
}

MeshCollection drop_speaker(const MeshCollection& collection,
                            std::size_t skip) {
  MeshCollection sub;
  sub.poses = collection.poses;
  for (std::size_t i = 0; i < collection.speakers.size(); ++i) {
    if (i == skip) continue;
    sub.speakers.push_back(collection.speakers[i]);
    sub.cells.push_back(collection.cells[i]);
  }
  return sub;
}

MeshCollection drop_pose(const MeshCollection& collection, std::size_t skip) {
  MeshCollection sub;
  sub.speakers = collection.speakers;
  for (std::size_t j = 0; j < collection.poses.size(); ++j)
    if (j != skip) sub.poses.push_back(collection.poses[j]);
  sub.cells.resize(collection.cells.size());
  for (std::size_t i = 0; i < collection.cells.size(); ++i)
    for (std::size_t j = 0; j < collection.poses.size(); ++j)
      if (j != skip) sub.cells[i].push_back(collection.cells[i][j]);
  return sub;
}

}  // namespace

void MetricCurve::validate() const {
  if (dimension.size() != mean.size() || dimension.size() != stddev.size())
    throw std::invalid_argument("curve: column length mismatch");
  for (std::size_t i = 1; i < dimension.size(); ++i)
    if (dimension[i] <= dimension[i - 1])
      throw std::invalid_argument("curve: dimensions not increasing");
}

MetricCurve compactness(const MultilinearModel& model, TensorMode mode) {
  model.validate();
  const Eigen::VectorXd& sigma = mode == TensorMode::Speaker
                                     ? model.speaker_singular_values
                                     : model.pose_singular_values;
  const double total = sigma.squaredNorm();
  if (!(total > 0.0))
    throw std::invalid_argument("compactness: zero total variance");
  MetricCurve curve;
  double partial = 0.0;
  for (Eigen::Index d = 0; d < sigma.size(); ++d) {
    partial += sigma[d] * sigma[d];
    curve.dimension.push_back(static_cast<std::size_t>(d) + 1);
    curve.mean.push_back(100.0 * partial / total);
    curve.stddev.push_back(0.0);
  }
  return curve;
}

MetricCurve generalization(const MeshCollection& collection, TensorMode mode,
                           std::size_t fixed_other, double h, int jobs,
                           bool hold_in) {
  collection.validate();
  if (!collection.complete())
    throw std::invalid_argument("generalization: incomplete collection");
  if (fixed_other < 1)
    throw std::invalid_argument("generalization: fixed dimension < 1");
  const bool by_speaker = mode == TensorMode::Speaker;
  const std::size_t folds =
      by_speaker ? collection.speaker_count() : collection.pose_count();
  const std::size_t others =
      by_speaker ? collection.pose_count() : collection.speaker_count();
  if (!hold_in && folds < 2)
    throw std::invalid_argument("generalization: needs two slices");

  const std::size_t max_dim = hold_in ? folds : folds - 1;

  FitConfig config;
  config.alpha = 1.0;
  config.gamma = 0.0;
  config.h = h;
  config.rescale = false;

  // errors[fold][d - 1][other]
  std::vector<std::vector<std::vector<double>>> errors(
      folds, std::vector<std::vector<double>>(max_dim));

  MultilinearModel full_model;
  if (hold_in) {
    const TrainingTensor tensor = build_tensor(collection);
    full_model = hosvd(tensor, collection);
  }

  parallel_for(folds, jobs, [&](std::size_t fold) {
    MultilinearModel base;
    if (hold_in) {
      base = full_model;
    } else {
      const MeshCollection sub = by_speaker ? drop_speaker(collection, fold)
                                            : drop_pose(collection, fold);
      const TrainingTensor tensor = build_tensor(sub);
      base = hosvd(tensor, sub);
    }
    const std::size_t other_rank =
        by_speaker ? base.pose_rank() : base.speaker_rank();
    const std::size_t fixed = std::min(fixed_other, other_rank);
    for (std::size_t d = 1; d <= max_dim; ++d) {
      const std::size_t varied_rank =
          by_speaker ? base.speaker_rank() : base.pose_rank();
      const MultilinearModel trunc =
          by_speaker ? truncate(base, std::min(d, varied_rank), fixed)
                     : truncate(base, fixed, std::min(d, varied_rank));
      errors[fold][d - 1].resize(others);
      for (std::size_t other = 0; other < others; ++other) {
        const SurfaceMesh& held = by_speaker
                                      ? *collection.cells[fold][other]
                                      : *collection.cells[other][fold];
        const FitResult fit =
            fit_fixed(trunc, held.vertices, {}, config);
        errors[fold][d - 1][other] = mean_vertex_distance(fit.mesh, held);
      }
    }
  });

  MetricCurve curve;
  for (std::size_t d = 1; d <= max_dim; ++d) {
    std::vector<double> values;
    values.reserve(folds * others);
    for (std::size_t fold = 0; fold < folds; ++fold)
      for (const double v : errors[fold][d - 1]) values.push_back(v);
    append_stats(curve, d, values);
  }
  return curve;
}

MetricCurve specificity(const MultilinearModel& model,
                        const MeshCollection& collection,
                        const std::vector<std::uint32_t>& region,
                        TensorMode mode, std::size_t fixed_other,
                        std::size_t samples, std::uint64_t seed, int jobs) {
  model.validate();
  collection.validate();
  if (samples < 1) throw std::invalid_argument("specificity: samples < 1");
  const auto meshes = flatten(collection);
  if (meshes.front()->vertices.size() != model.vertex_count())
    throw std::invalid_argument("specificity: model/collection mismatch");
  check_region(region, model.vertex_count());

  const bool by_speaker = mode == TensorMode::Speaker;
  const std::size_t max_dim =
      by_speaker ? model.speaker_rank() : model.pose_rank();
  const std::size_t fixed = std::min(
      fixed_other, by_speaker ? model.pose_rank() : model.speaker_rank());
  if (fixed < 1) throw std::invalid_argument("specificity: fixed rank < 1");

  MetricCurve curve;
  std::vector<double> values(samples);
  for (std::size_t d = 1; d <= max_dim; ++d) {
    const MultilinearModel trunc =
        by_speaker ? truncate(model, d, fixed) : truncate(model, fixed, d);
    parallel_for(samples, jobs, [&](std::size_t n) {
      Rng rng(mix_seed(seed, (d - 1) * samples + n));
      const Eigen::VectorXd s = draw_coords(trunc.speaker_stats, rng);
      const Eigen::VectorXd p = draw_coords(trunc.pose_stats, rng);
      const SurfaceMesh sample = generate(trunc, s, p);
      double best = std::numeric_limits<double>::infinity();
      for (const SurfaceMesh* mesh : meshes)
        best = std::min(best, region_distance(sample, *mesh, region));
      values[n] = best;
    });
    append_stats(curve, d, values);
  }
  return curve;
}

MetricCurve fixed_phone_specificity(const MultilinearModel& model,
                                    const MeshCollection& collection,
                                    const std::string& phone,
                                    const std::vector<std::uint32_t>& region,
                                    std::size_t samples, std::uint64_t seed,
                                    int jobs) {
  model.validate();
  collection.validate();
  if (samples < 1) throw std::invalid_argument("specificity: samples < 1");
  check_region(region, model.vertex_count());
  const auto it =
      std::find(collection.poses.begin(), collection.poses.end(), phone);
  if (it == collection.poses.end())
    throw std::invalid_argument("specificity: unknown phone: " + phone);
  const auto phone_index =
      static_cast<std::size_t>(it - collection.poses.begin());
  if (collection.pose_count() != static_cast<std::size_t>(
                                     model.pose_modes.rows()))
    throw std::invalid_argument("specificity: model/collection mismatch");

  std::vector<const SurfaceMesh*> meshes;
  for (const auto& row : collection.cells) {
    if (!row[phone_index])
      throw std::invalid_argument("specificity: incomplete phone column");
    meshes.push_back(&*row[phone_index]);
  }
  if (meshes.front()->vertices.size() != model.vertex_count())
    throw std::invalid_argument("specificity: model/collection mismatch");

  MetricCurve curve;
  std::vector<double> values(samples);
  for (std::size_t d = 1; d <= model.speaker_rank(); ++d) {
    const MultilinearModel trunc = truncate(model, d, model.pose_rank());
    const Eigen::VectorXd p =
        trunc.pose_modes.row(static_cast<Eigen::Index>(phone_index))
            .transpose();
    parallel_for(samples, jobs, [&](std::size_t n) {
      Rng rng(mix_seed(seed, (d - 1) * samples + n));
      const Eigen::VectorXd s = draw_coords(trunc.speaker_stats, rng);
      const SurfaceMesh sample = generate(trunc, s, p);
      double best = std::numeric_limits<double>::infinity();
      for (const SurfaceMesh* mesh : meshes)
        best = std::min(best, region_distance(sample, *mesh, region));
      values[n] = best;
    });
    append_stats(curve, d, values);
  }
  return curve;
}

void save_curve_csv(const MetricCurve& curve, const std::string& path) {
  curve.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("curve: cannot write: " + path);
  out << "dimension,mean,std\n";
  char buf[128];
  for (std::size_t i = 0; i < curve.dimension.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", curve.dimension[i],
                  curve.mean[i], curve.stddev[i]);
    out << buf;
  }
}

void save_curve_dat(const MetricCurve& curve, const std::string& path) {
  curve.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("curve: cannot write: " + path);
  out << "# dimension mean std\n";
  char buf[128];
  for (std::size_t i = 0; i < curve.dimension.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu %.17g %.17g\n", curve.dimension[i],
                  curve.mean[i], curve.stddev[i]);
    out << buf;
  }
}

MetricCurve load_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("curve: cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "dimension,mean,std")
    throw std::runtime_error("curve: bad header: " + path);
  MetricCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    std::size_t d = 0;
    double mean = 0.0, stddev = 0.0;
    if (!(row >> d >> mean >> stddev))
      throw std::runtime_error("curve: bad row: " + path);
    curve.dimension.push_back(d);
    curve.mean.push_back(mean);
    curve.stddev.push_back(stddev);
  }
  curve.validate();
  return curve;
}

}  // namespace artic
