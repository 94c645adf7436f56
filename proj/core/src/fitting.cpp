#include "artic/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <stdexcept>

#include "artic/optim.hpp"
#include "artic/parallel.hpp"

namespace artic {
namespace {

struct Targets {
  std::vector<std::uint32_t> vertices;
  std::vector<Eigen::Vector3d> points;
  std::size_t size() const { return vertices.size(); }
};

// basis(p) column a = sum_b p_b core(a, b, :), so v = mean + basis * s.
void speaker_basis(const MultilinearModel& model, const Eigen::VectorXd& p,
                   Eigen::MatrixXd& basis) {
  const auto mr = model.core.dim1();
  const auto nr = model.core.dim2();
  basis.setZero(static_cast<Eigen::Index>(model.core.dim3()),
                static_cast<Eigen::Index>(mr));
  for (std::size_t a = 0; a < mr; ++a)
    for (std::size_t b = 0; b < nr; ++b) {
      if (p[static_cast<Eigen::Index>(b)] == 0.0) continue;
      basis.col(static_cast<Eigen::Index>(a)) +=
          p[static_cast<Eigen::Index>(b)] * model.core.fibre(a, b);
    }
}

void pose_basis(const MultilinearModel& model, const Eigen::VectorXd& s,
                Eigen::MatrixXd& basis) {
  const auto mr = model.core.dim1();
  const auto nr = model.core.dim2();
  basis.setZero(static_cast<Eigen::Index>(model.core.dim3()),
                static_cast<Eigen::Index>(nr));
  for (std::size_t b = 0; b < nr; ++b)
    for (std::size_t a = 0; a < mr; ++a) {
      if (s[static_cast<Eigen::Index>(a)] == 0.0) continue;
      basis.col(static_cast<Eigen::Index>(b)) +=
          s[static_cast<Eigen::Index>(a)] * model.core.fibre(a, b);
    }
}

void accumulate_quadratic(const Eigen::MatrixXd& basis,
                          const Eigen::VectorXd& mean, std::uint32_t vertex,
                          const Eigen::Vector3d& target, double weight,
                          Eigen::MatrixXd& hess, Eigen::VectorXd& grad) {
  const auto row = static_cast<Eigen::Index>(3) * vertex;
  const auto block = basis.middleRows<3>(row);
  const Eigen::Vector3d offset = mean.segment<3>(row) - target;
  hess.noalias() += (2.0 * weight) * (block.transpose() * block);
  grad.noalias() += (2.0 * weight) * (block.transpose() * offset);
}

void solve_block(const Eigen::MatrixXd& basis, const Eigen::VectorXd& mean,
                 const Targets& data, double data_weight,
                 const IndexedLandmarks& landmarks, double landmark_weight,
                 const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                 Eigen::VectorXd& x) {
  const Eigen::Index r = basis.cols();
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(r, r);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(r);
  if (data_weight > 0.0)
    for (std::size_t c = 0; c < data.size(); ++c)
      accumulate_quadratic(basis, mean, data.vertices[c], data.points[c],
                           data_weight, hess, grad);
  if (landmark_weight > 0.0)
    for (const auto& [vertex, target] : landmarks)
      accumulate_quadratic(basis, mean, vertex, target, landmark_weight, hess,
                           grad);
  solve_box_qp(hess, grad, lo, hi, x);
}

double fit_energy(const MultilinearModel& model, const Eigen::VectorXd& s,
                  const Eigen::VectorXd& p, const Targets& data,
                  double data_weight, const IndexedLandmarks& landmarks,
                  double landmark_weight) {
  const Eigen::VectorXd v = model.mean + model.core.contract12(s, p);
  double energy = 0.0;
  for (std::size_t c = 0; c < data.size(); ++c)
    energy += data_weight *
              (v.segment<3>(3 * data.vertices[c]) - data.points[c])
                  .squaredNorm();
  for (const auto& [vertex, target] : landmarks)
    energy +=
        landmark_weight * (v.segment<3>(3 * vertex) - target).squaredNorm();
  return energy;
}

Eigen::VectorXd initial_coords(const ModeStatistics& stats, double h) {
  Eigen::VectorXd x = clamp_coords(stats.mean, stats, h);
  if (x.lpNorm<Eigen::Infinity>() < 1e-10) {
    const double scale = std::min(0.5, 0.5 * h);
    x = clamp_coords(stats.mean + scale * stats.stddev, stats, h);
  }
  return x;
}

FitResult run_fit(const MultilinearModel& model,
                  const OrientedPointCloud* cloud, const Targets* fixed,
                  const IndexedLandmarks& landmarks, const FitConfig& config,
                  bool freeze_pose) {
  model.validate();
  config.validate();
  const std::size_t nv = model.vertex_count();
  for (const auto& [vertex, target] : landmarks)
    if (vertex >= nv)
      throw std::invalid_argument("fit: landmark vertex out of range");

  Eigen::VectorXd lo_s, hi_s, lo_p, hi_p;
  coordinate_box(model.speaker_stats, config.h, lo_s, hi_s);
  coordinate_box(model.pose_stats, config.h, lo_p, hi_p);
  Eigen::VectorXd s = initial_coords(model.speaker_stats, config.h);
  Eigen::VectorXd p = initial_coords(model.pose_stats, config.h);

  const double landmark_weight =
      landmarks.empty() ? 0.0 : config.gamma / landmarks.size();

  SurfaceMesh scratch;
  std::unique_ptr<CloudGrid> grid;
  if (cloud) {
    cloud->validate();
    scratch.faces = model.faces;
    scratch.vertices.resize(nv);
    grid = std::make_unique<CloudGrid>(*cloud, config.search_radius);
  } else {
    for (const std::uint32_t vertex : fixed->vertices)
      if (vertex >= nv)
        throw std::invalid_argument("fit: target vertex out of range");
  }

  FitResult result;
  Targets targets;
  Eigen::MatrixXd basis;
  const int rounds = cloud ? config.series : 1;

  for (int round = 0; round < rounds; ++round) {
    if (cloud) {
      const Eigen::VectorXd v = model.mean + model.core.contract12(s, p);
      for (std::size_t i = 0; i < nv; ++i)
        scratch.vertices[i] = v.segment<3>(static_cast<Eigen::Index>(3 * i));
      const auto normals = vertex_normals(scratch);
      targets.vertices.clear();
      targets.points.clear();
      for (std::size_t i = 0; i < nv; ++i) {
        const CandidateMatch cand = grid->find_candidate(
            scratch.vertices[i], normals[i], config.search_radius,
            config.max_normal_angle);
        if (!cand.valid) continue;
        targets.vertices.push_back(static_cast<std::uint32_t>(i));
        targets.points.push_back(cloud->points[cand.point]);
      }
    } else {
      targets = *fixed;
    }
    const double data_weight =
        targets.size() == 0 ? 0.0 : config.alpha / targets.size();

    const int max_steps = cloud ? config.alternations : config.max_alternations;
    double previous = std::numeric_limits<double>::infinity();
    for (int step = 0; step < max_steps; ++step) {
      speaker_basis(model, p, basis);
      solve_block(basis, model.mean, targets, data_weight, landmarks,
                  landmark_weight, lo_s, hi_s, s);
      if (!freeze_pose) {
        pose_basis(model, s, basis);
        solve_block(basis, model.mean, targets, data_weight, landmarks,
                    landmark_weight, lo_p, hi_p, p);
      }
      const double energy =
          fit_energy(model, s, p, targets, data_weight, landmarks,
                     landmark_weight);
      result.energies.push_back(energy);
      if (!cloud &&
          previous - energy <=
              config.convergence_tolerance * std::max(1.0, std::abs(energy)))
        break;
      previous = energy;
    }
  }

  if (config.rescale && !freeze_pose && config.h > 0.0)
    canonical_rescale(s, p, model.speaker_stats, model.pose_stats, config.h);
  s = clamp_coords(s, model.speaker_stats, config.h);
  p = clamp_coords(p, model.pose_stats, config.h);

  result.speaker = s;
  result.pose = p;
  result.mesh = generate(model, s, p);
  result.used_count = targets.size();
  const double data_weight =
      targets.size() == 0 ? 0.0 : config.alpha / targets.size();
  result.energy = fit_energy(model, s, p, targets, data_weight, landmarks,
                             landmark_weight);
  double residual = 0.0;
  for (std::size_t c = 0; c < targets.size(); ++c)
    residual +=
        (result.mesh.vertices[targets.vertices[c]] - targets.points[c]).norm();
  result.mean_residual =
      targets.size() == 0 ? 0.0 : residual / static_cast<double>(targets.size());
  return result;
}

}  // namespace

void FitConfig::validate() const {
  if (!(alpha >= 0.0) || !(gamma >= 0.0))
    throw std::invalid_argument("fit: negative weight");
  if (!(h >= 0.0)) throw std::invalid_argument("fit: negative box width");
  if (series < 1) throw std::invalid_argument("fit: series < 1");
  if (alternations < 1) throw std::invalid_argument("fit: alternations < 1");
  if (!(search_radius > 0.0))
    throw std::invalid_argument("fit: non-positive search radius");
  if (!(max_normal_angle > 0.0) || max_normal_angle > 180.0)
    throw std::invalid_argument("fit: normal angle outside (0,180]");
  if (!(convergence_tolerance >= 0.0))
    throw std::invalid_argument("fit: negative tolerance");
  if (max_alternations < 1)
    throw std::invalid_argument("fit: max alternations < 1");
}

void coordinate_box(const ModeStatistics& stats, double h, Eigen::VectorXd& lo,
                    Eigen::VectorXd& hi) {
  if (!(h >= 0.0)) throw std::invalid_argument("box: negative width");
  lo = stats.mean - h * stats.stddev;
  hi = stats.mean + h * stats.stddev;
}

Eigen::VectorXd clamp_coords(const Eigen::VectorXd& x,
                             const ModeStatistics& stats, double h) {
  if (x.size() != stats.mean.size())
    throw std::invalid_argument("clamp: coordinate length mismatch");
  Eigen::VectorXd lo, hi;
  coordinate_box(stats, h, lo, hi);
  return x.cwiseMax(lo).cwiseMin(hi);
}

void canonical_rescale(Eigen::VectorXd& s, Eigen::VectorXd& p,
                       const ModeStatistics& speaker_stats,
                       const ModeStatistics& pose_stats, double h) {
  if (s.size() != speaker_stats.mean.size() ||
      p.size() != pose_stats.mean.size())
    throw std::invalid_argument("rescale: coordinate length mismatch");
  if (!(h > 0.0)) return;
  if (s.lpNorm<Eigen::Infinity>() < 1e-12 ||
      p.lpNorm<Eigen::Infinity>() < 1e-12)
    return;

  Eigen::VectorXd lo_s, hi_s, lo_p, hi_p;
  coordinate_box(speaker_stats, h, lo_s, hi_s);
  coordinate_box(pose_stats, h, lo_p, hi_p);

  double c_lo = 1e-9;
  double c_hi = 1e9;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double si = s[i];
    if (std::abs(si) < 1e-300) continue;
    const double a = lo_s[i] / si;
    const double b = hi_s[i] / si;
    c_lo = std::max(c_lo, std::min(a, b));
    c_hi = std::min(c_hi, std::max(a, b));
  }
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double pj = p[j];
    if (std::abs(pj) < 1e-300) continue;
    // c > 0 with lo <= pj / c <= hi.
    if (pj > 0.0) {
      if (hi_p[j] <= 0.0) continue;  // infeasible direction, keep interval
      c_lo = std::max(c_lo, pj / hi_p[j]);
      if (lo_p[j] > 0.0) c_hi = std::min(c_hi, pj / lo_p[j]);
    } else {
      if (lo_p[j] >= 0.0) continue;
      c_lo = std::max(c_lo, pj / lo_p[j]);
      if (hi_p[j] < 0.0) c_hi = std::min(c_hi, pj / hi_p[j]);
    }
  }
  // The current point is feasible at c = 1; keep 1 inside against drift.
  c_lo = std::min(c_lo, 1.0);
  c_hi = std::max(c_hi, 1.0);

  const auto objective = [&](double c) {
    double f = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double d =
          (c * s[i] - speaker_stats.mean[i]) / speaker_stats.stddev[i];
      f += d * d;
    }
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const double d = (p[j] / c - pose_stats.mean[j]) / pose_stats.stddev[j];
      f += d * d;
    }
    return f;
  };

  const int cells = 256;
  const double log_lo = std::log(c_lo);
  const double log_hi = std::log(c_hi);
  double best_c = 1.0;
  double best_f = objective(1.0);
  for (int i = 0; i <= cells; ++i) {
    const double c =
        std::exp(log_lo + (log_hi - log_lo) * i / static_cast<double>(cells));
    const double f = objective(c);
    if (f < best_f) {
      best_f = f;
      best_c = c;
    }
  }
  const double span = (log_hi - log_lo) / cells;
  double a = std::max(c_lo, std::exp(std::log(best_c) - span));
  double b = std::min(c_hi, std::exp(std::log(best_c) + span));
  const double golden = 0.6180339887498949;
  double x1 = b - golden * (b - a);
  double x2 = a + golden * (b - a);
  double f1 = objective(x1);
  double f2 = objective(x2);
  for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, b); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - golden * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + golden * (b - a);
      f2 = objective(x2);
    }
  }
  const double c_star = f1 <= f2 ? x1 : x2;
  if (objective(c_star) < best_f) best_c = c_star;

  s *= best_c;
  p /= best_c;
}

IndexedLandmarks resolve_landmarks(
    const std::map<std::string, std::uint32_t>& table,
    const LandmarkSet& landmarks) {
  IndexedLandmarks out;
  out.reserve(landmarks.size());
  for (const auto& lm : landmarks) {
    const auto it = table.find(lm.name);
    if (it == table.end())
      throw std::invalid_argument("fit: landmark not on template: " + lm.name);
    out.emplace_back(it->second, lm.position);
  }
  return out;
}

FitResult fit_model(const MultilinearModel& model,
                    const OrientedPointCloud& cloud,
                    const IndexedLandmarks& landmarks,
                    const FitConfig& config) {
  return run_fit(model, &cloud, nullptr, landmarks, config, false);
}

FitResult fit_fixed(const MultilinearModel& model,
                    const std::vector<Eigen::Vector3d>& targets,
                    const std::vector<std::uint32_t>& vertices,
                    const FitConfig& config) {
  Targets fixed;
  if (vertices.empty()) {
    if (targets.size() != model.vertex_count())
      throw std::invalid_argument("fit: target count must cover every vertex");
    fixed.vertices.resize(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i)
      fixed.vertices[i] = static_cast<std::uint32_t>(i);
  } else {
    if (targets.size() != vertices.size())
      throw std::invalid_argument("fit: target/vertex count mismatch");
    fixed.vertices = vertices;
  }
  fixed.points = targets;
  return run_fit(model, nullptr, &fixed, {}, config, false);
}

FitResult fit_pca(const MultilinearModel& model,
                  const OrientedPointCloud& cloud,
                  const IndexedLandmarks& landmarks, const FitConfig& config) {
  return run_fit(model, &cloud, nullptr, landmarks, config, true);
}

void BootstrapConfig::validate() const {
  match.validate();
  fit.validate();
  if (iterations < 1) throw std::invalid_argument("bootstrap: iterations < 1");
  if (jobs < 1) throw std::invalid_argument("bootstrap: jobs < 1");
}

BootstrapResult bootstrap(const SurfaceMesh& templ,
                          const std::vector<std::string>& speakers,
                          const std::vector<std::string>& poses,
                          const std::vector<BootstrapInput>& inputs,
                          const BootstrapConfig& config) {
  templ.validate();
  config.validate();
  if (speakers.empty() || poses.empty())
    throw std::invalid_argument("bootstrap: empty label axis");
  if (inputs.empty()) throw std::invalid_argument("bootstrap: no inputs");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& input : inputs) {
    if (input.speaker >= speakers.size() || input.pose >= poses.size())
      throw std::invalid_argument("bootstrap: input cell out of range");
    if (!seen.emplace(input.speaker, input.pose).second)
      throw std::invalid_argument("bootstrap: duplicate input cell");
  }

  std::vector<IndexedLandmarks> resolved(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i)
    resolved[i] = resolve_landmarks(templ.landmarks, inputs[i].landmarks);

  std::vector<SurfaceMesh> current(inputs.size());
  std::vector<double> residuals(inputs.size(), 0.0);
  BootstrapResult result;

  for (int pass = 1; pass <= config.iterations; ++pass) {
    if (pass == 1) {
      parallel_for(inputs.size(), config.jobs, [&](std::size_t i) {
        const MatchResult m = match_template(
            templ, inputs[i].cloud, inputs[i].landmarks, config.match);
        current[i] = m.mesh;
        residuals[i] = m.stats.mean_residuals.back();
      });
    } else {
      MeshCollection collection;
      collection.speakers = speakers;
      collection.poses = poses;
      collection.cells.assign(
          speakers.size(),
          std::vector<std::optional<SurfaceMesh>>(poses.size()));
      for (std::size_t i = 0; i < inputs.size(); ++i)
        collection.cells[inputs[i].speaker][inputs[i].pose] = current[i];
      const MeshCollection completed = complete_missing(collection);
      const TrainingTensor tensor = build_tensor(completed);
      const MultilinearModel model = hosvd(tensor, completed);

      parallel_for(inputs.size(), config.jobs, [&](std::size_t i) {
        const FitResult fit =
            config.mode == BootstrapMode::SingleMode
                ? fit_pca(model, inputs[i].cloud, resolved[i], config.fit)
                : fit_model(model, inputs[i].cloud, resolved[i], config.fit);
        DeformationField init = DeformationField::identity(
            templ.vertices.size());
        for (std::size_t v = 0; v < templ.vertices.size(); ++v)
          init.translations[v] = fit.mesh.vertices[v] - templ.vertices[v];
        const MatchResult m =
            match_template(templ, inputs[i].cloud, inputs[i].landmarks,
                           config.match, &init);
        current[i] = m.mesh;
        residuals[i] = m.stats.mean_residuals.back();
      });
    }
    double mean = 0.0;
    for (const double r : residuals) mean += r;
    result.iteration_residuals.push_back(mean /
                                         static_cast<double>(inputs.size()));
  }

  result.collection.speakers = speakers;
  result.collection.poses = poses;
  result.collection.cells.assign(
      speakers.size(), std::vector<std::optional<SurfaceMesh>>(poses.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i)
    result.collection.cells[inputs[i].speaker][inputs[i].pose] = current[i];
  return result;
}

}  // namespace artic
