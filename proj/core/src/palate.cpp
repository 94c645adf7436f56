#include "artic/palate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "artic/random.hpp"
#include "artic/registration.hpp"

namespace artic {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

RigidTransform about_centroid(const Eigen::Vector3d& r,
                              const Eigen::Vector3d& t,
                              const Eigen::Vector3d& centroid) {
  RigidTransform xf;
  xf.rotation = rodrigues(r);
  xf.translation = centroid + t - xf.rotation * centroid;
  return xf;
}

}  // namespace

ProfileSet sample_profiles(const GrayVolume& volume,
                           const std::vector<Eigen::Vector3d>& origins,
                           const std::vector<Eigen::Vector3d>& directions,
                           int length, double step) {
  if (origins.size() != directions.size())
    throw std::invalid_argument("profiles: origin/direction count mismatch");
  if (length < 2) throw std::invalid_argument("profiles: length < 2");
  if (!(step > 0.0)) throw std::invalid_argument("profiles: step <= 0");
  ProfileSet set;
  set.profiles.resize(origins.size());
  set.valid.assign(origins.size(), 0);
  for (std::size_t i = 0; i < origins.size(); ++i) {
    const double norm = directions[i].norm();
    if (norm < 1e-12) continue;
    const Eigen::Vector3d dir = directions[i] / norm;
    Eigen::VectorXd prof(length);
    bool ok = true;
    for (int j = 1; j <= length; ++j) {
      double value = 0.0;
      if (!volume.sample(origins[i] + (j * step) * dir, value)) {
        ok = false;
        break;
      }
      prof[j - 1] = value;
    }
    if (ok) {
      set.profiles[i] = std::move(prof);
      set.valid[i] = 1;
    }
  }
  return set;
}

double ncc(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() == 0)
    throw std::invalid_argument("ncc: length mismatch");
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  const double na = ca.norm();
  const double nb = cb.norm();
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return ca.dot(cb) / (na * nb);
}

void PalateAlignConfig::validate() const {
  if (profile_length < 2)
    throw std::invalid_argument("palate align: profile length < 2");
  if (!(profile_step > 0.0))
    throw std::invalid_argument("palate align: profile step <= 0");
  if (max_sweeps < 1) throw std::invalid_argument("palate align: sweeps < 1");
  if (starts < 1) throw std::invalid_argument("palate align: starts < 1");
  if (translation_jitter < 0.0 || rotation_jitter_deg < 0.0)
    throw std::invalid_argument("palate align: negative jitter");
}

double placement_score(const GrayVolume& target, const SurfaceMesh& palate,
                       const ProfileSet& reference,
                       const std::vector<Eigen::Vector3d>& normals,
                       const RigidTransform& transform, int length,
                       double step) {
  double score = 0.0;
  for (std::size_t i = 0; i < palate.vertices.size(); ++i) {
    if (!reference.valid[i]) continue;
    const Eigen::Vector3d origin = transform.apply(palate.vertices[i]);
    const Eigen::Vector3d dir = transform.rotation * normals[i];
    Eigen::VectorXd prof(length);
    bool ok = true;
    for (int j = 1; j <= length; ++j) {
      double value = 0.0;
      if (!target.sample(origin + (j * step) * dir, value)) {
        ok = false;
        break;
      }
      prof[j - 1] = value;
    }
    if (ok) score += ncc(reference.profiles[i], prof);
  }
  return score;
}

PalateAlignResult align_palate(const GrayVolume& reference_volume,
                               const GrayVolume& target_volume,
                               const SurfaceMesh& palate,
                               const PalateAlignConfig& config) {
  validate_gray(reference_volume);
  validate_gray(target_volume);
  palate.validate();
  config.validate();

  const auto normals = vertex_normals(palate);
  const ProfileSet reference =
      sample_profiles(reference_volume, palate.vertices, normals,
                      config.profile_length, config.profile_step);
  if (std::count(reference.valid.begin(), reference.valid.end(), 1) == 0)
    throw std::runtime_error("palate align: no usable reference profiles");

  const Eigen::Vector3d c = centroid(palate.vertices);
  const auto score_at = [&](const Eigen::Matrix<double, 6, 1>& x) {
    const RigidTransform xf = about_centroid(x.head<3>(), x.tail<3>(), c);
    return placement_score(target_volume, palate, reference, normals, xf,
                           config.profile_length, config.profile_step);
  };

  Rng rng(config.seed);
  const double rot_jitter = config.rotation_jitter_deg * kPi / 180.0;

  Eigen::Matrix<double, 6, 1> best_x = Eigen::Matrix<double, 6, 1>::Zero();
  double best_score = -std::numeric_limits<double>::infinity();
  double identity_score = 0.0;

  for (int start = 0; start < config.starts; ++start) {
    Eigen::Matrix<double, 6, 1> x = Eigen::Matrix<double, 6, 1>::Zero();
    if (start > 0) {
      for (int k = 0; k < 3; ++k) x[k] = rng.uniform(-rot_jitter, rot_jitter);
      for (int k = 3; k < 6; ++k)
        x[k] = rng.uniform(-config.translation_jitter,
                           config.translation_jitter);
    }
    double score = score_at(x);
    if (start == 0) identity_score = score;

    double rot_step = std::max(rot_jitter, 0.5 * kPi / 180.0);
    double trans_step = std::max(config.translation_jitter, 0.5);
    for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
      bool improved = false;
      for (int k = 0; k < 6; ++k) {
        const double h = k < 3 ? rot_step : trans_step;
        for (const double sign : {1.0, -1.0}) {
          Eigen::Matrix<double, 6, 1> trial = x;
          trial[k] += sign * h;
          const double s = score_at(trial);
          if (s > score) {
            score = s;
            x = trial;
            improved = true;
          }
        }
      }
      if (!improved) {
        rot_step *= 0.5;
        trans_step *= 0.5;
        if (rot_step < 1e-4 && trans_step < 1e-3) break;
      }
    }
    if (score > best_score) {
      best_score = score;
      best_x = x;
    }
  }

  PalateAlignResult result;
  result.transform = about_centroid(best_x.head<3>(), best_x.tail<3>(), c);
  result.mesh = apply_transform(palate, result.transform);
  result.score = best_score;
  result.identity_score = identity_score;
  return result;
}

void AugmentConfig::validate() const {
  if (!(footprint_scale > 0.0))
    throw std::invalid_argument("augment: non-positive footprint scale");
}

AugmentResult augment_cloud(const OrientedPointCloud& cloud,
                            const SurfaceMesh& palate,
                            const AugmentConfig& config) {
  cloud.validate();
  palate.validate();
  config.validate();
  const auto normals = vertex_normals(palate);

  Eigen::Vector3d mean_normal = Eigen::Vector3d::Zero();
  for (const auto& n : normals) mean_normal += n;
  const double mn = mean_normal.norm();
  if (mn < 1e-12)
    throw std::runtime_error("augment: palate normals cancel");
  mean_normal /= mn;

  const double rho = config.footprint_scale * mean_edge_length(palate);

  AugmentResult result;
  for (std::size_t p = 0; p < cloud.points.size(); ++p) {
    const Eigen::Vector3d& q = cloud.points[p];
    double best_dist2 = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t v = 0; v < palate.vertices.size(); ++v) {
      const double d2 = (q - palate.vertices[v]).squaredNorm();
      if (d2 < best_dist2) {
        best_dist2 = d2;
        best = v;
      }
    }
    const Eigen::Vector3d d = q - palate.vertices[best];
    const double offset = d.dot(normals[best]);
    const Eigen::Vector3d lateral = d - d.dot(mean_normal) * mean_normal;
    if (offset > 0.0 && lateral.norm() <= rho) {
      ++result.removed;
      continue;
    }
    result.cloud.points.push_back(q);
    result.cloud.normals.push_back(cloud.normals[p]);
  }

  for (std::size_t v = 0; v < palate.vertices.size(); ++v) {
    const double norm = normals[v].norm();
    if (norm < 1e-12) continue;
    result.cloud.points.push_back(palate.vertices[v]);
    result.cloud.normals.push_back(normals[v] / norm);
    ++result.injected;
  }
  return result;
}

}  // namespace artic
