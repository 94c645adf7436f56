#include "artic/registration.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "artic/optim.hpp"

namespace artic {
namespace {

static_assert(std::endian::native == std::endian::little,
              "field files are little-endian");

constexpr double kPi = 3.141592653589793238462643383279502884;

std::uint64_t cell_key(long long cx, long long cy, long long cz) {
  const std::uint64_t mask = (1ull << 21) - 1;
  const long long off = 1ll << 20;
  const std::uint64_t ux = static_cast<std::uint64_t>(cx + off) & mask;
  const std::uint64_t uy = static_cast<std::uint64_t>(cy + off) & mask;
  const std::uint64_t uz = static_cast<std::uint64_t>(cz + off) & mask;
  return (ux << 42) | (uy << 21) | uz;
}

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& a) {
  Eigen::Matrix3d m;
  m << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return m;
}

void write_doubles(std::ofstream& out, const double* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(n * sizeof(double)));
}

}  // namespace

void MatchWeights::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0))
    throw std::invalid_argument("match weights: negative weight");
  if (!(beta_min >= 0.0) || !(gamma_min >= 0.0))
    throw std::invalid_argument("match weights: negative floor");
  if (beta_min > beta)
    throw std::invalid_argument("match weights: beta floor above start");
  if (gamma_min > gamma)
    throw std::invalid_argument("match weights: gamma floor above start");
  if (series_length < 1)
    throw std::invalid_argument("match weights: series length < 1");
  if (!(search_radius > 0.0))
    throw std::invalid_argument("match weights: non-positive search radius");
  if (!(max_normal_angle > 0.0) || max_normal_angle > 180.0)
    throw std::invalid_argument("match weights: normal angle outside (0,180]");
}

ScheduledWeights schedule_weights(const MatchWeights& w, int t) {
  w.validate();
  if (t < 1 || t > w.series_length)
    throw std::invalid_argument("schedule_weights: step outside series");
  ScheduledWeights s;
  s.alpha = w.alpha;
  if (w.series_length == 1) {
    s.beta = w.beta;
    s.gamma = w.gamma;
    return s;
  }
  const double frac = static_cast<double>(t - 1) / (w.series_length - 1);
  s.beta = w.beta - frac * (w.beta - w.beta_min);
  s.gamma = w.gamma - frac * (w.gamma - w.gamma_min);
  return s;
}

DeformationField DeformationField::identity(std::size_t vertex_count) {
  DeformationField f;
  f.rotations.assign(vertex_count, Eigen::Vector3d::Zero());
  f.translations.assign(vertex_count, Eigen::Vector3d::Zero());
  return f;
}

void save_field(const DeformationField& field, const std::string& path) {
  if (field.rotations.size() != field.translations.size())
    throw std::invalid_argument("field: rotation/translation count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("field: cannot open for writing: " + path);
  out.write("MDEF", 4);
  const std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint64_t count = field.rotations.size();
  out.write(reinterpret_cast<const char*>(&count), 8);
  for (std::size_t i = 0; i < field.rotations.size(); ++i) {
    write_doubles(out, field.rotations[i].data(), 3);
    write_doubles(out, field.translations[i].data(), 3);
  }
  if (!out) throw std::runtime_error("field: write failed: " + path);
}

DeformationField load_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("field: cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "MDEF", 4) != 0)
    throw std::runtime_error("field: bad magic: " + path);
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (!in || version != 1)
    throw std::runtime_error("field: unsupported version: " + path);
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 8);
  if (!in) throw std::runtime_error("field: truncated header: " + path);
  DeformationField field;
  field.rotations.resize(count);
  field.translations.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    double buf[6];
    in.read(reinterpret_cast<char*>(buf), sizeof(buf));
    if (!in) throw std::runtime_error("field: truncated payload: " + path);
    field.rotations[i] = Eigen::Vector3d(buf[0], buf[1], buf[2]);
    field.translations[i] = Eigen::Vector3d(buf[3], buf[4], buf[5]);
  }
  char extra;
  if (in.read(&extra, 1))
    throw std::runtime_error("field: trailing bytes: " + path);
  return field;
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& r) {
  const double theta2 = r.squaredNorm();
  const Eigen::Matrix3d k = cross_matrix(r);
  if (theta2 < 1e-16) {
    return Eigen::Matrix3d::Identity() + k + 0.5 * (k * k);
  }
  const double theta = std::sqrt(theta2);
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / theta2;
  return Eigen::Matrix3d::Identity() + a * k + b * (k * k);
}

void rodrigues_with_jacobian(const Eigen::Vector3d& r, Eigen::Matrix3d& rot,
                             std::array<Eigen::Matrix3d, 3>& jac) {
  rot = rodrigues(r);
  const double theta2 = r.squaredNorm();
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3d ek = Eigen::Vector3d::Unit(k);
    if (theta2 < 1e-16) {
      jac[k] = cross_matrix(ek) * rot;
      continue;
    }
    const Eigen::Vector3d w = r.cross((Eigen::Matrix3d::Identity() - rot) * ek);
    jac[k] = ((r[k] * cross_matrix(r) + cross_matrix(w)) / theta2) * rot;
  }
}

CloudGrid::CloudGrid(const OrientedPointCloud& cloud, double cell)
    : cloud_(&cloud), cell_(cell) {
  if (!(cell > 0.0)) throw std::invalid_argument("grid: non-positive cell");
  for (std::uint32_t i = 0; i < cloud.points.size(); ++i) {
    const Eigen::Vector3d& p = cloud.points[i];
    const auto cx = static_cast<long long>(std::floor(p.x() / cell_));
    const auto cy = static_cast<long long>(std::floor(p.y() / cell_));
    const auto cz = static_cast<long long>(std::floor(p.z() / cell_));
    cells_[cell_key(cx, cy, cz)].push_back(i);
  }
}

CandidateMatch CloudGrid::find_candidate(const Eigen::Vector3d& position,
                                         const Eigen::Vector3d& normal,
                                         double radius,
                                         double max_normal_angle_deg) const {
  if (!(radius > 0.0) || radius > cell_ + 1e-12)
    throw std::invalid_argument("grid: radius exceeds cell size");
  const double cos_limit = std::cos(max_normal_angle_deg * kPi / 180.0);
  const double norm = normal.norm();
  CandidateMatch best;
  if (norm < 1e-12) return best;
  const Eigen::Vector3d n = normal / norm;

  const auto cx = static_cast<long long>(std::floor(position.x() / cell_));
  const auto cy = static_cast<long long>(std::floor(position.y() / cell_));
  const auto cz = static_cast<long long>(std::floor(position.z() / cell_));
  for (long long dx = -1; dx <= 1; ++dx)
    for (long long dy = -1; dy <= 1; ++dy)
      for (long long dz = -1; dz <= 1; ++dz) {
        const auto it = cells_.find(cell_key(cx + dx, cy + dy, cz + dz));
        if (it == cells_.end()) continue;
        for (const std::uint32_t idx : it->second) {
          const Eigen::Vector3d& q = cloud_->points[idx];
          const double dist = (q - position).norm();
          if (dist > radius) continue;
          if (n.dot(cloud_->normals[idx]) < cos_limit) continue;
          const MatchSide side = ((q - position).dot(n) <= 0.0)
                                     ? MatchSide::Below
                                     : MatchSide::Above;
          bool better = false;
          if (!best.valid) {
            better = true;
          } else if (side != best.side) {
            better = side == MatchSide::Below;
          } else if (dist != best.distance) {
            better = dist < best.distance;
          } else {
            better = idx < best.point;
          }
          if (better) {
            best.valid = true;
            best.point = idx;
            best.distance = dist;
            best.side = side;
          }
        }
      }
  return best;
}

std::vector<Eigen::Vector3d> deformed_positions(const SurfaceMesh& templ,
                                                const DeformationField& field) {
  if (field.size() != templ.vertices.size())
    throw std::invalid_argument("field: size does not match template");
  std::vector<Eigen::Vector3d> out(templ.vertices.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = templ.vertices[i] + field.translations[i];
  return out;
}

namespace {

struct Correspondence {
  bool valid = false;
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
};

struct MatchProblem {
  const SurfaceMesh* templ = nullptr;
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>* edges = nullptr;
  const std::vector<Correspondence>* correspondences = nullptr;
  const std::vector<std::pair<std::uint32_t, Eigen::Vector3d>>* landmarks =
      nullptr;
  double alpha_norm = 0.0;
  double beta_norm = 0.0;
  double gamma_norm = 0.0;

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
    const auto& verts = templ->vertices;
    const std::size_t nv = verts.size();
    grad.setZero(x.size());
    double energy = 0.0;

    if (alpha_norm > 0.0) {
      for (std::size_t i = 0; i < nv; ++i) {
        const Correspondence& c = (*correspondences)[i];
        if (!c.valid) continue;
        const Eigen::Vector3d t = x.segment<3>(6 * i + 3);
        const Eigen::Vector3d e = verts[i] + t - c.target;
        energy += alpha_norm * e.squaredNorm();
        grad.segment<3>(6 * i + 3) += 2.0 * alpha_norm * e;
      }
    }

    if (beta_norm > 0.0 && !edges->empty()) {
      std::vector<Eigen::Matrix3d> rot(nv);
      std::vector<std::array<Eigen::Matrix3d, 3>> jac(nv);
      for (std::size_t i = 0; i < nv; ++i)
        rodrigues_with_jacobian(x.segment<3>(6 * i), rot[i], jac[i]);
      for (const auto& [i, j] : *edges) {
        for (int dir = 0; dir < 2; ++dir) {
          const std::uint32_t a = dir == 0 ? i : j;
          const std::uint32_t b = dir == 0 ? j : i;
          const Eigen::Vector3d d = verts[b] - verts[a];
          const Eigen::Vector3d ta = x.segment<3>(6 * a + 3);
          const Eigen::Vector3d tb = x.segment<3>(6 * b + 3);
          const Eigen::Vector3d e = rot[a] * d + verts[a] + ta - verts[b] - tb;
          energy += beta_norm * e.squaredNorm();
          const Eigen::Vector3d ge = 2.0 * beta_norm * e;
          grad.segment<3>(6 * a + 3) += ge;
          grad.segment<3>(6 * b + 3) -= ge;
          for (int k = 0; k < 3; ++k)
            grad(6 * a + k) += ge.dot(jac[a][k] * d);
        }
      }
    }

    if (gamma_norm > 0.0) {
      for (const auto& [vi, target] : *landmarks) {
        const Eigen::Vector3d t = x.segment<3>(6 * vi + 3);
        const Eigen::Vector3d e = verts[vi] + t - target;
        energy += gamma_norm * e.squaredNorm();
        grad.segment<3>(6 * vi + 3) += 2.0 * gamma_norm * e;
      }
    }
    return energy;
  }
};

}  // namespace

MatchResult match_template(const SurfaceMesh& templ,
                           const OrientedPointCloud& cloud,
                           const LandmarkSet& landmarks,
                           const MatchWeights& weights,
                           const DeformationField* init) {
  templ.validate();
  cloud.validate();
  weights.validate();
  const std::size_t nv = templ.vertices.size();
  if (nv == 0) throw std::invalid_argument("match: empty template");

  std::vector<std::pair<std::uint32_t, Eigen::Vector3d>> resolved;
  for (const auto& lm : landmarks) {
    const auto it = templ.landmarks.find(lm.name);
    if (it == templ.landmarks.end())
      throw std::invalid_argument("match: landmark not on template: " +
                                  lm.name);
    resolved.emplace_back(it->second, lm.position);
  }

  const auto edges = mesh_edges(templ);
  const CloudGrid grid(cloud, weights.search_radius);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(6 * nv);
  if (init) {
    if (init->size() != nv)
      throw std::invalid_argument("match: init field size mismatch");
    for (std::size_t i = 0; i < nv; ++i) {
      x.segment<3>(6 * i) = init->rotations[i];
      x.segment<3>(6 * i + 3) = init->translations[i];
    }
  }

  SurfaceMesh scratch = templ;
  std::vector<Correspondence> correspondences(nv);
  MatchResult result;
  LbfgsOptions opts;

  for (int t = 1; t <= weights.series_length; ++t) {
    const ScheduledWeights sched = schedule_weights(weights, t);

    for (std::size_t i = 0; i < nv; ++i)
      scratch.vertices[i] = templ.vertices[i] + x.segment<3>(6 * i + 3);
    const auto normals = vertex_normals(scratch);

    std::size_t valid = 0;
    for (std::size_t i = 0; i < nv; ++i) {
      const CandidateMatch cand =
          grid.find_candidate(scratch.vertices[i], normals[i],
                              weights.search_radius, weights.max_normal_angle);
      correspondences[i].valid = cand.valid;
      if (cand.valid) {
        correspondences[i].target = cloud.points[cand.point];
        ++valid;
      }
    }

    MatchProblem problem;
    problem.templ = &templ;
    problem.edges = &edges;
    problem.correspondences = &correspondences;
    problem.landmarks = &resolved;
    problem.alpha_norm = valid > 0 ? sched.alpha / valid : 0.0;
    problem.beta_norm =
        edges.empty() ? 0.0 : sched.beta / (2.0 * edges.size());
    problem.gamma_norm =
        resolved.empty() ? 0.0 : sched.gamma / resolved.size();

    LbfgsResult inner = lbfgs_minimize(
        [&problem](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
          return problem(p, g);
        },
        x, opts);

    double residual = 0.0;
    if (valid > 0) {
      for (std::size_t i = 0; i < nv; ++i) {
        if (!correspondences[i].valid) continue;
        const Eigen::Vector3d p = templ.vertices[i] + x.segment<3>(6 * i + 3);
        residual += (p - correspondences[i].target).norm();
      }
      residual /= static_cast<double>(valid);
    }
    result.stats.energies.push_back(inner.energy);
    result.stats.mean_residuals.push_back(residual);
    result.stats.valid_counts.push_back(valid);
    result.stats.inner_energies.push_back(std::move(inner.energies));
  }

  result.mesh = templ;
  result.field = DeformationField::identity(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    result.field.rotations[i] = x.segment<3>(6 * i);
    result.field.translations[i] = x.segment<3>(6 * i + 3);
    result.mesh.vertices[i] = templ.vertices[i] + result.field.translations[i];
  }
  return result;
}

}  // namespace artic
