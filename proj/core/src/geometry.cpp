#include "artic/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace artic {

void SurfaceMesh::validate() const {
  const auto v = static_cast<std::uint32_t>(vertices.size());
  for (const auto& f : faces) {
    for (const auto idx : f)
      if (idx >= v)
        throw std::runtime_error("mesh: face references missing vertex");
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
      throw std::runtime_error("mesh: degenerate face");
  }
  for (const auto& [name, idx] : landmarks)
    if (idx >= v)
      throw std::runtime_error("mesh: landmark '" + name +
                               "' references missing vertex");
}

void OrientedPointCloud::validate() const {
  if (points.size() != normals.size())
    throw std::runtime_error("cloud: point/normal count mismatch");
  for (const auto& n : normals) {
    if (std::abs(n.norm() - 1.0) > 1e-6)
      throw std::runtime_error("cloud: normal is not unit length");
  }
}

Eigen::Vector3d centroid(const std::vector<Eigen::Vector3d>& points) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& p : points) c += p;
  if (!points.empty()) c /= static_cast<double>(points.size());
  return c;
}

RigidTransform kabsch(const std::vector<Eigen::Vector3d>& src,
                      const std::vector<Eigen::Vector3d>& dst) {
  if (src.size() != dst.size())
    throw std::runtime_error("kabsch: point count mismatch");
  if (src.size() < 3)
    throw std::runtime_error("kabsch: needs at least three points");
  const Eigen::Vector3d cs = centroid(src);
  const Eigen::Vector3d cd = centroid(dst);
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  double spread = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Eigen::Vector3d a = src[i] - cs;
    h += a * (dst[i] - cd).transpose();
    spread += a.squaredNorm();
  }
  if (spread <= 0.0)
    throw std::runtime_error("kabsch: degenerate source configuration");

  // Rank of the source spread decides solvability: collinear sources
  // leave a free rotation about their axis.
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Eigen::Vector3d a = src[i] - cs;
    cov += a * a.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const auto ev = es.eigenvalues();  // ascending
  if (ev(1) <= 1e-12 * std::max(ev(2), 1e-300))
    throw std::runtime_error("kabsch: collinear source configuration");

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  RigidTransform t;
  t.rotation = v * d * u.transpose();
  t.translation = cd - t.rotation * cs;
  return t;
}

namespace {

void require_same_topology(const SurfaceMesh& a, const SurfaceMesh& b,
                           const char* what) {
  if (a.vertices.size() != b.vertices.size() || a.faces != b.faces)
    throw std::runtime_error(std::string(what) + ": topology mismatch");
}

}  // namespace

std::vector<SurfaceMesh> procrustes_align(
    const std::vector<SurfaceMesh>& meshes, int max_iterations,
    double tolerance) {
  if (meshes.size() < 2)
    throw std::runtime_error("procrustes: needs at least two meshes");
  for (std::size_t i = 1; i < meshes.size(); ++i)
    require_same_topology(meshes[0], meshes[i], "procrustes");

  const std::size_t v = meshes[0].vertices.size();
  std::vector<Eigen::Vector3d> ref = meshes[0].vertices;
  {
    const Eigen::Vector3d c = centroid(ref);
    for (auto& p : ref) p -= c;
  }
  std::vector<SurfaceMesh> aligned(meshes.begin(), meshes.end());

  for (int it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < meshes.size(); ++i) {
      const RigidTransform t = kabsch(meshes[i].vertices, ref);
      aligned[i] = apply_transform(meshes[i], t);
    }
    std::vector<Eigen::Vector3d> mean(v, Eigen::Vector3d::Zero());
    for (const auto& m : aligned)
      for (std::size_t k = 0; k < v; ++k) mean[k] += m.vertices[k];
    for (auto& p : mean) p /= static_cast<double>(meshes.size());
    const Eigen::Vector3d c = centroid(mean);
    for (auto& p : mean) p -= c;

    double move = 0.0;
    for (std::size_t k = 0; k < v; ++k)
      move += (mean[k] - ref[k]).squaredNorm();
    move = std::sqrt(move / static_cast<double>(v));
    ref = std::move(mean);
    if (move < tolerance) break;
  }

  for (std::size_t i = 0; i < meshes.size(); ++i) {
    const RigidTransform t = kabsch(meshes[i].vertices, ref);
    aligned[i] = apply_transform(meshes[i], t);
  }
  // Pin the mean centroid to the origin exactly.
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& m : aligned)
    for (const auto& p : m.vertices) c += p;
  c /= static_cast<double>(meshes.size() * v);
  for (auto& m : aligned)
    for (auto& p : m.vertices) p -= c;
  return aligned;
}

SurfaceMesh transfer_alignment(const SurfaceMesh& follower,
                               const SurfaceMesh& anchor_before,
                               const SurfaceMesh& anchor_after) {
  require_same_topology(anchor_before, anchor_after, "transfer");
  const RigidTransform t =
      kabsch(anchor_before.vertices, anchor_after.vertices);
  return apply_transform(follower, t);
}

Eigen::VectorXd serialize(const SurfaceMesh& mesh) {
  Eigen::VectorXd out(3 * static_cast<Eigen::Index>(mesh.vertices.size()));
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    out(3 * static_cast<Eigen::Index>(i) + 0) = mesh.vertices[i].x();
    out(3 * static_cast<Eigen::Index>(i) + 1) = mesh.vertices[i].y();
    out(3 * static_cast<Eigen::Index>(i) + 2) = mesh.vertices[i].z();
  }
  return out;
}

void deserialize(const Eigen::VectorXd& coords, SurfaceMesh& mesh) {
  if (coords.size() != 3 * static_cast<Eigen::Index>(mesh.vertices.size()))
    throw std::runtime_error("mesh: coordinate vector length mismatch");
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    mesh.vertices[i] = Eigen::Vector3d(
        coords(3 * static_cast<Eigen::Index>(i) + 0),
        coords(3 * static_cast<Eigen::Index>(i) + 1),
        coords(3 * static_cast<Eigen::Index>(i) + 2));
}

SurfaceMesh apply_transform(const SurfaceMesh& mesh,
                            const RigidTransform& t) {
  SurfaceMesh out = mesh;
  for (auto& p : out.vertices) p = t.apply(p);
  return out;
}

Eigen::Vector3d face_normal(const SurfaceMesh& mesh, std::size_t f) {
  const auto& tri = mesh.faces[f];
  const Eigen::Vector3d e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
  const Eigen::Vector3d e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
  Eigen::Vector3d n = e1.cross(e2);
  const double len = n.norm();
  if (len > 0.0) n /= len;
  return n;
}

double face_area(const SurfaceMesh& mesh, std::size_t f) {
  const auto& tri = mesh.faces[f];
  const Eigen::Vector3d e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
  const Eigen::Vector3d e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
  return 0.5 * e1.cross(e2).norm();
}

std::vector<Eigen::Vector3d> vertex_normals(const SurfaceMesh& mesh) {
  std::vector<Eigen::Vector3d> normals(mesh.vertices.size(),
                                       Eigen::Vector3d::Zero());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& tri = mesh.faces[f];
    const Eigen::Vector3d e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
    const Eigen::Vector3d e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
    const Eigen::Vector3d an = 0.5 * e1.cross(e2);  // area-weighted
    for (const auto idx : tri) normals[idx] += an;
  }
  for (auto& n : normals) {
    const double len = n.norm();
    if (len > 0.0) n /= len;
  }
  return normals;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> mesh_edges(
    const SurfaceMesh& mesh) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (const auto& f : mesh.faces)
    for (int k = 0; k < 3; ++k) {
      std::uint32_t a = f[static_cast<std::size_t>(k)];
      std::uint32_t b = f[static_cast<std::size_t>((k + 1) % 3)];
      if (a > b) std::swap(a, b);
      seen.insert({a, b});
    }
  return {seen.begin(), seen.end()};
}

double mean_edge_length(const SurfaceMesh& mesh) {
  const auto edges = mesh_edges(mesh);
  if (edges.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& [a, b] : edges)
    acc += (mesh.vertices[a] - mesh.vertices[b]).norm();
  return acc / static_cast<double>(edges.size());
}

bool is_watertight(const SurfaceMesh& mesh) {
  if (mesh.faces.empty()) return false;
  // Count directed edges; a closed orientable surface uses each
  // undirected edge exactly once in each direction.
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
  for (const auto& f : mesh.faces)
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t a = f[static_cast<std::size_t>(k)];
      const std::uint32_t b = f[static_cast<std::size_t>((k + 1) % 3)];
      if (++directed[{a, b}] > 1) return false;
    }
  for (const auto& [edge, count] : directed) {
    auto it = directed.find({edge.second, edge.first});
    if (it == directed.end() || it->second != 1) return false;
  }
  return true;
}

SurfaceMesh submesh(const SurfaceMesh& mesh,
                    const std::vector<std::uint32_t>& vertices) {
  mesh.validate();
  constexpr std::uint32_t kAbsent = 0xffffffffu;
  std::vector<std::uint32_t> remap(mesh.vertices.size(), kAbsent);
  SurfaceMesh out;
  for (const std::uint32_t v : vertices) {
    if (v >= mesh.vertices.size())
      throw std::invalid_argument("submesh: vertex out of range");
    if (remap[v] != kAbsent) continue;
    remap[v] = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.push_back(mesh.vertices[v]);
  }
  for (const auto& f : mesh.faces) {
    if (remap[f[0]] == kAbsent || remap[f[1]] == kAbsent ||
        remap[f[2]] == kAbsent)
      continue;
    out.faces.push_back({remap[f[0]], remap[f[1]], remap[f[2]]});
  }
  for (const auto& [name, index] : mesh.landmarks)
    if (remap[index] != kAbsent) out.landmarks[name] = remap[index];
  return out;
}

}  // namespace artic
