#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace artic {

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
  RigidTransform inverse() const {
    RigidTransform t;
    t.rotation = rotation.transpose();
    t.translation = -(rotation.transpose() * translation);
    return t;
  }
  // this ∘ other: applies other first.
  RigidTransform compose(const RigidTransform& other) const {
    RigidTransform t;
    t.rotation = rotation * other.rotation;
    t.translation = rotation * other.translation + translation;
    return t;
  }
};

// Triangle mesh. Face indices are 0-based internally; the OBJ layer
// converts from the 1-based file convention. The landmark table maps
// stable anatomical names to vertex indices.
struct SurfaceMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  std::map<std::string, std::uint32_t> landmarks;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t face_count() const { return faces.size(); }

  // Throws if a face references a missing vertex or repeats one.
  void validate() const;
};

// Surface samples with unit outward normals.
struct OrientedPointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;

  std::size_t size() const { return points.size(); }
  void validate() const;
};

// Named annotation points in scan coordinates.
struct NamedPoint {
  std::string name;
  Eigen::Vector3d position;
};
using LandmarkSet = std::vector<NamedPoint>;

// Least-squares rigid motion (no scaling) mapping src onto dst,
// det(R) = +1 even for reflected targets. Throws for fewer than three
// points, mismatched sizes, or collinear/degenerate configurations.
RigidTransform kabsch(const std::vector<Eigen::Vector3d>& src,
                      const std::vector<Eigen::Vector3d>& dst);

// Generalized Procrustes alignment, rigid motions only. The first mesh
// seeds the reference; afterwards the mean of the aligned meshes has its
// centroid at the origin. All meshes must share topology.
std::vector<SurfaceMesh> procrustes_align(
    const std::vector<SurfaceMesh>& meshes, int max_iterations = 100,
    double tolerance = 1e-10);

// Moves `follower` by the rigid motion that carries `anchor_before`
// onto `anchor_after` (used to drag tongue meshes along with their
// speaker's aligned palate).
SurfaceMesh transfer_alignment(const SurfaceMesh& follower,
                               const SurfaceMesh& anchor_before,
                               const SurfaceMesh& anchor_after);

// Vertex order serialization (x1, y1, z1, x2, ...), length 3 * V.
Eigen::VectorXd serialize(const SurfaceMesh& mesh);
void deserialize(const Eigen::VectorXd& coords, SurfaceMesh& mesh);

SurfaceMesh apply_transform(const SurfaceMesh& mesh,
                            const RigidTransform& t);

// Area-weighted vertex normals; zero vector for vertices in no face.
std::vector<Eigen::Vector3d> vertex_normals(const SurfaceMesh& mesh);

Eigen::Vector3d face_normal(const SurfaceMesh& mesh, std::size_t f);
double face_area(const SurfaceMesh& mesh, std::size_t f);

// Unique undirected edges, each pair sorted, list sorted.
std::vector<std::pair<std::uint32_t, std::uint32_t>> mesh_edges(
    const SurfaceMesh& mesh);

double mean_edge_length(const SurfaceMesh& mesh);

Eigen::Vector3d centroid(const std::vector<Eigen::Vector3d>& points);

// True when every edge borders exactly two faces with opposite
// orientation (closed orientable surface).
bool is_watertight(const SurfaceMesh& mesh);

// Restriction to a vertex subset: keeps faces whose corners all remain,
// reindexes them, and keeps landmarks that survive.
SurfaceMesh submesh(const SurfaceMesh& mesh,
                    const std::vector<std::uint32_t>& vertices);

}  // namespace artic
