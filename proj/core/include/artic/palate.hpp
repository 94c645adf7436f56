#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "artic/geometry.hpp"
#include "artic/volume.hpp"

namespace artic {

// Gray-value profiles along vertex normals. Profile i samples the
// volume at origin_i + j * step * direction_i for j = 1..length; a
// profile is invalid when any sample leaves the volume or the
// direction vanishes.
struct ProfileSet {
  std::vector<Eigen::VectorXd> profiles;
  std::vector<std::uint8_t> valid;
};

ProfileSet sample_profiles(const GrayVolume& volume,
                           const std::vector<Eigen::Vector3d>& origins,
                           const std::vector<Eigen::Vector3d>& directions,
                           int length, double step);

// Normalized cross-correlation of two mean-centered profiles, in
// [-1, 1]; zero when either profile is constant.
double ncc(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct PalateAlignConfig {
  int profile_length = 15;
  double profile_step = 1.0;         // mm
  int max_sweeps = 200;              // pattern search sweeps per start
  int starts = 9;                    // first start is the identity
  double translation_jitter = 2.0;   // mm, extra starts
  double rotation_jitter_deg = 4.0;  // degrees, extra starts
  std::uint64_t seed = 0;
  void validate() const;
};

struct PalateAlignResult {
  RigidTransform transform;
  SurfaceMesh mesh;  // palate under the transform
  double score = 0.0;
  double identity_score = 0.0;
};

// Places the palate mesh into the target volume by maximizing the
// summed correlation between its reference profiles (sampled in the
// reference volume at the rest pose) and target profiles under a rigid
// motion parameterized about the mesh centroid. Multi-start monotone
// pattern search; the result never scores below the identity.
PalateAlignResult align_palate(const GrayVolume& reference_volume,
                               const GrayVolume& target_volume,
                               const SurfaceMesh& palate,
                               const PalateAlignConfig& config = {});

// Correlation score of one candidate placement, for diagnostics.
double placement_score(const GrayVolume& target, const SurfaceMesh& palate,
                       const ProfileSet& reference,
                       const std::vector<Eigen::Vector3d>& normals,
                       const RigidTransform& transform, int length,
                       double step);

struct AugmentConfig {
  double footprint_scale = 2.0;  // lateral radius in mean edge lengths
  void validate() const;
};

struct AugmentResult {
  OrientedPointCloud cloud;
  std::size_t removed = 0;
  std::size_t injected = 0;
};

// Replaces the palate region of a surface cloud: drops points that lie
// on the positive side of the normal of their nearest palate vertex
// and within the lateral footprint (distance in the plane orthogonal
// to the mean palate normal), then appends the palate vertices with
// their normals.
AugmentResult augment_cloud(const OrientedPointCloud& cloud,
                            const SurfaceMesh& palate,
                            const AugmentConfig& config = {});

}  // namespace artic
