#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "artic/geometry.hpp"
#include "artic/mesh_io.hpp"
#include "artic/model.hpp"
#include "artic/tracking.hpp"
#include "artic/volume.hpp"

namespace artic {

// Tongue surface patch: radial disk grid, 32 rings x 96 spokes plus 27
// interior refinements; 3100 vertices, 6102 faces, normals up, named
// landmarks on the rim and at the center.
SurfaceMesh make_tongue_template();

// Palatal vault patch: 6 rings x 158 spokes plus 45 refinements; 994
// vertices, 1828 faces, symmetric about y = 0, normals up (into the
// tissue side).
SurfaceMesh make_palate_template();

// Five disjoint named masks (tip, blade, back, dorsum, lateral) over
// the structured tongue vertices.
RegionMasks tongue_regions(const SurfaceMesh& tongue);

// Vertices within half_width of the template symmetry plane y = 0.
std::vector<std::uint32_t> midsagittal_mask(const SurfaceMesh& mesh,
                                            double half_width = 2.0);

// Watertight deformed sphere for voxelization phantoms.
SurfaceMesh make_closed_surface(double radius, int subdivisions,
                                double bump_amplitude, std::uint64_t seed);

struct SynthModelSpec {
  std::size_t speakers = 6;
  std::size_t poses = 5;
  std::size_t speaker_rank = 3;
  std::size_t pose_rank = 2;
  double amplitude = 3.0;  // mm, peak deformation scale
  std::uint64_t seed = 1;
  // Exact-rank construction requires rank < count in each mode so the
  // deformation coefficients can carry zero mean.
  void validate() const;
};

// Training collection with exact multilinear rank: template plus
// smooth orthonormal sinusoidal displacement fields, combined through
// zero-mean orthonormal mode coefficients, so the grand mean is the
// template and the centered tensor factors exactly.
MeshCollection synth_collection(const SurfaceMesh& templ,
                                const SynthModelSpec& spec);

struct SynthModelResult {
  MultilinearModel model;
  MeshCollection collection;
};

// synth_collection plus the model built from it; amplitude must be
// positive.
SynthModelResult synth_model(const SurfaceMesh& templ,
                             const SynthModelSpec& spec);

struct SphereSpec {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.0;
};

struct SynthCloudSpec {
  double density = 2.0;      // points per square mm
  double noise_sigma = 0.0;  // mm, isotropic jitter
  std::optional<SphereSpec> hole;
  std::uint64_t seed = 2;
  void validate() const;
};

// Area-weighted surface samples with face normals; optional jitter and
// spherical cut-out.
OrientedPointCloud synth_cloud(const SurfaceMesh& mesh,
                               const SynthCloudSpec& spec);

struct SynthVolumeSpec {
  Eigen::Vector3d spacing = Eigen::Vector3d(1.0, 1.0, 1.0);
  double object_value = 200.0;
  double background_value = 50.0;
  double noise_sigma = 0.0;
  double margin = 5.0;  // world-unit padding around the bounding box
  std::uint64_t seed = 3;
  void validate() const;
};

// Parity ray-cast voxelization of a watertight solid into two gray
// plateaus plus optional Gaussian noise, clamped to [0, 255].
GrayVolume synth_volume(const SurfaceMesh& solid, const SynthVolumeSpec& spec);

struct SynthSequenceSpec {
  std::size_t frames = 200;
  double dt = 0.01;          // seconds between frames
  double pose_span = 0.8;    // sinusoid amplitude in pose deviations
  double speaker_span = 0.5; // anatomy draw width in deviations
  std::uint64_t seed = 4;
  void validate() const;
};

struct SynthSequenceResult {
  MarkerSequence sequence;
  Eigen::VectorXd true_speaker;
  std::vector<Eigen::VectorXd> true_poses;
};

// Marker recordings from a smooth sinusoidal pose path at a fixed
// sampled anatomy; positions are the exact model vertices.
SynthSequenceResult synth_sequence(const MultilinearModel& model,
                                   const std::vector<std::string>& names,
                                   const std::vector<std::uint32_t>& vertices,
                                   const SynthSequenceSpec& spec);

}  // namespace artic
