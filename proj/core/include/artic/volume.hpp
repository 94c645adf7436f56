#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "artic/geometry.hpp"

namespace artic {

// Regular scalar grid in physical coordinates. Voxel (x, y, z) sits at
// origin + (x * hx, y * hy, z * hz); x is the fastest-varying index in
// the payload.
struct ScalarVolume {
  std::array<std::size_t, 3> dims{0, 0, 0};
  Eigen::Vector3d spacing{1.0, 1.0, 1.0};
  Eigen::Vector3d origin{0.0, 0.0, 0.0};
  std::vector<double> data;

  std::size_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }
  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return (z * dims[1] + y) * dims[0] + x;
  }
  double& at(std::size_t x, std::size_t y, std::size_t z) {
    return data[index(x, y, z)];
  }
  double at(std::size_t x, std::size_t y, std::size_t z) const {
    return data[index(x, y, z)];
  }
  Eigen::Vector3d position(std::size_t x, std::size_t y, std::size_t z) const {
    return origin + Eigen::Vector3d(static_cast<double>(x) * spacing.x(),
                                    static_cast<double>(y) * spacing.y(),
                                    static_cast<double>(z) * spacing.z());
  }

  // Throws on zero dims, non-positive spacing, payload size mismatch,
  // or non-finite values.
  void validate() const;

  // Trilinear interpolation at a physical position. Returns false when
  // the position leaves the grid's interpolation domain.
  bool sample(const Eigen::Vector3d& pos, double& value) const;
};

// ScalarVolume whose values live in [0, 255].
using GrayVolume = ScalarVolume;
void validate_gray(const GrayVolume& v);

// Binary object/background labeling on the same grid.
struct TissuePartition {
  std::array<std::size_t, 3> dims{0, 0, 0};
  Eigen::Vector3d spacing{1.0, 1.0, 1.0};
  Eigen::Vector3d origin{0.0, 0.0, 0.0};
  std::vector<std::uint8_t> labels;  // 1 = object, 0 = background

  std::size_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }
  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return (z * dims[1] + y) * dims[0] + x;
  }
  bool object(std::size_t x, std::size_t y, std::size_t z) const {
    return labels[index(x, y, z)] != 0;
  }
  Eigen::Vector3d position(std::size_t x, std::size_t y, std::size_t z) const {
    return origin + Eigen::Vector3d(static_cast<double>(x) * spacing.x(),
                                    static_cast<double>(y) * spacing.y(),
                                    static_cast<double>(z) * spacing.z());
  }
  void validate() const;
};

// MVOL1 container: ASCII header (dims / spacing / origin / data line),
// blank separator, little-endian payload, x fastest.
ScalarVolume load_volume(const std::string& path);
void save_volume(const ScalarVolume& v, const std::string& path);
TissuePartition load_partition(const std::string& path);
void save_partition(const TissuePartition& p, const std::string& path);

// Axis-aligned crop, [lo, hi) per axis; origin shifts accordingly.
ScalarVolume crop(const ScalarVolume& v, const std::array<std::size_t, 3>& lo,
                  const std::array<std::size_t, 3>& hi);

// Linear remap of [min, max] onto [0, 255]; constant volumes map to 0.
GrayVolume quantize(const ScalarVolume& v);

// Threshold maximizing between-class variance over a 256-bin histogram
// (bin = floor of the value); smallest maximizer wins ties. Voxels with
// value > threshold are labeled object. Throws when the histogram has a
// single occupied bin.
int otsu_threshold(const GrayVolume& v);
TissuePartition segment(const GrayVolume& v, int* threshold_out = nullptr);

// Object voxels with at least one background voxel in their
// 6-neighborhood become surface points; normals are the normalized sum
// of unit physical directions toward 26-neighborhood background voxels.
// Voxels whose direction sum cancels are dropped.
OrientedPointCloud extract_surface(const TissuePartition& p);

}  // namespace artic
