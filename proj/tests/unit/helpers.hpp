#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>

#include "artic/geometry.hpp"
#include "artic/random.hpp"
#include "artic/tensor.hpp"

namespace testutil {

inline artic::Tensor3 random_tensor(std::size_t d1, std::size_t d2,
                                    std::size_t d3, artic::Rng& rng) {
  artic::Tensor3 t(d1, d2, d3);
  for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

inline Eigen::Matrix3d random_rotation(artic::Rng& rng, double max_angle_rad) {
  Eigen::Vector3d axis;
  do {
    axis = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1),
                           rng.uniform(-1, 1));
  } while (axis.norm() < 1e-6);
  axis.normalize();
  const double angle = rng.uniform(-max_angle_rad, max_angle_rad);
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

inline std::string temp_path(const std::string& stem) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() / "artic_tests";
  std::filesystem::create_directories(dir);
  return (dir / (stem + "_" + std::to_string(counter++))).string();
}

// Axis-aligned unit square pair forming a flat open sheet.
inline artic::SurfaceMesh quad_sheet() {
  artic::SurfaceMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

}  // namespace testutil
