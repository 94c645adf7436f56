#pragma once

#include <map>
#include <string>
#include <vector>

#include "artic/geometry.hpp"

namespace artic {

// OBJ subset: "v x y z" and "f i j k" with 1-based indices. Anything
// else (other directives, polygon faces, v/vt/vn index forms) is
// rejected with a diagnostic naming the offending line.
SurfaceMesh load_obj(const std::string& path);
void save_obj(const SurfaceMesh& mesh, const std::string& path);

// Clouds reuse the OBJ vocabulary: paired "v" and "vn" lines, one
// normal per point, in order.
OrientedPointCloud load_cloud(const std::string& path);
void save_cloud(const OrientedPointCloud& cloud, const std::string& path);

// Template landmark tables: JSON array of {"name", "vertex_index"}.
std::map<std::string, std::uint32_t> load_template_landmarks(
    const std::string& path);
void save_template_landmarks(const std::map<std::string, std::uint32_t>& lm,
                             const std::string& path);

// Scan annotations: JSON array of {"name", "x", "y", "z"}.
LandmarkSet load_scan_landmarks(const std::string& path);
void save_scan_landmarks(const LandmarkSet& lm, const std::string& path);

// Region masks: JSON array of {"name", "vertices": [indices]}.
using RegionMasks = std::vector<std::pair<std::string, std::vector<std::uint32_t>>>;
RegionMasks load_region_masks(const std::string& path);
void save_region_masks(const RegionMasks& masks, const std::string& path);

// Rigid transform JSON: {"rotation": 9 row-major values, "translation": 3}.
RigidTransform load_transform(const std::string& path);
void save_transform(const RigidTransform& t, const std::string& path);

}  // namespace artic
