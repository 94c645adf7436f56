#include "artic/mesh_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace artic {

namespace {

using nlohmann::json;

json parse_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error(std::string(what) + ": cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string(what) + ": invalid JSON in " + path +
                             ": " + e.what());
  }
  return j;
}

void write_json_file(const json& j, const std::string& path,
                     const char* what) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error(std::string(what) + ": cannot write " + path);
  out << j.dump(2) << '\n';
}

[[noreturn]] void obj_fail(const std::string& path, std::size_t line,
                           const std::string& why) {
  throw std::runtime_error("obj: " + path + ":" + std::to_string(line) +
                           ": " + why);
}

}  // namespace

SurfaceMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("obj: cannot open " + path);
  SurfaceMesh mesh;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      double x, y, z;
      ss >> x >> y >> z;
      if (!ss) obj_fail(path, lineno, "malformed vertex");
      std::string rest;
      if (ss >> rest) obj_fail(path, lineno, "trailing vertex data");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      long long a, b, c;
      ss >> a >> b >> c;
      if (!ss) obj_fail(path, lineno, "malformed face (expected f i j k)");
      std::string rest;
      if (ss >> rest) obj_fail(path, lineno, "only triangle faces supported");
      for (const long long idx : {a, b, c})
        if (idx < 1 ||
            idx > static_cast<long long>(mesh.vertices.size()))
          obj_fail(path, lineno, "face index out of range");
      mesh.faces.push_back({static_cast<std::uint32_t>(a - 1),
                            static_cast<std::uint32_t>(b - 1),
                            static_cast<std::uint32_t>(c - 1)});
    } else {
      obj_fail(path, lineno, "unsupported directive '" + tag + "'");
    }
  }
  mesh.validate();
  return mesh;
}

void save_obj(const SurfaceMesh& mesh, const std::string& path) {
  mesh.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("obj: cannot write " + path);
  char buf[256];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(),
                  v.z());
    out << buf;
  }
  for (const auto& f : mesh.faces)
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) throw std::runtime_error("obj: write failed for " + path);
}

OrientedPointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cloud: cannot open " + path);
  OrientedPointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    double x, y, z;
    ss >> x >> y >> z;
    if (!ss) obj_fail(path, lineno, "malformed point line");
    if (tag == "v")
      cloud.points.emplace_back(x, y, z);
    else if (tag == "vn")
      cloud.normals.emplace_back(x, y, z);
    else
      obj_fail(path, lineno, "unsupported directive '" + tag + "'");
  }
  cloud.validate();
  return cloud;
}

void save_cloud(const OrientedPointCloud& cloud, const std::string& path) {
  cloud.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cloud: cannot write " + path);
  char buf[256];
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    const auto& n = cloud.normals[i];
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\nvn %.17g %.17g %.17g\n",
                  p.x(), p.y(), p.z(), n.x(), n.y(), n.z());
    out << buf;
  }
  if (!out) throw std::runtime_error("cloud: write failed for " + path);
}

std::map<std::string, std::uint32_t> load_template_landmarks(
    const std::string& path) {
  const json j = parse_json_file(path, "landmarks");
  if (!j.is_array())
    throw std::runtime_error("landmarks: expected array in " + path);
  std::map<std::string, std::uint32_t> out;
  for (const auto& e : j) {
    if (!e.contains("name") || !e.contains("vertex_index"))
      throw std::runtime_error(
          "landmarks: entry needs name and vertex_index in " + path);
    out[e.at("name").get<std::string>()] =
        e.at("vertex_index").get<std::uint32_t>();
  }
  return out;
}

void save_template_landmarks(const std::map<std::string, std::uint32_t>& lm,
                             const std::string& path) {
  json j = json::array();
  for (const auto& [name, idx] : lm)
    j.push_back({{"name", name}, {"vertex_index", idx}});
  write_json_file(j, path, "landmarks");
}

LandmarkSet load_scan_landmarks(const std::string& path) {
  const json j = parse_json_file(path, "landmarks");
  if (!j.is_array())
    throw std::runtime_error("landmarks: expected array in " + path);
  LandmarkSet out;
  for (const auto& e : j) {
    if (!e.contains("name") || !e.contains("x") || !e.contains("y") ||
        !e.contains("z"))
      throw std::runtime_error("landmarks: entry needs name, x, y, z in " +
                               path);
    out.push_back({e.at("name").get<std::string>(),
                   Eigen::Vector3d(e.at("x").get<double>(),
                                   e.at("y").get<double>(),
                                   e.at("z").get<double>())});
  }
  return out;
}

void save_scan_landmarks(const LandmarkSet& lm, const std::string& path) {
  json j = json::array();
  for (const auto& e : lm)
    j.push_back({{"name", e.name},
                 {"x", e.position.x()},
                 {"y", e.position.y()},
                 {"z", e.position.z()}});
  write_json_file(j, path, "landmarks");
}

RegionMasks load_region_masks(const std::string& path) {
  const json j = parse_json_file(path, "masks");
  if (!j.is_array())
    throw std::runtime_error("masks: expected array in " + path);
  RegionMasks out;
  for (const auto& e : j) {
    if (!e.contains("name") || !e.contains("vertices"))
      throw std::runtime_error("masks: entry needs name and vertices in " +
                               path);
    out.emplace_back(e.at("name").get<std::string>(),
                     e.at("vertices").get<std::vector<std::uint32_t>>());
  }
  return out;
}

void save_region_masks(const RegionMasks& masks, const std::string& path) {
  json j = json::array();
  for (const auto& [name, verts] : masks)
    j.push_back({{"name", name}, {"vertices", verts}});
  write_json_file(j, path, "masks");
}

RigidTransform load_transform(const std::string& path) {
  const json j = parse_json_file(path, "transform");
  if (!j.contains("rotation") || !j.contains("translation"))
    throw std::runtime_error("transform: needs rotation and translation in " +
                             path);
  const auto r = j.at("rotation").get<std::vector<double>>();
  const auto t = j.at("translation").get<std::vector<double>>();
  if (r.size() != 9 || t.size() != 3)
    throw std::runtime_error("transform: rotation must have 9 values and "
                             "translation 3 in " + path);
  RigidTransform out;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      out.rotation(i, k) = r[static_cast<std::size_t>(3 * i + k)];
  out.translation = Eigen::Vector3d(t[0], t[1], t[2]);
  return out;
}

void save_transform(const RigidTransform& t, const std::string& path) {
  std::vector<double> r(9);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      r[static_cast<std::size_t>(3 * i + k)] = t.rotation(i, k);
  json j = {{"rotation", r},
            {"translation",
             {t.translation.x(), t.translation.y(), t.translation.z()}}};
  write_json_file(j, path, "transform");
}

}  // namespace artic
