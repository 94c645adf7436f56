#include "artic/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <stdexcept>

#include "artic/hash.hpp"
#include "artic/random.hpp"

namespace artic {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

SurfaceMesh disk_grid(
    int rings, int spokes, int splits,
    const std::function<Eigen::Vector3d(double, double)>& surface) {
  SurfaceMesh mesh;
  mesh.vertices.push_back(surface(0.0, 0.0));
  for (int r = 1; r <= rings; ++r) {
    const double rho = static_cast<double>(r) / rings;
    for (int s = 0; s < spokes; ++s)
      mesh.vertices.push_back(surface(rho, 2.0 * kPi * s / spokes));
  }
  const auto idx = [spokes](int r, int s) -> std::uint32_t {
    if (r == 0) return 0;
    return static_cast<std::uint32_t>(1 + (r - 1) * spokes + (s % spokes));
  };
  for (int s = 0; s < spokes; ++s)
    mesh.faces.push_back({idx(0, 0), idx(1, s), idx(1, s + 1)});
  for (int r = 1; r < rings; ++r)
    for (int s = 0; s < spokes; ++s) {
      const std::uint32_t a = idx(r, s);
      const std::uint32_t b = idx(r, s + 1);
      const std::uint32_t above_a = idx(r + 1, s);
      const std::uint32_t above_b = idx(r + 1, s + 1);
      mesh.faces.push_back({a, above_a, above_b});
      mesh.faces.push_back({a, above_b, b});
    }
  const std::size_t base_faces = mesh.faces.size();
  const std::size_t stride = base_faces / static_cast<std::size_t>(splits);
  for (int k = 0; k < splits; ++k) {
    const std::size_t f =
        (static_cast<std::size_t>(k) * base_faces) / splits + stride / 2;
    const auto tri = mesh.faces[f];
    const auto center = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back((mesh.vertices[tri[0]] + mesh.vertices[tri[1]] +
                             mesh.vertices[tri[2]]) /
                            3.0);
    mesh.faces[f] = {tri[0], tri[1], center};
    mesh.faces.push_back({tri[1], tri[2], center});
    mesh.faces.push_back({tri[2], tri[0], center});
  }
  return mesh;
}

double row_jitter(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t payload[3] = {seed, a, b};
  const std::uint64_t h = fnv1a64(payload, sizeof(payload));
  return (static_cast<double>(h >> 11) * 0x1.0p-53) - 0.5;
}

}  // namespace

SurfaceMesh make_tongue_template() {
  SurfaceMesh mesh = disk_grid(32, 96, 27, [](double rho, double theta) {
    const double u = rho * std::cos(theta);
    const double v = rho * std::sin(theta);
    const double z = 14.0 * (1.0 - rho * rho) * (1.0 + 0.3 * u);
    return Eigen::Vector3d(30.0 * u, 24.0 * v, z);
  });
  const auto rim = [](int s) -> std::uint32_t {
    return static_cast<std::uint32_t>(1 + 31 * 96 + s);
  };
  mesh.landmarks["tip"] = rim(0);
  mesh.landmarks["left"] = rim(24);
  mesh.landmarks["back"] = rim(48);
  mesh.landmarks["right"] = rim(72);
  mesh.landmarks["apex"] = 0;
  mesh.validate();
  return mesh;
}

SurfaceMesh make_palate_template() {
  SurfaceMesh mesh = disk_grid(6, 158, 45, [](double rho, double theta) {
    const double u = rho * std::cos(theta);
    const double v = rho * std::sin(theta);
    const double z = 18.0 + 7.0 * (1.0 - rho * rho);
    return Eigen::Vector3d(26.0 * u, 22.0 * v, z);
  });
  const auto rim = [](int s) -> std::uint32_t {
    return static_cast<std::uint32_t>(1 + 5 * 158 + s);
  };
  mesh.landmarks["front"] = rim(0);
  mesh.landmarks["left"] = rim(39);
  mesh.landmarks["back"] = rim(79);
  mesh.landmarks["right"] = rim(118);
  mesh.validate();
  return mesh;
}

RegionMasks tongue_regions(const SurfaceMesh& tongue) {
  if (tongue.vertices.size() < 1 + 32 * 96)
    throw std::invalid_argument("regions: not a tongue template layout");
  std::vector<std::uint32_t> tip, blade, back, dorsum, lateral;
  dorsum.push_back(0);
  for (std::uint32_t i = 1; i <= 32 * 96; ++i) {
    const int r = static_cast<int>((i - 1) / 96) + 1;
    const int s = static_cast<int>((i - 1) % 96);
    const bool front_narrow = s <= 8 || s >= 88;   // |theta| <= pi/6
    const bool front_wide = s <= 12 || s >= 84;    // |theta| <= pi/4
    const bool rear = s >= 36 && s <= 60;          // |theta - pi| <= pi/4
    const bool side = (s >= 13 && s <= 35) || (s >= 61 && s <= 83);
    if (r >= 25 && front_narrow) {
      tip.push_back(i);
    } else if (r >= 13 && r <= 24 && front_wide) {
      blade.push_back(i);
    } else if (r >= 13 && rear) {
      back.push_back(i);
    } else if (r <= 12) {
      dorsum.push_back(i);
    } else if (side) {
      lateral.push_back(i);
    }
  }
  RegionMasks masks;
  masks.emplace_back("tip", std::move(tip));
  masks.emplace_back("blade", std::move(blade));
  masks.emplace_back("back", std::move(back));
  masks.emplace_back("dorsum", std::move(dorsum));
  masks.emplace_back("lateral", std::move(lateral));
  return masks;
}

std::vector<std::uint32_t> midsagittal_mask(const SurfaceMesh& mesh,
                                            double half_width) {
  if (!(half_width > 0.0))
    throw std::invalid_argument("mask: non-positive half width");
  std::vector<std::uint32_t> mask;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    if (std::abs(mesh.vertices[i].y()) <= half_width)
      mask.push_back(static_cast<std::uint32_t>(i));
  return mask;
}

SurfaceMesh make_closed_surface(double radius, int subdivisions,
                                double bump_amplitude, std::uint64_t seed) {
  if (!(radius > 0.0)) throw std::invalid_argument("solid: radius <= 0");
  if (subdivisions < 0 || subdivisions > 6)
    throw std::invalid_argument("solid: subdivisions outside [0, 6]");
  if (!(bump_amplitude >= 0.0) || bump_amplitude >= 0.9)
    throw std::invalid_argument("solid: bump amplitude outside [0, 0.9)");

  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<std::uint32_t, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    const auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      const auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const auto index = static_cast<std::uint32_t>(verts.size());
      verts.push_back((verts[a] + verts[b]).normalized());
      midpoint.emplace(key, index);
      return index;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const std::uint32_t ab = mid(f[0], f[1]);
      const std::uint32_t bc = mid(f[1], f[2]);
      const std::uint32_t ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  Rng rng(seed);
  double c[3];
  double norm = 0.0;
  for (double& x : c) {
    x = rng.uniform(-1.0, 1.0);
    norm += std::abs(x);
  }
  if (norm < 1e-12) {
    c[0] = 1.0;
    norm = 1.0;
  }
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  SurfaceMesh mesh;
  mesh.vertices.reserve(verts.size());
  for (const auto& v : verts) {
    const double g = (c[0] * std::sin(3.0 * v.x() + phase) * std::cos(2.0 * v.y()) +
                      c[1] * std::sin(2.0 * v.z() - phase) +
                      c[2] * std::cos(2.0 * v.x() + 3.0 * v.y())) /
                     norm;
    mesh.vertices.push_back(v * radius * (1.0 + bump_amplitude * g));
  }
  mesh.faces = faces;

  double volume6 = 0.0;
  for (const auto& f : mesh.faces)
    volume6 += mesh.vertices[f[0]].dot(
        mesh.vertices[f[1]].cross(mesh.vertices[f[2]]));
  if (volume6 < 0.0)
    for (auto& f : mesh.faces) std::swap(f[1], f[2]);

  mesh.validate();
  return mesh;
}

void SynthModelSpec::validate() const {
  if (speakers < 2 || poses < 2)
    throw std::invalid_argument("synth model: needs two entries per mode");
  if (speaker_rank < 1 || pose_rank < 1)
    throw std::invalid_argument("synth model: rank < 1");
  if (speaker_rank >= speakers || pose_rank >= poses)
    throw std::invalid_argument(
        "synth model: exact-rank construction needs rank < count");
  if (!(amplitude >= 0.0))
    throw std::invalid_argument("synth model: negative amplitude");
}

MeshCollection synth_collection(const SurfaceMesh& templ,
                                const SynthModelSpec& spec) {
  templ.validate();
  spec.validate();
  const std::size_t k = 3 * templ.vertices.size();
  const std::size_t q = spec.speaker_rank * spec.pose_rank;
  Rng rng(spec.seed);

  Eigen::Vector3d lo = templ.vertices.front();
  Eigen::Vector3d hi = lo;
  for (const auto& v : templ.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Eigen::Vector3d center = 0.5 * (lo + hi);
  const double scale = std::max((hi - lo).norm(), 1e-9);

  // Smooth orthonormal displacement fields.
  Eigen::MatrixXd basis;
  for (int attempt = 0; attempt < 32; ++attempt) {
    Eigen::MatrixXd fields(k, q);
    for (std::size_t col = 0; col < q; ++col) {
      Eigen::Vector3d axis, direction;
      do {
        axis = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1),
                               rng.uniform(-1, 1));
      } while (axis.norm() < 1e-3);
      axis.normalize();
      do {
        direction = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                    rng.uniform(-1, 1));
      } while (direction.norm() < 1e-3);
      direction.normalize();
      const double omega = rng.uniform(0.5, 2.0) * 2.0 * kPi / scale;
      const double phase = rng.uniform(0.0, 2.0 * kPi);
      for (std::size_t vtx = 0; vtx < templ.vertices.size(); ++vtx) {
        const double arg =
            omega * (templ.vertices[vtx] - center).dot(axis) + phase;
        fields.block<3, 1>(static_cast<Eigen::Index>(3 * vtx),
                           static_cast<Eigen::Index>(col)) =
            direction * std::sin(arg);
      }
    }
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(fields);
    const Eigen::MatrixXd r = qr.matrixQR()
                                  .topRows(static_cast<Eigen::Index>(q))
                                  .triangularView<Eigen::Upper>();
    double min_diag = std::abs(r(0, 0));
    double max_diag = min_diag;
    for (Eigen::Index i = 1; i < r.rows(); ++i) {
      min_diag = std::min(min_diag, std::abs(r(i, i)));
      max_diag = std::max(max_diag, std::abs(r(i, i)));
    }
    if (min_diag > 1e-8 * std::max(max_diag, 1e-300)) {
      basis = qr.householderQ() *
              Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k),
                                        static_cast<Eigen::Index>(q));
      break;
    }
  }
  if (basis.size() == 0)
    throw std::runtime_error("synth model: could not build a smooth basis");

  // Zero-column-sum orthonormal mode coefficients keep the grand mean
  // at the template exactly.
  const auto mode_coefficients = [&rng](std::size_t count, std::size_t rank) {
    Eigen::MatrixXd g(static_cast<Eigen::Index>(count),
                      static_cast<Eigen::Index>(rank));
    for (int attempt = 0; attempt < 32; ++attempt) {
      for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
      g.rowwise() -= g.colwise().mean();
      const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
      const Eigen::MatrixXd r = qr.matrixQR()
                                    .topRows(g.cols())
                                    .triangularView<Eigen::Upper>();
      double min_diag = std::abs(r(0, 0));
      for (Eigen::Index i = 1; i < r.rows(); ++i)
        min_diag = std::min(min_diag, std::abs(r(i, i)));
      if (min_diag > 1e-8)
        return Eigen::MatrixXd(qr.householderQ() *
                               Eigen::MatrixXd::Identity(g.rows(), g.cols()));
    }
    throw std::runtime_error("synth model: degenerate mode coefficients");
  };
  const Eigen::MatrixXd u1 = mode_coefficients(spec.speakers,
                                               spec.speaker_rank);
  const Eigen::MatrixXd u2 = mode_coefficients(spec.poses, spec.pose_rank);

  Eigen::MatrixXd weights(static_cast<Eigen::Index>(spec.speaker_rank),
                          static_cast<Eigen::Index>(spec.pose_rank));
  for (Eigen::Index a = 0; a < weights.rows(); ++a)
    for (Eigen::Index b = 0; b < weights.cols(); ++b)
      weights(a, b) = spec.amplitude * rng.uniform(0.75, 1.25) /
                      ((1.0 + a) * (1.0 + b));

  MeshCollection collection;
  for (std::size_t i = 0; i < spec.speakers; ++i) {
    char label[32];
    std::snprintf(label, sizeof(label), "speaker%02zu", i);
    collection.speakers.emplace_back(label);
  }
  for (std::size_t j = 0; j < spec.poses; ++j) {
    char label[32];
    std::snprintf(label, sizeof(label), "pose%02zu", j);
    collection.poses.emplace_back(label);
  }
  collection.cells.assign(
      spec.speakers, std::vector<std::optional<SurfaceMesh>>(spec.poses));
  for (std::size_t i = 0; i < spec.speakers; ++i)
    for (std::size_t j = 0; j < spec.poses; ++j) {
      Eigen::VectorXd displacement =
          Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
      for (std::size_t a = 0; a < spec.speaker_rank; ++a)
        for (std::size_t b = 0; b < spec.pose_rank; ++b) {
          const double w = u1(static_cast<Eigen::Index>(i),
                              static_cast<Eigen::Index>(a)) *
                           u2(static_cast<Eigen::Index>(j),
                              static_cast<Eigen::Index>(b)) *
                           weights(static_cast<Eigen::Index>(a),
                                   static_cast<Eigen::Index>(b));
          displacement +=
              w * basis.col(static_cast<Eigen::Index>(a * spec.pose_rank + b));
        }
      SurfaceMesh mesh = templ;
      for (std::size_t vtx = 0; vtx < templ.vertices.size(); ++vtx)
        mesh.vertices[vtx] +=
            displacement.segment<3>(static_cast<Eigen::Index>(3 * vtx));
      collection.cells[i][j] = std::move(mesh);
    }
  collection.validate();
  return collection;
}

SynthModelResult synth_model(const SurfaceMesh& templ,
                             const SynthModelSpec& spec) {
  if (!(spec.amplitude > 0.0))
    throw std::invalid_argument("synth model: amplitude must be positive");
  SynthModelResult result;
  result.collection = synth_collection(templ, spec);
  const TrainingTensor tensor = build_tensor(result.collection);
  result.model = hosvd(tensor, result.collection);
  return result;
}

void SynthCloudSpec::validate() const {
  if (!(density > 0.0)) throw std::invalid_argument("cloud: density <= 0");
  if (!(noise_sigma >= 0.0))
    throw std::invalid_argument("cloud: negative noise");
  if (hole && !(hole->radius >= 0.0))
    throw std::invalid_argument("cloud: negative hole radius");
}

OrientedPointCloud synth_cloud(const SurfaceMesh& mesh,
                               const SynthCloudSpec& spec) {
  mesh.validate();
  spec.validate();
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += face_area(mesh, f);
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw std::invalid_argument("cloud: degenerate surface");

  const auto count =
      static_cast<std::size_t>(std::max(1.0, std::round(spec.density * total)));
  Rng rng(spec.seed);
  OrientedPointCloud cloud;
  cloud.points.reserve(count);
  cloud.normals.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const double u = rng.uniform01() * total;
    const auto it =
        std::lower_bound(cumulative.begin(), cumulative.end(), u);
    const auto f = static_cast<std::size_t>(it - cumulative.begin());
    const auto& tri = mesh.faces[std::min(f, mesh.faces.size() - 1)];
    const double r1 = rng.uniform01();
    const double r2 = rng.uniform01();
    const double sq = std::sqrt(r1);
    const double wa = 1.0 - sq;
    const double wb = sq * (1.0 - r2);
    const double wc = sq * r2;
    Eigen::Vector3d pos = wa * mesh.vertices[tri[0]] +
                          wb * mesh.vertices[tri[1]] +
                          wc * mesh.vertices[tri[2]];
    const Eigen::Vector3d normal =
        face_normal(mesh, std::min(f, mesh.faces.size() - 1));
    if (spec.noise_sigma > 0.0)
      pos += spec.noise_sigma * Eigen::Vector3d(rng.normal(), rng.normal(),
                                                rng.normal());
    if (spec.hole &&
        (pos - spec.hole->center).norm() <= spec.hole->radius)
      continue;
    if (normal.norm() < 0.5) continue;  // degenerate face
    cloud.points.push_back(pos);
    cloud.normals.push_back(normal);
  }
  return cloud;
}

void SynthVolumeSpec::validate() const {
  if (!(spacing.minCoeff() > 0.0))
    throw std::invalid_argument("volume: non-positive spacing");
  if (object_value < 0.0 || object_value > 255.0 || background_value < 0.0 ||
      background_value > 255.0)
    throw std::invalid_argument("volume: plateau outside [0, 255]");
  if (!(noise_sigma >= 0.0))
    throw std::invalid_argument("volume: negative noise");
  if (!(margin >= 0.0)) throw std::invalid_argument("volume: negative margin");
}

GrayVolume synth_volume(const SurfaceMesh& solid, const SynthVolumeSpec& spec) {
  solid.validate();
  spec.validate();
  if (!is_watertight(solid))
    throw std::invalid_argument("volume: surface is not watertight");

  Eigen::Vector3d lo = solid.vertices.front();
  Eigen::Vector3d hi = lo;
  for (const auto& v : solid.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  GrayVolume vol;
  vol.spacing = spec.spacing;
  vol.origin = lo - Eigen::Vector3d::Constant(spec.margin);
  const Eigen::Vector3d extent =
      hi - lo + Eigen::Vector3d::Constant(2.0 * spec.margin);
  for (int axis = 0; axis < 3; ++axis)
    vol.dims[static_cast<std::size_t>(axis)] = static_cast<std::size_t>(
        std::ceil(extent[axis] / spec.spacing[axis])) + 1;
  vol.data.assign(vol.dims[0] * vol.dims[1] * vol.dims[2],
                  spec.background_value);

  std::vector<double> crossings;
  for (std::size_t iz = 0; iz < vol.dims[2]; ++iz)
    for (std::size_t iy = 0; iy < vol.dims[1]; ++iy) {
      const double y0 = vol.origin.y() +
                        static_cast<double>(iy) * spec.spacing.y() +
                        row_jitter(spec.seed, iy, iz) * 1e-4 * spec.spacing.y();
      const double z0 = vol.origin.z() +
                        static_cast<double>(iz) * spec.spacing.z() +
                        row_jitter(spec.seed ^ 0x5bd1e995u, iy, iz) * 1e-4 *
                            spec.spacing.z();
      crossings.clear();
      for (const auto& f : solid.faces) {
        const Eigen::Vector3d& a = solid.vertices[f[0]];
        const Eigen::Vector3d& b = solid.vertices[f[1]];
        const Eigen::Vector3d& c = solid.vertices[f[2]];
        const double det = (b.y() - a.y()) * (c.z() - a.z()) -
                           (c.y() - a.y()) * (b.z() - a.z());
        if (std::abs(det) < 1e-18) continue;
        const double lb = ((y0 - a.y()) * (c.z() - a.z()) -
                           (c.y() - a.y()) * (z0 - a.z())) /
                          det;
        const double lc = ((b.y() - a.y()) * (z0 - a.z()) -
                           (y0 - a.y()) * (b.z() - a.z())) /
                          det;
        const double la = 1.0 - lb - lc;
        if (la < 0.0 || lb < 0.0 || lc < 0.0) continue;
        crossings.push_back(la * a.x() + lb * b.x() + lc * c.x());
      }
      std::sort(crossings.begin(), crossings.end());
      if (crossings.size() % 2 == 1) crossings.pop_back();
      if (crossings.empty()) continue;
      for (std::size_t ix = 0; ix < vol.dims[0]; ++ix) {
        const double x =
            vol.origin.x() + static_cast<double>(ix) * spec.spacing.x();
        const auto below = static_cast<std::size_t>(
            std::upper_bound(crossings.begin(), crossings.end(), x) -
            crossings.begin());
        if (below % 2 == 1)
          vol.data[vol.index(ix, iy, iz)] = spec.object_value;
      }
    }

  if (spec.noise_sigma > 0.0) {
    Rng rng(spec.seed);
    for (double& v : vol.data)
      v = std::clamp(v + spec.noise_sigma * rng.normal(), 0.0, 255.0);
  }
  validate_gray(vol);
  return vol;
}

void SynthSequenceSpec::validate() const {
  if (frames < 1) throw std::invalid_argument("sequence: no frames");
  if (!(dt > 0.0)) throw std::invalid_argument("sequence: dt <= 0");
  if (!(pose_span >= 0.0) || !(speaker_span >= 0.0))
    throw std::invalid_argument("sequence: negative span");
}

SynthSequenceResult synth_sequence(const MultilinearModel& model,
                                   const std::vector<std::string>& names,
                                   const std::vector<std::uint32_t>& vertices,
                                   const SynthSequenceSpec& spec) {
  model.validate();
  spec.validate();
  if (names.empty() || names.size() != vertices.size())
    throw std::invalid_argument("sequence: marker name/vertex mismatch");
  for (const std::uint32_t v : vertices)
    if (v >= model.vertex_count())
      throw std::invalid_argument("sequence: vertex out of range");

  Rng rng(spec.seed);
  SynthSequenceResult result;
  result.true_speaker.resize(model.speaker_stats.mean.size());
  for (Eigen::Index i = 0; i < result.true_speaker.size(); ++i)
    result.true_speaker[i] =
        model.speaker_stats.mean[i] +
        model.speaker_stats.stddev[i] * spec.speaker_span *
            rng.truncated_normal(1.0);

  const Eigen::Index pr = model.pose_stats.mean.size();
  Eigen::VectorXd freq(pr), phase(pr);
  for (Eigen::Index j = 0; j < pr; ++j) {
    freq[j] = rng.uniform(0.4, 1.2);
    phase[j] = rng.uniform(0.0, 2.0 * kPi);
  }

  result.sequence.markers = names;
  for (std::size_t f = 0; f < spec.frames; ++f) {
    const double t = static_cast<double>(f) * spec.dt;
    Eigen::VectorXd p(pr);
    for (Eigen::Index j = 0; j < pr; ++j)
      p[j] = model.pose_stats.mean[j] +
             model.pose_stats.stddev[j] * spec.pose_span *
                 std::sin(2.0 * kPi * freq[j] * t + phase[j]);
    const Eigen::VectorXd v =
        model.mean + model.core.contract12(result.true_speaker, p);
    std::vector<Eigen::Vector3d> positions;
    positions.reserve(vertices.size());
    for (const std::uint32_t vtx : vertices)
      positions.emplace_back(v.segment<3>(3 * vtx));
    result.sequence.times.push_back(t);
    result.sequence.frames.push_back(std::move(positions));
    result.true_poses.push_back(std::move(p));
  }
  result.sequence.validate();
  return result;
}

}  // namespace artic
