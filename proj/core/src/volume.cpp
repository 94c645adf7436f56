#include "artic/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace artic {

namespace {

static_assert(std::endian::native == std::endian::little,
              "payload I/O assumes a little-endian host");

void check_grid(const std::array<std::size_t, 3>& dims,
                const Eigen::Vector3d& spacing, std::size_t payload,
                const char* what) {
  if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0)
    throw std::runtime_error(std::string(what) + ": zero dimension");
  if (!(spacing.x() > 0.0) || !(spacing.y() > 0.0) || !(spacing.z() > 0.0))
    throw std::runtime_error(std::string(what) + ": non-positive spacing");
  if (payload != dims[0] * dims[1] * dims[2])
    throw std::runtime_error(std::string(what) + ": payload size mismatch");
}

struct Header {
  std::array<std::size_t, 3> dims;
  Eigen::Vector3d spacing;
  Eigen::Vector3d origin;
  std::string type;
};

Header read_header(std::istream& in, const std::string& path) {
  Header h;
  std::string line;
  if (!std::getline(in, line) || line != "MVOL1")
    throw std::runtime_error("volume: malformed header (magic) in " + path);

  auto expect = [&](const char* key) {
    if (!std::getline(in, line))
      throw std::runtime_error("volume: truncated header in " + path);
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key)
      throw std::runtime_error("volume: malformed header (expected '" +
                               std::string(key) + "') in " + path);
    return ss;
  };

  {
    auto ss = expect("dims");
    long long a = -1, b = -1, c = -1;
    ss >> a >> b >> c;
    if (!ss || a <= 0 || b <= 0 || c <= 0)
      throw std::runtime_error("volume: malformed dims in " + path);
    h.dims = {static_cast<std::size_t>(a), static_cast<std::size_t>(b),
              static_cast<std::size_t>(c)};
  }
  {
    auto ss = expect("spacing");
    ss >> h.spacing.x() >> h.spacing.y() >> h.spacing.z();
    if (!ss) throw std::runtime_error("volume: malformed spacing in " + path);
  }
  {
    auto ss = expect("origin");
    ss >> h.origin.x() >> h.origin.y() >> h.origin.z();
    if (!ss) throw std::runtime_error("volume: malformed origin in " + path);
  }
  {
    auto ss = expect("data");
    std::string endian;
    ss >> h.type >> endian;
    if (!ss || endian != "little-endian")
      throw std::runtime_error("volume: malformed data line in " + path);
  }
  if (!std::getline(in, line) || !line.empty())
    throw std::runtime_error("volume: missing blank separator in " + path);
  return h;
}

void write_header(std::ostream& out, const std::array<std::size_t, 3>& dims,
                  const Eigen::Vector3d& spacing, const Eigen::Vector3d& origin,
                  const char* type) {
  char buf[256];
  out << "MVOL1\n";
  out << "dims " << dims[0] << ' ' << dims[1] << ' ' << dims[2] << '\n';
  std::snprintf(buf, sizeof buf, "spacing %.17g %.17g %.17g\n", spacing.x(),
                spacing.y(), spacing.z());
  out << buf;
  std::snprintf(buf, sizeof buf, "origin %.17g %.17g %.17g\n", origin.x(),
                origin.y(), origin.z());
  out << buf;
  out << "data " << type << " little-endian\n\n";
}

}  // namespace

void ScalarVolume::validate() const {
  check_grid(dims, spacing, data.size(), "volume");
  for (const double v : data)
    if (!std::isfinite(v))
      throw std::runtime_error("volume: non-finite value");
}

void validate_gray(const GrayVolume& v) {
  v.validate();
  for (const double x : v.data)
    if (x < 0.0 || x > 255.0)
      throw std::runtime_error("volume: gray value outside [0, 255]");
}

void TissuePartition::validate() const {
  check_grid(dims, spacing, labels.size(), "partition");
  for (const auto l : labels)
    if (l > 1) throw std::runtime_error("partition: label is not 0/1");
}

bool ScalarVolume::sample(const Eigen::Vector3d& pos, double& value) const {
  const Eigen::Vector3d rel = pos - origin;
  const double fx = rel.x() / spacing.x();
  const double fy = rel.y() / spacing.y();
  const double fz = rel.z() / spacing.z();
  if (!(fx >= 0.0) || !(fy >= 0.0) || !(fz >= 0.0)) return false;
  if (fx > static_cast<double>(dims[0] - 1) ||
      fy > static_cast<double>(dims[1] - 1) ||
      fz > static_cast<double>(dims[2] - 1))
    return false;
  const auto x0 = std::min(static_cast<std::size_t>(fx), dims[0] - 1);
  const auto y0 = std::min(static_cast<std::size_t>(fy), dims[1] - 1);
  const auto z0 = std::min(static_cast<std::size_t>(fz), dims[2] - 1);
  const std::size_t x1 = std::min(x0 + 1, dims[0] - 1);
  const std::size_t y1 = std::min(y0 + 1, dims[1] - 1);
  const std::size_t z1 = std::min(z0 + 1, dims[2] - 1);
  const double tx = fx - static_cast<double>(x0);
  const double ty = fy - static_cast<double>(y0);
  const double tz = fz - static_cast<double>(z0);
  const double c000 = at(x0, y0, z0), c100 = at(x1, y0, z0);
  const double c010 = at(x0, y1, z0), c110 = at(x1, y1, z0);
  const double c001 = at(x0, y0, z1), c101 = at(x1, y0, z1);
  const double c011 = at(x0, y1, z1), c111 = at(x1, y1, z1);
  const double c00 = c000 + tx * (c100 - c000);
  const double c10 = c010 + tx * (c110 - c010);
  const double c01 = c001 + tx * (c101 - c001);
  const double c11 = c011 + tx * (c111 - c011);
  const double c0 = c00 + ty * (c10 - c00);
  const double c1 = c01 + ty * (c11 - c01);
  value = c0 + tz * (c1 - c0);
  return true;
}

ScalarVolume load_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("volume: cannot open " + path);
  const Header h = read_header(in, path);
  if (h.type != "float32")
    throw std::runtime_error("volume: expected float32 payload in " + path);
  ScalarVolume v;
  v.dims = h.dims;
  v.spacing = h.spacing;
  v.origin = h.origin;
  const std::size_t n = v.voxel_count();
  std::vector<float> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(float))
    throw std::runtime_error("volume: payload size mismatch in " + path);
  char extra;
  if (in.read(&extra, 1))
    throw std::runtime_error("volume: payload size mismatch in " + path);
  v.data.assign(raw.begin(), raw.end());
  v.validate();
  return v;
}

void save_volume(const ScalarVolume& v, const std::string& path) {
  v.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("volume: cannot write " + path);
  write_header(out, v.dims, v.spacing, v.origin, "float32");
  std::vector<float> raw(v.data.begin(), v.data.end());
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!out) throw std::runtime_error("volume: write failed for " + path);
}

TissuePartition load_partition(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("partition: cannot open " + path);
  const Header h = read_header(in, path);
  if (h.type != "uint8")
    throw std::runtime_error("partition: expected uint8 payload in " + path);
  TissuePartition p;
  p.dims = h.dims;
  p.spacing = h.spacing;
  p.origin = h.origin;
  const std::size_t n = p.voxel_count();
  p.labels.resize(n);
  in.read(reinterpret_cast<char*>(p.labels.data()),
          static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw std::runtime_error("partition: payload size mismatch in " + path);
  char extra;
  if (in.read(&extra, 1))
    throw std::runtime_error("partition: payload size mismatch in " + path);
  p.validate();
  return p;
}

void save_partition(const TissuePartition& p, const std::string& path) {
  p.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("partition: cannot write " + path);
  write_header(out, p.dims, p.spacing, p.origin, "uint8");
  out.write(reinterpret_cast<const char*>(p.labels.data()),
            static_cast<std::streamsize>(p.labels.size()));
  if (!out) throw std::runtime_error("partition: write failed for " + path);
}

ScalarVolume crop(const ScalarVolume& v, const std::array<std::size_t, 3>& lo,
                  const std::array<std::size_t, 3>& hi) {
  for (int a = 0; a < 3; ++a) {
    const auto ia = static_cast<std::size_t>(a);
    if (!(lo[ia] < hi[ia]) || hi[ia] > v.dims[ia])
      throw std::runtime_error("volume: crop bounds out of range");
  }
  ScalarVolume out;
  out.dims = {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]};
  out.spacing = v.spacing;
  out.origin = v.origin + Eigen::Vector3d(
                              static_cast<double>(lo[0]) * v.spacing.x(),
                              static_cast<double>(lo[1]) * v.spacing.y(),
                              static_cast<double>(lo[2]) * v.spacing.z());
  out.data.resize(out.voxel_count());
  for (std::size_t z = 0; z < out.dims[2]; ++z)
    for (std::size_t y = 0; y < out.dims[1]; ++y)
      for (std::size_t x = 0; x < out.dims[0]; ++x)
        out.at(x, y, z) = v.at(x + lo[0], y + lo[1], z + lo[2]);
  return out;
}

GrayVolume quantize(const ScalarVolume& v) {
  v.validate();
  const auto [mn_it, mx_it] = std::minmax_element(v.data.begin(), v.data.end());
  const double mn = *mn_it, mx = *mx_it;
  GrayVolume out = v;
  if (mx <= mn) {
    std::fill(out.data.begin(), out.data.end(), 0.0);
    return out;
  }
  const double scale = 255.0 / (mx - mn);
  for (auto& x : out.data) x = (x - mn) * scale;
  return out;
}

int otsu_threshold(const GrayVolume& v) {
  validate_gray(v);
  std::array<std::uint64_t, 256> hist{};
  for (const double x : v.data) {
    auto bin = static_cast<int>(x);
    bin = std::clamp(bin, 0, 255);
    ++hist[static_cast<std::size_t>(bin)];
  }
  int occupied = 0;
  for (const auto c : hist)
    if (c > 0) ++occupied;
  if (occupied < 2)
    throw std::runtime_error("volume: degenerate histogram for thresholding");

  const double total = static_cast<double>(v.voxel_count());
  double total_sum = 0.0;
  for (int b = 0; b < 256; ++b)
    total_sum += static_cast<double>(b) * static_cast<double>(hist[
        static_cast<std::size_t>(b)]);

  int best_t = 0;
  double best_var = -1.0;
  double w0 = 0.0, sum0 = 0.0;
  for (int t = 0; t < 256; ++t) {
    w0 += static_cast<double>(hist[static_cast<std::size_t>(t)]);
    sum0 += static_cast<double>(t) *
            static_cast<double>(hist[static_cast<std::size_t>(t)]);
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (total_sum - sum0) / w1;
    const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var) {
      best_var = var;
      best_t = t;
    }
  }
  return best_t;
}

TissuePartition segment(const GrayVolume& v, int* threshold_out) {
  const int t = otsu_threshold(v);
  if (threshold_out) *threshold_out = t;
  TissuePartition p;
  p.dims = v.dims;
  p.spacing = v.spacing;
  p.origin = v.origin;
  p.labels.resize(v.voxel_count());
  for (std::size_t i = 0; i < v.data.size(); ++i)
    p.labels[i] = v.data[i] > static_cast<double>(t) ? 1 : 0;
  return p;
}

OrientedPointCloud extract_surface(const TissuePartition& p) {
  p.validate();
  OrientedPointCloud cloud;
  const auto nx = static_cast<long long>(p.dims[0]);
  const auto ny = static_cast<long long>(p.dims[1]);
  const auto nz = static_cast<long long>(p.dims[2]);
  auto object_at = [&](long long x, long long y, long long z) {
    return p.labels[p.index(static_cast<std::size_t>(x),
                            static_cast<std::size_t>(y),
                            static_cast<std::size_t>(z))] != 0;
  };
  for (long long z = 0; z < nz; ++z)
    for (long long y = 0; y < ny; ++y)
      for (long long x = 0; x < nx; ++x) {
        if (!object_at(x, y, z)) continue;
        bool surface = false;
        static const int face6[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                        {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
        for (const auto& d : face6) {
          const long long qx = x + d[0], qy = y + d[1], qz = z + d[2];
          if (qx < 0 || qy < 0 || qz < 0 || qx >= nx || qy >= ny || qz >= nz)
            continue;  // outside the grid is not background
          if (!object_at(qx, qy, qz)) {
            surface = true;
            break;
          }
        }
        if (!surface) continue;
        Eigen::Vector3d acc = Eigen::Vector3d::Zero();
        for (int dz = -1; dz <= 1; ++dz)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              if (dx == 0 && dy == 0 && dz == 0) continue;
              const long long qx = x + dx, qy = y + dy, qz = z + dz;
              if (qx < 0 || qy < 0 || qz < 0 || qx >= nx || qy >= ny ||
                  qz >= nz)
                continue;
              if (object_at(qx, qy, qz)) continue;
              Eigen::Vector3d dir(static_cast<double>(dx) * p.spacing.x(),
                                  static_cast<double>(dy) * p.spacing.y(),
                                  static_cast<double>(dz) * p.spacing.z());
              acc += dir.normalized();
            }
        const double len = acc.norm();
        if (len < 1e-9) continue;  // cancelling directions: skip voxel
        cloud.points.push_back(p.position(static_cast<std::size_t>(x),
                                          static_cast<std::size_t>(y),
                                          static_cast<std::size_t>(z)));
        cloud.normals.push_back(acc / len);
      }
  return cloud;
}

}  // namespace artic
