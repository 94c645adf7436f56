#include "artic/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "artic/mesh_io.hpp"

namespace artic {

namespace {

constexpr double kStddevFloor = 1e-12;

void require(bool cond, const char* msg) {
  if (!cond) throw std::runtime_error(msg);
}

// Orthonormal factor of a Gram matrix, descending eigenvalues, with the
// largest-magnitude entry of every column made positive (first index on
// ties). Returns singular values of the unfolding alongside.
void gram_factor(const Eigen::MatrixXd& gram, Eigen::MatrixXd& u,
                 Eigen::VectorXd& singular_values) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  require(es.info() == Eigen::Success, "model: eigendecomposition failed");
  const Eigen::Index n = gram.rows();
  u.resize(n, n);
  singular_values.resize(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Eigen::Index src = n - 1 - c;  // ascending -> descending
    u.col(c) = es.eigenvectors().col(src);
    singular_values(c) = std::sqrt(std::max(es.eigenvalues()(src), 0.0));
  }
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double a = std::abs(u(r, c));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (u(arg, c) < 0.0) u.col(c) = -u.col(c);
  }
}

ModeStatistics mode_statistics(const Eigen::MatrixXd& modes) {
  ModeStatistics st;
  const Eigen::Index rows = modes.rows(), cols = modes.cols();
  st.mean = modes.colwise().mean();
  st.stddev.resize(cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double d = modes(r, c) - st.mean(c);
      acc += d * d;
    }
    const double var = rows > 1 ? acc / static_cast<double>(rows - 1) : 0.0;
    st.stddev(c) = std::max(std::sqrt(var), kStddevFloor);
  }
  return st;
}

}  // namespace

bool MeshCollection::complete() const {
  for (const auto& row : cells)
    for (const auto& cell : row)
      if (!cell.has_value()) return false;
  return true;
}

const SurfaceMesh& MeshCollection::first_mesh() const {
  for (const auto& row : cells)
    for (const auto& cell : row)
      if (cell.has_value()) return *cell;
  throw std::runtime_error("collection: no observed mesh");
}

void MeshCollection::validate() const {
  require(!speakers.empty() && !poses.empty(),
          "collection: empty speaker or pose axis");
  require(cells.size() == speakers.size(), "collection: ragged speaker axis");
  const SurfaceMesh* ref = nullptr;
  for (const auto& row : cells) {
    require(row.size() == poses.size(), "collection: ragged pose axis");
    for (const auto& cell : row) {
      if (!cell.has_value()) continue;
      cell->validate();
      if (!ref) {
        ref = &*cell;
        continue;
      }
      if (cell->vertices.size() != ref->vertices.size() ||
          cell->faces != ref->faces)
        throw std::runtime_error("collection: topology mismatch across cells");
    }
  }
  require(ref != nullptr, "collection: no observed mesh");
}

void MultilinearModel::validate() const {
  require(mean.size() > 0 && mean.size() % 3 == 0,
          "model: mean length must be a positive multiple of 3");
  require(core.dim3() == static_cast<std::size_t>(mean.size()),
          "model: core/mean size mismatch");
  require(core.dim1() == static_cast<std::size_t>(speaker_modes.cols()),
          "model: speaker rank mismatch");
  require(core.dim2() == static_cast<std::size_t>(pose_modes.cols()),
          "model: pose rank mismatch");
  require(speaker_stats.mean.size() == speaker_modes.cols() &&
              speaker_stats.stddev.size() == speaker_modes.cols(),
          "model: speaker statistics size mismatch");
  require(pose_stats.mean.size() == pose_modes.cols() &&
              pose_stats.stddev.size() == pose_modes.cols(),
          "model: pose statistics size mismatch");
  for (Eigen::Index i = 0; i < speaker_stats.stddev.size(); ++i)
    require(speaker_stats.stddev(i) > 0.0, "model: non-positive deviation");
  for (Eigen::Index i = 0; i < pose_stats.stddev.size(); ++i)
    require(pose_stats.stddev(i) > 0.0, "model: non-positive deviation");
}

MeshCollection complete_missing(const MeshCollection& collection) {
  collection.validate();
  const std::size_t m = collection.speaker_count();
  const std::size_t n = collection.pose_count();

  // Availability from the original grid only.
  for (std::size_t i = 0; i < m; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < n; ++j)
      any = any || collection.cells[i][j].has_value();
    if (!any)
      throw std::runtime_error("collection: speaker '" +
                               collection.speakers[i] + "' has no mesh");
  }
  for (std::size_t j = 0; j < n; ++j) {
    bool any = false;
    for (std::size_t i = 0; i < m; ++i)
      any = any || collection.cells[i][j].has_value();
    if (!any)
      throw std::runtime_error("collection: pose '" + collection.poses[j] +
                               "' observed for no speaker");
  }

  const SurfaceMesh& proto = collection.first_mesh();
  const auto v = proto.vertices.size();
  MeshCollection out = collection;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (collection.cells[i][j].has_value()) continue;
      Eigen::VectorXd speaker_mean =
          Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * v));
      std::size_t speaker_n = 0;
      for (std::size_t jj = 0; jj < n; ++jj)
        if (collection.cells[i][jj].has_value()) {
          speaker_mean += serialize(*collection.cells[i][jj]);
          ++speaker_n;
        }
      speaker_mean /= static_cast<double>(speaker_n);

      Eigen::VectorXd pose_mean =
          Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * v));
      std::size_t pose_n = 0;
      for (std::size_t ii = 0; ii < m; ++ii) {
        if (ii == i) continue;
        if (collection.cells[ii][j].has_value()) {
          pose_mean += serialize(*collection.cells[ii][j]);
          ++pose_n;
        }
      }
      if (pose_n == 0)
        throw std::runtime_error("collection: pose '" + collection.poses[j] +
                                 "' available from no other speaker");
      pose_mean /= static_cast<double>(pose_n);

      SurfaceMesh filled = proto;
      filled.landmarks = proto.landmarks;
      deserialize(0.5 * (speaker_mean + pose_mean), filled);
      out.cells[i][j] = std::move(filled);
    }
  return out;
}

TrainingTensor build_tensor(const MeshCollection& collection) {
  collection.validate();
  if (!collection.complete())
    throw std::runtime_error("collection: incomplete grid; fill missing "
                             "cells first");
  const std::size_t m = collection.speaker_count();
  const std::size_t n = collection.pose_count();
  const std::size_t k = 3 * collection.first_mesh().vertices.size();

  TrainingTensor t;
  t.data = Tensor3(m, n, k);
  t.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const Eigen::VectorXd f = serialize(*collection.cells[i][j]);
      t.data.fibre(i, j) = f;
      t.mean += f;
    }
  t.mean /= static_cast<double>(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t.data.fibre(i, j) -= t.mean;
  return t;
}

MultilinearModel hosvd(const TrainingTensor& tensor,
                       const MeshCollection& collection) {
  const std::size_t m = tensor.data.dim1();
  const std::size_t n = tensor.data.dim2();
  const std::size_t k = tensor.data.dim3();
  require(m > 0 && n > 0 && k > 0, "model: empty tensor");
  require(tensor.data.frobenius_norm() > 0.0,
          "model: degenerate all-zero tensor");
  require(static_cast<std::size_t>(tensor.mean.size()) == k,
          "model: mean/tensor size mismatch");

  // Gram matrices: small against k, so the spectra come cheap.
  Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                             static_cast<Eigen::Index>(m));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        acc += tensor.data.fibre(a, j).dot(tensor.data.fibre(b, j));
      g1(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
      g1(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = acc;
    }
  Eigen::MatrixXd g2 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                             static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        acc += tensor.data.fibre(i, a).dot(tensor.data.fibre(i, b));
      g2(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
      g2(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = acc;
    }

  MultilinearModel model;
  gram_factor(g1, model.speaker_modes, model.speaker_singular_values);
  gram_factor(g2, model.pose_modes, model.pose_singular_values);
  model.mean = tensor.mean;
  model.core = tensor.data.mode_multiply(1, model.speaker_modes.transpose())
                   .mode_multiply(2, model.pose_modes.transpose());
  model.speaker_stats = mode_statistics(model.speaker_modes);
  model.pose_stats = mode_statistics(model.pose_modes);
  model.faces = collection.first_mesh().faces;
  model.validate();
  return model;
}

MultilinearModel truncate(const MultilinearModel& model,
                          std::size_t speaker_rank, std::size_t pose_rank) {
  model.validate();
  require(speaker_rank >= 1 && speaker_rank <= model.speaker_rank(),
          "model: speaker rank out of range");
  require(pose_rank >= 1 && pose_rank <= model.pose_rank(),
          "model: pose rank out of range");
  MultilinearModel out;
  out.mean = model.mean;
  out.speaker_modes =
      model.speaker_modes.leftCols(static_cast<Eigen::Index>(speaker_rank));
  out.pose_modes =
      model.pose_modes.leftCols(static_cast<Eigen::Index>(pose_rank));
  out.speaker_singular_values = model.speaker_singular_values;
  out.pose_singular_values = model.pose_singular_values;
  out.core = Tensor3(speaker_rank, pose_rank, model.core.dim3());
  for (std::size_t a = 0; a < speaker_rank; ++a)
    for (std::size_t b = 0; b < pose_rank; ++b)
      out.core.fibre(a, b) = model.core.fibre(a, b);
  out.speaker_stats.mean =
      model.speaker_stats.mean.head(static_cast<Eigen::Index>(speaker_rank));
  out.speaker_stats.stddev =
      model.speaker_stats.stddev.head(static_cast<Eigen::Index>(speaker_rank));
  out.pose_stats.mean =
      model.pose_stats.mean.head(static_cast<Eigen::Index>(pose_rank));
  out.pose_stats.stddev =
      model.pose_stats.stddev.head(static_cast<Eigen::Index>(pose_rank));
  out.faces = model.faces;
  out.validate();
  return out;
}

SurfaceMesh generate(const MultilinearModel& model, const Eigen::VectorXd& s,
                     const Eigen::VectorXd& p) {
  if (static_cast<std::size_t>(s.size()) != model.speaker_rank() ||
      static_cast<std::size_t>(p.size()) != model.pose_rank())
    throw std::runtime_error("model: coordinate length mismatch");
  const Eigen::VectorXd coords = model.mean + model.core.contract12(s, p);
  SurfaceMesh mesh;
  mesh.vertices.resize(model.vertex_count());
  mesh.faces = model.faces;
  deserialize(coords, mesh);
  return mesh;
}

namespace {

constexpr char kModelMagic[4] = {'M', 'L', 'T', 'M'};
constexpr std::uint32_t kModelVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
void put_doubles(std::ostream& out, const double* p, std::size_t n) {
  out.write(reinterpret_cast<const char*>(p),
            static_cast<std::streamsize>(n * sizeof(double)));
}
std::uint32_t get_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4))
    throw std::runtime_error("model: truncated file " + path);
  return v;
}
void get_doubles(std::istream& in, double* p, std::size_t n,
                 const std::string& path) {
  if (!in.read(reinterpret_cast<char*>(p),
               static_cast<std::streamsize>(n * sizeof(double))))
    throw std::runtime_error("model: truncated file " + path);
}

}  // namespace

void save_model(const MultilinearModel& model, const std::string& path) {
  model.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("model: cannot write " + path);
  out.write(kModelMagic, 4);
  put_u32(out, kModelVersion);
  const auto m = static_cast<std::uint32_t>(model.speaker_modes.rows());
  const auto n = static_cast<std::uint32_t>(model.pose_modes.rows());
  const auto k = static_cast<std::uint32_t>(model.mean.size());
  const auto mr = static_cast<std::uint32_t>(model.speaker_rank());
  const auto nr = static_cast<std::uint32_t>(model.pose_rank());
  put_u32(out, m);
  put_u32(out, n);
  put_u32(out, k);
  put_u32(out, mr);
  put_u32(out, nr);
  put_doubles(out, model.mean.data(), static_cast<std::size_t>(k));
  put_doubles(out, model.core.data().data(), model.core.size());
  put_doubles(out, model.speaker_modes.data(),
              static_cast<std::size_t>(m) * mr);
  put_doubles(out, model.pose_modes.data(), static_cast<std::size_t>(n) * nr);
  put_doubles(out, model.speaker_singular_values.data(), m);
  put_doubles(out, model.pose_singular_values.data(), n);
  put_doubles(out, model.speaker_stats.mean.data(), mr);
  put_doubles(out, model.speaker_stats.stddev.data(), mr);
  put_doubles(out, model.pose_stats.mean.data(), nr);
  put_doubles(out, model.pose_stats.stddev.data(), nr);
  put_u32(out, static_cast<std::uint32_t>(model.faces.size()));
  for (const auto& f : model.faces)
    for (const auto idx : f) put_u32(out, idx);
  if (!out) throw std::runtime_error("model: write failed for " + path);
}

MultilinearModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("model: cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0)
    throw std::runtime_error("model: bad magic in " + path);
  if (get_u32(in, path) != kModelVersion)
    throw std::runtime_error("model: unsupported version in " + path);
  const std::uint32_t m = get_u32(in, path);
  const std::uint32_t n = get_u32(in, path);
  const std::uint32_t k = get_u32(in, path);
  const std::uint32_t mr = get_u32(in, path);
  const std::uint32_t nr = get_u32(in, path);
  if (m == 0 || n == 0 || k == 0 || k % 3 != 0 || mr == 0 || nr == 0 ||
      mr > m || nr > n)
    throw std::runtime_error("model: inconsistent dimensions in " + path);

  MultilinearModel model;
  model.mean.resize(k);
  get_doubles(in, model.mean.data(), k, path);
  model.core = Tensor3(mr, nr, k);
  get_doubles(in, model.core.data().data(), model.core.size(), path);
  model.speaker_modes.resize(m, mr);
  get_doubles(in, model.speaker_modes.data(),
              static_cast<std::size_t>(m) * mr, path);
  model.pose_modes.resize(n, nr);
  get_doubles(in, model.pose_modes.data(), static_cast<std::size_t>(n) * nr,
              path);
  model.speaker_singular_values.resize(m);
  get_doubles(in, model.speaker_singular_values.data(), m, path);
  model.pose_singular_values.resize(n);
  get_doubles(in, model.pose_singular_values.data(), n, path);
  model.speaker_stats.mean.resize(mr);
  get_doubles(in, model.speaker_stats.mean.data(), mr, path);
  model.speaker_stats.stddev.resize(mr);
  get_doubles(in, model.speaker_stats.stddev.data(), mr, path);
  model.pose_stats.mean.resize(nr);
  get_doubles(in, model.pose_stats.mean.data(), nr, path);
  model.pose_stats.stddev.resize(nr);
  get_doubles(in, model.pose_stats.stddev.data(), nr, path);
  const std::uint32_t fcount = get_u32(in, path);
  model.faces.resize(fcount);
  for (auto& f : model.faces)
    for (auto& idx : f) idx = get_u32(in, path);
  char extra;
  if (in.read(&extra, 1))
    throw std::runtime_error("model: trailing bytes in " + path);
  model.validate();
  return model;
}

MeshCollection load_collection(const std::string& manifest_path) {
  using nlohmann::json;
  std::ifstream in(manifest_path);
  if (!in)
    throw std::runtime_error("collection: cannot open " + manifest_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("collection: invalid JSON in " + manifest_path +
                             ": " + e.what());
  }
  if (!j.contains("speakers") || !j.contains("poses") || !j.contains("meshes"))
    throw std::runtime_error(
        "collection: manifest needs speakers, poses, meshes in " +
        manifest_path);
  MeshCollection c;
  c.speakers = j.at("speakers").get<std::vector<std::string>>();
  c.poses = j.at("poses").get<std::vector<std::string>>();
  c.cells.assign(c.speakers.size(),
                 std::vector<std::optional<SurfaceMesh>>(c.poses.size()));
  const auto base =
      std::filesystem::path(manifest_path).parent_path();
  for (const auto& e : j.at("meshes")) {
    const auto speaker = e.at("speaker").get<std::string>();
    const auto pose = e.at("pose").get<std::string>();
    const auto rel = e.at("path").get<std::string>();
    const auto si = std::find(c.speakers.begin(), c.speakers.end(), speaker);
    const auto pi = std::find(c.poses.begin(), c.poses.end(), pose);
    if (si == c.speakers.end() || pi == c.poses.end())
      throw std::runtime_error("collection: unknown speaker or pose '" +
                               speaker + "/" + pose + "' in " + manifest_path);
    std::filesystem::path p(rel);
    if (p.is_relative()) p = base / p;
    c.cells[static_cast<std::size_t>(si - c.speakers.begin())]
           [static_cast<std::size_t>(pi - c.poses.begin())] =
               load_obj(p.string());
  }
  c.validate();
  return c;
}

void save_collection(const MeshCollection& collection,
                     const std::string& directory,
                     const std::string& manifest_path) {
  using nlohmann::json;
  collection.validate();
  std::filesystem::create_directories(directory);
  auto manifest_dir = std::filesystem::path(manifest_path).parent_path();
  if (manifest_dir.empty()) manifest_dir = ".";
  json meshes = json::array();
  for (std::size_t i = 0; i < collection.speaker_count(); ++i)
    for (std::size_t j = 0; j < collection.pose_count(); ++j) {
      if (!collection.cells[i][j].has_value()) continue;
      const std::string name =
          collection.speakers[i] + "_" + collection.poses[j] + ".obj";
      const auto mesh_path = std::filesystem::path(directory) / name;
      save_obj(*collection.cells[i][j], mesh_path.string());
      meshes.push_back(
          {{"speaker", collection.speakers[i]},
           {"pose", collection.poses[j]},
           {"path",
            std::filesystem::relative(mesh_path, manifest_dir).string()}});
    }
  json j = {{"speakers", collection.speakers},
            {"poses", collection.poses},
            {"meshes", meshes}};
  std::ofstream out(manifest_path);
  if (!out)
    throw std::runtime_error("collection: cannot write " + manifest_path);
  out << j.dump(2) << '\n';
}

}  // namespace artic
