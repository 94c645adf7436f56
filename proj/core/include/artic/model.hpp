#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "artic/geometry.hpp"
#include "artic/tensor.hpp"

namespace artic {

// Complete or partially observed speaker-by-pose grid of meshes with
// shared topology.
struct MeshCollection {
  std::vector<std::string> speakers;
  std::vector<std::string> poses;
  // cell(i, j): mesh of speaker i in pose j, empty when unobserved.
  std::vector<std::vector<std::optional<SurfaceMesh>>> cells;

  std::size_t speaker_count() const { return speakers.size(); }
  std::size_t pose_count() const { return poses.size(); }
  bool complete() const;
  // Throws on ragged rows or topology mismatch across observed cells.
  void validate() const;
  const SurfaceMesh& first_mesh() const;
};

// Centered training data: tensor of mesh coordinates minus the grand
// mean over all observed-by-construction cells.
struct TrainingTensor {
  Tensor3 data;             // speakers x poses x (3 * V)
  Eigen::VectorXd mean;     // length 3 * V
};

struct ModeStatistics {
  Eigen::VectorXd mean;   // column means of the mode matrix rows
  Eigen::VectorXd stddev; // column sample standard deviations, floored > 0
};

struct MultilinearModel {
  Eigen::VectorXd mean;                     // length k = 3 * V
  Tensor3 core;                             // m~ x n~ x k
  Eigen::MatrixXd speaker_modes;            // m x m~, orthonormal columns
  Eigen::MatrixXd pose_modes;               // n x n~, orthonormal columns
  Eigen::VectorXd speaker_singular_values;  // full list, length m
  Eigen::VectorXd pose_singular_values;     // full list, length n
  ModeStatistics speaker_stats;             // over the m~ kept columns
  ModeStatistics pose_stats;                // over the n~ kept columns
  std::vector<std::array<std::uint32_t, 3>> faces;

  std::size_t vertex_count() const {
    return static_cast<std::size_t>(mean.size()) / 3;
  }
  std::size_t speaker_rank() const { return core.dim1(); }
  std::size_t pose_rank() const { return core.dim2(); }
  void validate() const;
};

// Fills unobserved cells with the average of the speaker's observed
// mean and the pose's mean over other speakers. Availability is taken
// from the original grid only. Throws when a speaker has no mesh at
// all or a pose is observed for no speaker.
MeshCollection complete_missing(const MeshCollection& collection);

// Stacks serialized meshes and removes the grand mean. Requires a
// complete collection. The centered tensor sums to zero over (i, j)
// for every coordinate.
TrainingTensor build_tensor(const MeshCollection& collection);

// Higher-order SVD of the first two modes via Gram matrices. Mode
// matrices hold all singular vectors (descending singular values); the
// sign convention makes each column's largest-magnitude entry positive.
// Mode statistics follow the rows. Throws on an all-zero tensor.
MultilinearModel hosvd(const TrainingTensor& tensor,
                       const MeshCollection& collection);

// Keeps the leading columns of each mode; statistics are re-sliced.
MultilinearModel truncate(const MultilinearModel& model,
                          std::size_t speaker_rank, std::size_t pose_rank);

// Mesh at the given mode coordinates: mean + core x1 s x2 p.
SurfaceMesh generate(const MultilinearModel& model, const Eigen::VectorXd& s,
                     const Eigen::VectorXd& p);

// Binary container, magic MLTM, version 1, little-endian doubles.
// Loading validates magic/version/size and never returns a partially
// initialized model.
void save_model(const MultilinearModel& model, const std::string& path);
MultilinearModel load_model(const std::string& path);

// Collection manifests: {"speakers": [...], "poses": [...],
//  "meshes": [{"speaker", "pose", "path"}]}; missing cells are absent.
MeshCollection load_collection(const std::string& manifest_path);
void save_collection(const MeshCollection& collection,
                     const std::string& directory,
                     const std::string& manifest_path);

}  // namespace artic
