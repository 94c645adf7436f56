#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "artic/model.hpp"

namespace artic {

// Sparse coil recordings: fixed marker set, one position per marker per
// frame, strictly increasing timestamps.
struct MarkerSequence {
  std::vector<std::string> markers;
  std::vector<double> times;
  std::vector<std::vector<Eigen::Vector3d>> frames;
  void validate() const;
};

MarkerSequence load_markers(const std::string& path);
void save_markers(const MarkerSequence& sequence, const std::string& path);

// Marker name -> vertex index on the model mesh.
using MarkerCorrespondences = std::map<std::string, std::uint32_t>;

MarkerCorrespondences load_marker_correspondences(const std::string& path);
void save_marker_correspondences(const MarkerCorrespondences& corr,
                                 const std::string& path);

enum class AnatomyMode { Free, Fixed };

struct TrackConfig {
  double alpha = 1.0;
  double beta = 5.0;   // bias toward the training statistics
  double gamma = 5.0;  // temporal smoothness
  double h = 5.0;      // box half-width in standard deviations
  AnatomyMode mode = AnatomyMode::Free;
  Eigen::VectorXd fixed_speaker;  // required in Fixed mode
  double convergence_tolerance = 1e-12;
  int max_alternations = 200;
  void validate(const MultilinearModel& model) const;
};

struct TrackedFrame {
  Eigen::VectorXd speaker;
  Eigen::VectorXd pose;
  double energy = 0.0;         // minimized objective of this frame
  double mean_residual = 0.0;  // mean marker-to-vertex distance
};

struct Trajectory {
  std::vector<TrackedFrame> frames;
};

// Minimizes, over the coordinates the mode leaves free,
//   alpha * mean_m ||v_{c_m} - x_m||^2
//   + beta * sum over optimized coordinates ((x_i - m_i)/sigma_i)^2
//   + gamma * ||p - p_prev||^2 (+ ||s - s_prev||^2 when FREE)
// by alternating box-constrained least squares; the smoothness term is
// absent when previous is null. warm seeds the solve (default: previous,
// else the training means).
TrackedFrame track_frame(const MultilinearModel& model,
                         const std::vector<Eigen::Vector3d>& positions,
                         const std::vector<std::uint32_t>& vertices,
                         const TrackConfig& config,
                         const TrackedFrame* previous = nullptr,
                         const TrackedFrame* warm = nullptr);

// The common full objective at (s, p): data plus bias over both blocks
// plus smoothness against previous when present. Mode-independent, so
// solutions from both modes are comparable on one scale.
double track_energy(const MultilinearModel& model,
                    const std::vector<Eigen::Vector3d>& positions,
                    const std::vector<std::uint32_t>& vertices,
                    const TrackConfig& config, const Eigen::VectorXd& s,
                    const Eigen::VectorXd& p, const TrackedFrame* previous);

Trajectory track(const MultilinearModel& model, const MarkerSequence& sequence,
                 const MarkerCorrespondences& corr, const TrackConfig& config);

// Arithmetic mean of the speaker coordinates over all frames.
Eigen::VectorXd estimate_anatomy(const Trajectory& trajectory);

// (x_i - m_i) / sigma_i and its inverse.
Eigen::VectorXd normalize_weights(const Eigen::VectorXd& x,
                                  const ModeStatistics& stats);
Eigen::VectorXd denormalize_weights(const Eigen::VectorXd& x,
                                    const ModeStatistics& stats);

// Fraction of residuals at or below each threshold; nondecreasing.
std::vector<double> cumulative_fraction(const std::vector<double>& residuals,
                                        const std::vector<double>& thresholds);

struct CorrespondenceConfig {
  int restarts = 10;
  std::uint64_t seed = 0;
  double h = 1.0;     // truncation of the per-restart shape draw
  double alpha = 1.0;
  double beta = 1.0;
  int max_rounds = 20;
  int jobs = 1;
  void validate() const;
};

struct CorrespondenceResult {
  MarkerCorrespondences correspondences;
  double score = 0.0;  // mean marker-to-vertex distance of the winner
};

// Semi-supervised correspondence search: every restart samples a
// truncated-normal shape, assigns each marker its nearest masked
// vertex, then alternates single-frame fits with nearest-vertex
// updates until the assignment stabilizes; the restart with the
// smallest mean distance wins. Deterministic under a fixed seed for
// any job count.
CorrespondenceResult estimate_correspondences(
    const MultilinearModel& model, const std::vector<std::string>& names,
    const std::vector<Eigen::Vector3d>& positions,
    const std::vector<std::uint32_t>& mask, const CorrespondenceConfig& config);

}  // namespace artic
