#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "artic/geometry.hpp"
#include "artic/model.hpp"
#include "artic/registration.hpp"

namespace artic {

struct FitConfig {
  double alpha = 1.0;
  double gamma = 1.0;
  double h = 1.0;                  // box half-width in standard deviations
  int series = 10;                 // correspondence refresh rounds
  int alternations = 10;           // block solves per round
  double search_radius = 4.0;      // mm
  double max_normal_angle = 60.0;  // degrees
  double convergence_tolerance = 1e-12;
  int max_alternations = 500;      // fixed-correspondence cap
  bool rescale = true;             // canonical scale between the modes
  void validate() const;
};

struct FitResult {
  Eigen::VectorXd speaker;
  Eigen::VectorXd pose;
  SurfaceMesh mesh;
  double energy = 0.0;
  std::vector<double> energies;  // energy after each solve
  double mean_residual = 0.0;    // over the final correspondences
  std::size_t used_count = 0;
};

// Box [mean - h*std, mean + h*std] per coordinate.
void coordinate_box(const ModeStatistics& stats, double h, Eigen::VectorXd& lo,
                    Eigen::VectorXd& hi);
Eigen::VectorXd clamp_coords(const Eigen::VectorXd& x,
                             const ModeStatistics& stats, double h);

// Resolves the scale ambiguity of the bilinear coordinates: the mesh is
// invariant under (s, p) -> (c s, p / c), so pick the feasible c > 0
// minimizing the summed squared standardized deviation of both modes.
void canonical_rescale(Eigen::VectorXd& s, Eigen::VectorXd& p,
                       const ModeStatistics& speaker_stats,
                       const ModeStatistics& pose_stats, double h);

// Landmark targets pinned to model vertices.
using IndexedLandmarks =
    std::vector<std::pair<std::uint32_t, Eigen::Vector3d>>;

// Looks up each named landmark in a template's vertex table.
IndexedLandmarks resolve_landmarks(
    const std::map<std::string, std::uint32_t>& table,
    const LandmarkSet& landmarks);

// Fits model coordinates to an oriented cloud: per round, freeze the
// modified nearest-neighbor correspondences, then run alternating
// box-constrained least squares on the two coordinate blocks of
//   alpha * E_data / N + gamma * E_landmark / L.
FitResult fit_model(const MultilinearModel& model,
                    const OrientedPointCloud& cloud,
                    const IndexedLandmarks& landmarks,
                    const FitConfig& config);

// Same energy with fixed per-vertex targets; alternates to convergence.
// vertices selects the used subset; empty means every vertex.
FitResult fit_fixed(const MultilinearModel& model,
                    const std::vector<Eigen::Vector3d>& targets,
                    const std::vector<std::uint32_t>& vertices,
                    const FitConfig& config);

// fit_model with the pose block frozen at its training mean, so only
// speaker variation is recovered.
FitResult fit_pca(const MultilinearModel& model,
                  const OrientedPointCloud& cloud,
                  const IndexedLandmarks& landmarks, const FitConfig& config);

struct BootstrapInput {
  std::size_t speaker = 0;
  std::size_t pose = 0;
  OrientedPointCloud cloud;
  LandmarkSet landmarks;
};

enum class BootstrapMode { Multilinear, SingleMode };

struct BootstrapConfig {
  MatchWeights match;
  FitConfig fit;
  int iterations = 5;
  BootstrapMode mode = BootstrapMode::Multilinear;
  int jobs = 1;
  void validate() const;
};

struct BootstrapResult {
  MeshCollection collection;
  std::vector<double> iteration_residuals;  // mean final residual per pass
};

// Correspondence bootstrap: pass 1 matches the template to every cloud
// directly; each later pass builds a model from the current meshes,
// fits it to each cloud, and rematches with the fit as initialization.
BootstrapResult bootstrap(const SurfaceMesh& templ,
                          const std::vector<std::string>& speakers,
                          const std::vector<std::string>& poses,
                          const std::vector<BootstrapInput>& inputs,
                          const BootstrapConfig& config);

}  // namespace artic
