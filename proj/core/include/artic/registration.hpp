#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "artic/geometry.hpp"

namespace artic {

// Energy weights for template matching. beta and gamma anneal linearly
// from their start values down to beta_min / gamma_min across the
// series; alpha stays fixed.
struct MatchWeights {
  double alpha = 1.0;
  double beta = 10.0;
  double beta_min = 6.0;
  double gamma = 10.0;
  double gamma_min = 0.0;
  int series_length = 40;
  double search_radius = 4.0;      // mm
  double max_normal_angle = 60.0;  // degrees
  void validate() const;
};

struct ScheduledWeights {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

// Weights for energy t of the series, t in [1, series_length].
ScheduledWeights schedule_weights(const MatchWeights& w, int t);

// One rigid motion per template vertex: x -> R(r_i)(x - v_i) + v_i + t_i,
// axis-angle rotations about the rest vertex.
struct DeformationField {
  std::vector<Eigen::Vector3d> rotations;
  std::vector<Eigen::Vector3d> translations;

  std::size_t size() const { return rotations.size(); }
  static DeformationField identity(std::size_t vertex_count);
};

// Sidecar format for restarting: magic MDEF, version, count,
// per-vertex rotation and translation doubles.
void save_field(const DeformationField& field, const std::string& path);
DeformationField load_field(const std::string& path);

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& r);
// dR[k] = derivative of R(r) wrt r_k.
void rodrigues_with_jacobian(const Eigen::Vector3d& r, Eigen::Matrix3d& rot,
                             std::array<Eigen::Matrix3d, 3>& jac);

enum class MatchSide { Below, Above };

struct CandidateMatch {
  bool valid = false;
  std::uint32_t point = 0;
  double distance = 0.0;
  MatchSide side = MatchSide::Below;
};

// Uniform spatial hash over cloud points, cell edge = query radius.
class CloudGrid {
 public:
  CloudGrid(const OrientedPointCloud& cloud, double cell);
  const OrientedPointCloud& cloud() const { return *cloud_; }
  double cell() const { return cell_; }

  // Candidate search: points within the radius whose normal deviates
  // from `normal` by at most the angle limit. Matches on the inward
  // side of the surface (non-positive offset along the vertex normal)
  // are preferred over outward ones; distance breaks remaining ties,
  // then the smaller point index.
  CandidateMatch find_candidate(const Eigen::Vector3d& position,
                                const Eigen::Vector3d& normal, double radius,
                                double max_normal_angle_deg) const;

 private:
  const OrientedPointCloud* cloud_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

struct MatchStats {
  std::vector<double> energies;        // final energy per series step
  std::vector<double> mean_residuals;  // mean matched distance per step
  std::vector<std::size_t> valid_counts;
  // Accepted-iterate energy trace of each step's inner minimization;
  // each trace is nonincreasing.
  std::vector<std::vector<double>> inner_energies;
};

struct MatchResult {
  SurfaceMesh mesh;
  DeformationField field;
  MatchStats stats;
};

// Template-to-cloud matching: for each energy of the series, freeze the
// modified nearest-neighbor correspondences, then minimize
//   alpha * E_data + beta_t * E_smooth + gamma_t * E_landmark
// over the per-vertex motions with a limited-memory quasi-Newton
// descent (backtracking line search, energy nonincreasing per inner
// iteration). Landmark names resolve against the template's table.
MatchResult match_template(const SurfaceMesh& templ,
                           const OrientedPointCloud& cloud,
                           const LandmarkSet& landmarks,
                           const MatchWeights& weights,
                           const DeformationField* init = nullptr);

// Deformed vertex positions under a field.
std::vector<Eigen::Vector3d> deformed_positions(const SurfaceMesh& templ,
                                                const DeformationField& field);

}  // namespace artic
