#pragma once

#include <Eigen/Dense>

#include "artic/volume.hpp"

namespace artic {

struct DiffusionConfig {
  double sigma = 1.0;   // presmoothing scale, mm
  double lambda = 3.0;  // contrast parameter, gray units per mm
  double tau = 0.1;     // explicit time step
  int steps = 20;
  int jobs = 1;
};

// Largest admissible explicit step for the scheme on this grid.
double diffusion_tau_bound(const Eigen::Vector3d& spacing);

// Edge-enhancing anisotropic smoothing. The diffusion tensor is built
// from the Gaussian-presmoothed gradient: eigenvalue g(|grad|^2) across
// the edge, 1 along it. The update uses a flux-form stencil with
// nonnegative neighbor weights (tensor anisotropy is capped per voxel
// to keep scaled diagonal dominance), so each step is a convex
// combination: the output range stays inside the input range and the
// mean is conserved under the homogeneous Neumann boundary. Throws when
// tau exceeds the stability bound. Results are bitwise independent of
// the job count.
GrayVolume denoise_eed(const GrayVolume& v, const DiffusionConfig& cfg);

}  // namespace artic
