#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "artic/diffusion.hpp"
#include "artic/random.hpp"

#include "helpers.hpp"

using namespace artic;

namespace {

GrayVolume noisy_step(std::size_t nx, std::size_t ny, std::size_t nz,
                      double low, double high, double sigma,
                      std::uint64_t seed) {
  GrayVolume v;
  v.dims = {nx, ny, nz};
  v.data.resize(v.voxel_count());
  Rng rng(seed);
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t x = 0; x < nx; ++x)
        v.data[v.index(x, y, z)] = std::clamp(
            (x < nx / 2 ? low : high) + sigma * rng.normal(), 0.0, 255.0);
  return v;
}

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) /
         static_cast<double>(xs.size());
}

double variance_of(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  double acc = 0.0;
  for (const double x : xs) acc += (x - m) * (x - m);
  return acc / static_cast<double>(xs.size());
}

}  // namespace

TEST_CASE("explicit step bound follows the grid spacing") {
  CHECK(diffusion_tau_bound(Eigen::Vector3d(1, 1, 1)) ==
        doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(diffusion_tau_bound(Eigen::Vector3d(0.5, 1, 2)) ==
        doctest::Approx(1.0 / (2.0 * (4.0 + 1.0 + 0.25))).epsilon(1e-12));
}

TEST_CASE("oversized steps are rejected") {
  GrayVolume v;
  v.dims = {8, 8, 8};
  v.data.assign(v.voxel_count(), 100.0);
  v.data[0] = 10.0;
  DiffusionConfig cfg;
  cfg.tau = diffusion_tau_bound(v.spacing) * 1.01;
  cfg.steps = 1;
  CHECK_THROWS(denoise_eed(v, cfg));
}

TEST_CASE("smoothing conserves the mean and stays inside the input range") {
  Rng rng(50);
  for (int trial = 0; trial < 20; ++trial) {
    GrayVolume v;
    v.dims = {10, 9, 8};
    v.spacing = Eigen::Vector3d(1.0, 1.25, 0.8);
    v.data.resize(v.voxel_count());
    for (double& x : v.data)
      x = static_cast<double>(rng.next_u64() % 256);
    DiffusionConfig cfg;
    cfg.tau = 0.9 * diffusion_tau_bound(v.spacing);
    cfg.steps = 20;
    cfg.lambda = 5.0;
    const GrayVolume out = denoise_eed(v, cfg);
    const double before = mean_of(v.data);
    const double after = mean_of(out.data);
    CHECK(std::abs(after - before) <= 1e-6 * std::max(1.0, std::abs(before)));
    const auto [in_lo, in_hi] = std::minmax_element(v.data.begin(),
                                                    v.data.end());
    const auto [out_lo, out_hi] = std::minmax_element(out.data.begin(),
                                                      out.data.end());
    CHECK(*out_lo >= *in_lo);
    CHECK(*out_hi <= *in_hi);
  }
}

TEST_CASE("noisy step phantom keeps its edge while plateaus settle") {
  const std::size_t nx = 32, ny = 16, nz = 16;
  const GrayVolume v = noisy_step(nx, ny, nz, 60.0, 190.0, 10.0, 7);
  DiffusionConfig cfg;
  cfg.sigma = 1.0;
  cfg.lambda = 10.0;
  cfg.tau = 0.9 * diffusion_tau_bound(v.spacing);
  cfg.steps = 20;
  const GrayVolume out = denoise_eed(v, cfg);

  // Plateau variance at least halves (sampled away from the edge).
  std::vector<double> before, after;
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t x = 2; x + 2 < nx / 2 - 2; ++x) {
        before.push_back(v.data[v.index(x, y, z)]);
        after.push_back(out.data[out.index(x, y, z)]);
      }
  CHECK(variance_of(after) <= 0.5 * variance_of(before));

  // The mid-level crossing stays within one voxel of the true edge.
  const double mid = 0.5 * (60.0 + 190.0);
  for (std::size_t z = 2; z < nz - 2; ++z)
    for (std::size_t y = 2; y < ny - 2; ++y) {
      std::size_t crossing = 0;
      for (std::size_t x = 0; x < nx; ++x)
        if (out.data[out.index(x, y, z)] > mid) {
          crossing = x;
          break;
        }
      CHECK(crossing >= nx / 2 - 1);
      CHECK(crossing <= nx / 2 + 1);
    }
}

TEST_CASE("smoothing is bitwise independent of the job count") {
  const GrayVolume v = noisy_step(24, 12, 12, 40.0, 200.0, 12.0, 9);
  DiffusionConfig cfg;
  cfg.steps = 8;
  cfg.jobs = 1;
  const GrayVolume a = denoise_eed(v, cfg);
  cfg.jobs = 7;
  const GrayVolume b = denoise_eed(v, cfg);
  CHECK(a.data == b.data);
}

TEST_CASE("a constant volume is a fixed point") {
  GrayVolume v;
  v.dims = {6, 6, 6};
  v.data.assign(v.voxel_count(), 42.0);
  DiffusionConfig cfg;
  cfg.steps = 5;
  const GrayVolume out = denoise_eed(v, cfg);
  for (const double x : out.data) CHECK(x == 42.0);
}
