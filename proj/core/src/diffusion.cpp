#include "artic/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "artic/parallel.hpp"

namespace artic {

namespace {

// Weickert diffusivity, m = 4: g -> 1 for small gradients, sharp decay
// beyond the contrast parameter.
double diffusivity(double grad_sq, double lambda) {
  if (grad_sq <= 0.0) return 1.0;
  const double r = grad_sq / (lambda * lambda);
  return 1.0 - std::exp(-3.31488 / (r * r * r * r));
}

std::vector<double> gaussian_kernel(double sigma_voxels) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_voxels)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double x = static_cast<double>(i) / sigma_voxels;
    const double w = std::exp(-0.5 * x * x);
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (auto& w : k) w /= sum;
  return k;
}

// Separable convolution along one axis, replicate boundary.
void convolve_axis(const std::array<std::size_t, 3>& dims,
                   const std::vector<double>& in, std::vector<double>& out,
                   const std::vector<double>& kernel, int axis, int jobs) {
  const long long nx = static_cast<long long>(dims[0]);
  const long long ny = static_cast<long long>(dims[1]);
  const long long nz = static_cast<long long>(dims[2]);
  const long long radius = static_cast<long long>(kernel.size() / 2);
  const long long n_axis = axis == 0 ? nx : axis == 1 ? ny : nz;
  auto idx = [&](long long x, long long y, long long z) {
    return static_cast<std::size_t>((z * ny + y) * nx + x);
  };
  parallel_for(static_cast<std::size_t>(nz), jobs, [&](std::size_t zs) {
    const long long z = static_cast<long long>(zs);
    for (long long y = 0; y < ny; ++y)
      for (long long x = 0; x < nx; ++x) {
        double acc = 0.0;
        for (long long t = -radius; t <= radius; ++t) {
          long long xx = x, yy = y, zz = z;
          long long& c = axis == 0 ? xx : axis == 1 ? yy : zz;
          c = std::clamp(c + t, 0ll, n_axis - 1);
          acc += kernel[static_cast<std::size_t>(t + radius)] *
                 in[idx(xx, yy, zz)];
        }
        out[idx(x, y, z)] = acc;
      }
  });
}

}  // namespace

double diffusion_tau_bound(const Eigen::Vector3d& spacing) {
  const double s = 1.0 / (spacing.x() * spacing.x()) +
                   1.0 / (spacing.y() * spacing.y()) +
                   1.0 / (spacing.z() * spacing.z());
  return 1.0 / (2.0 * s);
}

GrayVolume denoise_eed(const GrayVolume& v, const DiffusionConfig& cfg) {
  validate_gray(v);
  if (cfg.steps < 0) throw std::runtime_error("diffusion: negative steps");
  if (cfg.sigma < 0.0) throw std::runtime_error("diffusion: negative sigma");
  if (!(cfg.lambda > 0.0))
    throw std::runtime_error("diffusion: lambda must be positive");
  if (!(cfg.tau > 0.0))
    throw std::runtime_error("diffusion: tau must be positive");
  const double bound = diffusion_tau_bound(v.spacing);
  if (cfg.tau > bound)
    throw std::runtime_error("diffusion: tau exceeds stability bound");
  if (cfg.steps == 0) return v;

  GrayVolume out = v;
  const auto& dims = v.dims;
  const long long nx = static_cast<long long>(dims[0]);
  const long long ny = static_cast<long long>(dims[1]);
  const long long nz = static_cast<long long>(dims[2]);
  const double hx = v.spacing.x(), hy = v.spacing.y(), hz = v.spacing.z();
  const std::size_t n = v.voxel_count();
  auto idx = [&](long long x, long long y, long long z) {
    return static_cast<std::size_t>((z * ny + y) * nx + x);
  };

  std::vector<double> smooth(n), tmp(n);
  // d11, d22, d33, d12, d13, d23
  std::vector<std::array<double, 6>> tensor(n);
  std::vector<double> next(n);
  const auto [in_min_it, in_max_it] =
      std::minmax_element(v.data.begin(), v.data.end());
  const double in_min = *in_min_it, in_max = *in_max_it;

  std::vector<double> kx, ky, kz;
  if (cfg.sigma > 0.0) {
    kx = gaussian_kernel(cfg.sigma / hx);
    ky = gaussian_kernel(cfg.sigma / hy);
    kz = gaussian_kernel(cfg.sigma / hz);
  }

  for (int step = 0; step < cfg.steps; ++step) {
    if (cfg.sigma > 0.0) {
      convolve_axis(dims, out.data, tmp, kx, 0, cfg.jobs);
      convolve_axis(dims, tmp, smooth, ky, 1, cfg.jobs);
      convolve_axis(dims, smooth, tmp, kz, 2, cfg.jobs);
      smooth.swap(tmp);
    } else {
      smooth = out.data;
    }

    // Structure: gradient of the presmoothed image drives the tensor.
    parallel_for(static_cast<std::size_t>(nz), cfg.jobs, [&](std::size_t zs) {
      const long long z = static_cast<long long>(zs);
      for (long long y = 0; y < ny; ++y)
        for (long long x = 0; x < nx; ++x) {
          const double gx = (smooth[idx(std::min(x + 1, nx - 1), y, z)] -
                             smooth[idx(std::max(x - 1, 0ll), y, z)]) /
                            (2.0 * hx);
          const double gy = (smooth[idx(x, std::min(y + 1, ny - 1), z)] -
                             smooth[idx(x, std::max(y - 1, 0ll), z)]) /
                            (2.0 * hy);
          const double gz = (smooth[idx(x, y, std::min(z + 1, nz - 1))] -
                             smooth[idx(x, y, std::max(z - 1, 0ll))]) /
                            (2.0 * hz);
          const double gsq = gx * gx + gy * gy + gz * gz;
          auto& d = tensor[idx(x, y, z)];
          if (gsq < 1e-30) {
            d = {1.0, 1.0, 1.0, 0.0, 0.0, 0.0};
            continue;
          }
          const double g = diffusivity(gsq, cfg.lambda);
          double c = 1.0 - g;  // D = I - c * n n^T
          const double inv = 1.0 / std::sqrt(gsq);
          const double ax = std::abs(gx) * inv, ay = std::abs(gy) * inv,
                       az = std::abs(gz) * inv;
          // Cap anisotropy so each row of D stays dominant in the grid
          // metric; this is what makes every stencil weight nonnegative.
          auto row_cap = [](double ni, double nj, double nk, double hi,
                            double hj, double hk) {
            const double denom =
                ni * ni / (hi * hi) + ni * nj / (hi * hj) + ni * nk / (hi * hk);
            if (denom <= 0.0) return 1.0;
            return (1.0 / (hi * hi)) / denom;
          };
          const double cap =
              std::min({row_cap(ax, ay, az, hx, hy, hz),
                        row_cap(ay, ax, az, hy, hx, hz),
                        row_cap(az, ax, ay, hz, hx, hy), 1.0});
          c = std::min(c, cap * (1.0 - 1e-12));
          const double ux = gx * inv, uy = gy * inv, uz = gz * inv;
          d[0] = 1.0 - c * ux * ux;
          d[1] = 1.0 - c * uy * uy;
          d[2] = 1.0 - c * uz * uz;
          d[3] = -c * ux * uy;
          d[4] = -c * ux * uz;
          d[5] = -c * uy * uz;
        }
    });

    // Flux-form update with nonnegative weights: axis terms carry the
    // diagonal coefficients minus the mixed magnitudes; sign-split
    // mixed coefficients ride on the plane diagonals.
    parallel_for(static_cast<std::size_t>(nz), cfg.jobs, [&](std::size_t zs) {
      const long long z = static_cast<long long>(zs);
      for (long long y = 0; y < ny; ++y)
        for (long long x = 0; x < nx; ++x) {
          const std::size_t c0 = idx(x, y, z);
          const auto& dc = tensor[c0];
          const double uc = out.data[c0];
          double acc = 0.0;

          auto axis_term = [&](long long qx, long long qy, long long qz,
                               int di, int mixed_a, int mixed_b, double h2,
                               double hab, double hac) {
            if (qx < 0 || qy < 0 || qz < 0 || qx >= nx || qy >= ny || qz >= nz)
              return;
            const std::size_t q0 = idx(qx, qy, qz);
            const auto& dq = tensor[q0];
            const double w =
                0.5 * ((dc[static_cast<std::size_t>(di)] +
                        dq[static_cast<std::size_t>(di)]) /
                           h2 -
                       (std::abs(dc[static_cast<std::size_t>(mixed_a)]) +
                        std::abs(dq[static_cast<std::size_t>(mixed_a)])) /
                           hab -
                       (std::abs(dc[static_cast<std::size_t>(mixed_b)]) +
                        std::abs(dq[static_cast<std::size_t>(mixed_b)])) /
                           hac);
            acc += w * (out.data[q0] - uc);
          };
          // x axis: d11 minus |d12|, |d13|
          axis_term(x + 1, y, z, 0, 3, 4, hx * hx, hx * hy, hx * hz);
          axis_term(x - 1, y, z, 0, 3, 4, hx * hx, hx * hy, hx * hz);
          // y axis: d22 minus |d12|, |d23|
          axis_term(x, y + 1, z, 1, 3, 5, hy * hy, hx * hy, hy * hz);
          axis_term(x, y - 1, z, 1, 3, 5, hy * hy, hx * hy, hy * hz);
          // z axis: d33 minus |d13|, |d23|
          axis_term(x, y, z + 1, 2, 4, 5, hz * hz, hx * hz, hy * hz);
          axis_term(x, y, z - 1, 2, 4, 5, hz * hz, hx * hz, hy * hz);

          auto diag_term = [&](long long qx, long long qy, long long qz,
                               int mixed, bool positive_part, double hab) {
            if (qx < 0 || qy < 0 || qz < 0 || qx >= nx || qy >= ny || qz >= nz)
              return;
            const std::size_t q0 = idx(qx, qy, qz);
            const double mc = tensor[c0][static_cast<std::size_t>(mixed)];
            const double mq = tensor[q0][static_cast<std::size_t>(mixed)];
            const double pc = positive_part ? std::max(mc, 0.0)
                                            : std::max(-mc, 0.0);
            const double pq = positive_part ? std::max(mq, 0.0)
                                            : std::max(-mq, 0.0);
            const double w = (pc + pq) / (2.0 * hab);
            acc += w * (out.data[q0] - uc);
          };
          // xy plane: d12 positive part on ++/--, negative part on +-/-+.
          diag_term(x + 1, y + 1, z, 3, true, hx * hy);
          diag_term(x - 1, y - 1, z, 3, true, hx * hy);
          diag_term(x + 1, y - 1, z, 3, false, hx * hy);
          diag_term(x - 1, y + 1, z, 3, false, hx * hy);
          // xz plane: d13
          diag_term(x + 1, y, z + 1, 4, true, hx * hz);
          diag_term(x - 1, y, z - 1, 4, true, hx * hz);
          diag_term(x + 1, y, z - 1, 4, false, hx * hz);
          diag_term(x - 1, y, z + 1, 4, false, hx * hz);
          // yz plane: d23
          diag_term(x, y + 1, z + 1, 5, true, hy * hz);
          diag_term(x, y - 1, z - 1, 5, true, hy * hz);
          diag_term(x, y + 1, z - 1, 5, false, hy * hz);
          diag_term(x, y - 1, z + 1, 5, false, hy * hz);

          // Convex combination in exact arithmetic; the clamp only
          // strips last-ulp rounding debris.
          next[c0] = std::clamp(uc + cfg.tau * acc, in_min, in_max);
        }
    });
    out.data.swap(next);
  }
  return out;
}

}  // namespace artic
