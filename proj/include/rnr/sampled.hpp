#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace rnr {

// Uniform space-time grid samples of (rho, J).  Grid is centered on the
// origin: r_i = (i - (n-1)/2) * d per axis, t_i = (i - (nt-1)/2) * dt.
// Binary layout (little-endian, see docs/formats.md):
//   8 doubles: nx, ny, nz, nt, dx, dy, dz, dt
//   then rho, Jx, Jy, Jz arrays, each nt*nx*ny*nz doubles, index
//   ((it*nx + ix)*ny + iy)*nz + iz.
struct SampledCurrent {
  int nx = 0, ny = 0, nz = 0, nt = 0;
  double dx = 0, dy = 0, dz = 0, dt = 0;
  std::vector<double> rho, jx, jy, jz;

  std::size_t index(int it, int ix, int iy, int iz) const {
    return ((std::size_t(it) * nx + ix) * ny + iy) * nz + iz;
  }
  double x0() const { return -0.5 * (nx - 1) * dx; }
  double y0() const { return -0.5 * (ny - 1) * dy; }
  double z0() const { return -0.5 * (nz - 1) * dz; }
  double t0() const { return -0.5 * (nt - 1) * dt; }
  std::size_t cells() const {
    return std::size_t(nt) * nx * ny * nz;
  }
};

SampledCurrent load_sampled(const std::string& path);
void save_sampled(const SampledCurrent& g, const std::string& path);

// Multilinear interpolation in (x,y,z,t); zero outside the grid.
struct SampledSample {
  double rho;
  Eigen::Vector3d J;
};
SampledSample interpolate(const SampledCurrent& g, const Eigen::Vector3d& r,
                          double t);

// Central-difference continuity residual over the interior (one-cell boundary
// layer excluded).  Returns max |d_t rho + div J| / scale and the worst cell.
struct GridContinuity {
  double max_rel_residual = 0.0;
  double scale = 0.0;
  int worst[4] = {0, 0, 0, 0};  // it, ix, iy, iz
  bool pass = false;
};
GridContinuity check_continuity_grid(const SampledCurrent& g,
                                     double threshold = 1e-6);

// Tukey window (flat fraction 0.8) applied along t for spectral transforms.
double tukey_window(int it, int nt, double flat_fraction = 0.8);

// Parseval check: windowed grid-domain L2 norm vs spectral L2 norm on the
// conjugate DFT grid (separable DFT).  Returns the relative mismatch.
double parseval_mismatch(const SampledCurrent& g);

}  // namespace rnr
