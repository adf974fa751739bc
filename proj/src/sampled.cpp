#include "rnr/sampled.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>

#include "rnr/errors.hpp"
#include "rnr/quadrature.hpp"

namespace rnr {

namespace {

int as_dim(double v, const char* name) {
  const double r = std::round(v);
  if (!std::isfinite(v) || std::abs(v - r) > 0.0 || r < 1.0 || r > 4096.0)
    throw ConfigError(std::string("sampled header: bad ") + name);
  return int(r);
}

}  // namespace

SampledCurrent load_sampled(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open sampled-current file: " + path);
  double hdr[8];
  in.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
  if (!in) throw ConfigError("sampled file truncated in header: " + path);

  SampledCurrent g;
  g.nx = as_dim(hdr[0], "nx");
  g.ny = as_dim(hdr[1], "ny");
  g.nz = as_dim(hdr[2], "nz");
  g.nt = as_dim(hdr[3], "nt");
  g.dx = hdr[4];
  g.dy = hdr[5];
  g.dz = hdr[6];
  g.dt = hdr[7];
  for (double d : {g.dx, g.dy, g.dz, g.dt})
    if (!(d > 0.0) || !std::isfinite(d))
      throw ConfigError("sampled header: spacings must be positive");

  const std::size_t n = g.cells();
  if (n > (std::size_t(1) << 28))
    throw ConfigError("sampled grid too large");
  auto read_array = [&](std::vector<double>& v, const char* name) {
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()),
            std::streamsize(n * sizeof(double)));
    if (!in)
      throw ConfigError(std::string("sampled file truncated in ") + name +
                        ": " + path);
  };
  read_array(g.rho, "rho");
  read_array(g.jx, "jx");
  read_array(g.jy, "jy");
  read_array(g.jz, "jz");
  in.peek();
  if (!in.eof()) throw ConfigError("sampled file has trailing bytes: " + path);
  return g;
}

void save_sampled(const SampledCurrent& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write sampled-current file: " + path);
  const double hdr[8] = {double(g.nx), double(g.ny), double(g.nz),
                         double(g.nt), g.dx,         g.dy,
                         g.dz,         g.dt};
  out.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
  for (const auto* v : {&g.rho, &g.jx, &g.jy, &g.jz})
    out.write(reinterpret_cast<const char*>(v->data()),
              std::streamsize(v->size() * sizeof(double)));
  if (!out) throw ConfigError("write failed: " + path);
}

SampledSample interpolate(const SampledCurrent& g, const Eigen::Vector3d& r,
                          double t) {
  const double f[4] = {(t - g.t0()) / g.dt, (r.x() - g.x0()) / g.dx,
                       (r.y() - g.y0()) / g.dy, (r.z() - g.z0()) / g.dz};
  const int n[4] = {g.nt, g.nx, g.ny, g.nz};
  int i0[4];
  double u[4];
  for (int a = 0; a < 4; ++a) {
    if (f[a] < 0.0 || f[a] > n[a] - 1) return {0.0, Eigen::Vector3d::Zero()};
    i0[a] = std::min(int(std::floor(f[a])), n[a] - 2);
    u[a] = f[a] - i0[a];
  }
  SampledSample out{0.0, Eigen::Vector3d::Zero()};
  for (int c = 0; c < 16; ++c) {
    double w = 1.0;
    int idx[4];
    for (int a = 0; a < 4; ++a) {
      const int b = (c >> a) & 1;
      idx[a] = i0[a] + b;
      w *= b ? u[a] : 1.0 - u[a];
    }
    const std::size_t k = g.index(idx[0], idx[1], idx[2], idx[3]);
    out.rho += w * g.rho[k];
    out.J.x() += w * g.jx[k];
    out.J.y() += w * g.jy[k];
    out.J.z() += w * g.jz[k];
  }
  return out;
}

GridContinuity check_continuity_grid(const SampledCurrent& g,
                                     double threshold) {
  GridContinuity rep;
  if (g.nt < 3 || g.nx < 3 || g.ny < 3 || g.nz < 3)
    throw ConfigError("grid continuity check needs >= 3 cells per axis");
  double max_res = 0.0, max_scale = 0.0;
  for (int it = 1; it < g.nt - 1; ++it)
    for (int ix = 1; ix < g.nx - 1; ++ix)
      for (int iy = 1; iy < g.ny - 1; ++iy)
        for (int iz = 1; iz < g.nz - 1; ++iz) {
          const double drho =
              (g.rho[g.index(it + 1, ix, iy, iz)] -
               g.rho[g.index(it - 1, ix, iy, iz)]) /
              (2.0 * g.dt);
          const double djx = (g.jx[g.index(it, ix + 1, iy, iz)] -
                              g.jx[g.index(it, ix - 1, iy, iz)]) /
                             (2.0 * g.dx);
          const double djy = (g.jy[g.index(it, ix, iy + 1, iz)] -
                              g.jy[g.index(it, ix, iy - 1, iz)]) /
                             (2.0 * g.dy);
          const double djz = (g.jz[g.index(it, ix, iy, iz + 1)] -
                              g.jz[g.index(it, ix, iy, iz - 1)]) /
                             (2.0 * g.dz);
          const double res = std::abs(drho + djx + djy + djz);
          const double sc =
              std::abs(drho) + std::abs(djx) + std::abs(djy) + std::abs(djz);
          if (sc > max_scale) max_scale = sc;
          if (res > max_res) {
            max_res = res;
            rep.worst[0] = it;
            rep.worst[1] = ix;
            rep.worst[2] = iy;
            rep.worst[3] = iz;
          }
        }
  rep.scale = max_scale;
  rep.max_rel_residual = max_res / std::max(max_scale, 1e-300);
  rep.pass = rep.max_rel_residual <= threshold;
  return rep;
}

double tukey_window(int it, int nt, double flat_fraction) {
  if (nt < 2) return 1.0;
  const double alpha = std::clamp(1.0 - flat_fraction, 0.0, 1.0);
  if (alpha == 0.0) return 1.0;
  const double u = double(it) / double(nt - 1);
  const double v = std::min(u, 1.0 - u);
  if (v >= 0.5 * alpha) return 1.0;
  return 0.5 * (1.0 + std::cos(M_PI * (2.0 * v / alpha - 1.0)));
}

namespace {

// Naive separable DFT along one axis of a 4D complex field.
void dft_axis(std::vector<std::complex<double>>& f, const int dims[4],
              int axis) {
  const int n = dims[axis];
  std::size_t stride = 1;
  for (int a = axis + 1; a < 4; ++a) stride *= std::size_t(dims[a]);
  std::size_t outer = 1;
  for (int a = 0; a < axis; ++a) outer *= std::size_t(dims[a]);
  const std::size_t block = stride * std::size_t(n);

  std::vector<std::complex<double>> line(n), out(n);
  std::vector<std::complex<double>> twiddle(std::size_t(n) * n);
  for (int m = 0; m < n; ++m)
    for (int j = 0; j < n; ++j)
      twiddle[std::size_t(m) * n + j] =
          std::polar(1.0, -2.0 * M_PI * m * j / n);

  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t s = 0; s < stride; ++s) {
      const std::size_t base = o * block + s;
      for (int j = 0; j < n; ++j) line[j] = f[base + std::size_t(j) * stride];
      for (int m = 0; m < n; ++m) {
        std::complex<double> acc = 0.0;
        for (int j = 0; j < n; ++j)
          acc += twiddle[std::size_t(m) * n + j] * line[j];
        out[m] = acc;
      }
      for (int m = 0; m < n; ++m) f[base + std::size_t(m) * stride] = out[m];
    }
}

double parseval_one(const SampledCurrent& g, const std::vector<double>& field) {
  const int dims[4] = {g.nt, g.nx, g.ny, g.nz};
  std::vector<std::complex<double>> f(field.size());
  std::vector<double> direct;
  direct.reserve(field.size());
  for (int it = 0; it < g.nt; ++it) {
    const double w = tukey_window(it, g.nt);
    for (std::size_t s = 0; s < std::size_t(g.nx) * g.ny * g.nz; ++s) {
      const std::size_t k = std::size_t(it) * g.nx * g.ny * g.nz + s;
      f[k] = w * field[k];
      direct.push_back(std::norm(f[k]));
    }
  }
  for (int a = 0; a < 4; ++a) dft_axis(f, dims, a);
  std::vector<double> spec;
  spec.reserve(f.size());
  for (const auto& z : f) spec.push_back(std::norm(z));
  const double lhs = pairwise_sum(direct);
  const double rhs = pairwise_sum(spec) / double(g.cells());
  if (lhs == 0.0 && rhs == 0.0) return 0.0;
  return std::abs(lhs - rhs) / std::max(lhs, rhs);
}

}  // namespace

double parseval_mismatch(const SampledCurrent& g) {
  return std::max(std::max(parseval_one(g, g.rho), parseval_one(g, g.jx)),
                  std::max(parseval_one(g, g.jy), parseval_one(g, g.jz)));
}

}  // namespace rnr
