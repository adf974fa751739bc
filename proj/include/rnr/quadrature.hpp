#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "rnr/errors.hpp"

namespace rnr {

// ---------------------------------------------------------------------------
// Deterministic summation.  All accumulations in the library go through
// pairwise_sum so results are bitwise independent of thread count.
// ---------------------------------------------------------------------------
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(std::span<const double>(v.data(), v.size()));
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes on [-1,1], Newton iteration, cached per order.
// ---------------------------------------------------------------------------
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

namespace detail {

inline GaussRule compute_gauss_legendre(int n) {
  GaussRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.x[i] = -x;
    rule.x[n - 1 - i] = x;
    rule.w[i] = rule.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace detail

inline const GaussRule& gauss_legendre(int n) {
  if (n < 1) throw ConfigError("gauss_legendre: order must be positive");
  // Small orders sit in a lock-free table: integration loops look the rule
  // up per panel, often from several threads at once.
  constexpr int kMaxTable = 64;
  if (n <= kMaxTable) {
    static std::array<GaussRule, kMaxTable + 1> table;
    static std::array<std::once_flag, kMaxTable + 1> once;
    std::call_once(once[n],
                   [n] { table[n] = detail::compute_gauss_legendre(n); });
    return table[n];
  }
  static std::map<int, GaussRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  return cache.emplace(n, detail::compute_gauss_legendre(n)).first->second;
}

// Scaled copy of the order-n rule on [a,b].
inline GaussRule gauss_legendre_on(int n, double a, double b) {
  const GaussRule& base = gauss_legendre(n);
  GaussRule out;
  out.x.resize(n);
  out.w.resize(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    out.x[i] = mid + half * base.x[i];
    out.w[i] = half * base.w[i];
  }
  return out;
}

// Composite rule over consecutive breakpoints; deterministic pairwise total.
inline double integrate_panels(const std::function<double(double)>& f,
                               std::span<const double> breakpoints, int order) {
  std::vector<double> terms;
  for (std::size_t p = 0; p + 1 < breakpoints.size(); ++p) {
    GaussRule r = gauss_legendre_on(order, breakpoints[p], breakpoints[p + 1]);
    for (int i = 0; i < order; ++i) terms.push_back(r.w[i] * f(r.x[i]));
  }
  return pairwise_sum(terms);
}

inline std::vector<double> uniform_breakpoints(double a, double b, int n) {
  std::vector<double> bp(n + 1);
  for (int i = 0; i <= n; ++i) bp[i] = a + (b - a) * i / n;
  return bp;
}

// ---------------------------------------------------------------------------
// Gauss-Hermite nodes for int f(x) e^{-x^2} dx (physicists' weight), Newton
// iteration on the Hermite recurrence, cached per order.
// ---------------------------------------------------------------------------
inline const GaussRule& gauss_hermite(int n) {
  static std::map<int, GaussRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  GaussRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Initial guesses from the largest root downward.
    double x;
    if (i == 0)
      x = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    else if (i == 1)
      x = rule.x[n - 1] - 1.14 * std::pow(double(n), 0.426) / rule.x[n - 1];
    else if (i == 2)
      x = 1.86 * rule.x[n - 2] - 0.86 * rule.x[n - 1];
    else if (i == 3)
      x = 1.91 * rule.x[n - 3] - 0.91 * rule.x[n - 2];
    else
      x = 2.0 * rule.x[n - i] - rule.x[n - i + 1];
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Orthonormal Hermite recurrence keeps values O(1).
      double p0 = std::pow(M_PI, -0.25), p1 = std::sqrt(2.0) * x * p0;
      for (int j = 2; j <= n; ++j) {
        double p2 = x * std::sqrt(2.0 / j) * p1 -
                    std::sqrt(double(j - 1) / j) * p0;
        p0 = p1;
        p1 = p2;
      }
      dp = std::sqrt(2.0 * n) * p0;
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-14) break;
    }
    rule.x[n - 1 - i] = x;
    rule.x[i] = -x;
    rule.w[n - 1 - i] = rule.w[i] = 2.0 / (dp * dp);
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

// ---------------------------------------------------------------------------
// Angular grid: Gauss-Legendre in cos(theta) x uniform phi.
// ---------------------------------------------------------------------------
struct AngularGrid {
  std::vector<Eigen::Vector3d> dir;
  std::vector<double> w;  // weights summing to 4*pi
};

inline AngularGrid make_angular_grid(int n_theta, int n_phi) {
  const GaussRule& g = gauss_legendre(n_theta);
  AngularGrid grid;
  grid.dir.reserve(std::size_t(n_theta) * n_phi);
  grid.w.reserve(std::size_t(n_theta) * n_phi);
  const double wphi = 2.0 * M_PI / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    const double mu = g.x[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = (j + 0.5) * 2.0 * M_PI / n_phi;
      grid.dir.emplace_back(s * std::cos(phi), s * std::sin(phi), mu);
      grid.w.push_back(g.w[i] * wphi);
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Quadrature configuration shared by the integral operations.
// ---------------------------------------------------------------------------
struct QuadratureSpec {
  int n_theta = 32;              // Gauss-Legendre order in cos(theta)
  int n_phi = 64;                // uniform azimuthal samples
  double radial_rel_tol = 1e-6;  // panel-doubling stop criterion
  std::int64_t max_evals = std::int64_t(1) << 21;
  int radial_order = 12;         // Gauss nodes per radial panel
  int orbit_min_samples = 64;    // minimum samples per period and harmonic
  bool refine_angular = true;    // doubled angular rule for the error estimate
  int threads = 1;               // worker threads (never changes results)
};

// ---------------------------------------------------------------------------
// Halton sequence (bases 2,3,5,7) for quasi-random sample points.
// ---------------------------------------------------------------------------
inline double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= double(base);
    r += f * double(i % base);
    i /= base;
  }
  return r;
}

inline Eigen::Vector4d halton4(std::uint64_t i, std::uint64_t seed_offset) {
  const std::uint64_t j = i + 1 + (seed_offset % 65521);
  return {radical_inverse(j, 2), radical_inverse(j, 3), radical_inverse(j, 5),
          radical_inverse(j, 7)};
}

}  // namespace rnr
