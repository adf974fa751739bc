#include "rnr/current.hpp"

#include <algorithm>
#include <cmath>

#include "rnr/errors.hpp"
#include "rnr/quadrature.hpp"

namespace rnr {

OrbitFrame make_frame(const Vector3d& axis) {
  Vector3d n = axis.normalized();
  Vector3d seed = std::abs(n.z()) < 0.9 ? Vector3d::UnitZ() : Vector3d::UnitX();
  Vector3d e1 = seed.cross(n).normalized();
  Vector3d e2 = n.cross(e1);
  return {e1, e2, n};
}

namespace {

template <class S>
OrbitState orbit_state_impl(const S& src, double t) {
  const OrbitFrame f = make_frame(src.axis);
  const double w0 = 2.0 * M_PI / src.period;
  const double ph = w0 * t + src.phase;
  const double c = std::cos(ph), s = std::sin(ph);
  const double a = src.orbit_radius;
  return {src.center + a * (c * f.e1 + s * f.e2),
          a * w0 * (-s * f.e1 + c * f.e2)};
}

double sinhc(double x) {
  if (std::abs(x) < 1e-6) return 1.0 + x * x / 6.0;
  return std::sinh(x) / x;
}

double sinhc_deriv(double x) {
  if (std::abs(x) < 1e-4) return x / 3.0 + x * x * x / 30.0;
  return std::cosh(x) / x - std::sinh(x) / (x * x);
}

// Loop geometry: point and tangent at angle theta.
struct LoopGeom {
  OrbitFrame f;
  Vector3d at(const StaticCurrentLoop& l, double th) const {
    return l.center + l.radius * (std::cos(th) * f.e1 + std::sin(th) * f.e2);
  }
  Vector3d tangent(double th) const {
    return -std::sin(th) * f.e1 + std::cos(th) * f.e2;
  }
};

// Composite Gauss rule around the loop resolving the wire width: panels no
// wider than ~0.8 of the wire's angular footprint keep the cancellation in
// div J below 1e-10 even right on the ring.
int loop_panels(const StaticCurrentLoop& l) {
  return std::max(16, int(std::ceil(8.0 * l.radius / l.wire_width)));
}

template <class F>
double loop_integral(const StaticCurrentLoop& l, F&& f) {
  const LoopGeom g{make_frame(l.axis)};
  const int np = loop_panels(l);
  const GaussRule& base = gauss_legendre(8);
  std::vector<double> terms;
  terms.reserve(std::size_t(np) * 8);
  for (int p = 0; p < np; ++p) {
    const double a = 2.0 * M_PI * p / np;
    const double half = M_PI / np;
    for (int i = 0; i < 8; ++i) {
      terms.push_back(half * base.w[i] * f(g, a + half * (base.x[i] + 1.0)));
    }
  }
  return pairwise_sum(terms);
}

double dipole_envelope(const GaussianDipolePulse& d, double t) {
  return std::exp(-0.5 * t * t / (d.envelope_tau * d.envelope_tau));
}

Vector3d dipole_p_dot(const GaussianDipolePulse& d, double t) {
  const double tau2 = d.envelope_tau * d.envelope_tau;
  const double wc = d.carrier_omega;
  return d.amplitude * dipole_envelope(d, t) *
         (-wc * std::sin(wc * t) - (t / tau2) * std::cos(wc * t)) * d.direction;
}

}  // namespace

OrbitState orbit_state(const OrbitingGaussianCharge& s, double t) {
  return orbit_state_impl(s, t);
}
OrbitState orbit_state(const OrbitingShell& s, double t) {
  return orbit_state_impl(s, t);
}

double shell_profile(double dist, double R, double w) {
  const double w2 = w * w;
  const double norm = std::pow(2.0 * M_PI * w2, -1.5);
  const double arg = dist * R / w2;
  if (arg < 30.0) {
    return norm * std::exp(-0.5 * (dist * dist + R * R) / w2) * sinhc(arg);
  }
  const double a = std::exp(-0.5 * (dist - R) * (dist - R) / w2);
  const double b = std::exp(-0.5 * (dist + R) * (dist + R) / w2);
  return norm * (w2 / (2.0 * dist * R)) * (a - b);
}

double shell_profile_deriv(double dist, double R, double w) {
  const double w2 = w * w;
  const double norm = std::pow(2.0 * M_PI * w2, -1.5);
  const double arg = dist * R / w2;
  if (arg < 30.0) {
    const double e = std::exp(-0.5 * (dist * dist + R * R) / w2);
    return norm * e *
           (-(dist / w2) * sinhc(arg) + (R / w2) * sinhc_deriv(arg));
  }
  const double K = norm * w2 / (2.0 * R);
  const double a = K / dist * std::exp(-0.5 * (dist - R) * (dist - R) / w2);
  const double b = K / dist * std::exp(-0.5 * (dist + R) * (dist + R) / w2);
  const double da = a * (-1.0 / dist - (dist - R) / w2);
  const double db = b * (-1.0 / dist - (dist + R) / w2);
  return da - db;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

namespace {

struct EvalVisitor {
  Vector3d r;
  double t;

  CurrentSample operator()(const StaticGaussianCharge& s) const {
    return {s.charge * gaussian3((r - s.center).squaredNorm(), s.width),
            Vector3d::Zero()};
  }
  CurrentSample operator()(const StaticCurrentLoop& l) const {
    Vector3d J = Vector3d::Zero();
    for (int comp = 0; comp < 3; ++comp) {
      J[comp] = l.current * l.radius *
                loop_integral(l, [&](const LoopGeom& g, double th) {
                  const Vector3d p = g.at(l, th);
                  return g.tangent(th)[comp] *
                         gaussian3((r - p).squaredNorm(), l.wire_width);
                });
    }
    return {0.0, J};
  }
  CurrentSample operator()(const OrbitingGaussianCharge& s) const {
    const OrbitState o = orbit_state(s, t);
    const double rho =
        s.charge * gaussian3((r - o.pos).squaredNorm(), s.width);
    return {rho, rho * o.vel};
  }
  CurrentSample operator()(const OrbitingShell& s) const {
    const OrbitState o = orbit_state(s, t);
    const double rho =
        s.charge *
        shell_profile((r - o.pos).norm(), 0.5 * s.diameter, s.shell_width);
    return {rho, rho * o.vel};
  }
  CurrentSample operator()(const GaussianDipolePulse& d) const {
    const double g = gaussian3(r.squaredNorm(), d.spatial_width);
    const double s2 = d.spatial_width * d.spatial_width;
    const Vector3d p = d.amplitude * dipole_envelope(d, t) *
                       std::cos(d.carrier_omega * t) * d.direction;
    return {p.dot(r) / s2 * g, dipole_p_dot(d, t) * g};
  }
  CurrentSample operator()(const SampledCurrent& g) const {
    SampledSample s = interpolate(g, r, t);
    return {s.rho, s.J};
  }
};

}  // namespace

CurrentSample evaluate(const Source& s, const Vector3d& r, double t) {
  return std::visit(EvalVisitor{r, t}, s);
}

// ---------------------------------------------------------------------------
// rho_dot / div_J / continuity_scale
// ---------------------------------------------------------------------------

namespace {

// Convective pair: rho_dot = rho' * ((r-r0).v)/..., div J = -rho_dot, both
// written independently from the analytic gradient.
struct RhoDotVisitor {
  Vector3d r;
  double t;

  double operator()(const StaticGaussianCharge&) const { return 0.0; }
  double operator()(const StaticCurrentLoop&) const { return 0.0; }
  double operator()(const OrbitingGaussianCharge& s) const {
    const OrbitState o = orbit_state(s, t);
    const Vector3d d = r - o.pos;
    const double rho = s.charge * gaussian3(d.squaredNorm(), s.width);
    return rho * d.dot(o.vel) / (s.width * s.width);
  }
  double operator()(const OrbitingShell& s) const {
    const OrbitState o = orbit_state(s, t);
    const Vector3d d = r - o.pos;
    const double dist = d.norm();
    if (dist < 1e-300) return 0.0;
    // d/dt |r - r0(t)| = -(d . v)/|d|
    return -s.charge *
           shell_profile_deriv(dist, 0.5 * s.diameter, s.shell_width) *
           d.dot(o.vel) / dist;
  }
  double operator()(const GaussianDipolePulse& d) const {
    const double g = gaussian3(r.squaredNorm(), d.spatial_width);
    const double s2 = d.spatial_width * d.spatial_width;
    return dipole_p_dot(d, t).dot(r) / s2 * g;
  }
  double operator()(const SampledCurrent& g) const {
    const double h = 0.5 * g.dt;
    return (interpolate(g, r, t + h).rho - interpolate(g, r, t - h).rho) /
           (2.0 * h);
  }
};

struct DivJVisitor {
  Vector3d r;
  double t;

  double operator()(const StaticGaussianCharge&) const { return 0.0; }
  double operator()(const StaticCurrentLoop& l) const {
    const double s2 = l.wire_width * l.wire_width;
    return l.current * l.radius *
           loop_integral(l, [&](const LoopGeom& g, double th) {
             const Vector3d d = r - g.at(l, th);
             return -g.tangent(th).dot(d) / s2 *
                    gaussian3(d.squaredNorm(), l.wire_width);
           });
  }
  double operator()(const OrbitingGaussianCharge& s) const {
    const OrbitState o = orbit_state(s, t);
    const Vector3d d = r - o.pos;
    const double rho = s.charge * gaussian3(d.squaredNorm(), s.width);
    // div(rho v) = v . grad rho, grad rho = -d/sigma^2 rho
    return -rho * d.dot(o.vel) / (s.width * s.width);
  }
  double operator()(const OrbitingShell& s) const {
    const OrbitState o = orbit_state(s, t);
    const Vector3d d = r - o.pos;
    const double dist = d.norm();
    if (dist < 1e-300) return 0.0;
    return s.charge *
           shell_profile_deriv(dist, 0.5 * s.diameter, s.shell_width) *
           d.dot(o.vel) / dist;
  }
  double operator()(const GaussianDipolePulse& d) const {
    const double g = gaussian3(r.squaredNorm(), d.spatial_width);
    const double s2 = d.spatial_width * d.spatial_width;
    // div(p_dot g) = p_dot . grad g = -(p_dot . r)/sigma^2 g
    return -dipole_p_dot(d, t).dot(r) / s2 * g;
  }
  double operator()(const SampledCurrent& g) const {
    double acc = 0.0;
    const double hx[3] = {0.5 * g.dx, 0.5 * g.dy, 0.5 * g.dz};
    for (int c = 0; c < 3; ++c) {
      Vector3d e = Vector3d::Zero();
      e[c] = hx[c];
      acc += (interpolate(g, r + e, t).J[c] - interpolate(g, r - e, t).J[c]) /
             (2.0 * hx[c]);
    }
    return acc;
  }
};

struct ScaleVisitor {
  Vector3d r;
  double t;

  double operator()(const StaticGaussianCharge& s) const {
    return s.charge * gaussian3((r - s.center).squaredNorm(), s.width) /
           s.width;
  }
  double operator()(const StaticCurrentLoop& l) const {
    const double s2 = l.wire_width * l.wire_width;
    return l.current * l.radius *
           loop_integral(l, [&](const LoopGeom& g, double th) {
             const Vector3d d = r - g.at(l, th);
             return std::abs(g.tangent(th).dot(d)) / s2 *
                    gaussian3(d.squaredNorm(), l.wire_width);
           });
  }
  double operator()(const OrbitingGaussianCharge& s) const {
    const OrbitState o = orbit_state(s, t);
    const Vector3d d = r - o.pos;
    const double rho = std::abs(s.charge) * gaussian3(d.squaredNorm(), s.width);
    return rho * (std::abs(d.dot(o.vel)) + o.vel.norm() * s.width) /
           (s.width * s.width);
  }
  double operator()(const OrbitingShell& s) const {
    const OrbitState o = orbit_state(s, t);
    const double dist = (r - o.pos).norm();
    return std::abs(s.charge *
                    shell_profile_deriv(dist, 0.5 * s.diameter,
                                        s.shell_width)) *
               o.vel.norm() +
           std::abs(s.charge) *
               shell_profile(dist, 0.5 * s.diameter, s.shell_width) *
               o.vel.norm() / s.shell_width;
  }
  double operator()(const GaussianDipolePulse& d) const {
    const double g = gaussian3(r.squaredNorm(), d.spatial_width);
    const double s2 = d.spatial_width * d.spatial_width;
    return dipole_p_dot(d, t).norm() * (r.norm() + d.spatial_width) / s2 * g;
  }
  double operator()(const SampledCurrent& g) const {
    return std::abs(RhoDotVisitor{r, t}(g)) + std::abs(DivJVisitor{r, t}(g)) +
           interpolate(g, r, t).J.norm() /
               std::max({g.dx, g.dy, g.dz});
  }
};

}  // namespace

double rho_dot(const Source& s, const Vector3d& r, double t) {
  return std::visit(RhoDotVisitor{r, t}, s);
}
double div_J(const Source& s, const Vector3d& r, double t) {
  return std::visit(DivJVisitor{r, t}, s);
}
double continuity_scale(const Source& s, const Vector3d& r, double t) {
  return std::visit(ScaleVisitor{r, t}, s);
}

// ---------------------------------------------------------------------------
// Temporality, support, validation
// ---------------------------------------------------------------------------

Temporality temporality(const Source& s) {
  return std::visit(
      [](const auto& v) -> Temporality {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StaticGaussianCharge> ||
                      std::is_same_v<T, StaticCurrentLoop>) {
          return Temporality::Static;
        } else if constexpr (std::is_same_v<T, OrbitingGaussianCharge> ||
                             std::is_same_v<T, OrbitingShell>) {
          return Temporality::Periodic;
        } else {
          return Temporality::Pulsed;
        }
      },
      s);
}

double source_period(const Source& s) {
  if (const auto* o = std::get_if<OrbitingGaussianCharge>(&s)) return o->period;
  if (const auto* o = std::get_if<OrbitingShell>(&s)) return o->period;
  throw ConfigError("source_period: source is not periodic");
}

SupportBox support_box(const Source& s) {
  return std::visit(
      [](const auto& v) -> SupportBox {
        using T = std::decay_t<decltype(v)>;
        SupportBox b;
        if constexpr (std::is_same_v<T, StaticGaussianCharge>) {
          const Vector3d e = Vector3d::Constant(8.0 * v.width);
          b.lo = v.center - e;
          b.hi = v.center + e;
        } else if constexpr (std::is_same_v<T, StaticCurrentLoop>) {
          const Vector3d e =
              Vector3d::Constant(v.radius + 8.0 * v.wire_width);
          b.lo = v.center - e;
          b.hi = v.center + e;
        } else if constexpr (std::is_same_v<T, OrbitingGaussianCharge>) {
          const Vector3d e =
              Vector3d::Constant(v.orbit_radius + 8.0 * v.width);
          b.lo = v.center - e;
          b.hi = v.center + e;
          b.t_hi = v.period;
        } else if constexpr (std::is_same_v<T, OrbitingShell>) {
          const Vector3d e = Vector3d::Constant(
              v.orbit_radius + 0.5 * v.diameter + 8.0 * v.shell_width);
          b.lo = v.center - e;
          b.hi = v.center + e;
          b.t_hi = v.period;
        } else if constexpr (std::is_same_v<T, GaussianDipolePulse>) {
          const Vector3d e = Vector3d::Constant(8.0 * v.spatial_width);
          b.lo = -e;
          b.hi = e;
          b.t_lo = -8.0 * v.envelope_tau;
          b.t_hi = 8.0 * v.envelope_tau;
        } else {
          b.lo = Vector3d(v.x0(), v.y0(), v.z0());
          b.hi = Vector3d(v.x0() + (v.nx - 1) * v.dx,
                          v.y0() + (v.ny - 1) * v.dy,
                          v.z0() + (v.nz - 1) * v.dz);
          b.t_lo = v.t0();
          b.t_hi = v.t0() + (v.nt - 1) * v.dt;
        }
        return b;
      },
      s);
}

void validate(const Source& s) {
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x))
      throw ConfigError(std::string(name) + " must be positive and finite");
  };
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StaticGaussianCharge>) {
          positive(v.width, "width");
        } else if constexpr (std::is_same_v<T, StaticCurrentLoop>) {
          positive(v.radius, "radius");
          positive(v.wire_width, "wire_width");
          if (v.wire_width > 0.5 * v.radius)
            throw ConfigError("wire_width must be < radius/2");
          if (v.axis.norm() < 1e-12) throw ConfigError("axis must be nonzero");
        } else if constexpr (std::is_same_v<T, OrbitingGaussianCharge>) {
          positive(v.orbit_radius, "orbit_radius");
          positive(v.period, "period");
          positive(v.width, "width");
          if (v.axis.norm() < 1e-12) throw ConfigError("axis must be nonzero");
        } else if constexpr (std::is_same_v<T, OrbitingShell>) {
          positive(v.diameter, "diameter");
          positive(v.orbit_radius, "orbit_radius");
          positive(v.period, "period");
          positive(v.shell_width, "shell_width");
          if (!(2.0 * v.orbit_radius < v.diameter))
            throw ConfigError(
                "orbiting shell requires 2*orbit_radius < diameter");
          if (v.axis.norm() < 1e-12) throw ConfigError("axis must be nonzero");
        } else if constexpr (std::is_same_v<T, GaussianDipolePulse>) {
          positive(v.carrier_omega, "carrier_omega");
          positive(v.envelope_tau, "envelope_tau");
          positive(v.spatial_width, "spatial_width");
          if (v.direction.norm() < 1e-12)
            throw ConfigError("direction must be nonzero");
        } else {
          if (v.nx < 4 || v.ny < 4 || v.nz < 4 || v.nt < 4)
            throw ConfigError("sampled grid needs at least 4 cells per axis");
          positive(v.dx, "dx");
          positive(v.dy, "dy");
          positive(v.dz, "dz");
          positive(v.dt, "dt");
          if (v.rho.size() != v.cells() || v.jx.size() != v.cells() ||
              v.jy.size() != v.cells() || v.jz.size() != v.cells())
            throw ConfigError("sampled arrays do not match grid dims");
        }
      },
      s);
}

// ---------------------------------------------------------------------------
// total_charge
// ---------------------------------------------------------------------------

double total_charge(const Source& s, double t) {
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StaticGaussianCharge>) {
          GaussRule r = gauss_legendre_on(64, 0.0, 10.0 * v.width);
          std::vector<double> terms(64);
          for (int i = 0; i < 64; ++i)
            terms[i] = r.w[i] * 4.0 * M_PI * r.x[i] * r.x[i] *
                       gaussian3(r.x[i] * r.x[i], v.width);
          return v.charge * pairwise_sum(terms);
        } else if constexpr (std::is_same_v<T, StaticCurrentLoop>) {
          return 0.0;  // rho is structurally zero
        } else if constexpr (std::is_same_v<T, OrbitingGaussianCharge>) {
          GaussRule r = gauss_legendre_on(64, 0.0, 10.0 * v.width);
          std::vector<double> terms(64);
          for (int i = 0; i < 64; ++i)
            terms[i] = r.w[i] * 4.0 * M_PI * r.x[i] * r.x[i] *
                       gaussian3(r.x[i] * r.x[i], v.width);
          return v.charge * pairwise_sum(terms);
        } else if constexpr (std::is_same_v<T, OrbitingShell>) {
          const double R = 0.5 * v.diameter, w = v.shell_width;
          std::vector<double> bp = {0.0, std::max(0.0, R - 10.0 * w),
                                    R + 10.0 * w};
          double val = integrate_panels(
              [&](double x) {
                return 4.0 * M_PI * x * x * shell_profile(x, R, w);
              },
              bp, 48);
          return v.charge * val;
        } else if constexpr (std::is_same_v<T, GaussianDipolePulse>) {
          const GaussRule g1 =
              gauss_legendre_on(32, -8.0 * v.spatial_width,
                                8.0 * v.spatial_width);
          std::vector<double> terms;
          terms.reserve(32 * 32 * 32);
          for (int i = 0; i < 32; ++i)
            for (int j = 0; j < 32; ++j)
              for (int k = 0; k < 32; ++k) {
                const Vector3d r(g1.x[i], g1.x[j], g1.x[k]);
                terms.push_back(g1.w[i] * g1.w[j] * g1.w[k] *
                                EvalVisitor{r, t}(v).rho);
              }
          return pairwise_sum(terms);
        } else {
          std::vector<double> terms;
          terms.reserve(std::size_t(v.nx) * v.ny * v.nz);
          const double dv = v.dx * v.dy * v.dz;
          for (int ix = 0; ix < v.nx; ++ix)
            for (int iy = 0; iy < v.ny; ++iy)
              for (int iz = 0; iz < v.nz; ++iz) {
                const Vector3d r(v.x0() + ix * v.dx, v.y0() + iy * v.dy,
                                 v.z0() + iz * v.dz);
                terms.push_back(interpolate(v, r, t).rho * dv);
              }
          return pairwise_sum(terms);
        }
      },
      s);
}

// ---------------------------------------------------------------------------
// check_continuity
// ---------------------------------------------------------------------------

ContinuityReport check_continuity(const Source& s, int n_samples,
                                  std::uint64_t seed, double threshold) {
  if (const auto* g = std::get_if<SampledCurrent>(&s)) {
    GridContinuity gc = check_continuity_grid(*g, threshold);
    ContinuityReport rep;
    rep.max_rel_residual = gc.max_rel_residual;
    rep.scale = gc.scale;
    rep.worst_r = Vector3d(g->x0() + gc.worst[1] * g->dx,
                           g->y0() + gc.worst[2] * g->dy,
                           g->z0() + gc.worst[3] * g->dz);
    rep.worst_t = g->t0() + gc.worst[0] * g->dt;
    rep.n_samples = int(g->cells());
    rep.pass = gc.pass;
    return rep;
  }

  const SupportBox box = support_box(s);
  ContinuityReport rep;
  rep.n_samples = n_samples;
  double max_res = 0.0, max_scale = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const Eigen::Vector4d u = halton4(i, seed);
    Vector3d r;
    for (int c = 0; c < 3; ++c)
      r[c] = box.lo[c] + u[c] * (box.hi[c] - box.lo[c]);
    const double t = box.t_lo + u[3] * (box.t_hi - box.t_lo);
    const double res = std::abs(rho_dot(s, r, t) + div_J(s, r, t));
    const double sc = continuity_scale(s, r, t);
    if (sc > max_scale) max_scale = sc;
    if (res > max_res) {
      max_res = res;
      rep.worst_r = r;
      rep.worst_t = t;
    }
  }
  rep.scale = max_scale;
  rep.max_rel_residual = max_res / std::max(max_scale, 1e-300);
  rep.pass = rep.max_rel_residual <= threshold;
  return rep;
}

}  // namespace rnr
