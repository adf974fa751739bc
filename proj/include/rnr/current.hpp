#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <variant>
#include <vector>

#include "rnr/four_vector.hpp"
#include "rnr/sampled.hpp"
#include "rnr/units.hpp"

namespace rnr {

// ---------------------------------------------------------------------------
// Built-in four-current distributions.  All satisfy the continuity equation
// exactly by construction; check_continuity verifies the implementations.
// ---------------------------------------------------------------------------

struct StaticGaussianCharge {
  double charge = 1.0;
  double width = 0.1;  // Gaussian std dev
  Vector3d center = Vector3d::Zero();
};

struct StaticCurrentLoop {
  double current = 1.0;
  double radius = 1.0;
  double wire_width = 0.01;  // Gaussian cross-section std dev
  Vector3d center = Vector3d::Zero();
  Vector3d axis = Vector3d::UnitZ();
};

// Rigid Gaussian charge on a circular orbit; convective J = rho * v.
struct OrbitingGaussianCharge {
  double charge = 1.0;
  double orbit_radius = 1.0;
  double period = 1.0;
  double width = 0.02;  // default a/50 applied at config level
  Vector3d center = Vector3d::Zero();
  Vector3d axis = Vector3d::UnitZ();
  double phase = 0.0;
};

// Rigid uniformly charged spherical surface (diameter d) on a circular orbit.
// The spatial form factor sin(kR)/(kR), R = d/2, vanishes on every emission
// shell when d = n * c * period.  Requires 2 * orbit_radius < diameter.
struct OrbitingShell {
  double charge = 1.0;
  double diameter = 1.0;
  double orbit_radius = 0.2;
  double period = 1.0;
  double shell_width = 0.005;  // surface smearing, default d/200
  Vector3d center = Vector3d::Zero();
  Vector3d axis = Vector3d::UnitZ();
  double phase = 0.0;
};

// Point-like dipole p(t) = p0 e cos(w_c t) exp(-t^2/(2 tau^2)) smeared with a
// spatial Gaussian so space-time evaluation stays finite.
struct GaussianDipolePulse {
  double amplitude = 1.0;
  double carrier_omega = 1.0;
  double envelope_tau = 10.0;
  double spatial_width = 0.02;  // default 0.02*c/carrier_omega at config level
  Vector3d direction = Vector3d::UnitZ();
};

using StaticSource = std::variant<StaticGaussianCharge, StaticCurrentLoop>;
using PeriodicSource = std::variant<OrbitingGaussianCharge, OrbitingShell>;
using Source =
    std::variant<StaticGaussianCharge, StaticCurrentLoop,
                 OrbitingGaussianCharge, OrbitingShell, GaussianDipolePulse,
                 SampledCurrent>;

// ---------------------------------------------------------------------------
// Shared geometry helpers.
// ---------------------------------------------------------------------------

// Orthonormal frame (e1, e2, n) with n the given axis.
struct OrbitFrame {
  Vector3d e1, e2, n;
};
OrbitFrame make_frame(const Vector3d& axis);

// Position and velocity of a circular-orbit center at time t.
struct OrbitState {
  Vector3d pos, vel;
};
OrbitState orbit_state(const OrbitingGaussianCharge& s, double t);
OrbitState orbit_state(const OrbitingShell& s, double t);

inline double gaussian3(double dist2, double sigma) {
  const double s2 = sigma * sigma;
  return std::exp(-0.5 * dist2 / s2) / std::pow(2.0 * M_PI * s2, 1.5);
}

// Radial profile of the smeared shell (Gaussian convolved with a spherical
// surface delta of radius R), and its radial derivative.
double shell_profile(double dist, double R, double w);
double shell_profile_deriv(double dist, double R, double w);

// ---------------------------------------------------------------------------
// Operations.
// ---------------------------------------------------------------------------

struct CurrentSample {
  double rho = 0.0;
  Vector3d J = Vector3d::Zero();
};

enum class Temporality { Static, Periodic, Pulsed };

struct SupportBox {
  Vector3d lo = Vector3d::Zero();
  Vector3d hi = Vector3d::Zero();
  double t_lo = 0.0;  // sampling window for pulsed sources; one period for
  double t_hi = 0.0;  // periodic; degenerate for static
};

struct ContinuityReport {
  double max_rel_residual = 0.0;
  double scale = 0.0;         // magnitude of the cancelling terms
  Vector3d worst_r = Vector3d::Zero();
  double worst_t = 0.0;
  int n_samples = 0;
  bool pass = false;
};

CurrentSample evaluate(const Source& s, const Vector3d& r, double t);
double rho_dot(const Source& s, const Vector3d& r, double t);
double div_J(const Source& s, const Vector3d& r, double t);
// Sum of absolute magnitudes of the terms that cancel in rho_dot + div_J.
double continuity_scale(const Source& s, const Vector3d& r, double t);

Temporality temporality(const Source& s);
double source_period(const Source& s);  // throws unless Periodic
SupportBox support_box(const Source& s);

// Total charge by source-adapted quadrature over the support at time t.
double total_charge(const Source& s, double t);

// Quasi-random sampling of the continuity residual over the support.
ContinuityReport check_continuity(const Source& s, int n_samples,
                                  std::uint64_t seed,
                                  double threshold = 1e-10);

// Parameter validation; throws ConfigError on violations.
void validate(const Source& s);

}  // namespace rnr
