#pragma once

#include <vector>

#include "rnr/current.hpp"
#include "rnr/quadrature.hpp"
#include "rnr/spectral.hpp"

namespace rnr {

// ---------------------------------------------------------------------------
// Virtual-photon exchange: the off-shell (real) part of the action
//   W[J] = 1/(8 pi^3 c^2) PV int d^3k dw (|J_Q|^2 - c^2 |rho_Q|^2)/(|k|^2 - w^2/c^2)
// and the static Coulomb + Ampere energy
//   U = 1/2 int int [rho1 rho2 - J1.J2/c^2] / |r1 - r2| d^3r1 d^3r2,
// related for quasi-static sources by W = -U * T_eff.
// ---------------------------------------------------------------------------

struct ExchangeResult {
  double w_action = 0.0;
  double static_energy_total = 0.0;
  double coulomb_part = 0.0;
  double ampere_part = 0.0;
  double principal_value_diagnostic = 0.0;  // PV extrapolation spread
};

// Static two-body (and optionally self) energy by nested source-adapted
// quadrature.  include_self = false returns only the cross term (the 1/2
// cancels against the two orderings).  Throws SingularOverlap when nodes of
// both densities collide below 1e-6 * (source extent).
ExchangeResult static_energy(const StaticSource& a, const StaticSource& b,
                             const QuadratureSpec& quad, bool include_self,
                             const Units& u);

// Principal-value spectral action for a pulsed spectrum.  The w-integration
// at each |k| excludes a symmetric window around the pole and Richardson-
// extrapolates the window width to zero over three sizes; pv_spread is the
// extrapolation spread.  Throws ConvergenceError("PV_UNSTABLE") when the
// spread exceeds 5% of |W|.
struct ActionResult {
  double w = 0.0;
  double pv_spread = 0.0;
};
ActionResult action_spectral(const SpectralCurrent& sc,
                             const QuadratureSpec& quad);

// Light-cone ("half retarded plus half advanced") interaction kernel for a
// static pair: integrating delta(c^2 T^2 - R^2) over T collapses to the 1/R
// Coulomb kernel; the current-current term enters with opposite sign.
struct LightConeSample {
  double R = 0.0;
  double coulomb_kernel = 0.0;  //  q1 q2 / R
  double ampere_kernel = 0.0;   // -J1.J2 / (c^2 R)
};
std::vector<LightConeSample> lightcone_potential(double q1, double q2,
                                                 const Vector3d& j1,
                                                 const Vector3d& j2,
                                                 const std::vector<double>& R,
                                                 const Units& u);

// Neumann double line integral for the mutual inductance of two circular
// loops (test oracle for the Ampere part; exposed for reuse by the CLI).
double neumann_mutual_inductance(double radius_a, double radius_b,
                                 double axial_separation, int n_nodes = 256);

}  // namespace rnr
