#pragma once

#include <array>
#include <utility>
#include <vector>

#include "rnr/quadrature.hpp"
#include "rnr/spectral.hpp"

namespace rnr {

// ---------------------------------------------------------------------------
// Real-photon observables.  Mean photon number for a pulsed current
//   N = 1/(4 pi^2 hbar c) int d^3k |J_T(k, c|k|)|^2 / |k|
// (the on-shell reduction of the 4D zero-mass-shell integral in the
// d^3r dt transform convention; see docs/theory notes in README).
// Periodic sources report photons per period,
//   N_n = T k_n/(2 pi hbar c^2) int dOmega |J_{T,n}(k_n khat)|^2,
// k_n = n w0 / c, fixed by matching the pulsed formula on long wave trains.
// ---------------------------------------------------------------------------

struct EmissionResult {
  double n_bar = 0.0;  // photons per pulse (pulsed) or per period (periodic)
  // (omega, dN/domega) for pulsed; (n, N_n) for periodic.
  std::vector<std::array<double, 2>> spectrum;
  // (direction, dN/dOmega) on the angular rule.
  std::vector<std::pair<Vector3d, double>> angular;
  double radiated_energy = 0.0;  // hbar * int w dN
  double quadrature_error_estimate = 0.0;
};

struct PoissonEmission {
  double n_bar = 0.0;
  std::vector<double> probabilities;  // P_0 .. P_{n_max}
};

// Transverse projection (1 - khat khat) J, re-orthogonalized so k.result = 0
// to machine precision.  Throws ConfigError at k = 0 (undefined direction).
Vector3cd transverse_project(const Vector3d& k, const Vector3cd& J);

// On-shell current contraction |J|^2 - c^2 |rho|^2 at (k, c|k|); equals
// |J_T|^2 there by spectral continuity (gauge identity).
double onshell_eta_contraction(const SpectralSample& s, const Vector3d& k,
                               double c);

EmissionResult mean_photon_number_pulsed(const SpectralCurrent& sc,
                                         const QuadratureSpec& quad);
EmissionResult photon_rate_periodic(const SpectralCurrent& sc, int n_max,
                                    const QuadratureSpec& quad);

// Direct 4D quadrature of the zero-mass-shell integral with a Gaussian
// mollifier delta_eps(Q^2), Richardson-extrapolated over {eps, eps/2, eps/4}.
// Oracle for the shell reduction used by mean_photon_number_pulsed.
double mean_photon_number_mollified_4d(const SpectralCurrent& sc,
                                       const QuadratureSpec& quad,
                                       double epsilon);

// P_N = n_bar^N e^{-n_bar} / N! via the stable forward recurrence.
PoissonEmission poisson_statistics(double n_bar, int n_max);

// Im S[J] = hbar n_bar / 2.
double imag_action(double n_bar, const Units& u);

}  // namespace rnr
