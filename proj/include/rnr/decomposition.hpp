#pragma once

#include <array>
#include <vector>

#include "rnr/quadrature.hpp"
#include "rnr/sampled.hpp"
#include "rnr/spectral.hpp"

namespace rnr {

// ---------------------------------------------------------------------------
// Radiating / non-radiating split.  The radiating part keeps the transverse
// spatial current near the zero-mass shell, weighted by a unit-height
// Gaussian mollifier w_eps(Q^2) = exp(-(Q^2)^2 / (2 eps^2)); its time-like
// component is set to zero.  nonrad = original - rad, so additivity is exact
// by construction.  Periodic spectra apply the weight per harmonic for every
// n != 0 (evenly in n, preserving the reality symmetry; the n = 0 line
// carries no photon modes and stays in nonrad).
// ---------------------------------------------------------------------------

struct SplitDiagnostics {
  double reconstruction_residual = 0.0;  // max sampled |rad+nonrad-orig|/|orig|
  double max_transversality = 0.0;       // max sampled |k.J_rad|/(|k||J_rad|)
  // (epsilon, N(nonrad)/N(original)) over the sweep {eps, eps/2, eps/4}.
  std::vector<std::array<double, 2>> nonrad_fraction_sweep;
  // Mean |Q^2| of the rad part's photon-number weight; tracks how far the
  // mollified shell leaks off shell (decreases with eps).
  double rad_mean_abs_q2 = 0.0;
};

struct CurrentSplit {
  SpectralCurrent rad;
  SpectralCurrent nonrad;
  double epsilon = 0.0;
  SplitDiagnostics diagnostics;
};

// Mollifier weight and the split itself.  Diagnostics other than the sweep
// are filled by sampling; populate the sweep with split_diagnostics below.
double shell_mollifier(double q2, double epsilon);
CurrentSplit split_current(const SpectralCurrent& sc, double epsilon);

// N(nonrad) / N(original); 0 by convention when N(original) < 1e-14.
double nonrad_photon_fraction(const CurrentSplit& split,
                              const QuadratureSpec& quad);

// Fills the epsilon sweep {eps, eps/2, eps/4} plus sampled residual /
// transversality diagnostics on the given split's current.
SplitDiagnostics split_diagnostics(const SpectralCurrent& sc, double epsilon,
                                   const QuadratureSpec& quad,
                                   std::uint64_t seed);

// Default mollifier width: 1e-2 * (peak |k|)^2 from the spectrum hints.
double default_epsilon(const SpectralCurrent& sc);

// Inverse transform of a spectral part onto a centered cubic space-time grid
// (spherical k-quadrature times omega panels from hints).  Periodic spectra
// carrying a q2_shell_width hint are integrated only near each harmonic's
// light-cone sphere, which is exact for the rad part; reconstructing the
// nonrad part of a periodic split is not supported on a grid.
struct GridSpec {
  int n_space = 8;
  int n_time = 16;
  double dx = 0.1;
  double dt = 0.05;
};
SampledCurrent reconstruct_on_grid(const SpectralCurrent& sc,
                                   const GridSpec& grid,
                                   const QuadratureSpec& quad);

// Discrete d'Alembertian residual of a grid current:
//   ||box J||_2 / ||second-derivative magnitudes||_2
// over interior points, with a coarse-grid (2h) Richardson cross-check.
// Throws ConvergenceError("GRID_TOO_COARSE") when the residual is O(1) and
// the h vs 2h values disagree by more than 50%.
struct WaveResidual {
  double residual = 0.0;
  double coarse_residual = 0.0;
};
WaveResidual wave_residual(const SampledCurrent& g, const Units& u);

}  // namespace rnr
