#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rnr/current.hpp"
#include "rnr/four_vector.hpp"
#include "rnr/units.hpp"

namespace rnr {

// ---------------------------------------------------------------------------
// Four-dimensional Fourier transform of a source, phase e^{-i(k.r - w t)}
// over the measure d^3r dt:
//   rho_Q = int e^{-i(k.r - w t)} rho(r,t) d^3r dt   (pulsed, continuous w)
//   J_n(k) = (1/T) int_0^T e^{i n w0 t} [spatial transform](k,t) dt (periodic)
// Reality symmetry: value(-k,-w) = conj(value(k,w)).
// Spectral continuity: k.J_Q = w rho_Q (pulsed), k.J_n = n w0 rho_n.
// ---------------------------------------------------------------------------

struct SpectralSample {
  Complex rho{0.0, 0.0};
  Vector3cd J = Vector3cd::Zero();
};

// Frequency band where the pulsed spectrum is non-negligible (w >= 0 side).
struct OmegaWindow {
  double center = 0.0;
  double halfwidth = 0.0;
};

// Quadrature guidance published by each spectrum so downstream integrals can
// place panels where the spectrum actually lives.
struct SpectralHints {
  double k_max = 0.0;      // |k| beyond which the spectrum is negligible
  double k_panel = 0.0;    // radial panel length resolving |k|-structure
  double time_scale = 0.0; // envelope duration (pulsed sources)
  std::vector<OmegaWindow> omega_windows;  // pulsed spectral support bands
  // Width (in Q^2) of mollified-shell structure near the light cone; set by
  // the radiating/non-radiating split so inverse transforms refine there.
  double q2_shell_width = 0.0;
  // True when the spectrum lives entirely inside the mollified shell (the
  // rad part of a split): frequency content away from the light cone is then
  // identically negligible and inverse transforms may skip it.
  bool shell_concentrated = false;
};

enum class SpectralMode { Pulsed, Periodic };

// Optional factorization eta(k khat, w) dOmega-integrated =
// angular_eta(|k|) * envelope_sq(w), exact for windowed static sources whose
// centers are collinear (and loop axes parallel to that line).  Lets the
// interaction-action integral collapse to 1-D radial x 1-D frequency, which
// is what makes smeared point-like pairs (k_max ~ 12/sigma) affordable.
struct SeparableStatic {
  bool valid = false;
  std::function<double(double)> angular_eta;  // int dOmega eta_spatial(k khat)
  std::function<double(double)> envelope_sq;  // |Etilde(w)|^2
};

struct SpectralCurrent {
  SpectralMode mode = SpectralMode::Pulsed;
  // Pulsed evaluation (k, omega); null in periodic mode.
  std::function<SpectralSample(const Vector3d&, double)> pulsed;
  // Per-harmonic evaluation (n, k); null in pulsed mode.  n = 0 is the time
  // average; radiation sums n >= 1.
  std::function<SpectralSample(int, const Vector3d&)> periodic;
  double period = 0.0;  // periodic mode only
  int n_max = 0;        // harmonics with non-negligible content
  SpectralHints hints;
  SeparableStatic separable;  // fast path for windowed static sources
  Units units;
};

// Rigid-distribution form factors, F(0) = 1.
double shell_form_factor(double kR);
double gaussian_form_factor(double k, double sigma);

// Closed-form / quadrature transforms of built-in sources.
// transform_pulsed requires a pulsed source (GaussianDipolePulse or
// SampledCurrent); transform_periodic requires a periodic or static source
// and integrates (1/T) int_0^T e^{i n w0 t} [spatial FT] dt by trapezoid,
// sampling densely enough to resolve both the harmonic and the |k| * a
// spatial phase swing along the orbit.
SpectralSample transform_pulsed(const Source& s, const Vector3d& k,
                                double omega, const Units& u);
SpectralSample transform_periodic(const Source& s, int n, const Vector3d& k,
                                  const Units& u);

// Closed Bessel-series form of the orbiting-source harmonics
// (rho_n = q F(|k|) e^{-i k.c0} e^{-i n (phase - psi)} (-i)^n J_n(a k_perp),
// current from the J_n recurrences); equals transform_periodic analytically
// and is cheaper per call, so long wave trains use it internally.
SpectralSample orbiting_harmonic_closed(const Source& periodic_source, int n,
                                        const Vector3d& k, const Units& u);

// Wraps a source in the matching SpectralCurrent (mode from temporality;
// static sources become periodic with reference period 1 and n_max = 0).
SpectralCurrent make_spectral(const Source& s, const Units& u);

// Static sources held for a smooth Gaussian window E(t) = exp(-t^2/(2 tau^2))
// as a pulsed spectrum: value(k, w) = [static spatial FT](k) * Etilde(w).
// The effective exposure duration is T_eff = int E^2 dt = tau*sqrt(pi).
// Note: windowing a bare charge violates continuity (the charge never moves),
// so this construct exists only at the spectral level.
SpectralCurrent make_windowed_static_spectrum(
    const std::vector<StaticSource>& sources, double window_tau,
    const Units& u);
double windowed_effective_duration(double window_tau);

// Smooth M-period wave train of a periodic source as a pulsed spectrum:
// value(k, w) = sum_n J_n(k) * Etilde(w - n w0), Gaussian envelope sized so
// T_eff = int E^2 dt = m_periods * T.
SpectralCurrent make_wave_train_spectrum(const Source& periodic_source,
                                         double m_periods, const Units& u);

// Quasi-random verification of k.J = w rho over the hinted support.
struct SpectralContinuity {
  double max_rel_residual = 0.0;
  int n_samples = 0;
  bool pass = false;
};
SpectralContinuity check_spectral_continuity(const SpectralCurrent& sc,
                                             int n_samples, std::uint64_t seed,
                                             double tol = 1e-8);

}  // namespace rnr
