#pragma once

#include <string>
#include <vector>

#include "rnr/four_vector.hpp"
#include "rnr/units.hpp"

namespace rnr {

// ---------------------------------------------------------------------------
// Numerical checks of the massless Feynman propagator identities.  The
// space-time kernel (metric factor carried symbolically) is
//   D(x) = i / (pi (x^2 + i eps)),  x^2 = |r|^2 - c^2 t^2,
// whose eps -> 0 real part concentrates as delta(x^2) on the light cone and
// whose imaginary part is 1/(pi x^2) pointwise off the cone.  Momentum-space
// counterparts are verified as smeared distributions.
// ---------------------------------------------------------------------------

Complex propagator_closed_form(double x2, double epsilon_reg);

// On-shell Fourier pair for the imaginary part:
//   numeric  = 4 pi^2 int delta(Q^2) e^{i(k.r - w t)} d^4Q/(2 pi)^4
//            = (1/(pi r)) int_0^K sin(k r) cos(c k t) e^{-eta k} dk,
//   analytic = 1/(pi (r^2 - c^2 t^2)),
// with exponential damping Richardson-extrapolated eta -> 0 (four values
// giving two independent second-order extrapolations).  status =
// "CUTOFF_TOO_LOW" (pass = false) when those extrapolations disagree by more
// than 2% (the cutoff cannot resolve the slow beat near the light cone).
struct PairCheck {
  double numeric = 0.0;
  double analytic = 0.0;
  double rel_err = 0.0;
  double damping_sensitivity = 0.0;
  bool pass = false;
  std::string status = "ok";
};
PairCheck verify_imag_pair(double r, double t, double k_cutoff,
                           const Units& u);

// Light-cone delta pair for the real part, verified against a smeared test
// function phi(x) = g_w(x^2 - s0) * exp(-(|r|^2 + (ct)^2)/(2 lambda^2)):
//   lhs = int delta(x^2) phi d^4x / c   (closed form),
//   rhs = 4 pi PV int (phihat(Q)/Q^2) d^4Q/(2 pi)^4 integrated the same way,
// using a subtraction-form principal value.  status = "PV_UNSTABLE" when the
// two finest cutoff estimates spread by more than 5%.
struct RealPairCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_err = 0.0;
  double cutoff_spread = 0.0;
  bool pass = false;
  std::string status = "ok";
};
RealPairCheck verify_real_pair_smeared(double s0, double w, double lambda,
                                       double k_cutoff);

// Retarded/advanced split of the light-cone delta:
//   delta(c^2 T^2 - R^2) = [delta(cT - R) + delta(cT + R)] / (2R),
// both sides smeared against a Gaussian in T of width w centered at
// t_center; lhs is integrated numerically with a mollified delta, rhs is the
// closed-form right-hand side.
struct SplitCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_err = 0.0;
};
SplitCheck retarded_advanced_split(double t_center, double R, double w,
                                   const Units& u);

// Regulator identity 1/(a^2 - i eps) = PV 1/a^2 + i pi delta_eps(a^2) with
// the Lorentzian delta_eps(a^2) = (eps/pi)/(a^4 + eps^2); returns the
// residual per eps (should decrease like eps^2 for a^2 != 0).
struct LorentzianCheck {
  double a2 = 0.0;
  std::vector<double> eps;
  std::vector<double> residual;
  bool decreasing = false;
};
LorentzianCheck a8_identity_check(double a2, const std::vector<double>& eps);

}  // namespace rnr
