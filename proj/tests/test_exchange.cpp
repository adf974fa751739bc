#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <rnr/current.hpp>
#include <rnr/errors.hpp>
#include <rnr/exchange.hpp>
#include <rnr/spectral.hpp>

#include <cmath>
#include <vector>

using namespace rnr;

namespace {

const Units u = natural_units();

// Energy of two Gaussian charges: q1 q2 erf(d / (sqrt(2) s)) / d with
// s^2 = sigma1^2 + sigma2^2.
double gaussian_pair_energy(const StaticGaussianCharge& a,
                            const StaticGaussianCharge& b) {
  const double d = (a.center - b.center).norm();
  const double s = std::sqrt(a.width * a.width + b.width * b.width);
  return a.charge * b.charge * std::erf(d / (std::sqrt(2.0) * s)) / d;
}

double gaussian_self_energy(const StaticGaussianCharge& a) {
  return a.charge * a.charge / (2.0 * a.width * std::sqrt(M_PI));
}

}  // namespace

TEST_CASE("charge pairs reproduce the closed-form smeared Coulomb energy") {
  QuadratureSpec quad;
  StaticGaussianCharge qa, qb;
  qa.charge = 1.0;
  qa.width = 0.1;
  qb.charge = 1.0;
  qb.width = 0.1;
  qb.center = Vector3d(1.0, 0.0, 0.0);

  ExchangeResult ex = static_energy(qa, qb, quad, false, u);
  CHECK(std::abs(ex.static_energy_total - gaussian_pair_energy(qa, qb)) <=
        1e-6 * std::abs(gaussian_pair_energy(qa, qb)));
  CHECK(ex.ampere_part == 0.0);
  CHECK(ex.static_energy_total ==
        doctest::Approx(ex.coulomb_part + ex.ampere_part).epsilon(1e-14));

  // Asymmetric widths, opposite signs, shorter distance.
  qa.width = 0.1;
  qb.width = 0.2;
  qb.charge = -2.0;
  qb.center = Vector3d(0.0, 0.5, 0.0);
  ex = static_energy(qa, qb, quad, false, u);
  const double oracle = gaussian_pair_energy(qa, qb);
  CHECK(std::abs(ex.static_energy_total - oracle) <= 1e-6 * std::abs(oracle));

  // Self terms add the closed-form Gaussian self energies.
  const ExchangeResult with_self = static_energy(qa, qb, quad, true, u);
  const double self = gaussian_self_energy(qa) + gaussian_self_energy(qb);
  CHECK(with_self.static_energy_total - ex.static_energy_total ==
        doctest::Approx(self).epsilon(1e-10));

  // Translation invariance.
  StaticGaussianCharge qa2 = qa, qb2 = qb;
  const Vector3d shift(0.3, -1.0, 2.0);
  qa2.center += shift;
  qb2.center += shift;
  const ExchangeResult moved = static_energy(qa2, qb2, quad, false, u);
  CHECK(moved.static_energy_total ==
        doctest::Approx(ex.static_energy_total).epsilon(1e-12));
}

TEST_CASE("coaxial loops match the Neumann inductance with the binding sign") {
  QuadratureSpec quad;
  StaticCurrentLoop la, lb;
  la.radius = 1.0;
  la.wire_width = 0.01;
  lb.radius = 0.7;
  lb.wire_width = 0.007;
  lb.center = Vector3d(0.0, 0.0, 0.4);

  const ExchangeResult ex = static_energy(la, lb, quad, false, u);
  const double N = neumann_mutual_inductance(la.radius, lb.radius, 0.4, 4096);
  const double oracle = -la.current * lb.current * N / (u.c * u.c);
  CHECK(N > 0.0);
  CHECK(ex.coulomb_part == 0.0);  // loops carry no charge density
  CHECK(ex.ampere_part < 0.0);    // parallel currents bind
  CHECK(std::abs(ex.ampere_part - oracle) <= 5e-3 * std::abs(oracle));

  // Reversing one current flips the interaction exactly (bilinearity).
  StaticCurrentLoop lb_rev = lb;
  lb_rev.current = -lb.current;
  const ExchangeResult flipped = static_energy(la, lb_rev, quad, false, u);
  CHECK(flipped.ampere_part == -ex.ampere_part);

  // The Neumann reference is symmetric in the two radii.
  CHECK(neumann_mutual_inductance(0.7, 1.0, 0.4, 4096) ==
        doctest::Approx(N).epsilon(1e-12));
  // And settled in the node count at this geometry.
  CHECK(neumann_mutual_inductance(1.0, 0.7, 0.4, 1024) ==
        doctest::Approx(N).epsilon(1e-8));

  // A charge paired with a loop exchanges nothing at the static level.
  const ExchangeResult mixed =
      static_energy(StaticGaussianCharge{}, la, quad, false, u);
  CHECK(mixed.static_energy_total == 0.0);
}

TEST_CASE("overlapping singular geometries are rejected") {
  QuadratureSpec quad;

  StaticCurrentLoop la;
  la.wire_width = 1e-8;
  CHECK_THROWS_AS(static_energy(la, la, quad, false, u), SingularOverlap);

  // Distant pair is fine, but the self term of a near-singular charge at
  // that geometric scale is not.
  StaticGaussianCharge qa, qb;
  qa.width = qb.width = 1e-6;
  qb.center = Vector3d(10.0, 0.0, 0.0);
  CHECK_NOTHROW(static_energy(qa, qb, quad, false, u));
  CHECK_THROWS_AS(static_energy(qa, qb, quad, true, u), SingularOverlap);

  // Coincident but well-smeared charges have a finite energy: the d -> 0
  // limit of erf(d / (sqrt(2) s)) / d is sqrt(2/pi) / s.
  StaticGaussianCharge ca, cb;
  ca.width = cb.width = 0.2;
  const ExchangeResult ex = static_energy(ca, cb, quad, false, u);
  const double s = std::sqrt(ca.width * ca.width + cb.width * cb.width);
  CHECK(ex.static_energy_total ==
        doctest::Approx(std::sqrt(2.0 / M_PI) / s).epsilon(1e-6));
}

TEST_CASE("light-cone samples carry the instantaneous kernels") {
  const double q1 = 2.0, q2 = -3.0;
  const Vector3d j1(1.0, 0.0, 0.5), j2(0.5, -0.2, 0.0);
  const std::vector<double> R = {0.5, 1.0, 2.0, 4.0};
  const auto samples = lightcone_potential(q1, q2, j1, j2, R, u);
  REQUIRE(samples.size() == R.size());
  for (std::size_t i = 0; i < R.size(); ++i) {
    CHECK(samples[i].R == R[i]);
    CHECK(samples[i].coulomb_kernel ==
          doctest::Approx(q1 * q2 / R[i]).epsilon(1e-14));
    CHECK(samples[i].ampere_kernel ==
          doctest::Approx(-j1.dot(j2) / (u.c * u.c * R[i])).epsilon(1e-14));
  }
}

TEST_CASE("windowed action over T_eff reproduces minus the static energy") {
  QuadratureSpec quad;
  const double tau = 40.0;
  for (double a : {0.8, 1.6}) {
    StaticGaussianCharge qa, qb;
    qa.width = qb.width = 0.05;
    qb.center = Vector3d(a, 0.0, 0.0);

    const SpectralCurrent wsc = make_windowed_static_spectrum(
        {StaticSource{qa}, StaticSource{qb}}, tau, u);
    const ActionResult ar = action_spectral(wsc, quad);
    const ExchangeResult ex = static_energy(qa, qb, quad, true, u);

    const double T_eff = windowed_effective_duration(tau);
    const double ratio = -ar.w / T_eff / ex.static_energy_total;
    CHECK(std::abs(ratio - 1.0) <= 0.02);
    CHECK(ar.pv_spread >= 0.0);
  }
}

TEST_CASE("loop-pair action cross term reproduces the mutual Ampere energy") {
  QuadratureSpec quad;
  StaticCurrentLoop la;
  la.radius = 1.0;
  la.wire_width = 0.05;
  StaticCurrentLoop lb = la;
  lb.center = Vector3d(0.0, 0.0, 0.8);

  const ExchangeResult ur = static_energy(la, lb, quad, false, u);

  const double tau = 40.0;
  auto W_of = [&](const std::vector<StaticSource>& v) {
    return action_spectral(make_windowed_static_spectrum(v, tau, u), quad).w;
  };
  const double w_cross = (W_of({StaticSource{la}, StaticSource{lb}}) -
                          W_of({StaticSource{la}}) - W_of({StaticSource{lb}})) /
                         windowed_effective_duration(tau);
  CHECK(std::abs(-w_cross / ur.static_energy_total - 1.0) <= 0.02);
}

TEST_CASE("principal value aborts when the window extrapolation disagrees") {
  QuadratureSpec quad;
  quad.n_theta = 8;
  quad.n_phi = 16;

  // eta concentrated right on the light cone: no stable principal value.
  SpectralCurrent sc;
  sc.mode = SpectralMode::Pulsed;
  sc.units = u;
  const double k0 = 1.0, width = 0.1, delta = 0.05;
  sc.pulsed = [=](const Vector3d& k, double w) {
    SpectralSample s;
    const double kn = k.norm();
    const double f = std::exp(-0.5 * (kn - k0) * (kn - k0) / (width * width)) *
                     std::exp(-0.5 * (w - kn) * (w - kn) / (delta * delta));
    s.J = Vector3cd(Complex(f, 0.0), Complex(0.0, 0.0), Complex(0.0, 0.0));
    return s;
  };
  sc.hints.k_max = k0 + 8.0 * width;
  sc.hints.k_panel = 0.5 * width;
  sc.hints.time_scale = 1.0 / delta;
  sc.hints.omega_windows = {{k0, 8.0 * width + 8.0 * delta}};

  try {
    action_spectral(sc, quad);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.status == "PV_UNSTABLE");
  }

  // Config-level misuse is rejected up front.
  CHECK_THROWS_AS(action_spectral(make_spectral(OrbitingGaussianCharge{}, u), quad),
                  ConfigError);
  SpectralCurrent no_windows = sc;
  no_windows.hints.omega_windows.clear();
  CHECK_THROWS_AS(action_spectral(no_windows, quad), ConfigError);
}
