#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <rnr/current.hpp>
#include <rnr/errors.hpp>
#include <rnr/quadrature.hpp>
#include <rnr/radiation.hpp>
#include <rnr/spectral.hpp>

#include <cmath>
#include <vector>

using namespace rnr;

namespace {

const Units u = natural_units();

QuadratureSpec fast_quad() {
  QuadratureSpec q;
  q.n_theta = 16;
  q.n_phi = 32;
  return q;
}

GaussianDipolePulse test_dipole() {
  GaussianDipolePulse d;
  d.amplitude = 1.0;
  d.carrier_omega = 1.0;
  d.envelope_tau = 8.0;
  d.spatial_width = 0.02;
  return d;
}

// Second derivative of p(t) = p0 cos(wc t) exp(-t^2 / (2 tau^2)).
double dipole_pddot(const GaussianDipolePulse& d, double t) {
  const double tau2 = d.envelope_tau * d.envelope_tau;
  const double env = std::exp(-0.5 * t * t / tau2);
  const double x = t / tau2;
  const double c1 = std::cos(d.carrier_omega * t);
  const double s1 = std::sin(d.carrier_omega * t);
  return d.amplitude * env *
         (c1 * (x * x - 1.0 / tau2 - d.carrier_omega * d.carrier_omega) +
          2.0 * d.carrier_omega * s1 * x);
}

}  // namespace

TEST_CASE("transverse projection removes the longitudinal part exactly") {
  const Vector3d k(0.3, -1.2, 0.8);
  const Vector3cd J(Complex(1.0, 0.5), Complex(-0.2, 0.7), Complex(0.4, -1.1));
  const Vector3cd Jt = transverse_project(k, J);
  CHECK(std::abs(k.cast<Complex>().dot(Jt)) <= 1e-15 * k.norm() * J.norm());
  // Idempotent, and the removed part is parallel to k.
  CHECK((transverse_project(k, Jt) - Jt).norm() <= 1e-15 * J.norm());
  const Vector3cd diff = J - Jt;
  CHECK((diff - k.cast<Complex>() * (k.cast<Complex>().dot(diff) / k.squaredNorm()))
            .norm() <= 1e-14 * J.norm());

  // A purely longitudinal current has no transverse part.
  const Vector3cd Jl = Complex(0.0, 2.0) * k.cast<Complex>();
  CHECK(transverse_project(k, Jl).norm() <= 1e-15 * Jl.norm());

  CHECK_THROWS_AS(transverse_project(Vector3d::Zero(), J), ConfigError);
}

TEST_CASE("on-shell contraction equals the transverse power (gauge identity)") {
  const SpectralCurrent sc = make_spectral(test_dipole(), u);
  double worst = 0.0;
  for (int i = 0; i < 25; ++i) {
    const Eigen::Vector4d h = halton4(i, 7);
    const double k = 0.05 + 2.0 * h[0];
    const double mu = 2.0 * h[1] - 1.0;
    const double ph = 2.0 * M_PI * h[2];
    const double s = std::sqrt(1.0 - mu * mu);
    const Vector3d kv(k * s * std::cos(ph), k * s * std::sin(ph), k * mu);
    const SpectralSample f = sc.pulsed(kv, u.c * k);
    const double eta = onshell_eta_contraction(f, kv, u.c);
    const double jt2 = transverse_project(kv, f.J).squaredNorm();
    worst = std::max(worst, std::abs(eta - jt2) / std::max(jt2, 1e-300));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("Poisson statistics from the mean photon number") {
  const double n_bar = 3.7;
  const PoissonEmission pe = poisson_statistics(n_bar, 60);
  REQUIRE(pe.probabilities.size() == 61);
  CHECK(pe.n_bar == n_bar);
  CHECK(pe.probabilities[0] == std::exp(-n_bar));  // exact, not approximate

  double total = 0.0, mean = 0.0;
  for (std::size_t n = 0; n < pe.probabilities.size(); ++n) {
    CHECK(pe.probabilities[n] >= 0.0);
    total += pe.probabilities[n];
    mean += double(n) * pe.probabilities[n];
    if (n + 1 < pe.probabilities.size()) {
      // Forward recurrence P_{n+1} = P_n nbar/(n+1) holds term by term.
      CHECK(pe.probabilities[n + 1] * double(n + 1) ==
            doctest::Approx(pe.probabilities[n] * n_bar).epsilon(1e-14));
    }
  }
  CHECK(total >= 1.0 - 1e-12);
  CHECK(total <= 1.0 + 1e-12);
  CHECK(std::abs(mean - n_bar) <= 1e-10);

  // Vacuum persistence round trip through the imaginary action.
  const double w_im = imag_action(n_bar, u);
  CHECK(std::abs(std::exp(-2.0 * w_im / u.hbar) - pe.probabilities[0]) <=
        1e-12 * pe.probabilities[0]);

  CHECK_THROWS_AS(poisson_statistics(-1.0, 8), ConfigError);
}

TEST_CASE("orbiting charge radiates at the Larmor rate") {
  OrbitingGaussianCharge oc;
  oc.charge = 1.0;
  oc.orbit_radius = 0.05 / (2.0 * M_PI);  // v = 2 pi a / T = 0.05 c
  oc.period = 1.0;
  oc.width = oc.orbit_radius / 50.0;

  QuadratureSpec quad;
  const EmissionResult er = photon_rate_periodic(make_spectral(oc, u), 16, quad);

  const double w0 = 2.0 * M_PI / oc.period;
  const double larmor = 2.0 / 3.0 * oc.charge * oc.charge * oc.orbit_radius *
                        oc.orbit_radius * std::pow(w0, 4) / std::pow(u.c, 3) *
                        oc.period;
  CHECK(std::abs(er.radiated_energy / larmor - 1.0) <= 0.02);

  // Spectrum rows are (n, N_n); totals are consistent with the rows.
  REQUIRE(!er.spectrum.empty());
  double sum_n = 0.0, sum_e = 0.0;
  for (const auto& row : er.spectrum) {
    CHECK(row[0] >= 1.0);
    CHECK(row[1] >= 0.0);
    sum_n += row[1];
    sum_e += u.hbar * row[0] * w0 * row[1];
  }
  CHECK(sum_n == doctest::Approx(er.n_bar).epsilon(1e-12));
  CHECK(sum_e == doctest::Approx(er.radiated_energy).epsilon(1e-12));

  // Fundamental dominates at v << c (next harmonic down by ~(v/c)^2).
  CHECK(er.spectrum[0][1] > 100.0 * er.spectrum[1][1]);
}

TEST_CASE("dipole pulse radiates the time-domain Larmor energy") {
  const GaussianDipolePulse d = test_dipole();
  QuadratureSpec quad;
  const EmissionResult er = mean_photon_number_pulsed(make_spectral(d, u), quad);

  const double E_oracle =
      (2.0 / (3.0 * std::pow(u.c, 3))) *
      integrate_panels([&](double t) { return std::pow(dipole_pddot(d, t), 2); },
                       uniform_breakpoints(-80.0, 80.0, 400), 8);
  CHECK(std::abs(er.radiated_energy / E_oracle - 1.0) <= 0.01);
  CHECK(er.n_bar > 0.0);
  CHECK(er.quadrature_error_estimate >= 0.0);
  CHECK(er.quadrature_error_estimate <= 1e-6 * er.n_bar);
  CHECK(!er.spectrum.empty());
  CHECK(!er.angular.empty());
  for (const auto& [dir, val] : er.angular) {
    CHECK(std::abs(dir.norm() - 1.0) <= 1e-12);
    CHECK(val >= 0.0);
  }
}

TEST_CASE("photon number scales quadratically and is rotation invariant") {
  const QuadratureSpec quad = fast_quad();

  GaussianDipolePulse d = test_dipole();
  const double base = mean_photon_number_pulsed(make_spectral(d, u), quad).n_bar;

  d.amplitude = 2.0;
  const double scaled =
      mean_photon_number_pulsed(make_spectral(d, u), quad).n_bar;
  CHECK(scaled == doctest::Approx(4.0 * base).epsilon(1e-12));

  d.amplitude = 1.0;
  d.direction = Vector3d(1.0, 1.0, 1.0).normalized();
  const double rotated =
      mean_photon_number_pulsed(make_spectral(d, u), quad).n_bar;
  CHECK(rotated == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("shell on the magic diameter is photon-suppressed") {
  OrbitingShell sh;
  sh.period = 1.0;
  sh.orbit_radius = 0.05;  // v = 0.31 c: harmonics decay within n_max
  const QuadratureSpec quad = fast_quad();

  sh.diameter = 0.5 * u.c * sh.period;  // off the magic ratio: radiates
  sh.shell_width = sh.diameter / 200.0;
  const double bright =
      photon_rate_periodic(make_spectral(sh, u), 64, quad).n_bar;

  sh.diameter = 1.0 * u.c * sh.period;  // form factor zero on every shell
  sh.shell_width = sh.diameter / 200.0;
  const double dark =
      photon_rate_periodic(make_spectral(sh, u), 64, quad).n_bar;

  CHECK(bright > 1e-3);
  CHECK(dark >= 0.0);
  CHECK(dark <= 1e-20 * bright);
}

TEST_CASE("starved radial quadrature reports NON_CONVERGED") {
  QuadratureSpec quad;
  quad.n_theta = 8;
  quad.n_phi = 16;
  quad.radial_rel_tol = 1e-15;
  quad.max_evals = 1024;
  const SpectralCurrent sc = make_spectral(test_dipole(), u);
  try {
    mean_photon_number_pulsed(sc, quad);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.status == "NON_CONVERGED");
  }
}

TEST_CASE("mollified 4D shell integral matches the on-shell reduction") {
  const QuadratureSpec quad = fast_quad();
  const SpectralCurrent sc = make_spectral(test_dipole(), u);
  const double n3 = mean_photon_number_pulsed(sc, quad).n_bar;
  const double n4 = mean_photon_number_mollified_4d(sc, quad, 0.02);
  CHECK(std::abs(n4 - n3) / n3 <= 1e-3);
}
