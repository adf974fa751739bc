#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <rnr/current.hpp>
#include <rnr/errors.hpp>
#include <rnr/quadrature.hpp>
#include <rnr/spectral.hpp>

#include <cmath>
#include <complex>
#include <vector>

using namespace rnr;

namespace {

const Units u = natural_units();

// Time-domain Fourier integral int e^{i w t} f(t) dt by trapezoid on a
// Gaussian-decaying integrand (spectrally accurate).
template <class F>
Complex time_ft(F f, double omega, double t_span, int n) {
  const double h = 2.0 * t_span / n;
  Complex acc{0.0, 0.0};
  for (int i = 0; i <= n; ++i) {
    const double t = -t_span + i * h;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    acc += w * std::exp(Complex(0.0, omega * t)) * f(t);
  }
  return acc * h;
}

// Line-current ring transform by periodic trapezoid (exact to rounding for
// analytic periodic integrands at this node count).
Vector3cd ring_ft(const StaticCurrentLoop& l, const Vector3d& k) {
  const OrbitFrame f = make_frame(l.axis);
  const int n = 2048;
  Vector3cd acc = Vector3cd::Zero();
  for (int i = 0; i < n; ++i) {
    const double th = 2.0 * M_PI * i / n;
    const Vector3d p =
        l.center + l.radius * (std::cos(th) * f.e1 + std::sin(th) * f.e2);
    const Vector3d tang = -std::sin(th) * f.e1 + std::cos(th) * f.e2;
    acc += std::exp(Complex(0.0, -k.dot(p))) * tang.cast<Complex>();
  }
  acc *= l.current * l.radius * (2.0 * M_PI / n);
  // Gaussian wire cross-section is a convolution: multiply its transform.
  return acc * gaussian_form_factor(k.norm(), l.wire_width);
}

double rel_err(const Complex& a, const Complex& b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

TEST_CASE("form factors normalize to one and have the right zeros") {
  CHECK(shell_form_factor(0.0) == 1.0);
  CHECK(gaussian_form_factor(0.0, 0.3) == 1.0);
  CHECK(std::abs(shell_form_factor(M_PI)) <= 1e-15);
  CHECK(std::abs(shell_form_factor(2.0 * M_PI)) <= 1e-15);
  CHECK(shell_form_factor(1.0) == doctest::Approx(std::sin(1.0)).epsilon(1e-14));
  CHECK(gaussian_form_factor(2.0, 0.5) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
}

TEST_CASE("pulsed dipole transform matches a time-quadrature oracle") {
  GaussianDipolePulse d;
  d.amplitude = 0.8;
  d.carrier_omega = 1.3;
  d.envelope_tau = 6.0;
  d.spatial_width = 0.05;
  d.direction = Vector3d(0.2, -0.4, 1.0).normalized();

  auto p_of_t = [&](double t) {
    return d.amplitude * std::cos(d.carrier_omega * t) *
           std::exp(-0.5 * t * t / (d.envelope_tau * d.envelope_tau));
  };
  auto p_dot = [&](double t) {
    const double tau2 = d.envelope_tau * d.envelope_tau;
    return d.amplitude * std::exp(-0.5 * t * t / tau2) *
           (-d.carrier_omega * std::sin(d.carrier_omega * t) -
            (t / tau2) * std::cos(d.carrier_omega * t));
  };

  // Probe frequencies sit inside the carrier band: far outside it the
  // spectrum underflows and the quadrature oracle is noise-limited.
  const std::vector<std::pair<Vector3d, double>> probes = {
      {{0.6, 0.0, 1.1}, 1.3},   {{-0.5, 0.8, 0.2}, 0.9},
      {{0.0, 0.0, 2.0}, -1.3},  {{1.0, 1.0, -0.5}, 1.7},
      {{0.3, -0.2, 0.4}, 1.0}};
  for (const auto& [k, w] : probes) {
    const SpectralSample got = transform_pulsed(d, k, w, u);
    const double g_spatial = gaussian_form_factor(k.norm(), d.spatial_width);

    // J_Q = direction * spatial_FT * int e^{iwt} p_dot dt.
    const Complex jt = time_ft(p_dot, w, 10.0 * d.envelope_tau, 8192);
    const Vector3cd j_oracle = (g_spatial * jt) * d.direction.cast<Complex>();
    CHECK((got.J - j_oracle).norm() <=
          1e-8 * std::max(j_oracle.norm(), 1e-10));

    // rho_Q = -i (k . direction) sigma-free spatial factor * int e^{iwt} p dt:
    // the polarization density p(t).e r g(r)/sigma^2 transforms to
    // -i (k.e) p~(w) g~(k).
    const Complex pt = time_ft(p_of_t, w, 10.0 * d.envelope_tau, 8192);
    const Complex rho_oracle =
        Complex(0.0, -1.0) * k.dot(d.direction) * g_spatial * pt;
    CHECK(std::abs(got.rho - rho_oracle) <=
          1e-8 * std::max(std::abs(rho_oracle), 1e-10));

    // Reality symmetry of a real source.
    const SpectralSample mirr = transform_pulsed(d, -k, -w, u);
    CHECK((mirr.J - got.J.conjugate()).norm() <=
          1e-12 * std::max(got.J.norm(), 1e-300));
    CHECK(std::abs(mirr.rho - std::conj(got.rho)) <=
          1e-12 * std::max(std::abs(got.rho), 1e-300));
  }

  CHECK_THROWS_AS(transform_pulsed(StaticCurrentLoop{}, Vector3d(1, 0, 0), 1.0, u),
                  ConfigError);
  CHECK_THROWS_AS(transform_periodic(GaussianDipolePulse{}, 1, Vector3d(1, 0, 0), u),
                  ConfigError);
}

TEST_CASE("closed-form orbit harmonics equal the quadrature transform") {
  OrbitingGaussianCharge orb;
  orb.charge = -0.6;
  orb.orbit_radius = 0.35;
  orb.period = 2.2;
  orb.width = 0.04;
  orb.center = Vector3d(0.1, 0.0, -0.2);
  orb.axis = Vector3d(0.3, 0.1, 1.0);
  orb.phase = 0.4;

  OrbitingShell shell;
  shell.charge = 1.2;
  shell.diameter = 0.9;
  shell.orbit_radius = 0.15;
  shell.period = 1.6;
  shell.shell_width = 0.01;
  shell.phase = -0.7;

  const std::vector<Vector3d> ks = {
      {1.0, 0.0, 0.0}, {0.7, -0.9, 0.4}, {0.0, 0.0, 2.0}, {2.5, 1.0, -1.5}};
  for (const Source& s : {Source{orb}, Source{shell}}) {
    for (int n : {0, 1, 2, 4}) {
      for (const Vector3d& k : ks) {
        const SpectralSample a = orbiting_harmonic_closed(s, n, k, u);
        const SpectralSample b = transform_periodic(s, n, k, u);
        // Relative where the harmonic has weight, absolute rounding floor
        // where it underflows (e.g. k parallel to the axis).
        const double scale =
            std::max({a.J.norm(), b.J.norm(), std::abs(a.rho), 1e-300});
        CHECK((a.J - b.J).norm() <= 1e-8 * scale + 1e-13);
        CHECK(std::abs(a.rho - b.rho) <= 1e-8 * scale + 1e-13);
      }
    }
  }
}

TEST_CASE("static transforms: Gaussian charge closed form and ring oracle") {
  StaticGaussianCharge q;
  q.charge = 2.5;
  q.width = 0.12;
  q.center = Vector3d(0.3, -0.1, 0.7);
  for (const Vector3d& k :
       {Vector3d(1.2, 0, 0), Vector3d(0.5, -2.0, 1.0), Vector3d(0, 0, 3.0)}) {
    const SpectralSample s = transform_periodic(q, 0, k, u);
    const Complex expect = q.charge *
                           gaussian_form_factor(k.norm(), q.width) *
                           std::exp(Complex(0.0, -k.dot(q.center)));
    CHECK(rel_err(s.rho, expect) <= 1e-12);
    CHECK(s.J.norm() <= 1e-12 * std::abs(expect));
  }

  StaticCurrentLoop loop;
  loop.current = 1.4;
  loop.radius = 0.8;
  loop.wire_width = 0.03;
  loop.center = Vector3d(0.2, 0.5, -0.3);
  loop.axis = Vector3d(0.1, -0.2, 0.9);
  for (const Vector3d& k :
       {Vector3d(1.0, 0, 0), Vector3d(0.4, 1.1, -0.6), Vector3d(0, -2.2, 0.5)}) {
    const SpectralSample s = transform_periodic(loop, 0, k, u);
    const Vector3cd oracle = ring_ft(loop, k);
    CHECK((s.J - oracle).norm() <= 1e-10 * std::max(oracle.norm(), 1e-300));
    CHECK(std::abs(s.rho) == 0.0);
    // Static loop current is divergence-free: k . J = 0.
    CHECK(std::abs(k.cast<Complex>().dot(s.J)) <= 1e-12 * s.J.norm());
  }

  // Harmonics above zero vanish for static sources.
  const SpectralSample h1 = transform_periodic(loop, 1, Vector3d(1, 0, 0), u);
  CHECK(h1.J.norm() <= 1e-14);
}

TEST_CASE("make_spectral dispatches on temporality and publishes hints") {
  const SpectralCurrent sp = make_spectral(GaussianDipolePulse{}, u);
  CHECK(sp.mode == SpectralMode::Pulsed);
  CHECK(bool(sp.pulsed));
  CHECK(sp.hints.k_max > 0.0);
  CHECK(sp.hints.time_scale > 0.0);
  REQUIRE(!sp.hints.omega_windows.empty());
  // One window should cover the carrier frequency.
  bool covers = false;
  for (const OmegaWindow& w : sp.hints.omega_windows) {
    if (std::abs(1.0 - w.center) <= w.halfwidth) covers = true;
  }
  CHECK(covers);

  OrbitingGaussianCharge orb;
  orb.period = 2.0;
  const SpectralCurrent so = make_spectral(orb, u);
  CHECK(so.mode == SpectralMode::Periodic);
  CHECK(bool(so.periodic));
  CHECK(so.period == 2.0);
  CHECK(so.n_max >= 1);

  const SpectralCurrent ss = make_spectral(StaticCurrentLoop{}, u);
  CHECK(ss.mode == SpectralMode::Periodic);
  CHECK(ss.n_max == 0);
  CHECK(ss.period == 1.0);
}

TEST_CASE("spectral continuity holds for builtin spectra") {
  for (const Source& s :
       {Source{GaussianDipolePulse{}}, Source{OrbitingGaussianCharge{}},
        Source{OrbitingShell{}}}) {
    const SpectralContinuity rep =
        check_spectral_continuity(make_spectral(s, u), 100, 5);
    CHECK(rep.pass);
    CHECK(rep.max_rel_residual <= 1e-8);
    CHECK(rep.n_samples == 100);
  }

  // A windowed loop keeps k.J = 0 = w rho exactly (rho vanishes).
  StaticCurrentLoop loop;
  const SpectralCurrent wl =
      make_windowed_static_spectrum({StaticSource{loop}}, 5.0, u);
  const SpectralContinuity rep = check_spectral_continuity(wl, 100, 5);
  CHECK(rep.pass);
}

TEST_CASE("windowed static spectra factor into spatial transform and envelope") {
  StaticGaussianCharge qa;
  qa.charge = 1.0;
  qa.width = 0.1;
  qa.center = Vector3d(0, 0, 0.4);
  StaticGaussianCharge qb;
  qb.charge = -2.0;
  qb.width = 0.15;
  qb.center = Vector3d(0, 0, -0.4);
  const double tau = 5.0;

  CHECK(windowed_effective_duration(tau) ==
        doctest::Approx(tau * std::sqrt(M_PI)).epsilon(1e-14));

  const SpectralCurrent sc =
      make_windowed_static_spectrum({StaticSource{qa}, StaticSource{qb}}, tau, u);
  REQUIRE(sc.mode == SpectralMode::Pulsed);
  REQUIRE(bool(sc.pulsed));

  // value(k, w) = [sum of static spatial FTs](k) * tau sqrt(2 pi) e^{-w^2
  // tau^2 / 2}.
  for (const Vector3d& k :
       {Vector3d(2.0, 0, 0), Vector3d(0.5, 1.0, -0.8), Vector3d(0, 0, 1.5)}) {
    for (double w : {0.0, 0.1, -0.23}) {
      const SpectralSample got = sc.pulsed(k, w);
      const Complex spatial = transform_periodic(qa, 0, k, u).rho +
                              transform_periodic(qb, 0, k, u).rho;
      const Complex expect = spatial * tau * std::sqrt(2.0 * M_PI) *
                             std::exp(-0.5 * w * w * tau * tau);
      CHECK(rel_err(got.rho, expect) <= 1e-12);
      CHECK(got.J.norm() <= 1e-12 * std::abs(expect));
    }
  }

  // Collinear centers publish the separable fast path; verify the
  // factorization against a direct angular quadrature of eta.
  REQUIRE(sc.separable.valid);
  const AngularGrid grid = make_angular_grid(32, 64);
  for (double kr : {0.8, 3.0, 9.0}) {
    for (double w : {0.0, 0.15}) {
      std::vector<double> terms(grid.dir.size());
      for (std::size_t i = 0; i < grid.dir.size(); ++i) {
        const SpectralSample s = sc.pulsed(kr * grid.dir[i], w);
        terms[i] = grid.w[i] *
                   (s.J.squaredNorm() - u.c * u.c * std::norm(s.rho));
      }
      const double direct = pairwise_sum(terms);
      const double fact =
          sc.separable.angular_eta(kr) * sc.separable.envelope_sq(w);
      CHECK(fact == doctest::Approx(direct).epsilon(1e-8));
    }
  }

  // A non-collinear arrangement cannot use the fast path.
  StaticGaussianCharge qc = qa;
  qc.center = Vector3d(0.5, 0, 0);
  const SpectralCurrent nc = make_windowed_static_spectrum(
      {StaticSource{qa}, StaticSource{qb}, StaticSource{qc}}, tau, u);
  CHECK_FALSE(nc.separable.valid);
}

TEST_CASE("wave trains reduce to scaled harmonics at the harmonic centers") {
  OrbitingGaussianCharge orb;
  orb.orbit_radius = 0.3;
  orb.period = 1.7;
  orb.width = 0.05;
  const double m = 16.0;
  const SpectralCurrent train = make_wave_train_spectrum(orb, m, u);
  REQUIRE(train.mode == SpectralMode::Pulsed);
  CHECK(train.hints.time_scale > 0.0);
  CHECK(train.hints.k_max > 0.0);
  CHECK(train.hints.k_panel > 0.0);
  CHECK(!train.hints.omega_windows.empty());

  // At w = n w0 every other harmonic's envelope is ~e^{-1000}, so
  // value = J_n(k) * Etilde(0) with Etilde(0) = m T sqrt(2).
  const double w0 = 2.0 * M_PI / orb.period;
  const double expect = m * orb.period * std::sqrt(2.0);
  for (int n : {1, 2}) {
    const Vector3d k =
        (n * w0 / u.c) * Vector3d(0.6, 0.0, 0.8).normalized();
    const SpectralSample tr = train.pulsed(k, n * w0);
    const SpectralSample hm = orbiting_harmonic_closed(orb, n, k, u);
    const Complex ratio = tr.rho / hm.rho;
    CHECK(ratio.real() == doctest::Approx(expect).epsilon(1e-10));
    CHECK(std::abs(ratio.imag()) <= 1e-10 * expect);
    CHECK((tr.J - Complex(expect, 0.0) * hm.J).norm() <=
          1e-10 * expect * hm.J.norm());
  }
}
