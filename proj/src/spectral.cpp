#include "rnr/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "rnr/errors.hpp"
#include "rnr/quadrature.hpp"

namespace rnr {

namespace {

Complex pairwise_sum_c(std::span<const Complex> v) {
  if (v.size() <= 16) {
    Complex s = 0.0;
    for (const Complex& x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum_c(v.first(h)) + pairwise_sum_c(v.subspan(h));
}

Complex pairwise_sum_c(const std::vector<Complex>& v) {
  return pairwise_sum_c(std::span<const Complex>(v.data(), v.size()));
}

constexpr Complex kI{0.0, 1.0};

// Spatial Fourier transform (measure d^3r, phase e^{-i k.r}) of a static or
// periodic built-in at time t.  Closed Gaussian radial forms; the loop
// collapses to a Bessel J_1 factor.
SpectralSample spatial_ft(const StaticGaussianCharge& s, const Vector3d& k,
                          double) {
  SpectralSample out;
  out.rho = s.charge * gaussian_form_factor(k.norm(), s.width) *
            std::exp(-kI * k.dot(s.center));
  return out;
}

SpectralSample spatial_ft(const StaticCurrentLoop& l, const Vector3d& k,
                          double) {
  // Closed form: the tangent line integral around the circle collapses to
  //   oint t_hat e^{-i k.p} dtheta = -2 pi i J_1(b k_perp) (n x k_perp_hat),
  // where k_perp is k's component in the loop plane.
  SpectralSample out;
  const Vector3d n = l.axis.normalized();
  const Vector3d k_perp = k - k.dot(n) * n;
  const double kp = k_perp.norm();
  if (kp < 1e-14 * (1.0 + k.norm())) return out;
  const double z = l.radius * kp;
  const Complex ph =
      std::exp(-kI * k.dot(l.center)) * (-2.0 * M_PI * kI) *
      std::cyl_bessel_j(1, z) * gaussian_form_factor(k.norm(), l.wire_width);
  out.J = (l.current * l.radius * ph) * n.cross(k_perp / kp).cast<Complex>();
  return out;
}

SpectralSample spatial_ft(const OrbitingGaussianCharge& s, const Vector3d& k,
                          double t) {
  const OrbitState o = orbit_state(s, t);
  SpectralSample out;
  out.rho = s.charge * gaussian_form_factor(k.norm(), s.width) *
            std::exp(-kI * k.dot(o.pos));
  out.J = out.rho * o.vel;
  return out;
}

SpectralSample spatial_ft(const OrbitingShell& s, const Vector3d& k,
                          double t) {
  const OrbitState o = orbit_state(s, t);
  const double kn = k.norm();
  SpectralSample out;
  out.rho = s.charge * shell_form_factor(kn * 0.5 * s.diameter) *
            gaussian_form_factor(kn, s.shell_width) *
            std::exp(-kI * k.dot(o.pos));
  out.J = out.rho * o.vel;
  return out;
}

SpectralSample spatial_ft_any(const Source& s, const Vector3d& k, double t) {
  if (const auto* v = std::get_if<StaticGaussianCharge>(&s))
    return spatial_ft(*v, k, t);
  if (const auto* v = std::get_if<StaticCurrentLoop>(&s))
    return spatial_ft(*v, k, t);
  if (const auto* v = std::get_if<OrbitingGaussianCharge>(&s))
    return spatial_ft(*v, k, t);
  if (const auto* v = std::get_if<OrbitingShell>(&s))
    return spatial_ft(*v, k, t);
  throw ConfigError("spatial transform: unsupported source variant");
}

// Gaussian envelope transform: int exp(-t^2/(2 tau^2)) e^{i w t} dt.
double envelope_ft(double omega, double tau) {
  return std::sqrt(2.0 * M_PI) * tau * std::exp(-0.5 * omega * omega * tau * tau);
}

SpectralSample dipole_transform(const GaussianDipolePulse& d, const Vector3d& k,
                                double omega) {
  const double tau = d.envelope_tau, wc = d.carrier_omega;
  const double ptilde =
      d.amplitude * 0.5 *
      (envelope_ft(omega - wc, tau) + envelope_ft(omega + wc, tau));
  const double gf = gaussian_form_factor(k.norm(), d.spatial_width);
  SpectralSample out;
  out.rho = -kI * k.dot(d.direction) * ptilde * gf;
  out.J = (-kI * omega * ptilde * gf) * d.direction.cast<Complex>();
  return out;
}

SpectralSample sampled_transform(const SampledCurrent& g, const Vector3d& k,
                                 double omega) {
  std::vector<Complex> px(g.nx), py(g.ny), pz(g.nz), pt(g.nt);
  for (int i = 0; i < g.nx; ++i)
    px[i] = std::exp(-kI * (k.x() * (g.x0() + i * g.dx)));
  for (int i = 0; i < g.ny; ++i)
    py[i] = std::exp(-kI * (k.y() * (g.y0() + i * g.dy)));
  for (int i = 0; i < g.nz; ++i)
    pz[i] = std::exp(-kI * (k.z() * (g.z0() + i * g.dz)));
  for (int i = 0; i < g.nt; ++i)
    pt[i] = tukey_window(i, g.nt) *
            std::exp(kI * (omega * (g.t0() + i * g.dt)));

  std::vector<Complex> tr, tx, ty, tz;
  tr.reserve(g.cells());
  tx.reserve(g.cells());
  ty.reserve(g.cells());
  tz.reserve(g.cells());
  for (int it = 0; it < g.nt; ++it)
    for (int ix = 0; ix < g.nx; ++ix)
      for (int iy = 0; iy < g.ny; ++iy) {
        const Complex w3 = pt[it] * px[ix] * py[iy];
        for (int iz = 0; iz < g.nz; ++iz) {
          const Complex w = w3 * pz[iz];
          const std::size_t idx = g.index(it, ix, iy, iz);
          tr.push_back(w * g.rho[idx]);
          tx.push_back(w * g.jx[idx]);
          ty.push_back(w * g.jy[idx]);
          tz.push_back(w * g.jz[idx]);
        }
      }
  const double meas = g.dx * g.dy * g.dz * g.dt;
  SpectralSample out;
  out.rho = meas * pairwise_sum_c(tr);
  out.J = meas * Vector3cd(pairwise_sum_c(tx), pairwise_sum_c(ty),
                           pairwise_sum_c(tz));
  return out;
}

double smearing_width(const Source& s) {
  if (const auto* v = std::get_if<StaticGaussianCharge>(&s)) return v->width;
  if (const auto* v = std::get_if<StaticCurrentLoop>(&s)) return v->wire_width;
  if (const auto* v = std::get_if<OrbitingGaussianCharge>(&s)) return v->width;
  if (const auto* v = std::get_if<OrbitingShell>(&s)) return v->shell_width;
  if (const auto* v = std::get_if<GaussianDipolePulse>(&s))
    return v->spatial_width;
  return 0.0;
}

double spatial_extent(const Source& s) {
  const SupportBox b = support_box(s);
  return 0.5 * (b.hi - b.lo).norm();
}

}  // namespace

double shell_form_factor(double kR) {
  if (kR < 0.0) throw ConfigError("shell_form_factor: kR must be >= 0");
  if (kR < 1e-4) {
    const double x2 = kR * kR;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(kR) / kR;
}

double gaussian_form_factor(double k, double sigma) {
  return std::exp(-0.5 * k * k * sigma * sigma);
}

SpectralSample transform_pulsed(const Source& s, const Vector3d& k,
                                double omega, const Units&) {
  if (const auto* d = std::get_if<GaussianDipolePulse>(&s))
    return dipole_transform(*d, k, omega);
  if (const auto* g = std::get_if<SampledCurrent>(&s))
    return sampled_transform(*g, k, omega);
  throw ConfigError(
      "transform_pulsed requires a pulsed source (use transform_periodic)");
}

SpectralSample transform_periodic(const Source& s, int n, const Vector3d& k,
                                  const Units&) {
  const Temporality tmp = temporality(s);
  if (tmp == Temporality::Pulsed)
    throw ConfigError(
        "transform_periodic requires a periodic or static source");
  if (tmp == Temporality::Static) {
    // Time-independent: (1/T) int e^{i n w0 t} dt = Kronecker delta_{n,0}.
    if (n == 0) return spatial_ft_any(s, k, 0.0);
    return SpectralSample{};
  }
  const double T = source_period(s);
  const double w0 = 2.0 * M_PI / T;
  // The spatial transform carries a phase swinging by |k| * orbit_radius over
  // the period; the trapezoid must resolve that on top of the n cycles of
  // e^{i n w0 t} or aliasing noise drowns the (possibly tiny) harmonic.
  double orbit_a = 0.0;
  if (const auto* o = std::get_if<OrbitingGaussianCharge>(&s))
    orbit_a = o->orbit_radius;
  if (const auto* o = std::get_if<OrbitingShell>(&s)) orbit_a = o->orbit_radius;
  const int samples = 64 * std::max(std::abs(n), 1) +
                      8 * int(std::ceil(k.norm() * orbit_a));
  std::vector<Complex> tr(samples), tx(samples), ty(samples), tz(samples);
  for (int j = 0; j < samples; ++j) {
    const double t = T * j / samples;
    const Complex ph = std::exp(kI * (n * w0 * t)) / double(samples);
    const SpectralSample f = spatial_ft_any(s, k, t);
    tr[j] = ph * f.rho;
    tx[j] = ph * f.J.x();
    ty[j] = ph * f.J.y();
    tz[j] = ph * f.J.z();
  }
  SpectralSample out;
  out.rho = pairwise_sum_c(tr);
  out.J = Vector3cd(pairwise_sum_c(tx), pairwise_sum_c(ty), pairwise_sum_c(tz));
  return out;
}

SpectralCurrent make_spectral(const Source& s, const Units& u) {
  validate(s);
  SpectralCurrent sc;
  sc.units = u;
  const Temporality tmp = temporality(s);
  const double sigma = smearing_width(s);

  if (tmp == Temporality::Pulsed) {
    sc.mode = SpectralMode::Pulsed;
    sc.pulsed = [s, u](const Vector3d& k, double omega) {
      return transform_pulsed(s, k, omega, u);
    };
    if (const auto* d = std::get_if<GaussianDipolePulse>(&s)) {
      const double wband = 12.0 / d->envelope_tau;
      sc.hints.time_scale = d->envelope_tau;
      sc.hints.omega_windows = {{d->carrier_omega, wband}};
      sc.hints.k_max = std::min((d->carrier_omega + wband) / u.c + 2.0 / (u.c * d->envelope_tau),
                                12.0 / d->spatial_width);
      sc.hints.k_panel = std::max(1.0 / (u.c * d->envelope_tau),
                                  sc.hints.k_max / 64.0);
    } else if (const auto* g = std::get_if<SampledCurrent>(&s)) {
      const double duration = (g->nt - 1) * g->dt;
      sc.hints.time_scale = duration / 4.0;
      sc.hints.omega_windows = {{0.0, M_PI / g->dt}};
      sc.hints.k_max = M_PI / std::max({g->dx, g->dy, g->dz});
      sc.hints.k_panel = sc.hints.k_max / 32.0;
    }
    return sc;
  }

  sc.mode = SpectralMode::Periodic;
  sc.period = tmp == Temporality::Periodic ? source_period(s) : 1.0;
  sc.n_max = tmp == Temporality::Periodic ? 512 : 0;
  if (tmp == Temporality::Periodic) {
    // Closed Bessel-series harmonics: exact at every k, where the trapezoid
    // transform needs O(|k| a) samples to keep aliasing out of the tails.
    sc.periodic = [s, u](int n, const Vector3d& k) {
      return orbiting_harmonic_closed(s, n, k, u);
    };
  } else {
    sc.periodic = [s, u](int n, const Vector3d& k) {
      return transform_periodic(s, n, k, u);
    };
  }
  sc.hints.k_max = sigma > 0.0 ? 12.0 / sigma : 0.0;
  const double extent = spatial_extent(s);
  if (extent > 0.0)
    sc.hints.k_max = std::min(sc.hints.k_max, 1e4 / extent);
  sc.hints.k_panel = extent > 0.0 ? M_PI / (2.0 * extent) : sc.hints.k_max / 64.0;
  return sc;
}

namespace {

double bessel_jn(int n, double x) {
  const double v = std::cyl_bessel_j(double(std::abs(n)), x);
  return (n < 0 && (n & 1)) ? -v : v;
}

Complex minus_i_pow(int n) {
  switch (((n % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, -1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, 1.0};
  }
}

}  // namespace

SpectralSample orbiting_harmonic_closed(const Source& periodic_source, int n,
                                        const Vector3d& k, const Units&) {
  double charge, orbit_radius, period, phase, form;
  Vector3d center, axis;
  const double kn = k.norm();
  if (const auto* s = std::get_if<OrbitingGaussianCharge>(&periodic_source)) {
    charge = s->charge;
    orbit_radius = s->orbit_radius;
    period = s->period;
    phase = s->phase;
    center = s->center;
    axis = s->axis;
    form = gaussian_form_factor(kn, s->width);
  } else if (const auto* s = std::get_if<OrbitingShell>(&periodic_source)) {
    charge = s->charge;
    orbit_radius = s->orbit_radius;
    period = s->period;
    phase = s->phase;
    center = s->center;
    axis = s->axis;
    form = shell_form_factor(kn * 0.5 * s->diameter) *
           gaussian_form_factor(kn, s->shell_width);
  } else {
    throw ConfigError("orbiting_harmonic_closed requires an orbiting source");
  }

  const OrbitFrame f = make_frame(axis);
  const double k1 = k.dot(f.e1), k2 = k.dot(f.e2);
  const double kperp = std::hypot(k1, k2);
  const double psi = kperp > 0.0 ? std::atan2(k2, k1) : 0.0;
  const double z = orbit_radius * kperp;
  const double w0 = 2.0 * M_PI / period;

  const double jm = bessel_jn(n - 1, z), jp = bessel_jn(n + 1, z);
  const double jn = bessel_jn(n, z);
  const double jn_deriv = 0.5 * (jm - jp);
  const double n_over_z_jn = 0.5 * (jm + jp);  // (n/z) J_n via recurrence

  const Complex common = charge * form * std::exp(-kI * k.dot(center)) *
                         std::exp(-kI * (double(n) * (phase - psi))) *
                         minus_i_pow(n);
  const Vector3d e_psi = std::cos(psi) * f.e1 + std::sin(psi) * f.e2;
  const Vector3d e_psi_perp = -std::sin(psi) * f.e1 + std::cos(psi) * f.e2;

  SpectralSample out;
  out.rho = common * jn;
  out.J = common * orbit_radius * w0 *
          (kI * jn_deriv * e_psi_perp.cast<Complex>() +
           n_over_z_jn * e_psi.cast<Complex>());
  return out;
}

double windowed_effective_duration(double window_tau) {
  return std::sqrt(M_PI) * window_tau;
}

SpectralCurrent make_windowed_static_spectrum(
    const std::vector<StaticSource>& sources, double window_tau,
    const Units& u) {
  if (sources.empty())
    throw ConfigError("windowed static spectrum needs at least one source");
  if (!(window_tau > 0.0)) throw ConfigError("window_tau must be positive");

  std::vector<Source> as_sources;
  double k_max = 0.0, extent_sep = 0.0;
  Vector3d first_center = Vector3d::Zero();
  for (std::size_t i = 0; i < sources.size(); ++i) {
    Source s = std::visit([](const auto& v) { return Source(v); }, sources[i]);
    validate(s);
    const SupportBox b = support_box(s);
    const Vector3d center = 0.5 * (b.lo + b.hi);
    if (i == 0) first_center = center;
    extent_sep = std::max(
        {extent_sep, (center - first_center).norm(), spatial_extent(s)});
    k_max = std::max(k_max, 12.0 / smearing_width(s));
    as_sources.push_back(std::move(s));
  }

  SpectralCurrent sc;
  sc.units = u;
  sc.mode = SpectralMode::Pulsed;
  sc.pulsed = [as_sources, window_tau](const Vector3d& k, double omega) {
    const double env = envelope_ft(omega, window_tau);
    SpectralSample out;
    for (const Source& s : as_sources) {
      const SpectralSample f = spatial_ft_any(s, k, 0.0);
      out.rho += env * f.rho;
      out.J += env * f.J;
    }
    return out;
  };
  sc.hints.time_scale = window_tau;
  sc.hints.omega_windows = {{0.0, 12.0 / window_tau}};
  sc.hints.k_max = std::min(k_max, 2e3 / std::max(extent_sep, 1e-12));
  sc.hints.k_panel = M_PI / (2.0 * std::max(extent_sep, 1e-3));

  // Factorized fast path: when every center sits on one line and every loop
  // axis is parallel to it, |spectrum|^2 is azimuthally symmetric about that
  // line, so the angular integral reduces to one Gauss-Legendre sweep in
  // cos(theta) and the frequency dependence is the shared window envelope.
  {
    std::vector<Vector3d> centers;
    std::vector<Vector3d> loop_axes;
    for (const Source& s : as_sources) {
      const SupportBox b = support_box(s);
      centers.push_back(0.5 * (b.lo + b.hi));
      if (const auto* loop = std::get_if<StaticCurrentLoop>(&s))
        loop_axes.push_back(loop->axis.normalized());
    }
    const double scale = std::max(extent_sep, 1e-12);
    Vector3d axis = Vector3d::Zero();
    for (const Vector3d& c : centers) {
      const Vector3d d = c - centers.front();
      if (d.norm() > 1e-12 * scale) {
        axis = d.normalized();
        break;
      }
    }
    if (axis.isZero() && !loop_axes.empty()) axis = loop_axes.front();
    if (axis.isZero()) axis = Vector3d::UnitZ();
    bool symmetric = true;
    double d_max = 0.0;  // fastest angular phase scale k * d_max
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const Vector3d d = centers[i] - centers.front();
      if ((d - d.dot(axis) * axis).norm() > 1e-9 * scale) symmetric = false;
      d_max = std::max(d_max, d.norm() + spatial_extent(as_sources[i]));
    }
    for (const Vector3d& la : loop_axes)
      if (la.cross(axis).norm() > 1e-9) symmetric = false;

    if (symmetric) {
      const Vector3d perp = make_frame(axis).e1;
      const double c_light = u.c;
      sc.separable.valid = true;
      sc.separable.envelope_sq = [window_tau](double omega) {
        const double env = envelope_ft(omega, window_tau);
        return env * env;
      };
      sc.separable.angular_eta = [as_sources, axis, perp, d_max,
                                  c_light](double k) {
        // Order grows with the fastest angular phase k*d_max*mu.
        const int n_mu =
            std::max(48, std::min(4000, int(0.75 * k * d_max) + 16));
        const GaussRule& rule = gauss_legendre(n_mu);
        std::vector<double> terms(rule.x.size());
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
          const double mu = rule.x[i];
          const Vector3d kv =
              k * (mu * axis + std::sqrt(std::max(0.0, 1.0 - mu * mu)) * perp);
          SpectralSample sum;
          for (const Source& s : as_sources) {
            const SpectralSample f = spatial_ft_any(s, kv, 0.0);
            sum.rho += f.rho;
            sum.J += f.J;
          }
          const double eta =
              sum.J.squaredNorm() - c_light * c_light * std::norm(sum.rho);
          terms[i] = rule.w[i] * eta;
        }
        return 2.0 * M_PI * pairwise_sum(terms);
      };
    }
  }
  return sc;
}

SpectralCurrent make_wave_train_spectrum(const Source& periodic_source,
                                         double m_periods, const Units& u) {
  if (temporality(periodic_source) != Temporality::Periodic)
    throw ConfigError("wave train requires a periodic source");
  if (!(m_periods >= 2.0))
    throw ConfigError("wave train needs m_periods >= 2");
  const double T = source_period(periodic_source);
  const double w0 = 2.0 * M_PI / T;
  // Envelope sized so the effective exposure int E^2 dt equals m_periods * T.
  const double tau_e = m_periods * T / std::sqrt(M_PI);

  SpectralCurrent sc;
  sc.units = u;
  sc.mode = SpectralMode::Pulsed;
  Source src = periodic_source;
  sc.pulsed = [src, u, w0, tau_e](const Vector3d& k, double omega) {
    // Harmonic lines nearer than 14 envelope widths contribute.
    const double band = 14.0 / tau_e;
    const int n_lo = int(std::ceil((omega - band) / w0));
    const int n_hi = int(std::floor((omega + band) / w0));
    SpectralSample out;
    for (int n = n_lo; n <= n_hi; ++n) {
      const SpectralSample f = orbiting_harmonic_closed(src, n, k, u);
      const double env = envelope_ft(omega - n * w0, tau_e);
      out.rho += env * f.rho;
      out.J += env * f.J;
    }
    return out;
  };

  const double sigma = smearing_width(periodic_source);
  sc.hints.time_scale = tau_e;
  const int n_band = 16;
  for (int n = 1; n <= n_band; ++n)
    sc.hints.omega_windows.push_back({n * w0, 14.0 / tau_e});
  sc.hints.k_max = std::min(sigma > 0.0 ? 12.0 / sigma : 1e6,
                            (n_band + 1) * w0 / u.c);
  sc.hints.k_panel = 1.0 / (u.c * tau_e);
  return sc;
}

SpectralContinuity check_spectral_continuity(const SpectralCurrent& sc,
                                             int n_samples, std::uint64_t seed,
                                             double tol) {
  SpectralContinuity rep;
  rep.n_samples = n_samples;
  const double c = sc.units.c;
  const double k_max = sc.hints.k_max > 0.0 ? sc.hints.k_max : 10.0;
  double worst = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const Eigen::Vector4d h = halton4(i, seed);
    const Vector3d k((2.0 * h[0] - 1.0) * k_max, (2.0 * h[1] - 1.0) * k_max,
                     (2.0 * h[2] - 1.0) * k_max);
    double lhs_res, scale;
    if (sc.mode == SpectralMode::Pulsed) {
      double omega;
      if (!sc.hints.omega_windows.empty()) {
        const auto& wdw =
            sc.hints.omega_windows[i % sc.hints.omega_windows.size()];
        omega = wdw.center + (2.0 * h[3] - 1.0) * wdw.halfwidth;
        if (i % 2 == 1) omega = -omega;  // exercise both frequency signs
      } else {
        omega = (2.0 * h[3] - 1.0) * c * k_max;
      }
      const SpectralSample f = sc.pulsed(k, omega);
      lhs_res = std::abs(k.dot(f.J).real() - omega * f.rho.real()) +
                std::abs(k.dot(f.J).imag() - omega * f.rho.imag());
      scale = k.norm() * f.J.norm() + std::abs(omega) * std::abs(f.rho);
    } else {
      const int n = int(h[3] * (sc.n_max > 0 ? std::min(sc.n_max, 8) + 1 : 1));
      const double w0 = 2.0 * M_PI / sc.period;
      const SpectralSample f = sc.periodic(n, k);
      const Complex res = k.dot(f.J) - n * w0 * f.rho;
      lhs_res = std::abs(res.real()) + std::abs(res.imag());
      scale = k.norm() * f.J.norm() + n * w0 * std::abs(f.rho);
    }
    if (scale > 1e-280) worst = std::max(worst, lhs_res / scale);
  }
  rep.max_rel_residual = worst;
  rep.pass = worst <= tol;
  return rep;
}

}  // namespace rnr
