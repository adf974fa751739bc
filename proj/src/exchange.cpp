#include "rnr/exchange.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <variant>
#include <vector>

#include "rnr/errors.hpp"
#include "rnr/json_io.hpp"
#include "rnr/parallel.hpp"

namespace rnr {

namespace {

// Gaussian-smeared Coulomb kernel: E[ 1/|d + u| ] for u ~ N(0, s2 * I3),
// which is erf(|d| / sqrt(2 s2)) / |d|, finite at d = 0.  Every pair energy
// between the built-in smeared sources reduces exactly to this kernel applied
// at the generator level (centers for charges, wire paths for loops), because
// the smearing enters only through the relative displacement.
double smeared_inverse_distance(double d, double s2) {
  const double s = std::sqrt(2.0 * s2);
  if (d < 1e-12 * s) return M_2_SQRTPI / s;
  return std::erf(d / s) / d;
}

struct RingGeometry {
  std::vector<Vector3d> pos;
  std::vector<Vector3d> tan;  // unit tangents; arc weight b * dtheta folded in
  double dtheta = 0.0;
};

RingGeometry sample_ring(const StaticCurrentLoop& l, int n) {
  RingGeometry g;
  const OrbitFrame f = make_frame(l.axis);
  g.pos.resize(n);
  g.tan.resize(n);
  g.dtheta = 2.0 * M_PI / n;
  for (int i = 0; i < n; ++i) {
    const double th = (i + 0.5) * g.dtheta;
    g.pos[i] = l.center + l.radius * (std::cos(th) * f.e1 + std::sin(th) * f.e2);
    g.tan[i] = -std::sin(th) * f.e1 + std::cos(th) * f.e2;
  }
  return g;
}

// int int t1.t2 K(|p1 - p2|) b1 b2 dth1 dth2 by periodic trapezoid, node
// spacing adapted to the closest approach of the two wire paths (or to the
// smearing width for a loop against itself).
double ring_ring_tangent_integral(const StaticCurrentLoop& la,
                                  const StaticCurrentLoop& lb, double s2,
                                  bool same_loop, const QuadratureSpec& quad) {
  double d_min = same_loop ? 0.0 : std::numeric_limits<double>::infinity();
  if (!same_loop) {
    const RingGeometry ca = sample_ring(la, 128), cb = sample_ring(lb, 128);
    for (const Vector3d& pa : ca.pos)
      for (const Vector3d& pb : cb.pos)
        d_min = std::min(d_min, (pa - pb).norm());
  }
  const double feature = std::max(d_min, std::sqrt(s2));
  auto node_count = [&](double radius) {
    const double want = 3.0 * 2.0 * M_PI * radius / feature;
    const int floor_n = std::max(64, 4 * quad.n_phi);
    return std::clamp(int(std::ceil(want)), floor_n, 4096);
  };
  const RingGeometry ga = sample_ring(la, node_count(la.radius));
  const RingGeometry gb = sample_ring(lb, node_count(lb.radius));

  std::vector<double> rows(ga.pos.size(), 0.0);
  parallel_for(ga.pos.size(), quad.threads, [&](std::size_t i) {
    std::vector<double> terms(gb.pos.size());
    for (std::size_t j = 0; j < gb.pos.size(); ++j) {
      const double d = (ga.pos[i] - gb.pos[j]).norm();
      terms[j] = ga.tan[i].dot(gb.tan[j]) * smeared_inverse_distance(d, s2);
    }
    rows[i] = pairwise_sum(terms);
  });
  return pairwise_sum(rows) * la.radius * lb.radius * ga.dtheta * gb.dtheta;
}

double min_ring_distance(const StaticCurrentLoop& la,
                         const StaticCurrentLoop& lb) {
  const RingGeometry ca = sample_ring(la, 256), cb = sample_ring(lb, 256);
  double d = std::numeric_limits<double>::infinity();
  for (const Vector3d& pa : ca.pos)
    for (const Vector3d& pb : cb.pos) d = std::min(d, (pa - pb).norm());
  return d;
}

double source_extent(const StaticSource& s) {
  const Source src = std::visit([](const auto& v) { return Source(v); }, s);
  const SupportBox b = support_box(src);
  return 0.5 * (b.hi - b.lo).norm();
}

Vector3d source_center(const StaticSource& s) {
  const Source src = std::visit([](const auto& v) { return Source(v); }, s);
  const SupportBox b = support_box(src);
  return 0.5 * (b.lo + b.hi);
}

double smear_width(const StaticSource& s) {
  if (const auto* c = std::get_if<StaticGaussianCharge>(&s)) return c->width;
  return std::get<StaticCurrentLoop>(s).wire_width;
}

}  // namespace

ExchangeResult static_energy(const StaticSource& a, const StaticSource& b,
                             const QuadratureSpec& quad, bool include_self,
                             const Units& u) {
  const Source sa = std::visit([](const auto& v) { return Source(v); }, a);
  const Source sb = std::visit([](const auto& v) { return Source(v); }, b);
  validate(sa);
  validate(sb);

  const double extent =
      std::max({source_extent(a), source_extent(b),
                (source_center(a) - source_center(b)).norm()});
  const double floor_dist = 1e-6 * extent;
  const double inv_c2 = 1.0 / (u.c * u.c);

  ExchangeResult out;

  // Cross term: full a x b double integral (both orderings, no 1/2).
  if (const auto* ca = std::get_if<StaticGaussianCharge>(&a)) {
    if (const auto* cb = std::get_if<StaticGaussianCharge>(&b)) {
      const double d = (ca->center - cb->center).norm();
      const double s2 = ca->width * ca->width + cb->width * cb->width;
      if (ca->charge * cb->charge != 0.0 && d < floor_dist &&
          std::sqrt(s2) < floor_dist)
        throw SingularOverlap(
            "charge centers coincide with smearing below the floor " +
            fmt17(floor_dist) + "; demands finer smearing");
      out.coulomb_part = ca->charge * cb->charge * smeared_inverse_distance(d, s2);
    }
  }
  if (const auto* la = std::get_if<StaticCurrentLoop>(&a)) {
    if (const auto* lb = std::get_if<StaticCurrentLoop>(&b)) {
      const double s2 =
          la->wire_width * la->wire_width + lb->wire_width * lb->wire_width;
      if (la->current * lb->current != 0.0 &&
          min_ring_distance(*la, *lb) < floor_dist &&
          std::sqrt(s2) < floor_dist)
        throw SingularOverlap(
            "wire paths touch with smearing below the floor " +
            fmt17(floor_dist) + "; demands finer smearing");
      out.ampere_part = -inv_c2 * la->current * lb->current *
                        ring_ring_tangent_integral(*la, *lb, s2, false, quad);
    }
  }
  // Mixed charge/loop pairs carry no rho.rho or J.J product and contribute 0.

  if (include_self) {
    for (const StaticSource* s : {&a, &b}) {
      if (smear_width(*s) < floor_dist)
        throw SingularOverlap(
            "self-energy with smearing below the floor " +
            fmt17(floor_dist) + "; demands finer smearing");
      if (const auto* c = std::get_if<StaticGaussianCharge>(s)) {
        out.coulomb_part += 0.5 * c->charge * c->charge *
                            smeared_inverse_distance(0.0, 2.0 * c->width * c->width);
      } else {
        const auto& l = std::get<StaticCurrentLoop>(*s);
        out.ampere_part += -0.5 * inv_c2 * l.current * l.current *
                           ring_ring_tangent_integral(
                               l, l, 2.0 * l.wire_width * l.wire_width, true, quad);
      }
    }
  }

  out.static_energy_total = out.coulomb_part + out.ampere_part;
  return out;
}

// ---------------------------------------------------------------------------
// Principal-value spectral action.
// ---------------------------------------------------------------------------

namespace {

struct Panel {
  double lo = 0.0, hi = 0.0;
};

// Panels on the w >= 0 half line (the integrand after the angular sum is
// even in w, so the full line is 2x the half line).  Breakpoints combine the
// spectral-window subdivisions with a graded ladder around the pole, so the
// envelope structure stays resolved even where the pole zone overlaps it.
// Panels inside the symmetric exclusion |w - pole| < delta (and its w < 0
// mirror) are dropped; panels outside every window are kept only within the
// pole zone |w - pole| <= G, and the zone itself is dropped when the pole
// sits beyond all windows by more than G (the spectrum is dead there).
std::vector<Panel> omega_panels(const std::vector<OmegaWindow>& windows,
                                double pole, double delta, double G) {
  std::vector<double> pts{0.0};
  double cap = 0.0;
  for (const OmegaWindow& w : windows) {
    const double lo = std::max(0.0, w.center - w.halfwidth);
    const double hi = w.center + w.halfwidth;
    cap = std::max(cap, hi);
    for (int j = 0; j <= 12; ++j) pts.push_back(lo + j * (hi - lo) / 12.0);
  }
  const bool cover_pole = pole - G <= cap;
  double top = cap;
  if (cover_pole) {
    top = std::max(cap, pole + G);
    if (pole - G > 0.0) pts.push_back(pole - G);
    pts.push_back(pole + G);
    for (double m = 1.0; m * delta < G; m *= 2.0) {
      if (pole - m * delta > 0.0) pts.push_back(pole - m * delta);
      pts.push_back(pole + m * delta);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::remove_if(pts.begin(), pts.end(),
                           [top](double x) { return x < 0.0 || x > top; }),
            pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [top](double x, double y) {
                          return std::abs(x - y) < 1e-13 * (top + 1.0);
                        }),
            pts.end());
  std::vector<Panel> panels;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double mid = 0.5 * (pts[i] + pts[i + 1]);
    if (cover_pole &&
        (std::abs(mid - pole) < delta || std::abs(mid + pole) < delta))
      continue;
    bool keep = cover_pole && std::abs(mid - pole) <= G;
    for (const OmegaWindow& w : windows)
      if (!keep && mid >= std::max(0.0, w.center - w.halfwidth) &&
          mid <= w.center + w.halfwidth)
        keep = true;
    if (keep) panels.push_back({pts[i], pts[i + 1]});
  }
  return panels;
}

double panel_sum(const std::vector<Panel>& panels,
                 const std::function<double(double)>& f) {
  std::vector<double> terms;
  terms.reserve(panels.size() * 8);
  for (const Panel& p : panels) {
    const GaussRule r = gauss_legendre_on(8, p.lo, p.hi);
    for (int i = 0; i < 8; ++i) terms.push_back(r.w[i] * f(r.x[i]));
  }
  return pairwise_sum(terms);
}

std::vector<double> radial_breakpoints(const SpectralHints& h, int refine) {
  const double panel =
      h.k_panel > 0.0 ? std::min(h.k_panel, h.k_max / 8.0) : h.k_max / 64.0;
  int n = std::clamp(int(std::ceil(h.k_max / panel)), 8, 8192);
  n = std::max(8, n >> refine);
  std::vector<double> pts(n + 1);
  for (int i = 0; i <= n; ++i) pts[i] = h.k_max * i / n;
  return pts;
}

}  // namespace

ActionResult action_spectral(const SpectralCurrent& sc,
                             const QuadratureSpec& quad) {
  if (sc.mode != SpectralMode::Pulsed)
    throw ConfigError("action_spectral requires a pulsed spectrum");
  if (!(sc.hints.k_max > 0.0))
    throw ConfigError("action_spectral needs hints.k_max > 0");
  if (sc.hints.omega_windows.empty())
    throw ConfigError("action_spectral needs frequency windows");
  double max_hi = 0.0;
  for (const OmegaWindow& w : sc.hints.omega_windows)
    max_hi = std::max(max_hi, w.center + w.halfwidth);
  const double tscale =
      sc.hints.time_scale > 0.0 ? sc.hints.time_scale : 12.0 / max_hi;
  const double c = sc.units.c;
  const double pref = 1.0 / (8.0 * M_PI * M_PI * M_PI * c * c);
  // Window-exclusion sizes delta = frac * max(c k, 0.2/tau); Richardson-
  // extrapolated to zero below.
  const double fracs[3] = {0.3, 0.15, 0.075};

  const bool separable = sc.separable.valid;
  if (!separable && !sc.pulsed)
    throw ConfigError("action_spectral: spectrum has no evaluator");
  AngularGrid ang;
  if (!separable) ang = make_angular_grid(quad.n_theta, quad.n_phi);

  // One radial pass: returns the three window-size variants of W.
  auto run_radial = [&](int refine, std::array<double, 3>& w_out,
                        double* magnitude) {
    const std::vector<double> breaks = radial_breakpoints(sc.hints, refine);
    const int order = quad.radial_order;
    std::vector<double> nodes, wts;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      const GaussRule r = gauss_legendre_on(order, breaks[i], breaks[i + 1]);
      nodes.insert(nodes.end(), r.x.begin(), r.x.end());
      wts.insert(wts.end(), r.w.begin(), r.w.end());
    }
    std::vector<std::array<double, 3>> terms(nodes.size(), {0.0, 0.0, 0.0});
    parallel_for(nodes.size(), quad.threads, [&](std::size_t i) {
      const double k = nodes[i];
      const double pole = c * k;
      const double scale = std::max(pole, 0.2 / tscale);
      const double G = 64.0 * fracs[0] * scale;
      const double k2 = k * k;
      if (separable) {
        const double A = sc.separable.angular_eta(k);
        auto f = [&](double w) {
          return sc.separable.envelope_sq(w) / (k2 - w * w / (c * c));
        };
        for (int j = 0; j < 3; ++j) {
          const std::vector<Panel> panels =
              omega_panels(sc.hints.omega_windows, pole, fracs[j] * scale, G);
          terms[i][j] = wts[i] * k2 * 2.0 * A * panel_sum(panels, f);
        }
      } else {
        auto f = [&](double w) {
          std::vector<double> ang_terms(ang.dir.size());
          for (std::size_t d = 0; d < ang.dir.size(); ++d) {
            const SpectralSample s = sc.pulsed(k * ang.dir[d], w);
            ang_terms[d] = ang.w[d] *
                           (s.J.squaredNorm() - c * c * std::norm(s.rho));
          }
          return pairwise_sum(ang_terms) / (k2 - w * w / (c * c));
        };
        for (int j = 0; j < 3; ++j) {
          const std::vector<Panel> panels =
              omega_panels(sc.hints.omega_windows, pole, fracs[j] * scale, G);
          terms[i][j] = wts[i] * k2 * 2.0 * panel_sum(panels, f);
        }
      }
    });
    std::vector<double> col(nodes.size());
    for (int j = 0; j < 3; ++j) {
      for (std::size_t i = 0; i < nodes.size(); ++i) col[i] = terms[i][j];
      w_out[j] = pref * pairwise_sum(col);
    }
    if (magnitude) {
      for (std::size_t i = 0; i < nodes.size(); ++i)
        col[i] = std::abs(terms[i][2]);
      *magnitude = pref * pairwise_sum(col);
    }
  };

  std::array<double, 3> w_fine{};
  double magnitude = 0.0;
  run_radial(0, w_fine, &magnitude);
  // Quadratic Richardson through window sizes delta, delta/2, delta/4.
  const double w_extrap =
      w_fine[0] / 3.0 - 2.0 * w_fine[1] + (8.0 / 3.0) * w_fine[2];
  const double w_linear = 2.0 * w_fine[2] - w_fine[1];
  const double spread = std::abs(w_extrap - w_linear);

  std::array<double, 3> w_coarse{};
  run_radial(1, w_coarse, nullptr);
  const double radial_diff = std::abs(w_coarse[2] - w_fine[2]);
  if (radial_diff > 0.1 * std::max(std::abs(w_extrap), 1e-12 * magnitude) &&
      radial_diff > 0.0)
    throw ConvergenceError(
        "NON_CONVERGED",
        "action radial quadrature unsettled: refinement changed W by " +
            fmt17(radial_diff));

  if (spread > std::max(0.05 * std::abs(w_extrap), 1e-12 * magnitude))
    throw ConvergenceError(
        "PV_UNSTABLE", "principal-value window extrapolation spread " +
                           fmt17(spread) + " exceeds 5% of |W| = " +
                           fmt17(std::abs(w_extrap)));
  return {w_extrap, spread};
}

std::vector<LightConeSample> lightcone_potential(double q1, double q2,
                                                 const Vector3d& j1,
                                                 const Vector3d& j2,
                                                 const std::vector<double>& R,
                                                 const Units& u) {
  std::vector<LightConeSample> out;
  out.reserve(R.size());
  for (double r : R) {
    if (!(r > 0.0)) throw ConfigError("lightcone_potential needs R > 0");
    out.push_back({r, q1 * q2 / r, -j1.dot(j2) / (u.c * u.c * r)});
  }
  return out;
}

double neumann_mutual_inductance(double radius_a, double radius_b,
                                 double axial_separation, int n_nodes) {
  if (!(radius_a > 0.0) || !(radius_b > 0.0))
    throw ConfigError("neumann_mutual_inductance needs positive radii");
  const double s2 = axial_separation * axial_separation;
  if (s2 == 0.0 && radius_a == radius_b)
    throw ConfigError("neumann_mutual_inductance: coincident thin loops");
  std::vector<double> terms(n_nodes);
  const double h = 2.0 * M_PI / n_nodes;
  for (int i = 0; i < n_nodes; ++i) {
    const double phi = (i + 0.5) * h;
    const double d2 = radius_a * radius_a + radius_b * radius_b -
                      2.0 * radius_a * radius_b * std::cos(phi) + s2;
    terms[i] = std::cos(phi) / std::sqrt(d2);
  }
  return 2.0 * M_PI * radius_a * radius_b * pairwise_sum(terms) * h;
}

}  // namespace rnr
