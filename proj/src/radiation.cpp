#include "rnr/radiation.hpp"

#include <algorithm>
#include <cmath>

#include "rnr/errors.hpp"
#include "rnr/parallel.hpp"

namespace rnr {

namespace {

struct Interval {
  double lo = 0.0, hi = 0.0;
};

// Sorted union of closed intervals clipped to [floor, inf).
std::vector<Interval> merge_intervals(std::vector<Interval> v, double floor_) {
  std::vector<Interval> out;
  for (auto& iv : v) {
    iv.lo = std::max(iv.lo, floor_);
    if (iv.hi > iv.lo) out.push_back(iv);
  }
  std::sort(out.begin(), out.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> merged;
  for (const auto& iv : out) {
    if (!merged.empty() && iv.lo <= merged.back().hi)
      merged.back().hi = std::max(merged.back().hi, iv.hi);
    else
      merged.push_back(iv);
  }
  return merged;
}

// Radial |k| segments where the on-shell spectrum can live, from the hints.
std::vector<Interval> radial_segments(const SpectralCurrent& sc) {
  const double c = sc.units.c;
  if (!(sc.hints.k_max > 0.0))
    throw ConfigError("spectrum hints must provide k_max > 0");
  std::vector<Interval> segs;
  if (sc.hints.omega_windows.empty()) {
    segs.push_back({0.0, sc.hints.k_max});
  } else {
    for (const auto& w : sc.hints.omega_windows)
      segs.push_back({(w.center - w.halfwidth) / c,
                      std::min((w.center + w.halfwidth) / c,
                               sc.hints.k_max)});
  }
  return merge_intervals(std::move(segs), 0.0);
}

struct RadialNode {
  double k = 0.0;
  double w = 0.0;
};

std::vector<RadialNode> build_radial_nodes(const std::vector<Interval>& segs,
                                           double panel_len, int order,
                                           int refine) {
  std::vector<RadialNode> nodes;
  for (const auto& seg : segs) {
    const double len = seg.hi - seg.lo;
    if (len <= 0.0) continue;
    int panels = std::max(2, int(std::ceil(len / panel_len)));
    panels <<= refine;
    for (int p = 0; p < panels; ++p) {
      const GaussRule r = gauss_legendre_on(order, seg.lo + len * p / panels,
                                            seg.lo + len * (p + 1) / panels);
      for (int i = 0; i < order; ++i) nodes.push_back({r.x[i], r.w[i]});
    }
  }
  return nodes;
}

// Per-radial-node angular sum of |J_T|^2: A(k) = sum_j w_j |J_T(k d_j)|^2.
// Also accumulates the per-direction radial integrals when `angular_out` is
// non-null (entries += w_rad * k * |J_T|^2).
double angular_sum_pulsed(const SpectralCurrent& sc, const AngularGrid& grid,
                          double k, std::vector<double>* per_direction) {
  const double c = sc.units.c;
  std::vector<double> terms(grid.dir.size());
  for (std::size_t j = 0; j < grid.dir.size(); ++j) {
    const Vector3d kv = k * grid.dir[j];
    const SpectralSample s = sc.pulsed(kv, c * k);
    const double jt2 = transverse_project(kv, s.J).squaredNorm();
    terms[j] = grid.w[j] * jt2;
    if (per_direction) (*per_direction)[j] = jt2;
  }
  return pairwise_sum(terms);
}

}  // namespace

Vector3cd transverse_project(const Vector3d& k, const Vector3cd& J) {
  const double kn2 = k.squaredNorm();
  if (!(kn2 > 0.0))
    throw ConfigError("transverse_project: undefined at k = 0");
  const Vector3d khat = k / std::sqrt(kn2);
  Vector3cd jt = J - khat.cast<Complex>() * khat.cast<Complex>().dot(J);
  // Re-orthogonalize so k.jt vanishes to machine precision.
  jt -= khat.cast<Complex>() * khat.cast<Complex>().dot(jt);
  return jt;
}

double onshell_eta_contraction(const SpectralSample& s, const Vector3d&,
                               double c) {
  return eta_contraction(s.J, s.rho, c);
}

EmissionResult mean_photon_number_pulsed(const SpectralCurrent& sc,
                                         const QuadratureSpec& quad) {
  if (sc.mode != SpectralMode::Pulsed)
    throw ConfigError("mean_photon_number_pulsed requires a pulsed spectrum");
  const double c = sc.units.c, hbar = sc.units.hbar;
  const double norm = 1.0 / (4.0 * M_PI * M_PI * hbar * c);
  const AngularGrid grid = make_angular_grid(quad.n_theta, quad.n_phi);

  const std::vector<Interval> segs = radial_segments(sc);
  const double panel0 =
      sc.hints.k_panel > 0.0 ? sc.hints.k_panel : sc.hints.k_max / 32.0;

  // Adaptive panel doubling until the total stabilizes.
  double prev = 0.0, total = 0.0, radial_err = 0.0;
  std::vector<RadialNode> nodes;
  std::vector<double> a_of_k;
  for (int refine = 0;; ++refine) {
    nodes = build_radial_nodes(segs, panel0, quad.radial_order, refine);
    if (std::int64_t(nodes.size()) * std::int64_t(grid.dir.size()) >
        quad.max_evals)
      throw ConvergenceError("NON_CONVERGED",
                             "radial refinement exceeded max_evals");
    a_of_k.assign(nodes.size(), 0.0);
    parallel_for(nodes.size(), quad.threads, [&](std::size_t i) {
      a_of_k[i] = angular_sum_pulsed(sc, grid, nodes[i].k, nullptr);
    });
    std::vector<double> terms(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
      terms[i] = nodes[i].w * nodes[i].k * a_of_k[i];
    total = norm * pairwise_sum(terms);
    radial_err = std::abs(total - prev);
    if (refine > 0 && radial_err <= quad.radial_rel_tol *
                                        std::max(std::abs(total), 1e-300))
      break;
    if (refine > 0 && total == 0.0 && prev == 0.0) break;
    prev = total;
  }

  // Tail check at the far end of the outermost segment.
  const double k_end = segs.back().hi;
  const double tail_density =
      norm * k_end * angular_sum_pulsed(sc, grid, k_end, nullptr);
  const double tail_est = tail_density * std::max(8.0 * panel0, 0.05 * k_end);
  if (tail_est > quad.radial_rel_tol * std::max(std::abs(total), 1e-300) &&
      tail_est > 1e-300)
    throw ConvergenceError("NON_CONVERGED",
                           "spectral tail beyond k_max is not negligible");

  EmissionResult res;
  res.n_bar = total;

  // Final pass artifacts: spectrum, angular density, energy.  Per-node and
  // per-(node,direction) slots keep the reduction order fixed regardless of
  // thread count.
  std::vector<std::vector<double>> dir_terms(
      grid.dir.size(), std::vector<double>(nodes.size()));
  std::vector<double> energy_terms(nodes.size());
  res.spectrum.resize(nodes.size());
  parallel_for(nodes.size(), quad.threads, [&](std::size_t i) {
    std::vector<double> per_dir(grid.dir.size());
    const double a = angular_sum_pulsed(sc, grid, nodes[i].k, &per_dir);
    res.spectrum[i] = {c * nodes[i].k,
                       norm * nodes[i].k * a / c};  // (omega, dN/domega)
    energy_terms[i] = nodes[i].w * nodes[i].k * a * (c * nodes[i].k);
    for (std::size_t j = 0; j < grid.dir.size(); ++j)
      dir_terms[j][i] = nodes[i].w * nodes[i].k * per_dir[j];
  });
  res.radiated_energy = hbar * norm * pairwise_sum(energy_terms);
  res.angular.reserve(grid.dir.size());
  for (std::size_t j = 0; j < grid.dir.size(); ++j)
    res.angular.emplace_back(grid.dir[j], norm * pairwise_sum(dir_terms[j]));

  double angular_err = 0.0;
  if (quad.refine_angular) {
    const AngularGrid fine = make_angular_grid(2 * quad.n_theta, 2 * quad.n_phi);
    std::vector<double> terms(nodes.size());
    parallel_for(nodes.size(), quad.threads, [&](std::size_t i) {
      terms[i] = nodes[i].w * nodes[i].k *
                 angular_sum_pulsed(sc, fine, nodes[i].k, nullptr);
    });
    angular_err = std::abs(norm * pairwise_sum(terms) - total);
  }
  res.quadrature_error_estimate = radial_err + angular_err;
  return res;
}

EmissionResult photon_rate_periodic(const SpectralCurrent& sc, int n_max,
                                    const QuadratureSpec& quad) {
  if (sc.mode != SpectralMode::Periodic)
    throw ConfigError("photon_rate_periodic requires a periodic spectrum");
  if (n_max < 1) throw ConfigError("photon_rate_periodic: n_max must be >= 1");
  const double c = sc.units.c, hbar = sc.units.hbar;
  const double T = sc.period;
  const double w0 = 2.0 * M_PI / T;
  const AngularGrid grid = make_angular_grid(quad.n_theta, quad.n_phi);
  const AngularGrid fine =
      quad.refine_angular
          ? make_angular_grid(2 * quad.n_theta, 2 * quad.n_phi)
          : AngularGrid{};

  if (sc.n_max > 0) n_max = std::min(n_max, sc.n_max);

  EmissionResult res;
  std::vector<double> harmonic(n_max + 1, 0.0), harmonic_fine(n_max + 1, 0.0);
  std::vector<double> dir_acc(grid.dir.size(), 0.0);
  // The series terminates once harmonics have decayed relative to the
  // strongest one seen; comparing against the peak (not the sum) also stops
  // uniformly suppressed spectra such as the d = ncT shell.
  double peak = 0.0;
  int decayed_streak = 0;
  int n_stop = n_max;
  bool decayed = false;
  for (int n = 1; n <= n_max; ++n) {
    const double kn = n * w0 / c;
    std::vector<double> terms(grid.dir.size());
    std::vector<double> per_dir(grid.dir.size());
    parallel_for(grid.dir.size(), quad.threads, [&](std::size_t j) {
      const Vector3d kv = kn * grid.dir[j];
      const SpectralSample s = sc.periodic(n, kv);
      per_dir[j] = transverse_project(kv, s.J).squaredNorm();
      terms[j] = grid.w[j] * per_dir[j];
    });
    const double factor = T * kn / (2.0 * M_PI * hbar * c * c);
    harmonic[n] = factor * pairwise_sum(terms);
    for (std::size_t j = 0; j < grid.dir.size(); ++j)
      dir_acc[j] += factor * per_dir[j];
    if (quad.refine_angular) {
      std::vector<double> ft(fine.dir.size());
      parallel_for(fine.dir.size(), quad.threads, [&](std::size_t j) {
        const Vector3d kv = kn * fine.dir[j];
        const SpectralSample s = sc.periodic(n, kv);
        ft[j] = fine.w[j] * transverse_project(kv, s.J).squaredNorm();
      });
      harmonic_fine[n] = factor * pairwise_sum(ft);
    }

    peak = std::max(peak, harmonic[n]);
    n_stop = n;
    if (harmonic[n] <= quad.radial_rel_tol * std::max(peak, 1e-300))
      ++decayed_streak;
    else
      decayed_streak = 0;
    if (decayed_streak >= 3 && n >= 4) {
      decayed = true;
      break;
    }
  }

  std::vector<double> kept(harmonic.begin() + 1, harmonic.begin() + n_stop + 1);
  res.n_bar = pairwise_sum(kept);
  if (!decayed)
    throw ConvergenceError("NON_CONVERGED",
                           "harmonic series not decayed by n_max");

  std::vector<double> energy_terms(n_stop);
  for (int n = 1; n <= n_stop; ++n) {
    res.spectrum.push_back({double(n), harmonic[n]});
    energy_terms[n - 1] = hbar * n * w0 * harmonic[n];
  }
  res.radiated_energy = pairwise_sum(energy_terms);
  res.angular.reserve(grid.dir.size());
  for (std::size_t j = 0; j < grid.dir.size(); ++j)
    res.angular.emplace_back(grid.dir[j], dir_acc[j]);
  if (quad.refine_angular) {
    std::vector<double> kf(harmonic_fine.begin() + 1,
                           harmonic_fine.begin() + n_stop + 1);
    res.quadrature_error_estimate = std::abs(pairwise_sum(kf) - res.n_bar);
  }
  return res;
}

double mean_photon_number_mollified_4d(const SpectralCurrent& sc,
                                       const QuadratureSpec& quad,
                                       double epsilon) {
  if (sc.mode != SpectralMode::Pulsed)
    throw ConfigError("mollified 4D quadrature requires a pulsed spectrum");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  const double c = sc.units.c, hbar = sc.units.hbar;
  const double norm = 1.0 / (4.0 * M_PI * M_PI * hbar * c);
  const AngularGrid grid = make_angular_grid(quad.n_theta, quad.n_phi);
  const std::vector<Interval> segs = radial_segments(sc);
  const double panel0 =
      sc.hints.k_panel > 0.0 ? sc.hints.k_panel : sc.hints.k_max / 32.0;

  auto run_at = [&](double eps) {
    const std::vector<RadialNode> nodes =
        build_radial_nodes(segs, panel0, quad.radial_order, 0);
    std::vector<double> radial_terms(nodes.size(), 0.0);
    parallel_for(nodes.size(), quad.threads, [&](std::size_t i) {
      const double k = nodes[i].k;
      // q0 panels covering both shell crossings q0 = +/- k, graded on the
      // mollifier width eps/(2k) in q0.
      const double delta = eps / (2.0 * k);
      std::vector<double> bp;
      for (double s : {-1.0, 1.0})
        for (double m : {-10.0, -6.0, -3.0, -1.5, 0.0, 1.5, 3.0, 6.0, 10.0})
          bp.push_back(s * k + m * delta);
      std::sort(bp.begin(), bp.end());
      bp.erase(std::unique(bp.begin(), bp.end()), bp.end());

      std::vector<double> q_terms;
      for (std::size_t p = 0; p + 1 < bp.size(); ++p) {
        const GaussRule r = gauss_legendre_on(12, bp[p], bp[p + 1]);
        for (int m = 0; m < 12; ++m) {
          const double q0 = r.x[m];
          const double q2 = k * k - q0 * q0;
          const double moll = std::exp(-0.5 * q2 * q2 / (eps * eps)) /
                              (eps * std::sqrt(2.0 * M_PI));
          if (moll < 1e-300) continue;
          std::vector<double> ang(grid.dir.size());
          for (std::size_t j = 0; j < grid.dir.size(); ++j) {
            const Vector3d kv = k * grid.dir[j];
            const SpectralSample s = sc.pulsed(kv, c * q0);
            ang[j] =
                grid.w[j] * transverse_project(kv, s.J).squaredNorm();
          }
          q_terms.push_back(r.w[m] * moll * pairwise_sum(ang));
        }
      }
      radial_terms[i] = nodes[i].w * k * k * pairwise_sum(q_terms);
    });
    return norm * pairwise_sum(radial_terms);
  };

  // Mollifier error is even in eps; two Richardson stages in eps^2.
  const double v1 = run_at(epsilon);
  const double v2 = run_at(0.5 * epsilon);
  const double v4 = run_at(0.25 * epsilon);
  const double r1 = (4.0 * v2 - v1) / 3.0;
  const double r2 = (4.0 * v4 - v2) / 3.0;
  return (16.0 * r2 - r1) / 15.0;
}

PoissonEmission poisson_statistics(double n_bar, int n_max) {
  if (n_bar < 0.0) throw ConfigError("poisson_statistics: n_bar must be >= 0");
  if (n_max < 0) throw ConfigError("poisson_statistics: n_max must be >= 0");
  PoissonEmission out;
  out.n_bar = n_bar;
  out.probabilities.resize(std::size_t(n_max) + 1);
  out.probabilities[0] = std::exp(-n_bar);
  for (int n = 0; n < n_max; ++n)
    out.probabilities[n + 1] = out.probabilities[n] * n_bar / (n + 1);
  return out;
}

double imag_action(double n_bar, const Units& u) {
  if (n_bar < 0.0) throw ConfigError("imag_action: n_bar must be >= 0");
  return 0.5 * u.hbar * n_bar;
}

}  // namespace rnr
