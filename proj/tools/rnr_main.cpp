#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "rnr/config.hpp"
#include "rnr/decomposition.hpp"
#include "rnr/errors.hpp"
#include "rnr/exchange.hpp"
#include "rnr/json_io.hpp"
#include "rnr/propagator.hpp"
#include "rnr/radiation.hpp"
#include "rnr/spectral.hpp"
#include "rnr/units.hpp"

namespace {

using nlohmann::ordered_json;
using namespace rnr;

std::string variant_name(const Source& s) {
  struct Namer {
    std::string operator()(const StaticGaussianCharge&) const {
      return "static_gaussian_charge";
    }
    std::string operator()(const StaticCurrentLoop&) const {
      return "static_current_loop";
    }
    std::string operator()(const OrbitingGaussianCharge&) const {
      return "orbiting_gaussian_charge";
    }
    std::string operator()(const OrbitingShell&) const {
      return "orbiting_shell";
    }
    std::string operator()(const GaussianDipolePulse&) const {
      return "gaussian_dipole_pulse";
    }
    std::string operator()(const SampledCurrent&) const { return "sampled"; }
  };
  return std::visit(Namer{}, s);
}

std::string out_path(const std::string& out_dir, const std::string& name) {
  std::filesystem::create_directories(out_dir);
  return (std::filesystem::path(out_dir) / name).string();
}

std::string num_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

EmissionResult emission_of(const SpectralCurrent& sc, int n_max_hint,
                           const QuadratureSpec& quad) {
  if (sc.mode == SpectralMode::Periodic) {
    const int cap = n_max_hint > 0 ? n_max_hint
                                   : (sc.n_max > 0 ? sc.n_max : 64);
    return photon_rate_periodic(sc, cap, quad);
  }
  return mean_photon_number_pulsed(sc, quad);
}

// ---------------------------------------------------------------------------
// classify: split into radiating / non-radiating parts, report diagnostics.
// ---------------------------------------------------------------------------
int cmd_classify(const ClassifyConfig& cfg, const Units& u,
                 std::uint64_t seed, const std::string& out_dir) {
  const SpectralCurrent sc = make_spectral(cfg.source, u);
  const double eps = cfg.epsilon > 0.0 ? cfg.epsilon : default_epsilon(sc);
  CurrentSplit split = split_current(sc, eps);
  split.diagnostics = split_diagnostics(sc, eps, cfg.quad, seed);

  const EmissionResult em = emission_of(sc, 0, cfg.quad);
  const double frac = nonrad_photon_fraction(split, cfg.quad);
  const bool radiating = em.n_bar > 1e-12;

  ordered_json j;
  j["schema_version"] = 1;
  j["units"] = "natural";
  j["command"] = "classify";
  j["source_variant"] = variant_name(cfg.source);
  j["label"] = radiating ? "radiating" : "non-radiating";
  j["n_bar"] = em.n_bar;
  j["radiated_energy"] = em.radiated_energy;
  j["epsilon"] = eps;
  j["nonrad_photon_fraction"] = frac;
  ordered_json sweep = ordered_json::array();
  for (const auto& row : split.diagnostics.nonrad_fraction_sweep) {
    sweep.push_back({{"epsilon", row[0]}, {"nonrad_fraction", row[1]}});
  }
  j["diagnostics"] = {
      {"reconstruction_residual", split.diagnostics.reconstruction_residual},
      {"max_transversality", split.diagnostics.max_transversality},
      {"rad_mean_abs_q2", split.diagnostics.rad_mean_abs_q2},
      {"nonrad_fraction_sweep", sweep},
  };
  if (cfg.reconstruct) {
    const SampledCurrent g = reconstruct_on_grid(split.rad, cfg.grid, cfg.quad);
    const WaveResidual wr = wave_residual(g, u);
    j["wave_residual"] = {{"residual", wr.residual},
                          {"coarse_residual", wr.coarse_residual},
                          {"n_space", cfg.grid.n_space},
                          {"n_time", cfg.grid.n_time}};
  }
  write_json_file(out_path(out_dir, "classify.json"), j);
  std::cout << "classify: " << j["label"].get<std::string>()
            << "  n_bar=" << fmt17(em.n_bar)
            << "  nonrad_fraction=" << fmt17(frac) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// emit-spectrum: photon spectrum and Poisson statistics.
// ---------------------------------------------------------------------------
int cmd_emit_spectrum(const EmitConfig& cfg, const Units& u,
                      const std::string& out_dir) {
  const SpectralCurrent sc = make_spectral(cfg.source, u);
  const bool periodic = sc.mode == SpectralMode::Periodic;
  const EmissionResult em = emission_of(sc, cfg.n_max, cfg.quad);

  const std::vector<std::string> cols =
      periodic ? std::vector<std::string>{"n", "n_bar_n"}
               : std::vector<std::string>{"omega", "dn_domega"};
  CsvWriter csv(out_path(out_dir, "spectrum.csv"), cols);
  for (const auto& row : em.spectrum) csv.row({row[0], row[1]});

  const PoissonEmission poisson = poisson_statistics(em.n_bar, 32);
  ordered_json j;
  j["schema_version"] = 1;
  j["units"] = "natural";
  j["command"] = "emit-spectrum";
  j["source_variant"] = variant_name(cfg.source);
  j["mode"] = periodic ? "periodic" : "pulsed";
  j["n_bar"] = em.n_bar;
  j["radiated_energy"] = em.radiated_energy;
  j["imag_action"] = imag_action(em.n_bar, u);
  j["quadrature_error_estimate"] = em.quadrature_error_estimate;
  j["poisson"] = {{"n_bar", poisson.n_bar},
                  {"probabilities", poisson.probabilities}};
  write_json_file(out_path(out_dir, "emission.json"), j);
  std::cout << "emit-spectrum: mode=" << j["mode"].get<std::string>()
            << "  n_bar=" << fmt17(em.n_bar)
            << "  radiated_energy=" << fmt17(em.radiated_energy) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// shell-scan: sweep the shell diameter at fixed orbit and period.
// ---------------------------------------------------------------------------
int cmd_shell_scan(const ShellScanConfig& cfg, const Units& u,
                   const std::string& out_dir) {
  CsvWriter csv(out_path(out_dir, "shell_scan.csv"),
                {"d_over_ct", "n_bar_period", "status"});
  bool any_nonconverged = false;
  for (int i = 0; i < cfg.steps; ++i) {
    const double ratio =
        cfg.d_over_ct_min + (cfg.d_over_ct_max - cfg.d_over_ct_min) *
                                static_cast<double>(i) / (cfg.steps - 1);
    OrbitingShell shell = cfg.base;
    shell.diameter = ratio * u.c * shell.period;
    const Source src = shell;
    validate(src);
    const SpectralCurrent sc = make_spectral(src, u);
    try {
      const EmissionResult em =
          photon_rate_periodic(sc, sc.n_max > 0 ? sc.n_max : 512, cfg.quad);
      csv.row_mixed({fmt17(ratio), fmt17(em.n_bar), "ok"});
    } catch (const ConvergenceError& e) {
      csv.row_mixed({fmt17(ratio), "", e.status});
      any_nonconverged = true;
    }
  }
  std::cout << "shell-scan: " << cfg.steps << " steps"
            << (any_nonconverged ? " (some steps NON_CONVERGED)" : "") << "\n";
  return any_nonconverged ? 3 : 0;
}

// ---------------------------------------------------------------------------
// static-energy: Coulomb + Ampere energy of a static pair.
// ---------------------------------------------------------------------------
double smear_width_of(const StaticSource& s) {
  if (const auto* c = std::get_if<StaticGaussianCharge>(&s)) return c->width;
  return std::get<StaticCurrentLoop>(s).wire_width;
}

int cmd_static_energy(const StaticEnergyConfig& cfg, const Units& u,
                      const std::string& out_dir) {
  const ExchangeResult res =
      static_energy(cfg.a, cfg.b, cfg.quad, cfg.include_self, u);
  ordered_json j;
  j["schema_version"] = 1;
  j["units"] = "natural";
  j["command"] = "static-energy";
  j["include_self"] = cfg.include_self;
  j["static_energy_total"] = res.static_energy_total;
  j["coulomb_part"] = res.coulomb_part;
  j["ampere_part"] = res.ampere_part;
  if (cfg.include_self) {
    j["smear_widths"] = {smear_width_of(cfg.a), smear_width_of(cfg.b)};
  }
  write_json_file(out_path(out_dir, "static_energy.json"), j);
  std::cout << "static-energy: total=" << fmt17(res.static_energy_total)
            << "  coulomb=" << fmt17(res.coulomb_part)
            << "  ampere=" << fmt17(res.ampere_part) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// verify-propagator: run every propagator identity check.
// ---------------------------------------------------------------------------
int cmd_verify_propagator(const VerifyPropagatorConfig& cfg, const Units& u,
                          const std::string& out_dir) {
  ordered_json checks = ordered_json::array();
  bool all_pass = true;
  auto push = [&](const std::string& name, double lhs, double rhs,
                  double rel_err, bool pass) {
    checks.push_back({{"check_name", name},
                      {"lhs", lhs},
                      {"rhs", rhs},
                      {"rel_err", rel_err},
                      {"pass", pass}});
    all_pass = all_pass && pass;
  };

  // Equal-time imaginary part at each r, plus the exact 1/r^2 scaling.
  std::vector<double> scaled;
  for (double r : cfg.r_values) {
    const PairCheck pc =
        verify_imag_pair(r, 0.0, cfg.k_cutoff_factor / r, u);
    push("imag_pair_equal_time_r_" + num_label(r), pc.numeric, pc.analytic,
         pc.rel_err, pc.status == "ok" && pc.rel_err <= 0.01);
    scaled.push_back(pc.numeric * r * r);
  }
  if (scaled.size() > 1) {
    const auto [mn, mx] = std::minmax_element(scaled.begin(), scaled.end());
    const double spread = (*mx - *mn) / std::abs(*mn);
    push("imag_pair_r2_scaling", *mx, *mn, spread, spread <= 0.015);
  }
  {
    // Off equal time the slow beat (r - ct) needs a larger cutoff.
    const PairCheck pc =
        verify_imag_pair(1.0, 0.5 / u.c, 2.0 * cfg.k_cutoff_factor, u);
    push("imag_pair_off_time", pc.numeric, pc.analytic, pc.rel_err,
         pc.status == "ok" && pc.rel_err <= 0.02);
  }

  // Light-cone delta of the real part, on and off the cone.
  const double lam = cfg.smear_lambda, w = cfg.smear_width;
  const double k_real = 28.0 / std::min(lam, std::sqrt(w));
  {
    const RealPairCheck rp = verify_real_pair_smeared(0.0, w, lam, k_real);
    push("real_pair_on_cone", rp.lhs, rp.rhs, rp.rel_err, rp.pass);
  }
  {
    const RealPairCheck rp =
        verify_real_pair_smeared(5.0 * w, w, lam, k_real);
    push("real_pair_off_cone", rp.lhs, rp.rhs, rp.rel_err, rp.pass);
  }

  // Retarded / advanced split at both roots and away from them.
  {
    const double R = 1.0, tw = 0.1 / u.c;
    const SplitCheck ret = retarded_advanced_split(R / u.c, R, tw, u);
    push("split_retarded_root", ret.lhs, ret.rhs, ret.rel_err,
         ret.rel_err <= 0.02);
    const SplitCheck adv = retarded_advanced_split(-R / u.c, R, tw, u);
    push("split_advanced_root", adv.lhs, adv.rhs, adv.rel_err,
         adv.rel_err <= 0.02);
    const double tiny = 1e-3 / (2.0 * R * u.c);
    const SplitCheck far = retarded_advanced_split(0.0, R, 0.5 * tw, u);
    push("split_no_root", far.lhs, far.rhs, far.rel_err,
         std::abs(far.lhs) <= tiny && std::abs(far.rhs) <= tiny);
  }

  // Lorentzian regulator identity over the eps sequence.
  for (double a2 : cfg.a2_values) {
    const LorentzianCheck lc =
        a8_identity_check(a2, {1e-2, 1e-3, 1e-4});
    push("lorentzian_a2_" + num_label(a2), lc.residual.front(),
         lc.residual.back(), lc.residual.back(),
         lc.decreasing && lc.residual.back() < 1e-6);
  }

  ordered_json j;
  j["schema_version"] = 1;
  j["units"] = "natural";
  j["command"] = "verify-propagator";
  j["checks"] = checks;
  j["all_pass"] = all_pass;
  write_json_file(out_path(out_dir, "verify_propagator.json"), j);
  std::cout << "verify-propagator: " << checks.size() << " checks, "
            << (all_pass ? "all passed" : "FAILURES present") << "\n";
  return all_pass ? 0 : 5;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Radiating/non-radiating current classification, photon emission "
      "statistics, static exchange energies, and propagator identity "
      "checks."};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = ".";
  int threads = 0;
  std::uint64_t seed = 12345;
  double tol = 0.0;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "output directory (default: .)");
  app.add_option("--threads", threads, "worker-thread override (>= 1)");
  app.add_option("--seed", seed, "seed for quasi-random sample checks");
  app.add_option("--tol", tol, "radial relative-tolerance override");

  CLI::App* c_classify =
      app.add_subcommand("classify", "split a source and diagnose the parts");
  CLI::App* c_emit =
      app.add_subcommand("emit-spectrum", "photon spectrum and statistics");
  CLI::App* c_scan =
      app.add_subcommand("shell-scan", "sweep shell diameter over d/cT");
  CLI::App* c_static =
      app.add_subcommand("static-energy", "Coulomb + Ampere pair energy");
  CLI::App* c_verify =
      app.add_subcommand("verify-propagator", "propagator identity suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const Units u = natural_units();
  try {
    auto need_config = [&]() {
      if (config_path.empty()) {
        throw ConfigError("this command requires --config <path>");
      }
    };
    auto apply_threads = [&](QuadratureSpec& q) {
      if (threads > 0) q.threads = threads;
    };
    if (c_classify->parsed()) {
      need_config();
      ClassifyConfig cfg = load_classify_config(config_path, u, tol);
      apply_threads(cfg.quad);
      return cmd_classify(cfg, u, seed, out_dir);
    }
    if (c_emit->parsed()) {
      need_config();
      EmitConfig cfg = load_emit_config(config_path, u, tol);
      apply_threads(cfg.quad);
      return cmd_emit_spectrum(cfg, u, out_dir);
    }
    if (c_scan->parsed()) {
      need_config();
      ShellScanConfig cfg = load_shell_scan_config(config_path, u, tol);
      apply_threads(cfg.quad);
      return cmd_shell_scan(cfg, u, out_dir);
    }
    if (c_static->parsed()) {
      need_config();
      StaticEnergyConfig cfg = load_static_energy_config(config_path, u, tol);
      apply_threads(cfg.quad);
      return cmd_static_energy(cfg, u, out_dir);
    }
    if (c_verify->parsed()) {
      const VerifyPropagatorConfig cfg = load_verify_config(config_path, tol);
      return cmd_verify_propagator(cfg, u, out_dir);
    }
    throw ConfigError("no subcommand selected");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SingularOverlap& e) {
    std::cerr << e.what() << "\n";
    return 4;
  } catch (const ConvergenceError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
