#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "rnr/current.hpp"
#include "rnr/decomposition.hpp"
#include "rnr/quadrature.hpp"

namespace rnr {

// JSON config schemas (strict: unknown keys are rejected with ConfigError).
// A source object carries a "variant" discriminator:
//   static_gaussian_charge, static_current_loop, orbiting_gaussian_charge,
//   orbiting_shell, gaussian_dipole_pulse, sampled {path}.
// Width defaults applied here: orbiting width = orbit_radius/50, shell_width
// = diameter/200, dipole spatial_width = 0.02 c/carrier_omega, loop
// wire_width = radius/100.
Source parse_source(const nlohmann::json& j, const Units& u,
                    const std::string& base_dir);

QuadratureSpec parse_quad(const nlohmann::json& j, double tol_override);

struct ClassifyConfig {
  Source source;
  double epsilon = 0.0;  // 0 -> default from spectrum hints
  GridSpec grid;
  bool reconstruct = true;  // run the grid wave-equation diagnostic
  QuadratureSpec quad;
};

struct EmitConfig {
  Source source;
  int n_max = 64;  // periodic harmonic cap
  QuadratureSpec quad;
};

struct ShellScanConfig {
  OrbitingShell base;   // diameter replaced per step
  double d_over_ct_min = 0.2;
  double d_over_ct_max = 3.2;
  int steps = 61;
  QuadratureSpec quad;
};

struct StaticEnergyConfig {
  StaticSource a;
  StaticSource b;
  bool include_self = false;
  QuadratureSpec quad;
};

struct VerifyPropagatorConfig {
  std::vector<double> r_values = {0.5, 1.0, 2.0, 4.0};
  double k_cutoff_factor = 40.0 * M_PI;  // K = factor / r
  double smear_width = 0.4;              // real-pair width in s = x^2 units
  double smear_lambda = 1.0;             // real-pair envelope scale
  std::vector<double> a2_values = {0.5, -0.5, 2.0, -2.0};
};

// Loaders: read the file, validate strictly, fill defaults.
ClassifyConfig load_classify_config(const std::string& path, const Units& u,
                                    double tol_override);
EmitConfig load_emit_config(const std::string& path, const Units& u,
                            double tol_override);
ShellScanConfig load_shell_scan_config(const std::string& path, const Units& u,
                                       double tol_override);
StaticEnergyConfig load_static_energy_config(const std::string& path,
                                             const Units& u,
                                             double tol_override);
VerifyPropagatorConfig load_verify_config(const std::string& path,
                                          double tol_override);

}  // namespace rnr
