#include "rnr/config.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>

#include "rnr/errors.hpp"
#include "rnr/sampled.hpp"

namespace rnr {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& what) {
  if (!j.is_object()) {
    throw ConfigError(what + " must be a JSON object");
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& what) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ConfigError("unknown key '" + item.key() + "' in " + what);
    }
  }
}

double get_number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) {
    throw ConfigError(std::string("'") + key + "' must be a number");
  }
  return j[key].get<double>();
}

int get_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) {
    throw ConfigError(std::string("'") + key + "' must be an integer");
  }
  return j[key].get<int>();
}

bool get_bool(const json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) {
    throw ConfigError(std::string("'") + key + "' must be a boolean");
  }
  return j[key].get<bool>();
}

Vector3d get_vec3(const json& j, const char* key, const Vector3d& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j[key];
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() ||
      !v[1].is_number() || !v[2].is_number()) {
    throw ConfigError(std::string("'") + key +
                      "' must be an array of 3 numbers");
  }
  return Vector3d(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
}

}  // namespace

Source parse_source(const json& j, const Units& u,
                    const std::string& base_dir) {
  require_object(j, "source");
  if (!j.contains("variant") || !j["variant"].is_string()) {
    throw ConfigError("source requires a string 'variant' field");
  }
  const std::string variant = j["variant"].get<std::string>();
  Source out;
  if (variant == "static_gaussian_charge") {
    reject_unknown(j, {"variant", "charge", "width", "center"},
                   "static_gaussian_charge");
    StaticGaussianCharge s;
    s.charge = get_number(j, "charge", s.charge);
    s.width = get_number(j, "width", s.width);
    s.center = get_vec3(j, "center", s.center);
    out = s;
  } else if (variant == "static_current_loop") {
    reject_unknown(j, {"variant", "current", "radius", "wire_width", "center",
                       "axis"},
                   "static_current_loop");
    StaticCurrentLoop s;
    s.current = get_number(j, "current", s.current);
    s.radius = get_number(j, "radius", s.radius);
    s.wire_width = get_number(j, "wire_width", s.radius / 100.0);
    s.center = get_vec3(j, "center", s.center);
    s.axis = get_vec3(j, "axis", s.axis);
    out = s;
  } else if (variant == "orbiting_gaussian_charge") {
    reject_unknown(j, {"variant", "charge", "orbit_radius", "period", "width",
                       "center", "axis", "phase"},
                   "orbiting_gaussian_charge");
    OrbitingGaussianCharge s;
    s.charge = get_number(j, "charge", s.charge);
    s.orbit_radius = get_number(j, "orbit_radius", s.orbit_radius);
    s.period = get_number(j, "period", s.period);
    s.width = get_number(j, "width", s.orbit_radius / 50.0);
    s.center = get_vec3(j, "center", s.center);
    s.axis = get_vec3(j, "axis", s.axis);
    s.phase = get_number(j, "phase", s.phase);
    out = s;
  } else if (variant == "orbiting_shell") {
    reject_unknown(j, {"variant", "charge", "diameter", "orbit_radius",
                       "period", "shell_width", "center", "axis", "phase"},
                   "orbiting_shell");
    OrbitingShell s;
    s.charge = get_number(j, "charge", s.charge);
    s.diameter = get_number(j, "diameter", s.diameter);
    s.orbit_radius = get_number(j, "orbit_radius", s.orbit_radius);
    s.period = get_number(j, "period", s.period);
    s.shell_width = get_number(j, "shell_width", s.diameter / 200.0);
    s.center = get_vec3(j, "center", s.center);
    s.axis = get_vec3(j, "axis", s.axis);
    s.phase = get_number(j, "phase", s.phase);
    out = s;
  } else if (variant == "gaussian_dipole_pulse") {
    reject_unknown(j, {"variant", "amplitude", "carrier_omega", "envelope_tau",
                       "spatial_width", "direction"},
                   "gaussian_dipole_pulse");
    GaussianDipolePulse s;
    s.amplitude = get_number(j, "amplitude", s.amplitude);
    s.carrier_omega = get_number(j, "carrier_omega", s.carrier_omega);
    s.envelope_tau = get_number(j, "envelope_tau", s.envelope_tau);
    if (!(s.carrier_omega > 0.0)) {
      throw ConfigError("gaussian_dipole_pulse: carrier_omega must be > 0");
    }
    s.spatial_width =
        get_number(j, "spatial_width", 0.02 * u.c / s.carrier_omega);
    s.direction = get_vec3(j, "direction", s.direction);
    out = s;
  } else if (variant == "sampled") {
    reject_unknown(j, {"variant", "path"}, "sampled");
    if (!j.contains("path") || !j["path"].is_string()) {
      throw ConfigError("sampled source requires a string 'path'");
    }
    std::filesystem::path p(j["path"].get<std::string>());
    if (p.is_relative() && !base_dir.empty()) {
      p = std::filesystem::path(base_dir) / p;
    }
    out = load_sampled(p.string());
  } else {
    throw ConfigError("unknown source variant '" + variant + "'");
  }
  validate(out);
  return out;
}

QuadratureSpec parse_quad(const json& j, double tol_override) {
  QuadratureSpec q;
  if (!j.is_null()) {
    require_object(j, "quad");
    reject_unknown(j,
                   {"n_theta", "n_phi", "radial_rel_tol", "max_evals",
                    "radial_order", "orbit_min_samples", "refine_angular",
                    "threads"},
                   "quad");
    q.n_theta = get_int(j, "n_theta", q.n_theta);
    q.n_phi = get_int(j, "n_phi", q.n_phi);
    q.radial_rel_tol = get_number(j, "radial_rel_tol", q.radial_rel_tol);
    q.max_evals = get_int(j, "max_evals", q.max_evals);
    q.radial_order = get_int(j, "radial_order", q.radial_order);
    q.orbit_min_samples = get_int(j, "orbit_min_samples", q.orbit_min_samples);
    q.refine_angular = get_bool(j, "refine_angular", q.refine_angular);
    q.threads = get_int(j, "threads", q.threads);
  }
  if (tol_override > 0.0) q.radial_rel_tol = tol_override;
  if (q.n_theta < 4 || q.n_phi < 4 || q.radial_order < 2 ||
      !(q.radial_rel_tol > 0.0) || q.max_evals < 1024 || q.threads < 1) {
    throw ConfigError("quad: parameters out of range");
  }
  return q;
}

namespace {

std::string dir_of(const std::string& path) {
  return std::filesystem::path(path).parent_path().string();
}

GridSpec parse_grid(const json& j) {
  GridSpec g;
  if (j.is_null()) return g;
  require_object(j, "grid");
  reject_unknown(j, {"n_space", "n_time", "dx", "dt"}, "grid");
  g.n_space = get_int(j, "n_space", g.n_space);
  g.n_time = get_int(j, "n_time", g.n_time);
  g.dx = get_number(j, "dx", g.dx);
  g.dt = get_number(j, "dt", g.dt);
  if (g.n_space < 4 || g.n_time < 4 || !(g.dx > 0.0) || !(g.dt > 0.0)) {
    throw ConfigError("grid: need n_space, n_time >= 4 and dx, dt > 0");
  }
  return g;
}

StaticSource as_static(const Source& s, const std::string& what) {
  if (const auto* c = std::get_if<StaticGaussianCharge>(&s)) return *c;
  if (const auto* l = std::get_if<StaticCurrentLoop>(&s)) return *l;
  throw ConfigError(what + ": static-energy sources must be static variants");
}

}  // namespace

ClassifyConfig load_classify_config(const std::string& path, const Units& u,
                                    double tol_override) {
  const json j = read_json_file(path);
  require_object(j, "classify config");
  reject_unknown(j, {"source", "epsilon", "grid", "reconstruct", "quad"},
                 "classify config");
  if (!j.contains("source")) {
    throw ConfigError("classify config requires 'source'");
  }
  ClassifyConfig cfg;
  cfg.source = parse_source(j["source"], u, dir_of(path));
  cfg.epsilon = get_number(j, "epsilon", 0.0);
  if (cfg.epsilon < 0.0) throw ConfigError("'epsilon' must be >= 0");
  cfg.grid = parse_grid(j.contains("grid") ? j["grid"] : json());
  cfg.reconstruct = get_bool(j, "reconstruct", cfg.reconstruct);
  cfg.quad = parse_quad(j.contains("quad") ? j["quad"] : json(), tol_override);
  return cfg;
}

EmitConfig load_emit_config(const std::string& path, const Units& u,
                            double tol_override) {
  const json j = read_json_file(path);
  require_object(j, "emit config");
  reject_unknown(j, {"source", "n_max", "quad"}, "emit config");
  if (!j.contains("source")) {
    throw ConfigError("emit config requires 'source'");
  }
  EmitConfig cfg;
  cfg.source = parse_source(j["source"], u, dir_of(path));
  cfg.n_max = get_int(j, "n_max", cfg.n_max);
  if (cfg.n_max < 1 || cfg.n_max > 4096) {
    throw ConfigError("'n_max' must be in [1, 4096]");
  }
  cfg.quad = parse_quad(j.contains("quad") ? j["quad"] : json(), tol_override);
  return cfg;
}

ShellScanConfig load_shell_scan_config(const std::string& path, const Units& u,
                                       double tol_override) {
  const json j = read_json_file(path);
  require_object(j, "shell-scan config");
  reject_unknown(j, {"base", "d_over_ct_min", "d_over_ct_max", "steps", "quad"},
                 "shell-scan config");
  if (!j.contains("base")) {
    throw ConfigError("shell-scan config requires 'base'");
  }
  ShellScanConfig cfg;
  Source s = parse_source(j["base"], u, dir_of(path));
  const auto* shell = std::get_if<OrbitingShell>(&s);
  if (shell == nullptr) {
    throw ConfigError("shell-scan 'base' must be an orbiting_shell");
  }
  cfg.base = *shell;
  cfg.d_over_ct_min = get_number(j, "d_over_ct_min", cfg.d_over_ct_min);
  cfg.d_over_ct_max = get_number(j, "d_over_ct_max", cfg.d_over_ct_max);
  cfg.steps = get_int(j, "steps", cfg.steps);
  if (!(cfg.d_over_ct_min > 0.0) || !(cfg.d_over_ct_max > cfg.d_over_ct_min)) {
    throw ConfigError("shell-scan range must satisfy 0 < min < max");
  }
  if (cfg.steps < 2 || cfg.steps > 100000) {
    throw ConfigError("'steps' must be in [2, 100000]");
  }
  cfg.quad = parse_quad(j.contains("quad") ? j["quad"] : json(), tol_override);
  return cfg;
}

StaticEnergyConfig load_static_energy_config(const std::string& path,
                                             const Units& u,
                                             double tol_override) {
  const json j = read_json_file(path);
  require_object(j, "static-energy config");
  reject_unknown(j, {"a", "b", "include_self", "quad"}, "static-energy config");
  if (!j.contains("a") || !j.contains("b")) {
    throw ConfigError("static-energy config requires sources 'a' and 'b'");
  }
  StaticEnergyConfig cfg;
  cfg.a = as_static(parse_source(j["a"], u, dir_of(path)), "a");
  cfg.b = as_static(parse_source(j["b"], u, dir_of(path)), "b");
  cfg.include_self = get_bool(j, "include_self", cfg.include_self);
  cfg.quad = parse_quad(j.contains("quad") ? j["quad"] : json(), tol_override);
  return cfg;
}

VerifyPropagatorConfig load_verify_config(const std::string& path,
                                          double tol_override) {
  (void)tol_override;  // verification tolerances are pinned in the checks
  VerifyPropagatorConfig cfg;
  if (path.empty()) return cfg;
  const json j = read_json_file(path);
  require_object(j, "verify config");
  reject_unknown(j,
                 {"r_values", "k_cutoff_factor", "smear_width", "smear_lambda",
                  "a2_values"},
                 "verify config");
  if (j.contains("r_values")) {
    if (!j["r_values"].is_array() || j["r_values"].empty()) {
      throw ConfigError("'r_values' must be a non-empty array");
    }
    cfg.r_values.clear();
    for (const auto& v : j["r_values"]) {
      if (!v.is_number()) throw ConfigError("'r_values' must hold numbers");
      cfg.r_values.push_back(v.get<double>());
      if (!(cfg.r_values.back() > 0.0)) {
        throw ConfigError("'r_values' must be positive");
      }
    }
  }
  cfg.k_cutoff_factor = get_number(j, "k_cutoff_factor", cfg.k_cutoff_factor);
  cfg.smear_width = get_number(j, "smear_width", cfg.smear_width);
  cfg.smear_lambda = get_number(j, "smear_lambda", cfg.smear_lambda);
  if (!(cfg.k_cutoff_factor > 0.0) || !(cfg.smear_width > 0.0) ||
      !(cfg.smear_lambda > 0.0)) {
    throw ConfigError("verify config scales must be positive");
  }
  if (j.contains("a2_values")) {
    if (!j["a2_values"].is_array() || j["a2_values"].empty()) {
      throw ConfigError("'a2_values' must be a non-empty array");
    }
    cfg.a2_values.clear();
    for (const auto& v : j["a2_values"]) {
      if (!v.is_number()) throw ConfigError("'a2_values' must hold numbers");
      cfg.a2_values.push_back(v.get<double>());
      if (cfg.a2_values.back() == 0.0) {
        throw ConfigError("'a2_values' must be nonzero");
      }
    }
  }
  return cfg;
}

}  // namespace rnr
