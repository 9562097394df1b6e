#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "scpic/grid.hpp"
#include "scpic/maxwell.hpp"
#include "scpic/particle.hpp"

namespace scpic {

enum class Layout { naive, supercell };
enum class Interpolation { scalar, chunked };

inline std::string_view to_string(Layout l) { return l == Layout::naive ? "naive" : "supercell"; }
inline std::string_view to_string(Interpolation i) { return i == Interpolation::scalar ? "scalar" : "chunked"; }

inline constexpr double kSpeedOfLight = 2.99792458e10;     // cm/s
inline constexpr double kElementaryCharge = 4.80320471e-10;  // statC
inline constexpr double kElectronMass = 9.1093837015e-28;    // g

/// Everything needed to set up and run a simulation. Defaults are the frozen
/// plasma benchmark: 40^3 cells, 50 particles per cell, 1000 steps.
struct SimulationConfig {
  Index3 dims{40, 40, 40};
  Vec3 spacing{1.0e-4, 1.0e-4, 1.0e-4};  // cm
  int particles_per_cell = 50;
  int steps = 1000;
  double dt = 0.0;  // s; see with_dt_fraction
  double c = kSpeedOfLight;
  int supercell_size = 2;
  int workers = 1;
  int subdomains = 1;
  Layout layout = Layout::supercell;
  Interpolation interpolation = Interpolation::chunked;
  int chunk_size = 16;
  std::uint64_t seed = 1;

  // Plasma composition: electrons and ions split evenly per cell, charge balanced.
  double density = 1.0e19;           // electrons per cm^3
  double thermal_momentum = 0.0;     // rms momentum per axis in units of m*c; 0 = frozen
  double electron_charge = -kElementaryCharge;
  double electron_mass = kElectronMass;
  double ion_mass_ratio = 1836.15267343;

  GridGeometry geometry() const { return GridGeometry{dims, spacing, Vec3{}}; }

  std::vector<Species> species() const {
    return {Species{electron_charge, electron_mass, "electron"},
            Species{-electron_charge, electron_mass * ion_mass_ratio, "ion"}};
  }

  friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

/// Sets dt to a fraction of the Yee stability bound of the configured grid.
inline SimulationConfig with_dt_fraction(SimulationConfig cfg, double fraction) {
  cfg.dt = fraction * cfl_max_dt(cfg.geometry(), cfg.c);
  return cfg;
}

/// Supercells per axis under ceil tiling (edge supercells may be partial).
inline Index3 supercell_counts(const Index3& dims, int s) {
  return {(dims[0] + s - 1) / s, (dims[1] + s - 1) / s, (dims[2] + s - 1) / s};
}

struct StageTimings {
  double particle_push = 0.0;       // s
  double current_deposition = 0.0;  // s
  double other = 0.0;               // s
  double overall = 0.0;             // s

  StageTimings& operator+=(const StageTimings& o) {
    particle_push += o.particle_push;
    current_deposition += o.current_deposition;
    other += o.other;
    overall += o.overall;
    return *this;
  }
};

struct ConfigValidation {
  SimulationConfig config;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

/// Checks every config invariant and reports all violations at once.
inline ConfigValidation validate_config(const SimulationConfig& cfg) {
  ConfigValidation out{cfg, {}};
  auto& err = out.errors;
  bool dims_ok = true;
  for (int a = 0; a < 3; ++a)
    if (cfg.dims[a] <= 0) dims_ok = false;
  if (!dims_ok) err.emplace_back("non-positive dimensions: grid extents must be >= 1");

  bool spacing_ok = true;
  for (int a = 0; a < 3; ++a)
    if (!(cfg.spacing[a] > 0.0) || !std::isfinite(cfg.spacing[a])) spacing_ok = false;
  if (!spacing_ok) err.emplace_back("non-positive spacing: cell sizes must be positive and finite");

  const bool c_ok = cfg.c > 0.0 && std::isfinite(cfg.c);
  if (!c_ok) err.emplace_back("invalid speed of light: c must be positive and finite");

  if (cfg.particles_per_cell < 0) err.emplace_back("particles per cell must be >= 0");
  if (cfg.steps < 0) err.emplace_back("steps must be >= 0");

  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) {
    err.emplace_back("time step must be positive and finite");
  } else if (spacing_ok && c_ok) {
    const double limit = cfl_max_dt(cfg.geometry(), cfg.c);
    if (cfg.dt > limit)
      err.emplace_back("CFL violation: dt = " + std::to_string(cfg.dt) + " exceeds cfl_max_dt = " +
                       std::to_string(limit));
  }

  if (cfg.chunk_size < 1) err.emplace_back("chunk_size must be >= 1");
  if (cfg.workers < 1) err.emplace_back("workers must be >= 1");
  if (cfg.subdomains < 1) err.emplace_back("subdomains must be >= 1");

  if (cfg.supercell_size < 1) {
    err.emplace_back("supercell size must be >= 1");
  } else if (dims_ok) {
    const int min_dim = std::min({cfg.dims[0], cfg.dims[1], cfg.dims[2]});
    if (cfg.supercell_size > min_dim) {
      err.emplace_back("supercell size " + std::to_string(cfg.supercell_size) + " exceeds grid extent " +
                       std::to_string(min_dim));
    } else if (cfg.layout == Layout::supercell) {
      const Index3 n = supercell_counts(cfg.dims, cfg.supercell_size);
      if (n[0] % 2 || n[1] % 2 || n[2] % 2)
        err.emplace_back("chessboard needs an even supercell count per axis; supercell size " +
                         std::to_string(cfg.supercell_size) + " gives " + std::to_string(n[0]) + "x" +
                         std::to_string(n[1]) + "x" + std::to_string(n[2]));
      if (cfg.subdomains >= 1 && cfg.subdomains > n[2])
        err.emplace_back("subdomains (" + std::to_string(cfg.subdomains) + ") exceed the " +
                         std::to_string(n[2]) + " supercell layers along z");
    }
  }

  if (!(cfg.density >= 0.0) || !std::isfinite(cfg.density)) err.emplace_back("density must be >= 0");
  if (!(cfg.thermal_momentum >= 0.0) || !std::isfinite(cfg.thermal_momentum))
    err.emplace_back("thermal momentum must be >= 0");
  if (!(cfg.electron_mass > 0.0) || !(cfg.ion_mass_ratio > 0.0)) err.emplace_back("species masses must be > 0");
  if (!std::isfinite(cfg.electron_charge)) err.emplace_back("electron charge must be finite");
  return out;
}

}  // namespace scpic
