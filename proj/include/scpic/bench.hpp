#pragma once

// Benchmark runs and configuration sweeps.

#include <cstdint>
#include <string>
#include <vector>

#include "scpic/cache_model.hpp"
#include "scpic/config.hpp"
#include "scpic/diagnostics.hpp"
#include "scpic/report.hpp"
#include "scpic/simulation.hpp"

namespace scpic {

struct RunOptions {
  int diag_every = 100;  // 0 disables diagnostics sampling
};

inline DiagnosticsRecord sample_diagnostics(const Simulation& sim, const Field3& gauss_baseline, double residual) {
  DiagnosticsRecord d;
  d.step = sim.step_index();
  d.field_energy = field_energy(sim.grid());
  const auto particles = sim.particles();
  d.kinetic_energy = kinetic_energy(particles, sim.species(), sim.config().c);
  d.max_continuity_residual = residual;
  d.gauss_drift = gauss_drift(sim.grid(), sim.charge_density(), gauss_baseline);
  return d;
}

/// Runs config.steps steps. Diagnostics are sampled at step 0 and every
/// diag_every steps; the continuity residual of a sample is the worst over the
/// steps since the previous sample. Diagnostic work is kept out of the timers.
inline RunReport run(const SimulationConfig& config, const RunOptions& options = {}) {
  Simulation sim(config);
  RunReport report;
  report.config = config;
  const bool diag = options.diag_every > 0;
  Field3 baseline;
  if (diag) {
    baseline = gauss_residual(sim.grid(), sim.charge_density());
    report.diagnostics.push_back(sample_diagnostics(sim, baseline, 0.0));
    sim.set_track_continuity(true);
  }
  double worst = 0.0;
  for (int s = 1; s <= config.steps; ++s) {
    sim.step();
    if (!diag) continue;
    worst = std::max(worst, sim.last_continuity_residual());
    if (s % options.diag_every == 0 || s == config.steps) {
      report.diagnostics.push_back(sample_diagnostics(sim, baseline, worst));
      worst = 0.0;
    }
  }
  report.timings = sim.timings();
  report.checksum = sim.checksum();
  return report;
}

/// One run per (subdomains, workers) pair. Physics checksums must agree across rows.
inline RunReport sweep_workers(const SimulationConfig& config, const std::vector<int>& worker_counts,
                               const std::vector<int>& subdomain_counts) {
  if (worker_counts.size() != subdomain_counts.size())
    throw std::invalid_argument("worker and subdomain lists must have equal length");
  RunReport report;
  report.config = config;
  report.sweep_kind = "workers";
  for (std::size_t i = 0; i < worker_counts.size(); ++i) {
    SweepRow row;
    row.config = config;
    row.config.workers = worker_counts[i];
    row.config.subdomains = subdomain_counts[i];
    row.label = std::to_string(subdomain_counts[i]) + "x" + std::to_string(worker_counts[i]);
    const auto v = validate_config(row.config);
    if (!v.ok()) {
      row.rejected = true;
      for (const auto& e : v.errors) row.message += (row.message.empty() ? "" : "; ") + e;
    } else {
      const RunReport r = run(row.config, {0});
      row.timings = *r.timings;
      row.checksum = *r.checksum;
    }
    report.sweep.push_back(std::move(row));
  }
  return report;
}

/// Naive-layout baseline row, then one row per supercell size with cache
/// estimates, per-color supercell counts and measured timings. Sizes the
/// chessboard cannot schedule keep their estimates and are marked rejected.
inline RunReport sweep_supercell(const SimulationConfig& config, const std::vector<int>& sizes,
                                 int threads_per_core = 4, std::int64_t l1_budget = 32768) {
  RunReport report;
  report.config = config;
  report.sweep_kind = "supercell";

  SweepRow base;
  base.config = config;
  base.config.layout = Layout::naive;
  base.label = "baseline";
  {
    const RunReport r = run(base.config, {0});
    base.timings = *r.timings;
    base.checksum = *r.checksum;
  }
  const double base_overall = base.timings.overall;
  report.sweep.push_back(base);

  CacheModel model;
  model.threads_per_core = threads_per_core;
  for (int s : sizes) {
    SweepRow row;
    row.config = config;
    row.config.layout = Layout::supercell;
    row.config.supercell_size = s;
    row.label = "S=" + std::to_string(s);
    if (s >= 1) {
      model.supercell_size = s;
      SupercellSizeRow e;
      e.supercell_size = s;
      e.push_bytes = estimate_push_data_bytes(model);
      e.deposition_bytes = estimate_deposition_data_bytes(model);
      e.color_counts = parity_color_counts(supercell_counts(config.dims, s));
      row.estimate = e;
    }
    const auto v = validate_config(row.config);
    if (!v.ok()) {
      row.rejected = true;
      for (const auto& err : v.errors) row.message += (row.message.empty() ? "" : "; ") + err;
    } else {
      const RunReport r = run(row.config, {0});
      row.timings = *r.timings;
      row.checksum = *r.checksum;
      if (row.timings.overall > 0.0) row.speedup = base_overall / row.timings.overall;
    }
    report.sweep.push_back(std::move(row));
  }
  report.recommendation =
      recommend_supercell_size(model, l1_budget, config.dims, config.workers * config.subdomains);
  return report;
}

}  // namespace scpic
