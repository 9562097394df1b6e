// pic_bench: runs the frozen plasma benchmark (or any configured plasma),
// prints per-stage timings and optionally writes a CSV report.

#include <cstdio>
#include <exception>
#include <iostream>
#include <vector>

#include "scpic/bench.hpp"
#include "scpic/cli.hpp"
#include "scpic/report.hpp"
#include "scpic/simulation.hpp"

namespace {

void print_timings(const char* label, const scpic::StageTimings& t) {
  std::printf("%-22s %12s %18s %12s %12s\n", label, "push", "deposition", "other", "overall");
  std::printf("%-22s %12.4f %18.4f %12.4f %12.4f\n", "", t.particle_push, t.current_deposition, t.other, t.overall);
}

void print_sweep(const scpic::RunReport& r) {
  std::printf("%-12s %10s %12s %10s %10s %10s %8s  %s\n", "config", "push", "deposition", "other", "overall",
              "speedup", "KB push", "KB dep / checksum");
  for (const auto& row : r.sweep) {
    std::string est;
    if (row.estimate) est = scpic::format_kb(row.estimate->push_bytes);
    if (row.rejected) {
      std::printf("%-12s %-53s %8s  %s\n", row.label.c_str(), "rejected", est.c_str(), row.message.c_str());
      continue;
    }
    const std::string speed = row.speedup ? scpic::format_value(*row.speedup) : "-";
    std::printf("%-12s %10.4f %12.4f %10.4f %10.4f %10s %8s  %s %s\n", row.label.c_str(), row.timings.particle_push,
                row.timings.current_deposition, row.timings.other, row.timings.overall, speed.c_str(), est.c_str(),
                row.estimate ? scpic::format_kb(row.estimate->deposition_bytes).c_str() : "",
                scpic::checksum_hex(row.checksum).c_str());
  }
  if (r.recommendation)
    std::printf("recommended supercell size: %d (%s)\n", r.recommendation->supercell_size,
                r.recommendation->note.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  try {
    const scpic::CliOptions opt = scpic::parse_config(argc, argv);
    if (opt.help) {
      std::cout << opt.help_text;
      return 0;
    }
    const auto& cfg = opt.config;
    scpic::RunReport report;
    if (opt.sweep == "workers") {
      std::vector<int> workers, subdomains;
      for (const auto& [p, t] : opt.sweep_combos) {
        subdomains.push_back(p);
        workers.push_back(t);
      }
      report = scpic::sweep_workers(cfg, workers, subdomains);
      print_sweep(report);
    } else if (opt.sweep == "supercell") {
      report = scpic::sweep_supercell(cfg, opt.sweep_sizes, opt.threads_per_core, opt.l1_budget);
      print_sweep(report);
    } else if (!opt.snapshot_path.empty()) {
      // Snapshots need the final state, so drive the simulation directly.
      scpic::Simulation sim(cfg);
      sim.run(cfg.steps);
      report.config = cfg;
      report.timings = sim.timings();
      report.checksum = sim.checksum();
      const auto particles = sim.particles();
      scpic::write_snapshot(opt.snapshot_path, sim.grid(), particles);
      print_timings("run", sim.timings());
    } else {
      report = scpic::run(cfg, {opt.diag_every});
      print_timings("run", *report.timings);
      for (const auto& d : report.diagnostics)
        std::printf("step %6d  field %.6g  kinetic %.6g  continuity %.3g  gauss drift %.3g\n", d.step,
                    d.field_energy, d.kinetic_energy, d.max_continuity_residual, d.gauss_drift);
    }
    if (!opt.report_path.empty()) scpic::write_report_csv(report, opt.report_path);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pic_bench: %s\n", e.what());
    return 1;
  }
}
