// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <cfloat>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "scpic/bench.hpp"
#include "scpic/cache_model.hpp"
#include "scpic/diagnostics.hpp"
#include "scpic/kernels.hpp"
#include "scpic/maxwell.hpp"
#include "scpic/report.hpp"
#include "scpic/simulation.hpp"

using namespace scpic;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double relative_field_gap(const YeeGrid& a, const YeeGrid& b) {
  double worst = 0.0;
  for (auto c : kFieldComponents) {
    const double scale = oracle::max_abs(a.field(c));
    const double gap = oracle::max_abs_diff(a.field(c), b.field(c));
    if (gap > 0.0) worst = std::max(worst, scale > 0.0 ? gap / scale : INFINITY);
  }
  return worst;
}

// 1. Cache-model table: twelve data sizes at 2-decimal decimal KB.
Outcome cache_table() {
  SimulationConfig c;
  c.particles_per_cell = 0;
  c.steps = 0;
  c = with_dt_fraction(c, 0.5);
  const RunReport r = sweep_supercell(c, {1, 2, 3, 4, 5, 6}, 4);
  const std::string csv = report_csv(r);
  const char* push[] = {"12.86", "19.97", "31.68", "49.15", "73.54", "105.98"};
  const char* dep[] = {"0.77", "2.59", "6.14", "12.00", "20.74", "32.93"};
  int matched = 0;
  std::string missing;
  for (int s = 1; s <= 6; ++s) {
    const std::string key = "sweep_supercell,S=" + std::to_string(s);
    for (auto [col, want] : {std::pair{"push_kb", push[s - 1]}, std::pair{"deposition_kb", dep[s - 1]}}) {
      if (csv.find(key + "," + col + "," + want + "\n") != std::string::npos)
        ++matched;
      else
        missing += " S=" + std::to_string(s) + ":" + col;
    }
  }
  return {matched == 12, std::to_string(matched) + "/12 entries match" + missing};
}

// 2. Frozen plasma: nothing moves, nothing changes, bit for bit.
Outcome frozen_plasma() {
  SimulationConfig c;
  c.dims = {16, 16, 16};
  c.particles_per_cell = 10;
  c.steps = 200;
  c = with_dt_fraction(c, 0.5);
  Simulation sim(c);
  const auto particles = sim.particles();
  const YeeGrid grid = sim.grid();
  sim.run(c.steps);
  const bool same_particles = sim.particles() == particles;
  const bool same_fields = sim.grid() == grid;
  return {same_particles && same_fields, std::to_string(particles.size()) + " particles, 200 steps; particles " +
                                             (same_particles ? "identical" : "DIFFER") + ", fields " +
                                             (same_fields ? "identical" : "DIFFER")};
}

// 3. Charge conservation in a thermal plasma with unit-scale quantities.
Outcome charge_conservation() {
  SimulationConfig c;
  c.dims = {8, 8, 8};
  c.spacing = {1.0, 1.0, 1.0};
  c.c = 1.0;
  c.particles_per_cell = 20;
  c.steps = 100;
  c.density = 1.0;
  c.electron_charge = -1.0;
  c.electron_mass = 1.0;
  c.ion_mass_ratio = 100.0;
  c.thermal_momentum = 0.1;
  c = with_dt_fraction(c, 0.5);
  Simulation sim(c);
  sim.set_track_continuity(true);
  const Field3 baseline = gauss_residual(sim.grid(), sim.charge_density());
  double continuity = 0.0, drift = 0.0;
  for (int s = 0; s < c.steps; ++s) {
    sim.step();
    continuity = std::max(continuity, sim.last_continuity_residual());
    drift = std::max(drift, gauss_drift(sim.grid(), sim.charge_density(), baseline));
  }
  return {continuity <= 1e-13 && drift <= 1e-10,
          "max continuity residual " + fmt("%.3g", continuity) + " (<= 1e-13), Gauss drift " + fmt("%.3g", drift) +
              " (<= 1e-10), migrations last step " + std::to_string(sim.last_migrations())};
}

// 4. Naive sequential layout against the supercell layout with 4 workers.
Outcome layout_equivalence() {
  SimulationConfig c;
  c.dims = {8, 8, 8};
  c.particles_per_cell = 0;
  c.steps = 100;
  c = with_dt_fraction(c, 0.5);
  const GridGeometry g = c.geometry();
  const auto species = c.species();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  const int count = 500;
  std::vector<Particle> initial(count);
  for (int n = 0; n < count; ++n) {
    Particle& p = initial[static_cast<std::size_t>(n)];
    p.species = n % 2;
    p.position = g.wrap_position({u(rng) * g.length(0), u(rng) * g.length(1), u(rng) * g.length(2)});
    const double spread = 0.05 * species[static_cast<std::size_t>(p.species)].mass * c.c;
    p.momentum = Vec3{nd(rng), nd(rng), nd(rng)} * spread;
    p.weight = c.density * g.num_cells() * g.cell_volume() / (count / 2);
  }
  SimulationConfig naive = c, super = c;
  naive.layout = Layout::naive;
  super.workers = 4;
  Simulation a(naive, initial), b(super, initial);
  a.run(c.steps);
  b.run(c.steps);

  // No particle ids: match each naive particle to the nearest supercell particle
  // of the same species and weight (positions are far apart relative to the gap).
  const auto pa = a.particles(), pb = b.particles();
  double pos_gap = 0.0, mom_gap = 0.0, mom_scale = 0.0;
  std::set<std::size_t> used;
  for (const auto& p : pa) mom_scale = std::max(mom_scale, norm(p.momentum));
  bool matched = pa.size() == pb.size();
  for (const auto& p : pa) {
    std::size_t best = pb.size();
    double best_d = INFINITY;
    for (std::size_t m = 0; m < pb.size(); ++m) {
      if (pb[m].species != p.species || pb[m].weight != p.weight) continue;
      Vec3 d = pb[m].position - p.position;
      for (int ax = 0; ax < 3; ++ax) d[ax] -= g.length(ax) * std::round(d[ax] / g.length(ax));
      if (norm(d) < best_d) {
        best_d = norm(d);
        best = m;
      }
    }
    if (best == pb.size() || !used.insert(best).second) matched = false;
    if (best == pb.size()) continue;
    double worst_axis = 0.0;
    Vec3 d = pb[best].position - p.position;
    for (int ax = 0; ax < 3; ++ax)
      worst_axis = std::max(worst_axis, std::abs(d[ax] - g.length(ax) * std::round(d[ax] / g.length(ax))) / g.length(ax));
    pos_gap = std::max(pos_gap, worst_axis);
    mom_gap = std::max(mom_gap, norm(pb[best].momentum - p.momentum) / mom_scale);
  }
  const double field_gap = relative_field_gap(a.grid(), b.grid());
  const bool bitwise = pos_gap == 0.0 && mom_gap == 0.0 && field_gap == 0.0;
  const bool pass = matched && pos_gap <= 1e-12 && mom_gap <= 1e-12 && field_gap <= 1e-12;
  return {pass, std::string(matched ? "one-to-one match" : "MATCHING FAILED") + "; relative gaps: position " +
                    fmt("%.3g", pos_gap) + ", momentum " + fmt("%.3g", mom_gap) + ", fields " +
                    fmt("%.3g", field_gap) + " (<= 1e-12; " + (bitwise ? "bitwise" : "not bitwise: J summation order") +
                    ")"};
}

// 5. Determinism across subdomain x worker shapes.
Outcome determinism_sweep() {
  SimulationConfig c;
  c.dims = {16, 16, 16};
  c.particles_per_cell = 4;
  c.steps = 20;
  c.thermal_momentum = 0.05;
  c = with_dt_fraction(c, 0.5);
  const RunReport r = sweep_workers(c, {8, 4, 2, 1}, {1, 2, 4, 8});
  bool same = r.sweep.size() == 4;
  std::string detail;
  for (const auto& row : r.sweep) {
    if (row.rejected || row.checksum != r.sweep[0].checksum) same = false;
    detail += " " + row.label + "=" + (row.rejected ? "rejected" : checksum_hex(row.checksum));
  }
  return {same, "checksums" + detail};
}

// 6. Kernel oracles, 1e5 randomized cases each.
Outcome kernel_oracles() {
  const int cases = 100000;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<std::string> failures;
  std::string detail;

  // Partition of unity.
  double pou = 0.0;
  for (int n = 0; n < cases; ++n) {
    const CicWeights w = cic_weights({u(rng) * 40, u(rng) * 40, u(rng) * 40}, {0.5, 0.0, 0.5}, {1.0, 1.0, 1.0});
    long double sum = 0.0L;
    for (double v : w.w) sum += v;
    pou = std::max(pou, static_cast<double>(std::fabs(sum - 1.0L)));
  }
  if (pou > DBL_EPSILON) failures.push_back("cic");
  detail += "cic |sum-1| max " + fmt("%.3g", pou);

  // Chunked gather against the scalar path.
  const GridGeometry g{{8, 7, 6}, {1.0, 0.8, 1.2}, {}};
  YeeGrid grid(g);
  for (auto c : kFieldComponents)
    for (std::size_t n = 0; n < grid.ex.size(); ++n) grid.field(c)[n] = nd(rng);
  const GridFieldSource src(grid);
  std::vector<Vec3> pos(16);
  std::vector<GatheredFields> out(16);
  int mismatches = 0;
  for (int n = 0; n < cases; n += 16) {
    for (auto& p : pos) p = g.wrap_position({u(rng) * g.length(0), u(rng) * g.length(1), u(rng) * g.length(2)});
    gather_fields_chunked(src, std::span<const Vec3>(pos), std::span<GatheredFields>(out));
    for (int m = 0; m < 16; ++m) {
      const GatheredFields s = gather_fields(src, pos[static_cast<std::size_t>(m)]);
      if (!(s.e == out[static_cast<std::size_t>(m)].e && s.b == out[static_cast<std::size_t>(m)].b)) ++mismatches;
    }
  }
  if (mismatches) failures.push_back("gather");
  detail += "; chunked gather mismatches " + std::to_string(mismatches);

  // Boris |p| in pure B: 1e5 random particles and fields, 1e4 steps each.
  double boris = 0.0;
  for (int n = 0; n < cases; ++n) {
    GatheredFields f;
    f.b = Vec3{nd(rng), nd(rng), nd(rng)} * 2.0;
    Vec3 p = Vec3{nd(rng), nd(rng), nd(rng)} * 3.0;
    const Species s{n % 2 ? 1.0 : -1.0, 1.0 + u(rng), "x"};
    const double dt = 0.01 + u(rng);
    const double p0 = norm(p);
    for (int step = 0; step < 10000; ++step) p = boris_push(p, f, s, dt, 1.0);
    boris = std::max(boris, std::abs(norm(p) - p0) / p0);
  }
  if (boris > 1e-12) failures.push_back("boris");
  detail += "; Boris |p| drift " + fmt("%.3g", boris);

  // Trajectory splitting: exact concatenation and in-cell segments.
  int split_bad = 0;
  for (int n = 0; n < cases; ++n) {
    Vec3 from{u(rng) * 40 - 20, u(rng) * 40 - 20, u(rng) * 40 - 20};
    if (n % 5 == 0) from.y = std::round(from.y);
    Vec3 to = from + Vec3{(2 * u(rng) - 1) * 0.999, (2 * u(rng) - 1) * 0.999, (2 * u(rng) - 1) * 0.999};
    if (n % 7 == 0) to.x = std::round(to.x);
    if (std::abs(to.x - from.x) >= 1.0) to.x = from.x;
    const SegmentList segs = split_trajectory(from, to);
    bool ok = segs.count >= 1 && segs.count <= 4 && segs.segments[0].start == from &&
              segs.segments[static_cast<std::size_t>(segs.count - 1)].end == to;
    for (int m = 0; ok && m + 1 < segs.count; ++m)
      ok = segs.segments[static_cast<std::size_t>(m)].end == segs.segments[static_cast<std::size_t>(m + 1)].start;
    for (const auto& s : segs)
      for (int a = 0; a < 3; ++a)
        ok = ok && s.start[a] >= s.cell[a] && s.start[a] <= s.cell[a] + 1 && s.end[a] >= s.cell[a] &&
             s.end[a] <= s.cell[a] + 1;
    if (!ok) ++split_bad;
  }
  if (split_bad) failures.push_back("split");
  detail += "; split failures " + std::to_string(split_bad);

  // VB single-move continuity on unit cells with O(1) charge.
  const GridGeometry ug{{4, 4, 4}, {1.0, 1.0, 1.0}, {}};
  double continuity = 0.0;
  YeeGrid jgrid(ug);
  for (int n = 0; n < cases; ++n) {
    jgrid.zero_current();
    GridCurrentSink sink(jgrid);
    Particle p;
    p.position = ug.wrap_position({u(rng) * 4, u(rng) * 4, u(rng) * 4});
    p.weight = 1.0;
    const double q = 2 * u(rng) - 1;
    const double dt = 0.5;
    const Vec3 to = p.position + Vec3{(2 * u(rng) - 1) * 0.99, (2 * u(rng) - 1) * 0.99, (2 * u(rng) - 1) * 0.99};
    deposit_move(sink, ug, p.position, to, q, dt);
    const Field3 rho_old = oracle::charge_density(ug, {p}, {q});
    p.position = ug.wrap_position(to);
    const Field3 rho_new = oracle::charge_density(ug, {p}, {q});
    const Field3 div = oracle::divergence(ug, jgrid.jx, jgrid.jy, jgrid.jz);
    for (std::size_t m = 0; m < div.size(); ++m)
      continuity = std::max(continuity, std::abs((rho_new[m] - rho_old[m]) / dt + div[m]));
  }
  if (continuity > 1e-13) failures.push_back("vb");
  detail += "; VB continuity " + fmt("%.3g", continuity);

  std::string failed;
  for (const auto& f : failures) failed += " " + f;
  return {failures.empty(), detail + (failed.empty() ? "" : "; failed:" + failed)};
}

// 7. Vacuum plane wave energy over one numerical period; empty vacuum stays zero.
Outcome maxwell_properties() {
  const GridGeometry g{{64, 64, 64}, {1.0, 1.0, 1.0}, {}};
  const Index3 mode{1, 0, 0};
  const int steps = 128;
  const double c = 1.0;
  const double dt = yee_period_dt(g, mode, steps, c);
  YeeGrid grid(g);
  init_plane_wave(grid, mode, 1.0, dt, c);
  const double e0 = field_energy(grid);
  double energy_gap = 0.0;
  WorkerPool pool(1);
  for (int s = 0; s < steps; ++s) {
    advance_b_half(grid, dt, c, &pool);
    advance_b_half(grid, dt, c, &pool);
    advance_e(grid, dt, c, &pool);
    energy_gap = std::max(energy_gap, std::abs(field_energy(grid) - e0) / e0);
  }
  const double period = steps * dt;
  const double omega_period = yee_mode_omega(g, mode, dt, c) * period;

  YeeGrid vacuum(g);
  const YeeGrid zero = vacuum;
  for (int s = 0; s < 1000; ++s) {
    advance_b_half(vacuum, dt, c);
    advance_b_half(vacuum, dt, c);
    advance_e(vacuum, dt, c);
  }
  const bool still_zero = vacuum == zero;
  return {energy_gap <= 1e-10 && still_zero && std::abs(omega_period - 2 * M_PI) < 1e-12,
          "energy relative drift " + fmt("%.3g", energy_gap) + " over one period (" + std::to_string(steps) +
              " steps, omega*T = " + fmt("%.15g", omega_period) + "); vacuum after 1000 steps " +
              (still_zero ? "exactly zero" : "NONZERO")};
}

// 8. Speedup column on the full-size benchmark grid.
Outcome speedup_report() {
  SimulationConfig c;
  c.steps = 5;  // full 1000 steps take hours on one core; the column shape is what is checked
  c = with_dt_fraction(c, 0.5);
  const RunReport r = sweep_supercell(c, {1, 2, 3, 4, 5, 6});
  bool ok = !r.sweep.empty() && r.sweep[0].label == "baseline" && r.sweep[0].timings.overall > 0.0;
  std::string detail = "baseline overall " + fmt("%.3f", r.sweep.empty() ? 0.0 : r.sweep[0].timings.overall) + " s;";
  int measured = 0;
  for (std::size_t n = 1; n < r.sweep.size(); ++n) {
    const auto& row = r.sweep[n];
    if (row.rejected) {
      detail += " " + row.label + "=rejected";
      continue;
    }
    ++measured;
    ok = ok && row.speedup && *row.speedup > 0.0;
    detail += " " + row.label + "=" + (row.speedup ? fmt("%.3f", *row.speedup) : std::string("none"));
  }
  ok = ok && measured > 0;
  write_report_csv(r, "acceptance_speedup.csv");
  return {ok, detail + " (" + std::to_string(c.steps) + " steps, 40^3, ppc 50; report acceptance_speedup.csv)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"cache-model table", cache_table},
      {"frozen-plasma fixed point", frozen_plasma},
      {"charge conservation", charge_conservation},
      {"layout equivalence", layout_equivalence},
      {"determinism sweep", determinism_sweep},
      {"kernel oracles", kernel_oracles},
      {"Maxwell properties", maxwell_properties},
      {"speedup report", speedup_report},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));

  int failed = 0;
  for (std::size_t n = 0; n < criteria.size(); ++n) {
    const int id = static_cast<int>(n) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[n].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[n].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
