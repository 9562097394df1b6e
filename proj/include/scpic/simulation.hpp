#pragma once

// Plasma setup and the per-step schedule:
//   (a) B half step, ghost exchange
//   (b) per chessboard color, per supercell: gather, push, move, deposit
//   (c) migrate
//   (d) B half step
//   (e) E full step with the deposited J
//   (f) clear J
// Stage attribution: gather/push -> particle_push, deposit and tile flush ->
// current_deposition, everything else -> other.

#include <chrono>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scpic/config.hpp"
#include "scpic/diagnostics.hpp"
#include "scpic/grid.hpp"
#include "scpic/kernels.hpp"
#include "scpic/maxwell.hpp"
#include "scpic/supercell.hpp"
#include "scpic/worker_pool.hpp"

namespace scpic {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors)
      : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& errors) {
    std::string out = "invalid configuration:";
    for (const auto& e : errors) out += "\n  " + e;
    return out;
  }

  std::vector<std::string> errors_;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Electrons and ions placed at seeded pseudo-random positions inside every
/// cell: ceil(ppc/2) electrons then floor(ppc/2) ions, weights chosen so each
/// cell is charge neutral (when it holds at least one ion). Momenta are drawn
/// per axis from N(0, (u_th m c)^2); u_th = 0 gives the frozen plasma.
inline std::vector<Particle> setup_plasma(const SimulationConfig& cfg) {
  const GridGeometry g = cfg.geometry();
  const auto species = cfg.species();
  const int ppc = cfg.particles_per_cell;
  std::vector<Particle> out;
  if (ppc <= 0) return out;
  out.reserve(g.num_cells() * static_cast<std::size_t>(ppc));

  const int n_electrons = (ppc + 1) / 2;
  const int n_ions = ppc - n_electrons;
  const double per_cell = cfg.density * g.cell_volume();
  const double w_electron = per_cell / n_electrons;
  const double w_ion = n_ions > 0 ? per_cell / n_ions : 0.0;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool thermal = cfg.thermal_momentum > 0.0;

  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        for (int p = 0; p < ppc; ++p) {
          Particle q;
          const bool electron = p < n_electrons;
          q.species = electron ? 0 : 1;
          q.weight = electron ? w_electron : w_ion;
          const double rx = unit(rng), ry = unit(rng), rz = unit(rng);
          q.position = g.wrap_position({g.origin.x + (i + rx) * g.spacing.x, g.origin.y + (j + ry) * g.spacing.y,
                                        g.origin.z + (k + rz) * g.spacing.z});
          if (thermal) {
            const double scale = cfg.thermal_momentum * species[static_cast<std::size_t>(q.species)].mass * cfg.c;
            const double ux = normal(rng), uy = normal(rng), uz = normal(rng);
            q.momentum = Vec3{ux, uy, uz} * scale;
          }
          out.push_back(q);
        }
  return out;
}

inline std::vector<Particle> setup_frozen_plasma(SimulationConfig cfg) {
  cfg.thermal_momentum = 0.0;
  return setup_plasma(cfg);
}

class Simulation {
 public:
  explicit Simulation(const SimulationConfig& cfg) : Simulation(cfg, setup_plasma(cfg)) {}

  Simulation(const SimulationConfig& cfg, std::vector<Particle> particles) : Simulation(cfg, std::move(particles), {}) {}

  /// Custom initial state; `initial_fields` (if given) must match the config's grid.
  Simulation(const SimulationConfig& cfg, std::vector<Particle> particles, const YeeGrid* initial_fields)
      : config_(checked(cfg)), species_(config_.species()), grid_(config_.geometry()) {
    if (initial_fields) {
      if (initial_fields->geometry.dims != grid_.geometry.dims)
        throw std::invalid_argument("initial fields do not match the configured grid");
      grid_ = *initial_fields;
      grid_.geometry = config_.geometry();
    }
    for (const auto& p : particles)
      if (p.species < 0 || static_cast<std::size_t>(p.species) >= species_.size())
        throw std::invalid_argument("particle species index out of range");

    const bool naive = config_.layout == Layout::naive;
    const unsigned threads = naive ? 1u : static_cast<unsigned>(config_.subdomains * config_.workers);
    pool_ = std::make_unique<WorkerPool>(threads);
    scratch_.resize(threads);
    for (auto& s : scratch_) s.resize(static_cast<std::size_t>(config_.chunk_size));

    if (naive) {
      for (const auto& p : particles)
        if (!grid_.geometry.contains(p.position)) throw std::out_of_range("particle outside domain");
      flat_ = std::move(particles);
    } else {
      store_ = build_store(grid_.geometry, config_.supercell_size, particles);
      setup_supercells();
    }
  }

  void step() {
    using clock = std::chrono::steady_clock;
    const auto t_begin = clock::now();
    double excluded = 0.0;
    StageTimings st;
    const double dt = config_.dt;
    const double c = config_.c;

    Field3 rho_old;
    if (track_continuity_) {
      const auto t = clock::now();
      rho_old = charge_density();
      excluded += seconds(clock::now() - t);
    }

    try {
      auto t = clock::now();
      advance_b_half(grid_, dt, c, pool_.get());
      if (config_.layout == Layout::supercell)
        pool_->parallel_for(windows_.size(), [&](std::size_t sd, unsigned) { windows_[sd].exchange(grid_); });
      st.other += seconds(clock::now() - t);

      if (config_.layout == Layout::naive)
        particle_phase_naive(st);
      else
        particle_phase_supercell(st);

      t = clock::now();
      if (config_.layout == Layout::naive) {
        for (auto& p : flat_) p.position = grid_.geometry.wrap_position(p.position);
      } else {
        last_migrations_ = migrator_.migrate(store_, pool_.get());
      }
      advance_b_half(grid_, dt, c, pool_.get());
      advance_e(grid_, dt, c, pool_.get());
      st.other += seconds(clock::now() - t);
    } catch (const std::exception& e) {
      throw SimulationError("step " + std::to_string(step_index_) + ": " + e.what());
    }

    if (track_continuity_) {
      const auto t = clock::now();
      last_residual_ = continuity_residual(rho_old, charge_density(), grid_, dt);
      excluded += seconds(clock::now() - t);
    }

    const auto t = clock::now();
    grid_.zero_current();
    st.other += seconds(clock::now() - t);

    st.overall = std::max(seconds(clock::now() - t_begin) - excluded,
                          st.particle_push + st.current_deposition + st.other);
    timings_ += st;
    ++step_index_;
  }

  void run(int steps) {
    for (int s = 0; s < steps; ++s) step();
  }

  const SimulationConfig& config() const { return config_; }
  const std::vector<Species>& species() const { return species_; }
  const YeeGrid& grid() const { return grid_; }
  YeeGrid& grid() { return grid_; }
  const StageTimings& timings() const { return timings_; }
  int step_index() const { return step_index_; }
  std::size_t last_migrations() const { return last_migrations_; }

  /// Particles in storage order: flat list order, or cell order for supercells.
  std::vector<Particle> particles() const {
    return config_.layout == Layout::naive ? flat_ : store_.flatten();
  }
  std::size_t particle_count() const {
    return config_.layout == Layout::naive ? flat_.size() : store_.total_particles();
  }
  const SupercellStore& store() const { return store_; }
  const ChessboardSchedule& schedule() const { return schedule_; }
  const FlushPlan& flush_plan() const { return flush_plan_; }

  Field3 charge_density() const {
    return config_.layout == Layout::naive ? deposit_charge_cic(flat_, grid_.geometry, species_)
                                           : deposit_charge_cic(store_, species_);
  }

  /// When on, each step measures its continuity residual (outside the timers).
  void set_track_continuity(bool on) { track_continuity_ = on; }
  double last_continuity_residual() const { return last_residual_; }

  /// FNV-1a over every field array and particle record in storage order.
  std::uint64_t checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const std::byte* p, std::size_t n) {
      for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<std::uint64_t>(p[i]);
        h *= 1099511628211ull;
      }
    };
    for (const Field3* f : {&grid_.ex, &grid_.ey, &grid_.ez, &grid_.bx, &grid_.by, &grid_.bz, &grid_.jx, &grid_.jy,
                            &grid_.jz})
      mix(reinterpret_cast<const std::byte*>(f->data()), f->size() * sizeof(double));
    auto mix_particle = [&](const Particle& p) {
      const auto bytes = serialize(p);
      mix(bytes.data(), bytes.size());
    };
    if (config_.layout == Layout::naive)
      for (const auto& p : flat_) mix_particle(p);
    else
      store_.for_each_particle(mix_particle);
    return h;
  }

 private:
  struct Scratch {
    std::vector<Vec3> positions;
    std::vector<Vec3> old_positions;
    std::vector<GatheredFields> aux;
    double push_seconds = 0.0;
    double deposit_seconds = 0.0;

    void resize(std::size_t n) {
      positions.resize(n);
      old_positions.resize(n);
      aux.resize(n);
    }
  };

  static SimulationConfig checked(const SimulationConfig& cfg) {
    auto v = validate_config(cfg);
    if (!v.ok()) throw ConfigError(std::move(v.errors));
    return cfg;
  }

  template <class Duration>
  static double seconds(Duration d) {
    return std::chrono::duration<double>(d).count();
  }

  void setup_supercells() {
    schedule_ = chessboard_schedule(store_);
    flush_plan_ = make_flush_plan(store_, schedule_);
    migrator_ = Migrator(store_.num_cells());

    // Subdomains are contiguous runs of supercell layers along z.
    const int layers = store_.counts()[2];
    const int nsd = config_.subdomains;
    const int S = config_.supercell_size;
    const int nz = grid_.geometry.dims[2];
    std::vector<int> owner_of_layer(static_cast<std::size_t>(layers));
    windows_.clear();
    for (int sd = 0; sd < nsd; ++sd) {
      const int lo = sd * layers / nsd;
      const int hi = (sd + 1) * layers / nsd;
      for (int l = lo; l < hi; ++l) owner_of_layer[static_cast<std::size_t>(l)] = sd;
      windows_.emplace_back(grid_.geometry, lo * S, std::min(hi * S, nz));
    }
    owner_.resize(store_.num_supercells());
    slot_.resize(store_.num_supercells());
    std::size_t max_color = 0;
    std::size_t max_volume = 0;
    for (int color = 0; color < 8; ++color) {
      const auto& ids = schedule_.colors[static_cast<std::size_t>(color)];
      max_color = std::max(max_color, ids.size());
      team_items_[static_cast<std::size_t>(color)].assign(static_cast<std::size_t>(nsd), {});
      for (std::size_t s = 0; s < ids.size(); ++s) {
        const std::size_t id = ids[s];
        slot_[id] = s;
        owner_[id] = owner_of_layer[static_cast<std::size_t>(store_.supercell_coords(id)[2])];
        team_items_[static_cast<std::size_t>(color)][static_cast<std::size_t>(owner_[id])].push_back(id);
        max_volume = std::max(max_volume, store_.write_region(id).volume());
      }
      auto& groups = flush_items_[static_cast<std::size_t>(color)];
      groups.clear();
      for (const auto& group : flush_plan_.groups[static_cast<std::size_t>(color)]) {
        std::vector<std::vector<std::size_t>> per_team(static_cast<std::size_t>(nsd));
        for (std::size_t id : group) per_team[static_cast<std::size_t>(owner_[id])].push_back(id);
        groups.push_back(std::move(per_team));
      }
    }
    tile_stride_ = 3 * max_volume;
    tiles_.assign(max_color * tile_stride_, 0.0);
  }

  TileCurrentSink tile(std::size_t id) {
    return TileCurrentSink(tiles_.data() + slot_[id] * tile_stride_, store_.write_region(id));
  }

  template <class Source, class Sink>
  void process_particles(std::span<Particle> parts, const Source& src, Sink& sink, Scratch& s) {
    using clock = std::chrono::steady_clock;
    const GridGeometry& g = grid_.geometry;
    const double dt = config_.dt;
    const double c = config_.c;
    const auto chunk = static_cast<std::size_t>(config_.chunk_size);
    const bool chunked = config_.interpolation == Interpolation::chunked;
    for (std::size_t start = 0; start < parts.size(); start += chunk) {
      const std::size_t n = std::min(chunk, parts.size() - start);
      const auto t0 = clock::now();
      if (chunked) {
        for (std::size_t p = 0; p < n; ++p) s.positions[p] = parts[start + p].position;
        gather_fields_chunked(src, std::span<const Vec3>(s.positions.data(), n),
                              std::span<GatheredFields>(s.aux.data(), n));
      } else {
        for (std::size_t p = 0; p < n; ++p) s.aux[p] = gather_fields(src, parts[start + p].position);
      }
      for (std::size_t p = 0; p < n; ++p) {
        Particle& q = parts[start + p];
        const Species& sp = species_[static_cast<std::size_t>(q.species)];
        q.momentum = boris_push(q.momentum, s.aux[p], sp, dt, c);
        s.aux[p].inv_gamma = inverse_gamma(q.momentum, sp.mass * c);
        s.old_positions[p] = q.position;
        q.position = advance_position(q.position, q.momentum, s.aux[p].inv_gamma, sp.mass, dt);
      }
      const auto t1 = clock::now();
      for (std::size_t p = 0; p < n; ++p) {
        const Particle& q = parts[start + p];
        deposit_move(sink, g, s.old_positions[p], q.position,
                     species_[static_cast<std::size_t>(q.species)].charge * q.weight, dt);
      }
      const auto t2 = clock::now();
      s.push_seconds += seconds(t1 - t0);
      s.deposit_seconds += seconds(t2 - t1);
    }
  }

  void particle_phase_naive(StageTimings& st) {
    Scratch& s = scratch_[0];
    s.push_seconds = s.deposit_seconds = 0.0;
    GridCurrentSink sink(grid_);
    process_particles(std::span<Particle>(flat_), GridFieldSource(grid_), sink, s);
    st.particle_push += s.push_seconds;
    st.current_deposition += s.deposit_seconds;
  }

  void process_supercell(std::size_t id, unsigned thread) {
    const FieldWindow& src = windows_[static_cast<std::size_t>(owner_[id])];
    TileCurrentSink sink = tile(id);
    sink.zero();
    const CellBox b = store_.cells_of(id);
    const GridGeometry& g = grid_.geometry;
    for (int k = b.lo[2]; k < b.hi[2]; ++k)
      for (int j = b.lo[1]; j < b.hi[1]; ++j)
        for (int i = b.lo[0]; i < b.hi[0]; ++i)
          process_particles(std::span<Particle>(store_.cell(g.index(i, j, k))), src, sink, scratch_[thread]);
  }

  void particle_phase_supercell(StageTimings& st) {
    using clock = std::chrono::steady_clock;
    const auto team = static_cast<unsigned>(config_.workers);
    for (std::size_t color = 0; color < 8; ++color) {
      for (auto& s : scratch_) s.push_seconds = s.deposit_seconds = 0.0;
      const auto t0 = clock::now();
      run_partitioned(*pool_, team, team_items_[color],
                      [&](std::size_t id, unsigned thread) { process_supercell(id, thread); });
      const double wall = seconds(clock::now() - t0);
      double push = 0.0, dep = 0.0;
      for (const auto& s : scratch_) {
        push += s.push_seconds;
        dep += s.deposit_seconds;
      }
      // Workers interleave both stages; split the phase wall time by their
      // summed per-stage busy time.
      if (push + dep > 0.0) {
        st.particle_push += wall * push / (push + dep);
        st.current_deposition += wall * dep / (push + dep);
      } else {
        st.other += wall;
      }

      const auto t1 = clock::now();
      for (const auto& group : flush_items_[color])
        run_partitioned(*pool_, team, group, [&](std::size_t id, unsigned) { tile(id).flush(grid_); });
      st.current_deposition += seconds(clock::now() - t1);
    }
  }

  SimulationConfig config_;
  std::vector<Species> species_;
  YeeGrid grid_;
  std::unique_ptr<WorkerPool> pool_;
  std::vector<Scratch> scratch_;

  std::vector<Particle> flat_;

  SupercellStore store_;
  ChessboardSchedule schedule_;
  FlushPlan flush_plan_;
  Migrator migrator_;
  std::vector<FieldWindow> windows_;
  std::vector<int> owner_;
  std::vector<std::size_t> slot_;
  std::array<std::vector<std::vector<std::size_t>>, 8> team_items_;
  std::array<std::vector<std::vector<std::vector<std::size_t>>>, 8> flush_items_;
  std::vector<double> tiles_;
  std::size_t tile_stride_ = 0;

  StageTimings timings_;
  int step_index_ = 0;
  std::size_t last_migrations_ = 0;
  bool track_continuity_ = false;
  double last_residual_ = 0.0;
};

}  // namespace scpic
