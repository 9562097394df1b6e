#pragma once

// Particle storage binned per cell and grouped into cubic S x S x S supercells,
// the 8-color chessboard schedule, conflict-free flush groups for the
// per-supercell current tiles, and migration between cells.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scpic/config.hpp"
#include "scpic/grid.hpp"
#include "scpic/kernels.hpp"
#include "scpic/particle.hpp"
#include "scpic/worker_pool.hpp"

namespace scpic {

/// Half-open box of cells [lo, hi).
struct CellBox {
  Index3 lo{};
  Index3 hi{};

  Index3 extent() const { return {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]}; }
};

/// Nodes a supercell's kernel may write: its cells' nodes plus a one-cell halo
/// on every side, i.e. nodes [lo - 1, hi + 1] inclusive. Indices are unwrapped.
struct NodeBox {
  Index3 lo{};
  Index3 extent{};

  std::size_t volume() const {
    return static_cast<std::size_t>(extent[0]) * static_cast<std::size_t>(extent[1]) *
           static_cast<std::size_t>(extent[2]);
  }
};

class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SupercellStore {
 public:
  SupercellStore() = default;

  SupercellStore(const GridGeometry& g, int supercell_size)
      : geometry_(g), size_(supercell_size), cells_(g.num_cells()) {
    if (supercell_size < 1) throw std::invalid_argument("supercell size must be >= 1");
    counts_ = supercell_counts(g.dims, supercell_size);
  }

  const GridGeometry& geometry() const { return geometry_; }
  int supercell_size() const { return size_; }
  const Index3& counts() const { return counts_; }
  std::size_t num_supercells() const {
    return static_cast<std::size_t>(counts_[0]) * static_cast<std::size_t>(counts_[1]) *
           static_cast<std::size_t>(counts_[2]);
  }

  Index3 supercell_coords(std::size_t id) const {
    const auto n0 = static_cast<std::size_t>(counts_[0]);
    const auto n1 = static_cast<std::size_t>(counts_[1]);
    return {static_cast<int>(id % n0), static_cast<int>((id / n0) % n1), static_cast<int>(id / (n0 * n1))};
  }
  std::size_t supercell_id(const Index3& s) const {
    return static_cast<std::size_t>(s[0]) +
           static_cast<std::size_t>(counts_[0]) *
               (static_cast<std::size_t>(s[1]) + static_cast<std::size_t>(counts_[1]) * static_cast<std::size_t>(s[2]));
  }

  /// Cells covered by a supercell; the last one along an axis may be partial.
  CellBox cells_of(std::size_t id) const {
    const Index3 s = supercell_coords(id);
    CellBox b;
    for (int a = 0; a < 3; ++a) {
      b.lo[a] = s[a] * size_;
      b.hi[a] = std::min(b.lo[a] + size_, geometry_.dims[a]);
    }
    return b;
  }

  NodeBox write_region(std::size_t id) const {
    const CellBox b = cells_of(id);
    NodeBox r;
    for (int a = 0; a < 3; ++a) {
      r.lo[a] = b.lo[a] - 1;
      r.extent[a] = b.hi[a] - b.lo[a] + 3;
    }
    return r;
  }

  /// Parity color of a supercell, 0..7.
  int color(std::size_t id) const {
    const Index3 s = supercell_coords(id);
    return (s[0] & 1) | ((s[1] & 1) << 1) | ((s[2] & 1) << 2);
  }

  std::array<std::size_t, 8> color_counts() const {
    std::array<std::size_t, 8> out{};
    for (std::size_t id = 0; id < num_supercells(); ++id) ++out[color(id)];
    return out;
  }

  std::vector<Particle>& cell(std::size_t index) { return cells_[index]; }
  const std::vector<Particle>& cell(std::size_t index) const { return cells_[index]; }
  std::size_t num_cells() const { return cells_.size(); }

  std::size_t total_particles() const {
    std::size_t n = 0;
    for (const auto& c : cells_) n += c.size();
    return n;
  }

  /// Appends a particle to the cell containing it.
  void insert(const Particle& p) {
    if (!geometry_.contains(p.position))
      throw std::out_of_range("particle outside domain at (" + std::to_string(p.position.x) + ", " +
                              std::to_string(p.position.y) + ", " + std::to_string(p.position.z) + ")");
    const Index3 c = geometry_.cell_of(p.position);
    cells_[geometry_.index(c[0], c[1], c[2])].push_back(p);
  }

  /// Visits particles in cell-index order, in-cell order preserved.
  template <class F>
  void for_each_particle(F&& f) const {
    for (const auto& c : cells_)
      for (const auto& p : c) f(p);
  }

  std::vector<Particle> flatten() const {
    std::vector<Particle> out;
    out.reserve(total_particles());
    for_each_particle([&](const Particle& p) { out.push_back(p); });
    return out;
  }

 private:
  friend class Migrator;

  GridGeometry geometry_;
  int size_ = 1;
  Index3 counts_{1, 1, 1};
  std::vector<std::vector<Particle>> cells_;
};

/// Bins particles by containing cell. Throws std::out_of_range for a particle
/// outside the domain.
inline SupercellStore build_store(const GridGeometry& g, int supercell_size, std::span<const Particle> particles) {
  SupercellStore store(g, supercell_size);
  for (const auto& p : particles) store.insert(p);
  return store;
}

/// Supercells by color, ids ascending within each color.
struct ChessboardSchedule {
  std::array<std::vector<std::size_t>, 8> colors;
};

/// Splits supercells into 8 parity classes. Under periodic wrap this needs an
/// even supercell count on every axis.
inline ChessboardSchedule chessboard_schedule(const SupercellStore& store) {
  const Index3& n = store.counts();
  if (n[0] % 2 || n[1] % 2 || n[2] % 2)
    throw ScheduleError("chessboard schedule needs an even supercell count per axis, got " + std::to_string(n[0]) +
                        "x" + std::to_string(n[1]) + "x" + std::to_string(n[2]) +
                        "; pad the grid or pick a supercell size that tiles it into an even count");
  ChessboardSchedule s;
  for (std::size_t id = 0; id < store.num_supercells(); ++id) s.colors[store.color(id)].push_back(id);
  return s;
}

/// Number of supercells per color for a parity coloring of the given tiling,
/// whether or not the counts are even.
inline std::array<std::size_t, 8> parity_color_counts(const Index3& counts) {
  std::array<std::size_t, 8> out{};
  for (int c = 0; c < 8; ++c) {
    std::size_t n = 1;
    for (int a = 0; a < 3; ++a) {
      const int parity = (c >> a) & 1;
      n *= static_cast<std::size_t>(parity == 0 ? (counts[a] + 1) / 2 : counts[a] / 2);
    }
    out[c] = n;
  }
  return out;
}

namespace detail {

// Two cyclic node ranges [a, a+la) and [b, b+lb) modulo n intersect.
inline bool cyclic_overlap(int a, int la, int b, int lb, int n) {
  if (la >= n || lb >= n) return true;
  const int ab = ((b - a) % n + n) % n;
  const int ba = ((a - b) % n + n) % n;
  return ab < la || ba < lb;
}

}  // namespace detail

inline bool regions_overlap(const NodeBox& a, const NodeBox& b, const Index3& dims) {
  for (int ax = 0; ax < 3; ++ax)
    if (!detail::cyclic_overlap(a.lo[ax], a.extent[ax], b.lo[ax], b.extent[ax], dims[ax])) return false;
  return true;
}

/// For each color, supercells grouped so that no two tiles in a group write the
/// same grid node. Same-color write regions are disjoint when S >= 3 (one group
/// per color); smaller supercells overlap their same-color neighbours on one
/// node plane and get split greedily, in ascending id order.
struct FlushPlan {
  std::array<std::vector<std::vector<std::size_t>>, 8> groups;
};

inline FlushPlan make_flush_plan(const SupercellStore& store, const ChessboardSchedule& schedule) {
  FlushPlan plan;
  const Index3& n = store.counts();
  const Index3& dims = store.geometry().dims;
  std::vector<int> group_of(store.num_supercells(), -1);
  for (int color = 0; color < 8; ++color) {
    auto& groups = plan.groups[color];
    for (std::size_t id : schedule.colors[color]) {
      const NodeBox r = store.write_region(id);
      const Index3 s = store.supercell_coords(id);
      std::vector<bool> taken;
      // Same-color candidates lie at even offsets; beyond +-4 regions cannot meet.
      for (int dz = -4; dz <= 4; dz += 2)
        for (int dy = -4; dy <= 4; dy += 2)
          for (int dx = -4; dx <= 4; dx += 2) {
            const Index3 o{((s[0] + dx) % n[0] + n[0]) % n[0], ((s[1] + dy) % n[1] + n[1]) % n[1],
                           ((s[2] + dz) % n[2] + n[2]) % n[2]};
            const std::size_t other = store.supercell_id(o);
            if (other == id || group_of[other] < 0) continue;
            if (!regions_overlap(r, store.write_region(other), dims)) continue;
            const auto g = static_cast<std::size_t>(group_of[other]);
            if (taken.size() <= g) taken.resize(g + 1, false);
            taken[g] = true;
          }
      std::size_t g = 0;
      while (g < taken.size() && taken[g]) ++g;
      if (g == groups.size()) groups.emplace_back();
      groups[g].push_back(id);
      group_of[id] = static_cast<int>(g);
    }
  }
  return plan;
}

/// Applies kernel(supercell_id, worker) to every supercell of one color. Write
/// regions of concurrently running kernels must not overlap; results are then
/// independent of worker count and completion order.
template <class Kernel>
void process_color(const ChessboardSchedule& schedule, int color, Kernel&& kernel, WorkerPool* pool = nullptr) {
  const auto& ids = schedule.colors[static_cast<std::size_t>(color)];
  if (pool)
    pool->parallel_for(ids.size(), [&](std::size_t i, unsigned worker) { kernel(ids[i], worker); });
  else
    for (std::size_t id : ids) kernel(id, 0u);
}

/// Runs items split among teams: team t owns per_team[t] and is served by
/// threads [t*team_size, (t+1)*team_size) of the pool. body(item, thread).
template <class Body>
void run_partitioned(WorkerPool& pool, unsigned team_size, const std::vector<std::vector<std::size_t>>& per_team,
                     Body&& body) {
  std::size_t total = 0;
  for (const auto& v : per_team) total += v.size();
  if (total == 0) return;
  if (pool.size() == 1) {
    for (const auto& v : per_team)
      for (std::size_t item : v) body(item, 0u);
    return;
  }
  std::vector<std::atomic<std::size_t>> next(per_team.size());
  for (auto& n : next) n.store(0, std::memory_order_relaxed);
  pool.run([&](unsigned thread) {
    const std::size_t team = thread / team_size;
    if (team >= per_team.size()) return;
    const auto& items = per_team[team];
    for (std::size_t i = next[team].fetch_add(1, std::memory_order_relaxed); i < items.size();
         i = next[team].fetch_add(1, std::memory_order_relaxed))
      body(items[i], thread);
  });
}

/// Re-bins particles after a push. Survivors keep their relative order; movers
/// are appended to their new cells scanning source cells in index order.
class Migrator {
 public:
  explicit Migrator(std::size_t num_cells = 0) : outbox_(num_cells) {}

  /// Returns the number of particles that changed cell. Throws CflBreach-like
  /// std::runtime_error when a particle jumped more than one cell.
  std::size_t migrate(SupercellStore& store, WorkerPool* pool = nullptr) {
    if (outbox_.size() != store.num_cells()) outbox_.assign(store.num_cells(), {});
    const GridGeometry& g = store.geometry_;
    auto split_cell = [&](std::size_t ci, unsigned) {
      auto& parts = store.cells_[ci];
      auto& out = outbox_[ci];
      out.clear();
      const Index3 here{static_cast<int>(ci % static_cast<std::size_t>(g.dims[0])),
                        static_cast<int>((ci / static_cast<std::size_t>(g.dims[0])) % static_cast<std::size_t>(g.dims[1])),
                        static_cast<int>(ci / (static_cast<std::size_t>(g.dims[0]) * static_cast<std::size_t>(g.dims[1])))};
      std::size_t keep = 0;
      for (std::size_t p = 0; p < parts.size(); ++p) {
        const Particle& q = parts[p];
        if (g.contains(q.position) && g.cell_of(q.position) == here) {
          if (keep != p) parts[keep] = q;
          ++keep;
        } else {
          out.push_back(q);
        }
      }
      parts.resize(keep);
    };
    if (pool)
      pool->parallel_for(store.cells_.size(), split_cell);
    else
      for (std::size_t ci = 0; ci < store.cells_.size(); ++ci) split_cell(ci, 0u);

    std::size_t moved = 0;
    for (std::size_t ci = 0; ci < outbox_.size(); ++ci) {
      const Index3 from{static_cast<int>(ci % static_cast<std::size_t>(g.dims[0])),
                        static_cast<int>((ci / static_cast<std::size_t>(g.dims[0])) % static_cast<std::size_t>(g.dims[1])),
                        static_cast<int>(ci / (static_cast<std::size_t>(g.dims[0]) * static_cast<std::size_t>(g.dims[1])))};
      for (Particle p : outbox_[ci]) {
        if (!is_finite(p.position)) throw std::runtime_error("migrate: non-finite particle position");
        p.position = g.wrap_position(p.position);
        const Index3 to = g.cell_of(p.position);
        for (int a = 0; a < 3; ++a) {
          const int n = g.dims[a];
          const int d = ((to[a] - from[a]) % n + n) % n;
          if (d > 1 && d < n - 1)
            throw std::runtime_error("migrate: particle moved " + std::to_string(std::min(d, n - d)) +
                                     " cells along axis " + std::to_string(a) + " in one step");
        }
        store.cells_[g.index(to[0], to[1], to[2])].push_back(p);
        ++moved;
      }
      outbox_[ci].clear();
    }
    return moved;
  }

 private:
  std::vector<std::vector<Particle>> outbox_;
};

inline std::size_t migrate(SupercellStore& store, WorkerPool* pool = nullptr) {
  Migrator m(store.num_cells());
  return m.migrate(store, pool);
}

// ---------------------------------------------------------------------------
// Per-supercell current tiles and subdomain field windows
// ---------------------------------------------------------------------------

/// Private current buffer covering a supercell's write region.
class TileCurrentSink {
 public:
  TileCurrentSink(double* data, const NodeBox& region) : data_(data), region_(region), volume_(region.volume()) {}

  void zero() { std::fill(data_, data_ + 3 * volume_, 0.0); }

  void add(int comp, int i, int j, int k, double v) { data_[comp * volume_ + local(i, j, k)] += v; }

  /// Adds the tile into the grid's J with periodic wrap, in fixed order.
  void flush(YeeGrid& grid) const {
    const GridGeometry& g = grid.geometry;
    double* j[3] = {grid.jx.data(), grid.jy.data(), grid.jz.data()};
    const Index3& e = region_.extent;
    for (int comp = 0; comp < 3; ++comp) {
      const double* src = data_ + comp * volume_;
      std::size_t n = 0;
      for (int k = 0; k < e[2]; ++k) {
        const int gk = g.wrap(region_.lo[2] + k, 2);
        for (int jj = 0; jj < e[1]; ++jj) {
          const int gj = g.wrap(region_.lo[1] + jj, 1);
          for (int i = 0; i < e[0]; ++i, ++n) j[comp][g.index(g.wrap(region_.lo[0] + i, 0), gj, gk)] += src[n];
        }
      }
    }
  }

  const NodeBox& region() const { return region_; }

 private:
  std::size_t local(int i, int j, int k) const {
    return static_cast<std::size_t>(i - region_.lo[0]) +
           static_cast<std::size_t>(region_.extent[0]) *
               (static_cast<std::size_t>(j - region_.lo[1]) +
                static_cast<std::size_t>(region_.extent[1]) * static_cast<std::size_t>(k - region_.lo[2]));
  }

  double* data_;
  NodeBox region_;
  std::size_t volume_;
};

/// Copy of E and B for one z-slab subdomain plus ghost planes: one below, two
/// above (the second absorbs positions that round onto the upper domain face).
/// Serves as a field source for gather_fields with the same values as the
/// global grid.
class FieldWindow {
 public:
  FieldWindow(const GridGeometry& g, int k_begin, int k_end)
      : geometry_(g), k_first_(k_begin - 1), planes_(k_end - k_begin + 3) {
    const std::size_t plane = static_cast<std::size_t>(g.dims[0]) * static_cast<std::size_t>(g.dims[1]);
    for (auto& f : fields_) f.assign(plane * static_cast<std::size_t>(planes_), 0.0);
    for (auto c : kFieldComponents) {
      const auto s = stagger(c);
      origins_[static_cast<int>(c)] = {g.origin.x + s[0] * g.spacing.x, g.origin.y + s[1] * g.spacing.y,
                                       g.origin.z + s[2] * g.spacing.z};
    }
  }

  /// Ghost exchange: refreshes owned and ghost planes from the global grid.
  void exchange(const YeeGrid& grid) {
    const std::size_t plane = static_cast<std::size_t>(geometry_.dims[0]) * static_cast<std::size_t>(geometry_.dims[1]);
    for (auto c : kFieldComponents) {
      const double* src = grid.field(c).data();
      double* dst = fields_[static_cast<int>(c)].data();
      for (int p = 0; p < planes_; ++p) {
        const int k = geometry_.wrap(k_first_ + p, 2);
        std::copy_n(src + plane * static_cast<std::size_t>(k), plane, dst + plane * static_cast<std::size_t>(p));
      }
    }
  }

  const GridGeometry& geometry() const { return geometry_; }
  const Vec3& component_origin(Component c) const { return origins_[static_cast<int>(c)]; }
  const double* data(Component c) const { return fields_[static_cast<int>(c)].data(); }

  std::size_t offset_x(int i) const { return static_cast<std::size_t>(detail::wrap_near(i, geometry_.dims[0])); }
  std::size_t offset_y(int j) const {
    return static_cast<std::size_t>(detail::wrap_near(j, geometry_.dims[1])) *
           static_cast<std::size_t>(geometry_.dims[0]);
  }
  std::size_t offset_z(int k) const {
    return static_cast<std::size_t>(k - k_first_) * static_cast<std::size_t>(geometry_.dims[0]) *
           static_cast<std::size_t>(geometry_.dims[1]);
  }

  int first_plane() const { return k_first_; }
  int num_planes() const { return planes_; }

 private:
  GridGeometry geometry_;
  int k_first_;
  int planes_;
  std::array<std::vector<double>, 6> fields_;
  std::array<Vec3, 6> origins_{};
};

}  // namespace scpic
