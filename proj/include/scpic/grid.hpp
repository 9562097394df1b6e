#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "scpic/vec3.hpp"

namespace scpic {

using Index3 = std::array<int, 3>;

/// Periodic box of nx*ny*nz cells. Node (i,j,k) sits at origin + (i*dx, j*dy, k*dz).
struct GridGeometry {
  Index3 dims{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{};

  std::size_t num_cells() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }
  double cell_volume() const { return spacing.x * spacing.y * spacing.z; }
  double length(int axis) const { return dims[axis] * spacing[axis]; }

  /// Linear index of an in-range node/cell, x fastest.
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
  }

  /// Wraps an index that may be off by a few periods.
  int wrap(int i, int axis) const {
    const int n = dims[axis];
    i %= n;
    return i < 0 ? i + n : i;
  }

  std::size_t wrapped_index(int i, int j, int k) const { return index(wrap(i, 0), wrap(j, 1), wrap(k, 2)); }

  /// Position in cell units, (x - origin) / spacing per axis.
  Vec3 to_cell_units(const Vec3& position) const {
    return {(position.x - origin.x) / spacing.x, (position.y - origin.y) / spacing.y,
            (position.z - origin.z) / spacing.z};
  }

  /// Containing cell with half-open [i, i+1) ownership, clamped into range.
  /// Expects a position already inside the periodic box.
  Index3 cell_of(const Vec3& position) const {
    const Vec3 u = to_cell_units(position);
    Index3 c{};
    for (int a = 0; a < 3; ++a) {
      int i = static_cast<int>(std::floor(u[a]));
      if (i < 0) i = 0;
      if (i >= dims[a]) i = dims[a] - 1;
      c[a] = i;
    }
    return c;
  }

  bool contains(const Vec3& position) const {
    for (int a = 0; a < 3; ++a) {
      const double lo = origin[a];
      const double hi = origin[a] + length(a);
      if (!(position[a] >= lo && position[a] < hi)) return false;
    }
    return true;
  }

  /// Maps a position back into [origin, origin + L) on every axis.
  Vec3 wrap_position(Vec3 p) const {
    for (int a = 0; a < 3; ++a) {
      const double lo = origin[a];
      const double len = length(a);
      double v = p[a];
      if (v < lo || v >= lo + len) {
        v = lo + std::fmod(v - lo, len);
        if (v < lo) v += len;
        if (v >= lo + len) v = lo;
      }
      p[a] = v;
    }
    return p;
  }
};

/// Scalar lattice with periodic extents equal to the grid dims.
class Field3 {
 public:
  Field3() = default;
  explicit Field3(const GridGeometry& g) : dims_(g.dims), data_(g.num_cells(), 0.0) {}

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::size_t size() const { return data_.size(); }
  const Index3& dims() const { return dims_; }

  void fill(double v) { data_.assign(data_.size(), v); }

  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  friend bool operator==(const Field3&, const Field3&) = default;

 private:
  Index3 dims_{0, 0, 0};
  std::vector<double> data_;
};

enum class Component { Ex = 0, Ey, Ez, Bx, By, Bz };

inline constexpr std::array<Component, 6> kFieldComponents{Component::Ex, Component::Ey, Component::Ez,
                                                           Component::Bx, Component::By, Component::Bz};

/// Yee stagger offset in cells: E on edges, B on faces.
constexpr std::array<double, 3> stagger(Component c) {
  switch (c) {
    case Component::Ex: return {0.5, 0.0, 0.0};
    case Component::Ey: return {0.0, 0.5, 0.0};
    case Component::Ez: return {0.0, 0.0, 0.5};
    case Component::Bx: return {0.0, 0.5, 0.5};
    case Component::By: return {0.5, 0.0, 0.5};
    case Component::Bz: return {0.5, 0.5, 0.0};
  }
  return {0.0, 0.0, 0.0};
}

/// E, B and J on a standard Yee lattice with periodic wrap.
/// J is colocated with E.
struct YeeGrid {
  GridGeometry geometry;
  Field3 ex, ey, ez;
  Field3 bx, by, bz;
  Field3 jx, jy, jz;

  YeeGrid() = default;
  explicit YeeGrid(const GridGeometry& g)
      : geometry(g), ex(g), ey(g), ez(g), bx(g), by(g), bz(g), jx(g), jy(g), jz(g) {}

  Field3& field(Component c) {
    switch (c) {
      case Component::Ex: return ex;
      case Component::Ey: return ey;
      case Component::Ez: return ez;
      case Component::Bx: return bx;
      case Component::By: return by;
      case Component::Bz: return bz;
    }
    throw std::logic_error("bad component");
  }
  const Field3& field(Component c) const { return const_cast<YeeGrid&>(*this).field(c); }

  /// Physical origin of a component's staggered sub-lattice.
  Vec3 component_origin(Component c) const {
    const auto s = stagger(c);
    return {geometry.origin.x + s[0] * geometry.spacing.x, geometry.origin.y + s[1] * geometry.spacing.y,
            geometry.origin.z + s[2] * geometry.spacing.z};
  }

  void zero_current() {
    jx.fill(0.0);
    jy.fill(0.0);
    jz.fill(0.0);
  }

  bool all_finite() const {
    for (const Field3* f : {&ex, &ey, &ez, &bx, &by, &bz, &jx, &jy, &jz})
      for (double v : *f)
        if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const YeeGrid& a, const YeeGrid& b) {
    return a.ex == b.ex && a.ey == b.ey && a.ez == b.ez && a.bx == b.bx && a.by == b.by && a.bz == b.bz &&
           a.jx == b.jx && a.jy == b.jy && a.jz == b.jz;
  }
};

}  // namespace scpic
