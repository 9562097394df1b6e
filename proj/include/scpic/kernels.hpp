#pragma once

// Per-particle stages: cloud-in-cell field gather (scalar and chunked),
// relativistic Boris push, position update, and Villasenor-Buneman
// charge-conserving current deposition.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "scpic/grid.hpp"
#include "scpic/particle.hpp"
#include "scpic/vec3.hpp"

namespace scpic {

// ---------------------------------------------------------------------------
// Cloud-in-cell weights
// ---------------------------------------------------------------------------

/// Trilinear weights over the 8 nodes of the sub-lattice cell holding a point.
/// w[a + 2*b + 4*c] belongs to node base + (a, b, c).
struct CicWeights {
  Index3 base{};
  std::array<double, 8> w{};
};

namespace detail {

inline void axis_weights(double x, double origin, double h, int& base, double& w0, double& w1) {
  const double u = (x - origin) / h;
  const double fl = std::floor(u);
  base = static_cast<int>(fl);
  const double f = u - fl;
  w0 = 1.0 - f;
  w1 = f;
}

inline int wrap_near(int i, int n) {
  if (i < 0) return i + n;
  if (i >= n) return i - n;
  return i;
}

}  // namespace detail

inline CicWeights cic_weights(const Vec3& position, const Vec3& component_origin, const Vec3& spacing) {
  CicWeights out;
  double wx[2], wy[2], wz[2];
  detail::axis_weights(position.x, component_origin.x, spacing.x, out.base[0], wx[0], wx[1]);
  detail::axis_weights(position.y, component_origin.y, spacing.y, out.base[1], wy[0], wy[1]);
  detail::axis_weights(position.z, component_origin.z, spacing.z, out.base[2], wz[0], wz[1]);
  for (int c = 0; c < 2; ++c)
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a) out.w[a + 2 * b + 4 * c] = wx[a] * wy[b] * wz[c];
  return out;
}

// ---------------------------------------------------------------------------
// Field sources
// ---------------------------------------------------------------------------

/// Read access to E and B of a full periodic grid. Node indices may be off by
/// one period in either direction.
class GridFieldSource {
 public:
  explicit GridFieldSource(const YeeGrid& grid) : grid_(&grid) {
    for (auto c : kFieldComponents) origins_[static_cast<int>(c)] = grid.component_origin(c);
  }

  const GridGeometry& geometry() const { return grid_->geometry; }
  const Vec3& component_origin(Component c) const { return origins_[static_cast<int>(c)]; }
  const double* data(Component c) const { return grid_->field(c).data(); }

  std::size_t offset_x(int i) const { return static_cast<std::size_t>(detail::wrap_near(i, dims()[0])); }
  std::size_t offset_y(int j) const {
    return static_cast<std::size_t>(detail::wrap_near(j, dims()[1])) * static_cast<std::size_t>(dims()[0]);
  }
  std::size_t offset_z(int k) const {
    return static_cast<std::size_t>(detail::wrap_near(k, dims()[2])) * static_cast<std::size_t>(dims()[0]) *
           static_cast<std::size_t>(dims()[1]);
  }

 private:
  const Index3& dims() const { return grid_->geometry.dims; }

  const YeeGrid* grid_;
  std::array<Vec3, 6> origins_{};
};

/// E and B at a particle position. The extra slot holds 1/gamma of the updated
/// momentum once the push has run, giving a 56-byte per-particle auxiliary block.
struct GatheredFields {
  Vec3 e;
  Vec3 b;
  double inv_gamma = 1.0;

  friend bool operator==(const GatheredFields&, const GatheredFields&) = default;
};

static_assert(sizeof(GatheredFields) == 56, "auxiliary block is 7 reals");

inline constexpr std::size_t kAuxBytes = sizeof(GatheredFields);

namespace detail {

template <class Source>
inline double interpolate_component(const Source& src, Component comp, const Vec3& pos) {
  const Vec3& o = src.component_origin(comp);
  const Vec3& h = src.geometry().spacing;
  int bx, by, bz;
  double wx[2], wy[2], wz[2];
  axis_weights(pos.x, o.x, h.x, bx, wx[0], wx[1]);
  axis_weights(pos.y, o.y, h.y, by, wy[0], wy[1]);
  axis_weights(pos.z, o.z, h.z, bz, wz[0], wz[1]);
  const std::size_t ox[2] = {src.offset_x(bx), src.offset_x(bx + 1)};
  const std::size_t oy[2] = {src.offset_y(by), src.offset_y(by + 1)};
  const std::size_t oz[2] = {src.offset_z(bz), src.offset_z(bz + 1)};
  const double* f = src.data(comp);
  double v = 0.0;
  for (int c = 0; c < 2; ++c)
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a) v += wx[a] * wy[b] * wz[c] * f[ox[a] + oy[b] + oz[c]];
  return v;
}

}  // namespace detail

/// Interpolates all six field components to one position, each on its own
/// staggered sub-lattice.
template <class Source>
GatheredFields gather_fields(const Source& src, const Vec3& position) {
  GatheredFields g;
  g.e.x = detail::interpolate_component(src, Component::Ex, position);
  g.e.y = detail::interpolate_component(src, Component::Ey, position);
  g.e.z = detail::interpolate_component(src, Component::Ez, position);
  g.b.x = detail::interpolate_component(src, Component::Bx, position);
  g.b.y = detail::interpolate_component(src, Component::By, position);
  g.b.z = detail::interpolate_component(src, Component::Bz, position);
  return g;
}

inline GatheredFields gather_fields(const YeeGrid& grid, const Vec3& position) {
  return gather_fields(GridFieldSource(grid), position);
}

inline constexpr std::size_t kDefaultChunk = 16;
inline constexpr std::size_t kMaxChunkBlock = 64;

/// Same values as gather_fields, bit for bit, computed over a block of
/// positions in structure-of-arrays form so each stage is a flat loop the
/// compiler can vectorize.
template <class Source>
void gather_fields_chunked(const Source& src, std::span<const Vec3> positions, std::span<GatheredFields> out) {
  if (out.size() < positions.size()) throw std::invalid_argument("gather_fields_chunked: output too small");
  const Vec3& h = src.geometry().spacing;

  alignas(64) double px[kMaxChunkBlock], py[kMaxChunkBlock], pz[kMaxChunkBlock];
  alignas(64) double wx0[kMaxChunkBlock], wx1[kMaxChunkBlock];
  alignas(64) double wy0[kMaxChunkBlock], wy1[kMaxChunkBlock];
  alignas(64) double wz0[kMaxChunkBlock], wz1[kMaxChunkBlock];
  alignas(64) double val[kMaxChunkBlock];
  int bx[kMaxChunkBlock], by[kMaxChunkBlock], bz[kMaxChunkBlock];
  std::size_t o[8][kMaxChunkBlock];

  for (std::size_t start = 0; start < positions.size(); start += kMaxChunkBlock) {
    const std::size_t n = std::min(kMaxChunkBlock, positions.size() - start);
    for (std::size_t p = 0; p < n; ++p) {
      px[p] = positions[start + p].x;
      py[p] = positions[start + p].y;
      pz[p] = positions[start + p].z;
    }
    for (auto comp : kFieldComponents) {
      const Vec3& org = src.component_origin(comp);
      const double* f = src.data(comp);
      for (std::size_t p = 0; p < n; ++p) detail::axis_weights(px[p], org.x, h.x, bx[p], wx0[p], wx1[p]);
      for (std::size_t p = 0; p < n; ++p) detail::axis_weights(py[p], org.y, h.y, by[p], wy0[p], wy1[p]);
      for (std::size_t p = 0; p < n; ++p) detail::axis_weights(pz[p], org.z, h.z, bz[p], wz0[p], wz1[p]);
      for (std::size_t p = 0; p < n; ++p) {
        const std::size_t x0 = src.offset_x(bx[p]), x1 = src.offset_x(bx[p] + 1);
        const std::size_t y0 = src.offset_y(by[p]), y1 = src.offset_y(by[p] + 1);
        const std::size_t z0 = src.offset_z(bz[p]), z1 = src.offset_z(bz[p] + 1);
        o[0][p] = x0 + y0 + z0;
        o[1][p] = x1 + y0 + z0;
        o[2][p] = x0 + y1 + z0;
        o[3][p] = x1 + y1 + z0;
        o[4][p] = x0 + y0 + z1;
        o[5][p] = x1 + y0 + z1;
        o[6][p] = x0 + y1 + z1;
        o[7][p] = x1 + y1 + z1;
      }
      for (std::size_t p = 0; p < n; ++p) {
        double v = 0.0;
        v += wx0[p] * wy0[p] * wz0[p] * f[o[0][p]];
        v += wx1[p] * wy0[p] * wz0[p] * f[o[1][p]];
        v += wx0[p] * wy1[p] * wz0[p] * f[o[2][p]];
        v += wx1[p] * wy1[p] * wz0[p] * f[o[3][p]];
        v += wx0[p] * wy0[p] * wz1[p] * f[o[4][p]];
        v += wx1[p] * wy0[p] * wz1[p] * f[o[5][p]];
        v += wx0[p] * wy1[p] * wz1[p] * f[o[6][p]];
        v += wx1[p] * wy1[p] * wz1[p] * f[o[7][p]];
        val[p] = v;
      }
      const int axis = static_cast<int>(comp) % 3;
      const bool is_e = static_cast<int>(comp) < 3;
      for (std::size_t p = 0; p < n; ++p) (is_e ? out[start + p].e : out[start + p].b)[axis] = val[p];
    }
    for (std::size_t p = 0; p < n; ++p) out[start + p].inv_gamma = 1.0;
  }
}

// ---------------------------------------------------------------------------
// Equations of motion
// ---------------------------------------------------------------------------

/// 1/gamma for momentum p of a particle with rest momentum mc.
inline double inverse_gamma(const Vec3& p, double mc) {
  const Vec3 u = p * (1.0 / mc);
  const double u2 = dot(u, u);
  if (std::isfinite(u2)) return 1.0 / std::sqrt(1.0 + u2);
  // |u| beyond ~1e154: scale to avoid overflow in the squared norm.
  const double un = std::hypot(u.x, u.y, u.z);
  return 1.0 / std::hypot(1.0, un);
}

/// Relativistic Boris step. Momentum is per real particle.
inline Vec3 boris_push(const Vec3& momentum, const GatheredFields& fields, const Species& species, double dt,
                       double c) {
  const double half_q_dt = 0.5 * species.charge * dt;
  const Vec3 kick = fields.e * half_q_dt;
  const Vec3 p_minus = momentum + kick;
  const double mc = species.mass * c;
  const double inv_g = inverse_gamma(p_minus, mc);
  const Vec3 t = fields.b * (half_q_dt * inv_g / mc);
  const Vec3 s = t * (2.0 / (1.0 + dot(t, t)));
  const Vec3 p_prime = p_minus + cross(p_minus, t);
  const Vec3 p_plus = p_minus + cross(p_prime, s);
  return p_plus + kick;
}

/// x + v*dt given a precomputed 1/gamma.
inline Vec3 advance_position(const Vec3& position, const Vec3& momentum, double inv_gamma, double mass, double dt) {
  const double factor = inv_gamma / mass;
  return position + momentum * factor * dt;
}

/// x_new = x + p/(gamma m) dt. No periodic wrap: deposition needs the raw path.
inline Vec3 move_particle(const Vec3& position, const Vec3& momentum, const Species& species, double dt,
                          double c) {
  return advance_position(position, momentum, inverse_gamma(momentum, species.mass * c), species.mass, dt);
}

// ---------------------------------------------------------------------------
// Trajectory splitting
// ---------------------------------------------------------------------------

/// Straight piece of a particle path lying in one closed cell. Coordinates are
/// in cell units (see GridGeometry::to_cell_units); `cell` is unwrapped.
struct TrajectorySegment {
  Vec3 start;
  Vec3 end;
  Index3 cell{};
};

struct SegmentList {
  std::array<TrajectorySegment, 4> segments{};
  int count = 0;

  const TrajectorySegment* begin() const { return segments.data(); }
  const TrajectorySegment* end() const { return segments.data() + count; }
};

class CflBreach : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Splits a sub-cell move at every cell-face crossing. Input and output are in
/// cell units. A coordinate exactly on a face belongs to the lower cell unless
/// the motion leaves it upward, so on-face endpoints never produce zero-length
/// segments. Consecutive segments share their endpoint bit for bit.
inline SegmentList split_trajectory(const Vec3& from, const Vec3& to) {
  Index3 cell_from{}, cell_to{};
  std::array<double, 3> t_cross{2.0, 2.0, 2.0};  // > 1: no crossing
  std::array<double, 3> face{};
  for (int a = 0; a < 3; ++a) {
    const double d = to[a] - from[a];
    if (!(std::abs(d) < 1.0))
      throw CflBreach("split_trajectory: displacement of " + std::to_string(d) + " cells along axis " +
                      std::to_string(a) + " is not sub-cell");
    if (d > 0.0) {
      cell_from[a] = static_cast<int>(std::floor(from[a]));
      cell_to[a] = static_cast<int>(std::ceil(to[a])) - 1;
    } else if (d < 0.0) {
      cell_from[a] = static_cast<int>(std::ceil(from[a])) - 1;
      cell_to[a] = static_cast<int>(std::floor(to[a]));
    } else {
      cell_from[a] = cell_to[a] = static_cast<int>(std::ceil(from[a])) - 1;
    }
    if (cell_from[a] != cell_to[a]) {
      face[a] = static_cast<double>(std::max(cell_from[a], cell_to[a]));
      t_cross[a] = (face[a] - from[a]) / d;
    }
  }

  // Distinct crossing parameters in increasing order; equal ones merge.
  std::array<double, 3> ts{};
  int nt = 0;
  for (int a = 0; a < 3; ++a)
    if (t_cross[a] <= 1.0) ts[nt++] = t_cross[a];
  std::sort(ts.begin(), ts.begin() + nt);
  nt = static_cast<int>(std::unique(ts.begin(), ts.begin() + nt) - ts.begin());

  SegmentList out;
  Vec3 prev = from;
  double prev_t = 0.0;
  for (int m = 0; m <= nt; ++m) {
    const bool last = m == nt;
    const double t = last ? 1.0 : ts[m];
    Vec3 point;
    TrajectorySegment seg;
    seg.start = prev;
    for (int a = 0; a < 3; ++a) {
      const bool crossed_before = t_cross[a] <= 1.0 && t_cross[a] <= prev_t;
      seg.cell[a] = crossed_before ? cell_to[a] : cell_from[a];
      if (last) continue;
      if (t_cross[a] == t) {
        point[a] = face[a];
      } else {
        // Clamp round-off back into the cell the path occupies at parameter t.
        const int occupied = (t_cross[a] <= 1.0 && t_cross[a] < t) ? cell_to[a] : cell_from[a];
        const double v = from[a] + t * (to[a] - from[a]);
        point[a] = std::clamp(v, static_cast<double>(occupied), static_cast<double>(occupied + 1));
      }
    }
    seg.end = last ? to : point;
    out.segments[out.count++] = seg;
    prev = seg.end;
    prev_t = t;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Villasenor-Buneman deposition
// ---------------------------------------------------------------------------

/// Adds current straight into a full periodic grid.
class GridCurrentSink {
 public:
  explicit GridCurrentSink(YeeGrid& grid) : grid_(&grid) {
    j_[0] = grid.jx.data();
    j_[1] = grid.jy.data();
    j_[2] = grid.jz.data();
  }
  void add(int comp, int i, int j, int k, double v) {
    const Index3& n = grid_->geometry.dims;
    j_[comp][grid_->geometry.index(detail::wrap_near(i, n[0]), detail::wrap_near(j, n[1]),
                                   detail::wrap_near(k, n[2]))] += v;
  }

 private:
  YeeGrid* grid_;
  double* j_[3];
};

/// Deposits one segment. For each axis the flux q*w*d/dt (d in cells) is shared
/// among the 4 parallel edges of the cell by the CIC area weights of the
/// transverse midpoint, plus the +-d1*d2/12 correction that makes the result
/// satisfy discrete continuity exactly.
template <class Sink>
void deposit_current_vb(Sink& sink, const TrajectorySegment& seg, double charge_weight, double dt,
                        const Vec3& spacing) {
  const Index3& c = seg.cell;
  double d[3], m[3];
  for (int a = 0; a < 3; ++a) {
    const double s = seg.start[a] - c[a];
    const double e = seg.end[a] - c[a];
    d[a] = e - s;
    m[a] = 0.5 * (s + e);
  }
  const double rdt = charge_weight / dt;
  const double area[3] = {spacing.y * spacing.z, spacing.x * spacing.z, spacing.x * spacing.y};
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3;  // first transverse axis
    const int t = (a + 2) % 3;  // second transverse axis
    const double flux = rdt * d[a] / area[a];
    const double cross12 = d[b] * d[t] / 12.0;
    const double w00 = (1.0 - m[b]) * (1.0 - m[t]) + cross12;
    const double w10 = m[b] * (1.0 - m[t]) - cross12;
    const double w01 = (1.0 - m[b]) * m[t] - cross12;
    const double w11 = m[b] * m[t] + cross12;
    Index3 n = c;
    sink.add(a, n[0], n[1], n[2], flux * w00);
    n[b] += 1;
    sink.add(a, n[0], n[1], n[2], flux * w10);
    n[t] += 1;
    sink.add(a, n[0], n[1], n[2], flux * w11);
    n[b] -= 1;
    sink.add(a, n[0], n[1], n[2], flux * w01);
  }
}

/// Splits the move x_old -> x_new (physical units, x_new unwrapped) and deposits
/// every piece.
template <class Sink>
void deposit_move(Sink& sink, const GridGeometry& g, const Vec3& x_old, const Vec3& x_new, double charge_weight,
                  double dt) {
  const SegmentList segs = split_trajectory(g.to_cell_units(x_old), g.to_cell_units(x_new));
  for (const auto& seg : segs) deposit_current_vb(sink, seg, charge_weight, dt, g.spacing);
}

}  // namespace scpic
