#pragma once

// Read-only physics meters: CIC charge density, continuity and Gauss-law
// residuals, field and kinetic energy. All reductions run sequentially in a
// fixed order.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "scpic/grid.hpp"
#include "scpic/kernels.hpp"
#include "scpic/particle.hpp"
#include "scpic/supercell.hpp"

namespace scpic {

struct DiagnosticsRecord {
  int step = 0;
  double field_energy = 0.0;    // erg
  double kinetic_energy = 0.0;  // erg
  double max_continuity_residual = 0.0;
  double gauss_drift = 0.0;
};

namespace detail {

template <class Visit>
Field3 deposit_charge_impl(Visit&& visit, const GridGeometry& g, std::span<const Species> species) {
  Field3 rho(g);
  const double inv_volume = 1.0 / g.cell_volume();
  visit([&](const Particle& p) {
    const CicWeights w = cic_weights(p.position, g.origin, g.spacing);
    const double q = species[static_cast<std::size_t>(p.species)].charge * p.weight * inv_volume;
    for (int c = 0; c < 2; ++c)
      for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a)
          rho[g.wrapped_index(w.base[0] + a, w.base[1] + b, w.base[2] + c)] += q * w.w[a + 2 * b + 4 * c];
  });
  return rho;
}

}  // namespace detail

/// Node-centered charge density with the CIC form factor and periodic wrap.
inline Field3 deposit_charge_cic(std::span<const Particle> particles, const GridGeometry& g,
                                 std::span<const Species> species) {
  return detail::deposit_charge_impl(
      [&](auto&& f) {
        for (const auto& p : particles) f(p);
      },
      g, species);
}

inline Field3 deposit_charge_cic(const SupercellStore& store, std::span<const Species> species) {
  return detail::deposit_charge_impl([&](auto&& f) { store.for_each_particle(f); }, store.geometry(), species);
}

/// Backward-difference divergence of an edge-centered vector field at nodes.
inline Field3 node_divergence(const GridGeometry& g, const Field3& fx, const Field3& fy, const Field3& fz) {
  Field3 div(g);
  const double rdx = 1.0 / g.spacing.x, rdy = 1.0 / g.spacing.y, rdz = 1.0 / g.spacing.z;
  for (int k = 0; k < g.dims[2]; ++k) {
    const int km = k == 0 ? g.dims[2] - 1 : k - 1;
    for (int j = 0; j < g.dims[1]; ++j) {
      const int jm = j == 0 ? g.dims[1] - 1 : j - 1;
      for (int i = 0; i < g.dims[0]; ++i) {
        const int im = i == 0 ? g.dims[0] - 1 : i - 1;
        const std::size_t n = g.index(i, j, k);
        div[n] = (fx[n] - fx[g.index(im, j, k)]) * rdx + (fy[n] - fy[g.index(i, jm, k)]) * rdy +
                 (fz[n] - fz[g.index(i, j, km)]) * rdz;
      }
    }
  }
  return div;
}

/// Forward-difference divergence of the face-centered B at cell centers.
inline Field3 magnetic_divergence(const YeeGrid& grid) {
  const GridGeometry& g = grid.geometry;
  Field3 div(g);
  const double rdx = 1.0 / g.spacing.x, rdy = 1.0 / g.spacing.y, rdz = 1.0 / g.spacing.z;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const std::size_t n = g.index(i, j, k);
        div[n] = (grid.bx[g.wrapped_index(i + 1, j, k)] - grid.bx[n]) * rdx +
                 (grid.by[g.wrapped_index(i, j + 1, k)] - grid.by[n]) * rdy +
                 (grid.bz[g.wrapped_index(i, j, k + 1)] - grid.bz[n]) * rdz;
      }
  return div;
}

/// max over nodes of |(rho_new - rho_old)/dt + div J|.
inline double continuity_residual(const Field3& rho_old, const Field3& rho_new, const YeeGrid& grid, double dt) {
  const Field3 div = node_divergence(grid.geometry, grid.jx, grid.jy, grid.jz);
  double worst = 0.0;
  for (std::size_t n = 0; n < div.size(); ++n)
    worst = std::max(worst, std::abs((rho_new[n] - rho_old[n]) / dt + div[n]));
  return worst;
}

/// div E - 4 pi rho at every node.
inline Field3 gauss_residual(const YeeGrid& grid, const Field3& rho) {
  Field3 r = node_divergence(grid.geometry, grid.ex, grid.ey, grid.ez);
  for (std::size_t n = 0; n < r.size(); ++n) r[n] -= 4.0 * std::numbers::pi * rho[n];
  return r;
}

/// Largest change of the Gauss residual relative to a baseline residual field.
inline double gauss_drift(const YeeGrid& grid, const Field3& rho, const Field3& baseline) {
  const Field3 r = gauss_residual(grid, rho);
  double worst = 0.0;
  for (std::size_t n = 0; n < r.size(); ++n) worst = std::max(worst, std::abs(r[n] - baseline[n]));
  return worst;
}

inline double field_energy(const YeeGrid& grid) {
  double sum = 0.0;
  for (auto c : kFieldComponents)
    for (double v : grid.field(c)) sum += v * v;
  return sum * grid.geometry.cell_volume() / (8.0 * std::numbers::pi);
}

/// Sum of weight * (gamma - 1) m c^2, using u^2/(gamma + 1) for gamma - 1.
template <class Range>
double kinetic_energy(const Range& particles, std::span<const Species> species, double c) {
  double sum = 0.0;
  for (const Particle& p : particles) {
    const Species& s = species[static_cast<std::size_t>(p.species)];
    const double mc = s.mass * c;
    const Vec3 u = p.momentum * (1.0 / mc);
    const double u2 = dot(u, u);
    const double gamma = std::sqrt(1.0 + u2);
    sum += p.weight * (u2 / (gamma + 1.0)) * s.mass * c * c;
  }
  return sum;
}

inline std::pair<double, double> energies(const YeeGrid& grid, std::span<const Particle> particles,
                                          std::span<const Species> species, double c) {
  return {field_energy(grid), kinetic_energy(particles, species, c)};
}

}  // namespace scpic
