#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "scpic/grid.hpp"
#include "scpic/worker_pool.hpp"

namespace scpic {

/// Yee stability bound, 1 / (c * sqrt(1/dx^2 + 1/dy^2 + 1/dz^2)).
inline double cfl_max_dt(const GridGeometry& g, double c) {
  const Vec3& h = g.spacing;
  if (!(h.x > 0.0 && h.y > 0.0 && h.z > 0.0))
    throw std::invalid_argument("cfl_max_dt: grid spacing must be positive");
  if (!(c > 0.0)) throw std::invalid_argument("cfl_max_dt: c must be positive");
  return 1.0 / (c * std::sqrt(1.0 / (h.x * h.x) + 1.0 / (h.y * h.y) + 1.0 / (h.z * h.z)));
}

namespace detail {

template <class Body>
void for_each_plane(const GridGeometry& g, WorkerPool* pool, Body&& body) {
  const auto nz = static_cast<std::size_t>(g.dims[2]);
  if (pool)
    pool->parallel_for(nz, [&](std::size_t k, unsigned) { body(static_cast<int>(k)); });
  else
    for (std::size_t k = 0; k < nz; ++k) body(static_cast<int>(k));
}

}  // namespace detail

/// B <- B - (c*dt/2) curl E. Each B value reads only E, so the sweep is in place
/// and bitwise independent of how planes are split among workers.
inline void advance_b_half(YeeGrid& grid, double dt, double c, WorkerPool* pool = nullptr) {
  const GridGeometry& g = grid.geometry;
  const int nx = g.dims[0], ny = g.dims[1];
  const double h = 0.5 * c * dt;
  const double rdx = 1.0 / g.spacing.x, rdy = 1.0 / g.spacing.y, rdz = 1.0 / g.spacing.z;
  const double* ex = grid.ex.data();
  const double* ey = grid.ey.data();
  const double* ez = grid.ez.data();
  double* bx = grid.bx.data();
  double* by = grid.by.data();
  double* bz = grid.bz.data();

  detail::for_each_plane(g, pool, [&](int k) {
    const int kp = k + 1 == g.dims[2] ? 0 : k + 1;
    for (int j = 0; j < ny; ++j) {
      const int jp = j + 1 == ny ? 0 : j + 1;
      for (int i = 0; i < nx; ++i) {
        const int ip = i + 1 == nx ? 0 : i + 1;
        const std::size_t n = g.index(i, j, k);
        const std::size_t nip = g.index(ip, j, k);
        const std::size_t njp = g.index(i, jp, k);
        const std::size_t nkp = g.index(i, j, kp);
        bx[n] -= h * ((ez[njp] - ez[n]) * rdy - (ey[nkp] - ey[n]) * rdz);
        by[n] -= h * ((ex[nkp] - ex[n]) * rdz - (ez[nip] - ez[n]) * rdx);
        bz[n] -= h * ((ey[nip] - ey[n]) * rdx - (ex[njp] - ex[n]) * rdy);
      }
    }
  });
}

/// E <- E + c*dt curl B - 4*pi*dt J.
inline void advance_e(YeeGrid& grid, double dt, double c, WorkerPool* pool = nullptr) {
  const GridGeometry& g = grid.geometry;
  const int nx = g.dims[0], ny = g.dims[1];
  const double cdt = c * dt;
  const double jdt = 4.0 * std::numbers::pi * dt;
  const double rdx = 1.0 / g.spacing.x, rdy = 1.0 / g.spacing.y, rdz = 1.0 / g.spacing.z;
  const double* bx = grid.bx.data();
  const double* by = grid.by.data();
  const double* bz = grid.bz.data();
  const double* jx = grid.jx.data();
  const double* jy = grid.jy.data();
  const double* jz = grid.jz.data();
  double* ex = grid.ex.data();
  double* ey = grid.ey.data();
  double* ez = grid.ez.data();

  detail::for_each_plane(g, pool, [&](int k) {
    const int km = k == 0 ? g.dims[2] - 1 : k - 1;
    for (int j = 0; j < ny; ++j) {
      const int jm = j == 0 ? ny - 1 : j - 1;
      for (int i = 0; i < nx; ++i) {
        const int im = i == 0 ? nx - 1 : i - 1;
        const std::size_t n = g.index(i, j, k);
        const std::size_t nim = g.index(im, j, k);
        const std::size_t njm = g.index(i, jm, k);
        const std::size_t nkm = g.index(i, j, km);
        ex[n] += cdt * ((bz[n] - bz[njm]) * rdy - (by[n] - by[nkm]) * rdz) - jdt * jx[n];
        ey[n] += cdt * ((bx[n] - bx[nkm]) * rdz - (bz[n] - bz[nim]) * rdx) - jdt * jy[n];
        ez[n] += cdt * ((by[n] - by[nim]) * rdx - (bx[n] - bx[njm]) * rdy) - jdt * jz[n];
      }
    }
  });
}

/// Angular frequency of a Yee eigenmode from the discrete dispersion relation
/// sin^2(w dt/2) / (c dt)^2 = sum_i sin^2(k_i h_i / 2) / h_i^2.
inline double yee_mode_omega(const GridGeometry& g, const Index3& mode, double dt, double c) {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double k = 2.0 * std::numbers::pi * mode[a] / g.length(a);
    const double t = std::sin(0.5 * k * g.spacing[a]) / g.spacing[a];
    s += t * t;
  }
  const double arg = c * dt * std::sqrt(s);
  if (arg > 1.0) throw std::invalid_argument("yee_mode_omega: dt exceeds the mode's stability limit");
  return 2.0 * std::asin(arg) / dt;
}

/// Time step for which one period of the given mode takes exactly steps_per_period steps.
inline double yee_period_dt(const GridGeometry& g, const Index3& mode, int steps_per_period, double c) {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double k = 2.0 * std::numbers::pi * mode[a] / g.length(a);
    const double t = std::sin(0.5 * k * g.spacing[a]) / g.spacing[a];
    s += t * t;
  }
  if (s == 0.0) throw std::invalid_argument("yee_period_dt: zero wavevector");
  return std::sin(std::numbers::pi / steps_per_period) / (c * std::sqrt(s));
}

/// Loads a linearly polarized Yee eigenmode travelling along +k. E is set at t = 0
/// and B at t = -dt/2, matching the half-step storage of the leapfrog schedule.
/// Clears J.
inline void init_plane_wave(YeeGrid& grid, const Index3& mode, double amplitude, double dt, double c) {
  const GridGeometry& g = grid.geometry;
  for (auto comp : kFieldComponents) grid.field(comp).fill(0.0);
  grid.zero_current();
  const bool zero_mode = mode[0] == 0 && mode[1] == 0 && mode[2] == 0;
  if (amplitude == 0.0) return;
  if (zero_mode) throw std::invalid_argument("init_plane_wave: zero wavevector with nonzero amplitude");

  Vec3 k{}, kt{};
  for (int a = 0; a < 3; ++a) {
    k[a] = 2.0 * std::numbers::pi * mode[a] / g.length(a);
    kt[a] = 2.0 / g.spacing[a] * std::sin(0.5 * k[a] * g.spacing[a]);
  }
  const double kt_norm = norm(kt);
  if (kt_norm == 0.0) throw std::invalid_argument("init_plane_wave: mode aliases to zero on this grid");

  // Polarization perpendicular to the discrete wavevector.
  const Vec3 ref = (std::abs(kt.x) > 0.0 || std::abs(kt.y) > 0.0) ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  Vec3 e_hat = cross(ref, kt);
  e_hat *= amplitude / norm(e_hat);

  const double omega = yee_mode_omega(g, mode, dt, c);
  const double omega_t = 2.0 / dt * std::sin(0.5 * omega * dt);
  const Vec3 b_hat = cross(kt, e_hat) * (c / omega_t);

  const double t_e = 0.0;
  const double t_b = -0.5 * dt;
  for (auto comp : kFieldComponents) {
    const auto s = stagger(comp);
    const int axis = static_cast<int>(comp) % 3;
    const bool is_e = static_cast<int>(comp) < 3;
    const double amp = is_e ? e_hat[axis] : b_hat[axis];
    const double t = is_e ? t_e : t_b;
    Field3& f = grid.field(comp);
    for (int kk = 0; kk < g.dims[2]; ++kk)
      for (int j = 0; j < g.dims[1]; ++j)
        for (int i = 0; i < g.dims[0]; ++i) {
          const double phase = k.x * (i + s[0]) * g.spacing.x + k.y * (j + s[1]) * g.spacing.y +
                               k.z * (kk + s[2]) * g.spacing.z - omega * t;
          f[g.index(i, j, kk)] = amp * std::cos(phase);
        }
  }
}

}  // namespace scpic
