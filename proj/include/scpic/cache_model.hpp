#pragma once

// Working-set estimates for one core processing a supercell, and the supercell
// size recommendation built on them.

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scpic/config.hpp"
#include "scpic/supercell.hpp"

namespace scpic {

struct CacheModel {
  int supercell_size = 1;
  int threads_per_core = 4;
  int bytes_per_value = 8;
  int field_components = 6;
  int current_components = 3;
  int particle_bytes = 64;
  int aux_bytes = 56;
  int chunk = 16;
};

/// threads * (S+1)^3 * current components * bytes per value.
constexpr std::int64_t estimate_deposition_data_bytes(const CacheModel& m) {
  const std::int64_t n = m.supercell_size + 1;
  return std::int64_t{m.threads_per_core} * n * n * n * m.current_components * m.bytes_per_value;
}

/// threads * ((S+2)^3 * field components * bytes per value + (particle + aux bytes) * chunk).
constexpr std::int64_t estimate_push_data_bytes(const CacheModel& m) {
  const std::int64_t n = m.supercell_size + 2;
  return std::int64_t{m.threads_per_core} *
         (n * n * n * m.field_components * m.bytes_per_value +
          std::int64_t{m.particle_bytes + m.aux_bytes} * m.chunk);
}

/// Decimal kilobytes with two decimals, rounded half up: 12864 -> "12.86".
inline std::string format_kb(std::int64_t bytes) {
  const std::int64_t hundredths = (bytes + 5) / 10;
  std::string frac = std::to_string(hundredths % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return std::to_string(hundredths / 100) + "." + frac;
}

struct SupercellSizeRow {
  int supercell_size = 1;
  std::int64_t push_bytes = 0;
  std::int64_t deposition_bytes = 0;
  std::array<std::size_t, 8> color_counts{};
  std::size_t min_per_color = 0;
  std::size_t max_per_color = 0;
  bool fits_budget = false;
  bool enough_parallelism = false;
  bool chessboard_valid = false;

  bool feasible() const { return fits_budget && enough_parallelism && chessboard_valid; }
};

struct SupercellRecommendation {
  int supercell_size = 1;
  bool warning = false;  // nothing satisfied every constraint
  std::vector<SupercellSizeRow> rows;
  std::string note;
};

/// Largest S whose push and deposition working sets both fit l1_budget while
/// every chessboard color still holds at least `workers` supercells and the
/// tiling stays colorable. Falls back to S = 1 with a warning.
inline SupercellRecommendation recommend_supercell_size(CacheModel model, std::int64_t l1_budget, const Index3& dims,
                                                        int workers) {
  SupercellRecommendation rec;
  const int max_s = std::min({dims[0], dims[1], dims[2]});
  for (int s = 1; s <= max_s; ++s) {
    model.supercell_size = s;
    SupercellSizeRow row;
    row.supercell_size = s;
    row.push_bytes = estimate_push_data_bytes(model);
    row.deposition_bytes = estimate_deposition_data_bytes(model);
    const Index3 n = supercell_counts(dims, s);
    row.color_counts = parity_color_counts(n);
    row.min_per_color = *std::min_element(row.color_counts.begin(), row.color_counts.end());
    row.max_per_color = *std::max_element(row.color_counts.begin(), row.color_counts.end());
    row.fits_budget = std::max(row.push_bytes, row.deposition_bytes) <= l1_budget;
    row.enough_parallelism = row.min_per_color >= static_cast<std::size_t>(std::max(workers, 1));
    row.chessboard_valid = n[0] % 2 == 0 && n[1] % 2 == 0 && n[2] % 2 == 0;
    rec.rows.push_back(row);
  }
  int best = 0;
  for (const auto& r : rec.rows)
    if (r.feasible()) best = r.supercell_size;
  if (best == 0) {
    rec.supercell_size = 1;
    rec.warning = true;
    rec.note = "no supercell size fits the budget with enough parallel subproblems; using S=1";
  } else {
    rec.supercell_size = best;
    rec.note = "estimate is a heuristic upper bound; measured optimum is often smaller";
  }
  return rec;
}

}  // namespace scpic
