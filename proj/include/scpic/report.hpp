#pragma once

// Run reports, CSV output and binary state snapshots.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scpic/cache_model.hpp"
#include "scpic/config.hpp"
#include "scpic/diagnostics.hpp"
#include "scpic/grid.hpp"
#include "scpic/particle.hpp"

namespace scpic {

/// One sweep configuration and what it measured. Rejected rows keep their
/// estimates and carry the validation message instead of timings.
struct SweepRow {
  SimulationConfig config;
  std::string label;
  StageTimings timings;
  std::uint64_t checksum = 0;
  bool rejected = false;
  std::string message;
  std::optional<SupercellSizeRow> estimate;
  std::optional<double> speedup;  // baseline overall / this overall
};

struct RunReport {
  std::optional<SimulationConfig> config;
  std::optional<StageTimings> timings;
  std::optional<std::uint64_t> checksum;
  std::vector<DiagnosticsRecord> diagnostics;
  std::string sweep_kind;  // "", "workers" or "supercell"
  std::vector<SweepRow> sweep;
  std::optional<SupercellRecommendation> recommendation;
};

inline constexpr const char* kStageNames[4] = {"particle_push", "current_deposition", "other", "overall"};

inline std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string checksum_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline void config_rows(std::vector<std::array<std::string, 4>>& rows, const std::string& section,
                        const SimulationConfig& c) {
  auto add = [&](const std::string& key, const std::string& value) { rows.push_back({section, key, "", value}); };
  add("grid", std::to_string(c.dims[0]) + "x" + std::to_string(c.dims[1]) + "x" + std::to_string(c.dims[2]));
  add("spacing", format_value(c.spacing.x) + "x" + format_value(c.spacing.y) + "x" + format_value(c.spacing.z));
  add("ppc", std::to_string(c.particles_per_cell));
  add("steps", std::to_string(c.steps));
  add("dt", format_value(c.dt));
  add("c", format_value(c.c));
  add("layout", std::string(to_string(c.layout)));
  add("supercell_size", std::to_string(c.supercell_size));
  add("interp", std::string(to_string(c.interpolation)));
  add("chunk_size", std::to_string(c.chunk_size));
  add("workers", std::to_string(c.workers));
  add("subdomains", std::to_string(c.subdomains));
  add("seed", std::to_string(c.seed));
  add("density", format_value(c.density));
  add("temperature", format_value(c.thermal_momentum));
}

inline void timing_rows(std::vector<std::array<std::string, 4>>& rows, const std::string& section,
                        const std::string& key, const StageTimings& t) {
  const double v[4] = {t.particle_push, t.current_deposition, t.other, t.overall};
  for (int s = 0; s < 4; ++s) rows.push_back({section, key, kStageNames[s], format_value(v[s])});
}

}  // namespace detail

/// Report as rows of (section, key, stage, value), in file order.
inline std::vector<std::array<std::string, 4>> report_rows(const RunReport& r) {
  std::vector<std::array<std::string, 4>> rows;
  if (r.config) detail::config_rows(rows, "config", *r.config);
  if (r.timings) detail::timing_rows(rows, "timing", "run", *r.timings);
  if (r.checksum) rows.push_back({"physics", "checksum", "", checksum_hex(*r.checksum)});
  for (const auto& d : r.diagnostics) {
    const std::string key = "step=" + std::to_string(d.step);
    rows.push_back({"diagnostics", key, "field_energy", format_value(d.field_energy)});
    rows.push_back({"diagnostics", key, "kinetic_energy", format_value(d.kinetic_energy)});
    rows.push_back({"diagnostics", key, "max_continuity_residual", format_value(d.max_continuity_residual)});
    rows.push_back({"diagnostics", key, "gauss_drift", format_value(d.gauss_drift)});
  }
  for (const auto& row : r.sweep) {
    const std::string section = "sweep_" + r.sweep_kind;
    detail::config_rows(rows, section + "_config:" + row.label, row.config);
    if (row.estimate) {
      const auto& e = *row.estimate;
      rows.push_back({section, row.label, "push_bytes", std::to_string(e.push_bytes)});
      rows.push_back({section, row.label, "push_kb", format_kb(e.push_bytes)});
      rows.push_back({section, row.label, "deposition_bytes", std::to_string(e.deposition_bytes)});
      rows.push_back({section, row.label, "deposition_kb", format_kb(e.deposition_bytes)});
      for (int c = 0; c < 8; ++c)
        rows.push_back({section, row.label, "color" + std::to_string(c) + "_supercells",
                        std::to_string(e.color_counts[static_cast<std::size_t>(c)])});
    }
    if (row.rejected) {
      rows.push_back({section, row.label, "rejected", row.message});
      continue;
    }
    detail::timing_rows(rows, section, row.label, row.timings);
    rows.push_back({section, row.label, "checksum", checksum_hex(row.checksum)});
    if (row.speedup) rows.push_back({section, row.label, "speedup", format_value(*row.speedup)});
  }
  if (r.recommendation) {
    const auto& rec = *r.recommendation;
    rows.push_back({"recommendation", "supercell_size", "", std::to_string(rec.supercell_size)});
    rows.push_back({"recommendation", "warning", "", rec.warning ? "1" : "0"});
    rows.push_back({"recommendation", "note", "", rec.note});
  }
  return rows;
}

inline std::string report_csv(const RunReport& r) {
  std::string out = "section,key,stage,value\n";
  for (const auto& row : report_rows(r)) {
    out += csv_escape(row[0]) + "," + csv_escape(row[1]) + "," + csv_escape(row[2]) + "," + csv_escape(row[3]);
    out += "\n";
  }
  return out;
}

inline void write_report_csv(const RunReport& r, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open report file '" + path + "' for writing");
  const std::string csv = report_csv(r);
  f.write(csv.data(), static_cast<std::streamsize>(csv.size()));
  f.close();
  if (!f) throw std::runtime_error("failed writing report file '" + path + "'");
}

// Snapshot: text header line, then nine field arrays (E, B, J) and the
// particle records as little-endian 64-bit reals.

namespace detail {

inline void put_double(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

inline double get_double(const char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= std::uint64_t{static_cast<unsigned char>(p[b])} << (8 * b);
  return std::bit_cast<double>(bits);
}

inline std::array<const Field3*, 9> snapshot_fields(const YeeGrid& g) {
  return {&g.ex, &g.ey, &g.ez, &g.bx, &g.by, &g.bz, &g.jx, &g.jy, &g.jz};
}

}  // namespace detail

inline void write_snapshot(const std::string& path, const YeeGrid& grid, std::span<const Particle> particles) {
  const auto& d = grid.geometry.dims;
  std::string out = "pic-snapshot v1 " + std::to_string(d[0]) + " " + std::to_string(d[1]) + " " +
                    std::to_string(d[2]) + " " + std::to_string(particles.size()) + "\n";
  for (const Field3* f : detail::snapshot_fields(grid))
    for (double v : *f) detail::put_double(out, v);
  for (const auto& p : particles) {
    const auto bytes = serialize(p);
    out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open snapshot file '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("failed writing snapshot file '" + path + "'");
}

struct Snapshot {
  Index3 dims{};
  std::vector<Field3> fields;  // ex ey ez bx by bz jx jy jz
  std::vector<Particle> particles;
};

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open snapshot file '" + path + "'");
  std::string header;
  std::getline(f, header);
  std::istringstream hs(header);
  std::string magic, version;
  Snapshot s;
  std::size_t np = 0;
  if (!(hs >> magic >> version >> s.dims[0] >> s.dims[1] >> s.dims[2] >> np) || magic != "pic-snapshot" ||
      version != "v1")
    throw std::runtime_error("'" + path + "' is not a pic-snapshot v1 file");
  const std::string body((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const GridGeometry g{s.dims, {1, 1, 1}, {}};
  const std::size_t cells = g.num_cells();
  if (body.size() != 9 * cells * 8 + np * kParticleBytes)
    throw std::runtime_error("snapshot '" + path + "' has unexpected size");
  const char* p = body.data();
  for (int c = 0; c < 9; ++c) {
    Field3 field(g);
    for (std::size_t n = 0; n < cells; ++n, p += 8) field[n] = detail::get_double(p);
    s.fields.push_back(std::move(field));
  }
  s.particles.reserve(np);
  for (std::size_t i = 0; i < np; ++i, p += kParticleBytes)
    s.particles.push_back(
        deserialize_particle(std::span<const std::byte, kParticleBytes>(reinterpret_cast<const std::byte*>(p), kParticleBytes)));
  return s;
}

}  // namespace scpic
