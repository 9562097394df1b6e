#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "scpic/vec3.hpp"

namespace scpic {

struct Species {
  double charge = 0.0;  // statcoulomb, any sign
  double mass = 1.0;    // g, > 0
  std::string name;
};

/// Macro-particle. Eight 64-bit slots: position (3), momentum per real particle (3),
/// weight, species index. The split is a reconstruction sized to the 64-byte
/// particle footprint used by the cache model.
struct Particle {
  Vec3 position;
  Vec3 momentum;
  double weight = 0.0;
  std::int64_t species = 0;

  friend bool operator==(const Particle&, const Particle&) = default;
};

static_assert(sizeof(Particle) == 64, "particle record must stay 64 bytes");

inline constexpr std::size_t kParticleBytes = 64;

namespace detail {

inline void store_le(std::uint64_t bits, std::byte* out) {
  for (int b = 0; b < 8; ++b) out[b] = static_cast<std::byte>((bits >> (8 * b)) & 0xffu);
}

inline std::uint64_t load_le(const std::byte* in) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(in[b]) << (8 * b);
  return bits;
}

}  // namespace detail

/// Little-endian 64-bit slots; the species index is stored as a real so every
/// slot of a snapshot is a binary64 value.
inline std::array<std::byte, kParticleBytes> serialize(const Particle& p) {
  std::array<std::byte, kParticleBytes> out{};
  const double slots[8] = {p.position.x, p.position.y, p.position.z, p.momentum.x,
                           p.momentum.y, p.momentum.z, p.weight,     static_cast<double>(p.species)};
  for (int s = 0; s < 8; ++s) detail::store_le(std::bit_cast<std::uint64_t>(slots[s]), out.data() + 8 * s);
  return out;
}

inline Particle deserialize_particle(std::span<const std::byte, kParticleBytes> in) {
  double slots[8];
  for (int s = 0; s < 8; ++s) slots[s] = std::bit_cast<double>(detail::load_le(in.data() + 8 * s));
  Particle p;
  p.position = {slots[0], slots[1], slots[2]};
  p.momentum = {slots[3], slots[4], slots[5]};
  p.weight = slots[6];
  p.species = static_cast<std::int64_t>(slots[7]);
  return p;
}

}  // namespace scpic
