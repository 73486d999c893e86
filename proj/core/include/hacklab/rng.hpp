#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace hacklab {

// Seeded xoshiro256** generator. Child streams are derived by hashing
// (seed, stream, id), so independent runs never share a stream.
//
// All draws are defined in terms of next_u64() only; no <random>
// distributions are used, so sequences are bit-identical across standard
// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Standard normal via Box-Muller; consumes exactly two u64 draws.
  double normal();

  // Uniform integer on [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  // Independent generator for sub-task `id`. Does not advance *this.
  [[nodiscard]] Rng child(std::uint64_t id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  // Number of u64 draws consumed so far.
  std::uint64_t position() const { return position_; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  std::array<std::uint64_t, 4> state_{};
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace hacklab
