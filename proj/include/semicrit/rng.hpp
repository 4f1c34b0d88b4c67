#pragma once

// Counter-based random number generation (Philox4x32-10) with per-path
// substreams. Every value is a pure function of (seed, stream, position), so
// parallel generation is deterministic regardless of worker count and any
// path's noise can be regenerated in isolation.

#include <array>
#include <cstdint>
#include <vector>

namespace semicrit {

// One Philox4x32 block with 10 rounds (multipliers 0xD2511F53 / 0xCD9E8D57,
// Weyl key increments 0x9E3779B9 / 0xBB67AE85).
std::array<std::uint32_t, 4> philox4x32_10(const std::array<std::uint32_t, 4>& counter,
                                           const std::array<std::uint32_t, 2>& key);

// Substream identifiers. The stream word packs a tag in the top byte and a
// path / member index below, so different uses of the same seed never collide.
enum class StreamTag : std::uint64_t {
  initial = 1,   // initial-condition draws
  noise = 2,     // Brownian increments
  bank = 3,      // variation-bank parameter draws
  scratch = 4,   // tests and auxiliary sampling
};

std::uint64_t make_stream(StreamTag tag, std::uint64_t index);

// Buffered generator over one (seed, stream) substream. Counter layout:
// c0/c1 = block position within the stream, c2/c3 = stream word; key = seed.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);
  CounterRng(std::uint64_t seed, StreamTag tag, std::uint64_t index);

  std::uint32_t next_u32();
  // Uniform draws on (0,1] and [0,1) respectively.
  double uniform_pos();
  double uniform();
  // Standard normal via Box-Muller (pairs cached).
  double normal();

  void skip_to_block(std::uint64_t block);

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;  // exhausted
  double spare_normal_ = 0.0;
  bool have_spare_ = false;

  void refill();
};

// Reproducible block of i.i.d. N(0, dt) increments, shape (m, n, d),
// row-major increments[(p*n + i)*d + c]. Path p draws from substream
// (StreamTag::noise, p); the simulator consumes the identical substreams, so
// a simulation and a materialized block with the same seed share their noise.
struct NoiseBlock {
  std::uint64_t seed = 0;
  int m = 0;
  int n = 0;
  int d = 1;
  double dt = 0.0;
  std::vector<double> increments;

  double at(int p, int i, int c = 0) const {
    return increments[(static_cast<size_t>(p) * n + i) * d + c];
  }
};

NoiseBlock gaussian_stream(std::uint64_t seed, int m, int n, int d, double dt);

// Fill one path's worth of N(0, dt) increments (n*d values) from the noise
// substream of `seed` for path `p`; the single source of truth shared by
// gaussian_stream and the simulator.
void fill_path_noise(std::uint64_t seed, int p, int n, int d, double dt, double* out);

// Sum groups of `factor` consecutive fine increments into coarse ones
// (shared-noise refinement comparisons). n must be divisible by factor.
NoiseBlock coarsen(const NoiseBlock& fine, int factor);

}  // namespace semicrit
