#include "semicrit/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace semicrit {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& x, const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(const std::array<std::uint32_t, 4>& counter,
                                           const std::array<std::uint32_t, 2>& key) {
  std::array<std::uint32_t, 4> x = counter;
  std::array<std::uint32_t, 2> k = key;
  round_once(x, k);
  for (int r = 1; r < 10; ++r) {
    k[0] += kWeyl0;
    k[1] += kWeyl1;
    round_once(x, k);
  }
  return x;
}

std::uint64_t make_stream(StreamTag tag, std::uint64_t index) {
  if (index >> 56 != 0) {
    throw std::invalid_argument("make_stream: index exceeds 56 bits");
  }
  return (static_cast<std::uint64_t>(tag) << 56) | index;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_{static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

CounterRng::CounterRng(std::uint64_t seed, StreamTag tag, std::uint64_t index)
    : CounterRng(seed, make_stream(tag, index)) {}

void CounterRng::refill() {
  const std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(block_),
                                            static_cast<std::uint32_t>(block_ >> 32), stream_[0],
                                            stream_[1]};
  buf_ = philox4x32_10(ctr, key_);
  ++block_;
  buf_pos_ = 0;
}

std::uint32_t CounterRng::next_u32() {
  if (buf_pos_ >= 4) refill();
  return buf_[buf_pos_++];
}

double CounterRng::uniform_pos() {
  // (x + 1) * 2^-32 in (0, 1]: safe under log().
  return (static_cast<double>(next_u32()) + 1.0) * 0x1p-32;
}

double CounterRng::uniform() {
  return static_cast<double>(next_u32()) * 0x1p-32;
}

double CounterRng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

void CounterRng::skip_to_block(std::uint64_t block) {
  block_ = block;
  buf_pos_ = 4;
  have_spare_ = false;
}

void fill_path_noise(std::uint64_t seed, int p, int n, int d, double dt, double* out) {
  CounterRng rng(seed, StreamTag::noise, static_cast<std::uint64_t>(p));
  const double scale = std::sqrt(dt);
  const size_t len = static_cast<size_t>(n) * d;
  for (size_t j = 0; j < len; ++j) {
    out[j] = rng.normal() * scale;
  }
}

NoiseBlock gaussian_stream(std::uint64_t seed, int m, int n, int d, double dt) {
  if (m < 1 || n < 1 || d < 1) {
    throw std::invalid_argument("gaussian_stream: zero-sized shape");
  }
  if (!(dt > 0.0)) {
    throw std::invalid_argument("gaussian_stream: dt must be positive");
  }
  NoiseBlock block;
  block.seed = seed;
  block.m = m;
  block.n = n;
  block.d = d;
  block.dt = dt;
  block.increments.resize(static_cast<size_t>(m) * n * d);
  for (int p = 0; p < m; ++p) {
    fill_path_noise(seed, p, n, d, dt, block.increments.data() + static_cast<size_t>(p) * n * d);
  }
  return block;
}

NoiseBlock coarsen(const NoiseBlock& fine, int factor) {
  if (factor < 1 || fine.n % factor != 0) {
    throw std::invalid_argument("coarsen: n not divisible by factor");
  }
  NoiseBlock out;
  out.seed = fine.seed;
  out.m = fine.m;
  out.n = fine.n / factor;
  out.d = fine.d;
  out.dt = fine.dt * factor;
  out.increments.assign(static_cast<size_t>(out.m) * out.n * out.d, 0.0);
  for (int p = 0; p < fine.m; ++p) {
    for (int i = 0; i < out.n; ++i) {
      for (int f = 0; f < factor; ++f) {
        for (int c = 0; c < fine.d; ++c) {
          out.increments[(static_cast<size_t>(p) * out.n + i) * out.d + c] +=
              fine.at(p, i * factor + f, c);
        }
      }
    }
  }
  return out;
}

}  // namespace semicrit
