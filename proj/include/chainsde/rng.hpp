#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace chainsde {

// Philox4x32-10 counter-based generator. Each (seed, stream) pair yields an
// independent stream; the 128-bit counter is (stream, block), so the number of
// distinct streams is 2^64 per seed and draws are reproducible regardless of
// evaluation order or thread count.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream),
        block_(0),
        index_(4) {}

  std::uint32_t next_u32() {
    if (index_ == 4) {
      out_ = round10(block_, stream_, key_);
      ++block_;
      index_ = 0;
    }
    return out_[index_++];
  }

  std::uint64_t next_u64() {
    std::uint64_t lo = next_u32();
    std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on (0, 1], so log() is always finite.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
  }

 private:
  static std::array<std::uint32_t, 4> round10(std::uint64_t block,
                                              std::uint64_t stream,
                                              std::array<std::uint32_t, 2> key) {
    std::uint32_t c0 = static_cast<std::uint32_t>(block);
    std::uint32_t c1 = static_cast<std::uint32_t>(block >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream >> 32);
    std::uint32_t k0 = key[0];
    std::uint32_t k1 = key[1];
    for (int r = 0; r < 10; ++r) {
      std::uint64_t p0 = 0xD2511F53ull * c0;
      std::uint64_t p1 = 0xCD9E8D57ull * c2;
      std::uint32_t h0 = static_cast<std::uint32_t>(p0 >> 32);
      std::uint32_t l0 = static_cast<std::uint32_t>(p0);
      std::uint32_t h1 = static_cast<std::uint32_t>(p1 >> 32);
      std::uint32_t l1 = static_cast<std::uint32_t>(p1);
      std::uint32_t n0 = h1 ^ c1 ^ k0;
      std::uint32_t n1 = l1;
      std::uint32_t n2 = h0 ^ c3 ^ k1;
      std::uint32_t n3 = l0;
      c0 = n0; c1 = n1; c2 = n2; c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return {c0, c1, c2, c3};
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_;
  std::array<std::uint32_t, 4> out_;
  int index_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Stream ids for independent substreams, hashed from a purpose tag and up to
// two indices (typically path and level).
inline std::uint64_t stream_id(std::uint64_t purpose, std::uint64_t a = 0,
                               std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(purpose) ^ a) ^ b);
}

// Standard normal draws via Box-Muller on top of a Philox stream.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream)
      : gen_(seed, stream), have_spare_(false), spare_(0.0) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = gen_.next_uniform();
    double u2 = gen_.next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double next_uniform() { return gen_.next_uniform(); }

 private:
  Philox gen_;
  bool have_spare_;
  double spare_;
};

}  // namespace chainsde
