#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

namespace sitsr {

inline uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** with explicit,  serializable state. Used everywhere instead of
/// <random> engines so that datasets and training runs are reproducible
/// byte-for-byte across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) { reseed(seed); }

  void reseed(uint64_t seed) {
    uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
  }

  uint64_t next_u64() {
    auto rotl = [](uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [lo, hi] inclusive.
  int64_t randint(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
  }

  /// Standard normal via Box-Muller. No spare caching so the state stays
  /// a pure function of the draw count.
  double normal() {
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Derive an independent stream; deterministic in (current state, salt).
  Rng split(uint64_t salt) const {
    uint64_t x = state_[0] ^ (state_[3] + 0x632be59bd9b4e019ULL * (salt + 1));
    Rng out(0);
    for (auto& s : out.state_) s = splitmix64(x);
    return out;
  }

  std::array<uint64_t, 4> state() const { return state_; }
  void set_state(const std::array<uint64_t, 4>& s) { state_ = s; }

  std::string state_hex() const;
  void set_state_hex(const std::string& hex);

 private:
  std::array<uint64_t, 4> state_{};
};

inline std::string Rng::state_hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (uint64_t w : state_)
    for (int i = 15; i >= 0; --i) out.push_back(digits[(w >> (4 * i)) & 0xf]);
  return out;
}

inline void Rng::set_state_hex(const std::string& hex) {
  std::array<uint64_t, 4> s{};
  for (int w = 0; w < 4; ++w) {
    uint64_t v = 0;
    for (int i = 0; i < 16; ++i) {
      const char c = hex[static_cast<size_t>(w * 16 + i)];
      v = (v << 4) | static_cast<uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
    }
    s[static_cast<size_t>(w)] = v;
  }
  state_ = s;
}

/// Deterministic per-item seed for parallel generation.
inline uint64_t mix_seed(uint64_t seed, uint64_t index) {
  uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (index + 1));
  return splitmix64(x);
}

}  // namespace sitsr
