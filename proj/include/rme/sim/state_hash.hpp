#pragma once

#include <cstdint>
#include <functional>
#include <span>

namespace rme {

struct StateDigest {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  friend bool operator==(const StateDigest&, const StateDigest&) = default;
};

struct StateDigestHash {
  std::size_t operator()(const StateDigest& d) const noexcept { return d.lo ^ (d.hi * 0x9e3779b97f4a7c15ULL); }
};

/// Two independent 64-bit lanes of multiply-xorshift mixing. Used for
/// explorer state deduplication (hash compaction); 128 bits keep the
/// collision probability negligible at the state counts we reach.
class StateHasher {
 public:
  void add(std::uint64_t v) {
    lo_ = mix(lo_ ^ (v + 0x9e3779b97f4a7c15ULL));
    hi_ = mix(hi_ + (v ^ 0xc2b2ae3d27d4eb4fULL) * 0x165667b19e3779f9ULL);
    ++count_;
  }
  void add(std::span<const std::uint64_t> words) {
    add(words.size());
    for (auto w : words) add(w);
  }
  StateDigest digest() const { return {mix(lo_ ^ count_), mix(hi_ + count_)}; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t lo_ = 0x243f6a8885a308d3ULL;
  std::uint64_t hi_ = 0x13198a2e03707344ULL;
  std::uint64_t count_ = 0;
};

/// splitmix64 step; the simulator's only source of derived pseudo-randomness
/// outside the scheduler RNG.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace rme
