#ifndef TEK_PRNG_H_
#define TEK_PRNG_H_

#include <cstdint>

namespace tek {

// xorshift64* stream seeded through splitmix64. The standard library's
// distributions are implementation-defined, so bounded draws are done here to
// keep workloads identical across toolchains.
class Xorshift64Star {
 public:
  explicit Xorshift64Star(std::uint64_t seed) : state_(SplitMix(seed)) {
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ull;
  }

  // Independent stream for a (seed, stream id) pair.
  static Xorshift64Star ForStream(std::uint64_t seed, std::uint64_t stream) {
    return Xorshift64Star(SplitMix(seed ^ SplitMix(stream + 0x632BE59BD9B4E019ull)));
  }

  std::uint64_t Next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1Dull;
  }

  // Uniform integer in [lo, hi]; rejection sampling, no modulo bias.
  std::int64_t Uniform(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(Next());
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = Next();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

 private:
  static std::uint64_t SplitMix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::uint64_t state_;
};

}  // namespace tek

#endif  // TEK_PRNG_H_
