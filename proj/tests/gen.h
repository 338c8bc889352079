#ifndef TEK_TESTS_GEN_H_
#define TEK_TESTS_GEN_H_

// Small generators for property tests, driven by the project PRNG so failures
// replay from the printed seed.

#include <cstdint>
#include <string>
#include <vector>

#include "tek/prng.h"
#include "tek/types.h"

namespace tek::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::int64_t Int(std::int64_t lo, std::int64_t hi) { return rng_.Uniform(lo, hi); }
  bool Bool() { return Int(0, 1) == 1; }
  // True with probability num/den.
  bool Chance(int num, int den) { return Int(1, den) <= num; }

  template <typename T>
  const T& Pick(const std::vector<T>& items) {
    return items[static_cast<std::size_t>(Int(0, static_cast<std::int64_t>(items.size()) - 1))];
  }

  GroupName Group() { return static_cast<GroupName>(Int(0, kNumGroups - 1)); }
  int Nice() { return static_cast<int>(Int(-20, 19)); }

  // Random UTF-8 string of up to `max_chars` code points mixing 1-4 byte
  // characters.
  std::string Utf8(int max_chars) {
    static const std::vector<std::string> kAlphabet = {
        "a", "z", "0", "-", " ", "\xc3\xbc", "\xce\xb1", "\xe2\x82\xac", "\xe6\xb0\xb4",
        "\xf0\x9f\x94\xa5"};
    std::string s;
    const std::int64_t n = Int(0, max_chars);
    for (std::int64_t i = 0; i < n; ++i) s += Pick(kAlphabet);
    return s;
  }

  std::uint64_t U64() { return rng_.Next(); }

 private:
  Xorshift64Star rng_;
};

}  // namespace tek::testing

#endif  // TEK_TESTS_GEN_H_
