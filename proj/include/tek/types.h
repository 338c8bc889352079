#ifndef TEK_TYPES_H_
#define TEK_TYPES_H_

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tek {

using Tid = std::uint32_t;
using Tick = std::int64_t;

// One simulated tick is one millisecond of CPU time.
inline constexpr std::int64_t kNsPerTick = 1'000'000;

enum class ErrorCode {
  kNoSuchThread,
  kCriticalityMismatch,
  kNotEligible,
  kStackAlreadyAllocated,
  kNoUsageData,
  kThreadExists,
  kCriticalityImmutable,
  kNoRunnableThreads,
  kInvalidArgument,
  kInvariantViolation,
};

// Error raised by every module for contract violations. what() carries the
// stable message string callers and tests match on.
class TekError : public std::runtime_error {
 public:
  TekError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code);
[[noreturn]] void Fail(ErrorCode code, const std::string& detail);

std::string_view ErrorMessage(ErrorCode code);

enum class GroupName : std::uint8_t { kUrgent = 0, kNormal, kService, kBackground };
inline constexpr int kNumGroups = 4;
inline constexpr std::array<GroupName, kNumGroups> kAllGroups = {
    GroupName::kUrgent, GroupName::kNormal, GroupName::kService,
    GroupName::kBackground};

enum class Policy : std::uint8_t { kSchedNormal = 0, kSchedTek = 1 };

// Zero is reserved for "not yet assigned" in the thread table encoding.
enum class Criticality : std::uint8_t {
  kUnset = 0,
  kNonTimeCritical = 1,
  kTimeCritical = 2,
};

std::string_view ToString(GroupName g);
std::string_view ToString(Policy p);
std::string_view ToString(Criticality c);
std::optional<GroupName> ParseGroup(std::string_view s);
std::optional<Policy> ParsePolicy(std::string_view s);
std::optional<Criticality> ParseCriticality(std::string_view s);

inline int GroupIndex(GroupName g) { return static_cast<int>(g); }

}  // namespace tek

#endif  // TEK_TYPES_H_
