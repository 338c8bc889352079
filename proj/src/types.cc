#include "tek/types.h"

namespace tek {

std::string_view ErrorMessage(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNoSuchThread: return "no such thread";
    case ErrorCode::kCriticalityMismatch: return "criticality mismatch";
    case ErrorCode::kNotEligible: return "not eligible for SCHED_TEK";
    case ErrorCode::kStackAlreadyAllocated: return "stack already allocated";
    case ErrorCode::kNoUsageData: return "no usage data";
    case ErrorCode::kThreadExists: return "thread exists";
    case ErrorCode::kCriticalityImmutable: return "criticality immutable";
    case ErrorCode::kNoRunnableThreads: return "no runnable threads";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kInvariantViolation: return "invariant violation";
  }
  return "unknown error";
}

void Fail(ErrorCode code) { throw TekError(code, std::string(ErrorMessage(code))); }

void Fail(ErrorCode code, const std::string& detail) {
  throw TekError(code, std::string(ErrorMessage(code)) + ": " + detail);
}

std::string_view ToString(GroupName g) {
  switch (g) {
    case GroupName::kUrgent: return "urgent";
    case GroupName::kNormal: return "normal";
    case GroupName::kService: return "service";
    case GroupName::kBackground: return "background";
  }
  return "?";
}

std::string_view ToString(Policy p) {
  return p == Policy::kSchedTek ? "tek" : "normal";
}

std::string_view ToString(Criticality c) {
  switch (c) {
    case Criticality::kUnset: return "unset";
    case Criticality::kNonTimeCritical: return "non_time_critical";
    case Criticality::kTimeCritical: return "time_critical";
  }
  return "?";
}

std::optional<GroupName> ParseGroup(std::string_view s) {
  for (GroupName g : kAllGroups) {
    if (ToString(g) == s) return g;
  }
  return std::nullopt;
}

std::optional<Policy> ParsePolicy(std::string_view s) {
  if (s == "normal") return Policy::kSchedNormal;
  if (s == "tek") return Policy::kSchedTek;
  return std::nullopt;
}

std::optional<Criticality> ParseCriticality(std::string_view s) {
  if (s == "time_critical") return Criticality::kTimeCritical;
  if (s == "non_time_critical") return Criticality::kNonTimeCritical;
  if (s == "unset") return Criticality::kUnset;
  return std::nullopt;
}

}  // namespace tek
