#ifndef TEK_STACK_TUNER_H_
#define TEK_STACK_TUNER_H_

// Thread stacks in a modeled 32-bit user address space. All sizes are KiB.
// A stack is [reserved | guard page]; usage beyond the reservation touches the
// guard and is recorded as a fault rather than trapped.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tek/rational.h"
#include "tek/types.h"

namespace tek {

inline constexpr std::uint64_t kKiBPerMiB = 1024;
inline constexpr std::uint64_t kMinStackKiB = 16;

enum class StackPolicy : std::uint8_t { kFixedSize, kTuned };
enum class Zone : std::uint8_t { kUnknown = 0, kLow = 1, kNormal = 2, kHigh = 3 };
enum class FaultKind : std::uint8_t { kAllocationExhaustion, kGuardPageOverrun };

std::string_view ToString(StackPolicy p);
std::string_view ToString(Zone z);
std::string_view ToString(FaultKind k);

struct AddressSpaceConfig {
  std::uint64_t total_kib = 3 * 1024 * kKiBPerMiB;
  // Code, data and heap; not available to stacks.
  std::uint64_t reserved_kib = 512 * kKiBPerMiB;
  std::uint64_t page_kib = 4;
  std::uint64_t default_stack_kib = 8 * kKiBPerMiB;
  std::uint64_t max_stack_kib = 8 * kKiBPerMiB;

  // Throws kInvalidArgument.
  void Validate() const;
  friend bool operator==(const AddressSpaceConfig&, const AddressSpaceConfig&) = default;
};

struct StackZoneConfig {
  Rational low_frac = MakeRational(1, 4);
  Rational high_frac = MakeRational(9, 10);

  // 0 < low < high < 1, else kInvalidArgument.
  void Validate() const;
  friend bool operator==(const StackZoneConfig&, const StackZoneConfig&) = default;
};

struct StackAllocation {
  Tid tid = 0;
  std::string role;
  std::uint64_t reserved_kib = 0;
  std::uint64_t guard_kib = 0;
  std::uint64_t peak_used_kib = 0;
  StackPolicy policy = StackPolicy::kFixedSize;
  Tick allocated_at = 0;
  std::uint64_t samples = 0;
  bool faulted = false;
};

struct FaultEvent {
  Tick tick = 0;
  Tid tid = 0;
  FaultKind kind = FaultKind::kAllocationExhaustion;
  // Failed request (reservation plus guard) for exhaustion; observed usage for
  // an overrun.
  std::uint64_t size_kib = 0;
};

using AllocResult = std::variant<StackAllocation, FaultEvent>;

// Bookkeeping for stack ranges. Budget: live reservations and guards plus the
// reserved region never exceed total_kib.
class AddressSpaceModel {
 public:
  explicit AddressSpaceModel(AddressSpaceConfig config);

  const AddressSpaceConfig& config() const { return config_; }
  std::uint64_t budget_kib() const { return config_.total_kib - config_.reserved_kib; }
  std::uint64_t used_kib() const { return used_kib_; }
  std::uint64_t RoundUpPage(std::uint64_t kib) const;

  // On exhaustion the fault is appended to the ledger and nothing else changes.
  // Throws kStackAlreadyAllocated for a live tid.
  AllocResult Allocate(Tid tid, std::string role, std::uint64_t reserved_kib,
                       StackPolicy policy, Tick tick);
  // Moves the allocation to the retired list. Throws kNoSuchThread.
  StackAllocation Release(Tid tid);

  StackAllocation* Find(Tid tid);
  const StackAllocation* Find(Tid tid) const;

  const std::map<Tid, StackAllocation>& live() const { return live_; }
  const std::vector<StackAllocation>& retired() const { return retired_; }
  const std::vector<FaultEvent>& faults() const { return faults_; }
  void RecordFault(const FaultEvent& fault) { faults_.push_back(fault); }

 private:
  AddressSpaceConfig config_;
  std::uint64_t used_kib_ = 0;
  std::map<Tid, StackAllocation> live_;
  std::vector<StackAllocation> retired_;
  std::vector<FaultEvent> faults_;
};

// Low if peak/reserved < low_frac, High if > high_frac, otherwise Normal.
// Throws kNoUsageData before the first sample.
Zone ClassifyZone(const StackAllocation& alloc, const StackZoneConfig& config);

struct RoleHistory {
  std::uint64_t max_peak_kib = 0;
  std::uint64_t lifetimes = 0;
  bool saw_low = false;
  bool saw_high = false;
  friend bool operator==(const RoleHistory&, const RoleHistory&) = default;
};

// Peak stack history keyed by role, carried across runs.
using StackHistory = std::map<std::string, RoleHistory>;

struct StackAdvice {
  std::uint64_t advised_kib = 0;
  Zone zone = Zone::kNormal;
  std::string message;
};

struct SpaceReport {
  std::uint64_t threads = 0;
  std::uint64_t allocated_kib = 0;
  std::uint64_t guard_kib = 0;
  std::uint64_t actual_peak_kib = 0;
  // allocated / actual; zero when nothing was used.
  Rational overhead_ratio;
  // (allocated - actual) / actual; the form in which fixed 8 MiB stacks read
  // as 4300% and tuned ones as 39%.
  Rational overhead_above_actual;
};

struct UsageUpdate {
  std::uint64_t peak_kib = 0;
  std::optional<FaultEvent> fault;
};

class StackTuner {
 public:
  static constexpr std::uint64_t kSafetyNum = 3;
  static constexpr std::uint64_t kSafetyDen = 2;

  StackTuner(AddressSpaceConfig space, StackZoneConfig zones,
             StackHistory history = {});

  // FixedSize reserves max(request, default). Tuned reserves the role advice
  // when history exists, else the request or default, capped by the request
  // or default and floored at 16 KiB.
  AllocResult AllocStack(Tid tid, std::string_view role,
                         std::optional<std::uint64_t> request_kib,
                         StackPolicy policy, Tick tick);

  // Running max of observed usage; an overrun of the reservation records one
  // GuardPageOverrun and marks the stack faulted. Throws kNoSuchThread.
  UsageUpdate RecordUsage(Tid tid, std::uint64_t used_kib, Tick tick);

  // End of the thread's lifetime: frees the range and folds its peak into the
  // role history.
  void ReleaseStack(Tid tid);

  // Throws kNoUsageData without history for the role.
  StackAdvice AdviseStack(std::string_view role) const;

  SpaceReport Report() const;

  // History including the peaks of still-live stacks, for the next run.
  StackHistory HistoryWithLive() const;

  const StackHistory& history() const { return history_; }
  const AddressSpaceModel& address_space() const { return space_; }
  const StackZoneConfig& zones() const { return zones_; }

 private:
  void Fold(const StackAllocation& alloc, StackHistory& into) const;

  AddressSpaceModel space_;
  StackZoneConfig zones_;
  StackHistory history_;
};

SpaceReport SpaceReportOf(const AddressSpaceModel& model);

}  // namespace tek

#endif  // TEK_STACK_TUNER_H_
