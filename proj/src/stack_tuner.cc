#include "tek/stack_tuner.h"

#include <algorithm>
#include <string>

namespace tek {

std::string_view ToString(StackPolicy p) {
  return p == StackPolicy::kTuned ? "tuned" : "fixed";
}

std::string_view ToString(Zone z) {
  switch (z) {
    case Zone::kUnknown: return "unknown";
    case Zone::kLow: return "low";
    case Zone::kNormal: return "normal";
    case Zone::kHigh: return "high";
  }
  return "?";
}

std::string_view ToString(FaultKind k) {
  return k == FaultKind::kAllocationExhaustion ? "allocation_exhaustion"
                                               : "guard_page_overrun";
}

void AddressSpaceConfig::Validate() const {
  if (page_kib == 0) Fail(ErrorCode::kInvalidArgument, "page size must be positive");
  if (reserved_kib > total_kib) {
    Fail(ErrorCode::kInvalidArgument, "reserved region exceeds the address space");
  }
  if (default_stack_kib < kMinStackKiB || max_stack_kib < kMinStackKiB) {
    Fail(ErrorCode::kInvalidArgument, "stack sizes must be at least 16 KiB");
  }
}

void StackZoneConfig::Validate() const {
  if (!(low_frac > 0 && low_frac < high_frac && high_frac < 1)) {
    Fail(ErrorCode::kInvalidArgument, "zone fractions must satisfy 0 < low < high < 1");
  }
}

AddressSpaceModel::AddressSpaceModel(AddressSpaceConfig config)
    : config_(config) {
  config_.Validate();
}

std::uint64_t AddressSpaceModel::RoundUpPage(std::uint64_t kib) const {
  const std::uint64_t p = config_.page_kib;
  return (kib + p - 1) / p * p;
}

AllocResult AddressSpaceModel::Allocate(Tid tid, std::string role,
                                        std::uint64_t reserved_kib,
                                        StackPolicy policy, Tick tick) {
  if (live_.count(tid) != 0) Fail(ErrorCode::kStackAlreadyAllocated);
  if (reserved_kib % config_.page_kib != 0 || reserved_kib < kMinStackKiB) {
    Fail(ErrorCode::kInvalidArgument, "stack reservation must be page aligned and >= 16 KiB");
  }
  const std::uint64_t need = reserved_kib + config_.page_kib;
  if (used_kib_ + need > budget_kib()) {
    FaultEvent fault{tick, tid, FaultKind::kAllocationExhaustion, need};
    faults_.push_back(fault);
    return fault;
  }
  StackAllocation alloc;
  alloc.tid = tid;
  alloc.role = std::move(role);
  alloc.reserved_kib = reserved_kib;
  alloc.guard_kib = config_.page_kib;
  alloc.policy = policy;
  alloc.allocated_at = tick;
  used_kib_ += need;
  live_.emplace(tid, alloc);
  return alloc;
}

StackAllocation AddressSpaceModel::Release(Tid tid) {
  auto it = live_.find(tid);
  if (it == live_.end()) Fail(ErrorCode::kNoSuchThread);
  StackAllocation alloc = std::move(it->second);
  live_.erase(it);
  used_kib_ -= alloc.reserved_kib + alloc.guard_kib;
  retired_.push_back(alloc);
  return alloc;
}

StackAllocation* AddressSpaceModel::Find(Tid tid) {
  auto it = live_.find(tid);
  return it == live_.end() ? nullptr : &it->second;
}

const StackAllocation* AddressSpaceModel::Find(Tid tid) const {
  auto it = live_.find(tid);
  return it == live_.end() ? nullptr : &it->second;
}

Zone ClassifyZone(const StackAllocation& alloc, const StackZoneConfig& config) {
  if (alloc.samples == 0) Fail(ErrorCode::kNoUsageData);
  const Rational fraction = MakeRational(static_cast<std::int64_t>(alloc.peak_used_kib),
                                         static_cast<std::int64_t>(alloc.reserved_kib));
  if (fraction < config.low_frac) return Zone::kLow;
  if (fraction > config.high_frac) return Zone::kHigh;
  return Zone::kNormal;
}

StackTuner::StackTuner(AddressSpaceConfig space, StackZoneConfig zones,
                       StackHistory history)
    : space_(space), zones_(std::move(zones)), history_(std::move(history)) {
  zones_.Validate();
}

AllocResult StackTuner::AllocStack(Tid tid, std::string_view role,
                                   std::optional<std::uint64_t> request_kib,
                                   StackPolicy policy, Tick tick) {
  if (space_.Find(tid) != nullptr) Fail(ErrorCode::kStackAlreadyAllocated);
  const AddressSpaceConfig& cfg = space_.config();
  std::uint64_t reserved = 0;
  if (policy == StackPolicy::kFixedSize) {
    reserved = space_.RoundUpPage(std::max(request_kib.value_or(0), cfg.default_stack_kib));
  } else {
    const std::uint64_t cap = request_kib.value_or(cfg.default_stack_kib);
    std::uint64_t base = cap;
    if (history_.count(std::string(role)) != 0) base = AdviseStack(role).advised_kib;
    reserved = std::max(kMinStackKiB, space_.RoundUpPage(std::min(base, cap)));
  }
  return space_.Allocate(tid, std::string(role), reserved, policy, tick);
}

UsageUpdate StackTuner::RecordUsage(Tid tid, std::uint64_t used_kib, Tick tick) {
  StackAllocation* alloc = space_.Find(tid);
  if (alloc == nullptr) Fail(ErrorCode::kNoSuchThread);
  alloc->peak_used_kib = std::max(alloc->peak_used_kib, used_kib);
  ++alloc->samples;
  UsageUpdate update{alloc->peak_used_kib, std::nullopt};
  if (used_kib > alloc->reserved_kib && !alloc->faulted) {
    alloc->faulted = true;
    FaultEvent fault{tick, tid, FaultKind::kGuardPageOverrun, used_kib};
    space_.RecordFault(fault);
    update.fault = fault;
  }
  return update;
}

void StackTuner::Fold(const StackAllocation& alloc, StackHistory& into) const {
  if (alloc.samples == 0) return;
  RoleHistory& h = into[alloc.role];
  h.max_peak_kib = std::max(h.max_peak_kib, alloc.peak_used_kib);
  ++h.lifetimes;
  const Zone zone = ClassifyZone(alloc, zones_);
  h.saw_low = h.saw_low || zone == Zone::kLow;
  h.saw_high = h.saw_high || zone == Zone::kHigh;
}

void StackTuner::ReleaseStack(Tid tid) {
  StackAllocation alloc = space_.Release(tid);
  Fold(alloc, history_);
}

StackAdvice StackTuner::AdviseStack(std::string_view role) const {
  auto it = history_.find(std::string(role));
  if (it == history_.end() || it->second.lifetimes == 0) Fail(ErrorCode::kNoUsageData);
  const RoleHistory& h = it->second;
  const std::uint64_t scaled = (h.max_peak_kib * kSafetyNum + kSafetyDen - 1) / kSafetyDen;
  StackAdvice advice;
  advice.advised_kib = std::clamp(space_.RoundUpPage(scaled), kMinStackKiB,
                                  space_.config().max_stack_kib);
  if (h.saw_high) {
    advice.zone = Zone::kHigh;
    advice.message = "thread may end up with a stack overflow";
  } else if (h.saw_low) {
    advice.zone = Zone::kLow;
    advice.message = "thread is wasting virtual memory";
  } else {
    advice.zone = Zone::kNormal;
  }
  return advice;
}

SpaceReport SpaceReportOf(const AddressSpaceModel& model) {
  SpaceReport r;
  auto add = [&r](const StackAllocation& a) {
    ++r.threads;
    r.allocated_kib += a.reserved_kib;
    r.guard_kib += a.guard_kib;
    r.actual_peak_kib += a.peak_used_kib;
  };
  for (const auto& [tid, a] : model.live()) add(a);
  for (const StackAllocation& a : model.retired()) add(a);
  if (r.actual_peak_kib > 0) {
    const auto alloc = static_cast<std::int64_t>(r.allocated_kib);
    const auto actual = static_cast<std::int64_t>(r.actual_peak_kib);
    r.overhead_ratio = MakeRational(alloc, actual);
    r.overhead_above_actual = MakeRational(alloc - actual, actual);
  }
  return r;
}

SpaceReport StackTuner::Report() const { return SpaceReportOf(space_); }

StackHistory StackTuner::HistoryWithLive() const {
  StackHistory merged = history_;
  for (const auto& [tid, alloc] : space_.live()) Fold(alloc, merged);
  return merged;
}

}  // namespace tek
