#include "tek/cpu_mediator.h"

#include <array>

namespace tek {

namespace {

RegionMember SaveOrigin(const SchedEntity& e) {
  return RegionMember{e.tid, e.group, e.policy, e.nice.value(), e.vruntime};
}

void Log(SchedulerState& state, Tid tid, Location from, Location to) {
  state.mediator.log.push_back(MigrationRecord{state.now, tid, from, to});
}

bool IsCritical(const SchedEntity& e) {
  return e.criticality == Criticality::kTimeCritical;
}

}  // namespace

void MoveToFast(SchedulerState& state, SchedEntity& e) {
  if (e.placement != Placement::kGroup) return;
  RegionMember member = SaveOrigin(e);
  state.DequeueFromGroup(e);
  state.mediator.fast.Link(std::move(member));
  e.placement = Placement::kFast;
  Log(state, e.tid, Location::InGroup(e.group), Location::Fast());
}

void MoveToLazy(SchedulerState& state, SchedEntity& e) {
  if (e.placement != Placement::kGroup) return;
  RegionMember member = SaveOrigin(e);
  state.DequeueFromGroup(e);
  state.mediator.lazy.Link(std::move(member));
  e.placement = Placement::kLazy;
  e.lazy_since = state.now;
  Log(state, e.tid, Location::InGroup(e.group), Location::Lazy());
}

void ReturnFromFast(SchedulerState& state, SchedEntity& e) {
  if (e.placement != Placement::kFast) return;
  state.mediator.fast.Unlink(e.tid);
  e.placement = Placement::kNone;
  const Rational floor = state.GroupMinVruntime(e.group);
  if (e.vruntime < floor) e.vruntime = floor;
  state.EnqueueInGroup(e);
  Log(state, e.tid, Location::Fast(), Location::InGroup(e.group));
}

std::optional<MigrationReport> SetSchedParam(SchedulerState& state, Tid tid,
                                             const SchedParams& params) {
  SchedEntity* e = state.Find(tid);
  if (e == nullptr) Fail(ErrorCode::kNoSuchThread);
  if (params.policy == Policy::kSchedTek && !IsCritical(*e)) {
    Fail(ErrorCode::kCriticalityMismatch);
  }
  const Policy previous = e->policy;
  e->policy = params.policy;
  e->nice = params.priority;
  if (RegionMember* m = state.mediator.lazy.Find(tid)) {
    m->saved_policy = params.policy;
    m->saved_nice = params.priority.value();
  }

  if (params.policy == Policy::kSchedTek) {
    if (e->placement == Placement::kGroup || e->placement == Placement::kFast) {
      return EnterTek(state, tid);
    }
    // Blocked threads enter the Fast Region when they next become runnable.
    return std::nullopt;
  }
  if (previous == Policy::kSchedTek && e->placement == Placement::kFast) {
    ReturnFromFast(state, *e);
    ExitTekIfEmpty(state);
  }
  return std::nullopt;
}

MigrationReport EnterTek(SchedulerState& state, Tid tid) {
  SchedEntity* caller = state.Find(tid);
  if (caller == nullptr || caller->placement == Placement::kNone ||
      caller->placement == Placement::kLazy || !IsCritical(*caller) ||
      caller->policy != Policy::kSchedTek) {
    Fail(ErrorCode::kNotEligible);
  }
  MediatorState& m = state.mediator;
  MigrationReport report;
  report.tick = state.now;
  report.caller = tid;
  if (m.fast.empty()) ++m.episodes;

  const GroupName group = caller->group;
  m.tek_groups.insert(group);

  // Step 1: time-critical threads of the caller's group.
  for (auto& [other_tid, other] : state.entities) {
    if (other.group == group && IsCritical(other) &&
        other.placement == Placement::kGroup) {
      MoveToFast(state, other);
      report.fast.push_back(other_tid);
    }
  }
  // Step 2: every runnable non-time-critical thread, system-wide.
  for (auto& [other_tid, other] : state.entities) {
    if (!IsCritical(other) && other.placement == Placement::kGroup) {
      MoveToLazy(state, other);
      report.lazy.push_back(other_tid);
    }
  }
  return report;
}

std::optional<Tid> MediatorPick(SchedulerState& state) {
  MediatorState& m = state.mediator;
  if (m.fast.empty()) return std::nullopt;

  if (m.max_lazy_delay) {
    const SchedEntity* overdue = nullptr;
    for (const RegionMember& member : m.lazy) {
      const SchedEntity& e = state.entity(member.tid);
      if (state.now - e.lazy_since < *m.max_lazy_delay) continue;
      if (overdue == nullptr || e.lazy_since < overdue->lazy_since ||
          (e.lazy_since == overdue->lazy_since && e.tid < overdue->tid)) {
        overdue = &e;
      }
    }
    if (overdue != nullptr) return overdue->tid;
  }

  const SchedEntity* best = nullptr;
  for (const RegionMember& member : m.fast) {
    const SchedEntity& e = state.entity(member.tid);
    if (best == nullptr || e.vruntime < best->vruntime ||
        (e.vruntime == best->vruntime && e.tid < best->tid)) {
      best = &e;
    }
  }
  return best->tid;
}

std::optional<RestorationReport> ExitTekIfEmpty(SchedulerState& state) {
  MediatorState& m = state.mediator;
  if (!m.fast.empty()) return std::nullopt;
  m.tek_groups.clear();
  if (m.lazy.empty()) return std::nullopt;

  // Floors are taken before any re-insertion so the outcome does not depend on
  // list order.
  std::array<Rational, kNumGroups> floors;
  for (GroupName g : kAllGroups) floors[GroupIndex(g)] = state.GroupMinVruntime(g);

  std::vector<Tid> order;
  order.reserve(m.lazy.size());
  for (const RegionMember& member : m.lazy) order.push_back(member.tid);

  RestorationReport report;
  report.tick = state.now;
  for (Tid tid : order) {
    RegionMember member = *m.lazy.Unlink(tid);
    SchedEntity& e = state.entity(tid);
    e.group = member.origin;
    e.policy = member.saved_policy;
    e.nice = Nice(member.saved_nice);
    // A delay-capped grant may have advanced vruntime past the saved value.
    Rational base = e.vruntime < member.saved_vruntime ? member.saved_vruntime : e.vruntime;
    const Rational& floor = floors[GroupIndex(member.origin)];
    e.vruntime = base < floor ? floor : base;
    e.placement = Placement::kNone;
    state.EnqueueInGroup(e);
    state.mediator.log.push_back(
        MigrationRecord{state.now, tid, Location::Lazy(), Location::InGroup(e.group)});
    report.restored.push_back({tid, e.group, e.policy, e.nice.value(), e.vruntime});
  }
  return report;
}

}  // namespace tek
