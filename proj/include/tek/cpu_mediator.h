#ifndef TEK_CPU_MEDIATOR_H_
#define TEK_CPU_MEDIATOR_H_

// SCHED_TEK: time-critical threads of the requesting group run exclusively in
// the Fast Region while every non-time-critical thread waits in the Lazy
// Region. When Fast drains, Lazy members go back to their groups.

#include <optional>
#include <vector>

#include "tek/sched_core.h"

namespace tek {

struct SchedParams {
  Policy policy = Policy::kSchedNormal;
  Nice priority;
};

struct MigrationReport {
  Tick tick = 0;
  Tid caller = 0;
  // Threads newly linked by this call; already-migrated tids are not repeated.
  std::vector<Tid> fast;
  std::vector<Tid> lazy;
};

struct RestoredThread {
  Tid tid = 0;
  GroupName group = GroupName::kNormal;
  Policy policy = Policy::kSchedNormal;
  int nice = 0;
  Rational vruntime;
};

struct RestorationReport {
  Tick tick = 0;
  std::vector<RestoredThread> restored;
};

// Errors: kNoSuchThread, kCriticalityMismatch (SchedTek on a thread not marked
// time-critical). SchedTek on a runnable thread migrates it immediately.
std::optional<MigrationReport> SetSchedParam(SchedulerState& state, Tid tid,
                                             const SchedParams& params);

// Two steps: pull the runnable time-critical threads of the caller's group into
// Fast, then park every runnable non-time-critical thread in Lazy.
// Throws kNotEligible unless the caller is runnable, time-critical and under
// SchedTek.
MigrationReport EnterTek(SchedulerState& state, Tid tid);

// Minimum (vruntime, tid) member of Fast; nullopt when Fast is empty. With
// max_lazy_delay set, an overdue Lazy member is granted the tick instead.
std::optional<Tid> MediatorPick(SchedulerState& state);

// Restores every Lazy member to its origin group once Fast is empty.
std::optional<RestorationReport> ExitTekIfEmpty(SchedulerState& state);

// Single-thread moves used by EnterTek and by wake-ups during an episode.
void MoveToFast(SchedulerState& state, SchedEntity& e);
void MoveToLazy(SchedulerState& state, SchedEntity& e);
// Takes a Fast member back to its origin group without touching Lazy.
void ReturnFromFast(SchedulerState& state, SchedEntity& e);

}  // namespace tek

#endif  // TEK_CPU_MEDIATOR_H_
