#include "tek/sched_core.h"

#include <algorithm>
#include <string>

#include "tek/cpu_mediator.h"

namespace tek {

Nice::Nice(int value) : value_(value) {
  if (value < kMin || value > kMax) {
    Fail(ErrorCode::kInvalidArgument,
         "nice " + std::to_string(value) + " outside [-20, 19]");
  }
}

WeightTable WeightTable::PaperLinear() {
  std::array<std::int64_t, kSize> w{};
  for (int n = Nice::kMin; n <= Nice::kMax; ++n) {
    w[static_cast<std::size_t>(n - Nice::kMin)] = 275 - 10 * n;
  }
  return FromWeights(WeightKind::kPaperLinear, w);
}

WeightTable WeightTable::Geometric() {
  // 1024 * (4/5)^n computed exactly, then rounded half up.
  std::array<std::int64_t, kSize> w{};
  for (int n = Nice::kMin; n <= Nice::kMax; ++n) {
    BigInt num = 1024;
    BigInt den = 1;
    for (int i = 0; i < (n < 0 ? -n : n); ++i) {
      if (n > 0) {
        num *= 4;
        den *= 5;
      } else {
        num *= 5;
        den *= 4;
      }
    }
    BigInt rounded = (2 * num + den) / (2 * den);
    w[static_cast<std::size_t>(n - Nice::kMin)] = rounded.convert_to<std::int64_t>();
  }
  return FromWeights(WeightKind::kGeometric, w);
}

WeightTable WeightTable::FromWeights(WeightKind kind,
                                     const std::array<std::int64_t, kSize>& weights) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) {
      Fail(ErrorCode::kInvalidArgument, "weights must be positive");
    }
    if (i > 0 && weights[i] >= weights[i - 1]) {
      Fail(ErrorCode::kInvalidArgument, "weights must decrease with nice");
    }
  }
  return WeightTable(kind, weights);
}

std::int64_t WeightOf(Nice nice, const WeightTable& table) {
  return table.weights()[static_cast<std::size_t>(nice.index())];
}

std::vector<std::pair<Tid, Rational>> CpuShares(
    std::span<const std::pair<Tid, Nice>> threads, const WeightTable& table) {
  if (threads.empty()) Fail(ErrorCode::kNoRunnableThreads);
  std::int64_t total = 0;
  for (const auto& [tid, nice] : threads) total += WeightOf(nice, table);
  std::vector<std::pair<Tid, Rational>> shares;
  shares.reserve(threads.size());
  for (const auto& [tid, nice] : threads) {
    shares.emplace_back(tid, MakeRational(WeightOf(nice, table), total));
  }
  return shares;
}

RunQueue::RunQueue()
    : comparisons_(std::make_unique<std::uint64_t>(0)),
      keys_(KeyLess{comparisons_.get()}) {}

void RunQueue::Insert(const Key& key) { keys_.insert(key); }

bool RunQueue::Erase(const Key& key) { return keys_.erase(key) != 0; }

std::optional<RunQueue::Key> RunQueue::Min() const {
  if (keys_.empty()) return std::nullopt;
  return *keys_.begin();
}

std::array<Rational, kNumGroups> DefaultGroupShares() {
  return {MakeRational(40), MakeRational(30), MakeRational(20), MakeRational(10)};
}

SchedulerState::SchedulerState(WeightTable weight_table,
                               const std::array<Rational, kNumGroups>& shares)
    : table(std::move(weight_table)) {
  for (GroupName g : kAllGroups) {
    const Rational& share = shares[GroupIndex(g)];
    if (share <= 0) Fail(ErrorCode::kInvalidArgument, "group share must be positive");
    groups[GroupIndex(g)].name = g;
    groups[GroupIndex(g)].share = share;
  }
}

SchedEntity& SchedulerState::entity(Tid tid) {
  auto it = entities.find(tid);
  if (it == entities.end()) Fail(ErrorCode::kNoSuchThread);
  return it->second;
}

const SchedEntity& SchedulerState::entity(Tid tid) const {
  auto it = entities.find(tid);
  if (it == entities.end()) Fail(ErrorCode::kNoSuchThread);
  return it->second;
}

SchedEntity* SchedulerState::Find(Tid tid) {
  auto it = entities.find(tid);
  return it == entities.end() ? nullptr : &it->second;
}

void SchedulerState::EnqueueInGroup(SchedEntity& e) {
  SchedGroup& g = group(e.group);
  if (g.queue.empty() && g.vtime < group_floor) g.vtime = group_floor;
  g.queue.Insert({e.vruntime, e.tid});
  e.placement = Placement::kGroup;
}

void SchedulerState::DequeueFromGroup(SchedEntity& e) {
  if (!group(e.group).queue.Erase({e.vruntime, e.tid})) {
    Fail(ErrorCode::kInvariantViolation,
         "tid " + std::to_string(e.tid) + " missing from its group queue");
  }
  e.placement = Placement::kNone;
}

Rational SchedulerState::GroupMinVruntime(GroupName g) const {
  const SchedGroup& sg = group(g);
  if (auto k = sg.queue.Min()) return k->vruntime;
  return sg.min_vruntime;
}

Rational ChargeVruntime(SchedEntity& e, std::int64_t real_ns,
                        const WeightTable& table) {
  if (real_ns < 0) Fail(ErrorCode::kInvalidArgument, "negative run time");
  if (real_ns > 0) {
    const std::int64_t anchor = WeightOf(Nice(0), table);
    e.vruntime += Rational(BigInt(real_ns) * anchor, BigInt(WeightOf(e.nice, table)));
  }
  return e.vruntime;
}

Rational NewThreadVruntime(const SchedulerState& state, GroupName group) {
  Rational v = state.GroupMinVruntime(group);
  return v < 0 ? Rational(0) : v;
}

void RegisterThread(SchedulerState& state, SchedEntity entity) {
  const Tid tid = entity.tid;
  if (state.entities.count(tid) != 0) Fail(ErrorCode::kThreadExists);
  entity.vruntime = NewThreadVruntime(state, entity.group);
  entity.placement = Placement::kNone;
  state.entities.emplace(tid, std::move(entity));
}

void AdmitThread(SchedulerState& state, SchedEntity entity) {
  const Tid tid = entity.tid;
  RegisterThread(state, std::move(entity));
  MakeRunnable(state, tid);
}

void MakeRunnable(SchedulerState& state, Tid tid) {
  SchedEntity& e = state.entity(tid);
  if (e.placement != Placement::kNone) return;
  const Rational floor = state.GroupMinVruntime(e.group);
  if (e.vruntime < floor) e.vruntime = floor;
  state.EnqueueInGroup(e);

  const bool critical = e.criticality == Criticality::kTimeCritical;
  if (critical && e.policy == Policy::kSchedTek) {
    EnterTek(state, tid);
    return;
  }
  if (state.mediator.fast.empty()) return;
  if (!critical) {
    MoveToLazy(state, e);
  } else if (state.mediator.tek_groups.count(e.group) != 0) {
    MoveToFast(state, e);
  }
}

void MakeUnrunnable(SchedulerState& state, Tid tid) {
  SchedEntity& e = state.entity(tid);
  switch (e.placement) {
    case Placement::kNone:
      return;
    case Placement::kGroup:
      state.DequeueFromGroup(e);
      return;
    case Placement::kFast:
      state.mediator.fast.Unlink(tid);
      e.placement = Placement::kNone;
      ExitTekIfEmpty(state);
      return;
    case Placement::kLazy:
      state.mediator.lazy.Unlink(tid);
      e.placement = Placement::kNone;
      return;
  }
}

void RemoveThread(SchedulerState& state, Tid tid) {
  MakeUnrunnable(state, tid);
  state.entities.erase(tid);
}

std::optional<Tid> PickNext(SchedulerState& state) {
  if (!state.mediator.fast.empty()) return MediatorPick(state);

  SchedGroup* best = nullptr;
  for (SchedGroup& g : state.groups) {
    if (g.queue.empty()) continue;
    // Strict comparison keeps the fixed order urgent < normal < service <
    // background on ties.
    if (best == nullptr || g.vtime < best->vtime) best = &g;
  }
  if (best == nullptr) return std::nullopt;
  if (state.group_floor < best->vtime) state.group_floor = best->vtime;
  const RunQueue::Key key = *best->queue.Min();
  if (best->min_vruntime < key.vruntime) best->min_vruntime = key.vruntime;
  return key.tid;
}

void AccountRun(SchedulerState& state, Tid tid, std::int64_t real_ns) {
  SchedEntity& e = state.entity(tid);
  if (e.placement != Placement::kGroup) {
    ChargeVruntime(e, real_ns, state.table);
    if (e.placement == Placement::kLazy) e.lazy_since = state.now + 1;
    return;
  }
  SchedGroup& g = state.group(e.group);
  g.queue.Erase({e.vruntime, e.tid});
  ChargeVruntime(e, real_ns, state.table);
  g.queue.Insert({e.vruntime, e.tid});
  g.vtime += Rational(BigInt(real_ns)) / g.share;
  g.consumed_ns += real_ns;
  const Rational head = g.queue.Min()->vruntime;
  if (g.min_vruntime < head) g.min_vruntime = head;
}

}  // namespace tek
