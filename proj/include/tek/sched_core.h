#ifndef TEK_SCHED_CORE_H_
#define TEK_SCHED_CORE_H_

// CFS-style fair scheduling on a single simulated CPU: nice weights, virtual
// run-time accounting, per-group ordered run queues and a share-weighted
// choice between the four scheduling groups.

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "tek/rational.h"
#include "tek/region.h"
#include "tek/types.h"

namespace tek {

class Nice {
 public:
  static constexpr int kMin = -20;
  static constexpr int kMax = 19;

  constexpr Nice() = default;
  // Throws TekError(kInvalidArgument) outside [-20, 19].
  explicit Nice(int value);

  constexpr int value() const { return value_; }
  constexpr int index() const { return value_ - kMin; }

  friend constexpr auto operator<=>(Nice, Nice) = default;

 private:
  int value_ = 0;
};

enum class WeightKind { kPaperLinear, kGeometric };

// The 40 load weights, indexed by nice + 20.
class WeightTable {
 public:
  static constexpr int kSize = 40;

  // weight(n) = 275 - 10n. Four threads at nice 1..4 get 26.5/25.5/24.5/23.5%.
  static WeightTable PaperLinear();
  // weight(n) = round(1024 * 1.25^-n), the shape of the kernel's table.
  static WeightTable Geometric();
  // Validates size, positivity and strict decrease.
  static WeightTable FromWeights(WeightKind kind,
                                 const std::array<std::int64_t, kSize>& weights);

  WeightKind kind() const { return kind_; }
  std::span<const std::int64_t, kSize> weights() const { return weights_; }

 private:
  WeightTable(WeightKind kind, const std::array<std::int64_t, kSize>& weights)
      : kind_(kind), weights_(weights) {}

  WeightKind kind_;
  std::array<std::int64_t, kSize> weights_;
};

std::int64_t WeightOf(Nice nice, const WeightTable& table);

// share_i = weight_i / sum(weights). Throws kNoRunnableThreads on empty input.
std::vector<std::pair<Tid, Rational>> CpuShares(
    std::span<const std::pair<Tid, Nice>> threads, const WeightTable& table);

// Ordered run queue keyed by (vruntime, tid), backed by a red-black tree.
// Key comparisons are counted so tests can check the O(log n) contract.
class RunQueue {
 public:
  struct Key {
    Rational vruntime;
    Tid tid = 0;
  };

  RunQueue();
  RunQueue(RunQueue&&) noexcept = default;
  RunQueue& operator=(RunQueue&&) noexcept = default;

  void Insert(const Key& key);
  // Returns false when the key is not present.
  bool Erase(const Key& key);
  std::optional<Key> Min() const;

  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }

  auto begin() const { return keys_.begin(); }
  auto end() const { return keys_.end(); }

  std::uint64_t comparisons() const { return *comparisons_; }
  void ResetComparisons() { *comparisons_ = 0; }

 private:
  struct KeyLess {
    std::uint64_t* counter;
    bool operator()(const Key& a, const Key& b) const {
      ++*counter;
      if (a.vruntime != b.vruntime) return a.vruntime < b.vruntime;
      return a.tid < b.tid;
    }
  };

  std::unique_ptr<std::uint64_t> comparisons_;
  std::set<Key, KeyLess> keys_;
};

struct SchedGroup {
  GroupName name = GroupName::kUrgent;
  Rational share;
  RunQueue queue;
  // Consumed time divided by share; the group with the smallest value runs.
  Rational vtime;
  // Monotonic lower bound on vruntimes handed out in this group.
  Rational min_vruntime;
  std::int64_t consumed_ns = 0;
};

enum class Placement : std::uint8_t { kNone, kGroup, kFast, kLazy };

struct SchedEntity {
  Tid tid = 0;
  GroupName group = GroupName::kNormal;
  Nice nice;
  Policy policy = Policy::kSchedNormal;
  Criticality criticality = Criticality::kNonTimeCritical;
  Rational vruntime;
  Placement placement = Placement::kNone;
  Tick lazy_since = 0;
};

// Default group shares: urgent 40, normal 30, service 20, background 10.
std::array<Rational, kNumGroups> DefaultGroupShares();

struct SchedulerState {
  SchedulerState(WeightTable weight_table,
                 const std::array<Rational, kNumGroups>& shares);

  SchedGroup& group(GroupName g) { return groups[GroupIndex(g)]; }
  const SchedGroup& group(GroupName g) const { return groups[GroupIndex(g)]; }

  // Throws kNoSuchThread.
  SchedEntity& entity(Tid tid);
  const SchedEntity& entity(Tid tid) const;
  SchedEntity* Find(Tid tid);

  // Raw queue membership; placement rules live in the free functions below.
  void EnqueueInGroup(SchedEntity& e);
  void DequeueFromGroup(SchedEntity& e);

  // Smallest vruntime in the group, or the group's floor when it is empty.
  Rational GroupMinVruntime(GroupName g) const;

  WeightTable table;
  std::array<SchedGroup, kNumGroups> groups;
  // Ordered by tid so system-wide sweeps are deterministic.
  std::map<Tid, SchedEntity> entities;
  MediatorState mediator;
  Tick now = 0;
  // Monotonic lower bound on group vtimes, used when a group reactivates.
  Rational group_floor;
};

// new vruntime = old + real_ns * weight(0) / weight(nice). Stored on `e`.
Rational ChargeVruntime(SchedEntity& e, std::int64_t real_ns,
                        const WeightTable& table);

// max(0, smallest vruntime in the group).
Rational NewThreadVruntime(const SchedulerState& state, GroupName group);

// Registers a thread that is not yet runnable, starting at NewThreadVruntime.
void RegisterThread(SchedulerState& state, SchedEntity entity);
// RegisterThread followed by MakeRunnable.
void AdmitThread(SchedulerState& state, SchedEntity entity);
// Makes a known, currently unrunnable thread runnable. While the Fast Region
// is occupied the thread is routed through the mediator.
void MakeRunnable(SchedulerState& state, Tid tid);
// Removes the thread from whichever queue or region holds it.
void MakeUnrunnable(SchedulerState& state, Tid tid);
// Unrunnable plus forgetting the entity.
void RemoveThread(SchedulerState& state, Tid tid);

// Next thread to run, or nullopt for idle.
std::optional<Tid> PickNext(SchedulerState& state);

// Charges real CPU time to a thread and keeps queues and group accounting in
// order.
void AccountRun(SchedulerState& state, Tid tid, std::int64_t real_ns);

}  // namespace tek

#endif  // TEK_SCHED_CORE_H_
