#ifndef TEK_SIM_KERNEL_H_
#define TEK_SIM_KERNEL_H_

// Discrete-time engine. One tick is one simulated millisecond on a single CPU.
// Each tick: admit arrivals, wake sleepers, deliver user events, pick a thread,
// charge it one tick, advance its behavior, sample stacks, let the mediator
// restore Lazy threads, and run the monitor on its period.

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "tek/cpu_mediator.h"
#include "tek/prng.h"
#include "tek/scenario.h"
#include "tek/sched_core.h"
#include "tek/stack_tuner.h"
#include "tek/thread_registry.h"

namespace tek {

enum class ThreadState : std::uint8_t {
  kNotArrived,
  kRunnable,
  kBlocked,
  kAwaitingEvent,
  kInFast,
  kInLazy,
  kDead,
};
std::string_view ToString(ThreadState s);

struct SimThread {
  Tid tid = 0;
  std::size_t spec_index = 0;
  GroupName group = GroupName::kNormal;
  Nice nice;
  Criticality criticality = Criticality::kNonTimeCritical;
  std::string role;
  Tick arrival_tick = 0;
  BehaviorTemplate behavior;
  std::optional<std::uint64_t> stack_request_kib;
  // (offset from arrival, used KiB), ascending offsets.
  std::vector<std::pair<Tick, std::uint64_t>> stack_demand_trace;
  Xorshift64Star rng{0};

  // Dynamic state. Runnable threads report kInFast/kInLazy through
  // Simulation::StateOf.
  ThreadState state = ThreadState::kNotArrived;
  std::size_t phase_index = 0;
  bool started = false;
  Tick phase_remaining = 0;
  Tick wake_tick = 0;
  std::size_t next_stack_sample = 0;
  std::deque<std::size_t> pending_events;
  std::optional<std::size_t> current_event;
  bool creation_failed = false;
  bool stack_faulted = false;
  Tick death_tick = -1;

  // Metrics.
  Tick cpu_ticks = 0;
  std::uint64_t context_switches = 0;
  std::uint64_t involuntary_preemptions = 0;
  // Start of the current runnable-but-not-running stretch.
  Tick wait_start = 0;
  Tick max_wait = 0;
};

struct UserEvent {
  std::uint64_t event_id = 0;
  Tid target = 0;
  Tick arrival_tick = 0;
  std::optional<Tick> completion_tick;
  bool undeliverable = false;
};

struct ThreadMetrics {
  Tid tid = 0;
  std::string role;
  GroupName group = GroupName::kNormal;
  Criticality criticality = Criticality::kNonTimeCritical;
  Tick arrival_tick = 0;
  Tick cpu_ticks = 0;
  std::uint64_t context_switches = 0;
  std::uint64_t involuntary_preemptions = 0;
  std::uint64_t events_completed = 0;
  Tick response_total = 0;
  Tick max_response = 0;
  Tick max_wait = 0;
  std::string final_state;
};

struct ResponseSample {
  std::uint64_t event_id = 0;
  Tid tid = 0;
  Criticality criticality = Criticality::kNonTimeCritical;
  Tick arrival_tick = 0;
  Tick completion_tick = 0;
  Tick response() const { return completion_tick - arrival_tick; }
};

struct TraceEntry {
  Tick tick = 0;
  std::optional<Tid> running;
  std::string event;
};

struct StackRow {
  StackAllocation alloc;
  bool live = false;
  Zone zone = Zone::kUnknown;
  std::string advisory;
};

struct ResponseStats {
  std::uint64_t count = 0;
  Rational mean;
  double cv = 0.0;  // population stddev / mean
  Tick max = 0;
};

struct MetricsReport {
  std::string scenario;
  RunMode mode = RunMode::kBaseline;
  std::uint64_t seed = 0;
  Tick elapsed_ticks = 0;
  Tick idle_ticks = 0;
  std::uint64_t context_switches = 0;
  std::uint64_t tek_episodes = 0;
  std::uint64_t undeliverable_events = 0;
  std::uint64_t unfinished_events = 0;
  std::vector<ThreadMetrics> threads;
  std::vector<ResponseSample> responses;
  std::vector<FaultEvent> faults;
  SpaceReport space;
  std::vector<StackRow> stacks;
  std::vector<MigrationRecord> migrations;
  std::vector<std::byte> table_dump;
  std::string table_csv;
  std::vector<TraceEntry> trace;
  std::uint64_t monitor_samples = 0;
  std::uint64_t monitor_records_touched = 0;

  ResponseStats ResponsesOf(Criticality c) const;
  std::uint64_t PreemptionsOf(Criticality c) const;
  std::uint64_t FaultCount(FaultKind kind) const;
  std::optional<FaultEvent> FirstFault(FaultKind kind) const;
};

struct SimOptions {
  bool record_trace = false;
};

class Simulation : public MonitorSource {
 public:
  // Called once per tick after the pick and before the chosen thread is
  // charged.
  using Observer = std::function<void(const Simulation&, Tick, std::optional<Tid>)>;

  // `mode` must be kBaseline or kTek. `history` seeds the Stack Tuner.
  Simulation(const ScenarioConfig& config, RunMode mode, StackHistory history = {},
             SimOptions options = {});

  void Step();
  bool Finished() const;
  MetricsReport Run();
  MetricsReport Report() const;

  // Extra event for `target` arriving at `tick` (>= now). Throws kNoSuchThread.
  void InjectEvent(Tid target, Tick tick);

  void set_observer(Observer observer) { observer_ = std::move(observer); }

  Tick now() const { return now_; }
  RunMode mode() const { return mode_; }
  const SchedulerState& scheduler() const { return sched_; }
  const StackTuner& tuner() const { return tuner_; }
  const ThreadInformationTable& table() const { return table_; }
  ThreadInformationTable& table() { return table_; }
  const std::vector<SimThread>& threads() const { return threads_; }
  const SimThread& thread(Tid tid) const;
  const std::vector<UserEvent>& events() const { return events_; }
  ThreadState StateOf(Tid tid) const;

  std::vector<ThreadStats> CollectLive() const override;

 private:
  SimThread& mutable_thread(Tid tid);
  void Note(const std::string& text);
  void Admit(SimThread& th);
  void Deliver(std::size_t event_index);
  // Moves through zero-time phases starting at `boundary` until the thread is
  // computing, sleeping, waiting for an event or dead.
  void AdvancePhases(SimThread& th, Tick boundary);
  void SetRunnable(SimThread& th, Tick boundary);
  void SetUnrunnable(SimThread& th, ThreadState state, Tick boundary);
  void CompleteCurrentEvent(SimThread& th, Tick boundary);
  void Kill(SimThread& th, Tick boundary);
  void SampleStacks();
  void DrainMediatorLog();
  void InsertEvent(UserEvent event);

  ScenarioConfig config_;
  RunMode mode_;
  SimOptions options_;
  SchedulerState sched_;
  StackTuner tuner_;
  ThreadInformationTable table_;
  ThreadMonitor monitor_;
  // Sorted by arrival; threads_[i].tid == i + 1.
  std::vector<SimThread> threads_;
  std::priority_queue<std::pair<Tick, Tid>, std::vector<std::pair<Tick, Tid>>,
                      std::greater<>>
      wakeups_;
  std::size_t next_arrival_ = 0;
  // Sorted by (arrival_tick, event_id); next_event_ walks it.
  std::vector<UserEvent> events_;
  std::size_t next_event_ = 0;
  std::uint64_t next_event_id_ = 0;
  Tick now_ = 0;
  std::optional<Tid> prev_running_;
  Tick idle_ticks_ = 0;
  std::uint64_t context_switches_ = 0;
  std::uint64_t undeliverable_ = 0;
  std::vector<MigrationRecord> migrations_;
  std::vector<TraceEntry> trace_;
  std::string tick_notes_;
  Observer observer_;
};

// Runs one mode (kBaseline or kTek), including Tuned warm-up runs.
MetricsReport RunScenario(const ScenarioConfig& config, RunMode mode,
                          SimOptions options = {});

}  // namespace tek

#endif  // TEK_SIM_KERNEL_H_
