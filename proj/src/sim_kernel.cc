#include "tek/sim_kernel.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace tek {

namespace {

// Above every (spec << 32 | instance) thread stream.
constexpr std::uint64_t kEventStreamBase = 0xE000000000000000ull;
// Zero-time phases a thread may pass through in one boundary before we call
// the behavior broken.
constexpr int kMaxZeroTimeSteps = 100000;

std::string_view AdvisoryFor(Zone zone) {
  switch (zone) {
    case Zone::kLow: return "thread is wasting virtual memory";
    case Zone::kHigh: return "thread may end up with a stack overflow";
    default: return "";
  }
}

}  // namespace

std::string_view ToString(ThreadState s) {
  switch (s) {
    case ThreadState::kNotArrived: return "not_arrived";
    case ThreadState::kRunnable: return "runnable";
    case ThreadState::kBlocked: return "blocked";
    case ThreadState::kAwaitingEvent: return "awaiting_event";
    case ThreadState::kInFast: return "in_fast";
    case ThreadState::kInLazy: return "in_lazy";
    case ThreadState::kDead: return "dead";
  }
  return "?";
}

ResponseStats MetricsReport::ResponsesOf(Criticality c) const {
  ResponseStats stats;
  Tick sum = 0;
  for (const ResponseSample& r : responses) {
    if (r.criticality != c) continue;
    ++stats.count;
    sum += r.response();
    stats.max = std::max(stats.max, r.response());
  }
  if (stats.count == 0) return stats;
  stats.mean = MakeRational(sum, static_cast<std::int64_t>(stats.count));
  const double mean = static_cast<double>(sum) / static_cast<double>(stats.count);
  double var = 0.0;
  for (const ResponseSample& r : responses) {
    if (r.criticality != c) continue;
    const double d = static_cast<double>(r.response()) - mean;
    var += d * d;
  }
  var /= static_cast<double>(stats.count);
  stats.cv = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
  return stats;
}

std::uint64_t MetricsReport::PreemptionsOf(Criticality c) const {
  std::uint64_t n = 0;
  for (const ThreadMetrics& t : threads) {
    if (t.criticality == c) n += t.involuntary_preemptions;
  }
  return n;
}

std::uint64_t MetricsReport::FaultCount(FaultKind kind) const {
  return static_cast<std::uint64_t>(std::count_if(
      faults.begin(), faults.end(), [kind](const FaultEvent& f) { return f.kind == kind; }));
}

std::optional<FaultEvent> MetricsReport::FirstFault(FaultKind kind) const {
  for (const FaultEvent& f : faults) {
    if (f.kind == kind) return f;
  }
  return std::nullopt;
}

Simulation::Simulation(const ScenarioConfig& config, RunMode mode,
                       StackHistory history, SimOptions options)
    : config_(config),
      mode_(mode),
      options_(options),
      sched_(MakeWeightTable(config.weight_table), config.group_shares),
      tuner_(config.address_space, config.zones, std::move(history)),
      monitor_(config.monitor_period) {
  if (mode != RunMode::kBaseline && mode != RunMode::kTek) {
    Fail(ErrorCode::kInvalidArgument, "simulation mode must be baseline or tek");
  }
  if (std::vector<FieldError> errors = ValidateScenario(config); !errors.empty()) {
    throw ScenarioError(config.name, std::move(errors));
  }
  sched_.mediator.max_lazy_delay = config.max_lazy_delay;

  table_.set_update_sink([this](Tid tid, const AttributeUpdate& u) {
    SchedEntity& e = sched_.entity(tid);
    const Criticality crit = u.criticality.value_or(e.criticality);
    if (u.policy == Policy::kSchedTek && crit != Criticality::kTimeCritical) {
      Fail(ErrorCode::kCriticalityMismatch);
    }
    if (u.criticality) {
      e.criticality = *u.criticality;
      mutable_thread(tid).criticality = *u.criticality;
    }
    if (u.policy || u.priority) {
      SetSchedParam(sched_, tid,
                    SchedParams{u.policy.value_or(e.policy), u.priority.value_or(e.nice)});
    }
  });

  // Tids follow creation order, so tid N is the N-th thread created. Each
  // thread draws from its own stream, keyed by its spec and instance.
  for (std::size_t s = 0; s < config.threads.size(); ++s) {
    const ThreadSpec& spec = config.threads[s];
    for (std::int64_t i = 0; i < spec.count; ++i) {
      SimThread th;
      th.spec_index = s;
      th.group = spec.group;
      th.nice = Nice(spec.nice);
      th.criticality = spec.criticality;
      th.role = spec.role;
      th.behavior = spec.behavior;
      th.stack_request_kib = spec.stack_request_kib;
      th.rng = Xorshift64Star::ForStream(
          config.seed, (static_cast<std::uint64_t>(s) << 32) | static_cast<std::uint64_t>(i));
      th.arrival_tick = th.rng.Uniform(spec.arrival.lo, spec.arrival.hi) +
                        i * spec.arrival_step;
      const std::int64_t peak =
          th.rng.Uniform(spec.stack_peak_kib.lo, spec.stack_peak_kib.hi);
      for (std::int64_t k = 1; k <= spec.stack_steps; ++k) {
        const Tick offset = spec.stack_ramp_ticks * k / spec.stack_steps;
        const std::int64_t used = (peak * k + spec.stack_steps - 1) / spec.stack_steps;
        th.stack_demand_trace.emplace_back(offset, static_cast<std::uint64_t>(used));
      }
      threads_.push_back(std::move(th));
    }
  }
  std::stable_sort(threads_.begin(), threads_.end(),
                   [](const SimThread& a, const SimThread& b) {
                     return a.arrival_tick < b.arrival_tick;
                   });
  for (std::size_t i = 0; i < threads_.size(); ++i) {
    threads_[i].tid = static_cast<Tid>(i + 1);
  }

  for (std::size_t j = 0; j < config.events.size(); ++j) {
    const EventSpec& spec = config.events[j];
    std::vector<Tid> targets;
    for (const SimThread& th : threads_) {
      if (th.role == spec.role) targets.push_back(th.tid);
    }
    Xorshift64Star rng = Xorshift64Star::ForStream(config.seed, kEventStreamBase + j);
    Tick tick = spec.start;
    for (std::int64_t n = 0;
         tick < config.horizon_ticks && (spec.count == 0 || n < spec.count); ++n) {
      for (Tid tid : targets) events_.push_back(UserEvent{0, tid, tick, {}, false});
      tick += std::max<std::int64_t>(1, rng.Uniform(spec.interval.lo, spec.interval.hi));
    }
  }
  std::stable_sort(events_.begin(), events_.end(),
                   [](const UserEvent& a, const UserEvent& b) {
                     if (a.arrival_tick != b.arrival_tick) {
                       return a.arrival_tick < b.arrival_tick;
                     }
                     return a.target < b.target;
                   });
  for (UserEvent& ev : events_) ev.event_id = next_event_id_++;
}

const SimThread& Simulation::thread(Tid tid) const {
  if (tid == 0 || tid > threads_.size()) Fail(ErrorCode::kNoSuchThread);
  return threads_[tid - 1];
}

SimThread& Simulation::mutable_thread(Tid tid) {
  if (tid == 0 || tid > threads_.size()) Fail(ErrorCode::kNoSuchThread);
  return threads_[tid - 1];
}

ThreadState Simulation::StateOf(Tid tid) const {
  const SimThread& th = thread(tid);
  if (th.state != ThreadState::kRunnable) return th.state;
  switch (sched_.entity(tid).placement) {
    case Placement::kFast: return ThreadState::kInFast;
    case Placement::kLazy: return ThreadState::kInLazy;
    default: return ThreadState::kRunnable;
  }
}

void Simulation::Note(const std::string& text) {
  if (!options_.record_trace) return;
  if (!tick_notes_.empty()) tick_notes_ += "; ";
  tick_notes_ += text;
}

void Simulation::InjectEvent(Tid target, Tick tick) {
  thread(target);
  if (tick < now_) Fail(ErrorCode::kInvalidArgument, "event in the past");
  InsertEvent(UserEvent{next_event_id_++, target, tick, {}, false});
}

void Simulation::InsertEvent(UserEvent event) {
  // Only undelivered events move, so indices held by threads stay valid.
  auto it = std::upper_bound(
      events_.begin() + static_cast<std::ptrdiff_t>(next_event_), events_.end(),
      event.arrival_tick,
      [](Tick t, const UserEvent& e) { return t < e.arrival_tick; });
  events_.insert(it, std::move(event));
}

void Simulation::SetRunnable(SimThread& th, Tick boundary) {
  th.state = ThreadState::kRunnable;
  th.wait_start = boundary;
  MakeRunnable(sched_, th.tid);
}

void Simulation::SetUnrunnable(SimThread& th, ThreadState state, Tick boundary) {
  if (th.state == ThreadState::kRunnable) {
    th.max_wait = std::max(th.max_wait, boundary - th.wait_start);
    MakeUnrunnable(sched_, th.tid);
  }
  th.state = state;
}

void Simulation::CompleteCurrentEvent(SimThread& th, Tick boundary) {
  if (!th.current_event) return;
  UserEvent& ev = events_[*th.current_event];
  ev.completion_tick = boundary;
  Note("tid " + std::to_string(th.tid) + " completed event " +
       std::to_string(ev.event_id));
  th.current_event.reset();
}

void Simulation::AdvancePhases(SimThread& th, Tick boundary) {
  const std::vector<PhaseTemplate>& phases = th.behavior.phases;
  for (int step = 0; step < kMaxZeroTimeSteps; ++step) {
    if (!th.started) {
      th.started = true;
      th.phase_index = 0;
    } else {
      ++th.phase_index;
    }
    if (th.phase_index >= phases.size()) {
      if (!th.behavior.loop || phases.empty()) {
        Kill(th, boundary);
        return;
      }
      th.phase_index = 0;
    }
    const PhaseTemplate& ph = phases[th.phase_index];
    switch (ph.kind) {
      case PhaseKind::kCompute: {
        const Tick len = th.rng.Uniform(ph.ticks.lo, ph.ticks.hi);
        if (len <= 0) continue;
        th.phase_remaining = len;
        if (th.state != ThreadState::kRunnable) SetRunnable(th, boundary);
        return;
      }
      case PhaseKind::kBlock: {
        const Tick len = th.rng.Uniform(ph.ticks.lo, ph.ticks.hi);
        if (len <= 0) continue;
        th.wake_tick = boundary + len;
        wakeups_.emplace(th.wake_tick, th.tid);
        SetUnrunnable(th, ThreadState::kBlocked, boundary);
        return;
      }
      case PhaseKind::kAwaitEvent:
        CompleteCurrentEvent(th, boundary);
        if (!th.pending_events.empty()) {
          th.current_event = th.pending_events.front();
          th.pending_events.pop_front();
          continue;
        }
        SetUnrunnable(th, ThreadState::kAwaitingEvent, boundary);
        return;
      case PhaseKind::kExit:
        Kill(th, boundary);
        return;
    }
  }
  Fail(ErrorCode::kInvariantViolation,
       "tid " + std::to_string(th.tid) + " loops without consuming time");
}

void Simulation::Kill(SimThread& th, Tick boundary) {
  CompleteCurrentEvent(th, boundary);
  for (std::size_t idx : th.pending_events) {
    events_[idx].undeliverable = true;
    ++undeliverable_;
  }
  th.pending_events.clear();
  SetUnrunnable(th, ThreadState::kDead, boundary);
  if (sched_.Find(th.tid) != nullptr) RemoveThread(sched_, th.tid);
  if (tuner_.address_space().Find(th.tid) != nullptr) tuner_.ReleaseStack(th.tid);
  table_.Freeze(th.tid);
  th.death_tick = boundary;
  Note("tid " + std::to_string(th.tid) + " exited");
}

void Simulation::Admit(SimThread& th) {
  const Tick t = now_;
  const StackPolicy policy =
      mode_ == RunMode::kTek ? StackPolicy::kTuned : StackPolicy::kFixedSize;
  AllocResult res = tuner_.AllocStack(th.tid, th.role, th.stack_request_kib, policy, t);
  if (const auto* fault = std::get_if<FaultEvent>(&res)) {
    th.creation_failed = true;
    th.state = ThreadState::kDead;
    th.death_tick = t;
    Note("tid " + std::to_string(th.tid) + " creation failed: stack exhaustion (" +
         std::to_string(fault->size_kib) + " KiB)");
    return;
  }
  const StackAllocation& alloc = std::get<StackAllocation>(res);

  ThreadAttributes attrs;
  attrs.role = th.role;
  attrs.criticality = th.criticality;
  attrs.policy = Policy::kSchedNormal;
  attrs.priority = th.nice;
  attrs.stack_reserved_kib = static_cast<std::uint32_t>(alloc.reserved_kib);
  attrs.vm_kib = static_cast<std::uint32_t>(alloc.reserved_kib + alloc.guard_kib);
  table_.Register(th.tid, attrs, static_cast<std::uint64_t>(t) * kNsPerTick);

  SchedEntity e;
  e.tid = th.tid;
  e.group = th.group;
  e.nice = th.nice;
  e.policy = Policy::kSchedNormal;
  e.criticality = th.criticality;
  RegisterThread(sched_, std::move(e));

  if (mode_ == RunMode::kTek && th.criticality == Criticality::kTimeCritical) {
    AttributeUpdate update;
    update.policy = Policy::kSchedTek;
    table_.SetAttributes(th.tid, update);
  }
  Note("tid " + std::to_string(th.tid) + " arrived");
  AdvancePhases(th, t);
}

void Simulation::Deliver(std::size_t event_index) {
  UserEvent& ev = events_[event_index];
  SimThread& th = mutable_thread(ev.target);
  switch (th.state) {
    case ThreadState::kDead:
      ev.undeliverable = true;
      ++undeliverable_;
      Note("event " + std::to_string(ev.event_id) + " undeliverable");
      return;
    case ThreadState::kAwaitingEvent:
      th.current_event = event_index;
      Note("event " + std::to_string(ev.event_id) + " wakes tid " +
           std::to_string(th.tid));
      AdvancePhases(th, now_);
      return;
    default:
      th.pending_events.push_back(event_index);
      return;
  }
}

void Simulation::SampleStacks() {
  const Tick t = now_;
  for (SimThread& th : threads_) {
    if (th.state == ThreadState::kNotArrived || th.state == ThreadState::kDead) continue;
    while (th.next_stack_sample < th.stack_demand_trace.size() &&
           th.stack_demand_trace[th.next_stack_sample].first <= t - th.arrival_tick) {
      const std::uint64_t used = th.stack_demand_trace[th.next_stack_sample].second;
      ++th.next_stack_sample;
      UsageUpdate u = tuner_.RecordUsage(th.tid, used, t);
      if (u.fault) {
        th.stack_faulted = true;
        Note("tid " + std::to_string(th.tid) + " overran its stack guard");
        // The overrunning thread is killed at the end of this tick.
        Kill(th, t + 1);
        break;
      }
    }
  }
}

void Simulation::DrainMediatorLog() {
  for (const MigrationRecord& r : sched_.mediator.log) {
    Note("tid " + std::to_string(r.tid) + " " + r.from.ToString() + "->" +
         r.to.ToString());
    migrations_.push_back(r);
  }
  sched_.mediator.log.clear();
}

void Simulation::Step() {
  const Tick t = now_;
  sched_.now = t;
  tick_notes_.clear();

  while (next_arrival_ < threads_.size() &&
         threads_[next_arrival_].arrival_tick <= t) {
    Admit(threads_[next_arrival_++]);
  }
  while (!wakeups_.empty() && wakeups_.top().first <= t) {
    const auto [when, tid] = wakeups_.top();
    wakeups_.pop();
    SimThread& th = mutable_thread(tid);
    if (th.state == ThreadState::kBlocked && th.wake_tick == when) AdvancePhases(th, t);
  }
  while (next_event_ < events_.size() && events_[next_event_].arrival_tick <= t) {
    Deliver(next_event_++);
  }

  const std::optional<Tid> chosen = PickNext(sched_);
  if (observer_) observer_(*this, t, chosen);

  if (chosen != prev_running_) {
    ++context_switches_;
    if (chosen) ++mutable_thread(*chosen).context_switches;
    if (prev_running_) {
      SimThread& prev = mutable_thread(*prev_running_);
      if (prev.state == ThreadState::kRunnable) ++prev.involuntary_preemptions;
    }
  }

  if (chosen) {
    SimThread& th = mutable_thread(*chosen);
    if (th.state != ThreadState::kRunnable || th.phase_remaining <= 0) {
      Fail(ErrorCode::kInvariantViolation,
           "picked tid " + std::to_string(th.tid) + " is not computing");
    }
    th.max_wait = std::max(th.max_wait, t - th.wait_start);
    AccountRun(sched_, th.tid, kNsPerTick);
    ++th.cpu_ticks;
    th.wait_start = t + 1;
    if (--th.phase_remaining == 0) AdvancePhases(th, t + 1);
  } else {
    ++idle_ticks_;
  }

  SampleStacks();
  ExitTekIfEmpty(sched_);
  if (monitor_.Due(t)) monitor_.Sample(table_, *this);
  DrainMediatorLog();
  if (options_.record_trace) trace_.push_back(TraceEntry{t, chosen, tick_notes_});
  prev_running_ = chosen;
  now_ = t + 1;
}

bool Simulation::Finished() const {
  if (now_ >= config_.horizon_ticks) return true;
  if (next_arrival_ < threads_.size()) return false;
  return std::all_of(threads_.begin(), threads_.end(), [](const SimThread& th) {
    return th.state == ThreadState::kDead;
  });
}

MetricsReport Simulation::Run() {
  while (!Finished()) Step();
  MetricsReport report = Report();
  Tick cpu = 0;
  for (const ThreadMetrics& m : report.threads) cpu += m.cpu_ticks;
  if (cpu + report.idle_ticks != report.elapsed_ticks) {
    Fail(ErrorCode::kInvariantViolation,
         "cpu " + std::to_string(cpu) + " + idle " + std::to_string(report.idle_ticks) +
             " != elapsed " + std::to_string(report.elapsed_ticks));
  }
  return report;
}

MetricsReport Simulation::Report() const {
  MetricsReport r;
  r.scenario = config_.name;
  r.mode = mode_;
  r.seed = config_.seed;
  r.elapsed_ticks = now_;
  r.idle_ticks = idle_ticks_;
  r.context_switches = context_switches_;
  r.tek_episodes = sched_.mediator.episodes;
  r.undeliverable_events = undeliverable_;

  for (const SimThread& th : threads_) {
    ThreadMetrics m;
    m.tid = th.tid;
    m.role = th.role;
    m.group = th.group;
    m.criticality = th.criticality;
    m.arrival_tick = th.arrival_tick;
    m.cpu_ticks = th.cpu_ticks;
    m.context_switches = th.context_switches;
    m.involuntary_preemptions = th.involuntary_preemptions;
    m.max_wait = th.max_wait;
    if (th.state == ThreadState::kRunnable) {
      m.max_wait = std::max(m.max_wait, now_ - th.wait_start);
    }
    m.final_state = th.creation_failed ? "creation_failed"
                                       : std::string(ToString(StateOf(th.tid)));
    r.threads.push_back(std::move(m));
  }

  for (const UserEvent& ev : events_) {
    if (ev.completion_tick) {
      const SimThread& th = thread(ev.target);
      ResponseSample s{ev.event_id, ev.target, th.criticality, ev.arrival_tick,
                       *ev.completion_tick};
      ThreadMetrics& m = r.threads[ev.target - 1];
      ++m.events_completed;
      m.response_total += s.response();
      m.max_response = std::max(m.max_response, s.response());
      r.responses.push_back(s);
    } else if (!ev.undeliverable) {
      ++r.unfinished_events;
    }
  }

  r.faults = tuner_.address_space().faults();
  r.space = tuner_.Report();
  const auto add_row = [&](const StackAllocation& a, bool live) {
    StackRow row;
    row.alloc = a;
    row.live = live;
    if (a.samples > 0) {
      row.zone = ClassifyZone(a, tuner_.zones());
      row.advisory = std::string(AdvisoryFor(row.zone));
    }
    r.stacks.push_back(std::move(row));
  };
  for (const auto& [tid, a] : tuner_.address_space().live()) add_row(a, true);
  for (const StackAllocation& a : tuner_.address_space().retired()) add_row(a, false);
  std::sort(r.stacks.begin(), r.stacks.end(), [](const StackRow& a, const StackRow& b) {
    return a.alloc.tid < b.alloc.tid;
  });

  r.migrations = migrations_;
  r.table_dump = table_.DumpBinary();
  r.table_csv = table_.DumpCsv();
  r.trace = trace_;
  r.monitor_samples = monitor_.samples_taken();
  r.monitor_records_touched = monitor_.records_touched();
  return r;
}

std::vector<ThreadStats> Simulation::CollectLive() const {
  std::vector<ThreadStats> out;
  for (const SimThread& th : threads_) {
    if (th.state == ThreadState::kNotArrived || th.state == ThreadState::kDead) continue;
    const SchedEntity& e = sched_.entity(th.tid);
    const StackAllocation* a = tuner_.address_space().Find(th.tid);
    ThreadStats s;
    s.tid = th.tid;
    s.policy = e.policy;
    s.priority = e.nice;
    if (a != nullptr) {
      s.stack_reserved_kib = static_cast<std::uint32_t>(a->reserved_kib);
      s.vm_kib = static_cast<std::uint32_t>(a->reserved_kib + a->guard_kib);
      s.peak_stack_kib = static_cast<std::uint32_t>(a->peak_used_kib);
      if (a->samples > 0) s.zone = ClassifyZone(*a, tuner_.zones());
    }
    out.push_back(s);
  }
  return out;
}

MetricsReport RunScenario(const ScenarioConfig& config, RunMode mode,
                          SimOptions options) {
  StackHistory history;
  if (mode == RunMode::kTek) {
    for (std::int64_t i = 0; i < config.warmup_runs; ++i) {
      Simulation warm(config, RunMode::kTek, history);
      warm.Run();
      history = warm.tuner().HistoryWithLive();
    }
  }
  Simulation sim(config, mode, std::move(history), options);
  return sim.Run();
}

}  // namespace tek
