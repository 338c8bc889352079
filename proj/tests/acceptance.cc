// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "gen.h"
#include "tek/scenario.h"
#include "tek/sched_core.h"
#include "tek/sim_kernel.h"
#include "tek/stack_tuner.h"
#include "tek/thread_registry.h"

namespace fs = std::filesystem;

namespace tek {
namespace {

using ::tek::testing::Gen;

struct Outcome {
  bool pass = false;
  std::string detail;
};

ScenarioConfig Shipped(const std::string& file) {
  return ParseScenarioFile(std::string(TEK_SCENARIO_DIR) + "/" + file);
}

std::vector<fs::path> ShippedFiles() {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(TEK_SCENARIO_DIR)) {
    if (entry.path().extension() == ".scn") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string Pct(const Rational& r) { return ToFixed(r * 100, 3) + "%"; }

// 1. Exact shares for nice 1..4 under PaperLinear.
Outcome ShareExample() {
  const std::vector<std::pair<Tid, Nice>> threads = {
      {1, Nice(1)}, {2, Nice(2)}, {3, Nice(3)}, {4, Nice(4)}};
  const auto shares = CpuShares(threads, WeightTable::PaperLinear());
  const Rational expected[] = {MakeRational(265, 1000), MakeRational(255, 1000),
                               MakeRational(245, 1000), MakeRational(235, 1000)};
  Outcome o{shares.size() == 4, "shares"};
  for (std::size_t i = 0; i < shares.size() && i < 4; ++i) {
    o.pass = o.pass && shares[i].second == expected[i];
    o.detail += " " + Pct(shares[i].second);
  }
  return o;
}

// 2. Realized CPU shares in shares.scn versus CpuShares, within 0.5 points.
Outcome LongRunFairness() {
  const ScenarioConfig c = Shipped("shares.scn");
  const MetricsReport r = RunScenario(c, RunMode::kBaseline);
  std::vector<std::pair<Tid, Nice>> threads;
  for (std::size_t i = 0; i < c.threads.size(); ++i) {
    threads.emplace_back(static_cast<Tid>(i + 1), Nice(c.threads[i].nice));
  }
  const auto expected = CpuShares(threads, MakeWeightTable(c.weight_table));
  Outcome o{r.elapsed_ticks == 100000 && r.threads.size() == expected.size(),
            "ticks " + std::to_string(r.elapsed_ticks) + ", realized"};
  const Rational tolerance = MakeRational(5, 1000);
  for (std::size_t i = 0; i < r.threads.size() && i < expected.size(); ++i) {
    const Rational realized = MakeRational(r.threads[i].cpu_ticks, r.elapsed_ticks);
    Rational diff = realized - expected[i].second;
    if (diff < 0) diff = -diff;
    o.pass = o.pass && diff <= tolerance;
    o.detail += " " + Pct(realized) + " (want " + Pct(expected[i].second) + ")";
  }
  return o;
}

// 3. Time-critical mean response at least 5x lower under TEK, with lower CV.
Outcome ResponseImprovement() {
  const ScenarioConfig c = Shipped("contention.scn");
  const MetricsReport base = RunScenario(c, RunMode::kBaseline);
  const MetricsReport tek = RunScenario(c, RunMode::kTek);
  const ResponseStats b = base.ResponsesOf(Criticality::kTimeCritical);
  const ResponseStats t = tek.ResponsesOf(Criticality::kTimeCritical);
  // Saturation: the CPU never idles once the first thread has arrived.
  Tick first_arrival = c.horizon_ticks;
  for (const ThreadMetrics& m : base.threads) first_arrival = std::min(first_arrival, m.arrival_tick);
  const bool saturated = base.idle_ticks == first_arrival && tek.idle_ticks == first_arrival;
  const bool ratio_ok = b.count > 0 && t.count > 0 && t.mean > 0 && b.mean >= t.mean * 5;
  Outcome o;
  o.pass = saturated && ratio_ok && t.cv < b.cv;
  o.detail = "mean " + ToFixed(b.mean, 3) + " -> " + ToFixed(t.mean, 3) + " ticks (" +
             (t.mean > 0 ? ToFixed(b.mean / t.mean, 2) : std::string("inf")) + "x, n=" +
             std::to_string(b.count) + "/" + std::to_string(t.count) + "), cv " +
             std::to_string(b.cv) + " -> " + std::to_string(t.cv) + ", idle " +
             std::to_string(base.idle_ticks) + "/" + std::to_string(tek.idle_ticks);
  return o;
}

// 4. TC involuntary preemptions down at least 25% on ctxswitch.scn, and never
// up on any shipped scenario.
Outcome ContextSwitchReduction() {
  Outcome o{true, ""};
  for (const fs::path& f : ShippedFiles()) {
    const ScenarioConfig c = ParseScenarioFile(f.string());
    const std::uint64_t b = RunScenario(c, RunMode::kBaseline).PreemptionsOf(Criticality::kTimeCritical);
    const std::uint64_t t = RunScenario(c, RunMode::kTek).PreemptionsOf(Criticality::kTimeCritical);
    o.pass = o.pass && t <= b;
    o.detail += c.name + " " + std::to_string(b) + "->" + std::to_string(t);
    if (c.name == "ctxswitch") {
      // t <= 0.75 b
      const bool reduced = b > 0 && 4 * t <= 3 * b;
      o.pass = o.pass && reduced;
      if (b > 0) o.detail += " (" + Pct(MakeRational(static_cast<std::int64_t>(b - std::min(b, t)),
                                                     static_cast<std::int64_t>(b))) + " fewer)";
    }
    o.detail += "; ";
  }
  return o;
}

ScenarioConfig RandomTekScenario(Gen& g) {
  std::string text = "name = rnd\nhorizon_ticks = " + std::to_string(g.Int(500, 3000)) + "\n";
  std::vector<std::string> handlers;
  const std::int64_t specs = g.Int(1, 6);
  for (std::int64_t i = 0; i < specs; ++i) {
    const std::string role = "r" + std::to_string(i);
    text += "[thread]\ncount = " + std::to_string(g.Int(1, 4)) +
            "\ngroup = " + std::string(ToString(g.Group())) +
            "\nnice = " + std::to_string(g.Nice()) + "\nrole = " + role +
            "\narrival = 0.." + std::to_string(g.Int(0, 400)) + "\n";
    if (g.Chance(2, 5)) {
      text += "criticality = time_critical\n";
      if (g.Bool()) {
        text += "behavior = loop await compute(1.." + std::to_string(g.Int(1, 40)) + ")\n";
        handlers.push_back(role);
      } else {
        text += "behavior = loop compute(1.." + std::to_string(g.Int(1, 30)) + ") block(1.." +
                std::to_string(g.Int(1, 200)) + ")\n";
      }
    } else {
      text += "behavior = " + std::string(g.Bool() ? "loop " : "") + "compute(1.." +
              std::to_string(g.Int(1, 80)) + ") block(0.." + std::to_string(g.Int(0, 60)) + ")\n";
    }
  }
  for (const std::string& role : handlers) {
    text += "[events]\nrole = " + role + "\nstart = " + std::to_string(g.Int(0, 300)) +
            "\ninterval = 10.." + std::to_string(g.Int(10, 300)) + "\n";
  }
  ScenarioConfig c = ParseScenarioText(text);
  c.seed = g.U64();
  return c;
}

// 5. No tick goes to a non-Fast thread while Fast is occupied, and every
// thread keeps or gets back its (group, policy, nice).
Outcome StrictDelay() {
  std::uint64_t violations = 0;
  std::uint64_t fast_ticks = 0;
  std::uint64_t restorations = 0;
  std::uint64_t triple_mismatches = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Gen g(seed * 7919);
    const ScenarioConfig c = RandomTekScenario(g);
    Simulation sim(c, RunMode::kTek);
    std::map<Tid, Placement> last;
    auto expected = [&](Tid tid) {
      const SimThread& th = sim.thread(tid);
      const Policy p = th.criticality == Criticality::kTimeCritical ? Policy::kSchedTek
                                                                    : Policy::kSchedNormal;
      return std::make_tuple(th.group, p, th.nice);
    };
    sim.set_observer([&](const Simulation& s, Tick, std::optional<Tid> chosen) {
      const SchedulerState& st = s.scheduler();
      if (!st.mediator.fast.empty()) {
        ++fast_ticks;
        if (!chosen || s.StateOf(*chosen) != ThreadState::kInFast) ++violations;
      }
      for (const auto& [tid, e] : st.entities) {
        if (e.placement == Placement::kLazy) {
          const RegionMember* m = st.mediator.lazy.Find(tid);
          if (m == nullptr || std::make_tuple(m->origin, m->saved_policy, Nice(m->saved_nice)) !=
                                  expected(tid)) {
            ++triple_mismatches;
          }
        } else {
          if (std::make_tuple(e.group, e.policy, e.nice) != expected(tid)) ++triple_mismatches;
          if (last[tid] == Placement::kLazy) ++restorations;
        }
        last[tid] = e.placement;
      }
    });
    sim.Run();
  }
  Outcome o;
  o.pass = violations == 0 && triple_mismatches == 0 && fast_ticks > 0 && restorations > 0;
  o.detail = "100 scenarios, " + std::to_string(fast_ticks) + " ticks with Fast occupied, " +
             std::to_string(violations) + " granted outside Fast, " +
             std::to_string(restorations) + " restorations, " +
             std::to_string(triple_mismatches) + " triple mismatches";
  return o;
}

// 6. Fixed 8 MiB stacks for 273 threads total 2236416 KiB; Tuned stays within
// 2x of actual use and below Fixed.
Outcome StackArithmetic() {
  ScenarioConfig c = Shipped("stackgrowth.scn");
  const std::int64_t threads = c.TotalThreads();
  ScenarioConfig roomy = c;
  roomy.address_space.reserved_kib = 512 * 1024;
  const MetricsReport fixed = RunScenario(roomy, RunMode::kBaseline);
  const MetricsReport tuned = RunScenario(c, RunMode::kTek);
  const std::uint64_t fixed_oracle = static_cast<std::uint64_t>(threads) * 8 * 1024;
  Outcome o;
  o.pass = threads == 273 && fixed.space.threads == 273 && fixed.space.allocated_kib == 2236416 &&
           fixed_oracle == 2236416 && tuned.space.threads == 273 &&
           tuned.space.actual_peak_kib > 0 && tuned.space.overhead_ratio <= 2 &&
           tuned.space.allocated_kib < fixed.space.allocated_kib;
  o.detail = "fixed " + std::to_string(fixed.space.allocated_kib) + " KiB over " +
             std::to_string(fixed.space.threads) + " threads (" +
             Pct(fixed.space.overhead_above_actual) + " above actual); tuned " +
             std::to_string(tuned.space.allocated_kib) + " KiB, actual " +
             std::to_string(tuned.space.actual_peak_kib) + " KiB, ratio " +
             ToFixed(tuned.space.overhead_ratio, 4) + " (" +
             Pct(tuned.space.overhead_above_actual) + " above actual)";
  return o;
}

// 7. Exhaustion onset: thread #320 with the default space; the configured
// ~200 point on stackgrowth.scn; Tuned never exhausts there.
Outcome FaultThreshold() {
  AddressSpaceModel model{AddressSpaceConfig{}};
  std::optional<Tid> first;
  for (Tid tid = 1; tid <= 1000 && !first; ++tid) {
    if (std::holds_alternative<FaultEvent>(
            model.Allocate(tid, "w", 8192, StackPolicy::kFixedSize, 0))) {
      first = tid;
    }
  }
  const std::uint64_t default_oracle = (3ull << 20) - (512ull << 10);
  const Tid model_oracle = static_cast<Tid>(default_oracle / (8192 + 4) + 1);

  const ScenarioConfig c = Shipped("stackgrowth.scn");
  const MetricsReport base = RunScenario(c, RunMode::kBaseline);
  const MetricsReport tuned = RunScenario(c, RunMode::kTek);
  const std::uint64_t budget = c.address_space.total_kib - c.address_space.reserved_kib;
  const Tid scenario_oracle = static_cast<Tid>(
      budget / (c.address_space.default_stack_kib + c.address_space.page_kib) + 1);
  const auto base_first = base.FirstFault(FaultKind::kAllocationExhaustion);
  const std::uint64_t tuned_faults = tuned.FaultCount(FaultKind::kAllocationExhaustion);

  Outcome o;
  o.pass = first == model_oracle && model_oracle == 320 && base_first &&
           base_first->tid == scenario_oracle && scenario_oracle >= 190 &&
           scenario_oracle <= 210 && tuned_faults == 0;
  o.detail = "default space faults at #" + (first ? std::to_string(*first) : "none") +
             " (oracle #" + std::to_string(model_oracle) + "); stackgrowth baseline at #" +
             (base_first ? std::to_string(base_first->tid) : "none") + " (oracle #" +
             std::to_string(scenario_oracle) + ", " +
             std::to_string(base.FaultCount(FaultKind::kAllocationExhaustion)) +
             " faults); tuned " + std::to_string(tuned_faults) + " faults";
  return o;
}

// 8. 300 records are 12000 payload bytes; serialization round-trips.
Outcome TableLayout() {
  Gen g(8);
  ThreadInformationTable table;
  std::vector<std::byte> payload;
  for (Tid tid = 1; tid <= 300; ++tid) {
    ThreadAttributes a;
    a.role = "svc" + std::to_string(tid % 17);
    table.Register(tid, a, tid);
    const RecordBytes b = Serialize(table.GetAttributes(tid));
    payload.insert(payload.end(), b.begin(), b.end());
  }
  const std::vector<std::byte> dump = table.DumpBinary();
  const bool sizes = payload.size() == 12000 && table.FootprintBytes() == 12000 &&
                     dump.size() == 8 + 12000 &&
                     std::equal(payload.begin(), payload.end(), dump.begin() + 8);

  std::uint64_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    ThreadInfoRecord r;
    r.tid = static_cast<std::uint32_t>(g.U64());
    r.policy = static_cast<std::uint8_t>(g.U64());
    r.priority = static_cast<std::int8_t>(g.U64());
    r.criticality = static_cast<std::uint8_t>(g.U64());
    r.zone = static_cast<std::uint8_t>(g.U64());
    r.creation_time_ns = g.U64();
    r.stack_reserved_kib = static_cast<std::uint32_t>(g.U64());
    r.vm_kib = static_cast<std::uint32_t>(g.U64());
    r.peak_stack_kib = static_cast<std::uint32_t>(g.U64());
    for (char& ch : r.role) ch = static_cast<char>(g.U64());
    if (!(Deserialize(Serialize(r)) == r)) ++mismatches;
  }
  Outcome o;
  o.pass = sizes && mismatches == 0;
  o.detail = "300 records = " + std::to_string(payload.size()) + " bytes (dump " +
             std::to_string(dump.size()) + " with 8-byte count); 10000 round trips, " +
             std::to_string(mismatches) + " mismatches";
  return o;
}

int Shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> ReadTree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(entry.path(), root).string()] = s.str();
  }
  return files;
}

// 9. Identical compare runs are byte-identical; another seed changes the trace.
Outcome Determinism() {
  const fs::path tmp = fs::temp_directory_path() / "tek_acceptance_determinism";
  fs::remove_all(tmp);
  const std::string bin = TEKSIM_BIN;
  const std::string scn = std::string(TEK_SCENARIO_DIR) + "/contention.scn";
  int rc = 0;
  rc |= Shell(bin + " compare " + scn + " --trace --out " + (tmp / "a").string());
  rc |= Shell(bin + " compare " + scn + " --trace --out " + (tmp / "b").string());
  rc |= Shell("TEKSIM_SEED=99 " + bin + " compare " + scn + " --trace --out " +
              (tmp / "c").string());
  Outcome o;
  if (rc != 0) {
    o.detail = "teksim exited nonzero";
    return o;
  }
  const auto a = ReadTree(tmp / "a");
  const auto b = ReadTree(tmp / "b");
  const auto c = ReadTree(tmp / "c");
  std::size_t csv = 0;
  for (const auto& [name, body] : a) csv += name.ends_with(".csv") ? 1 : 0;
  const bool same = a == b;
  const bool differs = a.count("baseline/trace.csv") && c.count("baseline/trace.csv") &&
                       a.at("baseline/trace.csv") != c.at("baseline/trace.csv") &&
                       a.at("tek/trace.csv") != c.at("tek/trace.csv");
  o.pass = same && differs && csv >= 15;
  o.detail = std::to_string(a.size()) + " files (" + std::to_string(csv) + " csv) " +
             (same ? "byte-identical" : "DIFFER") + " across runs; seed 99 trace " +
             (differs ? "differs" : "IDENTICAL");
  fs::remove_all(tmp);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace tek

int main() {
  using namespace tek;
  const std::vector<Criterion> criteria = {
      {1, "share example", 1, ShareExample},
      {2, "long-run fairness", 10, LongRunFairness},
      {3, "response-time improvement", 30, ResponseImprovement},
      {4, "context-switch reduction", 30, ContextSwitchReduction},
      {5, "strict delay and restoration", 60, StrictDelay},
      {6, "stack arithmetic", 5, StackArithmetic},
      {7, "fault threshold", 5, FaultThreshold},
      {8, "table layout", 5, TableLayout},
      {9, "determinism", 30, Determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s criterion %d (%s): %s [%.2fs, limit %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id,
                c.name, o.detail.c_str(), secs, c.limit_seconds, in_time ? "" : ", TOO SLOW");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
