#ifndef TEK_SCENARIO_H_
#define TEK_SCENARIO_H_

// Scenario files: line-oriented `key = value` pairs, top-level settings first,
// then repeated [thread] and [events] sections. See docs/scenario-format.md.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tek/rational.h"
#include "tek/sched_core.h"
#include "tek/stack_tuner.h"
#include "tek/types.h"

namespace tek {

// Inclusive integer range; written `N` or `N..M`.
struct Range {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  std::string ToString() const;
  friend bool operator==(const Range&, const Range&) = default;
};

enum class PhaseKind : std::uint8_t { kCompute, kBlock, kAwaitEvent, kExit };

struct PhaseTemplate {
  PhaseKind kind = PhaseKind::kCompute;
  Range ticks;
  friend bool operator==(const PhaseTemplate&, const PhaseTemplate&) = default;
};

struct BehaviorTemplate {
  bool loop = false;
  std::vector<PhaseTemplate> phases;

  std::string ToString() const;
  friend bool operator==(const BehaviorTemplate&, const BehaviorTemplate&) = default;
};

// Throws ScenarioError-compatible TekError(kInvalidArgument) with a message.
BehaviorTemplate ParseBehavior(std::string_view text);

enum class RunMode : std::uint8_t { kBaseline, kTek, kBoth };
std::string_view ToString(RunMode m);
std::optional<RunMode> ParseRunMode(std::string_view s);

struct ThreadSpec {
  std::int64_t count = 1;
  GroupName group = GroupName::kNormal;
  int nice = 0;
  Criticality criticality = Criticality::kNonTimeCritical;
  std::string role;
  Range arrival;
  // Instance i arrives at arrival + i * arrival_step.
  std::int64_t arrival_step = 0;
  BehaviorTemplate behavior;
  // Stack usage ramps to the drawn peak over stack_ramp_ticks in stack_steps
  // samples.
  Range stack_peak_kib{64, 64};
  std::int64_t stack_ramp_ticks = 1000;
  std::int64_t stack_steps = 8;
  std::optional<std::uint64_t> stack_request_kib;

  friend bool operator==(const ThreadSpec&, const ThreadSpec&) = default;
};

struct EventSpec {
  std::string role;
  Tick start = 0;
  Range interval{1000, 1000};
  // Zero means until the horizon.
  std::int64_t count = 0;

  friend bool operator==(const EventSpec&, const EventSpec&) = default;
};

struct ScenarioConfig {
  std::string name;
  std::string description;
  std::uint64_t seed = 1;
  Tick horizon_ticks = 60000;
  RunMode mode = RunMode::kBoth;
  WeightKind weight_table = WeightKind::kPaperLinear;
  std::array<Rational, kNumGroups> group_shares = DefaultGroupShares();
  AddressSpaceConfig address_space;
  StackZoneConfig zones;
  Tick monitor_period = 100;
  // Tuned runs first replay the workload this many times to learn stack
  // history.
  std::int64_t warmup_runs = 0;
  std::optional<Tick> max_lazy_delay;
  std::vector<ThreadSpec> threads;
  std::vector<EventSpec> events;

  std::int64_t TotalThreads() const;
  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct FieldError {
  int line = 0;  // 0 when the error is not tied to a line
  std::string field;
  std::string message;

  std::string ToString() const;
};

class ScenarioError : public TekError {
 public:
  ScenarioError(std::string source, std::vector<FieldError> errors);

  const std::vector<FieldError>& errors() const { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

// Throws ScenarioError listing every problem found.
ScenarioConfig ParseScenarioText(std::string_view text, std::string_view source = "<text>");
// Also throws ScenarioError when the file cannot be read.
ScenarioConfig ParseScenarioFile(const std::string& path);

std::vector<FieldError> ValidateScenario(const ScenarioConfig& config);

// Canonical text form; parsing it yields an equal config.
std::string SerializeScenario(const ScenarioConfig& config);

WeightTable MakeWeightTable(WeightKind kind);
std::string_view ToString(WeightKind k);

}  // namespace tek

#endif  // TEK_SCENARIO_H_
