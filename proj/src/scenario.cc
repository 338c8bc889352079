#include "tek/scenario.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace tek {

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> ParseInt(std::string_view s) {
  s = Trim(s);
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

std::optional<Range> ParseRange(std::string_view s) {
  s = Trim(s);
  if (auto dots = s.find(".."); dots != std::string_view::npos) {
    auto lo = ParseInt<std::int64_t>(s.substr(0, dots));
    auto hi = ParseInt<std::int64_t>(s.substr(dots + 2));
    if (!lo || !hi) return std::nullopt;
    return Range{*lo, *hi};
  }
  auto v = ParseInt<std::int64_t>(s);
  if (!v) return std::nullopt;
  return Range{*v, *v};
}

std::vector<std::string_view> SplitWs(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<std::array<Rational, kNumGroups>> ParseShares(std::string_view s) {
  std::array<Rational, kNumGroups> shares;
  std::array<bool, kNumGroups> seen{};
  for (std::string_view tok : SplitWs(s)) {
    auto colon = tok.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto g = ParseGroup(tok.substr(0, colon));
    auto v = ParseRational(tok.substr(colon + 1));
    if (!g || !v || seen[GroupIndex(*g)]) return std::nullopt;
    seen[GroupIndex(*g)] = true;
    shares[GroupIndex(*g)] = *v;
  }
  for (bool b : seen) {
    if (!b) return std::nullopt;
  }
  return shares;
}

struct Parser {
  std::string source;
  std::vector<FieldError> errors;
  std::map<std::string, int> field_lines;

  void Error(int line, std::string field, std::string message) {
    errors.push_back({line, std::move(field), std::move(message)});
  }
};

enum class Section { kTop, kThread, kEvents };

}  // namespace

std::string Range::ToString() const {
  if (lo == hi) return std::to_string(lo);
  return std::to_string(lo) + ".." + std::to_string(hi);
}

std::string BehaviorTemplate::ToString() const {
  std::string out = loop ? "loop" : "";
  for (const PhaseTemplate& p : phases) {
    if (!out.empty()) out += ' ';
    switch (p.kind) {
      case PhaseKind::kCompute: out += "compute(" + p.ticks.ToString() + ")"; break;
      case PhaseKind::kBlock: out += "block(" + p.ticks.ToString() + ")"; break;
      case PhaseKind::kAwaitEvent: out += "await"; break;
      case PhaseKind::kExit: out += "exit"; break;
    }
  }
  return out;
}

BehaviorTemplate ParseBehavior(std::string_view text) {
  BehaviorTemplate b;
  auto tokens = SplitWs(text);
  std::size_t i = 0;
  if (!tokens.empty() && tokens[0] == "loop") {
    b.loop = true;
    i = 1;
  }
  for (; i < tokens.size(); ++i) {
    std::string_view tok = tokens[i];
    if (tok == "await") {
      b.phases.push_back({PhaseKind::kAwaitEvent, {}});
      continue;
    }
    if (tok == "exit") {
      b.phases.push_back({PhaseKind::kExit, {}});
      continue;
    }
    auto open = tok.find('(');
    if (open == std::string_view::npos || tok.back() != ')') {
      Fail(ErrorCode::kInvalidArgument, "bad phase '" + std::string(tok) + "'");
    }
    std::string_view name = tok.substr(0, open);
    auto range = ParseRange(tok.substr(open + 1, tok.size() - open - 2));
    if (!range) Fail(ErrorCode::kInvalidArgument, "bad phase length in '" + std::string(tok) + "'");
    if (name == "compute") {
      b.phases.push_back({PhaseKind::kCompute, *range});
    } else if (name == "block") {
      b.phases.push_back({PhaseKind::kBlock, *range});
    } else {
      Fail(ErrorCode::kInvalidArgument, "unknown phase '" + std::string(name) + "'");
    }
  }
  if (b.phases.empty()) Fail(ErrorCode::kInvalidArgument, "behavior has no phases");
  return b;
}

std::string_view ToString(RunMode m) {
  switch (m) {
    case RunMode::kBaseline: return "baseline";
    case RunMode::kTek: return "tek";
    case RunMode::kBoth: return "both";
  }
  return "?";
}

std::optional<RunMode> ParseRunMode(std::string_view s) {
  if (s == "baseline") return RunMode::kBaseline;
  if (s == "tek") return RunMode::kTek;
  if (s == "both") return RunMode::kBoth;
  return std::nullopt;
}

std::string_view ToString(WeightKind k) {
  return k == WeightKind::kGeometric ? "geometric" : "paper_linear";
}

WeightTable MakeWeightTable(WeightKind kind) {
  return kind == WeightKind::kGeometric ? WeightTable::Geometric()
                                        : WeightTable::PaperLinear();
}

std::int64_t ScenarioConfig::TotalThreads() const {
  std::int64_t n = 0;
  for (const ThreadSpec& t : threads) n += std::max<std::int64_t>(t.count, 0);
  return n;
}

std::string FieldError::ToString() const {
  std::string s;
  if (line > 0) s += "line " + std::to_string(line) + ": ";
  s += field + ": " + message;
  return s;
}

ScenarioError::ScenarioError(std::string source, std::vector<FieldError> errors)
    : TekError(ErrorCode::kInvalidArgument,
               [&] {
                 std::string msg = "invalid scenario " + source;
                 for (const FieldError& e : errors) msg += "\n  " + e.ToString();
                 return msg;
               }()),
      errors_(std::move(errors)) {}

std::vector<FieldError> ValidateScenario(const ScenarioConfig& c) {
  std::vector<FieldError> errors;
  auto err = [&errors](std::string field, std::string message) {
    errors.push_back({0, std::move(field), std::move(message)});
  };
  if (c.name.empty()) err("name", "missing field");
  if (c.horizon_ticks <= 0) err("horizon_ticks", "must be positive");
  if (c.monitor_period <= 0) err("monitor_period", "must be positive");
  if (c.warmup_runs < 0) err("warmup_runs", "must be >= 0");
  if (c.max_lazy_delay && *c.max_lazy_delay <= 0) err("max_lazy_delay", "must be positive");
  for (GroupName g : kAllGroups) {
    if (c.group_shares[GroupIndex(g)] <= 0) {
      err("group_shares", std::string(ToString(g)) + " share must be positive");
    }
  }
  const AddressSpaceConfig& as = c.address_space;
  if (as.page_kib == 0) err("address_space.page_kib", "must be positive");
  if (as.reserved_kib > as.total_kib) err("address_space.reserved_kib", "exceeds total_kib");
  if (as.default_stack_kib < kMinStackKiB) err("stack.default_kib", "must be >= 16");
  if (as.max_stack_kib < kMinStackKiB) err("stack.max_kib", "must be >= 16");
  if (!(c.zones.low_frac > 0 && c.zones.low_frac < c.zones.high_frac)) {
    err("zone.low", "must satisfy 0 < low < high");
  }
  if (!(c.zones.high_frac < 1 && c.zones.high_frac > c.zones.low_frac)) {
    err("zone.high", "must satisfy low < high < 1");
  }

  std::set<std::string> roles;
  for (std::size_t i = 0; i < c.threads.size(); ++i) {
    const ThreadSpec& t = c.threads[i];
    const std::string p = "thread[" + std::to_string(i) + "].";
    roles.insert(t.role);
    if (t.count < 0) err(p + "count", "must be >= 0");
    if (t.nice < Nice::kMin || t.nice > Nice::kMax) err(p + "nice", "outside [-20, 19]");
    if (t.arrival.lo < 0 || t.arrival.hi < t.arrival.lo) err(p + "arrival", "bad range");
    if (t.arrival_step < 0) err(p + "arrival_step", "must be >= 0");
    if (t.stack_peak_kib.lo < 0 || t.stack_peak_kib.hi < t.stack_peak_kib.lo) {
      err(p + "stack_peak_kib", "bad range");
    }
    if (t.stack_ramp_ticks < 0) err(p + "stack_ramp_ticks", "must be >= 0");
    if (t.stack_steps < 1) err(p + "stack_steps", "must be >= 1");
    if (t.stack_request_kib && *t.stack_request_kib == 0) {
      err(p + "stack_request_kib", "must be positive");
    }
    if (t.behavior.phases.empty()) {
      err(p + "behavior", "missing field");
      continue;
    }
    bool progresses = false;
    for (const PhaseTemplate& ph : t.behavior.phases) {
      if (ph.kind == PhaseKind::kCompute || ph.kind == PhaseKind::kBlock) {
        if (ph.ticks.lo < 0 || ph.ticks.hi < ph.ticks.lo) err(p + "behavior", "bad phase range");
        if (ph.ticks.lo > 0) progresses = true;
      } else {
        progresses = true;
      }
    }
    if (t.behavior.loop && !progresses) {
      err(p + "behavior", "loop body never consumes time or waits");
    }
  }
  for (std::size_t i = 0; i < c.events.size(); ++i) {
    const EventSpec& e = c.events[i];
    const std::string p = "events[" + std::to_string(i) + "].";
    if (e.role.empty()) {
      err(p + "role", "missing field");
    } else if (roles.count(e.role) == 0) {
      err(p + "role", "unknown role reference '" + e.role + "'");
    }
    if (e.start < 0) err(p + "start", "must be >= 0");
    if (e.interval.lo < 1 || e.interval.hi < e.interval.lo) err(p + "interval", "bad range");
    if (e.count < 0) err(p + "count", "must be >= 0");
  }
  return errors;
}

ScenarioConfig ParseScenarioText(std::string_view text, std::string_view source) {
  Parser parser{std::string(source), {}, {}};
  ScenarioConfig c;
  Section section = Section::kTop;
  std::set<std::string> seen_keys;
  std::string prefix;
  int line_no = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = Trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }

    if (line.front() == '[') {
      seen_keys.clear();
      if (line == "[thread]") {
        section = Section::kThread;
        c.threads.emplace_back();
        c.threads.back().behavior.phases.clear();
        prefix = "thread[" + std::to_string(c.threads.size() - 1) + "].";
      } else if (line == "[events]") {
        section = Section::kEvents;
        c.events.emplace_back();
        c.events.back().role.clear();
        prefix = "events[" + std::to_string(c.events.size() - 1) + "].";
      } else {
        parser.Error(line_no, std::string(line), "unknown section");
        section = Section::kTop;
        prefix = "?.";
      }
      parser.field_lines[prefix] = line_no;
      if (end == text.size()) break;
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      parser.Error(line_no, std::string(line), "expected key = value");
      continue;
    }
    const std::string key(Trim(line.substr(0, eq)));
    const std::string_view value = Trim(line.substr(eq + 1));
    const std::string field = prefix + key;
    if (!seen_keys.insert(key).second) {
      parser.Error(line_no, field, "duplicate key");
      continue;
    }
    parser.field_lines[field] = line_no;
    auto bad = [&](const std::string& what) { parser.Error(line_no, field, what); };

    if (section == Section::kTop) {
      if (key == "name") {
        c.name = value;
      } else if (key == "description") {
        c.description = value;
      } else if (key == "seed") {
        if (auto v = ParseInt<std::uint64_t>(value)) c.seed = *v; else bad("expected unsigned integer");
      } else if (key == "horizon_ticks") {
        if (auto v = ParseInt<std::int64_t>(value)) c.horizon_ticks = *v; else bad("expected integer");
      } else if (key == "mode") {
        if (auto v = ParseRunMode(value)) c.mode = *v; else bad("expected baseline, tek or both");
      } else if (key == "weight_table") {
        if (value == "paper_linear") c.weight_table = WeightKind::kPaperLinear;
        else if (value == "geometric") c.weight_table = WeightKind::kGeometric;
        else bad("expected paper_linear or geometric");
      } else if (key == "group_shares") {
        if (auto v = ParseShares(value)) c.group_shares = *v;
        else bad("expected urgent:N normal:N service:N background:N");
      } else if (key == "address_space.total_kib") {
        if (auto v = ParseInt<std::uint64_t>(value)) c.address_space.total_kib = *v; else bad("expected unsigned integer");
      } else if (key == "address_space.reserved_kib") {
        if (auto v = ParseInt<std::uint64_t>(value)) c.address_space.reserved_kib = *v; else bad("expected unsigned integer");
      } else if (key == "address_space.page_kib") {
        if (auto v = ParseInt<std::uint64_t>(value)) c.address_space.page_kib = *v; else bad("expected unsigned integer");
      } else if (key == "stack.default_kib") {
        if (auto v = ParseInt<std::uint64_t>(value)) c.address_space.default_stack_kib = *v; else bad("expected unsigned integer");
      } else if (key == "stack.max_kib") {
        if (auto v = ParseInt<std::uint64_t>(value)) c.address_space.max_stack_kib = *v; else bad("expected unsigned integer");
      } else if (key == "zone.low") {
        if (auto v = ParseRational(value)) c.zones.low_frac = *v; else bad("expected fraction");
      } else if (key == "zone.high") {
        if (auto v = ParseRational(value)) c.zones.high_frac = *v; else bad("expected fraction");
      } else if (key == "monitor_period") {
        if (auto v = ParseInt<std::int64_t>(value)) c.monitor_period = *v; else bad("expected integer");
      } else if (key == "warmup_runs") {
        if (auto v = ParseInt<std::int64_t>(value)) c.warmup_runs = *v; else bad("expected integer");
      } else if (key == "max_lazy_delay") {
        if (auto v = ParseInt<std::int64_t>(value)) c.max_lazy_delay = *v; else bad("expected integer");
      } else {
        bad("unknown key");
      }
    } else if (section == Section::kThread) {
      ThreadSpec& t = c.threads.back();
      if (key == "count") {
        if (auto v = ParseInt<std::int64_t>(value)) t.count = *v; else bad("expected integer");
      } else if (key == "group") {
        if (auto v = ParseGroup(value)) t.group = *v;
        else bad("unknown group '" + std::string(value) + "'");
      } else if (key == "nice") {
        if (auto v = ParseInt<int>(value)) t.nice = *v; else bad("expected integer");
      } else if (key == "criticality") {
        auto v = ParseCriticality(value);
        if (v && *v != Criticality::kUnset) t.criticality = *v;
        else bad("expected time_critical or non_time_critical");
      } else if (key == "role") {
        t.role = value;
      } else if (key == "arrival") {
        if (auto v = ParseRange(value)) t.arrival = *v; else bad("expected N or N..M");
      } else if (key == "arrival_step") {
        if (auto v = ParseInt<std::int64_t>(value)) t.arrival_step = *v; else bad("expected integer");
      } else if (key == "behavior") {
        try {
          t.behavior = ParseBehavior(value);
        } catch (const TekError& e) {
          bad(e.what());
        }
      } else if (key == "stack_peak_kib") {
        if (auto v = ParseRange(value)) t.stack_peak_kib = *v; else bad("expected N or N..M");
      } else if (key == "stack_ramp_ticks") {
        if (auto v = ParseInt<std::int64_t>(value)) t.stack_ramp_ticks = *v; else bad("expected integer");
      } else if (key == "stack_steps") {
        if (auto v = ParseInt<std::int64_t>(value)) t.stack_steps = *v; else bad("expected integer");
      } else if (key == "stack_request_kib") {
        if (auto v = ParseInt<std::uint64_t>(value)) t.stack_request_kib = *v; else bad("expected unsigned integer");
      } else {
        bad("unknown key");
      }
    } else {
      EventSpec& e = c.events.back();
      if (key == "role") {
        e.role = value;
      } else if (key == "start") {
        if (auto v = ParseInt<std::int64_t>(value)) e.start = *v; else bad("expected integer");
      } else if (key == "interval") {
        if (auto v = ParseRange(value)) e.interval = *v; else bad("expected N or N..M");
      } else if (key == "count") {
        if (auto v = ParseInt<std::int64_t>(value)) e.count = *v; else bad("expected integer");
      } else {
        bad("unknown key");
      }
    }
    if (end == text.size()) break;
  }

  if (parser.errors.empty()) {
    for (FieldError e : ValidateScenario(c)) {
      if (auto it = parser.field_lines.find(e.field); it != parser.field_lines.end()) {
        e.line = it->second;
      } else if (auto dot = e.field.find("]."); dot != std::string::npos) {
        // Missing keys point at their section header.
        auto sec = parser.field_lines.find(e.field.substr(0, dot + 2));
        if (sec != parser.field_lines.end()) e.line = sec->second;
      }
      parser.errors.push_back(std::move(e));
    }
  }
  if (!parser.errors.empty()) throw ScenarioError(parser.source, std::move(parser.errors));
  return c;
}

ScenarioConfig ParseScenarioFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(path, {{0, "file", "cannot open"}});
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseScenarioText(buf.str(), path);
}

std::string SerializeScenario(const ScenarioConfig& c) {
  std::ostringstream out;
  out << "name = " << c.name << '\n';
  if (!c.description.empty()) out << "description = " << c.description << '\n';
  out << "seed = " << c.seed << '\n';
  out << "horizon_ticks = " << c.horizon_ticks << '\n';
  out << "mode = " << ToString(c.mode) << '\n';
  out << "weight_table = " << ToString(c.weight_table) << '\n';
  out << "group_shares =";
  for (GroupName g : kAllGroups) {
    out << ' ' << ToString(g) << ':' << FormatExact(c.group_shares[GroupIndex(g)]);
  }
  out << '\n';
  out << "address_space.total_kib = " << c.address_space.total_kib << '\n';
  out << "address_space.reserved_kib = " << c.address_space.reserved_kib << '\n';
  out << "address_space.page_kib = " << c.address_space.page_kib << '\n';
  out << "stack.default_kib = " << c.address_space.default_stack_kib << '\n';
  out << "stack.max_kib = " << c.address_space.max_stack_kib << '\n';
  out << "zone.low = " << FormatExact(c.zones.low_frac) << '\n';
  out << "zone.high = " << FormatExact(c.zones.high_frac) << '\n';
  out << "monitor_period = " << c.monitor_period << '\n';
  out << "warmup_runs = " << c.warmup_runs << '\n';
  if (c.max_lazy_delay) out << "max_lazy_delay = " << *c.max_lazy_delay << '\n';
  for (const ThreadSpec& t : c.threads) {
    out << "\n[thread]\n";
    out << "count = " << t.count << '\n';
    out << "group = " << ToString(t.group) << '\n';
    out << "nice = " << t.nice << '\n';
    out << "criticality = " << ToString(t.criticality) << '\n';
    out << "role = " << t.role << '\n';
    out << "arrival = " << t.arrival.ToString() << '\n';
    out << "arrival_step = " << t.arrival_step << '\n';
    out << "behavior = " << t.behavior.ToString() << '\n';
    out << "stack_peak_kib = " << t.stack_peak_kib.ToString() << '\n';
    out << "stack_ramp_ticks = " << t.stack_ramp_ticks << '\n';
    out << "stack_steps = " << t.stack_steps << '\n';
    if (t.stack_request_kib) out << "stack_request_kib = " << *t.stack_request_kib << '\n';
  }
  for (const EventSpec& e : c.events) {
    out << "\n[events]\n";
    out << "role = " << e.role << '\n';
    out << "start = " << e.start << '\n';
    out << "interval = " << e.interval.ToString() << '\n';
    out << "count = " << e.count << '\n';
  }
  return out.str();
}

}  // namespace tek
