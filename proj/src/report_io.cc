#include "tek/report_io.h"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

namespace tek {

namespace {

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

std::string Fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// numerator / denominator to 4 places, or n/a on a zero denominator.
std::string RatioText(const Rational& num, const Rational& den) {
  if (den == 0) return "n/a";
  return ToFixed(num / den, 4);
}

std::string ReductionText(const Rational& base, const Rational& tek) {
  if (base == 0) return "n/a";
  return ToFixed(1 - tek / base, 4);
}

struct SummaryRow {
  std::string key;
  std::string value;
};

std::vector<SummaryRow> SummaryRows(const MetricsReport& r) {
  const ResponseStats tc = r.ResponsesOf(Criticality::kTimeCritical);
  const ResponseStats ntc = r.ResponsesOf(Criticality::kNonTimeCritical);
  const auto first = r.FirstFault(FaultKind::kAllocationExhaustion);
  const auto i = [](auto v) { return std::to_string(v); };
  Rational util = 0;
  if (r.elapsed_ticks > 0) {
    util = MakeRational(r.elapsed_ticks - r.idle_ticks, r.elapsed_ticks);
  }
  return {
      {"scenario", r.scenario},
      {"mode", std::string(ToString(r.mode))},
      {"seed", i(r.seed)},
      {"elapsed_ticks", i(r.elapsed_ticks)},
      {"idle_ticks", i(r.idle_ticks)},
      {"cpu_utilization", ToFixed(util, 4)},
      {"context_switches", i(r.context_switches)},
      {"tek_episodes", i(r.tek_episodes)},
      {"tc_events", i(tc.count)},
      {"tc_mean_response", ToFixed(tc.mean, 3)},
      {"tc_response_cv", Fixed6(tc.cv)},
      {"tc_max_response", i(tc.max)},
      {"ntc_events", i(ntc.count)},
      {"ntc_mean_response", ToFixed(ntc.mean, 3)},
      {"ntc_max_response", i(ntc.max)},
      {"tc_involuntary_preemptions", i(r.PreemptionsOf(Criticality::kTimeCritical))},
      {"ntc_involuntary_preemptions", i(r.PreemptionsOf(Criticality::kNonTimeCritical))},
      {"undeliverable_events", i(r.undeliverable_events)},
      {"unfinished_events", i(r.unfinished_events)},
      {"allocation_exhaustion_faults", i(r.FaultCount(FaultKind::kAllocationExhaustion))},
      {"first_exhaustion_tick", first ? i(first->tick) : ""},
      {"first_exhaustion_tid", first ? i(first->tid) : ""},
      {"guard_overrun_faults", i(r.FaultCount(FaultKind::kGuardPageOverrun))},
      {"stack_threads", i(r.space.threads)},
      {"allocated_kib", i(r.space.allocated_kib)},
      {"guard_kib", i(r.space.guard_kib)},
      {"actual_peak_kib", i(r.space.actual_peak_kib)},
      {"overhead_ratio", ToFixed(r.space.overhead_ratio, 4)},
      {"overhead_above_actual", ToFixed(r.space.overhead_above_actual, 4)},
      {"migrations", i(r.migrations.size())},
      {"monitor_samples", i(r.monitor_samples)},
  };
}

}  // namespace

std::string SummaryCsv(const MetricsReport& r) {
  std::ostringstream out;
  out << "key,value\n";
  for (const SummaryRow& row : SummaryRows(r)) {
    out << row.key << ',' << CsvField(row.value) << '\n';
  }
  return out.str();
}

std::string MetricsCsv(const MetricsReport& r) {
  std::ostringstream out;
  out << "tid,role,group,criticality,arrival_tick,cpu_ticks,context_switches,"
         "involuntary_preemptions,events_completed,mean_response,max_response,"
         "max_wait,final_state\n";
  for (const ThreadMetrics& m : r.threads) {
    Rational mean = 0;
    if (m.events_completed > 0) {
      mean = MakeRational(m.response_total, static_cast<std::int64_t>(m.events_completed));
    }
    out << m.tid << ',' << CsvField(m.role) << ',' << ToString(m.group) << ','
        << ToString(m.criticality) << ',' << m.arrival_tick << ',' << m.cpu_ticks << ','
        << m.context_switches << ',' << m.involuntary_preemptions << ','
        << m.events_completed << ',' << ToFixed(mean, 3) << ',' << m.max_response << ','
        << m.max_wait << ',' << m.final_state << '\n';
  }
  return out.str();
}

std::string ResponsesCsv(const MetricsReport& r) {
  std::ostringstream out;
  out << "event_id,tid,criticality,arrival_tick,completion_tick,response\n";
  for (const ResponseSample& s : r.responses) {
    out << s.event_id << ',' << s.tid << ',' << ToString(s.criticality) << ','
        << s.arrival_tick << ',' << s.completion_tick << ',' << s.response() << '\n';
  }
  return out.str();
}

std::string FaultsCsv(const MetricsReport& r) {
  std::ostringstream out;
  out << "tick,tid,kind,size_kib\n";
  for (const FaultEvent& f : r.faults) {
    out << f.tick << ',' << f.tid << ',' << ToString(f.kind) << ',' << f.size_kib << '\n';
  }
  return out.str();
}

std::string StacksCsv(const MetricsReport& r) {
  std::ostringstream out;
  out << "tid,role,policy,reserved_kib,guard_kib,peak_kib,samples,zone,live,faulted,"
         "advisory\n";
  for (const StackRow& row : r.stacks) {
    const StackAllocation& a = row.alloc;
    out << a.tid << ',' << CsvField(a.role) << ',' << ToString(a.policy) << ','
        << a.reserved_kib << ',' << a.guard_kib << ',' << a.peak_used_kib << ','
        << a.samples << ',' << ToString(row.zone) << ',' << (row.live ? 1 : 0) << ','
        << (a.faulted ? 1 : 0) << ',' << CsvField(row.advisory) << '\n';
  }
  return out.str();
}

std::string MigrationsCsv(const MetricsReport& r) {
  std::ostringstream out;
  out << "tick,tid,from,to\n";
  for (const MigrationRecord& m : r.migrations) {
    out << m.tick << ',' << m.tid << ',' << m.from.ToString() << ',' << m.to.ToString()
        << '\n';
  }
  return out.str();
}

std::string TraceCsv(const MetricsReport& r) {
  std::ostringstream out;
  out << "tick,running_tid,event\n";
  for (const TraceEntry& e : r.trace) {
    out << e.tick << ',';
    if (e.running) out << *e.running;
    out << ',' << CsvField(e.event) << '\n';
  }
  return out.str();
}

std::string CompareCsv(const MetricsReport& baseline, const MetricsReport& tek) {
  const ResponseStats b = baseline.ResponsesOf(Criticality::kTimeCritical);
  const ResponseStats t = tek.ResponsesOf(Criticality::kTimeCritical);
  const ResponseStats bn = baseline.ResponsesOf(Criticality::kNonTimeCritical);
  const ResponseStats tn = tek.ResponsesOf(Criticality::kNonTimeCritical);
  const auto r = [](std::int64_t v) { return MakeRational(v); };
  const auto u = [](std::uint64_t v) { return Rational(BigInt(v)); };

  std::ostringstream out;
  out << "metric,baseline,tek,comparison,value\n";
  out << "tc_mean_response," << ToFixed(b.mean, 3) << ',' << ToFixed(t.mean, 3)
      << ",ratio," << RatioText(b.mean, t.mean) << '\n';
  out << "tc_response_cv," << Fixed6(b.cv) << ',' << Fixed6(t.cv) << ",difference,"
      << Fixed6(b.cv - t.cv) << '\n';
  out << "tc_max_response," << b.max << ',' << t.max << ",ratio,"
      << RatioText(r(b.max), r(t.max)) << '\n';
  out << "ntc_max_response," << bn.max << ',' << tn.max << ",ratio,"
      << RatioText(r(bn.max), r(tn.max)) << '\n';
  const std::uint64_t bp = baseline.PreemptionsOf(Criticality::kTimeCritical);
  const std::uint64_t tp = tek.PreemptionsOf(Criticality::kTimeCritical);
  out << "tc_involuntary_preemptions," << bp << ',' << tp << ",reduction,"
      << ReductionText(u(bp), u(tp)) << '\n';
  out << "context_switches," << baseline.context_switches << ',' << tek.context_switches
      << ",reduction,"
      << ReductionText(u(baseline.context_switches), u(tek.context_switches)) << '\n';
  out << "allocated_kib," << baseline.space.allocated_kib << ',' << tek.space.allocated_kib
      << ",ratio,"
      << RatioText(u(baseline.space.allocated_kib), u(tek.space.allocated_kib)) << '\n';
  out << "overhead_ratio," << ToFixed(baseline.space.overhead_ratio, 4) << ','
      << ToFixed(tek.space.overhead_ratio, 4) << ",ratio,"
      << RatioText(baseline.space.overhead_ratio, tek.space.overhead_ratio) << '\n';
  const std::uint64_t bf = baseline.FaultCount(FaultKind::kAllocationExhaustion);
  const std::uint64_t tf = tek.FaultCount(FaultKind::kAllocationExhaustion);
  out << "allocation_exhaustion_faults," << bf << ',' << tf << ",difference,"
      << (static_cast<std::int64_t>(bf) - static_cast<std::int64_t>(tf)) << '\n';
  const std::uint64_t bg = baseline.FaultCount(FaultKind::kGuardPageOverrun);
  const std::uint64_t tg = tek.FaultCount(FaultKind::kGuardPageOverrun);
  out << "guard_overrun_faults," << bg << ',' << tg << ",difference,"
      << (static_cast<std::int64_t>(bg) - static_cast<std::int64_t>(tg)) << '\n';
  return out.str();
}

std::string SummaryText(const MetricsReport& r) {
  std::ostringstream out;
  for (const SummaryRow& row : SummaryRows(r)) {
    out << std::left << std::setw(30) << row.key << row.value << '\n';
  }
  return out.str();
}

std::string CompareText(const MetricsReport& baseline, const MetricsReport& tek) {
  std::istringstream in(CompareCsv(baseline, tek));
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(col);
    out << std::left << std::setw(30) << cols[0];
    for (std::size_t c = 1; c < cols.size(); ++c) out << std::setw(14) << cols[c];
    out << '\n';
  }
  return out.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kInvalidArgument, "cannot write " + path.string());
  out << content;
}

void WriteFile(const std::filesystem::path& path, const std::vector<std::byte>& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kInvalidArgument, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(content.data()),
            static_cast<std::streamsize>(content.size()));
}

std::vector<std::byte> ReadBinaryFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kInvalidArgument, "cannot read " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> bytes(raw.size());
  std::memcpy(bytes.data(), raw.data(), raw.size());
  return bytes;
}

std::vector<std::string> WriteRunOutputs(const MetricsReport& r,
                                         const std::filesystem::path& dir,
                                         bool with_trace) {
  std::filesystem::create_directories(dir);
  std::vector<std::pair<std::string, std::string>> files = {
      {"summary.csv", SummaryCsv(r)},     {"metrics.csv", MetricsCsv(r)},
      {"responses.csv", ResponsesCsv(r)}, {"faults.csv", FaultsCsv(r)},
      {"stacks.csv", StacksCsv(r)},       {"migrations.csv", MigrationsCsv(r)},
      {"table.csv", r.table_csv},
  };
  if (with_trace) files.emplace_back("trace.csv", TraceCsv(r));
  std::vector<std::string> written;
  for (const auto& [name, content] : files) {
    WriteFile(dir / name, content);
    written.push_back(name);
  }
  WriteFile(dir / "table.tit", r.table_dump);
  written.push_back("table.tit");
  return written;
}

}  // namespace tek
