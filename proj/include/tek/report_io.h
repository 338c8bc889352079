#ifndef TEK_REPORT_IO_H_
#define TEK_REPORT_IO_H_

// CSV and text renderings of a MetricsReport. Column layouts are documented in
// docs/output-format.md; every number is printed from integers or exact
// rationals so files are byte-stable.

#include <filesystem>
#include <string>
#include <vector>

#include "tek/sim_kernel.h"

namespace tek {

std::string SummaryCsv(const MetricsReport& r);
std::string MetricsCsv(const MetricsReport& r);
std::string ResponsesCsv(const MetricsReport& r);
std::string FaultsCsv(const MetricsReport& r);
std::string StacksCsv(const MetricsReport& r);
std::string MigrationsCsv(const MetricsReport& r);
std::string TraceCsv(const MetricsReport& r);

// Paired baseline/tek metrics: metric,baseline,tek,ratio.
std::string CompareCsv(const MetricsReport& baseline, const MetricsReport& tek);
// Human-readable versions for the terminal.
std::string SummaryText(const MetricsReport& r);
std::string CompareText(const MetricsReport& baseline, const MetricsReport& tek);

// Writes every output file for one run into `dir` (created if needed) and
// returns the file names written, in order.
std::vector<std::string> WriteRunOutputs(const MetricsReport& r,
                                         const std::filesystem::path& dir,
                                         bool with_trace);

void WriteFile(const std::filesystem::path& path, const std::string& content);
void WriteFile(const std::filesystem::path& path, const std::vector<std::byte>& content);
std::vector<std::byte> ReadBinaryFile(const std::filesystem::path& path);

}  // namespace tek

#endif  // TEK_REPORT_IO_H_
