// teksim: run scheduling scenarios under the baseline and TEK policies.
//
// Exit codes: 0 success, 1 usage or validation error, 2 internal invariant
// violation.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tek/report_io.h"
#include "tek/scenario.h"
#include "tek/sim_kernel.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInternal = 2;

tek::ScenarioConfig LoadScenario(const std::string& path) {
  tek::ScenarioConfig config = tek::ParseScenarioFile(path);
  if (const char* env = std::getenv("TEKSIM_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const unsigned long long seed = std::stoull(env, &used, 10);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      config.seed = seed;
    } catch (const std::exception&) {
      throw tek::ScenarioError("TEKSIM_SEED", {{0, "seed", "expected unsigned integer"}});
    }
  }
  return config;
}

std::vector<tek::RunMode> ModesFor(tek::RunMode mode) {
  if (mode == tek::RunMode::kBoth) return {tek::RunMode::kBaseline, tek::RunMode::kTek};
  return {mode};
}

// Runs the requested modes as isolated simulations in parallel; results come
// back in the order of `modes`.
std::vector<tek::MetricsReport> RunModes(const tek::ScenarioConfig& config,
                                         const std::vector<tek::RunMode>& modes,
                                         tek::SimOptions options) {
  std::vector<std::future<tek::MetricsReport>> futures;
  for (tek::RunMode m : modes) {
    futures.push_back(std::async(std::launch::async, [&config, m, options] {
      return tek::RunScenario(config, m, options);
    }));
  }
  std::vector<tek::MetricsReport> reports;
  for (auto& f : futures) reports.push_back(f.get());
  return reports;
}

fs::path DefaultOut(const tek::ScenarioConfig& config) {
  return fs::path("runs") / config.name;
}

int CmdRun(const std::string& path, const std::optional<std::string>& mode_flag,
           const std::optional<std::string>& out_flag, bool trace) {
  const tek::ScenarioConfig config = LoadScenario(path);
  tek::RunMode mode = config.mode;
  if (mode_flag) {
    auto parsed = tek::ParseRunMode(*mode_flag);
    if (!parsed) {
      std::cerr << "teksim: --mode must be baseline, tek or both\n";
      return kExitValidation;
    }
    mode = *parsed;
  }
  const fs::path out = out_flag ? fs::path(*out_flag) : DefaultOut(config);
  const std::vector<tek::RunMode> modes = ModesFor(mode);
  const std::vector<tek::MetricsReport> reports =
      RunModes(config, modes, tek::SimOptions{trace});
  for (const tek::MetricsReport& r : reports) {
    const fs::path dir = out / std::string(tek::ToString(r.mode));
    tek::WriteRunOutputs(r, dir, trace);
    std::cout << "== " << config.name << " [" << tek::ToString(r.mode) << "] -> "
              << dir.string() << "\n"
              << tek::SummaryText(r);
  }
  return kExitOk;
}

int CmdCompare(const std::string& path, const std::optional<std::string>& out_flag,
               bool trace) {
  const tek::ScenarioConfig config = LoadScenario(path);
  const std::vector<tek::MetricsReport> reports = RunModes(
      config, {tek::RunMode::kBaseline, tek::RunMode::kTek}, tek::SimOptions{trace});
  const fs::path out = out_flag ? fs::path(*out_flag) : DefaultOut(config);
  for (const tek::MetricsReport& r : reports) {
    tek::WriteRunOutputs(r, out / std::string(tek::ToString(r.mode)), trace);
  }
  tek::WriteFile(out / "compare.csv", tek::CompareCsv(reports[0], reports[1]));
  std::cout << "== " << config.name << " (seed " << config.seed << ") -> "
            << out.string() << "\n"
            << tek::CompareText(reports[0], reports[1]);
  return kExitOk;
}

int CmdDumpTable(const std::string& target, const std::optional<std::string>& out_flag) {
  fs::path tit = target;
  if (fs::is_directory(tit)) tit /= "table.tit";
  if (!fs::is_regular_file(tit)) {
    std::cerr << "teksim: no table dump at " << tit.string() << "\n";
    return kExitValidation;
  }
  const tek::ThreadInformationTable table =
      tek::ThreadInformationTable::LoadBinary(tek::ReadBinaryFile(tit));
  const std::string csv = table.DumpCsv();
  const fs::path csv_path =
      out_flag ? fs::path(*out_flag) : fs::path(tit).replace_extension(".csv");
  tek::WriteFile(csv_path, csv);
  if (out_flag) {
    tek::WriteFile(fs::path(*out_flag).replace_extension(".tit"), table.DumpBinary());
  }
  std::cout << csv;
  return kExitOk;
}

int CmdListScenarios(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    std::cerr << "teksim: no scenario directory " << dir << "\n";
    return kExitValidation;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".scn") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    const tek::ScenarioConfig c = tek::ParseScenarioFile(f.string());
    std::cout << f.filename().string() << "\t" << c.name << "\t"
              << c.TotalThreads() << " threads\t" << c.description << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate the TEK scheduler against a CFS-style baseline."};
  app.require_subcommand(1);

  std::string scenario;
  std::optional<std::string> mode;
  std::optional<std::string> out;
  bool trace = false;

  CLI::App* run = app.add_subcommand("run", "Run one scenario and write CSV outputs");
  run->add_option("scenario", scenario, "Scenario file")->required();
  run->add_option("--mode", mode, "baseline, tek or both (default: from scenario)");
  run->add_option("--out", out, "Output directory (default: runs/<name>)");
  run->add_flag("--trace", trace, "Also write trace.csv");

  CLI::App* compare =
      app.add_subcommand("compare", "Run both modes and print paired deltas");
  compare->add_option("scenario", scenario, "Scenario file")->required();
  compare->add_option("--out", out, "Output directory (default: runs/<name>)");
  compare->add_flag("--trace", trace, "Also write trace.csv");

  std::string target;
  CLI::App* dump =
      app.add_subcommand("dump-table", "Decode a table.tit dump to CSV");
  dump->add_option("run", target, "Run directory or .tit file")->required();
  dump->add_option("--out", out, "CSV path; a .tit copy is written beside it");

  std::string dir = TEK_SCENARIO_DIR;
  CLI::App* list = app.add_subcommand("list-scenarios", "List shipped scenarios");
  list->add_option("--dir", dir, "Scenario directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "teksim: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (*run) return CmdRun(scenario, mode, out, trace);
    if (*compare) return CmdCompare(scenario, out, trace);
    if (*dump) return CmdDumpTable(target, out);
    if (*list) return CmdListScenarios(dir);
  } catch (const tek::ScenarioError& e) {
    std::cerr << "teksim: " << e.what() << "\n";
    return kExitValidation;
  } catch (const tek::TekError& e) {
    std::cerr << "teksim: " << e.what() << "\n";
    return e.code() == tek::ErrorCode::kInvalidArgument ? kExitValidation : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "teksim: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitValidation;
}
