// ccmsim command line: run, sweep, validate, check-rings, presets.
// Exit codes: 0 ok, 2 bad config or budget, 3 invariant or simulation failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ccmsim/ccmsim.hpp"

namespace fs = std::filesystem;
using namespace ccmsim;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kInvariantError = 3;

struct Overrides {
  std::string mechanism, polling, scheduler, ooo;
  std::optional<std::uint32_t> sf;
  std::optional<std::string> out;
  bool trace = false;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--mechanism", o.mechanism, "rp, bs, kai or kai-int");
  cmd->add_option("--polling", o.polling, "KAI polling interval (p1, p10, p100 or a duration such as 500ns)");
  cmd->add_option("--sf", o.sf, "streaming factor");
  cmd->add_option("--scheduler", o.scheduler, "fifo or rr, both sides");
  cmd->add_option("--ooo", o.ooo, "out-of-order payload formation, on or off");
  cmd->add_flag("--trace", o.trace, "write the event trace of every run");
  cmd->add_option("--out", o.out, "output directory");
}

// A flag pins its axis: it sets the base value and drops any sweep list.
void apply_overrides(ExperimentConfig& c, const Overrides& o) {
  if (!o.mechanism.empty()) {
    c.sys.mechanism = cfg::mechanism("--mechanism", o.mechanism);
    c.mechanism_set = true;
    c.axes.mechanisms.clear();
  }
  if (!o.polling.empty()) {
    c.sys.host.polling_interval = cfg::polling("--polling", o.polling);
    c.axes.polling.clear();
  }
  if (o.sf) {
    if (*o.sf == 0) throw ConfigError("--sf: must be >= 1");
    c.sys.ccm.sf = *o.sf;
    c.axes.sf.clear();
  }
  if (!o.scheduler.empty()) {
    c.ccm_scheduler = c.host_scheduler = cfg::scheduler("--scheduler", o.scheduler);
    c.resolve_schedulers();
    c.axes.scheduler.clear();
  }
  if (!o.ooo.empty()) {
    c.sys.ccm.ooo = cfg::flag("--ooo", o.ooo);
    c.axes.ooo.clear();
  }
  if (o.out) c.out_dir = *o.out;
  c.validate();
}

void write_reports(const ExperimentConfig& c, const std::vector<ResultRow>& rows) {
  fs::create_directories(c.out_dir);
  std::ofstream csv(fs::path(c.out_dir) / "results.csv");
  write_csv(csv, rows);
  std::ofstream json(fs::path(c.out_dir) / "results.json");
  write_json(json, rows);
}

int execute(ExperimentConfig& c, const Overrides& o) {
  RunObserver observe;
  if (o.trace)
    observe = [&c](const RunPoint& p, const RunResult& run) {
      fs::create_directories(c.out_dir);
      std::ofstream t(fs::path(c.out_dir) / ("trace_" + p.run_id + ".csv"));
      write_trace(t, run);
    };
  std::vector<ResultRow> rows;
  try {
    run_experiment(c, rows, observe);
  } catch (...) {
    write_reports(c, rows);  // partial results
    throw;
  }
  write_reports(c, rows);
  write_csv(std::cout, rows);
  return kOk;
}

int cmd_run(const std::string& path, const Overrides& o) {
  ExperimentConfig c = load_config_file(path);
  c.axes = {};
  apply_overrides(c, o);
  if (!c.mechanism_set) throw ConfigError("run.mechanism: required (config or --mechanism)");
  return execute(c, o);
}

int cmd_sweep(const std::string& path, const Overrides& o) {
  ExperimentConfig c = load_config_file(path);
  apply_overrides(c, o);
  const auto& a = c.axes;
  if (a.mechanisms.empty() && a.polling.empty() && a.sf.empty() && a.scheduler.empty() && a.ooo.empty())
    throw ConfigError("sweep: no axes given");
  if (a.mechanisms.empty() && !c.mechanism_set)
    throw ConfigError("run.mechanism: required when sweep.mechanism is not given");
  return execute(c, o);
}

int cmd_validate(const std::string& path) {
  const ExperimentConfig c = load_config_file(path);
  std::cout << path << ": ok (" << c.workload << ", " << expand_sweep(c).size() << " run(s))\n";
  return kOk;
}

bool report(const ExplorerConfig& e, const ExplorerResult& r) {
  std::cout << "machine " << to_string(e.variant) << ": capacity " << e.capacity << ", steps " << e.steps
            << ", chunks " << e.chunks << ", " << r.states_visited << " states, " << r.transitions
            << " transitions, " << r.violations.size() << " violation(s)\n";
  for (const auto& v : r.violations) {
    std::cout << "  " << v.rule << ":";
    for (const auto& s : v.path) std::cout << ' ' << s;
    std::cout << '\n';
  }
  return r.violations.empty();
}

int cmd_check_rings(const std::string& machine, std::uint32_t capacity, std::uint32_t steps, std::uint32_t chunks) {
  ExplorerConfig e;
  e.capacity = capacity;
  e.steps = steps;
  e.chunks = chunks;
  bool ok = true;
  if (machine == "correct" || machine == "both") {
    e.variant = MachineVariant::Correct;
    ok = report(e, explore_interleavings(e)) && ok;
  }
  if (machine == "broken-meta-first" || machine == "both") {
    e.variant = MachineVariant::BrokenMetaFirst;
    const bool clean = report(e, explore_interleavings(e));
    if (clean) std::cout << "  expected the broken variant to show a violation\n";
    ok = !clean && ok;
  }
  std::cout << (ok ? "check-rings: ok\n" : "check-rings: FAILED\n");
  return ok ? kOk : kInvariantError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ccmsim: host and CXL computational memory offload simulator"};
  app.require_subcommand(1);

  std::string config;
  Overrides run_o, sweep_o;
  auto* run = app.add_subcommand("run", "single run of a config");
  run->add_option("config", config, "config file")->required();
  add_overrides(run, run_o);

  auto* sweep = app.add_subcommand("sweep", "cross product of the config's sweep axes");
  sweep->add_option("config", config, "config file")->required();
  add_overrides(sweep, sweep_o);

  auto* validate = app.add_subcommand("validate", "parse and validate a config");
  validate->add_option("config", config, "config file")->required();

  std::string machine = "both";
  std::uint32_t capacity = 2, steps = 8, chunks = 3;
  auto* rings = app.add_subcommand("check-rings", "exhaustive interleaving check of the ring protocol");
  rings->add_option("--machine", machine, "correct, broken-meta-first or both")
      ->check(CLI::IsMember({"correct", "broken-meta-first", "both"}));
  rings->add_option("--capacity", capacity, "ring capacity in slots");
  rings->add_option("--steps", steps, "interleaving depth");
  rings->add_option("--chunks", chunks, "payloads the device streams");

  auto* list = app.add_subcommand("presets", "list workload presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(config, run_o);
    if (*sweep) return cmd_sweep(config, sweep_o);
    if (*validate) return cmd_validate(config);
    if (*rings) return cmd_check_rings(machine, capacity, steps, chunks);
    if (*list) {
      for (const auto& p : presets()) std::cout << p.name << "  " << p.note << '\n';
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ExplorerBudgetExceeded& e) {
    std::cerr << "budget error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvariantViolation& e) {
    std::cerr << e.what() << '\n';
    return kInvariantError;
  } catch (const SimulationError& e) {
    std::cerr << "simulation error: " << e.what() << '\n';
    return kInvariantError;
  }
  return kOk;
}
