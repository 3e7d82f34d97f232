#pragma once

// Experiment configuration: an INI-style text file
//
//   [run]      workload, mechanism, seed, out, baseline
//   [workload] overrides of the chosen preset's fields
//   [host] [ccm] [fabric] [ring] [metrics]
//   [sweep]    comma-separated axis values
//
// Unknown sections and keys are rejected; every error names its field path.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccmsim/metrics.hpp"
#include "ccmsim/presets.hpp"
#include "ccmsim/system.hpp"
#include "ccmsim/types.hpp"

namespace ccmsim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kSeedEnv = "CCMSIM_SEED";

// ---- scalar parsing -------------------------------------------------------

namespace cfg {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double number(const std::string& path, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d))
    throw ConfigError(path + ": expected a number, got '" + v + "'");
  return d;
}

inline std::uint64_t count(const std::string& path, const std::string& v) {
  const double d = number(path, v);
  if (d < 0 || d != std::floor(d)) throw ConfigError(path + ": expected a non-negative integer, got '" + v + "'");
  return static_cast<std::uint64_t>(d);
}

inline bool flag(const std::string& path, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(path + ": expected on/off, got '" + v + "'");
}

// "50ns", "1.5us", "2ms", "700ps" or a bare number of picoseconds.
inline SimTime duration(const std::string& path, const std::string& v) {
  static const std::pair<const char*, double> units[] = {{"ps", 1}, {"ns", 1e3}, {"us", 1e6}, {"ms", 1e9}, {"s", 1e12}};
  for (const auto& [suf, mul] : units) {
    const std::string s(suf);
    if (v.size() > s.size() && v.compare(v.size() - s.size(), s.size(), s) == 0) {
      const std::string num = trim(v.substr(0, v.size() - s.size()));
      if (!num.empty() && (std::isdigit(static_cast<unsigned char>(num.back())) || num.back() == '.')) {
        const double d = number(path, num) * mul;
        if (d < 0) throw ConfigError(path + ": duration must be >= 0");
        return static_cast<SimTime>(std::llround(d));
      }
    }
  }
  const double d = number(path, v);
  if (d < 0) throw ConfigError(path + ": duration must be >= 0");
  return static_cast<SimTime>(std::llround(d));
}

// Polling tokens p1/p10/p100 are multiples of the 50 ns base period.
inline SimTime polling(const std::string& path, const std::string& v) {
  if (v.size() > 1 && v[0] == 'p' && std::all_of(v.begin() + 1, v.end(), ::isdigit))
    return static_cast<SimTime>(std::stoll(v.substr(1))) * 50 * kNanosecond;
  const SimTime t = duration(path, v);
  if (t <= 0) throw ConfigError(path + ": polling interval must be > 0");
  return t;
}

inline double bandwidth(const std::string& path, const std::string& v) {
  std::string s = v;
  double mul = 1;
  for (const auto& [suf, m] : std::initializer_list<std::pair<const char*, double>>{
           {"GiB/s", kGiB}, {"MiB/s", 1024.0 * 1024.0}, {"GB/s", 1e9}, {"MB/s", 1e6}, {"B/s", 1}}) {
    const std::string x(suf);
    if (s.size() > x.size() && s.compare(s.size() - x.size(), x.size(), x) == 0) {
      s = s.substr(0, s.size() - x.size());
      mul = m;
      break;
    }
  }
  const double d = number(path, trim(s)) * mul;
  if (!(d > 0)) throw ConfigError(path + ": bandwidth must be > 0");
  return d;
}

inline double frequency(const std::string& path, const std::string& v) {
  std::string s = v;
  double mul = 1;
  if (s.size() > 3 && s.compare(s.size() - 3, 3, "GHz") == 0) {
    s = s.substr(0, s.size() - 3);
    mul = 1e9;
  } else if (s.size() > 3 && s.compare(s.size() - 3, 3, "MHz") == 0) {
    s = s.substr(0, s.size() - 3);
    mul = 1e6;
  }
  const double d = number(path, trim(s)) * mul;
  if (!(d > 0)) throw ConfigError(path + ": frequency must be > 0");
  return d;
}

inline Mechanism mechanism(const std::string& path, const std::string& v) {
  auto m = parse_mechanism(v);
  if (!m) throw ConfigError(path + ": unknown mechanism '" + v + "' (rp, bs, kai, kai-int)");
  return *m;
}

inline SchedulerPolicy scheduler(const std::string& path, const std::string& v) {
  auto s = parse_scheduler(v);
  if (!s) throw ConfigError(path + ": unknown scheduler '" + v + "' (fifo, rr)");
  return *s;
}

inline std::uint32_t u32(const std::string& path, const std::string& v) {
  const auto n = count(path, v);
  if (n > 0xffffffffULL) throw ConfigError(path + ": value too large");
  return static_cast<std::uint32_t>(n);
}

}  // namespace cfg

// ---- the file ---------------------------------------------------------------

struct IniEntry {
  std::string key;
  std::string value;
  int line;
};

using Ini = std::map<std::string, std::vector<IniEntry>>;

inline Ini parse_ini(std::istream& in, const std::string& source = "config") {
  Ini ini;
  std::string line, section;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = cfg::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source + ":" + std::to_string(n) + ": malformed section header");
      section = cfg::trim(line.substr(1, line.size() - 2));
      ini[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(n) + ": expected key = value");
    if (section.empty()) throw ConfigError(source + ":" + std::to_string(n) + ": key outside any section");
    const std::string key = cfg::trim(line.substr(0, eq));
    for (const auto& e : ini[section])
      if (e.key == key) throw ConfigError(section + "." + key + ": set twice (line " + std::to_string(n) + ")");
    ini[section].push_back({key, cfg::trim(line.substr(eq + 1)), n});
  }
  return ini;
}

struct SweepAxes {
  std::vector<Mechanism> mechanisms;
  std::vector<SimTime> polling;
  std::vector<std::uint32_t> sf;
  std::vector<SchedulerPolicy> scheduler;
  std::vector<bool> ooo;
};

struct ExperimentConfig {
  std::string workload;
  WorkloadParams params;
  SystemConfig sys;
  bool mechanism_set = false;
  std::optional<SchedulerPolicy> ccm_scheduler;  // explicit settings win over the preset
  std::optional<SchedulerPolicy> host_scheduler;
  std::optional<SchedulerPolicy> preset_scheduler;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  Mechanism baseline = Mechanism::RP;
  SweepAxes axes;
  IdleOptions idle;

  // Scheduler actually used on each side.
  void resolve_schedulers() {
    const auto fallback = preset_scheduler.value_or(SchedulerPolicy::FIFO);
    sys.ccm.scheduler = ccm_scheduler.value_or(fallback);
    sys.host.scheduler = host_scheduler.value_or(fallback);
  }

  TaskGraph graph() const {
    WorkloadParams p = params;
    if (seed)
      if (auto* g = std::get_if<GraphParams>(&p)) g->seed = *seed;
    return build_graph(p);
  }

  void validate() const {
    if (sys.ccm.sf > sys.ring.capacity)
      throw ConfigError("ccm.sf: " + std::to_string(sys.ccm.sf) + " exceeds ring.capacity " +
                        std::to_string(sys.ring.capacity));
    try {
      sys.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    for (auto sf : axes.sf)
      if (sf == 0 || sf > sys.ring.capacity)
        throw ConfigError("sweep.sf: " + std::to_string(sf) + " must be in [1, ring.capacity]");
  }
};

namespace detail {

using Setter = std::function<void(const std::string& path, const std::string& value)>;

inline void apply_section(const std::string& name, const std::vector<IniEntry>& entries,
                          const std::map<std::string, Setter>& setters) {
  for (const auto& e : entries) {
    const std::string path = name + "." + e.key;
    auto it = setters.find(e.key);
    if (it == setters.end()) throw ConfigError(path + ": unknown key (line " + std::to_string(e.line) + ")");
    it->second(path, e.value);
  }
}

inline void cost_setters(std::map<std::string, Setter>& s, CostModel& c) {
  s["ccm_freq_hz"] = [&c](auto& p, auto& v) { c.ccm_freq_hz = cfg::frequency(p, v); };
  s["host_freq_hz"] = [&c](auto& p, auto& v) { c.host_freq_hz = cfg::frequency(p, v); };
  s["ccm_cycles_per_elem"] = [&c](auto& p, auto& v) { c.ccm_cycles_per_elem = cfg::number(p, v); };
  s["ccm_mem_ps_per_elem"] = [&c](auto& p, auto& v) { c.ccm_mem_ps_per_elem = cfg::number(p, v); };
  s["host_cycles_per_item"] = [&c](auto& p, auto& v) { c.host_cycles_per_item = cfg::number(p, v); };
}

inline std::map<std::string, Setter> workload_setters(WorkloadParams& params) {
  std::map<std::string, Setter> s;
  std::visit(
      [&s](auto& w) {
        using T = std::decay_t<decltype(w)>;
        cost_setters(s, w.cost);
        if constexpr (std::is_same_v<T, KnnParams>) {
          s["dim"] = [&w](auto& p, auto& v) { w.dim = cfg::u32(p, v); };
          s["rows"] = [&w](auto& p, auto& v) { w.rows = cfg::u32(p, v); };
          s["k"] = [&w](auto& p, auto& v) { w.k = cfg::u32(p, v); };
          s["rows_per_task"] = [&w](auto& p, auto& v) { w.rows_per_task = cfg::u32(p, v); };
          s["host_rows_per_task"] = [&w](auto& p, auto& v) { w.host_rows_per_task = cfg::u32(p, v); };
          s["ccm_threads"] = [&w](auto& p, auto& v) { w.ccm_threads = cfg::u32(p, v); };
          s["host_chain"] = [&w](auto& p, auto& v) { w.host_chain = cfg::flag(p, v); };
        } else if constexpr (std::is_same_v<T, GraphParams>) {
          s["n_v"] = [&w](auto& p, auto& v) { w.n_v = cfg::count(p, v); };
          s["n_e"] = [&w](auto& p, auto& v) { w.n_e = cfg::count(p, v); };
          s["iterations"] = [&w](auto& p, auto& v) { w.iterations = cfg::u32(p, v); };
          s["ccm_tasks"] = [&w](auto& p, auto& v) { w.ccm_tasks = cfg::u32(p, v); };
          s["host_tasks"] = [&w](auto& p, auto& v) { w.host_tasks = cfg::u32(p, v); };
          s["active_min"] = [&w](auto& p, auto& v) { w.active_min = cfg::number(p, v); };
          s["active_max"] = [&w](auto& p, auto& v) { w.active_max = cfg::number(p, v); };
          s["skew_fraction"] = [&w](auto& p, auto& v) { w.skew_fraction = cfg::number(p, v); };
          s["skew_delay"] = [&w](auto& p, auto& v) { w.skew_delay = cfg::number(p, v); };
          s["seed"] = [&w](auto& p, auto& v) { w.seed = cfg::count(p, v); };
        } else if constexpr (std::is_same_v<T, OlapParams>) {
          s["rows"] = [&w](auto& p, auto& v) { w.rows = cfg::count(p, v); };
          s["selectivity"] = [&w](auto& p, auto& v) { w.selectivity = cfg::number(p, v); };
          s["ccm_tasks"] = [&w](auto& p, auto& v) { w.ccm_tasks = cfg::u32(p, v); };
          s["host_tasks"] = [&w](auto& p, auto& v) { w.host_tasks = cfg::u32(p, v); };
        } else {
          s["hidden"] = [&w](auto& p, auto& v) { w.hidden = cfg::u32(p, v); };
          s["tokens"] = [&w](auto& p, auto& v) { w.tokens = cfg::u32(p, v); };
          s["layers"] = [&w](auto& p, auto& v) { w.layers = cfg::u32(p, v); };
          s["ccm_tasks"] = [&w](auto& p, auto& v) { w.ccm_tasks = cfg::u32(p, v); };
          s["host_tasks"] = [&w](auto& p, auto& v) { w.host_tasks = cfg::u32(p, v); };
        }
      },
      params);
  return s;
}

}  // namespace detail

inline ExperimentConfig load_config(const Ini& ini) {
  using detail::Setter;
  for (const auto& [name, _] : ini) {
    static const char* known[] = {"run", "workload", "host", "ccm", "fabric", "ring", "metrics", "sweep"};
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return name == k; }) == std::end(known))
      throw ConfigError(name + ": unknown section");
  }
  auto section = [&ini](const std::string& n) -> const std::vector<IniEntry>& {
    static const std::vector<IniEntry> none;
    auto it = ini.find(n);
    return it == ini.end() ? none : it->second;
  };

  ExperimentConfig c;
  {
    std::string workload;
    std::map<std::string, Setter> s;
    s["workload"] = [&](auto&, auto& v) { workload = v; };
    s["mechanism"] = [&](auto& p, auto& v) {
      c.sys.mechanism = cfg::mechanism(p, v);
      c.mechanism_set = true;
    };
    s["seed"] = [&](auto& p, auto& v) { c.seed = cfg::count(p, v); };
    s["out"] = [&](auto&, auto& v) { c.out_dir = v; };
    s["baseline"] = [&](auto& p, auto& v) { c.baseline = cfg::mechanism(p, v); };
    s["event_cap"] = [&](auto& p, auto& v) { c.sys.event_cap = cfg::count(p, v); };
    detail::apply_section("run", section("run"), s);
    if (workload.empty()) throw ConfigError("run.workload: required");
    auto preset = find_preset(workload);
    if (!preset) throw ConfigError("run.workload: unknown preset '" + workload + "'");
    c.workload = workload;
    c.params = preset->params;
    c.preset_scheduler = preset->scheduler;
  }
  detail::apply_section("workload", section("workload"), detail::workload_setters(c.params));
  {
    auto& h = c.sys.host;
    std::map<std::string, Setter> s;
    s["units"] = [&](auto& p, auto& v) { h.units = cfg::u32(p, v); };
    s["threads_per_unit"] = [&](auto& p, auto& v) { h.threads_per_unit = cfg::u32(p, v); };
    s["freq_hz"] = [&](auto& p, auto& v) { h.freq_hz = cfg::frequency(p, v); };
    s["scheduler"] = [&](auto& p, auto& v) { c.host_scheduler = cfg::scheduler(p, v); };
    s["polling_interval"] = [&](auto& p, auto& v) { h.polling_interval = cfg::polling(p, v); };
    s["rp_interval"] = [&](auto& p, auto& v) { h.rp_interval = cfg::duration(p, v); };
    s["poll_cost_cycles"] = [&](auto& p, auto& v) { h.poll_cost_cycles = cfg::u32(p, v); };
    s["load_outstanding_lines"] = [&](auto& p, auto& v) { h.load_outstanding_lines = cfg::u32(p, v); };
    s["rp_pinned"] = [&](auto& p, auto& v) { h.rp_pinned = cfg::flag(p, v); };
    s["spill_fraction"] = [&](auto& p, auto& v) { h.spill_fraction = cfg::number(p, v); };
    detail::apply_section("host", section("host"), s);
  }
  {
    auto& d = c.sys.ccm;
    std::map<std::string, Setter> s;
    s["units"] = [&](auto& p, auto& v) { d.units = cfg::u32(p, v); };
    s["threads_per_unit"] = [&](auto& p, auto& v) { d.threads_per_unit = cfg::u32(p, v); };
    s["freq_hz"] = [&](auto& p, auto& v) { d.freq_hz = cfg::frequency(p, v); };
    s["sched_overhead"] = [&](auto& p, auto& v) { d.sched_overhead = cfg::duration(p, v); };
    s["scheduler"] = [&](auto& p, auto& v) { c.ccm_scheduler = cfg::scheduler(p, v); };
    s["sf"] = [&](auto& p, auto& v) { d.sf = cfg::u32(p, v); };
    s["ooo"] = [&](auto& p, auto& v) { d.ooo = cfg::flag(p, v); };
    detail::apply_section("ccm", section("ccm"), s);
  }
  {
    auto& f = c.sys.fabric;
    std::map<std::string, Setter> s;
    s["mem_rtt"] = [&](auto& p, auto& v) { f.mem_rtt = cfg::duration(p, v); };
    s["io_rtt"] = [&](auto& p, auto& v) { f.io_rtt = cfg::duration(p, v); };
    s["dma_prep"] = [&](auto& p, auto& v) { f.dma_prep = cfg::duration(p, v); };
    s["interrupt_handling"] = [&](auto& p, auto& v) { f.interrupt_handling = cfg::duration(p, v); };
    s["link_bandwidth"] = [&](auto& p, auto& v) { f.link_bandwidth = cfg::bandwidth(p, v); };
    s["cacheline"] = [&](auto& p, auto& v) { f.cacheline = cfg::u32(p, v); };
    detail::apply_section("fabric", section("fabric"), s);
  }
  {
    auto& r = c.sys.ring;
    std::map<std::string, Setter> s;
    s["capacity"] = [&](auto& p, auto& v) { r.capacity = cfg::u32(p, v); };
    s["slot_size"] = [&](auto& p, auto& v) { r.slot_size = cfg::u32(p, v); };
    detail::apply_section("ring", section("ring"), s);
  }
  {
    std::map<std::string, Setter> s;
    s["stall_average"] = [&](auto& p, auto& v) {
      if (v == "engaged") c.idle.stall_over_all = false;
      else if (v == "all") c.idle.stall_over_all = true;
      else throw ConfigError(p + ": expected engaged or all");
    };
    detail::apply_section("metrics", section("metrics"), s);
  }
  {
    auto& a = c.axes;
    std::map<std::string, Setter> s;
    s["mechanism"] = [&](auto& p, auto& v) {
      for (auto& x : cfg::split_list(v)) a.mechanisms.push_back(cfg::mechanism(p, x));
    };
    s["polling"] = [&](auto& p, auto& v) {
      for (auto& x : cfg::split_list(v)) a.polling.push_back(cfg::polling(p, x));
    };
    s["sf"] = [&](auto& p, auto& v) {
      for (auto& x : cfg::split_list(v)) a.sf.push_back(cfg::u32(p, x));
    };
    s["scheduler"] = [&](auto& p, auto& v) {
      for (auto& x : cfg::split_list(v)) a.scheduler.push_back(cfg::scheduler(p, x));
    };
    s["ooo"] = [&](auto& p, auto& v) {
      for (auto& x : cfg::split_list(v)) a.ooo.push_back(cfg::flag(p, x));
    };
    detail::apply_section("sweep", section("sweep"), s);
  }
  if (const char* env = std::getenv(kSeedEnv)) c.seed = cfg::count(kSeedEnv, env);
  c.resolve_schedulers();
  c.validate();
  return c;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  return load_config(parse_ini(in, path));
}

}  // namespace ccmsim
