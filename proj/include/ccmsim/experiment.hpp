#pragma once

// Turns an ExperimentConfig into runs and report rows.

#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccmsim/config.hpp"
#include "ccmsim/metrics.hpp"
#include "ccmsim/system.hpp"

namespace ccmsim {

struct RunPoint {
  SystemConfig sys;
  std::string run_id;
};

// Cartesian product of the sweep axes, mechanism outermost. Axes left empty
// keep the single value from the rest of the config.
inline std::vector<RunPoint> expand_sweep(const ExperimentConfig& c) {
  const auto& a = c.axes;
  const std::vector<Mechanism> mechs = a.mechanisms.empty() ? std::vector<Mechanism>{c.sys.mechanism} : a.mechanisms;
  const std::vector<SimTime> polls = a.polling.empty() ? std::vector<SimTime>{c.sys.host.polling_interval} : a.polling;
  const std::vector<std::uint32_t> sfs = a.sf.empty() ? std::vector<std::uint32_t>{c.sys.ccm.sf} : a.sf;
  const std::vector<bool> ooos = a.ooo.empty() ? std::vector<bool>{c.sys.ccm.ooo} : a.ooo;
  std::vector<RunPoint> out;
  for (auto m : mechs)
    for (auto p : polls)
      for (auto sf : sfs)
        for (std::size_t si = 0; si < std::max<std::size_t>(1, a.scheduler.size()); ++si)
          for (bool ooo : ooos) {
            RunPoint rp;
            rp.sys = c.sys;
            rp.sys.mechanism = m;
            rp.sys.host.polling_interval = p;
            rp.sys.ccm.sf = sf;
            rp.sys.ccm.ooo = ooo;
            if (!a.scheduler.empty()) rp.sys.ccm.scheduler = rp.sys.host.scheduler = a.scheduler[si];
            char id[16];
            std::snprintf(id, sizeof id, "r%03zu", out.size());
            rp.run_id = id;
            out.push_back(std::move(rp));
          }
  return out;
}

inline ResultRow make_row(const std::string& run_id, const std::string& workload, const SystemConfig& s,
                          const Decomposition& d) {
  ResultRow r;
  r.run_id = run_id;
  r.mechanism = to_string(s.mechanism);
  r.workload = workload;
  r.polling = s.mechanism == Mechanism::KAI ? std::to_string(s.host.polling_interval) : "n/a";
  r.sf = s.ccm.sf;
  r.scheduler = s.ccm.scheduler == s.host.scheduler
                    ? std::string(to_string(s.ccm.scheduler))
                    : std::string(to_string(s.ccm.scheduler)) + "/" + to_string(s.host.scheduler);
  r.ooo = s.ccm.ooo;
  r.d = d;
  return r;
}

inline Decomposition decompose_run(const RunResult& run, const IdleOptions& idle) {
  IdleOptions o = idle;
  o.host_threads = run.host_threads;
  o.ccm_threads = run.ccm_threads;
  return decompose(run.trace, o);
}

using RunObserver = std::function<void(const RunPoint&, const RunResult&)>;

// Runs every sweep point into `rows`. Rows are normalized to the first point
// using the baseline mechanism; when the sweep has none, one extra baseline
// run is made with the first value of every other axis (it is not reported).
// On failure `rows` keeps what finished before the exception propagates.
// Every streaming run has its ring bookkeeping replayed from the trace.
inline void run_experiment(const ExperimentConfig& c, std::vector<ResultRow>& rows,
                           const RunObserver& observe = {}) {
  const TaskGraph g = c.graph();
  const auto points = expand_sweep(c);
  rows.clear();
  SimTime base = -1;
  auto normalize = [&] {
    for (auto& r : rows)
      r.norm_vs_baseline = base > 0 ? static_cast<double>(r.d.e2e) / static_cast<double>(base) : 0.0;
  };
  try {
    for (const auto& p : points) {
      const RunResult run = run_system(p.sys, g);
      if (is_streaming(p.sys.mechanism)) {
        const auto bad = check_ring_trace(run.trace, p.sys.ring.capacity);
        if (!bad.empty()) throw InvariantViolation(p.run_id + ": " + bad.front());
      }
      if (observe) observe(p, run);
      rows.push_back(make_row(p.run_id, c.workload, p.sys, decompose_run(run, c.idle)));
      if (base < 0 && p.sys.mechanism == c.baseline) base = run.e2e;
    }
    if (base < 0) {
      SystemConfig s = points.front().sys;
      s.mechanism = c.baseline;
      base = run_system(s, g).e2e;
    }
  } catch (...) {
    normalize();
    throw;
  }
  normalize();
}

inline std::vector<ResultRow> run_experiment(const ExperimentConfig& c, const RunObserver& observe = {}) {
  std::vector<ResultRow> rows;
  run_experiment(c, rows, observe);
  return rows;
}

inline void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) os << csv_line(r) << '\n';
}

inline nlohmann::ordered_json row_json(const ResultRow& r) {
  nlohmann::ordered_json j;
  j["run_id"] = r.run_id;
  j["mechanism"] = r.mechanism;
  j["workload"] = r.workload;
  j["polling_ps"] = r.polling;
  j["sf"] = r.sf;
  j["scheduler"] = r.scheduler;
  j["ooo"] = r.ooo;
  j["e2e_ps"] = r.d.e2e;
  j["t_c_ps"] = r.d.t_c;
  j["t_d_ps"] = r.d.t_d;
  j["t_h_ps"] = r.d.t_h;
  j["host_idle_ps"] = r.d.host_idle;
  j["ccm_idle_ps"] = r.d.ccm_idle;
  j["norm_vs_baseline"] = r.norm_vs_baseline;
  return j;
}

// One series per mechanism, in order of first appearance.
inline void write_json(std::ostream& os, const std::vector<ResultRow>& rows) {
  nlohmann::ordered_json j;
  j["series"] = nlohmann::ordered_json::object();
  for (const auto& r : rows) j["series"][r.mechanism].push_back(row_json(r));
  os << j.dump(2) << '\n';
}

inline void write_trace(std::ostream& os, const RunResult& run) {
  os << "fire_at_ps,seq,actor,kind,a,b,c\n";
  for (const auto& r : run.trace) {
    const std::string actor = r.target < run.actors.size() ? run.actors[r.target] : std::to_string(r.target);
    os << r.fire_at << ',' << r.seq << ',' << actor << ',' << r.kind << ',' << r.a << ',' << r.b << ',' << r.c
       << '\n';
  }
}

}  // namespace ccmsim
