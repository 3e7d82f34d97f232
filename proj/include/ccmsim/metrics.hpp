#pragma once

// Everything here is rebuilt from the run trace, never from simulator state.

#include <algorithm>
#include <climits>
#include <cstdint>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ccmsim/sim_core.hpp"
#include "ccmsim/system.hpp"

namespace ccmsim {

using Interval = std::pair<SimTime, SimTime>;

inline std::vector<Interval> merge_intervals(std::vector<Interval> v) {
  std::sort(v.begin(), v.end());
  std::vector<Interval> out;
  for (const auto& iv : v) {
    if (iv.second <= iv.first) continue;
    if (!out.empty() && iv.first <= out.back().second)
      out.back().second = std::max(out.back().second, iv.second);
    else
      out.push_back(iv);
  }
  return out;
}

inline SimTime total_length(const std::vector<Interval>& merged) {
  SimTime t = 0;
  for (const auto& iv : merged) t += iv.second - iv.first;
  return t;
}

// Length of [lo, hi) covered by a merged interval list.
inline SimTime covered(const std::vector<Interval>& merged, SimTime lo, SimTime hi) {
  SimTime t = 0;
  for (const auto& iv : merged) {
    const SimTime a = std::max(lo, iv.first), b = std::min(hi, iv.second);
    if (b > a) t += b - a;
  }
  return t;
}

struct SideActivity {
  std::vector<Interval> intervals;                       // every task execution
  std::map<std::int64_t, std::vector<Interval>> by_thread;
};

struct Decomposition {
  SimTime e2e = 0;
  SimTime t_c = 0;
  SimTime t_d = 0;
  SimTime t_h = 0;
  SimTime host_idle = 0;
  SimTime ccm_idle = 0;

  double ratio(SimTime x) const { return e2e > 0 ? static_cast<double>(x) / static_cast<double>(e2e) : 0.0; }
};

namespace detail {

inline SideActivity collect_side(const std::vector<TraceRecord>& trace, const std::string& begin,
                                 const std::string& end) {
  SideActivity s;
  std::map<std::int64_t, SimTime> open;
  for (const auto& r : trace) {
    if (r.kind == begin) {
      open[r.a] = r.fire_at;
    } else if (r.kind == end) {
      auto it = open.find(r.a);
      if (it == open.end()) throw SimulationError("trace: task end without begin on thread " + std::to_string(r.a));
      s.intervals.emplace_back(it->second, r.fire_at);
      s.by_thread[r.a].emplace_back(it->second, r.fire_at);
      open.erase(it);
    }
  }
  if (!open.empty()) throw SimulationError("trace: task left open at end of run");
  return s;
}

// Idle time of one side: wall time with none of its µthreads busy, plus the
// stall of engaged µthreads while the side as a whole is working. Stall is
// taken per iteration segment and averaged over the µthreads engaged in it
// (or over all `threads` when given).
inline SimTime side_idle(const SideActivity& s, SimTime e2e, const std::vector<SimTime>& cuts,
                         std::uint32_t threads = 0) {
  const auto uni = merge_intervals(s.intervals);
  const SimTime busy_union = total_length(uni);
  double stall = 0;
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    const SimTime lo = cuts[k];
    const SimTime hi = k + 1 < cuts.size() ? cuts[k + 1] : INT64_MAX;
    double seg = 0;
    std::size_t engaged = 0;
    for (const auto& [th, ivs] : s.by_thread) {
      SimTime w0 = INT64_MAX, w1 = INT64_MIN, busy = 0;
      for (const auto& iv : ivs) {
        const SimTime a = std::max(lo, iv.first), b = std::min(hi, iv.second);
        if (b <= a) continue;
        w0 = std::min(w0, a);
        w1 = std::max(w1, b);
        busy += b - a;
      }
      if (w1 <= w0) continue;
      ++engaged;
      seg += static_cast<double>(covered(uni, w0, w1) - busy);
    }
    const std::size_t denom = threads ? threads : engaged;
    if (denom) stall += seg / static_cast<double>(denom);
  }
  return (e2e - busy_union) + static_cast<SimTime>(stall + 0.5);
}

// Start of every offload iteration; the first cut is the run start.
inline std::vector<SimTime> iteration_cuts(const std::vector<TraceRecord>& trace) {
  std::vector<SimTime> cuts;
  for (const auto& r : trace)
    if (r.kind == "iter.begin") cuts.push_back(r.fire_at);
  if (cuts.empty()) cuts.push_back(0);
  return cuts;
}

}  // namespace detail

// Zero for an empty trace.
inline SimTime trace_e2e(const std::vector<TraceRecord>& trace) {
  if (trace.empty()) return 0;
  SimTime begin = 0, end = -1;
  for (const auto& r : trace) {
    if (r.kind == "run.begin") begin = r.fire_at;
    if (r.kind == "run.end") end = r.fire_at;
  }
  if (end < 0) throw SimulationError("trace: no run.end record");
  return end - begin;
}

inline std::vector<Interval> transfer_intervals(const std::vector<TraceRecord>& trace) {
  std::map<std::pair<ActorId, std::int64_t>, SimTime> open;
  std::vector<Interval> out;
  for (const auto& r : trace) {
    if (r.kind == "xfer.begin") {
      open[{r.target, r.a}] = r.fire_at;
    } else if (r.kind == "xfer.end") {
      auto it = open.find({r.target, r.a});
      if (it == open.end()) throw SimulationError("trace: transfer end without begin");
      out.emplace_back(it->second, r.fire_at);
      open.erase(it);
    }
  }
  return out;
}

// `stall_over_all` switches the stall average from engaged µthreads to every
// µthread of the side (needs the thread counts).
struct IdleOptions {
  bool stall_over_all = false;
  std::uint32_t host_threads = 0;
  std::uint32_t ccm_threads = 0;
};

inline Decomposition decompose(const std::vector<TraceRecord>& trace, const IdleOptions& opt = {}) {
  Decomposition d;
  d.e2e = trace_e2e(trace);
  const auto ccm = detail::collect_side(trace, "ccm.task.begin", "ccm.task.end");
  const auto host = detail::collect_side(trace, "host.task.begin", "host.task.end");
  d.t_c = total_length(merge_intervals(ccm.intervals));
  d.t_h = total_length(merge_intervals(host.intervals));
  d.t_d = total_length(merge_intervals(transfer_intervals(trace)));
  const auto cuts = detail::iteration_cuts(trace);
  d.ccm_idle = detail::side_idle(ccm, d.e2e, cuts, opt.stall_over_all ? opt.ccm_threads : 0);
  d.host_idle = detail::side_idle(host, d.e2e, cuts, opt.stall_over_all ? opt.host_threads : 0);
  return d;
}

// Replays the ring bookkeeping recorded in the trace and reports any breach:
// a reservation beyond the device's view of the heads, a commit beyond the true
// heads, or a head or tail moving backwards.
inline std::vector<std::string> check_ring_trace(const std::vector<TraceRecord>& trace, std::uint32_t capacity) {
  std::vector<std::string> bad;
  std::int64_t view_ph = 0, view_mh = 0, host_ph = 0, host_mh = 0, res_pt = 0, res_mt = 0, pt = 0, mt = 0;
  auto at = [](const TraceRecord& r) { return " at t=" + std::to_string(r.fire_at) + " ps"; };
  for (const auto& r : trace) {
    if (r.kind == "ring.reserve") {
      if (r.a < res_pt || r.b < res_mt) bad.push_back("reservation tail moved backwards" + at(r));
      res_pt = r.a;
      res_mt = r.b;
      if (res_pt - view_ph > capacity || res_mt - view_mh > capacity)
        bad.push_back("reservation exceeds device view of free space" + at(r));
    } else if (r.kind == "ring.fc") {
      if (r.a < view_ph || r.b < view_mh) bad.push_back("device head view moved backwards" + at(r));
      view_ph = r.a;
      view_mh = r.b;
      if (view_ph > host_ph || view_mh > host_mh) bad.push_back("device head view ahead of host heads" + at(r));
    } else if (r.kind == "ring.head") {
      if (r.a < host_ph || r.b < host_mh) bad.push_back("host head moved backwards" + at(r));
      host_ph = r.a;
      host_mh = r.b;
      if (host_ph > pt || host_mh > mt) bad.push_back("host head passed the tail" + at(r));
    } else if (r.kind == "ring.commit") {
      if (r.a < pt || r.b < mt) bad.push_back("tail moved backwards" + at(r));
      pt = r.a;
      mt = r.b;
      if (pt - host_ph > capacity || mt - host_mh > capacity) bad.push_back("commit overwrote live slots" + at(r));
      if (pt > res_pt || mt > res_mt) bad.push_back("commit of unreserved slots" + at(r));
    }
  }
  return bad;
}

// ---- report rows ----------------------------------------------------------

struct ResultRow {
  std::string run_id;
  std::string mechanism;
  std::string workload;
  std::string polling;  // "n/a" where it does not apply
  std::uint32_t sf = 1;
  std::string scheduler;
  bool ooo = true;
  Decomposition d;
  double norm_vs_baseline = 1.0;
};

inline const char* kCsvHeader =
    "run_id,mechanism,workload,polling_ps,sf,scheduler,ooo,e2e_ps,t_c_ps,t_d_ps,t_h_ps,host_idle_ps,ccm_idle_ps,"
    "norm_vs_baseline";

inline std::string csv_line(const ResultRow& r) {
  std::ostringstream os;
  os << r.run_id << ',' << r.mechanism << ',' << r.workload << ',' << r.polling << ',' << r.sf << ','
     << r.scheduler << ',' << (r.ooo ? "on" : "off") << ',' << r.d.e2e << ',' << r.d.t_c << ',' << r.d.t_d << ','
     << r.d.t_h << ',' << r.d.host_idle << ',' << r.d.ccm_idle << ',' << std::fixed << std::setprecision(6)
     << r.norm_vs_baseline;
  return os.str();
}

}  // namespace ccmsim
