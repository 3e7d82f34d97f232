#include <gtest/gtest.h>

#include <cmath>

#include "ccmsim/metrics.hpp"
#include "ccmsim/presets.hpp"

using namespace ccmsim;

namespace {

TraceRecord rec(SimTime at, const char* kind, std::int64_t a = 0, std::int64_t b = 0, std::int64_t c = 0) {
  static std::uint64_t seq = 0;
  return TraceRecord{at, seq++, 0, kind, a, b, c};
}

RunResult run(const std::string& preset, Mechanism m, SimTime polling = 500 * kNanosecond) {
  const auto p = find_preset(preset);
  SystemConfig s;
  s.mechanism = m;
  s.host.polling_interval = polling;
  if (p->scheduler) s.ccm.scheduler = s.host.scheduler = *p->scheduler;
  return run_system(s, build_graph(p->params));
}

double rel(double a, double b) { return std::abs(a - b) / b; }

}  // namespace

TEST(Intervals, MergeAndCover) {
  auto m = merge_intervals({{5, 8}, {0, 2}, {1, 3}, {8, 9}, {4, 4}});
  EXPECT_EQ(m, (std::vector<Interval>{{0, 3}, {5, 9}}));
  EXPECT_EQ(total_length(m), 7);
  EXPECT_EQ(covered(m, 2, 6), 2);
}

TEST(Decompose, EmptyTraceIsAllZero) {
  auto d = decompose({});
  EXPECT_EQ(d.e2e, 0);
  EXPECT_EQ(d.t_c + d.t_d + d.t_h + d.host_idle + d.ccm_idle, 0);
}

TEST(Decompose, SerializedHandTraceSumsExactly) {
  // CCM [0,10), transfer [10,14), host [14,20)
  std::vector<TraceRecord> t = {
      rec(0, "run.begin"),          rec(0, "iter.begin"),        rec(0, "ccm.task.begin", 0, 0),
      rec(10, "ccm.task.end", 0, 0), rec(10, "xfer.begin", 0, 64), rec(14, "xfer.end", 0, 64),
      rec(14, "host.task.begin", 0, 0, 0), rec(20, "host.task.end", 0, 0, 0), rec(20, "run.end")};
  auto d = decompose(t);
  EXPECT_EQ(d.e2e, 20);
  EXPECT_EQ(d.t_c, 10);
  EXPECT_EQ(d.t_d, 4);
  EXPECT_EQ(d.t_h, 6);
  EXPECT_EQ(d.t_c + d.t_d + d.t_h, d.e2e);
  EXPECT_EQ(d.host_idle, d.t_c + d.t_d);
  EXPECT_EQ(d.ccm_idle, d.t_d + d.t_h);
}

TEST(Idle, StallOfEngagedThreads) {
  // thread 0 busy [0,10); thread 1 busy [0,4) and [6,10); e2e 20
  std::vector<TraceRecord> t = {rec(0, "run.begin"),          rec(0, "host.task.begin", 0),
                                rec(0, "host.task.begin", 1), rec(4, "host.task.end", 1),
                                rec(6, "host.task.begin", 1), rec(10, "host.task.end", 0),
                                rec(10, "host.task.end", 1),  rec(20, "run.end")};
  // no-one-busy 10, plus thread 1 stalls 2 inside the union, averaged over 2
  EXPECT_EQ(decompose(t).host_idle, 11);
  IdleOptions all;
  all.stall_over_all = true;
  all.host_threads = 8;  // 2 / 8 rounds away
  EXPECT_EQ(decompose(t, all).host_idle, 10);
}

TEST(Idle, StallIsMeasuredPerIteration) {
  // one thread works early in iteration 0, another late in iteration 1; the
  // gap between iterations is not a per-thread stall
  std::vector<TraceRecord> t = {rec(0, "run.begin"),        rec(0, "iter.begin", 0),
                                rec(0, "ccm.task.begin", 0), rec(5, "ccm.task.end", 0),
                                rec(10, "iter.begin", 1),    rec(10, "ccm.task.begin", 0),
                                rec(15, "ccm.task.end", 0),  rec(20, "run.end")};
  EXPECT_EQ(decompose(t).ccm_idle, 10);
}

TEST(Decompose, BsRunMatchesSerializedIdentity) {
  for (const char* p : {"pagerank-fig4", "ssb-q1_2", "knn-d512-r512"}) {
    auto r = run(p, Mechanism::BS);
    auto d = decompose(r.trace);
    EXPECT_LT(rel(static_cast<double>(d.t_c + d.t_d + d.t_h), static_cast<double>(d.e2e)), 0.01) << p;
    EXPECT_LT(rel(static_cast<double>(d.host_idle), static_cast<double>(d.t_c + d.t_d)), 0.05) << p;
    EXPECT_LT(rel(static_cast<double>(d.ccm_idle), static_cast<double>(d.t_d + d.t_h)), 0.05) << p;
  }
}

TEST(Decompose, KaiOverlapExceedsEndToEnd) {
  auto r = run("knn-d512-r512", Mechanism::KAI);
  auto d = decompose(r.trace);
  EXPECT_GT(d.t_c + d.t_d + d.t_h, d.e2e);
}

TEST(Idle, KaiCutsCcmIdleOnCcmHeavyKernel) {
  auto bs = decompose(run("knn-d2048-r128", Mechanism::BS).trace);
  auto kai = decompose(run("knn-d2048-r128", Mechanism::KAI).trace);
  EXPECT_LT(kai.ccm_idle * 2, bs.ccm_idle);
}

TEST(RingTrace, CleanOnRealRuns) {
  for (const char* p : {"knn-d512-r512", "sssp"}) {
    auto r = run(p, Mechanism::KAI);
    EXPECT_TRUE(check_ring_trace(r.trace, 1024).empty()) << p;
  }
}

TEST(RingTrace, FlagsEachKindOfBreach) {
  {
    std::vector<TraceRecord> t = {rec(0, "ring.reserve", 3, 3, 3)};
    EXPECT_FALSE(check_ring_trace(t, 2).empty());  // reservation beyond the device view
  }
  {
    std::vector<TraceRecord> t = {rec(0, "ring.reserve", 2, 2, 2), rec(1, "ring.commit", 2, 2, 2),
                                  rec(2, "ring.head", 2, 2), rec(3, "ring.head", 1, 1)};
    EXPECT_FALSE(check_ring_trace(t, 4).empty());  // head backwards
  }
  {
    std::vector<TraceRecord> t = {rec(0, "ring.fc", 1, 1)};
    EXPECT_FALSE(check_ring_trace(t, 4).empty());  // device view ahead of host
  }
  {
    std::vector<TraceRecord> t = {rec(0, "ring.commit", 1, 1, 1)};
    EXPECT_FALSE(check_ring_trace(t, 4).empty());  // commit without reservation
  }
  {
    std::vector<TraceRecord> t = {rec(0, "ring.reserve", 2, 2, 2), rec(1, "ring.commit", 2, 2, 2),
                                  rec(2, "ring.head", 2, 2), rec(3, "ring.fc", 2, 2)};
    EXPECT_TRUE(check_ring_trace(t, 2).empty());
  }
}

TEST(Csv, LineFormat) {
  ResultRow r;
  r.run_id = "r000";
  r.mechanism = "kai";
  r.workload = "w";
  r.polling = "50000";
  r.sf = 2;
  r.scheduler = "rr";
  r.ooo = false;
  r.d.e2e = 10;
  r.norm_vs_baseline = 0.5;
  EXPECT_EQ(csv_line(r), "r000,kai,w,50000,2,rr,off,10,0,0,0,0,0,0.500000");
}
