#include <gtest/gtest.h>

#include "ccmsim/presets.hpp"
#include "ccmsim/workload.hpp"

using namespace ccmsim;

namespace {

std::uint64_t host_dep_bytes(const OffloadIteration& it) {
  std::uint64_t s = 0;
  for (const auto& h : it.host_tasks) s += h.dep_end - h.dep_begin;
  return s;
}

}  // namespace

TEST(Cost, CycleConversionRoundsToPicoseconds) {
  CostModel c;
  c.ccm_cycles_per_elem = 1;
  c.host_cycles_per_item = 1;
  EXPECT_EQ(c.ccm_compute(1), 500);
  EXPECT_EQ(c.host_compute(1), 333);
  EXPECT_EQ(c.host_compute(3), 1000);
}

TEST(Knn, ResultSizes) {
  KnnParams a;
  a.dim = 2048;
  a.rows = 128;
  EXPECT_EQ(gen_knn(a).iterations[0].kernel.result_bytes_total, 512u);
  KnnParams b;
  b.dim = 512;
  b.rows = 512;
  EXPECT_EQ(gen_knn(b).iterations[0].kernel.result_bytes_total, 2048u);
}

TEST(Knn, MinimalCase) {
  KnnParams p;
  p.dim = 16;
  p.rows = 1;
  p.k = 1;
  auto g = gen_knn(p);
  ASSERT_EQ(g.iterations.size(), 1u);
  const auto& it = g.iterations[0];
  ASSERT_EQ(it.kernel.tasks.size(), 1u);
  EXPECT_EQ(it.kernel.tasks[0].result_bytes, 4u);
  EXPECT_EQ(it.host_tasks.size(), 1u);
  EXPECT_NO_THROW(validate(g));
}

TEST(Knn, HostChainAndCoverage) {
  KnnParams p;
  p.dim = 512;
  p.rows = 512;
  p.host_rows_per_task = 64;
  auto g = gen_knn(p);
  const auto& it = g.iterations[0];
  EXPECT_EQ(it.host_tasks.size(), 8u);
  EXPECT_EQ(host_dep_bytes(it), 2048u);
  EXPECT_FALSE(it.host_tasks[0].after);
  for (std::size_t i = 1; i < it.host_tasks.size(); ++i) EXPECT_EQ(*it.host_tasks[i].after, i - 1);
  p.host_chain = false;
  for (const auto& h : gen_knn(p).iterations[0].host_tasks) EXPECT_FALSE(h.after);
}

TEST(Knn, InvalidInputs) {
  KnnParams p;
  p.k = p.rows + 1;
  EXPECT_THROW(gen_knn(p), std::invalid_argument);
  p = KnnParams{};
  p.cost.host_cycles_per_item = 0;
  EXPECT_THROW(gen_knn(p), std::invalid_argument);
}

TEST(Graph, FullActivityStreamsFourBytesPerVertex) {
  GraphParams p;
  p.n_v = 1000;
  p.n_e = 3000;
  p.iterations = 1;
  auto g = gen_graph(p);
  EXPECT_EQ(g.iterations[0].kernel.result_bytes_total, 4000u);
  EXPECT_TRUE(g.cross_iteration_dependency);
  EXPECT_NO_THROW(validate(g));
}

TEST(Graph, SeededScheduleIsReproducible) {
  auto p = std::get<GraphParams>(find_preset("sssp")->params);
  auto a = gen_graph(p), b = gen_graph(p);
  ASSERT_EQ(a.iterations.size(), b.iterations.size());
  for (std::size_t i = 0; i < a.iterations.size(); ++i)
    EXPECT_EQ(a.iterations[i].kernel.result_bytes_total, b.iterations[i].kernel.result_bytes_total);
  p.seed += 1;
  auto c = gen_graph(p);
  bool differs = false;
  for (std::size_t i = 0; i < a.iterations.size(); ++i)
    differs = differs || a.iterations[i].kernel.result_bytes_total != c.iterations[i].kernel.result_bytes_total;
  EXPECT_TRUE(differs);
}

TEST(Graph, SkewDelaysTheLowPartitions) {
  auto p = std::get<GraphParams>(find_preset("sssp")->params);
  auto g = gen_graph(p);
  const auto& tasks = g.iterations[0].kernel.tasks;
  const std::size_t late = static_cast<std::size_t>(p.skew_fraction * tasks.size() + 0.5);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (i < late) {
      EXPECT_GT(tasks[i].ready_ps, 0);
    } else {
      EXPECT_EQ(tasks[i].ready_ps, 0);
    }
  }
}

TEST(Olap, SelectivityBounds) {
  OlapParams p;
  p.rows = 4096;
  p.ccm_tasks = 16;
  p.selectivity = 0;
  auto lo = gen_olap(p);
  EXPECT_EQ(lo.iterations[0].kernel.result_bytes_total, 16u);  // one summary byte per partition
  p.selectivity = 1;
  auto hi = gen_olap(p);
  EXPECT_EQ(hi.iterations[0].kernel.result_bytes_total, 4u * 4096);
  EXPECT_NO_THROW(validate(lo));
  EXPECT_NO_THROW(validate(hi));
  p.selectivity = 1.5;
  EXPECT_THROW(gen_olap(p), std::invalid_argument);
}

TEST(Llm, HourglassShape) {
  LlmParams p;
  auto g = gen_llm_attention(p);
  EXPECT_EQ(g.iterations.size(), p.layers);
  for (const auto& it : g.iterations) {
    EXPECT_EQ(it.kernel.result_bytes_total, 4u * p.hidden);
    EXPECT_EQ(it.kernel.tasks.size(), p.ccm_tasks);
    EXPECT_EQ(it.host_tasks.size(), p.host_tasks);
    EXPECT_LT(it.host_tasks.size(), it.kernel.tasks.size());
  }
  p.tokens = 1;
  EXPECT_NO_THROW(validate(gen_llm_attention(p)));
}

TEST(Presets, AllBuildValidGraphsThatCoverTheirResults) {
  for (const auto& pr : presets()) {
    auto g = build_graph(pr.params);
    EXPECT_NO_THROW(validate(g)) << pr.name;
    for (const auto& it : g.iterations) {
      // every result byte is read by exactly one host task
      std::uint64_t next = 0;
      for (const auto& h : it.host_tasks) {
        EXPECT_EQ(h.dep_begin, next) << pr.name;
        next = h.dep_end;
      }
      EXPECT_EQ(next, it.kernel.result_bytes_total) << pr.name;
    }
  }
  EXPECT_FALSE(find_preset("nope"));
  EXPECT_EQ(preset_names().size(), presets().size());
}

TEST(Validate, RejectsMalformedGraphs) {
  KnnParams p;
  auto g = gen_knn(p);
  auto bad = g;
  bad.iterations[0].kernel.tasks.clear();
  EXPECT_THROW(validate(bad), std::invalid_argument);
  bad = g;
  bad.iterations[0].kernel.tasks[1].offset += 1;
  EXPECT_THROW(validate(bad), std::invalid_argument);
  bad = g;
  bad.iterations[0].host_tasks[0].dep_end = bad.iterations[0].kernel.result_bytes_total + 1;
  EXPECT_THROW(validate(bad), std::invalid_argument);
  bad = g;
  bad.iterations.clear();
  EXPECT_THROW(validate(bad), std::invalid_argument);
}
