#pragma once

// Abstract task graphs for the four offload domains.
//
// A kernel's result is a byte space [0, result_bytes_total). Each CCM task
// produces one contiguous range of it; each host task reads one contiguous
// range (its dependency set) and may additionally be chained after one
// earlier host task of the same iteration (running reductions such as a
// streaming top-k). Durations come from a CostModel; nothing is computed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccmsim/sim_core.hpp"

namespace ccmsim {

struct CcmTask {
  std::uint64_t offset = 0;        // first result byte
  std::uint32_t result_bytes = 1;  // bytes produced
  SimTime compute_ps = 1;          // time on one µthread after its data arrives
  SimTime mem_ps = 0;              // occupancy of the shared device memory pipe
  SimTime ready_ps = 0;            // input availability, relative to launch
};

struct HostTask {
  std::uint32_t id = 0;
  std::uint64_t dep_begin = 0;  // result byte range this task reads
  std::uint64_t dep_end = 0;
  SimTime compute_ps = 1;
  std::optional<std::uint32_t> after;  // host task that must finish first
};

struct KernelDescriptor {
  std::uint32_t kernel_id = 0;
  std::vector<CcmTask> tasks;
  std::uint64_t result_bytes_total = 0;
};

struct OffloadIteration {
  KernelDescriptor kernel;
  std::vector<HostTask> host_tasks;
};

struct TaskGraph {
  std::string name;
  std::vector<OffloadIteration> iterations;
  bool cross_iteration_dependency = true;
};

inline void validate(const TaskGraph& g) {
  if (g.iterations.empty()) throw std::invalid_argument(g.name + ": no iterations");
  for (const auto& it : g.iterations) {
    const auto& k = it.kernel;
    if (k.tasks.empty()) throw std::invalid_argument(g.name + ": kernel " + std::to_string(k.kernel_id) + " has no tasks");
    std::uint64_t sum = 0, next = 0;
    for (const auto& t : k.tasks) {
      if (t.compute_ps <= 0 || t.result_bytes < 1 || t.mem_ps < 0 || t.ready_ps < 0)
        throw std::invalid_argument(g.name + ": malformed CCM task");
      if (t.offset != next) throw std::invalid_argument(g.name + ": CCM task ranges must tile the result space");
      next += t.result_bytes;
      sum += t.result_bytes;
    }
    if (sum != k.result_bytes_total) throw std::invalid_argument(g.name + ": result byte accounting mismatch");
    for (std::size_t i = 0; i < it.host_tasks.size(); ++i) {
      const auto& h = it.host_tasks[i];
      if (h.id != i) throw std::invalid_argument(g.name + ": host task ids must be dense");
      if (h.dep_begin >= h.dep_end || h.dep_end > k.result_bytes_total)
        throw std::invalid_argument(g.name + ": host task dependency outside the result space");
      if (h.compute_ps <= 0) throw std::invalid_argument(g.name + ": host task compute must be > 0");
      if (h.after && *h.after >= h.id) throw std::invalid_argument(g.name + ": host chain must point backwards");
    }
  }
}

// Per-domain cost constants. Cycles are converted at the owning side's clock.
struct CostModel {
  double ccm_freq_hz = 2e9;
  double host_freq_hz = 3e9;
  double ccm_cycles_per_elem = 1.0;   // CCM compute per input element
  double ccm_mem_ps_per_elem = 1.0;   // device memory pipe time per input element
  double host_cycles_per_item = 1.0;  // host compute per result item

  SimTime ccm_compute(double elems) const {
    return std::max<SimTime>(1, static_cast<SimTime>(std::llround(elems * ccm_cycles_per_elem * 1e12 / ccm_freq_hz)));
  }
  SimTime ccm_mem(double elems) const { return static_cast<SimTime>(std::llround(elems * ccm_mem_ps_per_elem)); }
  SimTime host_compute(double items) const {
    return std::max<SimTime>(1, static_cast<SimTime>(std::llround(items * host_cycles_per_item * 1e12 / host_freq_hz)));
  }

  void validate() const {
    if (!(ccm_freq_hz > 0 && host_freq_hz > 0 && ccm_cycles_per_elem > 0 && host_cycles_per_item > 0 &&
          ccm_mem_ps_per_elem >= 0))
      throw std::invalid_argument("cost model constants must be > 0");
  }
};

// Splits [0, total) into `parts` near-equal contiguous ranges.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> split_range(std::uint64_t total, std::uint64_t parts) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  parts = std::max<std::uint64_t>(1, std::min(parts, total));
  for (std::uint64_t i = 0; i < parts; ++i) out.emplace_back(total * i / parts, total * (i + 1) / parts);
  return out;
}

// ---------------------------------------------------------------- KNN

struct KnnParams {
  std::uint32_t dim = 2048;
  std::uint32_t rows = 128;
  std::uint32_t k = 10;
  std::uint32_t rows_per_task = 0;       // 0: ceil(rows / ccm_threads)
  std::uint32_t ccm_threads = 256;
  std::uint32_t host_rows_per_task = 64;  // 8 payload slots of 4-byte distances
  bool host_chain = true;                 // running top-k merges in order
  CostModel cost;
};

// Distance computation offloaded, 4 bytes per row streamed back, top-k on the host.
inline TaskGraph gen_knn(const KnnParams& p) {
  if (p.dim < 1 || p.rows < 1 || p.k < 1 || p.k > p.rows) throw std::invalid_argument("knn: invalid dimensions");
  p.cost.validate();
  const std::uint32_t rpt =
      p.rows_per_task ? p.rows_per_task : std::max<std::uint32_t>(1, (p.rows + p.ccm_threads - 1) / p.ccm_threads);
  TaskGraph g;
  g.name = "knn-d" + std::to_string(p.dim) + "-r" + std::to_string(p.rows);
  g.cross_iteration_dependency = false;
  OffloadIteration it;
  it.kernel.result_bytes_total = 4ULL * p.rows;
  for (std::uint32_t r = 0; r < p.rows; r += rpt) {
    const std::uint32_t n = std::min(rpt, p.rows - r);
    const double elems = static_cast<double>(n) * p.dim;
    it.kernel.tasks.push_back(CcmTask{4ULL * r, 4 * n, p.cost.ccm_compute(elems), p.cost.ccm_mem(elems), 0});
  }
  const std::uint32_t hrpt = std::max<std::uint32_t>(1, p.host_rows_per_task);
  for (std::uint32_t r = 0, id = 0; r < p.rows; r += hrpt, ++id) {
    const std::uint32_t n = std::min(hrpt, p.rows - r);
    HostTask h{id, 4ULL * r, 4ULL * (r + n), p.cost.host_compute(n + std::log2(static_cast<double>(p.k) + 1)), {}};
    if (p.host_chain && id > 0) h.after = id - 1;
    it.host_tasks.push_back(h);
  }
  g.iterations.push_back(std::move(it));
  return g;
}

// -------------------------------------------------------------- graphs

enum class GraphKind { SSSP, PageRank };

struct GraphParams {
  GraphKind kind = GraphKind::PageRank;
  std::uint64_t n_v = 299067;
  std::uint64_t n_e = 977676;
  std::uint32_t iterations = 3;
  std::uint32_t ccm_tasks = 256;
  std::uint32_t host_tasks = 256;
  // Active-vertex fraction per iteration drawn uniformly from [min, max].
  double active_min = 1.0;
  double active_max = 1.0;
  // Readiness skew: the first `skew_fraction` of partitions (lowest offsets)
  // get their inputs late, after `skew_delay` times the iteration's total
  // device memory time.
  double skew_fraction = 0.0;
  double skew_delay = 0.0;
  std::uint64_t seed = 1;
  CostModel cost;
};

// Edge traversal and vertex update offloaded; each iteration streams 4 bytes
// per touched vertex and the host derives the next frontier / ranks.
inline TaskGraph gen_graph(const GraphParams& p) {
  if (p.n_v < 1 || p.n_e < 1 || p.iterations < 1) throw std::invalid_argument("graph: sizes must be >= 1");
  p.cost.validate();
  TaskGraph g;
  g.name = p.kind == GraphKind::SSSP ? "sssp" : "pagerank";
  g.cross_iteration_dependency = true;
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> frac(p.active_min, p.active_max);
  for (std::uint32_t i = 0; i < p.iterations; ++i) {
    const double f = p.active_min == p.active_max ? p.active_min : frac(rng);
    const std::uint64_t active = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(f * p.n_v)));
    const double edges_per_vertex = static_cast<double>(p.n_e) / static_cast<double>(p.n_v);
    OffloadIteration it;
    it.kernel.kernel_id = i;
    it.kernel.result_bytes_total = 4 * active;
    const auto parts = split_range(active, p.ccm_tasks);
    const auto skewed = static_cast<std::size_t>(std::llround(p.skew_fraction * parts.size()));
    const SimTime late = static_cast<SimTime>(p.skew_delay * static_cast<double>(p.cost.ccm_mem(
                                                                 static_cast<double>(active) * (1.0 + edges_per_vertex))));
    for (std::size_t t = 0; t < parts.size(); ++t) {
      const auto [b, e] = parts[t];
      const double elems = static_cast<double>(e - b) * (1.0 + edges_per_vertex);
      const SimTime ready = t < skewed ? late : 0;
      it.kernel.tasks.push_back(CcmTask{4 * b, static_cast<std::uint32_t>(4 * (e - b)), p.cost.ccm_compute(elems),
                                        p.cost.ccm_mem(elems), ready});
    }
    const auto hparts = split_range(active, p.host_tasks);
    for (std::size_t t = 0; t < hparts.size(); ++t) {
      const auto [b, e] = hparts[t];
      it.host_tasks.push_back(
          HostTask{static_cast<std::uint32_t>(t), 4 * b, 4 * e, p.cost.host_compute(static_cast<double>(e - b)), {}});
    }
    g.iterations.push_back(std::move(it));
  }
  return g;
}

// ---------------------------------------------------------------- OLAP

enum class SsbQuery { Q1_1, Q1_2 };

struct OlapParams {
  SsbQuery query = SsbQuery::Q1_1;
  std::uint64_t rows = 1 << 20;    // lineorder rows scanned
  double selectivity = 0.02;       // fraction of rows qualifying
  std::uint32_t ccm_tasks = 256;
  std::uint32_t host_tasks = 512;
  CostModel cost;
};

// Filtering offloaded; qualifying row values (4 bytes each) stream back and the
// host aggregates them.
inline TaskGraph gen_olap(const OlapParams& p) {
  if (p.selectivity < 0 || p.selectivity > 1) throw std::invalid_argument("olap: selectivity must be in [0, 1]");
  p.cost.validate();
  TaskGraph g;
  g.name = p.query == SsbQuery::Q1_1 ? "ssb-q1_1" : "ssb-q1_2";
  g.cross_iteration_dependency = false;
  OffloadIteration it;
  const auto parts = split_range(p.rows, p.ccm_tasks);
  std::uint64_t offset = 0;
  for (const auto& [b, e] : parts) {
    const double n = static_cast<double>(e - b);
    // At least one byte per partition: a qualifying-row bitmap summary.
    const auto bytes = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(4.0 * n * p.selectivity)));
    it.kernel.tasks.push_back(CcmTask{offset, static_cast<std::uint32_t>(bytes), p.cost.ccm_compute(n), p.cost.ccm_mem(n), 0});
    offset += bytes;
  }
  it.kernel.result_bytes_total = offset;
  // Host aggregation work scales with the scanned partition it summarizes.
  const auto hparts = split_range(offset, std::min<std::uint64_t>(p.host_tasks, offset));
  for (std::size_t t = 0; t < hparts.size(); ++t) {
    const auto [b, e] = hparts[t];
    const double items = static_cast<double>(p.rows) / static_cast<double>(hparts.size());
    it.host_tasks.push_back(HostTask{static_cast<std::uint32_t>(t), b, e, p.cost.host_compute(items), {}});
  }
  g.iterations.push_back(std::move(it));
  return g;
}

// ----------------------------------------------------------------- LLM

struct LlmParams {
  std::uint32_t hidden = 2560;  // OPT-2.7B
  std::uint32_t tokens = 1024;
  std::uint32_t layers = 4;
  std::uint32_t ccm_tasks = 256;  // attention block partitions
  std::uint32_t host_tasks = 32;  // MLP partitions
  CostModel cost;
};

// Attention block offloaded per layer; it converges to a [1, hidden] output
// that feeds a handful of host MLP tasks (hourglass). Layers are dependent.
inline TaskGraph gen_llm_attention(const LlmParams& p) {
  if (p.hidden < 1 || p.tokens < 1 || p.layers < 1) throw std::invalid_argument("llm: sizes must be >= 1");
  p.cost.validate();
  TaskGraph g;
  g.name = "llm-opt2.7b";
  g.cross_iteration_dependency = true;
  const std::uint64_t out_bytes = 4ULL * p.hidden;
  const std::uint32_t n_ccm = static_cast<std::uint32_t>(std::min<std::uint64_t>(p.ccm_tasks, out_bytes));
  const std::uint32_t n_host = static_cast<std::uint32_t>(std::min<std::uint64_t>(p.host_tasks, out_bytes));
  for (std::uint32_t l = 0; l < p.layers; ++l) {
    OffloadIteration it;
    it.kernel.kernel_id = l;
    it.kernel.result_bytes_total = out_bytes;
    // QKV projection + attention over all tokens, split across partitions.
    const double elems_total = static_cast<double>(p.tokens) * p.hidden * 4.0;
    for (const auto& [b, e] : split_range(out_bytes, n_ccm)) {
      const double elems = elems_total / n_ccm;
      it.kernel.tasks.push_back(
          CcmTask{b, static_cast<std::uint32_t>(e - b), p.cost.ccm_compute(elems), p.cost.ccm_mem(elems), 0});
    }
    // MLP (hidden x 4*hidden x 2) split across host partitions.
    const double items_total = 8.0 * p.hidden * p.hidden / 1024.0;
    const auto hparts = split_range(out_bytes, n_host);
    for (std::size_t t = 0; t < hparts.size(); ++t) {
      const auto [b, e] = hparts[t];
      it.host_tasks.push_back(HostTask{static_cast<std::uint32_t>(t), b, e,
                                       p.cost.host_compute(items_total / static_cast<double>(hparts.size())), {}});
    }
    g.iterations.push_back(std::move(it));
  }
  return g;
}

}  // namespace ccmsim
