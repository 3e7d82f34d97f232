#pragma once

// Named workload presets. Each one fixes generator sizes plus the cost
// constants that place its serialized breakdown where the target figure has it.

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ccmsim/types.hpp"
#include "ccmsim/workload.hpp"

namespace ccmsim {

using WorkloadParams = std::variant<KnnParams, GraphParams, OlapParams, LlmParams>;

struct Preset {
  std::string name;
  std::string note;
  WorkloadParams params;
  std::optional<SchedulerPolicy> scheduler;  // both sides, unless the config says otherwise
};

inline TaskGraph build_graph(const WorkloadParams& p) {
  return std::visit(
      [](const auto& v) -> TaskGraph {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, KnnParams>) return gen_knn(v);
        else if constexpr (std::is_same_v<T, GraphParams>) return gen_graph(v);
        else if constexpr (std::is_same_v<T, OlapParams>) return gen_olap(v);
        else return gen_llm_attention(v);
      },
      p);
}

namespace detail {

// Device time scales with dim x rows, which is the same for all three KNN
// shapes. Host top-k runs as a chain of blocks sized so the chain takes about
// as long as the kernel.
inline KnnParams knn(std::uint32_t dim, std::uint32_t rows, std::uint32_t chain, double scale, double host_cycles) {
  KnnParams p;
  p.dim = dim;
  p.rows = rows;
  p.host_rows_per_task = rows / chain;
  p.cost.ccm_cycles_per_elem = 0.05 * scale;
  p.cost.ccm_mem_ps_per_elem = 0.95 * scale;
  p.cost.host_cycles_per_item = host_cycles * scale;
  return p;
}

inline GraphParams graph(GraphKind kind) {
  GraphParams p;
  p.kind = kind;
  p.n_v = 264346;
  p.n_e = 733846;
  p.cost.ccm_cycles_per_elem = 0.1;
  p.cost.ccm_mem_ps_per_elem = 75.0;
  p.cost.host_cycles_per_item = 2.3;
  return p;
}

}  // namespace detail

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = [] {
    std::vector<Preset> v;
    v.push_back({"knn-d2048-r128", "KNN, 512 B of distances", detail::knn(2048, 128, 16, 100.0, 4.97), {}});
    v.push_back({"knn-d1024-r256", "fine-grained KNN, few-microsecond kernel", detail::knn(1024, 256, 8, 20.0, 2.9), {}});
    v.push_back({"knn-d512-r512", "KNN, 2 KiB of distances", detail::knn(512, 512, 8, 100.0, 1.5), {}});
    {
      GraphParams p = detail::graph(GraphKind::SSSP);
      p.iterations = 4;
      p.active_min = 0.4;
      p.active_max = 0.9;
      p.skew_fraction = 0.25;
      p.skew_delay = 0.7;
      p.seed = 7;
      v.push_back({"sssp", "SSSP with late inputs on the low partitions", p, SchedulerPolicy::RR});
    }
    {
      GraphParams p = detail::graph(GraphKind::PageRank);
      p.iterations = 3;
      v.push_back({"pagerank-fig4", "PageRank, data movement as heavy as compute", p, {}});
    }
    {
      OlapParams p;
      p.query = SsbQuery::Q1_1;
      p.selectivity = 0.02;
      p.cost.ccm_cycles_per_elem = 1.0;
      p.cost.ccm_mem_ps_per_elem = 28.0;
      p.cost.host_cycles_per_item = 6.0;
      v.push_back({"ssb-q1_1", "SSB Q1.1 filter on device, aggregation on host", p, {}});
    }
    {
      OlapParams p;
      p.query = SsbQuery::Q1_2;
      p.selectivity = 0.002;
      p.cost.ccm_cycles_per_elem = 1.0;
      p.cost.ccm_mem_ps_per_elem = 21.0;
      p.cost.host_cycles_per_item = 14.0;
      v.push_back({"ssb-q1_2", "SSB Q1.2, host-heavy", p, {}});
    }
    {
      LlmParams p;
      p.host_tasks = 80;
      p.cost.ccm_cycles_per_elem = 0.01;
      p.cost.ccm_mem_ps_per_elem = 9.5;
      p.cost.host_cycles_per_item = 18.75;
      v.push_back({"llm-opt2.7b", "attention on device, MLP on host (hourglass)", p, {}});
    }
    return v;
  }();
  return all;
}

inline std::optional<Preset> find_preset(std::string_view name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  return std::nullopt;
}

inline std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : presets()) out.push_back(p.name);
  return out;
}

}  // namespace ccmsim
