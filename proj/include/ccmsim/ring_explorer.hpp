#pragma once

// Exhaustive interleaving checker for the back-streaming ring protocol.
//
// The device and host are modeled as step machines over a small shared
// memory image (payload/metadata slots, published tails, in-flight flow
// control messages). Every interleaving of enabled steps up to a depth budget
// is enumerated, and each reached state is checked against four rules:
//   read-uncommitted   host reads a payload or metadata slot not yet written
//   overwrite          device writes a slot the host has not released
//   occupancy          tail - head exceeds capacity on either ring
//   monotonicity       an index moves backwards, or a device head copy runs
//                      ahead of the host head
// Flow-control messages may be applied in any order.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace ccmsim {

enum class MachineVariant {
  Correct,          // payload write -> metadata write -> tail publish
  BrokenMetaFirst,  // metadata published before the payload is written
};

inline const char* to_string(MachineVariant v) {
  return v == MachineVariant::Correct ? "correct" : "broken-meta-first";
}

struct ExplorerConfig {
  std::uint32_t capacity = 2;
  std::uint32_t steps = 8;   // interleaving depth
  std::uint32_t chunks = 3;  // payloads the device tries to stream
  MachineVariant variant = MachineVariant::Correct;

  static constexpr std::uint32_t kMaxCapacity = 4;
  static constexpr std::uint32_t kMaxSteps = 12;
};

class ExplorerBudgetExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

struct Violation {
  std::string rule;
  std::vector<std::string> path;  // step names from the initial state
};

struct ExplorerResult {
  std::vector<Violation> violations;
  std::uint64_t states_visited = 0;
  std::uint64_t transitions = 0;
};

namespace detail {

struct ExplorerState {
  // device
  std::uint8_t stage = 0;     // position in the per-chunk step sequence
  std::uint8_t produced = 0;  // chunks started
  std::uint8_t dev_ptail = 0, dev_mtail = 0;
  std::uint8_t local_ph = 0, local_mh = 0;
  std::uint8_t cur = 0;  // index of the chunk being written (same on both rings)
  // shared host memory
  std::int8_t pslot_holder[ExplorerConfig::kMaxCapacity] = {-1, -1, -1, -1};
  std::uint8_t pslot_complete[ExplorerConfig::kMaxCapacity] = {0, 0, 0, 0};
  std::int8_t mslot_holder[ExplorerConfig::kMaxCapacity] = {-1, -1, -1, -1};
  std::uint8_t ptail_pub = 0, mtail_pub = 0;
  // host
  std::uint8_t observed_tail = 0;
  std::uint8_t meta_head = 0;
  std::uint8_t payload_head = 0;
  std::uint16_t pool = 0;      // bitmask of payload indexes ready to consume
  std::uint16_t consumed = 0;  // bitmask of consumed payload indexes
  std::uint8_t fc_sent_ph = 0, fc_sent_mh = 0;
  // flow-control messages in flight, (payload head, meta head), sorted
  std::vector<std::pair<std::uint8_t, std::uint8_t>> fc_inflight;

  std::string key() const {
    std::string k;
    k.reserve(40 + 2 * fc_inflight.size());
    auto put = [&k](auto v) { k.push_back(static_cast<char>(v)); };
    put(stage), put(produced), put(dev_ptail), put(dev_mtail), put(local_ph), put(local_mh), put(cur);
    for (int i = 0; i < 4; ++i) put(pslot_holder[i]), put(pslot_complete[i]), put(mslot_holder[i]);
    put(ptail_pub), put(mtail_pub), put(observed_tail), put(meta_head), put(payload_head);
    put(pool & 0xff), put(pool >> 8), put(consumed & 0xff), put(consumed >> 8), put(fc_sent_ph), put(fc_sent_mh);
    for (auto [a, b] : fc_inflight) put(a), put(b);
    return k;
  }
};

class Explorer {
 public:
  explicit Explorer(const ExplorerConfig& cfg) : cfg_(cfg) {}

  ExplorerResult run() {
    ExplorerState s0;
    std::vector<std::string> path;
    dfs(s0, cfg_.steps, path);
    result_.states_visited = seen_.size();
    return std::move(result_);
  }

 private:
  struct Step {
    std::string name;
    ExplorerState next;
    std::string violation;  // rule broken by taking this step, if any
  };

  std::uint8_t cap() const { return static_cast<std::uint8_t>(cfg_.capacity); }

  // Device step sequence per chunk, by variant.
  enum Op { Reserve, WritePayload, WriteMeta, Publish, PublishMetaOnly, PublishPayloadOnly };
  std::vector<Op> sequence() const {
    if (cfg_.variant == MachineVariant::Correct) return {Reserve, WritePayload, WriteMeta, Publish};
    return {Reserve, WriteMeta, PublishMetaOnly, WritePayload, PublishPayloadOnly};
  }

  void enumerate(const ExplorerState& s, std::vector<Step>& out) const {
    const auto seq = sequence();
    // device: next op of the current chunk
    if (s.stage != 0 || s.produced < cfg_.chunks) {
      const Op op = seq[s.stage];
      ExplorerState n = s;
      std::string bad;
      bool enabled = true;
      switch (op) {
        case Reserve:
          if (s.dev_ptail + 1 - s.local_ph > cap() || s.dev_mtail + 1 - s.local_mh > cap()) {
            enabled = false;
            break;
          }
          n.cur = s.dev_ptail;
          n.dev_ptail = s.dev_ptail + 1;
          n.dev_mtail = s.dev_mtail + 1;
          n.produced = s.produced + 1;
          if (n.dev_ptail - s.payload_head > cap()) bad = "occupancy";
          break;
        case WritePayload: {
          const int phys = s.cur % cap();
          const int old = s.pslot_holder[phys];
          if (old >= 0 && old >= s.payload_head) bad = "overwrite";
          n.pslot_holder[phys] = static_cast<std::int8_t>(s.cur);
          n.pslot_complete[phys] = 1;
          break;
        }
        case WriteMeta: {
          const int phys = s.cur % cap();
          const int old = s.mslot_holder[phys];
          if (old >= 0 && old >= s.meta_head) bad = "overwrite";
          n.mslot_holder[phys] = static_cast<std::int8_t>(s.cur);
          break;
        }
        case Publish:
          n.ptail_pub = s.cur + 1;
          n.mtail_pub = s.cur + 1;
          break;
        case PublishMetaOnly:
          n.mtail_pub = s.cur + 1;
          break;
        case PublishPayloadOnly:
          n.ptail_pub = s.cur + 1;
          break;
      }
      if (enabled) {
        n.stage = static_cast<std::uint8_t>((s.stage + 1) % seq.size());
        static const char* names[] = {"dev.reserve", "dev.write-payload", "dev.write-meta", "dev.publish-tail",
                                      "dev.publish-meta-tail", "dev.publish-payload-tail"};
        out.push_back(Step{names[op], std::move(n), bad});
      }
    }
    // device: apply any in-flight flow-control message
    for (std::size_t i = 0; i < s.fc_inflight.size(); ++i) {
      if (i > 0 && s.fc_inflight[i] == s.fc_inflight[i - 1]) continue;
      ExplorerState n = s;
      auto [ph, mh] = s.fc_inflight[i];
      n.fc_inflight.erase(n.fc_inflight.begin() + static_cast<long>(i));
      n.local_ph = std::max(s.local_ph, ph);
      n.local_mh = std::max(s.local_mh, mh);
      out.push_back(Step{"dev.apply-flow-control", std::move(n), ""});
    }
    // host: poll the metadata tail
    if (s.mtail_pub != s.observed_tail) {
      ExplorerState n = s;
      n.observed_tail = s.mtail_pub;
      out.push_back(Step{"host.poll", std::move(n), ""});
    }
    // host: fetch one metadata record into the ready pool
    if (s.meta_head < s.observed_tail) {
      ExplorerState n = s;
      std::string bad;
      const int phys = s.meta_head % cap();
      if (s.mslot_holder[phys] != s.meta_head) bad = "read-uncommitted";
      n.pool = static_cast<std::uint16_t>(s.pool | (1u << s.meta_head));
      n.meta_head = s.meta_head + 1;
      out.push_back(Step{"host.fetch-meta", std::move(n), bad});
    }
    // host: consume any pooled payload (out of order allowed)
    for (int idx = 0; idx < 16; ++idx) {
      if (!(s.pool & (1u << idx))) continue;
      ExplorerState n = s;
      std::string bad;
      const int phys = idx % cap();
      if (s.pslot_holder[phys] != idx || !s.pslot_complete[phys]) bad = "read-uncommitted";
      n.pool = static_cast<std::uint16_t>(s.pool & ~(1u << idx));
      n.consumed = static_cast<std::uint16_t>(s.consumed | (1u << idx));
      out.push_back(Step{"host.consume-payload[" + std::to_string(idx) + "]", std::move(n), bad});
    }
    // host: advance the payload head over the consumed prefix
    {
      std::uint8_t h = s.payload_head;
      while (h < s.ptail_pub && (s.consumed & (1u << h))) ++h;
      if (h != s.payload_head) {
        ExplorerState n = s;
        n.payload_head = h;
        out.push_back(Step{"host.advance-heads", std::move(n), ""});
      }
    }
    // host: send flow control when either head moved since the last message
    if (s.payload_head != s.fc_sent_ph || s.meta_head != s.fc_sent_mh) {
      ExplorerState n = s;
      n.fc_sent_ph = s.payload_head;
      n.fc_sent_mh = s.meta_head;
      n.fc_inflight.emplace_back(s.payload_head, s.meta_head);
      std::sort(n.fc_inflight.begin(), n.fc_inflight.end());
      out.push_back(Step{"host.send-flow-control", std::move(n), ""});
    }
  }

  std::string check_state(const ExplorerState& prev, const ExplorerState& s) const {
    if (s.ptail_pub - s.payload_head > cap() || s.mtail_pub - s.meta_head > cap()) return "occupancy";
    if (s.dev_ptail - s.payload_head > cap() || s.dev_mtail - s.meta_head > cap()) return "occupancy";
    if (s.payload_head < prev.payload_head || s.meta_head < prev.meta_head || s.ptail_pub < prev.ptail_pub ||
        s.mtail_pub < prev.mtail_pub || s.local_ph < prev.local_ph || s.local_mh < prev.local_mh ||
        s.dev_ptail < prev.dev_ptail || s.dev_mtail < prev.dev_mtail)
      return "monotonicity";
    if (s.local_ph > s.payload_head || s.local_mh > s.meta_head) return "monotonicity";
    return "";
  }

  void dfs(const ExplorerState& s, std::uint32_t remaining, std::vector<std::string>& path) {
    std::string key = s.key();
    key.push_back(static_cast<char>(remaining));
    if (!seen_.insert(std::move(key)).second) return;
    if (remaining == 0) return;
    std::vector<Step> steps;
    enumerate(s, steps);
    for (auto& st : steps) {
      ++result_.transitions;
      path.push_back(st.name);
      std::string rule = !st.violation.empty() ? st.violation : check_state(s, st.next);
      if (!rule.empty()) {
        result_.violations.push_back(Violation{rule, path});
      } else {
        dfs(st.next, remaining - 1, path);
      }
      path.pop_back();
    }
  }

  ExplorerConfig cfg_;
  ExplorerResult result_;
  std::unordered_set<std::string> seen_;
};

}  // namespace detail

// Enumerates every interleaving up to cfg.steps and returns the violations
// found. A violating step ends its branch.
inline ExplorerResult explore_interleavings(const ExplorerConfig& cfg) {
  if (cfg.capacity == 0 || cfg.capacity > ExplorerConfig::kMaxCapacity)
    throw ExplorerBudgetExceeded("explorer: capacity must be in [1, " +
                                 std::to_string(ExplorerConfig::kMaxCapacity) + "]");
  if (cfg.steps > ExplorerConfig::kMaxSteps)
    throw ExplorerBudgetExceeded("explorer: step budget must be <= " + std::to_string(ExplorerConfig::kMaxSteps));
  if (cfg.chunks > 12) throw ExplorerBudgetExceeded("explorer: at most 12 chunks");
  return detail::Explorer(cfg).run();
}

}  // namespace ccmsim
