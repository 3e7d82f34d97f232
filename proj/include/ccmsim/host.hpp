#pragma once

// Host processor: issues offloads, observes completion through the chosen
// mechanism, and runs the host tasks that depend on kernel results.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "ccmsim/ccm.hpp"
#include "ccmsim/fabric.hpp"
#include "ccmsim/ring_stream.hpp"
#include "ccmsim/sim_core.hpp"
#include "ccmsim/types.hpp"
#include "ccmsim/workload.hpp"

namespace ccmsim {

struct HostConfig {
  std::uint32_t units = 32;
  std::uint32_t threads_per_unit = 2;
  double freq_hz = 3e9;
  SchedulerPolicy scheduler = SchedulerPolicy::FIFO;
  SimTime polling_interval = 50 * kNanosecond;  // KAI local poll period
  SimTime rp_interval = 1 * kMicrosecond;       // RP mailbox poll period
  std::uint32_t poll_cost_cycles = 10;
  std::uint32_t descriptor_bytes = 64;
  std::uint32_t doorbell_bytes = 8;
  std::uint32_t flow_control_bytes = 16;
  // Outstanding cachelines the host keeps in flight during a bulk result
  // load; caps the load at lines * cacheline / mem_rtt. 0 means link rate.
  std::uint32_t load_outstanding_lines = 16;
  bool rp_pinned = false;  // RP poller spins on a dedicated µthread
  // When payload occupancy reaches this fraction of capacity after a drain,
  // pooled slots at the head are copied out to host memory so a slot whose
  // task still waits on unstreamed data cannot pin the head forever.
  double spill_fraction = 0.5;

  std::uint32_t threads() const { return units * threads_per_unit; }

  void validate() const {
    if (units == 0 || threads_per_unit == 0) throw std::invalid_argument("host: µthread count must be > 0");
    if (!(freq_hz > 0)) throw std::invalid_argument("host: freq_hz must be > 0");
    if (polling_interval <= 0) throw std::invalid_argument("host: polling_interval must be > 0");
    if (rp_interval <= 0) throw std::invalid_argument("host: rp_interval must be > 0");
    if (!(spill_fraction > 0 && spill_fraction <= 1)) throw std::invalid_argument("host: spill_fraction must be in (0, 1]");
    if (rp_pinned && threads() < 2) throw std::invalid_argument("host: rp_pinned needs at least 2 µthreads");
  }
};

class Host {
 public:
  Host(Engine& engine, Fabric& fabric, CcmDevice& ccm, HostRings* rings, HostConfig cfg, Mechanism mech)
      : engine_(engine), fabric_(fabric), ccm_(ccm), rings_(rings), cfg_(cfg), mech_(mech),
        pool_(cfg.units, cfg.threads_per_unit, cfg.scheduler) {
    cfg_.validate();
    self_ = engine_.register_actor("host");
    if (mech_ == Mechanism::KAI_Interrupt)
      ccm_.set_delivery_hook([this] { fabric_.raise_interrupt([this] { on_interrupt(); }); });
  }

  ActorId id() const { return self_; }
  const HostConfig& config() const { return cfg_; }
  bool done() const { return done_; }
  SimTime end_time() const { return end_time_; }

  void start(const TaskGraph& g) {
    validate(g);
    graph_ = &g;
    iters_.clear();
    iters_.resize(g.iterations.size());
    engine_.note(self_, "run.begin", static_cast<std::int64_t>(g.iterations.size()));
    if (g.iterations.empty()) {
      finish_run();
      return;
    }
    begin_iteration(0);
  }

 private:
  struct IterState {
    const OffloadIteration* it = nullptr;
    std::vector<std::uint32_t> deps_left;
    std::vector<char> queued, finished;
    std::vector<std::vector<std::uint32_t>> waiters;  // result slot -> host tasks
    std::vector<std::uint32_t> refs;                   // result slot -> starts pending
    std::vector<std::optional<MetadataRecord>> pooled;
    std::vector<char> taken;  // payload slot already consumed
    std::vector<std::vector<std::uint32_t>> successors;
    std::size_t n_finished = 0;
    bool results_in = false;
    bool complete = false;
  };

  std::uint64_t slot_size() const { return rings_ ? rings_->config().slot_size : 64; }

  std::pair<std::uint64_t, std::uint64_t> slot_span(const HostTask& t) const {
    const std::uint64_t s = slot_size();
    if (t.dep_end <= t.dep_begin) return {0, 0};
    return {t.dep_begin / s, (t.dep_end + s - 1) / s};
  }

  // ---- iteration lifecycle ----------------------------------------------
  void begin_iteration(std::size_t i) {
    IterState& st = iters_[i];
    st.it = &graph_->iterations[i];
    const auto& tasks = st.it->host_tasks;
    const std::uint64_t s = slot_size();
    const std::uint64_t nslots = (st.it->kernel.result_bytes_total + s - 1) / s;
    st.deps_left.assign(tasks.size(), 0);
    st.queued.assign(tasks.size(), 0);
    st.finished.assign(tasks.size(), 0);
    st.successors.assign(tasks.size(), {});
    st.waiters.assign(nslots, {});
    st.refs.assign(nslots, 0);
    st.pooled.assign(nslots, std::nullopt);
    st.taken.assign(nslots, 0);
    for (const auto& t : tasks) {
      if (t.after) st.successors[*t.after].push_back(t.id);
      if (is_streaming(mech_)) {
        auto [b, e] = slot_span(t);
        st.deps_left[t.id] = static_cast<std::uint32_t>(e - b);
        for (auto k = b; k < e; ++k) {
          st.waiters[k].push_back(t.id);
          ++st.refs[k];
        }
      }
    }
    current_ = i;
    engine_.note(self_, "iter.begin", static_cast<std::int64_t>(i));
    launch(i);
    if (is_streaming(mech_)) {
      std::vector<std::uint32_t> fresh;
      for (const auto& t : tasks)
        if (runnable(st, t.id)) fresh.push_back(t.id);
      enqueue(i, fresh);
      dispatch();
    }
  }

  void launch(std::size_t i) {
    const KernelDescriptor& k = graph_->iterations[i].kernel;
    engine_.note(self_, "offload.issue", static_cast<std::int64_t>(i), k.kernel_id);
    switch (mech_) {
      case Mechanism::RP:
        // descriptor to device memory, then the enqueue doorbell
        fabric_.send_mem(MessageKind::MemStore, cfg_.descriptor_bytes, [this, i, &k] {
          fabric_.host_request(
              MessageKind::IoWrite, cfg_.doorbell_bytes,
              [this, &k](Fabric::ReplyFn reply) {
                ccm_.launch(k);
                reply(0);
              },
              [this, i] {
                engine_.note(self_, "offload.ack", static_cast<std::int64_t>(i));
                if (cfg_.rp_pinned) pinned_ = pool_.acquire();
                rp_poll_at(engine_.now() + cfg_.rp_interval, i);
              });
        });
        break;
      case Mechanism::BS:
        fabric_.host_request(
            MessageKind::MemStore, cfg_.descriptor_bytes,
            [this, &k](Fabric::ReplyFn reply) { ccm_.launch(k, [reply] { reply(0); }); },
            [this, i] {
              engine_.note(self_, "offload.ack", static_cast<std::int64_t>(i));
              bulk_load(i);
            });
        break;
      case Mechanism::KAI:
      case Mechanism::KAI_Interrupt:
        streaming_ = true;
        fabric_.host_request(
            MessageKind::MemStore, cfg_.descriptor_bytes,
            [this, &k](Fabric::ReplyFn reply) {
              ccm_.launch(k);
              reply(0);
            },
            [this, i, &k] {
              engine_.note(self_, "offload.ack", static_cast<std::int64_t>(i));
              if (k.result_bytes_total == 0) {
                streaming_ = false;
                results_arrived(i);
              }
            });
        if (mech_ == Mechanism::KAI) {
          const SimTime t0 = engine_.now();
          poll_tick_at(t0 + cfg_.polling_interval, ++poll_gen_);
        }
        break;
    }
  }

  // RP: mailbox read on a fixed grid until completion shows up.
  void rp_poll_at(SimTime at, std::size_t i) {
    engine_.schedule_at(self_, at, "host.rp_poll.tick", [this, i] {
      const SimTime issued = engine_.now();
      auto seen = std::make_shared<bool>(false);
      engine_.note(self_, "host.rp_poll", static_cast<std::int64_t>(i));
      fabric_.host_request(
          MessageKind::IoRead, 0,
          [this, seen](Fabric::ReplyFn reply) {
            *seen = ccm_.mailbox_done();
            reply(8);
          },
          [this, seen, issued, i] {
            if (!*seen) {
              rp_poll_at(std::max(engine_.now(), issued + cfg_.rp_interval), i);
              return;
            }
            if (pinned_) {
              pool_.release(*pinned_);
              pinned_.reset();
            }
            fabric_.send_io(MessageKind::IoWrite, cfg_.doorbell_bytes, [this, i] { bulk_load(i); });
          });
    });
  }

  double load_rate() const {
    if (cfg_.load_outstanding_lines == 0 || fabric_.config().mem_rtt <= 0) return 0;
    return static_cast<double>(cfg_.load_outstanding_lines) * fabric_.config().cacheline * 1e12 /
           static_cast<double>(fabric_.config().mem_rtt);
  }

  void bulk_load(std::size_t i) {
    const std::uint64_t bytes = graph_->iterations[i].kernel.result_bytes_total;
    if (bytes == 0) {
      results_arrived(i);
      return;
    }
    const std::int64_t xid = xfer_id_++;
    engine_.note(self_, "xfer.begin", xid, static_cast<std::int64_t>(bytes));
    fabric_.send_mem(
        MessageKind::MemLoad, bytes,
        [this, i, xid, bytes] {
          engine_.note(self_, "xfer.end", xid, static_cast<std::int64_t>(bytes));
          results_arrived(i);
        },
        load_rate());
  }

  // Every result of iteration i is visible to the host.
  void results_arrived(std::size_t i) {
    IterState& st = iters_[i];
    st.results_in = true;
    engine_.note(self_, "iter.results", static_cast<std::int64_t>(i));
    if (!is_streaming(mech_)) {
      std::vector<std::uint32_t> fresh;
      for (const auto& t : st.it->host_tasks)
        if (runnable(st, t.id)) fresh.push_back(t.id);
      enqueue(i, fresh);
    }
    if (!graph_->cross_iteration_dependency && i + 1 < iters_.size()) begin_iteration(i + 1);
    maybe_complete(i);
    dispatch();
  }

  void maybe_complete(std::size_t i) {
    IterState& st = iters_[i];
    if (st.complete || !st.results_in || st.n_finished != st.it->host_tasks.size()) return;
    st.complete = true;
    engine_.note(self_, "iter.end", static_cast<std::int64_t>(i));
    if (graph_->cross_iteration_dependency && i + 1 < iters_.size()) {
      begin_iteration(i + 1);
      return;
    }
    if (std::all_of(iters_.begin(), iters_.end(), [](const IterState& s) { return s.complete; })) finish_run();
  }

  void finish_run() {
    done_ = true;
    end_time_ = engine_.now();
    engine_.note(self_, "run.end");
  }

  // ---- streaming completion -------------------------------------------
  void poll_tick_at(SimTime at, std::uint64_t gen) {
    engine_.schedule_at(self_, at, "host.poll", [this, gen] {
      if (!streaming_ || gen != poll_gen_) return;
      const SimTime cost = cycle_ps(cfg_.freq_hz) * cfg_.poll_cost_cycles;
      engine_.schedule(self_, cost, "host.poll.drain", [this] { drain(); });
      poll_tick_at(engine_.now() + cfg_.polling_interval, gen);
    });
  }

  void on_interrupt() {
    const SimTime start = std::max(engine_.now(), irq_free_);
    irq_free_ = start + fabric_.config().interrupt_handling;
    engine_.schedule_at(self_, start, "host.irq.start", [this] { engine_.note(self_, "host.irq.begin"); });
    engine_.schedule_at(self_, irq_free_, "host.irq.finish", [this] {
      engine_.note(self_, "host.irq.end");
      drain();
    });
  }

  void drain() {
    if (rings_->poll_meta_tail().empty()) return;
    auto recs = rings_->fetch_ready();
    engine_.note(self_, "host.fetch", static_cast<std::int64_t>(recs.size()),
                 static_cast<std::int64_t>(rings_->meta_head()));
    heads_dirty_ = true;  // metadata head moved
    IterState& st = iters_[current_];
    const std::uint64_t s = slot_size();
    std::vector<std::uint32_t> fresh;
    bool last = false;
    std::uint64_t idx = rings_->meta_head() - recs.size();
    for (const auto& r : recs) {
      if (r.kernel_id != st.it->kernel.kernel_id) throw InvariantViolation("record for a kernel not in flight");
      const std::uint64_t slot = r.result_offset / s;
      st.pooled[slot] = r;
      engine_.note(self_, "host.pool", static_cast<std::int64_t>(r.result_offset), r.payload_slot);
      in_ring_.push_back({idx++, current_, slot});
      if (st.refs[slot] == 0) consume(st, slot);
      for (auto t : st.waiters[slot])
        if (--st.deps_left[t] == 0 && runnable(st, t)) fresh.push_back(t);
      last = last || r.last;
    }
    std::sort(fresh.begin(), fresh.end());
    enqueue(current_, fresh);
    spill();
    if (last) {
      streaming_ = false;
      results_arrived(current_);
    } else {
      dispatch();
    }
  }

  void spill() {
    const auto limit = static_cast<std::uint64_t>(cfg_.spill_fraction * rings_->capacity());
    auto occupancy = [this] { return rings_->payload_tail() - rings_->payload_head(); };
    rings_->advance_heads();
    while (!in_ring_.empty() && occupancy() >= std::max<std::uint64_t>(1, limit)) {
      const RingEntry e = in_ring_.front();
      in_ring_.pop_front();
      IterState& st = iters_[e.iter];
      if (!st.taken[e.slot]) {
        engine_.note(self_, "ring.spill", static_cast<std::int64_t>(e.index));
        consume(st, e.slot);
      }
      rings_->advance_heads();
    }
    while (!in_ring_.empty() && in_ring_.front().index < rings_->payload_head()) in_ring_.pop_front();
  }

  void consume(IterState& st, std::uint64_t slot) {
    if (st.taken[slot]) return;
    st.taken[slot] = 1;
    const auto& rec = *st.pooled[slot];
    rings_->consume_payload(rec);
    engine_.note(self_, "ring.consume", rec.payload_slot, static_cast<std::int64_t>(rec.result_offset));
    heads_dirty_ = true;
  }

  void send_flow_control() {
    if (!rings_ || !heads_dirty_) return;
    heads_dirty_ = false;
    const auto heads = rings_->advance_heads();
    if (heads == last_fc_) return;
    last_fc_ = heads;
    engine_.note(self_, "ring.head", static_cast<std::int64_t>(heads.first), static_cast<std::int64_t>(heads.second));
    fabric_.host_request(
        MessageKind::FlowControlStore, cfg_.flow_control_bytes,
        [this, heads](Fabric::ReplyFn reply) {
          ccm_.flow_control(heads.first, heads.second);
          reply(0);
        },
        [] {});
  }

  // ---- host task scheduling -------------------------------------------
  bool runnable(const IterState& st, std::uint32_t t) const {
    if (st.queued[t]) return false;
    if (is_streaming(mech_) ? st.deps_left[t] != 0 : !st.results_in) return false;
    const auto& after = st.it->host_tasks[t].after;
    return !after || st.finished[*after];
  }

  void enqueue(std::size_t i, const std::vector<std::uint32_t>& ids) {
    for (auto t : ids) {
      iters_[i].queued[t] = 1;
      if (cfg_.scheduler == SchedulerPolicy::FIFO)
        fifo_.emplace_back(i, t);
      else
        rr_.emplace(i, t);
    }
  }

  std::optional<std::pair<std::size_t, std::uint32_t>> next_ready() {
    if (cfg_.scheduler == SchedulerPolicy::FIFO) {
      if (fifo_.empty()) return std::nullopt;
      auto v = fifo_.front();
      fifo_.pop_front();
      return v;
    }
    if (rr_.empty()) return std::nullopt;
    auto it = rr_.lower_bound(rr_cursor_);
    if (it == rr_.end()) it = rr_.begin();
    auto v = *it;
    rr_.erase(it);
    rr_cursor_ = {v.first, v.second + 1};
    return v;
  }

  void dispatch() {
    while (pool_.free() > 0) {
      auto nx = next_ready();
      if (!nx) break;
      const auto [i, t] = *nx;
      const std::uint32_t th = *pool_.acquire();
      IterState& st = iters_[i];
      const HostTask& task = st.it->host_tasks[t];
      engine_.note(self_, "host.task.begin", th, t, static_cast<std::int64_t>(i));
      if (is_streaming(mech_)) {
        auto [b, e] = slot_span(task);
        for (auto k = b; k < e; ++k)
          if (--st.refs[k] == 0) consume(st, k);
      }
      engine_.schedule(self_, task.compute_ps, "host.task.finish", [this, th, i = i, t = t] { task_done(th, i, t); });
    }
    send_flow_control();
  }

  void task_done(std::uint32_t th, std::size_t i, std::uint32_t t) {
    engine_.note(self_, "host.task.end", th, t, static_cast<std::int64_t>(i));
    pool_.release(th);
    IterState& st = iters_[i];
    st.finished[t] = 1;
    ++st.n_finished;
    std::vector<std::uint32_t> fresh;
    for (auto s : st.successors[t])
      if (runnable(st, s)) fresh.push_back(s);
    enqueue(i, fresh);
    maybe_complete(i);
    dispatch();
  }

  Engine& engine_;
  Fabric& fabric_;
  CcmDevice& ccm_;
  HostRings* rings_;
  HostConfig cfg_;
  Mechanism mech_;
  MicrothreadPool pool_;
  ActorId self_ = 0;

  const TaskGraph* graph_ = nullptr;
  std::vector<IterState> iters_;
  std::size_t current_ = 0;
  bool streaming_ = false;
  bool done_ = false;
  SimTime end_time_ = 0;
  SimTime irq_free_ = 0;
  std::optional<std::uint32_t> pinned_;
  std::int64_t xfer_id_ = 0;
  std::uint64_t poll_gen_ = 0;

  std::deque<std::pair<std::size_t, std::uint32_t>> fifo_;
  std::set<std::pair<std::size_t, std::uint32_t>> rr_;
  std::pair<std::size_t, std::uint32_t> rr_cursor_{0, 0};

  struct RingEntry {
    std::uint64_t index;
    std::size_t iter;
    std::uint64_t slot;
  };
  std::deque<RingEntry> in_ring_;  // fetched payload slots in ring order

  bool heads_dirty_ = false;
  std::pair<std::uint64_t, std::uint64_t> last_fc_{0, 0};
};

}  // namespace ccmsim
