#pragma once

// Computational memory device: µthread pool, dispatcher, shared memory pipe,
// and for the streaming mechanisms the payload former and DMA executor that
// feed the host rings.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ccmsim/fabric.hpp"
#include "ccmsim/ring_stream.hpp"
#include "ccmsim/sim_core.hpp"
#include "ccmsim/types.hpp"
#include "ccmsim/workload.hpp"

namespace ccmsim {

struct CcmConfig {
  std::uint32_t units = 16;
  std::uint32_t threads_per_unit = 16;
  double freq_hz = 2e9;
  SimTime sched_overhead = 500;  // per task assignment, serial dispatcher
  SchedulerPolicy scheduler = SchedulerPolicy::FIFO;
  std::uint32_t sf = 1;  // records per DMA
  bool ooo = true;       // stream completed chunks out of order

  std::uint32_t threads() const { return units * threads_per_unit; }

  void validate() const {
    if (units == 0 || threads_per_unit == 0) throw std::invalid_argument("ccm: µthread count must be > 0");
    if (!(freq_hz > 0)) throw std::invalid_argument("ccm: freq_hz must be > 0");
    if (sched_overhead < 0) throw std::invalid_argument("ccm: sched_overhead must be >= 0");
    if (sf == 0) throw std::invalid_argument("ccm: sf must be >= 1");
  }
};

inline constexpr int kResultRegion = 1;

class CcmDevice {
 public:
  // Called at the host once a DMA has been committed into the rings.
  using DeliveryHook = std::function<void()>;

  CcmDevice(Engine& engine, Fabric& fabric, CcmConfig cfg, Mechanism mech, HostRings* rings)
      : engine_(engine), fabric_(fabric), cfg_(cfg), mech_(mech), rings_(rings),
        view_(rings ? rings->capacity() : 1), pool_(cfg.units, cfg.threads_per_unit, cfg.scheduler) {
    cfg_.validate();
    if (is_streaming(mech_) && !rings_) throw std::invalid_argument("ccm: streaming mechanism needs host rings");
    if (rings_ && cfg_.sf > rings_->capacity()) throw std::invalid_argument("ccm: sf exceeds ring capacity");
    self_ = engine_.register_actor("ccm");
  }

  ActorId id() const { return self_; }
  const CcmConfig& config() const { return cfg_; }
  const DeviceRingView& view() const { return view_; }
  bool kernel_active() const { return active_; }

  void set_delivery_hook(DeliveryHook h) { on_delivery_ = std::move(h); }

  // Starts a kernel. `on_done` fires when the last task finishes (for the
  // streaming mechanisms, when the last record has been handed to the DMA).
  void launch(const KernelDescriptor& k, std::function<void()> on_done = {}) {
    if (active_) throw std::logic_error("ccm: kernel launched while another is running");
    active_ = true;
    kernel_ = &k;
    on_done_ = std::move(on_done);
    launched_at_ = engine_.now();
    remaining_ = k.tasks.size();
    queue_.clear();
    for (std::uint32_t i = 0; i < k.tasks.size(); ++i) queue_.push_back(i);
    compute_done_ = false;
    mailbox_done_ = false;
    if (is_streaming(mech_)) init_streaming(k);
    engine_.note(self_, "ccm.kernel.launch", k.kernel_id, static_cast<std::int64_t>(k.tasks.size()));
    if (k.tasks.empty()) {
      finish_compute();
      return;
    }
    try_dispatch();
  }

  // Completion mailbox read by polling.
  bool mailbox_done() const { return mailbox_done_; }

  // Host flow-control store landing at the device.
  void flow_control(std::uint64_t payload_head, std::uint64_t meta_head) {
    view_.apply_flow_control(payload_head, meta_head);
    engine_.note(self_, "ring.fc", static_cast<std::int64_t>(view_.local_payload_head()),
                 static_cast<std::int64_t>(view_.local_meta_head()));
    if (blocked_) {
      blocked_ = false;
      executor_tick();
    }
  }

 private:
  // ---- dispatch -------------------------------------------------------
  SimTime ready_at(std::uint32_t t) const { return launched_at_ + kernel_->tasks[t].ready_ps; }

  std::optional<std::uint32_t> pick_task() {
    const SimTime now = engine_.now();
    if (cfg_.scheduler == SchedulerPolicy::FIFO) {
      if (ready_at(queue_.front()) > now) return std::nullopt;
      const std::uint32_t t = queue_.front();
      queue_.pop_front();
      return t;
    }
    // RR: a task whose inputs are not in yet goes to the back.
    for (std::size_t n = queue_.size(); n > 0; --n) {
      const std::uint32_t t = queue_.front();
      queue_.pop_front();
      if (ready_at(t) <= now) return t;
      queue_.push_back(t);
    }
    return std::nullopt;
  }

  SimTime earliest_ready() const {
    SimTime m = INT64_MAX;
    if (cfg_.scheduler == SchedulerPolicy::FIFO) return ready_at(queue_.front());
    for (auto t : queue_) m = std::min(m, ready_at(t));
    return m;
  }

  void try_dispatch() {
    while (!queue_.empty() && pool_.free() > 0) {
      auto t = pick_task();
      if (!t) {
        const SimTime w = earliest_ready();
        if (wakeup_at_ != w) {
          wakeup_at_ = w;
          engine_.schedule_at(self_, w, "ccm.wakeup", [this] {
            wakeup_at_ = -1;
            try_dispatch();
          });
        }
        return;
      }
      const std::uint32_t th = *pool_.acquire();
      const CcmTask& task = kernel_->tasks[*t];
      const SimTime start = std::max(engine_.now(), dispatcher_free_) + cfg_.sched_overhead;
      dispatcher_free_ = start;
      SimTime data = start;
      if (task.mem_ps > 0) {
        data = std::max(start, mem_free_) + task.mem_ps;
        mem_free_ = data;
      }
      const SimTime end = data + task.compute_ps;
      const std::uint32_t idx = *t;
      engine_.schedule_at(self_, start, "ccm.task.start",
                          [this, th, idx] { engine_.note(self_, "ccm.task.begin", th, idx); });
      engine_.schedule_at(self_, end, "ccm.task.finish", [this, th, idx] { task_done(th, idx); });
    }
  }

  void task_done(std::uint32_t th, std::uint32_t idx) {
    engine_.note(self_, "ccm.task.end", th, idx);
    pool_.release(th);
    --remaining_;
    if (is_streaming(mech_)) produce(kernel_->tasks[idx]);
    if (remaining_ == 0) {
      finish_compute();
      return;
    }
    try_dispatch();
  }

  void finish_compute() {
    compute_done_ = true;
    engine_.note(self_, "ccm.kernel.done", kernel_->kernel_id);
    if (is_streaming(mech_)) {
      executor_tick();  // flush whatever is left
      return;
    }
    mailbox_done_ = true;
    complete();
  }

  void complete() {
    active_ = false;
    auto cb = std::move(on_done_);
    on_done_ = nullptr;
    if (cb) cb();
  }

  // ---- payload formation ------------------------------------------------
  void init_streaming(const KernelDescriptor& k) {
    const std::uint64_t s = rings_->config().slot_size;
    total_slots_ = (k.result_bytes_total + s - 1) / s;
    produced_.assign(total_slots_, 0);
    formed_.assign(total_slots_, false);
    pending_.clear();
    next_in_order_ = 0;
    streamed_ = 0;
    blocked_ = false;
  }

  std::uint32_t slot_len(std::uint64_t slot) const {
    const std::uint64_t s = rings_->config().slot_size;
    return static_cast<std::uint32_t>(std::min<std::uint64_t>(s, kernel_->result_bytes_total - slot * s));
  }

  void produce(const CcmTask& t) {
    if (t.result_bytes == 0) return;
    const std::uint64_t s = rings_->config().slot_size;
    const std::uint64_t b = t.offset, e = t.offset + t.result_bytes;
    bool any = false;
    for (std::uint64_t slot = b / s; slot * s < e; ++slot) {
      const std::uint64_t lo = std::max(b, slot * s), hi = std::min(e, slot * s + s);
      produced_[slot] += static_cast<std::uint32_t>(hi - lo);
      if (produced_[slot] > slot_len(slot))
        throw InvariantViolation("result bytes written twice into slot " + std::to_string(slot));
      if (produced_[slot] == slot_len(slot)) {
        formed_[slot] = true;
        if (cfg_.ooo) pending_.push_back(slot);
        any = true;
      }
    }
    if (any) executor_tick();
  }

  std::uint64_t available() const {
    if (cfg_.ooo) return pending_.size();
    std::uint64_t n = 0;
    while (next_in_order_ + n < total_slots_ && formed_[next_in_order_ + n]) ++n;
    return n;
  }

  // ---- DMA executor -----------------------------------------------------
  void executor_tick() {
    while (true) {
      const std::uint64_t avail = available();
      if (avail == 0) break;
      if (avail < cfg_.sf && !compute_done_) break;
      const auto n = static_cast<std::uint32_t>(std::min<std::uint64_t>(avail, cfg_.sf));
      auto res = view_.reserve(n, n);
      if (!res) {
        blocked_ = true;
        engine_.note(self_, "ring.blocked", n);
        break;
      }
      std::vector<MetadataRecord> recs;
      recs.reserve(n);
      for (std::uint32_t k = 0; k < n; ++k) {
        std::uint64_t slot;
        if (cfg_.ooo) {
          slot = pending_.front();
          pending_.pop_front();
        } else {
          slot = next_in_order_++;
        }
        MetadataRecord r;
        r.seq = record_seq_++;
        r.payload_slot = static_cast<std::uint32_t>((res->first_payload + k) % view_.capacity());
        r.result_offset = slot * rings_->config().slot_size;
        r.length = slot_len(slot);
        r.kernel_id = kernel_->kernel_id;
        r.last = (streamed_ + k + 1 == total_slots_);
        recs.push_back(r);
      }
      streamed_ += n;
      const std::uint64_t bytes = 2ull * n * rings_->config().slot_size;
      const std::int64_t xid = xfer_id_++;
      engine_.note(self_, "ring.reserve", static_cast<std::int64_t>(view_.payload_tail()),
                   static_cast<std::int64_t>(view_.meta_tail()), n);
      engine_.note(self_, "xfer.begin", xid, static_cast<std::int64_t>(bytes));
      fabric_.dma_write(kResultRegion, bytes, [this, r = *res, recs = std::move(recs), xid, bytes] {
        rings_->commit(r, recs);
        engine_.note(self_, "ring.commit", static_cast<std::int64_t>(rings_->payload_tail()),
                     static_cast<std::int64_t>(rings_->meta_tail()), r.count);
        engine_.note(self_, "xfer.end", xid, static_cast<std::int64_t>(bytes));
        if (on_delivery_) on_delivery_();
      });
    }
    if (compute_done_ && streamed_ == total_slots_ && active_) complete();
  }

  Engine& engine_;
  Fabric& fabric_;
  CcmConfig cfg_;
  Mechanism mech_;
  HostRings* rings_;
  DeviceRingView view_;
  ActorId self_ = 0;
  DeliveryHook on_delivery_;

  MicrothreadPool pool_;
  std::deque<std::uint32_t> queue_;
  SimTime dispatcher_free_ = 0;
  SimTime mem_free_ = 0;
  SimTime wakeup_at_ = -1;

  bool active_ = false;
  const KernelDescriptor* kernel_ = nullptr;
  std::function<void()> on_done_;
  SimTime launched_at_ = 0;
  std::size_t remaining_ = 0;
  bool compute_done_ = false;
  bool mailbox_done_ = false;

  std::uint64_t total_slots_ = 0;
  std::vector<std::uint32_t> produced_;
  std::vector<bool> formed_;
  std::deque<std::uint64_t> pending_;
  std::uint64_t next_in_order_ = 0;
  std::uint64_t streamed_ = 0;
  bool blocked_ = false;
  std::uint64_t record_seq_ = 0;
  std::int64_t xfer_id_ = 0;
};

}  // namespace ccmsim
