#pragma once

// CXL link model between the host and the computational memory device.
//
// Each direction is a FIFO serialization channel shared by every protocol:
// a message occupies its direction for ceil(bytes / bandwidth) and then takes
// half a protocol round trip to land. Requests with a reply (mem/io loads and
// stores) cost a full round trip; posted DMA writes and interrupts are one-way.

#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccmsim/sim_core.hpp"

namespace ccmsim {

inline constexpr double kGiB = 1024.0 * 1024.0 * 1024.0;

struct FabricConfig {
  SimTime mem_rtt = 70 * kNanosecond;
  SimTime io_rtt = 350 * kNanosecond;
  SimTime dma_prep = 500 * kNanosecond;
  SimTime interrupt_handling = 50 * kMicrosecond;
  double link_bandwidth = 32.0 * kGiB;  // bytes per second, per direction
  std::uint32_t cacheline = 64;

  void validate() const {
    if (mem_rtt < 0 || io_rtt < 0 || dma_prep < 0 || interrupt_handling < 0)
      throw std::invalid_argument("fabric: latencies must be >= 0");
    if (!(link_bandwidth > 0)) throw std::invalid_argument("fabric: link_bandwidth must be > 0");
    if (cacheline == 0) throw std::invalid_argument("fabric: cacheline must be > 0");
  }
};

enum class MessageKind { MemStore, MemLoad, IoWrite, IoRead, DmaPostedWrite, Interrupt, FlowControlStore };

inline const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::MemStore: return "mem_store";
    case MessageKind::MemLoad: return "mem_load";
    case MessageKind::IoWrite: return "io_write";
    case MessageKind::IoRead: return "io_read";
    case MessageKind::DmaPostedWrite: return "dma_write";
    case MessageKind::Interrupt: return "interrupt";
    case MessageKind::FlowControlStore: return "flow_control";
  }
  return "?";
}

enum class Direction { HostToDevice = 0, DeviceToHost = 1 };

// One serialized occupancy of a direction channel; used to audit bandwidth.
struct LinkTransfer {
  Direction dir;
  SimTime start;
  SimTime end;
  std::uint64_t bytes;
  MessageKind kind;
};

class Fabric {
 public:
  using Callback = std::function<void()>;
  // Invoked at the device when a request lands; the device answers by calling
  // the supplied reply function with the reply payload size.
  using ReplyFn = std::function<void(std::uint64_t reply_bytes)>;
  using ArrivalFn = std::function<void(ReplyFn reply)>;

  Fabric(Engine& engine, FabricConfig cfg) : engine_(engine), cfg_(cfg) {
    cfg_.validate();
    self_ = engine_.register_actor("fabric");
  }

  const FabricConfig& config() const { return cfg_; }
  ActorId id() const { return self_; }

  SimTime transfer_time(std::uint64_t bytes, double rate = 0) const {
    const double bw = (rate > 0 && rate < cfg_.link_bandwidth) ? rate : cfg_.link_bandwidth;
    return static_cast<SimTime>(std::ceil(static_cast<double>(bytes) * 1e12 / bw));
  }

  SimTime rtt(MessageKind k) const {
    switch (k) {
      case MessageKind::IoRead:
      case MessageKind::IoWrite:
      case MessageKind::DmaPostedWrite:
      case MessageKind::Interrupt: return cfg_.io_rtt;
      default: return cfg_.mem_rtt;
    }
  }

  void register_host_region(int region) { regions_.insert(region); }

  // Host-initiated request/reply exchange. Request bytes serialize on the
  // host-to-device channel, reply bytes on the device-to-host channel, at most
  // `reply_rate` bytes per second when given.
  void host_request(MessageKind kind, std::uint64_t req_bytes, ArrivalFn on_arrival, Callback on_complete,
                    double reply_rate = 0) {
    const SimTime half = rtt(kind) / 2;
    const SimTime other_half = rtt(kind) - half;
    const SimTime sent = occupy(Direction::HostToDevice, req_bytes, kind, 0);
    engine_.schedule_at(self_, sent + half, std::string(to_string(kind)) + ".arrive",
                        [this, kind, other_half, reply_rate, on_arrival = std::move(on_arrival),
                         on_complete = std::move(on_complete)]() mutable {
                          on_arrival([this, kind, other_half, reply_rate,
                                      on_complete = std::move(on_complete)](std::uint64_t reply_bytes) mutable {
                            const SimTime back = occupy(Direction::DeviceToHost, reply_bytes, kind, reply_rate);
                            engine_.schedule_at(self_, back + other_half, std::string(to_string(kind)) + ".reply",
                                                std::move(on_complete));
                          });
                        });
  }

  // Request answered immediately by the target (plain loads and stores).
  void send_mem(MessageKind kind, std::uint64_t bytes, Callback on_complete, double reply_rate = 0) {
    check_mem(kind);
    send_plain(kind, bytes, std::move(on_complete), reply_rate);
  }

  void send_io(MessageKind kind, std::uint64_t bytes, Callback on_complete) {
    if (kind != MessageKind::IoRead && kind != MessageKind::IoWrite)
      throw std::invalid_argument("send_io: kind must be IoRead or IoWrite");
    send_plain(kind, bytes, std::move(on_complete), 0);
  }

  // Posted device-to-host DMA write. Data becomes visible at the host after the
  // preparation time, its serialization and half an io round trip. Returns the
  // delivery time. No acknowledgment reaches any host-visible layer.
  SimTime dma_write(int region, std::uint64_t bytes, Callback on_delivered) {
    if (bytes == 0) throw std::invalid_argument("dma_write: zero-byte transfer");
    if (!regions_.count(region))
      throw std::invalid_argument("dma_write: destination region " + std::to_string(region) + " not registered");
    const SimTime ready = engine_.now() + cfg_.dma_prep;
    const SimTime done = occupy(Direction::DeviceToHost, bytes, MessageKind::DmaPostedWrite, 0, ready);
    const SimTime delivery = done + cfg_.io_rtt / 2;
    engine_.schedule_at(self_, delivery, "dma_write.deliver", std::move(on_delivered));
    return delivery;
  }

  // One-way interrupt message; the handler at the host becomes runnable after
  // half an io round trip.
  SimTime raise_interrupt(Callback at_host) {
    const SimTime arrive = engine_.now() + cfg_.io_rtt / 2;
    engine_.schedule_at(self_, arrive, "interrupt.arrive", std::move(at_host));
    return arrive;
  }

  const std::vector<LinkTransfer>& transfers() const { return transfers_; }

 private:
  static void check_mem(MessageKind kind) {
    if (kind != MessageKind::MemLoad && kind != MessageKind::MemStore && kind != MessageKind::FlowControlStore)
      throw std::invalid_argument("send_mem: kind must be MemLoad, MemStore or FlowControlStore");
  }

  void send_plain(MessageKind kind, std::uint64_t bytes, Callback on_complete, double reply_rate) {
    const bool data_back = (kind == MessageKind::MemLoad || kind == MessageKind::IoRead);
    host_request(
        kind, data_back ? 0 : bytes, [bytes, data_back](ReplyFn reply) { reply(data_back ? bytes : 0); },
        std::move(on_complete), reply_rate);
  }

  // Reserves the channel and returns the time the last byte leaves.
  SimTime occupy(Direction dir, std::uint64_t bytes, MessageKind kind, double rate, SimTime earliest = -1) {
    SimTime& busy = busy_until_[static_cast<int>(dir)];
    const SimTime start = std::max({engine_.now(), busy, earliest});
    if (bytes == 0) return start;
    busy = start + transfer_time(bytes, rate);
    transfers_.push_back(LinkTransfer{dir, start, busy, bytes, kind});
    return busy;
  }

  Engine& engine_;
  FabricConfig cfg_;
  ActorId self_ = 0;
  SimTime busy_until_[2] = {0, 0};
  std::set<int> regions_;
  std::vector<LinkTransfer> transfers_;
};

}  // namespace ccmsim
