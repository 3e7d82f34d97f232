#pragma once

// Deterministic discrete-event engine.
//
// Time is an integer count of picoseconds. Pending events are dispatched in
// ascending (fire_at, seq) order, so events scheduled for the same instant run
// in the order they were scheduled. Every dispatch, and every annotation an
// actor records through note(), becomes one trace record.

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ccmsim {

using SimTime = std::int64_t;  // picoseconds

inline constexpr SimTime kPicosecond = 1;
inline constexpr SimTime kNanosecond = 1'000;
inline constexpr SimTime kMicrosecond = 1'000'000;
inline constexpr SimTime kMillisecond = 1'000'000'000;

// Period of one clock cycle, truncated to whole picoseconds (3 GHz -> 333 ps).
constexpr SimTime cycle_ps(double freq_hz) {
  return static_cast<SimTime>(1e12 / freq_hz);
}

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ActorId = std::uint32_t;
using EventId = std::uint64_t;

struct TraceRecord {
  SimTime fire_at = 0;
  std::uint64_t seq = 0;
  ActorId target = 0;
  std::string kind;
  // Kind-specific integer arguments (unit index, byte count, ring index...).
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t c = 0;
};

class Engine {
 public:
  using Handler = std::function<void()>;

  explicit Engine(std::uint64_t event_cap = 1'000'000'000ULL) : event_cap_(event_cap) {}

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  ActorId register_actor(std::string name) {
    actor_names_.push_back(std::move(name));
    return static_cast<ActorId>(actor_names_.size() - 1);
  }

  const std::string& actor_name(ActorId id) const { return actor_names_.at(id); }
  const std::vector<std::string>& actor_names() const { return actor_names_; }

  SimTime now() const { return now_; }
  bool finished() const { return finished_; }
  std::uint64_t dispatched() const { return dispatched_; }
  std::size_t pending() const { return queue_.size(); }

  void set_event_cap(std::uint64_t cap) { event_cap_ = cap; }
  void set_tracing(bool on) { tracing_ = on; }
  bool tracing() const { return tracing_; }

  EventId schedule(ActorId target, SimTime delay, std::string kind, Handler fn) {
    if (delay < 0) throw std::invalid_argument("schedule: negative delay");
    if (finished_) throw std::logic_error("schedule: engine already finished");
    const std::uint64_t seq = next_seq_++;
    const SimTime at = now_ + delay;
    queue_.emplace(Key{at, seq}, Pending{target, std::move(kind), std::move(fn)});
    fire_time_.emplace(seq, at);
    return seq;
  }

  // Absolute-time variant; `at` must not lie in the past.
  EventId schedule_at(ActorId target, SimTime at, std::string kind, Handler fn) {
    return schedule(target, at - now_, std::move(kind), std::move(fn));
  }

  bool cancel(EventId id) {
    auto it = fire_time_.find(id);
    if (it == fire_time_.end()) return false;
    queue_.erase(Key{it->second, id});
    fire_time_.erase(it);
    return true;
  }

  bool is_pending(EventId id) const { return fire_time_.count(id) != 0; }

  // Records an annotation at the current time. Annotations share the event
  // sequence counter so the trace stays totally ordered.
  void note(ActorId target, std::string kind, std::int64_t a = 0, std::int64_t b = 0,
            std::int64_t c = 0) {
    const std::uint64_t seq = next_seq_++;
    if (tracing_) trace_.push_back(TraceRecord{now_, seq, target, std::move(kind), a, b, c});
  }

  SimTime run_until_idle() {
    while (!queue_.empty()) {
      if (dispatched_ >= event_cap_) {
        throw SimulationError("event cap of " + std::to_string(event_cap_) +
                              " dispatches exceeded at t=" + std::to_string(now_) +
                              " ps (possible livelock)");
      }
      auto node = queue_.extract(queue_.begin());
      const Key key = node.key();
      Pending ev = std::move(node.mapped());
      fire_time_.erase(key.seq);
      now_ = key.at;
      ++dispatched_;
      if (tracing_) trace_.push_back(TraceRecord{now_, key.seq, ev.target, ev.kind, 0, 0, 0});
      ev.fn();
    }
    finished_ = true;
    return now_;
  }

  const std::vector<TraceRecord>& trace() const { return trace_; }
  std::vector<TraceRecord> take_trace() { return std::move(trace_); }

  // One tab-separated line per record: fire_at_ps, seq, target, payload-kind.
  void write_trace(std::ostream& os) const {
    for (const auto& r : trace_) {
      os << r.fire_at << '\t' << r.seq << '\t' << actor_name(r.target) << '\t' << r.kind << '\n';
    }
  }

 private:
  struct Key {
    SimTime at;
    std::uint64_t seq;
    bool operator<(const Key& o) const { return at != o.at ? at < o.at : seq < o.seq; }
  };
  struct Pending {
    ActorId target;
    std::string kind;
    Handler fn;
  };

  std::map<Key, Pending> queue_;
  std::unordered_map<std::uint64_t, SimTime> fire_time_;
  std::vector<std::string> actor_names_;
  std::vector<TraceRecord> trace_;
  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t dispatched_ = 0;
  std::uint64_t event_cap_;
  bool tracing_ = false;
  bool finished_ = false;
};

}  // namespace ccmsim
