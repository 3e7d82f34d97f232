#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccmsim {

enum class Mechanism { RP, BS, KAI, KAI_Interrupt };
enum class SchedulerPolicy { FIFO, RR };

inline const char* to_string(Mechanism m) {
  switch (m) {
    case Mechanism::RP: return "rp";
    case Mechanism::BS: return "bs";
    case Mechanism::KAI: return "kai";
    case Mechanism::KAI_Interrupt: return "kai-int";
  }
  return "?";
}

inline const char* to_string(SchedulerPolicy p) { return p == SchedulerPolicy::FIFO ? "fifo" : "rr"; }

inline std::optional<Mechanism> parse_mechanism(std::string_view s) {
  if (s == "rp") return Mechanism::RP;
  if (s == "bs") return Mechanism::BS;
  if (s == "kai") return Mechanism::KAI;
  if (s == "kai-int" || s == "kai_interrupt") return Mechanism::KAI_Interrupt;
  return std::nullopt;
}

inline std::optional<SchedulerPolicy> parse_scheduler(std::string_view s) {
  if (s == "fifo") return SchedulerPolicy::FIFO;
  if (s == "rr") return SchedulerPolicy::RR;
  return std::nullopt;
}

inline bool is_streaming(Mechanism m) { return m == Mechanism::KAI || m == Mechanism::KAI_Interrupt; }

// Identical µthreads grouped into units. FIFO takes the lowest free index;
// RR rotates unit-major, so consecutive picks land on different units.
class MicrothreadPool {
 public:
  MicrothreadPool(std::uint32_t units, std::uint32_t per_unit, SchedulerPolicy policy)
      : units_(units), per_unit_(per_unit), policy_(policy), busy_(units * per_unit, false) {}

  std::uint32_t size() const { return units_ * per_unit_; }
  std::uint32_t free() const { return size() - busy_count_; }
  bool busy(std::uint32_t th) const { return busy_[th]; }

  std::optional<std::uint32_t> acquire() {
    const std::uint32_t n = size();
    for (std::uint32_t k = 0; k < n; ++k) {
      std::uint32_t th;
      if (policy_ == SchedulerPolicy::FIFO) {
        th = k;
      } else {
        const std::uint32_t pos = (cursor_ + k) % n;
        th = (pos % units_) * per_unit_ + pos / units_;
        if (!busy_[th]) cursor_ = (pos + 1) % n;
      }
      if (!busy_[th]) {
        busy_[th] = true;
        ++busy_count_;
        return th;
      }
    }
    return std::nullopt;
  }

  void release(std::uint32_t th) {
    busy_[th] = false;
    --busy_count_;
  }

 private:
  std::uint32_t units_, per_unit_;
  SchedulerPolicy policy_;
  std::vector<bool> busy_;
  std::uint32_t busy_count_ = 0;
  std::uint32_t cursor_ = 0;
};

}  // namespace ccmsim
