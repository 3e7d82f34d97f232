#pragma once

// Back-streaming data plane: a payload ring and a metadata ring living in host
// memory, written by device DMA and drained by the host.
//
// Indexes are free-running; the physical slot of index i is i % capacity.
// The device reserves against its own copies of the host heads, which only
// ever lag the true heads, so a stale copy can block a reservation but never
// permit an overwrite.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccmsim {

class InvariantViolation : public std::runtime_error {
 public:
  explicit InvariantViolation(const std::string& what) : std::runtime_error("invariant violated: " + what) {}
};

struct RingConfig {
  std::uint32_t capacity = 1024;  // slots per ring, power of two
  std::uint32_t slot_size = 32;   // bytes

  void validate() const {
    if (capacity == 0 || (capacity & (capacity - 1)) != 0)
      throw std::invalid_argument("ring: capacity must be a power of two");
    if (slot_size == 0) throw std::invalid_argument("ring: slot_size must be > 0");
  }
};

struct MetadataRecord {
  std::uint64_t seq = 0;            // production sequence within the run
  std::uint32_t payload_slot = 0;   // physical slot in the payload ring
  std::uint64_t result_offset = 0;  // byte offset in the kernel's result space
  std::uint32_t length = 0;         // bytes, <= slot_size
  std::uint32_t kernel_id = 0;
  bool last = false;  // final chunk of the kernel
};

// Slots handed out by one successful reservation, as free-running indexes.
struct Reservation {
  std::uint64_t first_payload = 0;
  std::uint64_t first_meta = 0;
  std::uint32_t count = 0;
};

// Device-side view of the rings: its own tails plus possibly stale heads.
class DeviceRingView {
 public:
  explicit DeviceRingView(std::uint32_t capacity) : capacity_(capacity) {}

  // Succeeds iff both rings have room against the local heads; on failure
  // nothing changes.
  std::optional<Reservation> reserve(std::uint32_t n_payload, std::uint32_t n_meta) {
    if (n_payload == 0 || n_meta == 0) throw std::invalid_argument("reserve: slot counts must be >= 1");
    if (n_payload > capacity_ || n_meta > capacity_)
      throw std::invalid_argument("reserve: request exceeds ring capacity");
    if (payload_tail_ + n_payload - local_payload_head_ > capacity_) return std::nullopt;
    if (meta_tail_ + n_meta - local_meta_head_ > capacity_) return std::nullopt;
    Reservation r{payload_tail_, meta_tail_, n_payload};
    payload_tail_ += n_payload;
    meta_tail_ += n_meta;
    return r;
  }

  // Monotone merge of a host flow-control message; stale messages are ignored.
  void apply_flow_control(std::uint64_t payload_head, std::uint64_t meta_head) {
    local_payload_head_ = std::max(local_payload_head_, payload_head);
    local_meta_head_ = std::max(local_meta_head_, meta_head);
  }

  std::uint64_t local_payload_head() const { return local_payload_head_; }
  std::uint64_t local_meta_head() const { return local_meta_head_; }
  std::uint64_t payload_tail() const { return payload_tail_; }
  std::uint64_t meta_tail() const { return meta_tail_; }
  std::uint32_t capacity() const { return capacity_; }

  // Test hook: start from an arbitrary (consistent) position.
  void seed(std::uint64_t local_payload_head, std::uint64_t payload_tail, std::uint64_t local_meta_head,
            std::uint64_t meta_tail) {
    local_payload_head_ = local_payload_head;
    payload_tail_ = payload_tail;
    local_meta_head_ = local_meta_head;
    meta_tail_ = meta_tail;
  }

 private:
  std::uint32_t capacity_;
  std::uint64_t local_payload_head_ = 0;
  std::uint64_t local_meta_head_ = 0;
  std::uint64_t payload_tail_ = 0;
  std::uint64_t meta_tail_ = 0;
};

// Contiguous-prefix rule: the first index at or after `head` whose consumed
// flag is clear. `consumed(i)` is queried for free-running indexes.
template <typename ConsumedFn>
std::uint64_t gap_aware_head(std::uint64_t head, std::uint64_t tail, ConsumedFn consumed) {
  while (head < tail && consumed(head)) ++head;
  return head;
}

// Host-side rings.
class HostRings {
 public:
  explicit HostRings(RingConfig cfg) : cfg_(cfg), slots_(cfg.capacity), meta_(cfg.capacity) {
    cfg_.validate();
  }

  const RingConfig& config() const { return cfg_; }
  std::uint32_t capacity() const { return cfg_.capacity; }

  std::uint64_t payload_head() const { return payload_head_; }
  std::uint64_t payload_tail() const { return payload_tail_; }
  std::uint64_t meta_head() const { return meta_head_; }
  std::uint64_t meta_tail() const { return meta_tail_; }

  // Applies one delivered DMA: payload slots are written and committed first,
  // then the metadata slots, then both tails move. The whole step is atomic
  // with respect to host readers.
  void commit(const Reservation& r, const std::vector<MetadataRecord>& records) {
    if (records.size() != r.count) throw InvariantViolation("commit: one metadata record per payload slot");
    if (r.first_payload != payload_tail_ || r.first_meta != meta_tail_)
      throw InvariantViolation("commit: slots were not reserved in order (payload " +
                               std::to_string(r.first_payload) + " vs tail " + std::to_string(payload_tail_) + ")");
    for (std::uint32_t k = 0; k < r.count; ++k) {
      const std::uint64_t idx = r.first_payload + k;
      if (idx >= payload_head_ + cfg_.capacity) throw InvariantViolation("overwrite of unconsumed payload slot");
      Slot& s = slots_[idx % cfg_.capacity];
      s.index = idx;
      s.committed = true;
      s.consumed = false;
      s.offset = records[k].result_offset;
      s.length = records[k].length;
    }
    for (std::uint32_t k = 0; k < r.count; ++k) {
      const std::uint64_t idx = r.first_meta + k;
      if (idx >= meta_head_ + cfg_.capacity) throw InvariantViolation("overwrite of unfetched metadata slot");
      if (records[k].payload_slot != (r.first_payload + k) % cfg_.capacity)
        throw InvariantViolation("metadata references a payload slot outside its DMA");
      meta_[idx % cfg_.capacity] = MetaSlot{idx, records[k]};
    }
    payload_tail_ += r.count;
    meta_tail_ += r.count;
  }

  struct MetaRange {
    std::uint64_t begin = 0;
    std::uint64_t end = 0;
    bool empty() const { return begin == end; }
    std::uint64_t size() const { return end - begin; }
  };

  // Reads the metadata tail: new records are [meta_head, meta_tail).
  MetaRange poll_meta_tail() const { return MetaRange{meta_head_, meta_tail_}; }

  // Moves every ready record to the caller and advances the metadata head.
  std::vector<MetadataRecord> fetch_ready() {
    std::vector<MetadataRecord> out;
    out.reserve(meta_tail_ - meta_head_);
    for (std::uint64_t i = meta_head_; i < meta_tail_; ++i) {
      const MetaSlot& m = meta_[i % cfg_.capacity];
      if (m.index != i) throw InvariantViolation("read of uncommitted metadata slot");
      out.push_back(m.record);
    }
    meta_head_ = meta_tail_;
    return out;
  }

  struct PayloadDescriptor {
    std::uint64_t offset;
    std::uint32_t length;
  };

  PayloadDescriptor consume_payload(const MetadataRecord& rec) {
    Slot& s = slots_.at(rec.payload_slot);
    if (!s.committed || s.index < payload_head_ || s.index >= payload_tail_ || s.offset != rec.result_offset)
      throw InvariantViolation("read of uncommitted payload slot " + std::to_string(rec.payload_slot));
    if (s.consumed) throw InvariantViolation("payload slot consumed twice");
    s.consumed = true;
    return PayloadDescriptor{s.offset, s.length};
  }

  bool consumed(std::uint64_t index) const {
    const Slot& s = slots_[index % cfg_.capacity];
    return s.index == index && s.consumed;
  }

  // Payload head moves over the longest consumed prefix; the metadata head
  // already sits at the last fetched index. Idempotent.
  std::pair<std::uint64_t, std::uint64_t> advance_heads() {
    const std::uint64_t h = gap_aware_head(payload_head_, payload_tail_, [this](std::uint64_t i) { return consumed(i); });
    for (std::uint64_t i = payload_head_; i < h; ++i) slots_[i % cfg_.capacity].committed = false;
    payload_head_ = h;
    return {payload_head_, meta_head_};
  }

  std::uint64_t occupancy() const { return payload_tail_ - payload_head_; }

 private:
  struct Slot {
    std::uint64_t index = ~0ULL;
    bool committed = false;
    bool consumed = false;
    std::uint64_t offset = 0;
    std::uint32_t length = 0;
  };
  struct MetaSlot {
    std::uint64_t index = ~0ULL;
    MetadataRecord record;
  };

  RingConfig cfg_;
  std::vector<Slot> slots_;
  std::vector<MetaSlot> meta_;
  std::uint64_t payload_head_ = 0;
  std::uint64_t payload_tail_ = 0;
  std::uint64_t meta_head_ = 0;
  std::uint64_t meta_tail_ = 0;
};

}  // namespace ccmsim
