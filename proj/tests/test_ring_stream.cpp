#include <gtest/gtest.h>

#include <deque>
#include <random>
#include <set>

#include "ccmsim/ring_stream.hpp"

using namespace ccmsim;

namespace {

std::vector<MetadataRecord> records_for(const Reservation& r, std::uint32_t capacity, std::uint64_t first_offset,
                                        std::uint32_t slot = 32) {
  std::vector<MetadataRecord> v;
  for (std::uint32_t k = 0; k < r.count; ++k) {
    MetadataRecord m;
    m.seq = r.first_payload + k;
    m.payload_slot = static_cast<std::uint32_t>((r.first_payload + k) % capacity);
    m.result_offset = first_offset + k * slot;
    m.length = slot;
    v.push_back(m);
  }
  return v;
}

// device view + host rings + a one-step commit
struct Pair {
  explicit Pair(std::uint32_t cap) : dev(cap), host(RingConfig{cap, 32}) {}
  DeviceRingView dev;
  HostRings host;
  std::uint64_t next_offset = 0;

  bool push(std::uint32_t n) {
    auto r = dev.reserve(n, n);
    if (!r) return false;
    host.commit(*r, records_for(*r, host.capacity(), next_offset));
    next_offset += 32ULL * n;
    return true;
  }
};

}  // namespace

TEST(DeviceView, ReserveOnEmptyRings) {
  DeviceRingView v(4);
  auto r = v.reserve(1, 1);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->first_payload, 0u);
  EXPECT_EQ(r->first_meta, 0u);
}

TEST(DeviceView, FullRingWouldBlock) {
  DeviceRingView v(4);
  v.seed(0, 4, 0, 4);
  EXPECT_FALSE(v.reserve(1, 1));
}

TEST(DeviceView, StaleHeadBlocksDespiteFreeSpace) {
  Pair p(4);
  for (int i = 0; i < 4; ++i) ASSERT_TRUE(p.push(1));
  for (const auto& m : p.host.fetch_ready())
    if (m.payload_slot < 3) p.host.consume_payload(m);
  EXPECT_EQ(p.host.advance_heads().first, 3u);  // true host head 3
  EXPECT_EQ(p.dev.local_payload_head(), 0u);
  EXPECT_FALSE(p.dev.reserve(1, 1));  // device has not heard about it yet
  p.dev.apply_flow_control(3, 4);
  EXPECT_TRUE(p.dev.reserve(1, 1));
}

TEST(DeviceView, ReserveFailureChangesNothing) {
  DeviceRingView v(4);
  v.seed(0, 3, 0, 1);
  EXPECT_FALSE(v.reserve(2, 2));
  EXPECT_EQ(v.payload_tail(), 3u);
  EXPECT_EQ(v.meta_tail(), 1u);
  EXPECT_THROW(v.reserve(0, 1), std::invalid_argument);
  EXPECT_THROW(v.reserve(5, 5), std::invalid_argument);
}

TEST(DeviceView, FlowControlIsMonotoneMax) {
  DeviceRingView v(1024);
  v.apply_flow_control(3, 4);
  v.apply_flow_control(5, 7);
  EXPECT_EQ(v.local_payload_head(), 5u);
  EXPECT_EQ(v.local_meta_head(), 7u);
  v.apply_flow_control(3, 4);  // reordered arrival
  EXPECT_EQ(v.local_payload_head(), 5u);
  EXPECT_EQ(v.local_meta_head(), 7u);
}

TEST(HostRings, CommitAdvancesMetaTail) {
  Pair p(8);
  EXPECT_TRUE(p.host.poll_meta_tail().empty());
  ASSERT_TRUE(p.push(1));
  EXPECT_EQ(p.host.meta_tail(), 1u);
  EXPECT_EQ(p.host.poll_meta_tail().size(), 1u);
}

TEST(HostRings, OutOfOrderOffsetsKeepTheirMapping) {
  HostRings h(RingConfig{8, 32});
  DeviceRingView d(8);
  for (std::uint64_t off : {2, 0, 1}) {
    auto r = d.reserve(1, 1);
    h.commit(*r, records_for(*r, 8, off * 32));
  }
  auto recs = h.fetch_ready();
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].payload_slot, 0u);
  EXPECT_EQ(recs[0].result_offset, 64u);
  EXPECT_EQ(recs[1].result_offset, 0u);
  EXPECT_EQ(recs[2].result_offset, 32u);
  EXPECT_EQ(h.consume_payload(recs[1]).offset, 0u);
}

TEST(HostRings, CommitsApplyInDeliveryOrderOnly) {
  HostRings h(RingConfig{8, 32});
  DeviceRingView d(8);
  auto a = *d.reserve(2, 2);
  auto b = *d.reserve(1, 1);
  EXPECT_THROW(h.commit(b, records_for(b, 8, 64)), InvariantViolation);
  h.commit(a, records_for(a, 8, 0));
  h.commit(b, records_for(b, 8, 64));
  EXPECT_EQ(h.meta_tail(), 3u);
}

TEST(HostRings, PollAndBatchFetch) {
  Pair p(16);
  for (int i = 0; i < 3; ++i) p.push(1);
  auto range = p.host.poll_meta_tail();
  EXPECT_EQ(range.size(), 3u);
  EXPECT_EQ(p.host.fetch_ready().size(), 3u);
  EXPECT_TRUE(p.host.poll_meta_tail().empty());
}

TEST(HostRings, WraparoundRange) {
  Pair p(1024);
  for (int i = 0; i < 1022; ++i) ASSERT_TRUE(p.push(1));
  for (const auto& m : p.host.fetch_ready()) p.host.consume_payload(m);
  p.host.advance_heads();
  p.dev.apply_flow_control(p.host.payload_head(), p.host.meta_head());
  ASSERT_TRUE(p.push(4));
  auto range = p.host.poll_meta_tail();
  EXPECT_EQ(range.begin, 1022u);
  EXPECT_EQ(range.end, 1026u);
  std::vector<std::uint32_t> phys;
  for (const auto& m : p.host.fetch_ready()) phys.push_back(m.payload_slot);
  EXPECT_EQ(phys, (std::vector<std::uint32_t>{1022, 1023, 0, 1}));
}

TEST(HostRings, GapAwareHead) {
  Pair p(8);
  p.push(3);
  auto recs = p.host.fetch_ready();
  p.host.consume_payload(recs[1]);
  EXPECT_EQ(p.host.advance_heads().first, 0u);  // gap at 0
  p.host.consume_payload(recs[0]);
  EXPECT_EQ(p.host.advance_heads().first, 2u);
  EXPECT_EQ(p.host.advance_heads().first, 2u);  // idempotent

  Pair q(8);
  q.push(3);
  auto r2 = q.host.fetch_ready();
  q.host.consume_payload(r2[0]);
  EXPECT_EQ(q.host.advance_heads().first, 1u);
}

TEST(HostRings, ConsumeTwiceOrUncommittedRejected) {
  Pair p(8);
  p.push(1);
  auto recs = p.host.fetch_ready();
  p.host.consume_payload(recs[0]);
  EXPECT_THROW(p.host.consume_payload(recs[0]), InvariantViolation);
  MetadataRecord bogus;
  bogus.payload_slot = 5;
  EXPECT_THROW(p.host.consume_payload(bogus), InvariantViolation);
}

TEST(HostRings, OverwriteOfLiveSlotRejected) {
  HostRings h(RingConfig{2, 32});
  DeviceRingView d(4);  // a device that believes the ring is bigger
  auto a = *d.reserve(2, 2);
  h.commit(a, records_for(a, 2, 0));
  auto b = *d.reserve(1, 1);
  auto recs = records_for(b, 2, 64);
  EXPECT_THROW(h.commit(b, recs), InvariantViolation);
}

// Brute force over every consumed-flag set of an 8-slot window.
TEST(GapAwareHeadProperty, MatchesFirstUnconsumedIndex) {
  for (unsigned mask = 0; mask < 256; ++mask) {
    auto consumed = [mask](std::uint64_t i) { return (mask >> i) & 1u; };
    std::uint64_t expect = 0;
    while (expect < 8 && consumed(expect)) ++expect;
    EXPECT_EQ(gap_aware_head(0, 8, consumed), expect) << "mask " << mask;
  }
  auto flags = [](std::uint64_t i) { return i == 0 || i == 1 || i == 3; };
  EXPECT_EQ(gap_aware_head(0, 4, flags), 2u);
}

// Random producer/consumer schedules with delayed and reordered flow control.
TEST(RingProperty, RandomScheduleKeepsInvariants) {
  for (unsigned seed = 1; seed <= 30; ++seed) {
    std::mt19937 rng(seed);
    const std::uint32_t cap = 1u << (1 + rng() % 4);
    Pair p(cap);
    std::vector<MetadataRecord> pool;
    std::deque<std::pair<std::uint64_t, std::uint64_t>> fc;
    std::set<std::uint64_t> consumed;
    std::uint64_t last_ph = 0;
    for (int step = 0; step < 2000; ++step) {
      switch (rng() % 5) {
        case 0: p.push(1 + rng() % std::min<std::uint32_t>(cap, 3)); break;
        case 1:
          for (auto& m : p.host.fetch_ready()) pool.push_back(m);
          break;
        case 2:
          if (!pool.empty()) {
            const std::size_t i = rng() % pool.size();
            p.host.consume_payload(pool[i]);
            consumed.insert(pool[i].seq);
            pool.erase(pool.begin() + static_cast<long>(i));
          }
          break;
        case 3: fc.push_back(p.host.advance_heads()); break;
        case 4:
          if (!fc.empty()) {
            const std::size_t i = rng() % fc.size();  // any order
            p.dev.apply_flow_control(fc[i].first, fc[i].second);
            fc.erase(fc.begin() + static_cast<long>(i));
          }
          break;
      }
      ASSERT_LE(p.host.payload_tail() - p.host.payload_head(), cap);
      ASSERT_LE(p.host.meta_tail() - p.host.meta_head(), cap);
      ASSERT_LE(p.dev.local_payload_head(), p.host.payload_head());
      ASSERT_LE(p.dev.local_meta_head(), p.host.meta_head());
      ASSERT_GE(p.host.payload_head(), last_ph);
      last_ph = p.host.payload_head();
      for (std::uint64_t i = 0; i < p.host.payload_head(); ++i) ASSERT_TRUE(consumed.count(i));
    }
  }
}
