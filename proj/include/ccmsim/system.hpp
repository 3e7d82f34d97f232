#pragma once

// Wires engine, fabric, rings, device and host together for one run.

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccmsim/ccm.hpp"
#include "ccmsim/fabric.hpp"
#include "ccmsim/host.hpp"
#include "ccmsim/ring_stream.hpp"
#include "ccmsim/sim_core.hpp"
#include "ccmsim/types.hpp"
#include "ccmsim/workload.hpp"

namespace ccmsim {

struct SystemConfig {
  Mechanism mechanism = Mechanism::KAI;
  FabricConfig fabric;
  RingConfig ring;
  CcmConfig ccm;
  HostConfig host;
  std::uint64_t event_cap = 1'000'000'000ULL;

  void validate() const {
    fabric.validate();
    ring.validate();
    ccm.validate();
    host.validate();
    if (is_streaming(mechanism) && ccm.sf > ring.capacity)
      throw std::invalid_argument("sf must not exceed ring capacity");
  }
};

struct RunResult {
  Mechanism mechanism = Mechanism::KAI;
  SimTime e2e = 0;
  std::uint64_t events = 0;
  std::vector<TraceRecord> trace;
  std::vector<LinkTransfer> transfers;
  std::vector<std::string> actors;  // indexed by ActorId
  std::uint32_t host_threads = 0;
  std::uint32_t ccm_threads = 0;
};

inline RunResult run_system(const SystemConfig& cfg, const TaskGraph& g) {
  cfg.validate();
  validate(g);
  Engine engine;
  engine.set_tracing(true);
  engine.set_event_cap(cfg.event_cap);
  Fabric fabric(engine, cfg.fabric);
  std::unique_ptr<HostRings> rings;
  if (is_streaming(cfg.mechanism)) {
    rings = std::make_unique<HostRings>(cfg.ring);
    fabric.register_host_region(kResultRegion);
  }
  CcmDevice ccm(engine, fabric, cfg.ccm, cfg.mechanism, rings.get());
  Host host(engine, fabric, ccm, rings.get(), cfg.host, cfg.mechanism);
  host.start(g);
  engine.run_until_idle();
  if (!host.done()) throw SimulationError("run stalled before the last host task finished");

  RunResult r;
  r.mechanism = cfg.mechanism;
  r.e2e = host.end_time();
  r.events = engine.dispatched();
  r.actors = engine.actor_names();
  r.trace = engine.take_trace();
  r.transfers = fabric.transfers();
  r.host_threads = cfg.host.threads();
  r.ccm_threads = cfg.ccm.threads();
  return r;
}

}  // namespace ccmsim
