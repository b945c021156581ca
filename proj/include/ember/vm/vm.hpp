// Decoupled access/execute machine: an access engine walking the traversal
// units and an execute engine running arms, joined by a bounded control
// queue of token bytes and a bounded data queue of typed slots.
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ember/common/memory.hpp"
#include "ember/dlc/dlc.hpp"
#include "ember/vm/cache.hpp"

namespace ember::vm {

struct VmConfig {
  std::size_t ctrl_capacity = 64;   // tokens
  std::size_t data_capacity = 512;  // slots, one per push
  CacheConfig cache;
  bool record_schedule = false;

  void check() const;
};

struct Counters {
  std::uint64_t ctrl_pushes = 0;  // tokens, the final done included
  std::uint64_t ctrl_pops = 0;
  std::uint64_t data_pushes = 0;  // slots
  std::uint64_t data_pops = 0;
  std::uint64_t data_elements = 0;  // lanes pushed, every lane of a vector slot counted
  std::uint64_t data_elements_popped = 0;
  std::uint64_t mem_requests_access = 0;   // one per stream evaluation or vector chunk
  std::uint64_t mem_requests_execute = 0;  // one per scalar or vector memory instruction
  std::uint64_t callback_invocations = 0;
  std::uint64_t store_stream_writes = 0;  // lanes
  CacheStats cache;

  bool operator==(const Counters&) const = default;
};

struct VmResult {
  Memory memory;
  Counters counters;
  std::map<std::string, std::uint64_t> arm_invocations;  // by token name
  std::string schedule;  // 'a'/'e' per engine step, when recorded
};

/// Round-robin between the engines. Throws VerifyError for programs that fail
/// verify_dlc, ConfigError for bad capacities or unbound inputs,
/// DeadlockError when both engines block, BoundsError on bad addresses.
VmResult run(const dlc::Program& p, const Memory& inputs, const VmConfig& cfg = {});

/// As run, but each step goes to an engine drawn from a generator seeded
/// with `seed` among those able to proceed.
VmResult run_interleaved(const dlc::Program& p, const Memory& inputs, const VmConfig& cfg, std::uint64_t seed);

}  // namespace ember::vm
