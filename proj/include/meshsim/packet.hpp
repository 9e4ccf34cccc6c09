#pragma once

#include <cstdint>

#include "meshsim/sim_time.hpp"
#include "meshsim/topology.hpp"

namespace meshsim {

// One CBR payload packet, carried hop by hop in DATA frames.
struct DataPacket {
  std::uint32_t flow = 0;
  std::uint32_t seq = 0;  // per-flow packet number
  NodeId src = 0;
  NodeId dst = 0;
  std::uint32_t size_bytes = 0;
  SimTime created_at;
  std::uint8_t ttl = 0;
};

// Every packet ends in exactly one terminal account, so
// sent == delivered + sum(drops) holds identically at the end of a run.
enum class DropCause : std::uint8_t {
  MacQueue = 0,      // MAC queue overflow
  NoRoute = 1,       // no (reachable) routing entry
  SettleBuffer = 2,  // settling buffer overflow
  Retries = 3,       // unicast retry limit exhausted
  Ttl = 4,           // hop limit exceeded
  EndOfRun = 5,      // still queued or in flight at t_end
};
inline constexpr int kDropCauseCount = 6;

const char* drop_cause_name(DropCause c);

}  // namespace meshsim
