#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "meshsim/engine.hpp"
#include "meshsim/metrics.hpp"
#include "meshsim/packet.hpp"
#include "meshsim/rng.hpp"
#include "meshsim/topology.hpp"

namespace meshsim {

struct UpdateEntry {
  NodeId dest = 0;
  std::uint32_t seq = 0;  // even = reachable, odd = unreachable marker
  double cost = 0.0;      // advertised total cost from the origin
  std::uint16_t hops = 0;
};

// Routing update riding a MAC broadcast. Incrementals carry only entries
// changed since the last advertisement and are capped at one NPDU; the
// trigger path never sends a full dump ("no-dumps").
struct UpdatePayload {
  enum class Kind : std::uint8_t { FullDump, Incremental };
  Kind kind = Kind::FullDump;
  NodeId origin = 0;
  std::vector<UpdateEntry> entries;
};

// Wire size of an update frame; entries are what the NPDU cap counts.
std::uint32_t update_frame_bytes(const UpdatePayload& msg);

struct RouteEntry {
  NodeId dest = 0;
  NodeId next_hop = 0;
  std::uint32_t seq = 0;
  double adv_cost = 0.0;    // next hop's advertised cost to dest
  double total_cost = 0.0;  // adv_cost + our link cost to next_hop
  std::uint16_t hops = 0;
  SimTime install_time;
  SimTime settling_until;  // > now while settling
  bool reachable = false;
  bool changed = false;  // since last advertisement
  bool valid = false;

  bool settling(SimTime now) const { return settling_until > now; }
};

struct DsdvConfig {
  SimTime full_dump_period = SimTime::from_us(15'000'000);
  double wst_alpha = 0.875;
  SimTime wst_initial = SimTime::from_us(1'000'000);
  SimTime trigger_min_interval = SimTime::from_us(1'000'000);
  std::size_t npdu_entries = 100;
  std::size_t settle_buffer_cap = 20;
  int ttl = 32;
  double cost_change_rel = 1e-6;  // below this a cost move is not a "change"
  SimTime first_dump_base = SimTime::from_us(1'500'000);
  SimTime first_dump_jitter = SimTime::from_us(1'000'000);
  SimTime dump_jitter = SimTime::from_us(500'000);
};

// One node's DSDV routing plane: sequence-numbered distance-vector table,
// periodic full dumps, triggered incrementals, weighted-settling-time
// damping, and the data-holding behavior tied to settling routes.
class DsdvRouter {
 public:
  // Cost of our link to a neighbor under the active metric (+inf if down).
  using LinkCostFn = std::function<double(NodeId neighbor)>;
  using SendFn = std::function<void(const UpdatePayload&)>;
  using ForwardFn = std::function<void(NodeId next_hop, const DataPacket&)>;
  using DeliverFn = std::function<void(const DataPacket&)>;
  using DropFn = std::function<void(const DataPacket&, DropCause)>;

  DsdvRouter(NodeId self, int node_count, const DsdvConfig& cfg,
             Engine& engine, RngStream& jitter_rng);

  void set_link_cost(LinkCostFn f) { link_cost_ = std::move(f); }
  void set_send(SendFn f) { send_ = std::move(f); }
  void set_forward(ForwardFn f) { forward_ = std::move(f); }
  void set_deliver(DeliverFn f) { deliver_ = std::move(f); }
  void set_drop(DropFn f) { drop_ = std::move(f); }

  // Installs the self route and schedules the periodic dump chain.
  void start();

  void on_update(const UpdatePayload& msg, NodeId from, SimTime now);
  void on_link_break(NodeId neighbor, SimTime now);

  // A packet to route: generated here (at_origin) or received off the MAC.
  // Relays spend one TTL unit per hop.
  void handle_packet(DataPacket pkt, SimTime now, bool at_origin);

  // Re-prices installed routes from current link costs (window close).
  void refresh_link_costs(SimTime now);

  const RouteEntry* route(NodeId dest) const;
  const std::vector<RouteEntry>& table() const { return table_; }
  std::uint32_t own_seq() const { return own_seq_; }
  std::size_t buffered_count() const { return buffer_.size(); }

  std::uint64_t full_dumps_sent = 0;
  std::uint64_t incrementals_sent = 0;

 private:
  struct WstState {
    double est_us;
    std::uint32_t cur_seq = 0;
    std::int64_t first_us = 0;
    std::int64_t last_change_us = 0;
    bool tracking = false;
  };

  void periodic_dump();
  void schedule_trigger(SimTime now);
  void run_trigger();
  void adopt(RouteEntry& e, NodeId from, const UpdateEntry& ue, double total,
             SimTime now, bool damp);
  void note_epoch(NodeId dest, std::uint32_t seq, bool adopted, SimTime now);
  SimTime settle_span(NodeId dest) const;
  void arm_settle_event(NodeId dest, SimTime at);
  void flush_buffer(NodeId dest, SimTime now);

  NodeId self_;
  DsdvConfig cfg_;
  Engine& engine_;
  RngStream& jitter_;
  std::vector<RouteEntry> table_;  // indexed by dest
  std::vector<WstState> wst_;
  std::uint32_t own_seq_ = 0;
  SimTime last_trigger_ = SimTime::from_us(-1'000'000'000);
  bool trigger_scheduled_ = false;
  std::deque<DataPacket> buffer_;  // packets held on settling routes

  LinkCostFn link_cost_;
  SendFn send_;
  ForwardFn forward_;
  DeliverFn deliver_;
  DropFn drop_;
};

}  // namespace meshsim
