#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include "meshsim/engine.hpp"
#include "meshsim/packet.hpp"
#include "meshsim/rng.hpp"
#include "meshsim/sim_time.hpp"
#include "meshsim/topology.hpp"

namespace meshsim {

enum class FrameKind : std::uint8_t { Rts, Cts, Data, Ack, Bcast };

// Broadcast payloads are routing/probing messages; the MAC treats them as
// opaque. shared_ptr because one payload fans out to many receivers.
struct ProbePayload;
struct UpdatePayload;
using BcastContent = std::variant<std::shared_ptr<const ProbePayload>,
                                  std::shared_ptr<const UpdatePayload>>;

struct Frame {
  FrameKind kind = FrameKind::Bcast;
  NodeId src = 0;
  NodeId dst = kBroadcast;
  std::uint32_t size_bytes = 0;
  std::variant<std::monostate, DataPacket, BcastContent> payload;
};

enum class UnicastOutcome { Delivered, RtsFailed, DataFailed };

// Busy-time accumulation over one sampling window. Each instant of medium
// activity lands in exactly one bucket (priority Tx > Rx > RTS > CTS when
// states overlap), so rx+tx+rts+cts never exceeds the window length.
struct BusyLedger {
  SimTime rx;   // tau_Rx: DATA/ACK/BCAST heard
  SimTime tx;   // tau_Tx: own DATA/ACK/BCAST airtime
  SimTime rts;  // tau_RTS: RTS frames sent or heard
  SimTime cts;  // tau_CTS: CTS frames sent or heard
  SimTime window_start;

  SimTime busy() const { return rx + tx + rts + cts; }
};

// Records medium-activity intervals per node and integrates them into
// buckets at window close. Intervals spanning a boundary are split.
class LedgerRecorder {
 public:
  enum class Bucket : std::uint8_t { Tx = 0, Rx = 1, Rts = 2, Cts = 3 };

  void add(SimTime start, SimTime end, Bucket b);
  // Bucket totals over [from, upto), with the one-bucket-at-a-time priority.
  BusyLedger integrate(SimTime from, SimTime upto) const;
  // Integrates [window_start, window_start + width), then advances the
  // window and drops fully-consumed intervals.
  BusyLedger close_window(SimTime width);

  SimTime window_start() const { return window_start_; }
  void set_window_start(SimTime t) { window_start_ = t; }

 private:
  struct Interval {
    SimTime start, end;
    Bucket bucket;
  };
  std::vector<Interval> intervals_;
  SimTime window_start_;
};

struct MacConfig {
  SimTime difs = SimTime::from_us(50);
  SimTime sifs = SimTime::from_us(10);
  SimTime slot = SimTime::from_us(20);
  int cw_min = 32;
  int cw_max = 1024;
  int rts_retry_limit = 4;
  int data_retry_limit = 7;
  std::size_t queue_cap = 50;
  // Fixed control airtimes: 802.11b sizes at the 1 Mb/s basic rate.
  SimTime rts_airtime = SimTime::from_us(160);
  SimTime cts_airtime = SimTime::from_us(112);
  SimTime ack_airtime = SimTime::from_us(112);
  SimTime timeout_guard = SimTime::from_us(20);
  double broadcast_rate_bps = 1e6;  // airtime basis for BCAST frames
};

struct MacCounters {
  std::uint64_t tx_frames = 0;
  std::uint64_t rx_frames = 0;  // decoded, addressed to us or broadcast
  std::uint64_t queue_drops = 0;
  std::uint64_t collisions = 0;  // corrupted arrivals
  std::uint64_t retries = 0;
  std::uint64_t malformed = 0;  // undecodable payloads (ignored frames)
};

// Simplified 802.11 DCF over a unit-disk medium: physical carrier sense to
// cs_range, uniform backoff with CW doubling, RTS/CTS/DATA/ACK for every
// unicast, plain single-shot broadcasts, NAV from overheard RTS/CTS, and the
// per-node busy-time ledger. Collisions destroy all overlapping frames at a
// common hearer; there is no capture.
class Mac {
 public:
  using ProbeRxFn =
      std::function<void(NodeId at, const std::shared_ptr<const ProbePayload>&,
                         NodeId from)>;
  using UpdateRxFn =
      std::function<void(NodeId at, const std::shared_ptr<const UpdatePayload>&,
                         NodeId from)>;
  using DataRxFn = std::function<void(NodeId at, const DataPacket&, NodeId from)>;
  using OutcomeFn = std::function<void(NodeId at, NodeId peer,
                                       const DataPacket&, UnicastOutcome)>;
  using QueueDropFn = std::function<void(NodeId at, const Frame&)>;

  Mac(Engine& engine, const Topology& topo, const LinkTable& links,
      const MacConfig& cfg, RngStream& backoff_rng, RngStream& loss_rng);

  // Appends to the node's MAC queue; transmission is attempted when the
  // medium is idle and NAV has expired. Overflow drops the frame.
  void enqueue(NodeId node, Frame frame);

  bool queue_full(NodeId node) const;

  // Instantaneous Rx/Tx/NAV-pending state, for the 100 Hz validation sampler.
  bool sample_busy(NodeId node) const;
  // Cumulative ledger for the window in progress.
  BusyLedger current_ledger(NodeId node) const;
  // Completed window; resets accumulation for the next one.
  BusyLedger close_window(NodeId node, SimTime width);

  const MacCounters& counters(NodeId node) const { return nodes_[node].ctr; }
  const MacConfig& config() const { return cfg_; }

  void set_probe_rx(ProbeRxFn f) { on_probe_ = std::move(f); }
  void set_update_rx(UpdateRxFn f) { on_update_ = std::move(f); }
  void set_data_rx(DataRxFn f) { on_data_ = std::move(f); }
  void set_outcome(OutcomeFn f) { on_outcome_ = std::move(f); }
  void set_queue_drop(QueueDropFn f) { on_queue_drop_ = std::move(f); }

  // Raw transmission with no access procedure or queueing. Test hook for
  // scripted medium occupancy.
  void transmit_raw(NodeId node, Frame frame, double rate_bps);

 private:
  struct Arrival {
    std::uint64_t id;
    Frame frame;
    NodeId from;
    SimTime start, end;
    bool corrupted = false;
    bool loss_passed = false;  // Bernoulli draw for payload frames
  };

  enum class XPhase : std::uint8_t { Idle, WaitCts, WaitAck };

  struct NodeState {
    std::deque<Frame> queue;
    bool access_scheduled = false;
    int cw;
    int rts_retries = 0;
    int data_retries = 0;
    XPhase phase = XPhase::Idle;
    std::uint64_t pending_timeout = 0;
    bool timeout_armed = false;
    SimTime nav_until;
    SimTime busy_until;  // last sensed medium activity end
    SimTime tx_until;    // own transmission end
    std::vector<Arrival> arrivals;
    LedgerRecorder ledger;
    MacCounters ctr;
    std::uint16_t tx_seq = 0;               // dedup tag for DATA
    std::uint16_t cur_data_seq = 0;
    std::vector<std::int32_t> last_rx_seq;  // per sender, -1 = none
  };

  void schedule_access(NodeId n);
  void try_access(NodeId n);
  void start_head_frame(NodeId n);
  void transmit(NodeId n, const Frame& f, SimTime air, SimTime reserve_after,
                std::uint16_t data_seq);
  void finish_tx(NodeId n, Frame f, SimTime t0, SimTime t1,
                 std::uint16_t data_seq);
  void handle_arrival_end(NodeId at, std::uint64_t arrival_id,
                          SimTime reserve_after, std::uint16_t data_seq);
  void decode(NodeId at, const Frame& f, NodeId from, std::uint16_t data_seq,
              SimTime rts_reserve);
  void cts_timeout(NodeId n);
  void ack_timeout(NodeId n);
  void finish_exchange(NodeId n, UnicastOutcome outcome);
  SimTime data_airtime(NodeId a, NodeId b, std::uint32_t bytes) const;
  static LedgerRecorder::Bucket bucket_for(FrameKind k, bool transmitter);

  Engine& engine_;
  const Topology& topo_;
  const LinkTable& links_;
  MacConfig cfg_;
  RngStream& backoff_rng_;
  RngStream& loss_rng_;
  std::vector<NodeState> nodes_;
  std::vector<std::vector<NodeId>> cs_neighbors_;
  std::uint64_t next_arrival_id_ = 0;

  ProbeRxFn on_probe_;
  UpdateRxFn on_update_;
  DataRxFn on_data_;
  OutcomeFn on_outcome_;
  QueueDropFn on_queue_drop_;
};

}  // namespace meshsim
