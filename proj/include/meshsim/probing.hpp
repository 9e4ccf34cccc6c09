#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "meshsim/engine.hpp"
#include "meshsim/mac.hpp"
#include "meshsim/rng.hpp"
#include "meshsim/topology.hpp"

namespace meshsim {

// What rides inside every probe broadcast: how many probes the origin heard
// from each neighbor over the last window, plus the origin's interference
// for its last completed window. The simulated frame is always 134 bytes no
// matter how large this logical payload grows.
struct ProbePayload {
  NodeId origin = 0;
  std::vector<std::pair<NodeId, std::int32_t>> counts;  // ascending NodeId
  double i_recv = 0.0;  // receiver-role interference (Eq. 5 form)
};

inline constexpr std::uint32_t kProbeBytes = 134;

enum class InterferenceRole { Receiver, Sender };

// Busy fraction of a completed window. Receiver role charges rx+rts+cts;
// sender role additionally charges tx. Clamped to [0, 1].
double node_interference(const BusyLedger& ledger, InterferenceRole role,
                         SimTime tau_t);

struct ProbingConfig {
  SimTime probe_interval = SimTime::from_us(1'000'000);
  SimTime window = SimTime::from_us(10'000'000);  // tau_t
  double jitter_frac = 0.10;
  int dead_windows = 3;  // empty windows before a neighbor counts as dead
};

// The measurement plane: periodic jittered probe broadcasts, sliding-window
// delivery counting in both directions, interference piggybacking, and
// busy-window bookkeeping for every node.
class ProbePlane {
 public:
  using WindowCloseFn = std::function<void(NodeId, const BusyLedger&)>;
  using NeighborDeadFn = std::function<void(NodeId, NodeId)>;
  using NeighborRevivedFn = std::function<void(NodeId, NodeId)>;

  ProbePlane(Engine& engine, Mac& mac, const LinkTable& links, int node_count,
             const ProbingConfig& cfg, RngStream& jitter_rng);

  // Schedules the probe chains and the shared window-close cadence.
  void start();

  // Builds this node's probe frame (134 bytes on air).
  Frame emit_probe(NodeId node);

  void on_probe(NodeId at, const std::shared_ptr<const ProbePayload>& p,
                NodeId from);

  // Probes heard *from* the neighbor over the window (their transmissions
  // toward us), count / expected, clamped to [0, 1].
  double delivery_forward(NodeId node, NodeId neighbor, SimTime now) const;
  // The neighbor's piggybacked count of *our* probes.
  double delivery_reverse(NodeId node, NodeId neighbor) const;

  double neighbor_interference(NodeId node, NodeId neighbor) const;
  double own_interference_recv(NodeId node) const;
  double own_interference_send(NodeId node) const;

  bool neighbor_alive(NodeId node, NodeId neighbor, SimTime now) const;

  int expected_per_window() const { return expected_; }
  std::uint64_t malformed_count() const { return malformed_; }

  void set_window_close(WindowCloseFn f) { on_close_ = std::move(f); }
  void set_neighbor_dead(NeighborDeadFn f) { on_dead_ = std::move(f); }
  void set_neighbor_revived(NeighborRevivedFn f) { on_revived_ = std::move(f); }

  const ProbingConfig& config() const { return cfg_; }

 private:
  struct NeighborRec {
    std::deque<std::int64_t> recv_us;  // pruned to (now - w, now]
    std::int32_t piggy_count = -1;     // their count of our probes
    double piggy_i = 0.0;
    SimTime last_heard = SimTime::from_us(std::numeric_limits<std::int64_t>::min());
    bool ever_heard = false;
    bool dead = false;
  };
  struct NodeRec {
    std::vector<NeighborRec> nb;
    double i_recv = 0.0;
    double i_send = 0.0;
  };

  void schedule_probe(NodeId n, SimTime at);
  void close_windows();
  void prune(NeighborRec& r, SimTime now) const;

  Engine& engine_;
  Mac& mac_;
  const LinkTable& links_;
  ProbingConfig cfg_;
  RngStream& jitter_;
  std::vector<NodeRec> nodes_;
  int expected_;
  std::uint64_t malformed_ = 0;

  WindowCloseFn on_close_;
  NeighborDeadFn on_dead_;
  NeighborRevivedFn on_revived_;
};

}  // namespace meshsim
