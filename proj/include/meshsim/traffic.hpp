#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "meshsim/engine.hpp"
#include "meshsim/packet.hpp"
#include "meshsim/rng.hpp"
#include "meshsim/topology.hpp"

namespace meshsim {

struct Flow {
  std::uint32_t id = 0;
  NodeId src = 0;
  NodeId dst = 0;
  std::uint32_t packet_size = 640;
  double rate_pps = 0.0;
  SimTime start;
  SimTime stop;
};

struct FlowStats {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t delivered_bytes = 0;
  std::uint64_t duplicates = 0;
  double delay_sum_s = 0.0;
  std::vector<double> delay_reservoir;  // bounded sample for percentiles
};

struct RunSummary {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t revived = 0;     // delivered after a drop was recorded
  std::uint64_t late_drops = 0;  // drop reports after the fate was settled
  std::array<std::uint64_t, kDropCauseCount> drops{};
  double throughput_bps = 0.0;
  std::optional<double> avg_delay_s;  // absent when nothing was delivered
  double pdr = 0.0;

  std::uint64_t dropped_total() const {
    std::uint64_t t = 0;
    for (auto d : drops) t += d;
    return t;
  }
  bool conserved() const { return sent == delivered + dropped_total(); }
};

// Exact 1/rate injection times from start while t < stop.
std::vector<SimTime> generate_times(const Flow& flow);

// CBR generation over chosen source-destination pairs and the bookkeeping
// behind throughput / end-to-end delay. Every packet gets exactly one
// terminal fate, so accounting conservation is an identity.
class TrafficManager {
 public:
  using InjectFn = std::function<void(const DataPacket&)>;

  TrafficManager(Engine& engine, RngStream& stats_rng, std::uint8_t ttl);

  // Pairs drawn without replacement from ordered node pairs at graph
  // distance >= 2 hops (falling back to >= 1 when the graph is too small),
  // so multi-hop routing is actually exercised.
  static std::vector<Flow> plan_flows(const LinkTable& links, int node_count,
                                      int flow_count, double rate_pps,
                                      std::uint32_t packet_size, SimTime start,
                                      SimTime stop, RngStream& rng);

  void add_flow(const Flow& f);
  void start(InjectFn inject);

  void on_delivery(const DataPacket& pkt, SimTime now);
  void on_drop(const DataPacket& pkt, DropCause cause);

  // Assigns EndOfRun to everything still pending.
  void finalize();

  RunSummary summarize(double duration_s) const;
  const std::vector<Flow>& flows() const { return flows_; }
  const FlowStats& flow_stats(std::uint32_t flow_id) const {
    return stats_[flow_id];
  }

 private:
  enum class Fate : std::uint8_t { Pending = 0, Delivered = 1, Dropped = 2 };
  struct PacketFate {
    Fate fate = Fate::Pending;
    DropCause cause = DropCause::MacQueue;
  };

  void inject_next(std::uint32_t flow_idx, std::uint64_t k);
  void reservoir_push(FlowStats& fs, double delay_s);

  Engine& engine_;
  RngStream& stats_rng_;
  std::uint8_t ttl_;
  InjectFn inject_;
  std::vector<Flow> flows_;
  std::vector<FlowStats> stats_;
  std::vector<std::vector<PacketFate>> fates_;  // [flow][seq]
  std::array<std::uint64_t, kDropCauseCount> drops_{};
  std::uint64_t revived_ = 0;
  std::uint64_t late_drops_ = 0;
  static constexpr std::size_t kReservoirCap = 1000;
};

}  // namespace meshsim
