#include "meshsim/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace meshsim {

const char* drop_cause_name(DropCause c) {
  switch (c) {
    case DropCause::MacQueue:
      return "mac_queue";
    case DropCause::NoRoute:
      return "no_route";
    case DropCause::SettleBuffer:
      return "settle_buffer";
    case DropCause::Retries:
      return "retries";
    case DropCause::Ttl:
      return "ttl";
    case DropCause::EndOfRun:
      return "end_of_run";
  }
  return "?";
}

std::vector<SimTime> generate_times(const Flow& flow) {
  if (flow.rate_pps <= 0.0)
    throw std::invalid_argument("flow rate must be > 0");
  std::vector<SimTime> out;
  const auto step =
      SimTime::from_us(std::llround(1e6 / flow.rate_pps));
  for (SimTime t = flow.start; t < flow.stop; t += step) out.push_back(t);
  return out;
}

TrafficManager::TrafficManager(Engine& engine, RngStream& stats_rng,
                               std::uint8_t ttl)
    : engine_(engine), stats_rng_(stats_rng), ttl_(ttl) {}

std::vector<Flow> TrafficManager::plan_flows(const LinkTable& links,
                                             int node_count, int flow_count,
                                             double rate_pps,
                                             std::uint32_t packet_size,
                                             SimTime start, SimTime stop,
                                             RngStream& rng) {
  // BFS hop distances over the link graph.
  std::vector<std::vector<int>> dist(node_count,
                                     std::vector<int>(node_count, -1));
  for (NodeId s = 0; s < static_cast<NodeId>(node_count); ++s) {
    std::queue<NodeId> q;
    dist[s][s] = 0;
    q.push(s);
    while (!q.empty()) {
      const NodeId u = q.front();
      q.pop();
      for (NodeId v : links.neighbors(u)) {
        if (dist[s][v] < 0) {
          dist[s][v] = dist[s][u] + 1;
          q.push(v);
        }
      }
    }
  }
  std::vector<std::pair<NodeId, NodeId>> multi, single;
  for (NodeId u = 0; u < static_cast<NodeId>(node_count); ++u) {
    for (NodeId v = 0; v < static_cast<NodeId>(node_count); ++v) {
      if (u == v || dist[u][v] < 0) continue;
      (dist[u][v] >= 2 ? multi : single).emplace_back(u, v);
    }
  }
  std::vector<Flow> flows;
  auto draw = [&](std::vector<std::pair<NodeId, NodeId>>& pool) {
    while (!pool.empty() && static_cast<int>(flows.size()) < flow_count) {
      const std::size_t k = rng.below(pool.size());
      const auto [src, dst] = pool[k];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
      Flow f;
      f.id = static_cast<std::uint32_t>(flows.size());
      f.src = src;
      f.dst = dst;
      f.packet_size = packet_size;
      f.rate_pps = rate_pps;
      // Phase offset desynchronizes flows; injections stay exactly periodic.
      f.start = start + SimTime::from_us(static_cast<std::int64_t>(
                            rng.uniform01() * 1e6 / rate_pps));
      f.stop = stop;
      flows.push_back(f);
    }
  };
  draw(multi);
  draw(single);  // fallback for graphs with no multi-hop pairs
  return flows;
}

void TrafficManager::add_flow(const Flow& f) {
  Flow g = f;
  g.id = static_cast<std::uint32_t>(flows_.size());
  flows_.push_back(g);
}

void TrafficManager::start(InjectFn inject) {
  inject_ = std::move(inject);
  stats_.assign(flows_.size(), FlowStats{});
  fates_.assign(flows_.size(), {});
  for (std::uint32_t i = 0; i < flows_.size(); ++i) {
    if (flows_[i].start < flows_[i].stop)
      engine_.schedule(flows_[i].start, "traffic", "inject",
                       [this, i] { inject_next(i, 0); });
  }
}

void TrafficManager::inject_next(std::uint32_t flow_idx, std::uint64_t k) {
  const Flow& f = flows_[flow_idx];
  DataPacket pkt;
  pkt.flow = f.id;
  pkt.seq = static_cast<std::uint32_t>(k);
  pkt.src = f.src;
  pkt.dst = f.dst;
  pkt.size_bytes = f.packet_size;
  pkt.created_at = engine_.now();
  pkt.ttl = ttl_;
  ++stats_[flow_idx].sent;
  fates_[flow_idx].push_back(PacketFate{});
  inject_(pkt);
  const SimTime next =
      f.start + SimTime::from_us(std::llround(1e6 / f.rate_pps)) *
                    static_cast<std::int64_t>(k + 1);
  if (next < f.stop)
    engine_.schedule(next, "traffic", "inject",
                     [this, flow_idx, k] { inject_next(flow_idx, k + 1); });
}

void TrafficManager::reservoir_push(FlowStats& fs, double delay_s) {
  if (fs.delay_reservoir.size() < kReservoirCap) {
    fs.delay_reservoir.push_back(delay_s);
    return;
  }
  const std::uint64_t j = stats_rng_.below(fs.delivered);
  if (j < kReservoirCap) fs.delay_reservoir[j] = delay_s;
}

void TrafficManager::on_delivery(const DataPacket& pkt, SimTime now) {
  FlowStats& fs = stats_[pkt.flow];
  PacketFate& pf = fates_[pkt.flow][pkt.seq];
  if (pf.fate == Fate::Delivered) {
    ++fs.duplicates;
    return;
  }
  if (pf.fate == Fate::Dropped) {
    // A counted drop beaten by a surviving in-flight copy: upgrade the fate.
    --drops_[static_cast<int>(pf.cause)];
    ++revived_;
  }
  pf.fate = Fate::Delivered;
  ++fs.delivered;
  fs.delivered_bytes += pkt.size_bytes;
  const double d = (now - pkt.created_at).seconds();
  fs.delay_sum_s += d;
  reservoir_push(fs, d);
}

void TrafficManager::on_drop(const DataPacket& pkt, DropCause cause) {
  PacketFate& pf = fates_[pkt.flow][pkt.seq];
  if (pf.fate != Fate::Pending) {
    ++late_drops_;
    return;
  }
  pf.fate = Fate::Dropped;
  pf.cause = cause;
  ++drops_[static_cast<int>(cause)];
}

void TrafficManager::finalize() {
  for (auto& flow_fates : fates_) {
    for (PacketFate& pf : flow_fates) {
      if (pf.fate == Fate::Pending) {
        pf.fate = Fate::Dropped;
        pf.cause = DropCause::EndOfRun;
        ++drops_[static_cast<int>(DropCause::EndOfRun)];
      }
    }
  }
}

RunSummary TrafficManager::summarize(double duration_s) const {
  RunSummary s;
  std::uint64_t bytes = 0;
  double delay_sum = 0.0;
  for (const FlowStats& fs : stats_) {
    s.sent += fs.sent;
    s.delivered += fs.delivered;
    s.duplicates += fs.duplicates;
    bytes += fs.delivered_bytes;
    delay_sum += fs.delay_sum_s;
  }
  s.drops = drops_;
  s.revived = revived_;
  s.late_drops = late_drops_;
  s.throughput_bps =
      duration_s > 0 ? static_cast<double>(bytes) * 8.0 / duration_s : 0.0;
  if (s.delivered > 0)
    s.avg_delay_s = delay_sum / static_cast<double>(s.delivered);
  s.pdr = s.sent > 0
              ? static_cast<double>(s.delivered) / static_cast<double>(s.sent)
              : 0.0;
  return s;
}

}  // namespace meshsim
