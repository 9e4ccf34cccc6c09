#include "meshsim/probing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace meshsim {

double node_interference(const BusyLedger& ledger, InterferenceRole role,
                         SimTime tau_t) {
  if (tau_t <= SimTime::zero())
    throw std::invalid_argument("node_interference: tau_t must be positive");
  SimTime busy = ledger.rx + ledger.rts + ledger.cts;
  if (role == InterferenceRole::Sender) busy += ledger.tx;
  const double i =
      static_cast<double>(busy.us()) / static_cast<double>(tau_t.us());
  return std::clamp(i, 0.0, 1.0);
}

ProbePlane::ProbePlane(Engine& engine, Mac& mac, const LinkTable& links,
                       int node_count, const ProbingConfig& cfg,
                       RngStream& jitter_rng)
    : engine_(engine), mac_(mac), links_(links), cfg_(cfg), jitter_(jitter_rng) {
  if (cfg_.window.us() <= 0 || cfg_.probe_interval.us() <= 0)
    throw std::invalid_argument("ProbePlane: window and interval must be > 0");
  expected_ = static_cast<int>(
      (cfg_.window.us() + cfg_.probe_interval.us() - 1) /
      cfg_.probe_interval.us());
  nodes_.resize(node_count);
  for (auto& nr : nodes_) nr.nb.resize(node_count);
}

void ProbePlane::start() {
  for (NodeId n = 0; n < nodes_.size(); ++n) {
    const double frac = jitter_.uniform01();
    schedule_probe(n, SimTime::from_us(static_cast<std::int64_t>(
                          frac * cfg_.probe_interval.us())));
  }
  engine_.schedule(engine_.now() + cfg_.window, "probe", "window",
                   [this] { close_windows(); });
}

void ProbePlane::schedule_probe(NodeId n, SimTime at) {
  engine_.schedule(at, "probe", "emit", [this, n] {
    mac_.enqueue(n, emit_probe(n));
    const double j = 1.0 + cfg_.jitter_frac * (2.0 * jitter_.uniform01() - 1.0);
    const SimTime next = SimTime::from_us(static_cast<std::int64_t>(
        std::llround(j * cfg_.probe_interval.us())));
    schedule_probe(n, engine_.now() + next);
  });
}

Frame ProbePlane::emit_probe(NodeId node) {
  const SimTime now = engine_.now();
  auto payload = std::make_shared<ProbePayload>();
  payload->origin = node;
  payload->i_recv = nodes_[node].i_recv;
  NodeRec& nr = nodes_[node];
  for (NodeId j = 0; j < nr.nb.size(); ++j) {
    prune(nr.nb[j], now);
    if (!nr.nb[j].recv_us.empty())
      payload->counts.emplace_back(
          j, static_cast<std::int32_t>(nr.nb[j].recv_us.size()));
  }
  Frame f;
  f.kind = FrameKind::Bcast;
  f.src = node;
  f.dst = kBroadcast;
  f.size_bytes = kProbeBytes;  // constant regardless of neighbor count
  f.payload = BcastContent{std::shared_ptr<const ProbePayload>(payload)};
  return f;
}

void ProbePlane::on_probe(NodeId at,
                          const std::shared_ptr<const ProbePayload>& p,
                          NodeId from) {
  if (!p || p->origin != from) {
    ++malformed_;
    return;
  }
  const SimTime now = engine_.now();
  NeighborRec& rec = nodes_[at].nb[from];
  prune(rec, now);
  rec.recv_us.push_back(now.us());
  rec.last_heard = now;
  rec.ever_heard = true;
  if (rec.dead) {
    rec.dead = false;
    if (on_revived_) on_revived_(at, from);
  }
  // Our own entry in their counts is the reverse delivery ratio.
  auto it = std::lower_bound(
      p->counts.begin(), p->counts.end(), at,
      [](const auto& pr, NodeId v) { return pr.first < v; });
  rec.piggy_count =
      (it != p->counts.end() && it->first == at) ? it->second : 0;
  rec.piggy_i = p->i_recv;
}

void ProbePlane::prune(NeighborRec& r, SimTime now) const {
  const std::int64_t cutoff = now.us() - cfg_.window.us();
  while (!r.recv_us.empty() && r.recv_us.front() <= cutoff)
    r.recv_us.pop_front();
}

double ProbePlane::delivery_forward(NodeId node, NodeId neighbor,
                                    SimTime now) const {
  auto& rec = const_cast<NeighborRec&>(nodes_[node].nb[neighbor]);
  prune(rec, now);
  const int count =
      std::min(static_cast<int>(rec.recv_us.size()), expected_);
  return static_cast<double>(count) / static_cast<double>(expected_);
}

double ProbePlane::delivery_reverse(NodeId node, NodeId neighbor) const {
  const NeighborRec& rec = nodes_[node].nb[neighbor];
  if (rec.piggy_count < 0) return 0.0;
  const int count = std::min(rec.piggy_count, expected_);
  return static_cast<double>(count) / static_cast<double>(expected_);
}

double ProbePlane::neighbor_interference(NodeId node, NodeId neighbor) const {
  return nodes_[node].nb[neighbor].piggy_i;
}

double ProbePlane::own_interference_recv(NodeId node) const {
  return nodes_[node].i_recv;
}

double ProbePlane::own_interference_send(NodeId node) const {
  return nodes_[node].i_send;
}

bool ProbePlane::neighbor_alive(NodeId node, NodeId neighbor,
                                SimTime now) const {
  const NeighborRec& rec = nodes_[node].nb[neighbor];
  if (!rec.ever_heard || rec.dead) return false;
  const SimTime horizon = cfg_.window * cfg_.dead_windows;
  return rec.last_heard + horizon > now;
}

void ProbePlane::close_windows() {
  const SimTime now = engine_.now();
  for (NodeId n = 0; n < nodes_.size(); ++n) {
    const BusyLedger led = mac_.close_window(n, cfg_.window);
    NodeRec& nr = nodes_[n];
    nr.i_recv = node_interference(led, InterferenceRole::Receiver, cfg_.window);
    nr.i_send = node_interference(led, InterferenceRole::Sender, cfg_.window);
    // Declare neighbors dead after dead_windows of silence.
    for (NodeId j : links_.neighbors(n)) {
      NeighborRec& rec = nr.nb[j];
      if (!rec.ever_heard || rec.dead) continue;
      if (rec.last_heard + cfg_.window * cfg_.dead_windows <= now) {
        rec.dead = true;
        if (on_dead_) on_dead_(n, j);
      }
    }
    if (on_close_) on_close_(n, led);
  }
  engine_.schedule(now + cfg_.window, "probe", "window",
                   [this] { close_windows(); });
}

}  // namespace meshsim
