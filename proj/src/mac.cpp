#include "meshsim/mac.hpp"

#include <algorithm>
#include <cassert>

namespace meshsim {

void LedgerRecorder::add(SimTime start, SimTime end, Bucket b) {
  if (end > start) intervals_.push_back(Interval{start, end, b});
}

BusyLedger LedgerRecorder::integrate(SimTime from, SimTime upto) const {
  struct Ev {
    std::int64_t t;
    std::uint8_t bucket;
    std::int8_t delta;
  };
  std::vector<Ev> evs;
  evs.reserve(intervals_.size() * 2);
  for (const Interval& iv : intervals_) {
    const SimTime s = std::max(iv.start, from);
    const SimTime e = std::min(iv.end, upto);
    if (s < e) {
      evs.push_back(Ev{s.us(), static_cast<std::uint8_t>(iv.bucket), +1});
      evs.push_back(Ev{e.us(), static_cast<std::uint8_t>(iv.bucket), -1});
    }
  }
  std::sort(evs.begin(), evs.end(),
            [](const Ev& a, const Ev& b) { return a.t < b.t; });

  std::int64_t acc[4] = {0, 0, 0, 0};
  int active[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  std::int64_t cur = from.us();
  while (i < evs.size()) {
    const std::int64_t t = evs[i].t;
    if (t > cur) {
      // charge [cur, t) to the highest-priority active bucket
      for (int b = 0; b < 4; ++b) {
        if (active[b] > 0) {
          acc[b] += t - cur;
          break;
        }
      }
    }
    cur = std::max(cur, t);
    while (i < evs.size() && evs[i].t == t) {
      active[evs[i].bucket] += evs[i].delta;
      ++i;
    }
  }
  BusyLedger led;
  led.tx = SimTime::from_us(acc[0]);
  led.rx = SimTime::from_us(acc[1]);
  led.rts = SimTime::from_us(acc[2]);
  led.cts = SimTime::from_us(acc[3]);
  led.window_start = from;
  return led;
}

BusyLedger LedgerRecorder::close_window(SimTime width) {
  const SimTime end = window_start_ + width;
  BusyLedger led = integrate(window_start_, end);
  window_start_ = end;
  std::erase_if(intervals_, [end](const Interval& iv) { return iv.end <= end; });
  return led;
}

Mac::Mac(Engine& engine, const Topology& topo, const LinkTable& links,
         const MacConfig& cfg, RngStream& backoff_rng, RngStream& loss_rng)
    : engine_(engine),
      topo_(topo),
      links_(links),
      cfg_(cfg),
      backoff_rng_(backoff_rng),
      loss_rng_(loss_rng) {
  const int n = topo.node_count();
  nodes_.resize(n);
  cs_neighbors_.resize(n);
  for (NodeId a = 0; a < static_cast<NodeId>(n); ++a) {
    nodes_[a].cw = cfg_.cw_min;
    nodes_[a].last_rx_seq.assign(n, -1);
    for (NodeId b = 0; b < static_cast<NodeId>(n); ++b)
      if (a != b && topo.in_cs_range(a, b)) cs_neighbors_[a].push_back(b);
  }
}

LedgerRecorder::Bucket Mac::bucket_for(FrameKind k, bool transmitter) {
  switch (k) {
    case FrameKind::Rts:
      return LedgerRecorder::Bucket::Rts;
    case FrameKind::Cts:
      return LedgerRecorder::Bucket::Cts;
    default:
      return transmitter ? LedgerRecorder::Bucket::Tx
                         : LedgerRecorder::Bucket::Rx;
  }
}

SimTime Mac::data_airtime(NodeId a, NodeId b, std::uint32_t bytes) const {
  return airtime(bytes, links_.rate(a, b));
}

bool Mac::queue_full(NodeId node) const {
  return nodes_[node].queue.size() >= cfg_.queue_cap;
}

void Mac::enqueue(NodeId node, Frame frame) {
  NodeState& st = nodes_[node];
  assert(frame.src == node);
  if (st.queue.size() >= cfg_.queue_cap) {
    ++st.ctr.queue_drops;
    if (on_queue_drop_) on_queue_drop_(node, frame);
    return;
  }
  st.queue.push_back(std::move(frame));
  if (st.phase == XPhase::Idle) schedule_access(node);
}

void Mac::schedule_access(NodeId n) {
  NodeState& st = nodes_[n];
  if (st.access_scheduled || st.phase != XPhase::Idle || st.queue.empty())
    return;
  const SimTime now = engine_.now();
  const SimTime base =
      std::max({now, st.busy_until, st.nav_until, st.tx_until});
  const auto slots = backoff_rng_.below(static_cast<std::uint64_t>(st.cw));
  const SimTime at =
      base + cfg_.difs + cfg_.slot * static_cast<std::int64_t>(slots);
  st.access_scheduled = true;
  engine_.schedule(at, "mac", "access", [this, n] { try_access(n); });
}

void Mac::try_access(NodeId n) {
  NodeState& st = nodes_[n];
  st.access_scheduled = false;
  if (st.phase != XPhase::Idle || st.queue.empty()) return;
  const SimTime now = engine_.now();
  const SimTime ok_at =
      std::max({st.busy_until, st.nav_until, st.tx_until}) + cfg_.difs;
  if (now < ok_at) {
    schedule_access(n);  // medium became busy meanwhile; redraw backoff
    return;
  }
  start_head_frame(n);
}

void Mac::start_head_frame(NodeId n) {
  NodeState& st = nodes_[n];
  const Frame& head = st.queue.front();
  assert(engine_.now() >= st.nav_until);
  if (head.kind == FrameKind::Bcast) {
    transmit(n, head, airtime(head.size_bytes, cfg_.broadcast_rate_bps),
             SimTime::zero(), 0);
    return;
  }
  // Unicast DATA: RTS first, always. A fresh packet gets a new dedup tag;
  // retries keep it so the receiver can filter duplicates.
  if (st.rts_retries == 0 && st.data_retries == 0)
    st.cur_data_seq = ++st.tx_seq;
  const SimTime d_air = data_airtime(head.src, head.dst, head.size_bytes);
  const SimTime reserve = cfg_.sifs + cfg_.cts_airtime + cfg_.sifs + d_air +
                          cfg_.sifs + cfg_.ack_airtime;
  Frame rts;
  rts.kind = FrameKind::Rts;
  rts.src = n;
  rts.dst = head.dst;
  rts.size_bytes = 20;
  st.phase = XPhase::WaitCts;
  transmit(n, rts, cfg_.rts_airtime, reserve, st.cur_data_seq);
}

void Mac::transmit(NodeId n, const Frame& f, SimTime air, SimTime reserve_after,
                   std::uint16_t data_seq) {
  NodeState& st = nodes_[n];
  const SimTime t0 = engine_.now();
  const SimTime t1 = t0 + air;
  st.tx_until = std::max(st.tx_until, t1);
  st.ledger.add(t0, t1, bucket_for(f.kind, true));
  ++st.ctr.tx_frames;
  for (Arrival& a : st.arrivals)  // half-duplex: deaf while transmitting
    if (a.end > t0) a.corrupted = true;

  struct Hearer {
    NodeId node;
    std::uint64_t arrival;
  };
  auto hearers = std::make_shared<std::vector<Hearer>>();
  for (NodeId x : cs_neighbors_[n]) {
    NodeState& xs = nodes_[x];
    xs.ledger.add(t0, t1, bucket_for(f.kind, false));
    xs.busy_until = std::max(xs.busy_until, t1);
    Arrival a;
    a.id = next_arrival_id_++;
    a.frame = f;
    a.from = n;
    a.start = t0;
    a.end = t1;
    a.corrupted = xs.tx_until > t0;
    for (Arrival& other : xs.arrivals) {
      if (other.end > t0) {  // overlapping airtime: both destroyed
        other.corrupted = true;
        a.corrupted = true;
      }
    }
    if (a.corrupted) ++xs.ctr.collisions;
    const bool payload_frame =
        f.kind == FrameKind::Data || f.kind == FrameKind::Bcast;
    if (links_.index_of(n, x) >= 0) {
      a.loss_passed = payload_frame ? !loss_rng_.bernoulli(links_.loss(n, x))
                                    : true;
    }
    hearers->push_back(Hearer{x, a.id});
    xs.arrivals.push_back(std::move(a));
  }

  Frame fcopy = f;
  engine_.schedule(t1, "mac", "tx_end",
                   [this, n, fcopy, t0, t1, reserve_after, data_seq, hearers] {
                     for (const Hearer& h : *hearers)
                       handle_arrival_end(h.node, h.arrival, reserve_after,
                                          data_seq);
                     finish_tx(n, fcopy, t0, t1, data_seq);
                   });
}

void Mac::handle_arrival_end(NodeId at, std::uint64_t arrival_id,
                             SimTime reserve_after, std::uint16_t data_seq) {
  NodeState& st = nodes_[at];
  auto it = std::find_if(st.arrivals.begin(), st.arrivals.end(),
                         [&](const Arrival& a) { return a.id == arrival_id; });
  assert(it != st.arrivals.end());
  Arrival a = std::move(*it);
  *it = std::move(st.arrivals.back());
  st.arrivals.pop_back();
  if (a.corrupted) return;

  const Frame& f = a.frame;
  // Virtual carrier sense: overheard RTS/CTS reserve the rest of the
  // exchange for everyone except the addressed node.
  if ((f.kind == FrameKind::Rts || f.kind == FrameKind::Cts) &&
      reserve_after > SimTime::zero() && f.dst != at) {
    st.nav_until = std::max(st.nav_until, a.end + reserve_after);
  }
  const bool addressed = f.dst == at || f.dst == kBroadcast;
  if (!addressed || !topo_.in_tx_range(a.from, at)) return;
  const bool payload_frame =
      f.kind == FrameKind::Data || f.kind == FrameKind::Bcast;
  if (payload_frame && !a.loss_passed) return;
  decode(at, f, a.from, data_seq, reserve_after);
}

void Mac::decode(NodeId at, const Frame& f, NodeId from,
                 std::uint16_t data_seq, SimTime rts_reserve) {
  NodeState& st = nodes_[at];
  ++st.ctr.rx_frames;
  const SimTime now = engine_.now();
  switch (f.kind) {
    case FrameKind::Rts: {
      // Respond only when our own virtual and physical carrier sense are
      // clear (the RTS itself has just ended, so busy_until == now).
      if (st.tx_until > now || st.nav_until > now || st.busy_until > now)
        return;
      Frame cts;
      cts.kind = FrameKind::Cts;
      cts.src = at;
      cts.dst = from;
      cts.size_bytes = 14;
      // The RTS reservation covers SIFS+CTS+SIFS+DATA+SIFS+ACK; the CTS
      // advertises what remains after itself.
      const SimTime reserve_after = rts_reserve - cfg_.sifs - cfg_.cts_airtime;
      engine_.schedule(now + cfg_.sifs, "mac", "cts",
                       [this, at, cts, reserve_after] {
                         transmit(at, cts, cfg_.cts_airtime, reserve_after, 0);
                       });
      return;
    }
    case FrameKind::Cts: {
      if (st.phase != XPhase::WaitCts || st.queue.empty() ||
          st.queue.front().dst != from)
        return;
      if (st.timeout_armed) {
        engine_.cancel(st.pending_timeout);
        st.timeout_armed = false;
      }
      st.rts_retries = 0;
      const Frame data = st.queue.front();
      st.phase = XPhase::WaitAck;
      const std::uint16_t seq = st.cur_data_seq;
      engine_.schedule(now + cfg_.sifs, "mac", "data", [this, at, data, seq] {
        transmit(at, data, data_airtime(data.src, data.dst, data.size_bytes),
                 SimTime::zero(), seq);
      });
      return;
    }
    case FrameKind::Data: {
      Frame ack;
      ack.kind = FrameKind::Ack;
      ack.src = at;
      ack.dst = from;
      ack.size_bytes = 14;
      engine_.schedule(now + cfg_.sifs, "mac", "ack", [this, at, ack] {
        transmit(at, ack, cfg_.ack_airtime, SimTime::zero(), 0);
      });
      if (st.last_rx_seq[from] != static_cast<std::int32_t>(data_seq)) {
        st.last_rx_seq[from] = static_cast<std::int32_t>(data_seq);
        if (on_data_ && std::holds_alternative<DataPacket>(f.payload))
          on_data_(at, std::get<DataPacket>(f.payload), from);
      }
      return;
    }
    case FrameKind::Ack: {
      if (st.phase != XPhase::WaitAck || st.queue.empty() ||
          st.queue.front().dst != from)
        return;
      if (st.timeout_armed) {
        engine_.cancel(st.pending_timeout);
        st.timeout_armed = false;
      }
      finish_exchange(at, UnicastOutcome::Delivered);
      return;
    }
    case FrameKind::Bcast: {
      if (!std::holds_alternative<BcastContent>(f.payload)) {
        ++st.ctr.malformed;
        return;
      }
      const BcastContent& c = std::get<BcastContent>(f.payload);
      if (std::holds_alternative<std::shared_ptr<const ProbePayload>>(c)) {
        if (on_probe_)
          on_probe_(at, std::get<std::shared_ptr<const ProbePayload>>(c), from);
      } else if (on_update_) {
        on_update_(at, std::get<std::shared_ptr<const UpdatePayload>>(c), from);
      }
      return;
    }
  }
}

void Mac::finish_tx(NodeId n, Frame f, SimTime t0, SimTime t1,
                    std::uint16_t data_seq) {
  (void)t0;
  (void)data_seq;
  NodeState& st = nodes_[n];
  switch (f.kind) {
    case FrameKind::Rts: {
      const SimTime deadline =
          t1 + cfg_.sifs + cfg_.cts_airtime + cfg_.timeout_guard;
      st.pending_timeout = engine_.schedule(deadline, "mac", "cts_to",
                                            [this, n] { cts_timeout(n); });
      st.timeout_armed = true;
      return;
    }
    case FrameKind::Data: {
      if (st.phase != XPhase::WaitAck) return;  // raw/test transmission
      const SimTime deadline =
          t1 + cfg_.sifs + cfg_.ack_airtime + cfg_.timeout_guard;
      st.pending_timeout = engine_.schedule(deadline, "mac", "ack_to",
                                            [this, n] { ack_timeout(n); });
      st.timeout_armed = true;
      return;
    }
    case FrameKind::Bcast: {
      // One airtime charge, no retransmission, regardless of outcomes.
      if (!st.queue.empty() && st.phase == XPhase::Idle) {
        st.queue.pop_front();
        schedule_access(n);
      }
      return;
    }
    default:
      return;
  }
}

void Mac::cts_timeout(NodeId n) {
  NodeState& st = nodes_[n];
  st.timeout_armed = false;
  if (st.phase != XPhase::WaitCts) return;
  ++st.rts_retries;
  ++st.ctr.retries;
  if (st.rts_retries > cfg_.rts_retry_limit) {
    finish_exchange(n, UnicastOutcome::RtsFailed);
    return;
  }
  st.cw = std::min(st.cw * 2, cfg_.cw_max);
  st.phase = XPhase::Idle;
  schedule_access(n);
}

void Mac::ack_timeout(NodeId n) {
  NodeState& st = nodes_[n];
  st.timeout_armed = false;
  if (st.phase != XPhase::WaitAck) return;
  ++st.data_retries;
  ++st.ctr.retries;
  if (st.data_retries > cfg_.data_retry_limit) {
    finish_exchange(n, UnicastOutcome::DataFailed);
    return;
  }
  st.cw = std::min(st.cw * 2, cfg_.cw_max);
  st.phase = XPhase::Idle;
  schedule_access(n);
}

void Mac::finish_exchange(NodeId n, UnicastOutcome outcome) {
  NodeState& st = nodes_[n];
  Frame head = std::move(st.queue.front());
  st.queue.pop_front();
  st.phase = XPhase::Idle;
  st.cw = cfg_.cw_min;
  st.rts_retries = 0;
  st.data_retries = 0;
  if (on_outcome_ && std::holds_alternative<DataPacket>(head.payload))
    on_outcome_(n, head.dst, std::get<DataPacket>(head.payload), outcome);
  schedule_access(n);
}

bool Mac::sample_busy(NodeId node) const {
  const NodeState& st = nodes_[node];
  const SimTime now = engine_.now();
  return st.tx_until > now || st.busy_until > now || st.nav_until > now;
}

BusyLedger Mac::current_ledger(NodeId node) const {
  const NodeState& st = nodes_[node];
  return st.ledger.integrate(st.ledger.window_start(), engine_.now());
}

BusyLedger Mac::close_window(NodeId node, SimTime width) {
  return nodes_[node].ledger.close_window(width);
}

void Mac::transmit_raw(NodeId node, Frame frame, double rate_bps) {
  transmit(node, frame, airtime(frame.size_bytes, rate_bps), SimTime::zero(),
           0);
}

}  // namespace meshsim
