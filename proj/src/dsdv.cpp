#include "meshsim/dsdv.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace meshsim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

bool cost_changed(double a, double b, double rel) {
  if (std::isinf(a) || std::isinf(b)) return std::isinf(a) != std::isinf(b);
  return std::abs(a - b) > rel * std::max({1.0, std::abs(a), std::abs(b)});
}
}  // namespace

std::uint32_t update_frame_bytes(const UpdatePayload& msg) {
  // 24-byte header plus (dest, seq, cost, hops) per entry.
  return 24 + 12 * static_cast<std::uint32_t>(msg.entries.size());
}

DsdvRouter::DsdvRouter(NodeId self, int node_count, const DsdvConfig& cfg,
                       Engine& engine, RngStream& jitter_rng)
    : self_(self), cfg_(cfg), engine_(engine), jitter_(jitter_rng) {
  table_.resize(node_count);
  wst_.resize(node_count);
  for (auto& w : wst_) w.est_us = static_cast<double>(cfg_.wst_initial.us());
  for (NodeId d = 0; d < table_.size(); ++d) table_[d].dest = d;
}

void DsdvRouter::start() {
  RouteEntry& self = table_[self_];
  self.valid = true;
  self.reachable = true;
  self.next_hop = self_;
  self.seq = own_seq_;
  self.adv_cost = 0.0;
  self.total_cost = 0.0;
  self.hops = 0;
  self.changed = true;
  const SimTime first =
      engine_.now() + cfg_.first_dump_base +
      SimTime::from_us(static_cast<std::int64_t>(
          jitter_.uniform01() * cfg_.first_dump_jitter.us()));
  engine_.schedule(first, "dsdv", "dump", [this] { periodic_dump(); });
}

void DsdvRouter::periodic_dump() {
  own_seq_ += 2;
  RouteEntry& self = table_[self_];
  self.seq = own_seq_;
  UpdatePayload msg;
  msg.kind = UpdatePayload::Kind::FullDump;
  msg.origin = self_;
  for (RouteEntry& e : table_) {
    if (!e.valid) continue;
    msg.entries.push_back(UpdateEntry{e.dest, e.seq, e.total_cost, e.hops});
    e.changed = false;
  }
  ++full_dumps_sent;
  if (send_) send_(msg);
  const SimTime jitter = SimTime::from_us(static_cast<std::int64_t>(
      (jitter_.uniform01() * 2.0 - 1.0) * cfg_.dump_jitter.us()));
  engine_.schedule(engine_.now() + cfg_.full_dump_period + jitter, "dsdv",
                   "dump", [this] { periodic_dump(); });
}

void DsdvRouter::schedule_trigger(SimTime now) {
  if (trigger_scheduled_) return;
  trigger_scheduled_ = true;
  const SimTime at = std::max(now, last_trigger_ + cfg_.trigger_min_interval);
  engine_.schedule(at, "dsdv", "trigger", [this] { run_trigger(); });
}

void DsdvRouter::run_trigger() {
  trigger_scheduled_ = false;
  const SimTime now = engine_.now();
  if (now < last_trigger_ + cfg_.trigger_min_interval) {
    schedule_trigger(now);
    return;
  }
  UpdatePayload msg;
  msg.kind = UpdatePayload::Kind::Incremental;  // never a full dump
  msg.origin = self_;
  bool more = false;
  for (RouteEntry& e : table_) {
    if (!e.valid || !e.changed || e.settling(now)) continue;
    if (msg.entries.size() >= cfg_.npdu_entries) {
      more = true;  // excess defers to the next incremental
      break;
    }
    msg.entries.push_back(UpdateEntry{e.dest, e.seq, e.total_cost, e.hops});
    e.changed = false;
  }
  if (msg.entries.empty()) return;
  assert(msg.kind == UpdatePayload::Kind::Incremental);
  last_trigger_ = now;
  ++incrementals_sent;
  if (send_) send_(msg);
  if (more) schedule_trigger(now);
}

SimTime DsdvRouter::settle_span(NodeId dest) const {
  return SimTime::from_us(
      static_cast<std::int64_t>(2.0 * wst_[dest].est_us));
}

void DsdvRouter::note_epoch(NodeId dest, std::uint32_t seq, bool adopted,
                            SimTime now) {
  WstState& w = wst_[dest];
  if (seq > w.cur_seq) {
    if (w.tracking) {
      const double sample =
          static_cast<double>(w.last_change_us - w.first_us);
      w.est_us = cfg_.wst_alpha * w.est_us + (1.0 - cfg_.wst_alpha) * sample;
    }
    w.cur_seq = seq;
    w.first_us = w.last_change_us = now.us();
    w.tracking = true;
  } else if (seq == w.cur_seq && adopted) {
    w.last_change_us = now.us();
  }
}

void DsdvRouter::arm_settle_event(NodeId dest, SimTime at) {
  engine_.schedule(at, "dsdv", "settled", [this, dest, at] {
    RouteEntry& e = table_[dest];
    if (!e.valid || e.settling_until != at) return;  // superseded
    flush_buffer(dest, engine_.now());
    if (e.changed) schedule_trigger(engine_.now());
  });
}

void DsdvRouter::adopt(RouteEntry& e, NodeId from, const UpdateEntry& ue,
                       double total, SimTime now, bool damp) {
  e.valid = true;
  e.next_hop = from;
  e.seq = ue.seq;
  e.adv_cost = ue.cost;
  e.total_cost = total;
  e.hops = static_cast<std::uint16_t>(ue.hops + 1);
  e.install_time = now;
  e.reachable = true;
  e.changed = true;
  if (damp) {
    e.settling_until = now + settle_span(e.dest);
    arm_settle_event(e.dest, e.settling_until);
  } else {
    e.settling_until = now;
    flush_buffer(e.dest, now);
    schedule_trigger(now);
  }
}

void DsdvRouter::on_update(const UpdatePayload& msg, NodeId from, SimTime now) {
  const double lc = link_cost_ ? link_cost_(from) : 1.0;
  if (std::isinf(lc)) return;  // dead link; estimator will flag it
  for (const UpdateEntry& ue : msg.entries) {
    if (ue.dest >= table_.size()) continue;
    if (ue.dest == self_) {
      // Someone believes we are unreachable: answer with a fresher even seq.
      if ((ue.seq & 1u) && ue.seq > own_seq_) {
        own_seq_ = ue.seq + 1;
        RouteEntry& self = table_[self_];
        self.seq = own_seq_;
        self.changed = true;
        schedule_trigger(now);
      }
      continue;
    }
    RouteEntry& e = table_[ue.dest];
    const bool unreachable_adv = (ue.seq & 1u) != 0;
    if (unreachable_adv) {
      // Newer odd seq kills the route until a fresher even one revives it.
      if (e.valid && e.reachable && ue.seq > e.seq) {
        e.seq = ue.seq;
        e.adv_cost = kInf;
        e.total_cost = kInf;
        e.reachable = false;
        e.changed = true;
        e.settling_until = now;
        note_epoch(ue.dest, ue.seq, true, now);
        schedule_trigger(now);
        flush_buffer(ue.dest, now);
      }
      continue;
    }
    if (std::isinf(ue.cost)) continue;  // nothing usable to adopt
    const double total = ue.cost + lc;
    const bool fresh = !e.valid;
    note_epoch(ue.dest, ue.seq, false, now);
    if (fresh) {
      adopt(e, from, ue, total, now, /*damp=*/false);
      continue;
    }
    if (!e.reachable) {
      if (ue.seq > e.seq) adopt(e, from, ue, total, now, /*damp=*/false);
      continue;
    }
    if (from == e.next_hop && ue.seq >= e.seq) {
      // Our route derives from this neighbor; track whatever it says. A
      // pure sequence refresh updates the entry silently and rides the next
      // periodic dump; a real cost move is damped and re-advertised.
      const bool moved = cost_changed(total, e.total_cost, cfg_.cost_change_rel);
      if (moved) {
        adopt(e, from, ue, total, now, /*damp=*/true);
        note_epoch(ue.dest, ue.seq, true, now);
      } else {
        e.seq = ue.seq;
        e.adv_cost = ue.cost;
        e.total_cost = total;
        e.hops = static_cast<std::uint16_t>(ue.hops + 1);
        e.install_time = now;
      }
      continue;
    }
    if (ue.seq > e.seq) {
      const bool moved = e.next_hop != from ||
                         cost_changed(total, e.total_cost, cfg_.cost_change_rel);
      adopt(e, from, ue, total, now, /*damp=*/moved);
      if (moved) note_epoch(ue.dest, ue.seq, true, now);
    } else if (ue.seq == e.seq && total + 1e-12 < e.total_cost) {
      adopt(e, from, ue, total, now, /*damp=*/true);
      note_epoch(ue.dest, ue.seq, true, now);
      // A strictly better route arriving during WST releases held packets.
      flush_buffer(ue.dest, now);
    }
  }
}

void DsdvRouter::on_link_break(NodeId neighbor, SimTime now) {
  bool any = false;
  for (RouteEntry& e : table_) {
    if (!e.valid || !e.reachable || e.dest == self_) continue;
    if (e.next_hop != neighbor) continue;
    e.seq += 1;  // odd: dest-unreachable marker
    e.adv_cost = kInf;
    e.total_cost = kInf;
    e.reachable = false;
    e.changed = true;
    e.settling_until = now;
    any = true;
    flush_buffer(e.dest, now);
  }
  if (any) schedule_trigger(now);
}

void DsdvRouter::handle_packet(DataPacket pkt, SimTime now, bool at_origin) {
  if (pkt.dst == self_) {
    if (deliver_) deliver_(pkt);
    return;
  }
  if (!at_origin) {
    if (pkt.ttl == 0) {
      if (drop_) drop_(pkt, DropCause::Ttl);
      return;
    }
    pkt.ttl -= 1;
  }
  RouteEntry& e = table_[pkt.dst];
  if (!e.valid || !e.reachable) {
    if (drop_) drop_(pkt, DropCause::NoRoute);
    return;
  }
  if (e.settling(now)) {
    // Hold until settling expires or a better route installs.
    if (buffer_.size() >= cfg_.settle_buffer_cap) {
      if (drop_) drop_(buffer_.front(), DropCause::SettleBuffer);
      buffer_.pop_front();
    }
    buffer_.push_back(pkt);
    return;
  }
  if (forward_) forward_(e.next_hop, pkt);
}

void DsdvRouter::flush_buffer(NodeId dest, SimTime now) {
  if (buffer_.empty()) return;
  std::deque<DataPacket> keep;
  for (DataPacket& pkt : buffer_) {
    if (pkt.dst != dest) {
      keep.push_back(pkt);
      continue;
    }
    const RouteEntry& e = table_[dest];
    if (!e.valid || !e.reachable) {
      if (drop_) drop_(pkt, DropCause::NoRoute);
    } else if (forward_) {
      forward_(e.next_hop, pkt);
    }
  }
  buffer_.swap(keep);
  (void)now;
}

void DsdvRouter::refresh_link_costs(SimTime now) {
  for (RouteEntry& e : table_) {
    if (!e.valid || !e.reachable || e.dest == self_) continue;
    const double lc = link_cost_ ? link_cost_(e.next_hop) : 1.0;
    const double total = e.adv_cost + lc;
    if (cost_changed(total, e.total_cost, cfg_.cost_change_rel)) {
      e.total_cost = total;
      e.changed = true;  // re-advertise, but no settling for passive drift
    } else {
      e.total_cost = total;
    }
  }
  schedule_trigger(now);
}

const RouteEntry* DsdvRouter::route(NodeId dest) const {
  const RouteEntry& e = table_[dest];
  return e.valid ? &e : nullptr;
}

}  // namespace meshsim
