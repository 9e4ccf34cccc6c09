#include "meshsim/topology.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace meshsim {

Topology::Topology(std::vector<Vec2> positions, double area_w, double area_h,
                   double tx_range, double cs_range)
    : pos_(std::move(positions)),
      area_w_(area_w),
      area_h_(area_h),
      tx_range_(tx_range),
      cs_range_(cs_range) {
  if (area_w_ <= 0 || area_h_ <= 0)
    throw std::invalid_argument("Topology: area must be positive");
  if (tx_range_ <= 0) throw std::invalid_argument("Topology: tx_range <= 0");
  if (cs_range_ < tx_range_)
    throw std::invalid_argument("Topology: cs_range < tx_range");
  for (const Vec2& p : pos_) {
    if (p.x < 0 || p.x > area_w_ || p.y < 0 || p.y > area_h_)
      throw std::invalid_argument("Topology: position outside area");
  }
}

Topology Topology::place_random(int count, double area_w, double area_h,
                                double tx_range, double cs_range,
                                RngStream& rng) {
  if (count < 2) throw std::invalid_argument("place_random: count < 2");
  std::vector<Vec2> pos(count);
  for (Vec2& p : pos) {
    p.x = rng.uniform(0.0, area_w);
    p.y = rng.uniform(0.0, area_h);
  }
  return Topology(std::move(pos), area_w, area_h, tx_range, cs_range);
}

double Topology::distance(NodeId a, NodeId b) const {
  const double dx = pos_[a].x - pos_[b].x;
  const double dy = pos_[a].y - pos_[b].y;
  return std::sqrt(dx * dx + dy * dy);
}

bool Topology::in_tx_range(NodeId a, NodeId b) const {
  return distance(a, b) <= tx_range_;
}

bool Topology::in_cs_range(NodeId a, NodeId b) const {
  return distance(a, b) <= cs_range_;
}

LinkTable::LinkTable(const Topology& topo, std::vector<Link> links)
    : links_(std::move(links)) {
  for (Link& l : links_) {
    if (l.m > l.n) {
      std::swap(l.m, l.n);
      std::swap(l.loss_f, l.loss_r);
    }
    if (l.nominal_rate_bps <= 0)
      throw std::invalid_argument("Link: nominal_rate must be > 0");
    if (l.loss_f < 0 || l.loss_f > 1 || l.loss_r < 0 || l.loss_r > 1)
      throw std::invalid_argument("Link: loss out of [0,1]");
  }
  std::sort(links_.begin(), links_.end(),
            [](const Link& a, const Link& b) {
              return a.m != b.m ? a.m < b.m : a.n < b.n;
            });
  rebuild_adjacency(topo.node_count());
}

LinkTable LinkTable::all_links(const Topology& topo, double default_rate_bps) {
  std::vector<Link> ls;
  const int n = topo.node_count();
  for (NodeId a = 0; a + 1 < static_cast<NodeId>(n); ++a) {
    for (NodeId b = a + 1; b < static_cast<NodeId>(n); ++b) {
      if (topo.in_tx_range(a, b))
        ls.push_back(Link{a, b, default_rate_bps, 0.0, 0.0});
    }
  }
  return LinkTable(topo, std::move(ls));
}

void LinkTable::rebuild_adjacency(int node_count) {
  node_count_ = node_count;
  adj_.assign(node_count, {});
  index_.assign(static_cast<std::size_t>(node_count) * node_count, -1);
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    adj_[l.m].push_back(l.n);
    adj_[l.n].push_back(l.m);
    index_[static_cast<std::size_t>(l.m) * node_count + l.n] =
        static_cast<int>(i);
    index_[static_cast<std::size_t>(l.n) * node_count + l.m] =
        static_cast<int>(i);
  }
  for (auto& v : adj_) std::sort(v.begin(), v.end());
}

int LinkTable::index_of(NodeId a, NodeId b) const {
  if (a == b || a >= static_cast<NodeId>(node_count_) ||
      b >= static_cast<NodeId>(node_count_))
    return -1;
  return index_[static_cast<std::size_t>(a) * node_count_ + b];
}

std::span<const NodeId> LinkTable::neighbors(NodeId n) const {
  return adj_[n];
}

double LinkTable::loss(NodeId from, NodeId to) const {
  const int idx = index_of(from, to);
  if (idx < 0) return 1.0;
  const Link& l = links_[idx];
  return from == l.m ? l.loss_f : l.loss_r;
}

double LinkTable::rate(NodeId a, NodeId b) const {
  const int idx = index_of(a, b);
  if (idx < 0) throw std::invalid_argument("rate: no such link");
  return links_[idx].nominal_rate_bps;
}

ContentionDomain contention_domain(const Topology& topo, const LinkTable& links,
                                   int link_idx) {
  const Link& f = links.link(link_idx);
  ContentionDomain cd;
  cd.focal = link_idx;
  for (std::size_t i = 0; i < links.size(); ++i) {
    const Link& l = links.link(i);
    const bool near = topo.in_cs_range(f.m, l.m) || topo.in_cs_range(f.m, l.n) ||
                      topo.in_cs_range(f.n, l.m) || topo.in_cs_range(f.n, l.n);
    if (near) cd.members.push_back(static_cast<int>(i));
  }
  return cd;
}

}  // namespace meshsim
