#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "meshsim/rng.hpp"

namespace meshsim {

using NodeId = std::uint32_t;
inline constexpr NodeId kBroadcast = 0xffffffffu;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Node positions plus the unit-disk radio geometry. Link existence uses a
// closed boundary (dist <= tx_range); carrier sensing likewise with cs_range.
// Immutable after construction.
class Topology {
 public:
  Topology(std::vector<Vec2> positions, double area_w, double area_h,
           double tx_range, double cs_range);

  // Uniform i.i.d. placement, deterministic for a given stream.
  static Topology place_random(int count, double area_w, double area_h,
                               double tx_range, double cs_range,
                               RngStream& rng);

  int node_count() const { return static_cast<int>(pos_.size()); }
  Vec2 position(NodeId n) const { return pos_[n]; }
  double tx_range() const { return tx_range_; }
  double cs_range() const { return cs_range_; }
  double area_width() const { return area_w_; }
  double area_height() const { return area_h_; }

  double distance(NodeId a, NodeId b) const;
  bool in_tx_range(NodeId a, NodeId b) const;
  bool in_cs_range(NodeId a, NodeId b) const;

 private:
  std::vector<Vec2> pos_;
  double area_w_, area_h_;
  double tx_range_, cs_range_;
};

// A radio link with its nominal rate and directional Bernoulli losses.
// Canonical orientation m < n; loss_f applies to frames m->n, loss_r to n->m.
struct Link {
  NodeId m = 0;
  NodeId n = 0;
  double nominal_rate_bps = 0.0;
  double loss_f = 0.0;
  double loss_r = 0.0;
};

// Every node pair within tx_range, with per-link parameters and adjacency.
class LinkTable {
 public:
  LinkTable() = default;
  LinkTable(const Topology& topo, std::vector<Link> links);

  static LinkTable all_links(const Topology& topo, double default_rate_bps);

  std::span<const Link> links() const { return links_; }
  std::size_t size() const { return links_.size(); }
  const Link& link(int idx) const { return links_[idx]; }

  // Index into links(), or -1 when the pair is not linked.
  int index_of(NodeId a, NodeId b) const;
  bool has_link(NodeId a, NodeId b) const { return index_of(a, b) >= 0; }

  std::span<const NodeId> neighbors(NodeId n) const;

  double loss(NodeId from, NodeId to) const;
  double rate(NodeId a, NodeId b) const;

  Link& mutable_link(int idx) { return links_[idx]; }
  void rebuild_adjacency(int node_count);

 private:
  std::vector<Link> links_;                  // sorted by (m, n)
  std::vector<std::vector<NodeId>> adj_;     // ascending per node
  std::vector<int> index_;                   // dense pair -> link idx
  int node_count_ = 0;
};

// The set of links sharing the medium with a focal link: every link uv whose
// nearest endpoint is within cs_range of one of the focal link's endpoints.
// Membership is symmetric and reflexive.
struct ContentionDomain {
  int focal = -1;
  std::vector<int> members;  // link indices, ascending, includes focal
};

ContentionDomain contention_domain(const Topology& topo, const LinkTable& links,
                                   int link_idx);

}  // namespace meshsim
