#pragma once

#include <span>
#include <string>
#include <vector>

#include "meshsim/sim_time.hpp"
#include "meshsim/topology.hpp"

namespace meshsim {

enum class MetricKind { Hop, Etx, IbetxLiteral, IbetxConsistent };

const char* metric_name(MetricKind k);
MetricKind metric_from_name(const std::string& name);  // throws on unknown

// Everything measured about one link at one instant: probe delivery ratios,
// contention-domain bandwidth, and the busy-time interference of both ends.
struct LinkMeasure {
  double d_f = 0.0;     // forward probe delivery ratio
  double d_r = 0.0;     // reverse probe delivery ratio (piggybacked)
  double d_exp = 0.0;   // d_f * d_r
  double b_exp = 0.0;   // bits/s, harmonic share of the contention domain
  double i_mn = 0.0;    // max of sender/receiver busy fractions
  double I_exp = 0.0;   // i_mn / (1 + i_mn), in [0, 0.5]
  SimTime updated_at;
};

struct LinkCost {
  double value = 0.0;  // +inf represents a dead link
  MetricKind kind = MetricKind::Hop;
};

struct PathCost {
  double total = 0.0;
  int hops = 0;
};

// Expected link delivery: d_exp = d_f * d_r.
double eld(double d_f, double d_r);

// Expected transmission count: 1 / (d_f * d_r); +inf on a dead link.
double etx(double d_f, double d_r);

// Expected link bandwidth: harmonic combination 1 / sum(1/r_i) of the
// nominal rates of every link in the contention domain (focal included).
// Captures 802.11 DCF equal-airtime sharing: slow links drag fast ones down.
double elb(std::span<const double> rates_bps);

// Link interference: the worse of the two endpoint busy fractions.
double link_interference(double i_m, double i_n);

// Expected link interference: i / (1 + i), bounded by 0.5.
double eli(double i_mn);

// Floor applied to I_exp in consistent mode so interference-free links still
// rank by delivery and bandwidth instead of all collapsing to zero cost.
inline constexpr double kInterferenceFloor = 1e-6;

enum class IbetxMode { Literal, Consistent };

// Composite link cost. rate_norm (> 0, conventionally the scenario's maximum
// nominal rate) makes b_exp dimensionless.
//
// Literal mode computes (d_exp / (b_exp/rate_norm)) * I_exp exactly as
// printed, which rewards *bad* delivery under minimization. Consistent mode
// (the default everywhere) inverts the delivery factor:
//     I_exp / (d_exp * (b_exp/rate_norm))
// so that minimizing prefers good links; d_exp = 0 maps to +inf.
LinkCost ibetx_link(const LinkMeasure& m, IbetxMode mode, double rate_norm);

// Dispatch on metric kind: Hop=1 per live link, Etx, or either IBETX mode.
LinkCost link_cost(MetricKind kind, const LinkMeasure& m, double rate_norm);

// Additive path aggregation. All costs must share one metric kind.
PathCost path_cost(std::span<const LinkCost> costs);

struct PathCandidate {
  std::vector<NodeId> nodes;
  PathCost cost;
};

// Minimum-total path; ties broken by fewer hops, then lexicographic node
// order, so selection is deterministic.
const PathCandidate& best_path(std::span<const PathCandidate> paths);

}  // namespace meshsim
