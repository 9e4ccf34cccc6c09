#include "meshsim/metrics.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace meshsim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* metric_name(MetricKind k) {
  switch (k) {
    case MetricKind::Hop:
      return "hop";
    case MetricKind::Etx:
      return "etx";
    case MetricKind::IbetxLiteral:
      return "ibetx-literal";
    case MetricKind::IbetxConsistent:
      return "ibetx";
  }
  return "?";
}

MetricKind metric_from_name(const std::string& name) {
  if (name == "hop") return MetricKind::Hop;
  if (name == "etx") return MetricKind::Etx;
  if (name == "ibetx") return MetricKind::IbetxConsistent;
  if (name == "ibetx-literal") return MetricKind::IbetxLiteral;
  throw std::invalid_argument("unknown metric: " + name);
}

double eld(double d_f, double d_r) { return d_f * d_r; }

double etx(double d_f, double d_r) {
  const double p = d_f * d_r;
  return p > 0.0 ? 1.0 / p : kInf;
}

double elb(std::span<const double> rates_bps) {
  if (rates_bps.empty()) throw std::invalid_argument("elb: empty rate list");
  double inv = 0.0;
  for (double r : rates_bps) {
    if (r <= 0.0) throw std::invalid_argument("elb: rate must be > 0");
    inv += 1.0 / r;
  }
  return 1.0 / inv;
}

double link_interference(double i_m, double i_n) { return std::max(i_m, i_n); }

double eli(double i_mn) { return i_mn / (1.0 + i_mn); }

LinkCost ibetx_link(const LinkMeasure& m, IbetxMode mode, double rate_norm) {
  if (rate_norm <= 0.0) throw std::invalid_argument("ibetx: rate_norm <= 0");
  const double b_norm = m.b_exp / rate_norm;
  const MetricKind kind = mode == IbetxMode::Literal
                              ? MetricKind::IbetxLiteral
                              : MetricKind::IbetxConsistent;
  if (mode == IbetxMode::Literal)
    return {(m.d_exp / b_norm) * m.I_exp, kind};
  if (m.d_exp <= 0.0 || b_norm <= 0.0) return {kInf, kind};
  return {std::max(m.I_exp, kInterferenceFloor) / (m.d_exp * b_norm), kind};
}

LinkCost link_cost(MetricKind kind, const LinkMeasure& m, double rate_norm) {
  switch (kind) {
    case MetricKind::Hop:
      return {1.0, MetricKind::Hop};
    case MetricKind::Etx:
      return {etx(m.d_f, m.d_r), MetricKind::Etx};
    case MetricKind::IbetxLiteral:
      return ibetx_link(m, IbetxMode::Literal, rate_norm);
    case MetricKind::IbetxConsistent:
      return ibetx_link(m, IbetxMode::Consistent, rate_norm);
  }
  throw std::logic_error("link_cost: bad kind");
}

PathCost path_cost(std::span<const LinkCost> costs) {
  PathCost pc;
  pc.hops = static_cast<int>(costs.size());
  for (const LinkCost& c : costs) {
    if (c.kind != costs.front().kind)
      throw std::invalid_argument("path_cost: mixed metric kinds");
    pc.total += c.value;
  }
  return pc;
}

const PathCandidate& best_path(std::span<const PathCandidate> paths) {
  if (paths.empty()) throw std::invalid_argument("best_path: empty");
  const PathCandidate* best = &paths.front();
  for (const PathCandidate& p : paths.subspan(1)) {
    if (p.cost.total < best->cost.total) {
      best = &p;
    } else if (p.cost.total == best->cost.total) {
      if (p.cost.hops < best->cost.hops ||
          (p.cost.hops == best->cost.hops && p.nodes < best->nodes))
        best = &p;
    }
  }
  return *best;
}

}  // namespace meshsim
