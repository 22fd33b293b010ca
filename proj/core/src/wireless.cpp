#include "r2c/wireless.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "r2c/error.hpp"

namespace r2c::wireless {

GridNetwork::GridNetwork(std::uint32_t side, double spacing_m)
    : side_(side), spacing_m_(spacing_m) {
  if (side == 0) throw InvalidParameter("grid side must be positive");
  if (side > 65535) throw InvalidParameter("grid side too large");
  if (!(spacing_m > 0.0) || !std::isfinite(spacing_m)) {
    throw InvalidParameter(fmt::format("grid spacing must be positive, got {}", spacing_m));
  }
}

GridNetwork GridNetwork::from_node_count(std::uint32_t node_count, double spacing_m) {
  const auto side = static_cast<std::uint32_t>(std::llround(std::sqrt(double(node_count))));
  if (node_count == 0 || side * side != node_count) {
    throw InvalidParameter(
        fmt::format("node count {} is not a perfect square; the lattice needs side^2 nodes",
                    node_count));
  }
  return GridNetwork(side, spacing_m);
}

GridNetwork GridNetwork::over_area(std::uint32_t side, double edge_m) {
  if (side < 2) throw InvalidParameter("a fixed-area grid needs at least 2 nodes per edge");
  return GridNetwork(side, edge_m / double(side - 1));
}

NodeId GridNetwork::node_at(std::uint32_t column, std::uint32_t row) const {
  if (column >= side_ || row >= side_) {
    throw InvalidParameter(fmt::format("({}, {}) is outside a {}x{} grid", column, row, side_, side_));
  }
  return row * side_ + column;
}

Coord GridNetwork::coord(NodeId i) const {
  return {double(column(i)) * spacing_m_, double(row(i)) * spacing_m_};
}

double GridNetwork::distance(NodeId i, NodeId k) const {
  const double dx = double(column(i)) - double(column(k));
  const double dy = double(row(i)) - double(row(k));
  return std::hypot(dx, dy) * spacing_m_;
}

NodeId GridNetwork::center() const {
  if (side_ % 2 == 0) {
    throw InvalidParameter(fmt::format("a {}x{} grid has no center node", side_, side_));
  }
  return node_at(side_ / 2, side_ / 2);
}

std::vector<NodeId> GridNetwork::neighbors(NodeId i) const {
  std::vector<NodeId> out;
  out.reserve(4);
  const auto c = column(i);
  const auto r = row(i);
  if (c > 0) out.push_back(i - 1);
  if (c + 1 < side_) out.push_back(i + 1);
  if (r > 0) out.push_back(i - side_);
  if (r + 1 < side_) out.push_back(i + side_);
  return out;
}

double ChannelParams::rho_linear() const { return std::pow(10.0, rho_db / 10.0); }

double ChannelParams::reference_gain() const {
  const double g = lambda_m / (4.0 * std::numbers::pi * r0_m);
  return g * g;
}

void ChannelParams::validate() const {
  auto require = [](bool ok, const char* what, double v) {
    if (!ok) throw InvalidParameter(fmt::format("invalid channel parameter {} = {}", what, v));
  };
  require(eta >= 2.0 && std::isfinite(eta), "eta", eta);
  require(lambda_m > 0.0, "lambda_m", lambda_m);
  require(r0_m > 0.0, "r0_m", r0_m);
  require(pn_mw > 0.0, "pn_mw", pn_mw);
  require(std::isfinite(rho_db), "rho_db", rho_db);
  require(bandwidth_hz > 0.0, "bandwidth_hz", bandwidth_hz);
  require(msg_bits > 0.0, "msg_bits", msg_bits);
  require(pt_gossip_mw > 0.0, "pt_gossip_mw", pt_gossip_mw);
  require(pt_broadcast_mw >= pt_gossip_mw, "pt_broadcast_mw", pt_broadcast_mw);
}

double slot_duration(const ChannelParams& ch) {
  if (!(ch.bandwidth_hz > 0.0)) {
    throw InvalidParameter(fmt::format("bandwidth must be positive, got {}", ch.bandwidth_hz));
  }
  if (!(ch.msg_bits > 0.0)) {
    throw InvalidParameter(fmt::format("message size must be positive, got {}", ch.msg_bits));
  }
  if (!std::isfinite(ch.rho_db)) throw InvalidParameter("target SNR must be finite");
  return ch.msg_bits / (ch.bandwidth_hz * std::log2(1.0 + ch.rho_linear()));
}

double outage_prob(const ChannelParams& ch, double dist_m, double pt_mw) {
  if (!(dist_m > 0.0)) {
    throw InvalidParameter(fmt::format("link distance must be positive, got {}", dist_m));
  }
  if (!(pt_mw > 0.0)) {
    throw InvalidParameter(fmt::format("transmit power must be positive, got {}", pt_mw));
  }
  // Mean received SNR is G0 * Pt / Pn * (r0 / d)^eta; outage when |h|^2 falls below rho / mean.
  const double x = ch.rho_linear() * ch.pn_mw * std::pow(dist_m / ch.r0_m, ch.eta) /
                   (ch.reference_gain() * pt_mw);
  return -std::expm1(-x);
}

double epsilon_gossip(const ChannelParams& ch, const GridNetwork& net) {
  return outage_prob(ch, net.spacing_m(), ch.pt_gossip_mw);
}

double epsilon_max(const ChannelParams& ch, const GridNetwork& net, NodeId i) {
  if (net.node_count() < 2) throw InvalidParameter("epsilon_max needs at least two nodes");
  // The farthest lattice point from any node is one of the four corners.
  const auto last = net.side() - 1;
  const std::array<NodeId, 4> corners{net.node_at(0, 0), net.node_at(last, 0),
                                      net.node_at(0, last), net.node_at(last, last)};
  double far = 0.0;
  for (NodeId c : corners) far = std::max(far, net.distance(i, c));
  return outage_prob(ch, far, ch.pt_broadcast_mw);
}

Slots broadcast_window(double eps_max, std::uint32_t destinations, double zeta) {
  if (!(zeta >= 0.0) || zeta > 1.0) {
    throw InvalidParameter(fmt::format("zeta must lie in [0, 1), got {}", zeta));
  }
  if (zeta == 1.0) throw UnattainableTarget("zeta = 1 requires an unbounded window");
  if (destinations == 0) throw InvalidParameter("broadcast window needs at least one destination");
  if (!(eps_max >= 0.0) || !(eps_max < 1.0)) {
    throw InvalidParameter(fmt::format("outage probability must lie in [0, 1), got {}", eps_max));
  }
  if (zeta == 0.0 || eps_max == 0.0) return 1;
  // 1 - zeta^(1/N), computed without cancellation.
  const double per_link_miss = -std::expm1(std::log(zeta) / double(destinations));
  const double ratio = std::log(per_link_miss) / std::log(eps_max);
  // Absorb round-off when the ratio is an integer up to a few ulps.
  const double w = std::ceil(ratio - 1e-9);
  return std::max<Slots>(1, static_cast<Slots>(w));
}

Slots broadcast_window(const ChannelParams& ch, const GridNetwork& net, NodeId i, double zeta) {
  return broadcast_window(epsilon_max(ch, net, i), net.validator_count(), zeta);
}

namespace {

std::uint64_t binomial(std::uint32_t n, std::uint32_t k) {
  k = std::min(k, n - k);
  __extension__ using Wide = unsigned __int128;
  Wide acc = 1;
  for (std::uint32_t j = 1; j <= k; ++j) {
    acc = acc * (n - k + j) / j;
    if (acc > std::numeric_limits<std::uint64_t>::max()) {
      throw InvalidParameter(fmt::format("C({}, {}) overflows 64 bits", n, k));
    }
  }
  return static_cast<std::uint64_t>(acc);
}

}  // namespace

PathStats shortest_paths(const GridNetwork& net, NodeId i, NodeId k) {
  if (!net.contains(i) || !net.contains(k)) throw InvalidParameter("node outside the grid");
  if (i == k) throw InvalidParameter("shortest_paths needs distinct endpoints");
  const auto dx = static_cast<std::uint32_t>(std::abs(int(net.column(i)) - int(net.column(k))));
  const auto dy = static_cast<std::uint32_t>(std::abs(int(net.row(i)) - int(net.row(k))));
  return {dx + dy, binomial(dx + dy, dx)};
}

std::uint32_t max_hops(const GridNetwork& net, NodeId i) {
  const auto c = net.column(i);
  const auto r = net.row(i);
  const auto last = net.side() - 1;
  return std::max(c, last - c) + std::max(r, last - r);
}

}  // namespace r2c::wireless
