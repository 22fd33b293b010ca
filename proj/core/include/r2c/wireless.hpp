#pragma once

#include <cstdint>
#include <vector>

#include "r2c/types.hpp"

namespace r2c::wireless {

struct Coord {
  double x_m = 0.0;
  double y_m = 0.0;
};

/// Square lattice of side*side static nodes, `spacing_m` apart.
///
/// Node ids are row-major: id = row * side + column, with node 0 at the
/// origin corner. All nodes but the proposer form the validator pool, so
/// `validator_count()` is N = node_count - 1, the nodes other than the proposer.
class GridNetwork {
 public:
  GridNetwork(std::uint32_t side, double spacing_m);

  /// Rejects node counts that are not perfect squares.
  static GridNetwork from_node_count(std::uint32_t node_count, double spacing_m);

  /// Fits `side` nodes per edge into a square of edge length `edge_m`.
  static GridNetwork over_area(std::uint32_t side, double edge_m);

  std::uint32_t side() const { return side_; }
  double spacing_m() const { return spacing_m_; }
  std::uint32_t node_count() const { return side_ * side_; }
  std::uint32_t validator_count() const { return node_count() - 1; }

  std::uint32_t column(NodeId i) const { return i % side_; }
  std::uint32_t row(NodeId i) const { return i / side_; }
  NodeId node_at(std::uint32_t column, std::uint32_t row) const;
  Coord coord(NodeId i) const;
  double distance(NodeId i, NodeId k) const;
  bool contains(NodeId i) const { return i < node_count(); }

  NodeId corner() const { return 0; }
  /// Only defined for odd sides.
  NodeId center() const;

  /// 4-neighbourhood (lattice steps of one spacing).
  std::vector<NodeId> neighbors(NodeId i) const;

 private:
  std::uint32_t side_;
  double spacing_m_;
};

/// Radio constants. Powers in mW, distances in m.
struct ChannelParams {
  double eta = 3.0;
  double lambda_m = 0.125;
  double r0_m = 1.0;
  double pn_mw = 1e-10;
  double rho_db = 10.0;
  double bandwidth_hz = 1e6;
  double msg_bits = 1024.0;
  double pt_gossip_mw = 2.5;
  double pt_broadcast_mw = 100.0;

  double rho_linear() const;
  /// Free-space gain at the reference distance, (lambda / (4 pi r0))^2.
  double reference_gain() const;
  /// Throws InvalidParameter on out-of-range constants.
  void validate() const;
};

struct PathStats {
  std::uint32_t edges = 0;
  std::uint64_t count = 0;
};

/// Seconds per slot: M / (B log2(1 + rho)).
double slot_duration(const ChannelParams& ch);

/// Rayleigh-fading SNR outage probability of a single link.
double outage_prob(const ChannelParams& ch, double dist_m, double pt_mw);

/// Outage of one gossip hop between lattice neighbours.
double epsilon_gossip(const ChannelParams& ch, const GridNetwork& net);

/// Outage between `i` and the node farthest from it, at broadcast power.
double epsilon_max(const ChannelParams& ch, const GridNetwork& net, NodeId i);

/// Broadcast dissemination window in slots so that all `destinations`
/// receive with probability >= zeta given worst-link outage `eps_max`.
/// Clamped to at least one slot.
Slots broadcast_window(double eps_max, std::uint32_t destinations, double zeta);
Slots broadcast_window(const ChannelParams& ch, const GridNetwork& net, NodeId i,
                       double zeta);

PathStats shortest_paths(const GridNetwork& net, NodeId i, NodeId k);

/// max_k e_ik: the hop eccentricity of node i.
std::uint32_t max_hops(const GridNetwork& net, NodeId i);

}  // namespace r2c::wireless
