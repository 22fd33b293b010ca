#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "r2c/error.hpp"
#include "r2c/sim.hpp"

namespace r2c::sim {

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream),
                    std::uint32_t(stream >> 32)};
  return Rng(seq);
}

bool DisseminationTrace::complete() const {
  return std::none_of(delivery_slot.begin(), delivery_slot.end(),
                      [](Slots s) { return s == kUndelivered; });
}

Slots DisseminationTrace::completion_slot() const {
  return delivery_slot.empty() ? 0 : *std::max_element(delivery_slot.begin(), delivery_slot.end());
}

LinkTable::LinkTable(const wireless::ChannelParams& ch, const wireless::GridNetwork& net)
    : side_(net.side()), by_offset_(std::size_t(net.side()) * net.side(), 0.0) {
  for (std::uint32_t dy = 0; dy < side_; ++dy) {
    for (std::uint32_t dx = 0; dx < side_; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const double d = std::hypot(double(dx), double(dy)) * net.spacing_m();
      by_offset_[std::size_t(dy) * side_ + dx] = wireless::outage_prob(ch, d, ch.pt_broadcast_mw);
    }
  }
}

double LinkTable::outage(NodeId i, NodeId k) const {
  const auto dx = std::uint32_t(std::abs(int(i % side_) - int(k % side_)));
  const auto dy = std::uint32_t(std::abs(int(i / side_) - int(k / side_)));
  return by_offset_[std::size_t(dy) * side_ + dx];
}

namespace {

/// Raw 64-bit draws below this value are outages.
std::uint64_t outage_threshold(double eps) {
  if (!(eps > 0.0)) return 0;
  if (eps >= 1.0) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::ldexp(eps, 64));
}

void check_window(Slots window) {
  if (window < 1) throw InvalidParameter(fmt::format("window must be >= 1 slot, got {}", window));
}

}  // namespace

DisseminationTrace disseminate_gossip(const wireless::GridNetwork& net, double eps_g, NodeId source,
                                      Slots window, Rng& rng) {
  check_window(window);
  if (!net.contains(source)) throw InvalidParameter("source outside the grid");
  if (!(eps_g >= 0.0 && eps_g <= 1.0)) {
    throw InvalidParameter(fmt::format("gossip outage must lie in [0, 1], got {}", eps_g));
  }
  const std::uint32_t side = net.side();
  const std::uint32_t n = net.node_count();
  const std::uint64_t fail_below = outage_threshold(eps_g);
  const bool always_fail = eps_g >= 1.0;

  DisseminationTrace trace;
  trace.source = source;
  trace.mode = Dissemination::gossip;
  trace.window = window;
  trace.delivery_slot.assign(n, kUndelivered);
  trace.delivery_slot[source] = 0;
  auto& slot_of = trace.delivery_slot;

  std::uint32_t missing = n - 1;
  std::vector<NodeId> holders{source};
  std::vector<NodeId> fresh;
  NodeId nbr[4];

  for (Slots slot = 1; slot <= window && missing > 0; ++slot) {
    fresh.clear();
    std::size_t keep = 0;
    for (std::size_t h = 0; h < holders.size(); ++h) {
      const NodeId from = holders[h];
      const std::uint32_t c = from % side, r = from / side;
      int deg = 0;
      if (c > 0) nbr[deg++] = from - 1;
      if (c + 1 < side) nbr[deg++] = from + 1;
      if (r > 0) nbr[deg++] = from - side;
      if (r + 1 < side) nbr[deg++] = from + side;

      // A neighbour informed earlier in this same slot was still
      // uninformed when the slot began.
      bool waiting = false;
      for (int j = 0; j < deg; ++j) {
        const Slots s = slot_of[nbr[j]];
        if (s == kUndelivered || s == slot) {
          waiting = true;
          break;
        }
      }
      if (!waiting) continue;
      holders[keep++] = from;
      ++trace.transmissions;
      for (int j = 0; j < deg; ++j) {
        const NodeId to = nbr[j];
        if (slot_of[to] != kUndelivered) continue;
        if (!always_fail && rng() >= fail_below) {
          slot_of[to] = slot;
          fresh.push_back(to);
        }
      }
    }
    holders.resize(keep);
    missing -= std::uint32_t(fresh.size());
    holders.insert(holders.end(), fresh.begin(), fresh.end());
  }
  return trace;
}

DisseminationTrace disseminate_gossip(const wireless::GridNetwork& net,
                                      const wireless::ChannelParams& ch, NodeId source,
                                      Slots window, Rng& rng) {
  return disseminate_gossip(net, wireless::epsilon_gossip(ch, net), source, window, rng);
}

DisseminationTrace disseminate_broadcast(const wireless::GridNetwork& net, const LinkTable& links,
                                         NodeId source, Slots window, Rng& rng) {
  check_window(window);
  if (!net.contains(source)) throw InvalidParameter("source outside the grid");
  DisseminationTrace trace;
  trace.source = source;
  trace.mode = Dissemination::broadcast;
  trace.window = window;
  trace.delivery_slot.assign(net.node_count(), kUndelivered);
  trace.delivery_slot[source] = 0;

  Slots last = 0;
  bool all = true;
  for (NodeId k = 0; k < net.node_count(); ++k) {
    if (k == source) continue;
    const double eps = links.outage(source, k);
    Slots z = 1;
    if (eps >= 1.0) {
      z = kUndelivered;
    } else if (eps > 0.0) {
      // Failures before the first success.
      z += std::geometric_distribution<Slots>(1.0 - eps)(rng);
    }
    if (z > window) {
      all = false;
      continue;
    }
    trace.delivery_slot[k] = z;
    last = std::max(last, z);
  }
  // The source repeats until every destination has it, or the window ends.
  trace.transmissions = std::uint64_t(all ? last : window);
  return trace;
}

DisseminationTrace disseminate_broadcast(const wireless::GridNetwork& net,
                                         const wireless::ChannelParams& ch, NodeId source,
                                         Slots window, Rng& rng) {
  return disseminate_broadcast(net, LinkTable(ch, net), source, window, rng);
}

double energy_account(std::span<const DisseminationTrace> traces,
                      const wireless::ChannelParams& ch) {
  const double tau = wireless::slot_duration(ch);
  double mj = 0.0;
  for (const auto& t : traces) {
    const double pt = t.mode == Dissemination::gossip ? ch.pt_gossip_mw : ch.pt_broadcast_mw;
    mj += double(t.transmissions) * pt * tau;
  }
  return mj;
}

}  // namespace r2c::sim
