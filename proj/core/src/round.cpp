#include <fmt/core.h>

#include <cmath>
#include <numeric>

#include "r2c/error.hpp"
#include "r2c/sim.hpp"

namespace r2c::sim {

namespace {

DisseminationTrace disseminate(const RoundSetup& s, NodeId source, Rng& rng) {
  return s.dissemination == Dissemination::gossip
             ? disseminate_gossip(s.net, s.eps_gossip, source, s.windows[source], rng)
             : disseminate_broadcast(s.net, s.links, source, s.windows[source], rng);
}

consensus::Action round_action(NodeId proposer) {
  return {"action", {0x52, 0x32, 0x43}, proposer, std::nullopt};
}

}  // namespace

std::uint32_t RoundSetup::committee_size() const {
  return mode == ProtocolMode::rc ? net.validator_count() : n_tilde;
}

std::uint32_t RoundSetup::quorum() const {
  const std::uint32_t n = net.validator_count();
  if (mode == ProtocolMode::rc) return std::max<std::uint32_t>(1, n - f_faulty);
  // Representatives minus the expected faulty share.
  const auto expected_faulty =
      static_cast<std::uint32_t>(std::ceil(double(f_faulty) * double(n_tilde) / double(n)));
  return n_tilde > expected_faulty ? n_tilde - expected_faulty : 1;
}

RoundSetup make_round_setup(const wireless::GridNetwork& net, const wireless::ChannelParams& ch,
                            ProtocolMode mode, Dissemination dissemination, NodeId proposer,
                            std::uint32_t n_tilde, std::uint32_t f_faulty,
                            std::vector<Slots> windows, consensus::FaultPolicy policy,
                            Slots max_perturb_slots) {
  ch.validate();
  if (net.node_count() < 2) throw InvalidParameter("a round needs at least two nodes");
  if (!net.contains(proposer)) throw InvalidParameter("proposer outside the grid");
  const std::uint32_t n = net.validator_count();
  if (mode == ProtocolMode::rc) n_tilde = n;
  if (n_tilde < 1 || n_tilde > n) {
    throw InvalidParameter(fmt::format("representative count {} outside [1, {}]", n_tilde, n));
  }
  if (f_faulty > n) {
    throw InvalidParameter(fmt::format("F = {} exceeds the validator count {}", f_faulty, n));
  }
  if (windows.size() != net.node_count()) {
    throw InvalidParameter(
        fmt::format("expected {} windows, got {}", net.node_count(), windows.size()));
  }
  for (Slots w : windows) {
    if (w < 1) throw InvalidParameter("every dissemination window must be >= 1 slot");
  }
  return RoundSetup{net,
                    ch,
                    mode,
                    dissemination,
                    proposer,
                    n_tilde,
                    f_faulty,
                    policy,
                    max_perturb_slots,
                    std::move(windows),
                    wireless::slot_duration(ch),
                    wireless::epsilon_gossip(ch, net),
                    LinkTable(ch, net)};
}

std::vector<bool> draw_faulty_set(const wireless::GridNetwork& net, NodeId proposer,
                                  std::uint32_t f_faulty, Rng& rng) {
  std::vector<bool> faulty(net.node_count(), false);
  if (f_faulty == 0) return faulty;
  std::vector<NodeId> pool;
  pool.reserve(net.validator_count());
  for (NodeId v = 0; v < net.node_count(); ++v) {
    if (v != proposer) pool.push_back(v);
  }
  const auto n = std::uint32_t(pool.size());
  for (std::uint32_t i = 0; i < f_faulty; ++i) {
    std::uniform_int_distribution<std::uint32_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
    faulty[pool[i]] = true;
  }
  return faulty;
}

std::uint32_t sample_faulty_representatives(const RoundSetup& s, Rng& rng) {
  const auto faulty = draw_faulty_set(s.net, s.proposer, s.f_faulty, rng);
  const auto roles = consensus::assign_roles(s.net, s.proposer, s.mode, s.n_tilde, rng);
  std::uint32_t f_tilde = 0;
  for (NodeId v : roles.commit_order) f_tilde += faulty[v] ? 1 : 0;
  return f_tilde;
}

double sample_distortion(const RoundSetup& s, Rng& rng) {
  const auto roles = consensus::assign_roles(s.net, s.proposer, s.mode, s.n_tilde, rng);
  const auto trace = disseminate(s, s.proposer, rng);
  double all = 0.0, rep = 0.0;
  std::uint32_t all_n = 0, rep_n = 0;
  for (NodeId v = 0; v < s.net.node_count(); ++v) {
    const Slots z = trace.delivery_slot[v];
    if (v == s.proposer || z == kUndelivered) continue;
    all += double(z);
    ++all_n;
    if (roles.roles[v] == consensus::Role::validator) {
      rep += double(z);
      ++rep_n;
    }
  }
  if (all_n == 0 || rep_n == 0) return std::nan("");
  return all / all_n - rep / rep_n;
}

TrialRecord run_round(const RoundSetup& s, Rng& rng) {
  using namespace consensus;
  const NodeId p = s.proposer;
  const std::uint32_t nodes = s.net.node_count();

  const auto faulty = draw_faulty_set(s.net, p, s.f_faulty, rng);
  const auto roles = assign_roles(s.net, p, s.mode, s.n_tilde, rng);

  // Phase 1: proposal.
  const Slots proposed_at = 0;
  const auto proposal = make_proposal(round_action(p), proposed_at, roles.commit_order);
  std::vector<DisseminationTrace> traces;
  traces.reserve(roles.commit_order.size() + 1);
  traces.push_back(disseminate(s, p, rng));
  const auto& prop_trace = traces.front();

  // Phase 2 at every validator that got the proposal. Acceptors' results are
  // the counterfactual full-set validation used for the distortion D.
  const Ledger ledger;
  std::vector<std::optional<LocalValidation>> local(nodes);
  double full_sum = 0.0;
  std::uint32_t full_n = 0;
  for (NodeId v = 0; v < nodes; ++v) {
    if (v == p || prop_trace.delivery_slot[v] == kUndelivered) continue;
    const NodeBehavior behavior = faulty[v] ? NodeBehavior::faulty_with(s.fault_policy,
                                                                        s.max_perturb_slots)
                                            : NodeBehavior::honest();
    local[v] = local_validate(ledger, proposal.action, proposed_at,
                              proposed_at + prop_trace.delivery_slot[v], behavior, rng);
    full_sum += double(local[v]->timestamp);
    ++full_n;
  }

  // Phase 3: TDMA commit windows in S(.) order. A commit counts once it has
  // reached every node inside its window.
  TrialRecord rec;
  rec.dissemination_success = prop_trace.complete();
  Slots elapsed = s.windows[p];
  std::vector<CommitMessage> commits;
  commits.reserve(roles.commit_order.size());
  for (NodeId v : roles.commit_order) {
    elapsed += s.windows[v];
    rec.f_tilde += faulty[v] ? 1 : 0;
    if (!local[v]) {
      rec.dissemination_success = false;
      continue;
    }
    traces.push_back(disseminate(s, v, rng));
    if (traces.back().complete()) {
      commits.push_back(make_commit(v, local[v]->validity, local[v]->timestamp));
    } else {
      rec.dissemination_success = false;
    }
  }

  // Phase 4.
  const auto outcome = global_validate(commits, s.quorum());
  const bool honest_validity = !ledger.conflicts(proposal.action);

  const auto committee = std::uint32_t(roles.commit_order.size());
  rec.latency_slots = elapsed;
  rec.latency_s = double(elapsed) * s.tau_s;
  rec.energy_mj = energy_account(traces, s.ch);
  rec.resilient = committee > 3 * rec.f_tilde;
  rec.decided = outcome.decided;
  rec.globally_valid = outcome.globally_valid;
  rec.matches_ground_truth = outcome.decided && outcome.globally_valid == honest_validity;
  rec.proposal_completion_slot = prop_trace.completion_slot();
  rec.consensual_timestamp = outcome.consensual_timestamp;
  rec.distortion_slots = (outcome.votes_received > 0 && full_n > 0)
                             ? full_sum / full_n - outcome.consensual_timestamp
                             : std::nan("");
  return rec;
}

}  // namespace r2c::sim
