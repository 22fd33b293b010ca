#include "r2c/consensus.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <numeric>

#include "r2c/error.hpp"

namespace r2c::consensus {

namespace {

class Fnv1a {
 public:
  void add(const void* data, std::size_t len) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ull;
    }
  }
  template <typename T>
  void add_value(const T& v) {
    add(&v, sizeof(v));
  }
  std::uint64_t digest() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

IntegrityTag tag_of(const Action& a, Slots proposed_at, std::span<const NodeId> order) {
  Fnv1a h;
  h.add(a.id.data(), a.id.size());
  h.add(a.payload.data(), a.payload.size());
  h.add_value(a.proposer);
  h.add_value(proposed_at);
  for (NodeId v : order) h.add_value(v);
  return h.digest();
}

IntegrityTag tag_of(NodeId validator, bool validity, Slots timestamp) {
  Fnv1a h;
  h.add_value(validator);
  const std::uint8_t bit = validity ? 1 : 0;
  h.add_value(bit);
  h.add_value(timestamp);
  return h.digest();
}

}  // namespace

ProposalMessage make_proposal(Action action, Slots proposed_at, std::vector<NodeId> commit_order) {
  ProposalMessage m{std::move(action), proposed_at, std::move(commit_order), 0};
  m.integrity_tag = tag_of(m.action, m.proposed_at, m.commit_order);
  return m;
}

CommitMessage make_commit(NodeId validator, bool validity, Slots timestamp) {
  return {validator, validity, timestamp, tag_of(validator, validity, timestamp)};
}

bool verify(const ProposalMessage& m) {
  return m.integrity_tag == tag_of(m.action, m.proposed_at, m.commit_order);
}

bool verify(const CommitMessage& m) {
  return m.integrity_tag == tag_of(m.validator, m.validity, m.timestamp);
}

FaultPolicy parse_fault_policy(std::string_view s) {
  if (s == "vote-invert" || s == "vote_invert") return FaultPolicy::vote_invert;
  if (s == "vote-random" || s == "vote_random") return FaultPolicy::vote_random;
  if (s == "timestamp-perturb" || s == "timestamp_perturb") return FaultPolicy::timestamp_perturb;
  throw InvalidParameter(fmt::format("unknown fault policy '{}'", s));
}

std::string_view to_string(FaultPolicy p) {
  switch (p) {
    case FaultPolicy::vote_invert:
      return "vote-invert";
    case FaultPolicy::vote_random:
      return "vote-random";
    case FaultPolicy::timestamp_perturb:
      return "timestamp-perturb";
  }
  return "vote-invert";
}

RoleMap assign_roles(const wireless::GridNetwork& net, NodeId proposer, ProtocolMode mode,
                     std::uint32_t n_tilde, Rng& rng) {
  if (!net.contains(proposer)) throw InvalidParameter("proposer outside the grid");
  const std::uint32_t n = net.validator_count();
  std::uint32_t k = n;
  if (mode == ProtocolMode::r2c) {
    if (n_tilde < 1 || n_tilde > n) {
      throw InvalidParameter(
          fmt::format("representative count {} outside [1, {}]", n_tilde, n));
    }
    k = n_tilde;
  }

  std::vector<NodeId> pool;
  pool.reserve(n);
  for (NodeId v = 0; v < net.node_count(); ++v) {
    if (v != proposer) pool.push_back(v);
  }
  // Partial Fisher-Yates: the first k slots are a uniform ordered k-subset.
  for (std::uint32_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::uint32_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);

  RoleMap out;
  out.roles.assign(net.node_count(), Role::acceptor);
  out.roles[proposer] = Role::proposer;
  for (NodeId v : pool) out.roles[v] = Role::validator;
  out.commit_order = std::move(pool);
  return out;
}

const LedgerEntry* Ledger::find_accepted(std::string_view id) const {
  for (const auto& e : entries_) {
    if (e.status == EntryStatus::accepted && e.action.id == id) return &e;
  }
  return nullptr;
}

bool Ledger::conflicts(const Action& a) const {
  const auto* prior = find_accepted(a.id);
  return prior != nullptr && prior->action.payload != a.payload;
}

LocalValidation local_validate(const Ledger& ledger, const Action& action, Slots proposed_at,
                               Slots delivery_slot, const NodeBehavior& behavior, Rng& rng) {
  if (delivery_slot == kUndelivered) {
    throw InvalidParameter("local validation needs a delivered proposal");
  }
  if (delivery_slot < proposed_at) {
    throw InvalidParameter("proposal delivered before it was proposed");
  }
  LocalValidation out{!ledger.conflicts(action), delivery_slot};
  if (!behavior.faulty) return out;
  switch (behavior.policy) {
    case FaultPolicy::vote_invert:
      out.validity = !out.validity;
      break;
    case FaultPolicy::vote_random:
      out.validity = std::bernoulli_distribution(0.5)(rng);
      break;
    case FaultPolicy::timestamp_perturb: {
      const Slots m = std::max<Slots>(0, behavior.max_perturb_slots);
      const Slots shift = std::uniform_int_distribution<Slots>(-m, m)(rng);
      out.timestamp = std::max(proposed_at, delivery_slot + shift);
      break;
    }
  }
  return out;
}

RoundOutcome global_validate(std::span<const CommitMessage> commits, std::uint32_t quorum) {
  RoundOutcome out;
  out.votes_received = static_cast<std::uint32_t>(commits.size());
  if (commits.empty()) return out;
  double sum = 0.0;
  for (const auto& c : commits) {
    sum += double(c.timestamp);
    if (c.validity) ++out.valid_votes;
  }
  out.consensual_timestamp = sum / double(commits.size());
  if (out.votes_received < quorum) return out;
  out.decided = true;
  out.globally_valid = out.valid_votes > out.votes_received - out.valid_votes;
  return out;
}

Ledger order_actions(Ledger ledger, std::span<const ValidatedAction> outcomes) {
  std::vector<const ValidatedAction*> valid;
  for (const auto& o : outcomes) {
    if (o.outcome.decided && o.outcome.globally_valid) valid.push_back(&o);
  }
  std::stable_sort(valid.begin(), valid.end(), [](const auto* a, const auto* b) {
    if (a->outcome.consensual_timestamp != b->outcome.consensual_timestamp) {
      return a->outcome.consensual_timestamp < b->outcome.consensual_timestamp;
    }
    return a->action.id < b->action.id;
  });
  for (const auto* o : valid) {
    LedgerEntry e{o->action, o->outcome.consensual_timestamp, EntryStatus::accepted};
    const auto* prior = ledger.find_accepted(o->action.id);
    if (prior != nullptr && prior->action.payload == o->action.payload) continue;
    const bool premature =
        o->action.depends_on.has_value() && ledger.find_accepted(*o->action.depends_on) == nullptr;
    if (prior != nullptr || premature) e.status = EntryStatus::rejected_for_retry;
    ledger.append(std::move(e));
  }
  return ledger;
}

}  // namespace r2c::consensus
