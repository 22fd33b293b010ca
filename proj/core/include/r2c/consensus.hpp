#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "r2c/types.hpp"
#include "r2c/wireless.hpp"

namespace r2c::consensus {

using Rng = std::mt19937_64;

struct Action {
  std::string id;
  std::vector<std::uint8_t> payload;
  NodeId proposer = 0;
  /// Id of an action that must already be in the ledger (causal parent).
  std::optional<std::string> depends_on;
};

/// Non-cryptographic 64-bit FNV-1a digest standing in for a signature.
using IntegrityTag = std::uint64_t;

struct ProposalMessage {
  Action action;
  Slots proposed_at = 0;
  std::vector<NodeId> commit_order;
  IntegrityTag integrity_tag = 0;
};

struct CommitMessage {
  NodeId validator = 0;
  bool validity = false;
  Slots timestamp = 0;
  IntegrityTag integrity_tag = 0;
};

ProposalMessage make_proposal(Action action, Slots proposed_at, std::vector<NodeId> commit_order);
CommitMessage make_commit(NodeId validator, bool validity, Slots timestamp);
bool verify(const ProposalMessage& m);
bool verify(const CommitMessage& m);

struct RoundOutcome {
  /// False when fewer than `quorum` commits arrived; the round then failed.
  bool decided = false;
  bool globally_valid = false;
  double consensual_timestamp = 0.0;
  std::uint32_t votes_received = 0;
  std::uint32_t valid_votes = 0;
  std::optional<double> distortion_vs_full;
};

enum class FaultPolicy { vote_invert, vote_random, timestamp_perturb };

struct NodeBehavior {
  bool faulty = false;
  FaultPolicy policy = FaultPolicy::vote_invert;
  /// Perturbation bound for FaultPolicy::timestamp_perturb.
  Slots max_perturb_slots = 0;

  static NodeBehavior honest() { return {}; }
  static NodeBehavior faulty_with(FaultPolicy p, Slots max_perturb = 0) {
    return {true, p, max_perturb};
  }
};

FaultPolicy parse_fault_policy(std::string_view s);
std::string_view to_string(FaultPolicy p);

enum class Role : std::uint8_t { proposer, validator, acceptor };

struct RoleMap {
  std::vector<Role> roles;
  /// Validators in their commit order S(.).
  std::vector<NodeId> commit_order;
};

/// RC: every non-proposer validates. R2C: a uniform n_tilde-subset does.
/// Both draw the commit order by the same partial shuffle, so R2C with
/// n_tilde = N consumes the generator exactly like RC.
RoleMap assign_roles(const wireless::GridNetwork& net, NodeId proposer, ProtocolMode mode,
                     std::uint32_t n_tilde, Rng& rng);

enum class EntryStatus { accepted, rejected_for_retry };

struct LedgerEntry {
  Action action;
  double consensual_timestamp = 0.0;
  EntryStatus status = EntryStatus::accepted;
};

/// Ordered chain of finalised actions held by every node.
class Ledger {
 public:
  std::span<const LedgerEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// An accepted entry with this id.
  const LedgerEntry* find_accepted(std::string_view id) const;
  /// Same id already accepted with a different payload.
  bool conflicts(const Action& a) const;

  void append(LedgerEntry e) { entries_.push_back(std::move(e)); }

 private:
  std::vector<LedgerEntry> entries_;
};

struct LocalValidation {
  bool validity = false;
  Slots timestamp = 0;
};

/// Phase 2 at one validator. The timestamp is the delivery slot; local
/// compute time is zero.
LocalValidation local_validate(const Ledger& ledger, const Action& action, Slots proposed_at,
                               Slots delivery_slot, const NodeBehavior& behavior, Rng& rng);

/// Phase 4 majority rule over the commits that arrived.
RoundOutcome global_validate(std::span<const CommitMessage> commits, std::uint32_t quorum);

struct ValidatedAction {
  Action action;
  RoundOutcome outcome;
};

/// Appends globally valid actions in consensual-timestamp order (ties by
/// action id). Conflicting or causally premature actions are kept in the
/// ledger as rejected_for_retry.
Ledger order_actions(Ledger ledger, std::span<const ValidatedAction> outcomes);

}  // namespace r2c::consensus
