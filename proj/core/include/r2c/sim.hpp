#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <type_traits>
#include <vector>

#include "r2c/consensus.hpp"
#include "r2c/types.hpp"
#include "r2c/wireless.hpp"

namespace r2c::sim {

using Rng = consensus::Rng;

/// Trials sharing one generator stream. Streams are keyed by
/// (seed, trial / kTrialsPerStream), so results do not depend on how
/// blocks are spread over workers.
inline constexpr std::uint64_t kTrialsPerStream = 256;

Rng make_stream(std::uint64_t seed, std::uint64_t stream);

/// Runs fn(trial_index, rng) for every trial and returns the results in
/// trial order.
template <typename Fn>
auto run_trials(std::uint64_t trials, std::uint64_t seed, unsigned workers, Fn&& fn,
                std::uint64_t stream_base = 0)
    -> std::vector<std::invoke_result_t<Fn&, std::uint64_t, Rng&>> {
  using Result = std::invoke_result_t<Fn&, std::uint64_t, Rng&>;
  // vector<bool> packs bits, so concurrent writes to neighbours would race.
  static_assert(!std::is_same_v<Result, bool>, "return std::uint8_t instead of bool");
  std::vector<Result> out(trials);
  const std::uint64_t blocks = (trials + kTrialsPerStream - 1) / kTrialsPerStream;
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::uint64_t b = next++; b < blocks; b = next++) {
      try {
        Rng rng = make_stream(seed, stream_base + b);
        const std::uint64_t end = std::min(trials, (b + 1) * kTrialsPerStream);
        for (std::uint64_t t = b * kTrialsPerStream; t < end; ++t) out[t] = fn(t, rng);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = blocks;
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, unsigned(std::max<std::uint64_t>(1, blocks))));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

struct DisseminationTrace {
  NodeId source = 0;
  Dissemination mode = Dissemination::gossip;
  /// Slot in which each node first held the message; 0 at the source,
  /// kUndelivered when the window ran out first.
  std::vector<Slots> delivery_slot;
  std::uint64_t transmissions = 0;
  Slots window = 0;

  bool complete() const;
  /// Largest delivery slot, or kUndelivered when some node missed out.
  Slots completion_slot() const;
};

/// Broadcast outage for every node pair, indexed by lattice offset.
class LinkTable {
 public:
  LinkTable(const wireless::ChannelParams& ch, const wireless::GridNetwork& net);
  double outage(NodeId i, NodeId k) const;

 private:
  std::uint32_t side_;
  std::vector<double> by_offset_;
};

/// Synchronised flooding over the 4-neighbourhood with independent per-link
/// outage eps_g in every slot.
DisseminationTrace disseminate_gossip(const wireless::GridNetwork& net, double eps_g, NodeId source,
                                      Slots window, Rng& rng);
DisseminationTrace disseminate_gossip(const wireless::GridNetwork& net,
                                      const wireless::ChannelParams& ch, NodeId source,
                                      Slots window, Rng& rng);

/// Single-hop broadcast; each destination's slot count is geometric.
DisseminationTrace disseminate_broadcast(const wireless::GridNetwork& net, const LinkTable& links,
                                         NodeId source, Slots window, Rng& rng);
DisseminationTrace disseminate_broadcast(const wireless::GridNetwork& net,
                                         const wireless::ChannelParams& ch, NodeId source,
                                         Slots window, Rng& rng);

/// Transmit energy in mJ: every transmitting node-slot costs P_t * tau.
double energy_account(std::span<const DisseminationTrace> traces,
                      const wireless::ChannelParams& ch);

/// Everything a round needs, validated up front.
struct RoundSetup {
  wireless::GridNetwork net;
  wireless::ChannelParams ch;
  ProtocolMode mode = ProtocolMode::rc;
  Dissemination dissemination = Dissemination::broadcast;
  NodeId proposer = 0;
  std::uint32_t n_tilde = 0;
  std::uint32_t f_faulty = 0;
  consensus::FaultPolicy fault_policy = consensus::FaultPolicy::vote_invert;
  Slots max_perturb_slots = 0;
  /// Dissemination window of every node, indexed by node id.
  std::vector<Slots> windows;

  double tau_s = 0.0;
  double eps_gossip = 0.0;
  LinkTable links;

  /// Number of committing validators (N for RC, n_tilde for R2C).
  std::uint32_t committee_size() const;
  std::uint32_t quorum() const;
};

RoundSetup make_round_setup(const wireless::GridNetwork& net, const wireless::ChannelParams& ch,
                            ProtocolMode mode, Dissemination dissemination, NodeId proposer,
                            std::uint32_t n_tilde, std::uint32_t f_faulty,
                            std::vector<Slots> windows,
                            consensus::FaultPolicy policy = consensus::FaultPolicy::vote_invert,
                            Slots max_perturb_slots = 0);

struct TrialRecord {
  Slots latency_slots = 0;
  double latency_s = 0.0;
  double energy_mj = 0.0;
  bool resilient = true;
  /// Full-set minus representative consensual timestamp, in slots; NaN
  /// when no commit arrived.
  double distortion_slots = 0.0;
  bool dissemination_success = true;
  std::uint32_t f_tilde = 0;
  bool decided = false;
  bool globally_valid = false;
  /// Global validity equals what an all-honest committee would decide.
  bool matches_ground_truth = false;
  /// Slot at which the proposal reached every node (kUndelivered if not).
  Slots proposal_completion_slot = 0;
  double consensual_timestamp = 0.0;
};

/// One full round: proposal, local validation, TDMA commits, aggregation.
TrialRecord run_round(const RoundSetup& setup, Rng& rng);

/// Faulty flags over all nodes; exactly F validators (never the proposer),
/// drawn uniformly.
std::vector<bool> draw_faulty_set(const wireless::GridNetwork& net, NodeId proposer,
                                  std::uint32_t f_faulty, Rng& rng);

/// Faulty count inside a freshly drawn committee, using the same draws as
/// run_round.
std::uint32_t sample_faulty_representatives(const RoundSetup& setup, Rng& rng);

/// Distortion D (slots) of one proposal realisation: population mean of all
/// validators' delivery slots minus the representative sample mean.
double sample_distortion(const RoundSetup& setup, Rng& rng);

struct Moments {
  std::uint64_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
};

struct Frequency {
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;
  double rate() const { return trials == 0 ? 0.0 : double(hits) / double(trials); }
  double ci_low() const;
  double ci_high() const;
};

/// Mean, unbiased variance, normal 95% CI on the mean and quantiles.
/// Non-finite samples are skipped.
Moments summarize(std::span<const double> samples);

struct MonteCarloSummary {
  Moments latency_slots;
  Moments latency_s;
  Moments energy_mj;
  Moments distortion_slots;
  Frequency resilient;
  Frequency dissemination_success;
  Frequency globally_valid;
  Frequency matches_ground_truth;
};

MonteCarloSummary summarize(std::span<const TrialRecord> records);

struct MonteCarloResult {
  std::vector<TrialRecord> records;
  MonteCarloSummary summary;
};

/// `stream_base` offsets the generator streams so that several sweep points
/// can share one seed without sharing draws.
MonteCarloResult monte_carlo(const RoundSetup& setup, std::uint64_t trials, std::uint64_t seed,
                             unsigned workers = 1, std::uint64_t stream_base = 0);

/// Per-node gossip windows: the empirical zeta-quantile of the time to
/// reach every node, floored at the hop eccentricity max_k e_ik.
std::vector<Slots> calibrate_gossip_windows(const wireless::GridNetwork& net,
                                            const wireless::ChannelParams& ch, double zeta,
                                            std::uint64_t trials, std::uint64_t seed,
                                            unsigned workers = 1);

}  // namespace r2c::sim
