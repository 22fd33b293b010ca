#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "r2c/error.hpp"
#include "r2c/sim.hpp"

namespace r2c::sim {

namespace {

constexpr double kZ95 = 1.959963984540054;

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::nan("");
  const double pos = q * double(v.size() - 1);
  const auto lo = std::size_t(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

template <typename Get>
Moments moments_of(std::span<const TrialRecord> records, Get get) {
  std::vector<double> xs;
  xs.reserve(records.size());
  for (const auto& r : records) xs.push_back(get(r));
  return summarize(xs);
}

template <typename Pred>
Frequency frequency_of(std::span<const TrialRecord> records, Pred pred) {
  Frequency f;
  f.trials = records.size();
  for (const auto& r : records) f.hits += pred(r) ? 1 : 0;
  return f;
}

}  // namespace

double Frequency::ci_low() const {
  if (trials == 0) return 0.0;
  const double p = rate();
  return std::max(0.0, p - kZ95 * std::sqrt(p * (1.0 - p) / double(trials)));
}

double Frequency::ci_high() const {
  if (trials == 0) return 0.0;
  const double p = rate();
  return std::min(1.0, p + kZ95 * std::sqrt(p * (1.0 - p) / double(trials)));
}

Moments summarize(std::span<const double> samples) {
  std::vector<double> xs;
  xs.reserve(samples.size());
  for (double x : samples) {
    if (std::isfinite(x)) xs.push_back(x);
  }
  Moments m;
  m.count = xs.size();
  if (xs.empty()) {
    m.mean = m.variance = m.ci_low = m.ci_high = m.q05 = m.q50 = m.q95 = std::nan("");
    return m;
  }
  // Two-pass in sample order, so the result is independent of scheduling.
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / double(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.variance = xs.size() > 1 ? ss / double(xs.size() - 1) : 0.0;
  const double half = kZ95 * std::sqrt(m.variance / double(xs.size()));
  m.ci_low = m.mean - half;
  m.ci_high = m.mean + half;
  std::sort(xs.begin(), xs.end());
  m.q05 = quantile_sorted(xs, 0.05);
  m.q50 = quantile_sorted(xs, 0.50);
  m.q95 = quantile_sorted(xs, 0.95);
  return m;
}

MonteCarloSummary summarize(std::span<const TrialRecord> records) {
  MonteCarloSummary s;
  s.latency_slots = moments_of(records, [](const auto& r) { return double(r.latency_slots); });
  s.latency_s = moments_of(records, [](const auto& r) { return r.latency_s; });
  s.energy_mj = moments_of(records, [](const auto& r) { return r.energy_mj; });
  s.distortion_slots = moments_of(records, [](const auto& r) { return r.distortion_slots; });
  s.resilient = frequency_of(records, [](const auto& r) { return r.resilient; });
  s.dissemination_success =
      frequency_of(records, [](const auto& r) { return r.dissemination_success; });
  s.globally_valid = frequency_of(records, [](const auto& r) { return r.globally_valid; });
  s.matches_ground_truth =
      frequency_of(records, [](const auto& r) { return r.matches_ground_truth; });
  return s;
}

MonteCarloResult monte_carlo(const RoundSetup& setup, std::uint64_t trials, std::uint64_t seed,
                             unsigned workers, std::uint64_t stream_base) {
  if (trials == 0) throw InvalidParameter("monte_carlo needs at least one trial");
  MonteCarloResult out;
  out.records = run_trials(trials, seed, workers,
                           [&](std::uint64_t, Rng& rng) { return run_round(setup, rng); },
                           stream_base);
  out.summary = summarize(out.records);
  return out;
}

std::vector<Slots> calibrate_gossip_windows(const wireless::GridNetwork& net,
                                            const wireless::ChannelParams& ch, double zeta,
                                            std::uint64_t trials, std::uint64_t seed,
                                            unsigned workers) {
  if (!(zeta >= 0.0 && zeta < 1.0)) {
    throw InvalidParameter(fmt::format("zeta must lie in [0, 1), got {}", zeta));
  }
  const double eps = wireless::epsilon_gossip(ch, net);
  const std::uint32_t side = net.side();
  std::vector<Slots> windows(net.node_count(), 0);

  // The lattice and the channel are invariant under the square's symmetry
  // group, so one calibration serves every node of an orbit.
  std::map<std::pair<std::uint32_t, std::uint32_t>, Slots> by_orbit;
  std::uint64_t orbit_index = 0;
  for (NodeId i = 0; i < net.node_count(); ++i) {
    std::uint32_t c = std::min(net.column(i), side - 1 - net.column(i));
    std::uint32_t r = std::min(net.row(i), side - 1 - net.row(i));
    if (c > r) std::swap(c, r);
    auto [it, inserted] = by_orbit.try_emplace({c, r}, 0);
    if (inserted) {
      const Slots floor = wireless::max_hops(net, i);
      Slots w = floor;
      if (trials > 0 && zeta > 0.0 && side > 1) {
        // Generous cap; an incomplete flood counts as needing the whole cap.
        const double slack = double(std::max<Slots>(4 * floor, floor + 64));
        const auto cap = Slots(std::ceil(slack / std::max(1e-3, 1.0 - eps)));
        const NodeId source = net.node_at(c, r);
        auto spans = run_trials(
            trials, seed, workers,
            [&](std::uint64_t, Rng& rng) {
              const auto t = disseminate_gossip(net, eps, source, cap, rng);
              const Slots done = t.completion_slot();
              return done == kUndelivered ? cap : done;
            },
            orbit_index << 32);
        std::sort(spans.begin(), spans.end());
        const auto rank = std::uint64_t(std::ceil(zeta * double(trials) - 1e-9));
        const Slots q = spans[std::clamp<std::uint64_t>(rank, 1, trials) - 1];
        w = std::max(floor, q);
      }
      it->second = w;
      ++orbit_index;
    }
    windows[i] = it->second;
  }
  return windows;
}

}  // namespace r2c::sim
