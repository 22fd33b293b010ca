#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/hypergeometric.hpp>
#include <catch_amalgamated.hpp>
#include <cmath>
#include <numeric>

#include "r2c/analytics.hpp"
#include "r2c/error.hpp"
#include "r2c/sim.hpp"

using namespace r2c;
using namespace r2c::sim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

wireless::ChannelParams quiet_channel() {
  wireless::ChannelParams ch;
  ch.pt_gossip_mw = 1e12;
  ch.pt_broadcast_mw = 1e12;
  return ch;
}

RoundSetup setup(ProtocolMode mode, Dissemination d, std::uint32_t n_tilde, std::uint32_t f,
                 const wireless::ChannelParams& ch = {}, std::vector<Slots> windows = {}) {
  const wireless::GridNetwork net(9, 10.0);
  if (windows.empty()) windows = analytics::broadcast_windows(ch, net, 0.9999);
  return make_round_setup(net, ch, mode, d, 0, n_tilde, f, std::move(windows));
}

bool same(const TrialRecord& a, const TrialRecord& b) {
  auto eq = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
  return a.latency_slots == b.latency_slots && eq(a.latency_s, b.latency_s) &&
         eq(a.energy_mj, b.energy_mj) && a.resilient == b.resilient &&
         eq(a.distortion_slots, b.distortion_slots) &&
         a.dissemination_success == b.dissemination_success && a.f_tilde == b.f_tilde &&
         a.decided == b.decided && a.globally_valid == b.globally_valid &&
         a.matches_ground_truth == b.matches_ground_truth &&
         a.proposal_completion_slot == b.proposal_completion_slot &&
         eq(a.consensual_timestamp, b.consensual_timestamp);
}

}  // namespace

TEST_CASE("round latency is the sum of the committed windows", "[round]") {
  const auto rc = setup(ProtocolMode::rc, Dissemination::broadcast, 0, 5);
  const Slots total = std::accumulate(rc.windows.begin(), rc.windows.end(), Slots{0});
  CHECK(total == analytics::rc_latency_broadcast(rc.ch, rc.net, 0.9999));
  auto rng = make_stream(1, 0);
  for (int t = 0; t < 50; ++t) {
    const auto r = run_round(rc, rng);
    CHECK(r.latency_slots == total);
    CHECK_THAT(r.latency_s, WithinRel(double(total) * rc.tau_s, 1e-12));
  }

  const auto r2c = setup(ProtocolMode::r2c, Dissemination::broadcast, 20, 5, {},
                         std::vector<Slots>(81, 7));
  for (int t = 0; t < 50; ++t) CHECK(run_round(r2c, rng).latency_slots == 147);

  SECTION("expected R2C latency with uneven windows") {
    const auto s = setup(ProtocolMode::r2c, Dissemination::broadcast, 20, 0);
    const auto mc = monte_carlo(s, 4000, 11);
    const double want = analytics::r2c_latency_broadcast(s.ch, s.net, 0, 20, 0.9999);
    const auto& m = mc.summary.latency_slots;
    CHECK(std::abs(m.mean - want) < 4.0 * std::sqrt(m.variance / double(m.count)) + 1e-9);
  }
}

TEST_CASE("fault-free rounds", "[round]") {
  const auto s = setup(ProtocolMode::r2c, Dissemination::gossip, 20, 0, quiet_channel(),
                       std::vector<Slots>(81, 16));
  auto rng = make_stream(2, 0);
  for (int t = 0; t < 100; ++t) {
    const auto r = run_round(s, rng);
    CHECK(r.resilient);
    CHECK(r.decided);
    CHECK(r.globally_valid);
    CHECK(r.matches_ground_truth);
    CHECK(r.dissemination_success);
    CHECK(r.f_tilde == 0);
    CHECK(r.proposal_completion_slot == 16);
  }
  CHECK(s.quorum() == 20);
  CHECK(s.committee_size() == 20);
}

TEST_CASE("RC equals R2C with every validator", "[round]") {
  for (auto d : {Dissemination::gossip, Dissemination::broadcast}) {
    const auto rc = setup(ProtocolMode::rc, d, 0, 10);
    const auto full = setup(ProtocolMode::r2c, d, 80, 10);
    CHECK(rc.quorum() == full.quorum());
    auto a = make_stream(3, 0), b = make_stream(3, 0);
    for (int t = 0; t < 100; ++t) CHECK(same(run_round(rc, a), run_round(full, b)));
  }
}

TEST_CASE("faulty representatives are hypergeometric", "[round]") {
  const auto s = setup(ProtocolMode::r2c, Dissemination::broadcast, 20, 15);
  const auto draws = run_trials(40000, 4, 2, [&](std::uint64_t, Rng& rng) {
    return sample_faulty_representatives(s, rng);
  });
  const boost::math::hypergeometric_distribution<double> h(15, 20, 80);
  // Pool tails so every bin expects at least 50 hits.
  std::vector<std::pair<unsigned, unsigned>> bins;
  unsigned lo = 0;
  double mass = 0.0;
  for (unsigned k = 0; k <= 15; ++k) {
    mass += boost::math::pdf(h, k);
    if (mass * draws.size() >= 50 && k < 15) {
      bins.emplace_back(lo, k);
      lo = k + 1;
      mass = 0.0;
    }
  }
  bins.back().second = 15;
  double chi2 = 0.0;
  for (auto [a, b] : bins) {
    double p = 0.0;
    for (unsigned k = a; k <= b; ++k) p += boost::math::pdf(h, k);
    const auto hits = std::count_if(draws.begin(), draws.end(),
                                    [&](std::uint32_t x) { return x >= a && x <= b; });
    const double e = p * double(draws.size());
    chi2 += (double(hits) - e) * (double(hits) - e) / e;
  }
  const boost::math::chi_squared_distribution<double> dist(double(bins.size() - 1));
  CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 1e-4);

  std::uint64_t resilient = 0;
  for (auto x : draws) resilient += 20 > 3 * x;
  const double p = analytics::resiliency_exact(80, 15, 20);
  CHECK(std::abs(double(resilient) / draws.size() - p) < 4.5 * std::sqrt(p * (1 - p) / draws.size()));
}

TEST_CASE("distortion is centred", "[round]") {
  for (auto d : {Dissemination::gossip, Dissemination::broadcast}) {
    std::vector<Slots> windows(81, 200);
    const auto s = setup(ProtocolMode::r2c, d, 20, 0, {}, windows);
    const auto xs = run_trials(20000, 5, 2, [&](std::uint64_t, Rng& rng) {
      return sample_distortion(s, rng);
    });
    const auto m = summarize(xs);
    CHECK(m.count == 20000);
    CHECK(std::abs(m.mean) < 4.0 * std::sqrt(m.variance / double(m.count)));

    // Finite-population sampling of a deterministic set: Var(D) is
    // (N - n)/(n N) times the delay variance across validators.
    if (d == Dissemination::gossip) {
      std::vector<double> e;
      for (NodeId v = 1; v < s.net.node_count(); ++v) e.push_back(wireless::shortest_paths(s.net, 0, v).edges);
      const double mean = std::accumulate(e.begin(), e.end(), 0.0) / 80.0;
      double spread = 0.0;
      for (double x : e) spread += (x - mean) * (x - mean);
      // Holds only for lossless links; the default gossip channel is close.
      const double want = (80.0 - 20.0) / (20.0 * 80.0) * spread / 79.0;
      CHECK_THAT(m.variance, WithinRel(want, 0.1));
    }
  }
}

TEST_CASE("resilient committees decide correctly", "[round]") {
  for (auto policy : {consensus::FaultPolicy::vote_invert, consensus::FaultPolicy::vote_random}) {
    const wireless::GridNetwork net(9, 10.0);
    const auto s = make_round_setup(net, quiet_channel(), ProtocolMode::r2c, Dissemination::broadcast,
                                    0, 20, 20, std::vector<Slots>(81, 3), policy);
    auto rng = make_stream(6, 0);
    int resilient = 0, unresilient = 0;
    for (int t = 0; t < 3000; ++t) {
      const auto r = run_round(s, rng);
      CHECK(r.resilient == (20 > 3 * r.f_tilde));
      if (r.resilient) {
        ++resilient;
        CHECK(r.matches_ground_truth == r.decided);
        if (r.decided) CHECK(r.globally_valid);
      } else {
        ++unresilient;
      }
    }
    CHECK(resilient > 0);
    CHECK(unresilient > 0);
  }
  SECTION("timestamp perturbation moves the consensus time, not the vote") {
    const wireless::GridNetwork net(9, 10.0);
    const auto s = make_round_setup(net, quiet_channel(), ProtocolMode::rc, Dissemination::broadcast,
                                    0, 0, 26, std::vector<Slots>(81, 3),
                                    consensus::FaultPolicy::timestamp_perturb, 4);
    auto rng = make_stream(7, 0);
    bool moved = false;
    for (int t = 0; t < 100; ++t) {
      const auto r = run_round(s, rng);
      CHECK(r.globally_valid);
      CHECK(r.distortion_slots == 0.0);
      moved |= r.consensual_timestamp != 1.0;
    }
    CHECK(moved);
  }
}

TEST_CASE("monte carlo is deterministic across workers", "[round]") {
  const auto s = setup(ProtocolMode::r2c, Dissemination::broadcast, 20, 10);
  const auto one = monte_carlo(s, 1500, 8, 1);
  const auto three = monte_carlo(s, 1500, 8, 3);
  REQUIRE(one.records.size() == 1500);
  for (std::size_t i = 0; i < one.records.size(); ++i) CHECK(same(one.records[i], three.records[i]));
  CHECK(one.summary.latency_slots.mean == three.summary.latency_slots.mean);
  const auto shifted = monte_carlo(s, 1500, 8, 1, 1);
  CHECK_FALSE(same(one.records[0], shifted.records[0]));
  CHECK(same(one.records[256], shifted.records[0]));
}

TEST_CASE("summary statistics", "[round]") {
  const std::vector<double> xs{4.0, std::nan(""), 1.0, 3.0, 2.0, INFINITY};
  const auto m = summarize(xs);
  CHECK(m.count == 4);
  CHECK(m.mean == 2.5);
  CHECK_THAT(m.variance, WithinRel(5.0 / 3.0, 1e-14));
  CHECK_THAT(m.ci_high - m.mean, WithinRel(1.959964 * std::sqrt(5.0 / 12.0), 1e-5));
  CHECK_THAT(m.q05, WithinRel(1.15, 1e-12));
  CHECK_THAT(m.q50, WithinRel(2.5, 1e-12));
  CHECK_THAT(m.q95, WithinRel(3.85, 1e-12));
  CHECK(std::isnan(summarize(std::vector<double>{}).mean));
  const auto one = summarize(std::vector<double>{7.0});
  CHECK(one.variance == 0.0);
  CHECK(one.q05 == 7.0);

  Frequency f{30, 100};
  CHECK(f.rate() == 0.3);
  CHECK_THAT(f.ci_high() - 0.3, WithinRel(1.959964 * std::sqrt(0.21 / 100), 1e-5));
  CHECK(Frequency{0, 10}.ci_low() == 0.0);
  CHECK(Frequency{10, 10}.ci_high() == 1.0);
}

TEST_CASE("round setup validation", "[round]") {
  const wireless::GridNetwork net(3, 10.0);
  const wireless::ChannelParams ch;
  const std::vector<Slots> w(9, 3);
  CHECK_THROWS_AS(make_round_setup(net, ch, ProtocolMode::r2c, Dissemination::gossip, 0, 0, 0, w),
                  InvalidParameter);
  CHECK_THROWS_AS(make_round_setup(net, ch, ProtocolMode::r2c, Dissemination::gossip, 0, 9, 0, w),
                  InvalidParameter);
  CHECK_THROWS_AS(make_round_setup(net, ch, ProtocolMode::rc, Dissemination::gossip, 0, 0, 9, w),
                  InvalidParameter);
  CHECK_THROWS_AS(make_round_setup(net, ch, ProtocolMode::rc, Dissemination::gossip, 9, 0, 0, w),
                  InvalidParameter);
  CHECK_THROWS_AS(make_round_setup(net, ch, ProtocolMode::rc, Dissemination::gossip, 0, 0, 0,
                                   std::vector<Slots>(8, 3)),
                  InvalidParameter);
  CHECK_THROWS_AS(make_round_setup(net, ch, ProtocolMode::rc, Dissemination::gossip, 0, 0, 0,
                                   std::vector<Slots>{3, 3, 3, 3, 0, 3, 3, 3, 3}),
                  InvalidParameter);
  const auto rc = make_round_setup(net, ch, ProtocolMode::rc, Dissemination::gossip, 0, 0, 2, w);
  CHECK(rc.n_tilde == 8);
  CHECK(rc.quorum() == 6);
  const auto r2c = make_round_setup(net, ch, ProtocolMode::r2c, Dissemination::gossip, 0, 4, 2, w);
  CHECK(r2c.quorum() == 3);

  auto rng = make_stream(1, 0);
  const auto faulty = draw_faulty_set(net, 4, 8, rng);
  CHECK_FALSE(faulty[4]);
  CHECK(std::count(faulty.begin(), faulty.end(), true) == 8);
}
