#include "criteria.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <bit>
#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include "r2c/analytics.hpp"
#include "r2c/error.hpp"
#include "r2c/experiments.hpp"
#include "r2c/sim.hpp"
#include "r2c/wireless.hpp"

namespace r2c::acceptance {

namespace {

namespace mp = boost::multiprecision;
using analytics::PsiSign;

struct Verdict {
  bool passed;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<Verdict(unsigned)> run;
};

constexpr std::uint64_t kSeed = 12345;

// --- 1 ---------------------------------------------------------------------

Verdict erf_approximant(unsigned) {
  using Wide = mp::cpp_bin_float_quad;
  double worst_rel = 0.0, worst_x = 0.0;
  for (int i = 1; i <= 6000; ++i) {
    const double x = i * 1e-3;
    const double ref = static_cast<double>(boost::math::erf(Wide(x)));
    const double rel = std::abs(analytics::erf_approx(x) - ref) / ref;
    if (rel > worst_rel) {
      worst_rel = rel;
      worst_x = x;
    }
  }
  double worst_trip = 0.0;
  for (int i = 0; i <= 3000; ++i) {
    const double x = i * 1e-3;
    worst_trip = std::max(worst_trip, std::abs(analytics::erf_approx_inv(analytics::erf_approx(x)) - x));
  }
  return {worst_rel <= 0.004 && worst_trip <= 1e-6,
          fmt::format("max rel err {:.4e} at x={:.3f} (<= 4e-3); roundtrip {:.2e} (<= 1e-6)",
                      worst_rel, worst_x, worst_trip)};
}

// --- 2 ---------------------------------------------------------------------

Verdict resiliency_enumeration(unsigned) {
  double worst = 0.0;
  int cases = 0;
  std::string where = "-";
  for (std::uint32_t n = 1; n <= 12; ++n) {
    for (std::uint32_t f = 0; f <= n; ++f) {
      // Faulty nodes are the low f bits; every committee is a bitmask.
      const std::uint32_t faulty = (1u << f) - 1u;
      std::vector<std::uint64_t> good(n + 1, 0), total(n + 1, 0);
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        const int k = std::popcount(mask);
        ++total[k];
        if (3 * std::popcount(mask & faulty) < k) ++good[k];
      }
      for (std::uint32_t k = 1; k <= n; ++k) {
        const mp::cpp_rational p(mp::cpp_int(good[k]), mp::cpp_int(total[k]));
        const double err = std::abs(analytics::resiliency_exact(n, f, k) - static_cast<double>(p));
        ++cases;
        if (err > worst) {
          worst = err;
          where = fmt::format("N={} F={} Nt={}", n, f, k);
        }
      }
    }
  }
  return {worst <= 1e-12,
          fmt::format("{} cases, max |exact - enumeration| {:.2e} ({}) (<= 1e-12)", cases, worst,
                      where)};
}

// --- 3 ---------------------------------------------------------------------

Verdict resiliency_curves(unsigned workers) {
  auto s = experiments::builtin_scenario("fig3");
  s.seed = kSeed;
  s.trials = 100000;
  const auto rows = experiments::run_scenario(s, workers);

  std::map<std::string, double> exact;
  for (const auto& r : rows) {
    if (r.metric.rfind("resiliency_exact", 0) == 0) {
      exact[r.metric.substr(16) + fmt::format("@{}", r.sweep_value)] = r.value;
    }
  }
  double worst_gap = 0.0, worst_z = 0.0;
  std::string gap_at = "-", z_at = "-";
  int gap_over = 0, z_over = 0, points = 0;
  for (const auto& r : rows) {
    const bool normal = r.metric.rfind("resiliency_normal", 0) == 0;
    const bool mc = r.metric.rfind("resiliency_mc", 0) == 0;
    if (!normal && !mc) continue;
    const std::string series = r.metric.substr(normal ? 17 : 13);
    const double p = exact.at(series + fmt::format("@{}", r.sweep_value));
    const std::string at = fmt::format("{} Nt={}", series, r.sweep_value);
    if (normal) {
      ++points;
      const double gap = std::abs(r.value - p);
      gap_over += gap > 0.05;
      if (gap > worst_gap) {
        worst_gap = gap;
        gap_at = at;
      }
    } else {
      const double sigma = std::sqrt(p * (1.0 - p) / double(r.trials));
      const double dev = std::abs(r.value - p);
      const double z = sigma > 0.0 ? dev / sigma : (dev == 0.0 ? 0.0 : INFINITY);
      z_over += z > 3.0;
      if (z > worst_z) {
        worst_z = z;
        z_at = at;
      }
    }
  }
  const bool normal_ok = gap_over == 0;
  const bool mc_ok = z_over == 0;
  return {normal_ok && mc_ok,
          fmt::format("normal vs exact: max gap {:.4f} at {}, {}/{} points > 0.05 [{}]; "
                      "MC vs exact: max {:.2f} sigma at {}, {} points > 3 sigma [{}]",
                      worst_gap, gap_at, gap_over, points, normal_ok ? "ok" : "FAIL", worst_z,
                      z_at, z_over, mc_ok ? "ok" : "FAIL")};
}

// --- 4 ---------------------------------------------------------------------

/// Independent lattice sum: hop moments are deterministic, so the plus form
/// is sum m^2 + ((sum m)^2 - sum m^2) / (N - 1).
double lattice_psi_plus(std::uint32_t side, std::uint32_t pc, std::uint32_t pr) {
  double s1 = 0.0, s2 = 0.0;
  for (std::uint32_t r = 0; r < side; ++r) {
    for (std::uint32_t c = 0; c < side; ++c) {
      if (r == pr && c == pc) continue;
      const double e = std::abs(int(c) - int(pc)) + std::abs(int(r) - int(pr));
      s1 += e;
      s2 += e * e;
    }
  }
  const double n = double(side) * side - 1.0;
  return s2 + (s1 * s1 - s2) / (n - 1.0);
}

Verdict psi_closed_forms(unsigned) {
  double worst = 0.0;
  std::string where = "-";
  auto check = [&](double got, double want, std::string label) {
    const double rel = std::abs(got - want) / std::abs(want);
    if (rel >= worst) {
      worst = rel;
      where = std::move(label);
    }
  };
  for (std::uint32_t side : {3u, 5u, 9u}) {
    const wireless::GridNetwork net(side, 10.0);
    const std::uint32_t n = net.validator_count();
    const double corner = lattice_psi_plus(side, 0, 0);
    const double center = lattice_psi_plus(side, side / 2, side / 2);
    check(analytics::psi_gossip_corner_closed_form(n), corner, fmt::format("corner N={}", n));
    check(analytics::psi_gossip_center_closed_form(n), center, fmt::format("center N={}", n));
    check(analytics::psi_gossip(net, net.corner(), PsiSign::paper_plus).value, corner,
          fmt::format("lattice corner N={}", n));
    check(analytics::psi_gossip(net, net.center(), PsiSign::paper_plus).value, center,
          fmt::format("lattice center N={}", n));
  }
  const wireless::GridNetwork g3(3, 10.0);
  const double c8 = analytics::psi_gossip(g3, g3.corner(), PsiSign::paper_plus).value;
  const double m8 = analytics::psi_gossip(g3, g3.center(), PsiSign::paper_plus).value;
  const bool spots = std::abs(c8 - 87.4286) < 5e-5 && std::abs(m8 - 37.7143) < 5e-5;
  return {worst <= 1e-9 && spots,
          fmt::format("max rel err {:.2e} at {} (<= 1e-9); N=8 corner {:.4f} (87.4286), "
                      "center {:.4f} (37.7143)",
                      worst, where, c8, m8)};
}

// --- 5 ---------------------------------------------------------------------

Verdict sign_arbitration(unsigned workers) {
  const wireless::ChannelParams ch;
  const wireless::GridNetwork net(9, 10.0);
  const std::uint32_t n = net.validator_count(), k = 20;
  const auto setup = sim::make_round_setup(net, ch, ProtocolMode::r2c, Dissemination::broadcast,
                                           net.corner(), k, 0,
                                           analytics::broadcast_windows(ch, net, 0.9999));
  const auto d = sim::run_trials(100000, kSeed, workers, [&](std::uint64_t, sim::Rng& rng) {
    return sim::sample_distortion(setup, rng);
  });
  const auto m = sim::summarize(d);
  const double minus = analytics::sigma_d_squared(
      n, k, 1.0, analytics::psi_broadcast(ch, net, net.corner(), PsiSign::corrected_minus).value);
  const double plus = analytics::sigma_d_squared(
      n, k, 1.0, analytics::psi_broadcast(ch, net, net.corner(), PsiSign::paper_plus).value);
  const double rel = std::abs(m.variance - minus) / minus;
  const double z = std::abs(m.mean) / std::sqrt(m.variance / double(m.count));
  return {rel <= 0.05 && m.variance < plus && z <= 3.0,
          fmt::format("Var(D) {:.5f} vs minus {:.5f} (rel {:.2f}%, <= 5%), plus {:.5f}; "
                      "mean {:.2e} ({:.2f} sigma, <= 3)",
                      m.variance, minus, 100.0 * rel, plus, m.mean, z)};
}

// --- 6 ---------------------------------------------------------------------

Verdict latency_bounds(unsigned workers) {
  const wireless::ChannelParams ch;
  const wireless::GridNetwork net(9, 10.0);
  const double zeta = 0.9999;
  const std::uint64_t trials = 10000;
  const NodeId p = net.corner();

  const auto gossip_windows = sim::calibrate_gossip_windows(net, ch, zeta, 10000, kSeed, workers);
  const auto rc_g = sim::monte_carlo(
      sim::make_round_setup(net, ch, ProtocolMode::rc, Dissemination::gossip, p, 0, 0,
                            gossip_windows),
      trials, kSeed, workers);
  const double bound = analytics::rc_latency_gossip_lb(net.validator_count());
  std::uint64_t above = 0, tight = 0;
  const Slots ecc = wireless::max_hops(net, p);
  for (const auto& r : rc_g.records) {
    above += double(r.latency_slots) >= bound;
    tight += r.proposal_completion_slot == ecc;
  }

  const Slots eq_sum = analytics::rc_latency_broadcast(ch, net, zeta);
  const auto rc_b = sim::monte_carlo(
      sim::make_round_setup(net, ch, ProtocolMode::rc, Dissemination::broadcast, p, 0, 0,
                            analytics::broadcast_windows(ch, net, zeta)),
      trials, kSeed, workers, 1ull << 40);
  std::uint64_t exact = 0;
  for (const auto& r : rc_b.records) exact += r.latency_slots == eq_sum;

  const double tight_rate = double(tight) / double(trials);
  return {above == trials && tight_rate >= 0.99 && exact == trials,
          fmt::format("gossip latency >= {} in {}/{}; proposal done in {} slots in {:.2f}% "
                      "(>= 99%); broadcast latency == {} in {}/{}",
                      bound, above, trials, ecc, 100.0 * tight_rate, eq_sum, exact, trials)};
}

// --- 7 ---------------------------------------------------------------------

Verdict broadcast_window(unsigned workers) {
  const wireless::ChannelParams ch;
  const wireless::GridNetwork net(9, 10.0);
  const sim::LinkTable links(ch, net);
  const double zeta = 0.99;
  const std::uint64_t trials = 100000;
  const double limit = (1.0 - zeta) + 3.0 * std::sqrt(zeta * (1.0 - zeta) / double(trials));
  bool ok = true;
  std::string detail;
  std::uint64_t stream = 0;
  for (auto [label, node] : {std::pair{"corner", net.corner()}, std::pair{"center", net.center()}}) {
    const Slots w = wireless::broadcast_window(ch, net, node, zeta);
    const auto fails = sim::run_trials(
        trials, kSeed, workers,
        [&](std::uint64_t, sim::Rng& rng) -> std::uint8_t {
          return !sim::disseminate_broadcast(net, links, node, w, rng).complete();
        },
        (stream++) << 32);
    const double rate = double(std::count(fails.begin(), fails.end(), 1)) / double(trials);
    ok = ok && rate <= limit;
    detail += fmt::format("{}{} w={} failure {:.5f}", detail.empty() ? "" : "; ", label, w, rate);
  }
  return {ok, fmt::format("{} (<= {:.5f})", detail, limit)};
}

// --- 8 ---------------------------------------------------------------------

Verdict latency_trends(unsigned) {
  const auto s = experiments::builtin_scenario("fig5");
  const auto net = s.network();
  const NodeId p = s.proposer(net);
  const std::uint32_t n = net.validator_count();
  auto latency = [&](ProtocolMode mode, Dissemination d, const analytics::ReliabilityTargets& t) {
    const std::uint32_t k =
        mode == ProtocolMode::rc
            ? n
            : analytics::required_validators(t, net, s.channel, p, d, s.psi_sign, s.phi).n_required;
    return experiments::analytic_latency(mode, d, s.channel, net, p, s.proposer_position, k,
                                         t.zeta);
  };

  bool monotone = true, converges = true;
  std::string notes;
  const std::vector<double> alphas{0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999, 0.9999, 1.0};
  for (std::uint32_t f : {5u, 25u}) {
    auto t = s.resolved_targets(net);
    t.f_faulty = f;
    for (auto d : {Dissemination::gossip, Dissemination::broadcast}) {
      double first = -1.0, prev = -1.0, last = 0.0;
      for (double a : alphas) {
        t.alpha = a;
        last = latency(ProtocolMode::r2c, d, t);
        if (first < 0.0) first = last;
        monotone = monotone && last >= prev;
        prev = last;
      }
      const double rc = latency(ProtocolMode::rc, d, t);
      converges = converges && std::abs(last - rc) <= 1e-9 * rc;
      notes += fmt::format("{}F={} {} {:.1f}->{:.1f} (RC {:.1f})", notes.empty() ? "" : ", ", f,
                           to_string(d), first, last, rc);
    }
  }

  auto t = s.resolved_targets(net);
  t.f_faulty = 5;
  t.alpha = 0.99;
  const double r2c_b = latency(ProtocolMode::r2c, Dissemination::broadcast, t);
  const double r2c_g = latency(ProtocolMode::r2c, Dissemination::gossip, t);
  const double rc_g = latency(ProtocolMode::rc, Dissemination::gossip, t);
  const double rc_b = latency(ProtocolMode::rc, Dissemination::broadcast, t);
  const bool order = r2c_b < r2c_g && r2c_g < rc_g && r2c_b < rc_b;
  return {monotone && converges && order,
          fmt::format("nondecreasing in alpha [{}], alpha=1 equals RC [{}] ({}); F=5: "
                      "R2C-b {:.1f} < R2C-g {:.1f} < RC-g {:.1f}, RC-b {:.1f} [{}]",
                      monotone ? "ok" : "FAIL", converges ? "ok" : "FAIL", notes, r2c_b, r2c_g,
                      rc_g, rc_b, order ? "ok" : "FAIL")};
}

// --- 9 ---------------------------------------------------------------------

Verdict sizing_plateau(unsigned workers) {
  const auto s = experiments::builtin_scenario("fig8");
  const auto rows = experiments::run_scenario(s, workers);
  std::map<std::string, std::map<double, double>> need;
  for (const auto& r : rows) {
    if (r.metric.rfind("n_required", 0) == 0) need[r.metric][r.sweep_value] = r.value;
  }
  const auto& b = need.at("n_required{dissemination=broadcast}");
  const auto& g = need.at("n_required{dissemination=gossip}");
  const double big = b.rbegin()->first;
  // The swept size closest to half of the largest one.
  double half = b.begin()->first;
  for (const auto& [nv, _] : b) {
    if (std::abs(nv - big / 2) < std::abs(half - big / 2)) half = nv;
  }
  const double db = b.at(big) - b.at(half), dg = g.at(big) - g.at(half);
  const bool ok = big >= 392 && db <= 0.1 * b.at(half) && dg >= 0.5 * g.at(half);
  return {ok, fmt::format("N {} vs {}: broadcast {} -> {} (delta {} <= {:.1f}); gossip {} -> {} "
                          "(delta {} >= {:.1f})",
                          half, big, b.at(half), b.at(big), db, 0.1 * b.at(half), g.at(half),
                          g.at(big), dg, 0.5 * g.at(half))};
}

// --- 10 --------------------------------------------------------------------

Verdict determinism(unsigned workers) {
  const unsigned many = std::max(3u, workers);
  int compared = 0;
  std::string diff;
  for (const char* name : {"default", "fig3", "fig4", "fig5", "fig6a", "fig6b", "fig7",
                           "fig7-text", "fig8"}) {
    auto s = experiments::builtin_scenario(name);
    s.trials = std::min<std::uint64_t>(s.trials, 600);
    s.calibration_trials = 2000;
    std::ostringstream one, two;
    experiments::write_csv(one, experiments::run_scenario(s, 1));
    experiments::write_csv(two, experiments::run_scenario(s, many));
    ++compared;
    if (one.str() != two.str()) diff += fmt::format(" {}", name);
  }
  return {diff.empty(), diff.empty()
                            ? fmt::format("{} scenarios byte-identical with 1 and {} workers",
                                          compared, many)
                            : fmt::format("CSV differs for:{}", diff)};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "erf approximant accuracy", 1.0, erf_approximant},
      {2, "exact resiliency vs subset enumeration", 10.0, resiliency_enumeration},
      {3, "resiliency curves: normal approximation and Monte Carlo", 60.0, resiliency_curves},
      {4, "psi closed forms vs lattice sums", 1.0, psi_closed_forms},
      {5, "distortion variance sign arbitration", 90.0, sign_arbitration},
      {6, "latency bounds and hop tightness", 120.0, latency_bounds},
      {7, "broadcast window success guarantee", 60.0, broadcast_window},
      {8, "latency trends in alpha and protocol ordering", 30.0, latency_trends},
      {9, "required validators vs network size", 60.0, sizing_plateau},
      {10, "determinism across worker counts", 60.0, determinism},
  };
  return all;
}

}  // namespace

std::vector<int> criterion_ids() {
  std::vector<int> ids;
  for (const auto& c : criteria()) ids.push_back(c.id);
  return ids;
}

CriterionResult run_criterion(int id, unsigned workers) {
  const auto& all = criteria();
  const auto it = std::find_if(all.begin(), all.end(), [&](const auto& c) { return c.id == id; });
  if (it == all.end()) throw InvalidParameter(fmt::format("no acceptance criterion {}", id));
  CriterionResult out;
  out.id = id;
  out.title = it->title;
  out.budget_s = it->budget_s;
  const auto start = std::chrono::steady_clock::now();
  Verdict v{false, ""};
  try {
    v = it->run(workers);
  } catch (const std::exception& e) {
    v = {false, fmt::format("threw: {}", e.what())};
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.passed = v.passed && out.seconds < out.budget_s;
  out.detail = v.detail;
  if (v.passed && !out.passed) out.detail += " [over time budget]";
  return out;
}

std::string format_line(const CriterionResult& r) {
  return fmt::format("[{}] {:>2} {}: {} ({:.2f} s / {:.0f} s)", r.passed ? "PASS" : "FAIL", r.id,
                     r.title, r.detail, r.seconds, r.budget_s);
}

}  // namespace r2c::acceptance
