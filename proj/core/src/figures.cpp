#include <fmt/core.h>

#include <cmath>
#include <map>

#include "r2c/error.hpp"
#include "r2c/experiments.hpp"
#include "r2c/sim.hpp"

namespace r2c::experiments {

namespace {

using analytics::ReliabilityTargets;

struct Pairing {
  ProtocolMode mode;
  Dissemination dissemination;
  std::string_view label;
};

constexpr Pairing kPairings[] = {
    {ProtocolMode::rc, Dissemination::gossip, "rc-gossip"},
    {ProtocolMode::rc, Dissemination::broadcast, "rc-broadcast"},
    {ProtocolMode::r2c, Dissemination::gossip, "r2c-gossip"},
    {ProtocolMode::r2c, Dissemination::broadcast, "r2c-broadcast"},
};

std::string labelled(std::string_view metric, std::string_view labels) {
  if (labels.empty()) return std::string(metric);
  return fmt::format("{}{{{}}}", metric, labels);
}

std::string join(std::string_view a, std::string_view b) {
  if (a.empty()) return std::string(b);
  if (b.empty()) return std::string(a);
  return fmt::format("{},{}", a, b);
}

std::uint32_t as_count(double v, std::string_view what) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 4e9) {
    throw InvalidParameter(fmt::format("{} must be a non-negative integer, got {}", what, v));
  }
  return static_cast<std::uint32_t>(v);
}

class Runner {
 public:
  Runner(const Scenario& s, unsigned workers) : s_(s), workers_(workers) {}

  std::vector<ResultRow> run() {
    switch (s_.study) {
      case Study::round:
        round();
        break;
      case Study::resiliency:
        resiliency();
        break;
      case Study::distortion:
        distortion();
        break;
      case Study::latency_vs_alpha:
      case Study::latency_vs_beta:
      case Study::latency_vs_gamma:
      case Study::latency_energy_vs_f:
        latency();
        break;
      case Study::sizing_vs_n:
        sizing();
        break;
    }
    return std::move(rows_);
  }

 private:
  void add(std::string_view var, double x, std::string metric, double value) {
    rows_.push_back({s_.name, std::string(var), x, std::move(metric), value, value, value, 0,
                     s_.seed});
  }

  void add(std::string_view var, double x, std::string metric, const sim::Frequency& f) {
    rows_.push_back({s_.name, std::string(var), x, std::move(metric), f.rate(), f.ci_low(),
                     f.ci_high(), f.trials, s_.seed});
  }

  void add(std::string_view var, double x, std::string metric, const sim::Moments& m,
           double scale = 1.0) {
    rows_.push_back({s_.name, std::string(var), x, std::move(metric), m.mean / scale,
                     m.ci_low / scale, m.ci_high / scale, m.count, s_.seed});
  }

  /// Each Monte Carlo batch gets its own range of generator streams.
  std::uint64_t next_streams() { return (batch_++) << 32; }

  const std::vector<Slots>& windows(const wireless::GridNetwork& net, Dissemination d) {
    auto& cache = d == Dissemination::gossip ? gossip_windows_ : broadcast_windows_;
    auto it = cache.find(net.side());
    if (it != cache.end()) return it->second;
    std::vector<Slots> w =
        d == Dissemination::gossip
            ? sim::calibrate_gossip_windows(net, s_.channel, s_.targets.zeta,
                                            s_.calibration_trials, s_.seed, workers_)
            : analytics::broadcast_windows(s_.channel, net, s_.targets.zeta);
    return cache.emplace(net.side(), std::move(w)).first->second;
  }

  std::uint32_t representatives(const Pairing& p, const ReliabilityTargets& t,
                                const wireless::GridNetwork& net, NodeId proposer) {
    if (p.mode == ProtocolMode::rc) return net.validator_count();
    if (s_.n_tilde) return *s_.n_tilde;
    return analytics::required_validators(t, net, s_.channel, proposer, p.dissemination,
                                          s_.psi_sign, s_.phi)
        .n_required;
  }

  sim::RoundSetup setup(const Pairing& p, const wireless::GridNetwork& net, NodeId proposer,
                        std::uint32_t n_tilde, std::uint32_t f) {
    return sim::make_round_setup(net, s_.channel, p.mode, p.dissemination, proposer, n_tilde, f,
                                 windows(net, p.dissemination), s_.fault_policy,
                                 s_.max_perturb_slots);
  }

  void round() {
    const auto net = s_.network();
    const NodeId proposer = s_.proposer(net);
    const auto t = s_.resolved_targets(net);
    const Pairing p{s_.mode, s_.dissemination, ""};
    const std::uint32_t n_tilde = representatives(p, t, net, proposer);
    const auto rs = setup(p, net, proposer, n_tilde, t.f_faulty);
    const auto mc = sim::monte_carlo(rs, s_.trials, s_.seed, workers_, next_streams());
    const auto& m = mc.summary;
    const std::string_view var = "point";
    add(var, 0, "n_tilde", double(n_tilde));
    add(var, 0, "latency_slots_analytic",
        analytic_latency(s_.mode, s_.dissemination, s_.channel, net, proposer,
                         s_.proposer_position, n_tilde, t.zeta));
    add(var, 0, "latency_slots_sim", m.latency_slots);
    add(var, 0, "latency_s_sim", m.latency_s);
    add(var, 0, "energy_mj_sim", m.energy_mj);
    add(var, 0, "distortion_slots_sim", m.distortion_slots);
    add(var, 0, "resilient_rate", m.resilient);
    add(var, 0, "dissemination_success_rate", m.dissemination_success);
    add(var, 0, "globally_valid_rate", m.globally_valid);
    add(var, 0, "matches_ground_truth_rate", m.matches_ground_truth);
  }

  void resiliency() {
    const auto net = s_.network();
    const std::uint32_t n = net.validator_count();
    const NodeId proposer = s_.proposer(net);
    const Pairing p{ProtocolMode::r2c, Dissemination::broadcast, ""};
    const std::vector<double> fs = s_.series.empty()
                                       ? std::vector<double>{double(s_.targets.f_faulty)}
                                       : s_.series;
    for (double fv : fs) {
      const std::uint32_t f = as_count(fv, "F");
      const std::string label = fmt::format("F={}", f);
      for (double x : s_.sweep) {
        const std::uint32_t k = as_count(x, "n_tilde");
        add("n_tilde", x, labelled("resiliency_exact", label),
            analytics::resiliency_exact(n, f, k));
        add("n_tilde", x, labelled("resiliency_normal", label),
            analytics::resiliency_normal(n, f, k, s_.phi));
        const auto rs = setup(p, net, proposer, k, f);
        const auto hits = sim::run_trials(
            s_.trials, s_.seed, workers_,
            [&](std::uint64_t, sim::Rng& rng) -> std::uint8_t {
              return k > 3 * sim::sample_faulty_representatives(rs, rng);
            },
            next_streams());
        sim::Frequency freq{0, s_.trials};
        for (auto h : hits) freq.hits += h;
        add("n_tilde", x, labelled("resiliency_mc", label), freq);
      }
    }
  }

  void distortion() {
    const auto net = s_.network();
    const std::uint32_t n = net.validator_count();
    const NodeId proposer = s_.proposer(net);
    const Pairing p{ProtocolMode::r2c, s_.dissemination, ""};
    const double psi_plus = analytics::psi_for(s_.dissemination, s_.channel, net, proposer,
                                               analytics::PsiSign::paper_plus)
                                .value;
    const double psi_minus = analytics::psi_for(s_.dissemination, s_.channel, net, proposer,
                                                analytics::PsiSign::corrected_minus)
                                 .value;
    for (double x : s_.sweep) {
      const std::uint32_t k = as_count(x, "n_tilde");
      const auto rs = setup(p, net, proposer, k, 0);
      const auto d = sim::run_trials(
          s_.trials, s_.seed, workers_,
          [&](std::uint64_t, sim::Rng& rng) { return sim::sample_distortion(rs, rng); },
          next_streams());
      const auto m = sim::summarize(d);
      const double var_plus = analytics::sigma_d_squared(n, k, 1.0, psi_plus);
      const double var_minus = analytics::sigma_d_squared(n, k, 1.0, psi_minus);
      add("n_tilde", x, "distortion_mean_sim", m);
      add("n_tilde", x, "distortion_var_sim", m.variance);
      add("n_tilde", x, "distortion_var_plus", var_plus);
      add("n_tilde", x, "distortion_var_minus", var_minus);
      for (double beta : s_.series) {
        const std::string label = fmt::format("beta={}", format_number(beta));
        sim::Frequency out{0, 0};
        for (double v : d) {
          if (!std::isfinite(v)) continue;
          ++out.trials;
          out.hits += std::abs(v) > beta ? 1 : 0;
        }
        add("n_tilde", x, labelled("outage_sim", label), out);
        add("n_tilde", x, labelled("outage_normal_plus", label),
            1.0 - analytics::robustness_normal(beta, std::sqrt(var_plus)));
        add("n_tilde", x, labelled("outage_approx_plus", label),
            1.0 - analytics::robustness_normal_approx(beta, std::sqrt(var_plus)));
        add("n_tilde", x, labelled("outage_normal_minus", label),
            1.0 - analytics::robustness_normal(beta, std::sqrt(var_minus)));
      }
    }
  }

  void latency() {
    const auto net = s_.network();
    const NodeId proposer = s_.proposer(net);
    const double tau = wireless::slot_duration(s_.channel);
    const auto base = s_.resolved_targets(net);

    if (s_.study == Study::latency_energy_vs_f) {
      for (double x : s_.sweep) {
        auto t = base;
        t.f_faulty = as_count(x, "F");
        latency_point("F", x, t, "", true, net, proposer);
      }
      return;
    }
    const std::vector<double> fs =
        s_.series.empty() ? std::vector<double>{double(base.f_faulty)} : s_.series;
    for (double fv : fs) {
      auto t = base;
      t.f_faulty = as_count(fv, "F");
      const std::string label = fmt::format("F={}", t.f_faulty);
      for (double x : s_.sweep) {
        auto tx = t;
        std::string_view var;
        switch (s_.study) {
          case Study::latency_vs_alpha:
            var = "alpha";
            tx.alpha = x;
            break;
          case Study::latency_vs_beta:
            var = "beta_slots";
            tx.beta_s = x * tau;
            break;
          default:
            var = "gamma";
            tx.gamma = x;
            break;
        }
        latency_point(var, x, tx, label, false, net, proposer);
      }
    }
  }

  void latency_point(std::string_view var, double x, const ReliabilityTargets& t,
                     std::string_view series, bool energy_normalized,
                     const wireless::GridNetwork& net, NodeId proposer) {
    t.validate(net.validator_count());
    double baseline = 0.0;
    for (const auto& p : kPairings) {
      const std::string label = join(fmt::format("protocol={}", p.label), series);
      const std::uint32_t k = representatives(p, t, net, proposer);
      const double lat = analytic_latency(p.mode, p.dissemination, s_.channel, net, proposer,
                                          s_.proposer_position, k, t.zeta);
      if (p.mode == ProtocolMode::r2c) add(var, x, labelled("n_tilde", label), double(k));
      add(var, x, labelled("latency_slots_analytic", label), lat);
      add(var, x, labelled("latency_s_analytic", label), lat * wireless::slot_duration(s_.channel));

      const auto rs = setup(p, net, proposer, k, t.f_faulty);
      const auto mc = sim::monte_carlo(rs, s_.trials, s_.seed, workers_, next_streams());
      const auto& m = mc.summary;
      add(var, x, labelled("latency_slots_sim", label), m.latency_slots);
      add(var, x, labelled("energy_mj_sim", label), m.energy_mj);
      add(var, x, labelled("matches_ground_truth_rate", label), m.matches_ground_truth);
      if (energy_normalized) {
        if (p.mode == ProtocolMode::rc && p.dissemination == Dissemination::gossip) {
          baseline = m.energy_mj.mean;
        }
        add(var, x, labelled("energy_normalized_sim", label), m.energy_mj, baseline);
      }
    }
  }

  void sizing() {
    for (double x : s_.sweep) {
      const auto net = s_.network(as_count(x, "grid side"));
      const NodeId proposer = s_.proposer(net);
      const auto t = s_.resolved_targets(net);
      const double n = net.validator_count();
      add("n", n, "f_faulty", double(t.f_faulty));
      for (auto d : {Dissemination::gossip, Dissemination::broadcast}) {
        const auto r = analytics::required_validators(t, net, s_.channel, proposer, d,
                                                      s_.psi_sign, s_.phi);
        const std::string label = fmt::format("dissemination={}", to_string(d));
        add("n", n, labelled("n_alpha", label), r.n_alpha);
        add("n", n, labelled("n_beta_gamma", label), r.n_beta_gamma);
        add("n", n, labelled("n_required", label), double(r.n_required));
      }
    }
  }

  const Scenario& s_;
  unsigned workers_;
  std::uint64_t batch_ = 0;
  std::map<std::uint32_t, std::vector<Slots>> gossip_windows_;
  std::map<std::uint32_t, std::vector<Slots>> broadcast_windows_;
  std::vector<ResultRow> rows_;
};

}  // namespace

double analytic_latency(ProtocolMode mode, Dissemination d, const wireless::ChannelParams& ch,
                        const wireless::GridNetwork& net, NodeId proposer,
                        ProposerPosition position, double n_tilde, double zeta) {
  const std::uint32_t n = net.validator_count();
  if (d == Dissemination::broadcast) {
    if (mode == ProtocolMode::rc) return double(analytics::rc_latency_broadcast(ch, net, zeta));
    return analytics::r2c_latency_broadcast(ch, net, proposer, n_tilde, zeta);
  }
  if (mode == ProtocolMode::rc) return analytics::rc_latency_gossip_lb(n);
  if (position == ProposerPosition::corner ||
      (position == ProposerPosition::center && net.side() % 2 == 1)) {
    return analytics::r2c_latency_gossip_lb(n, n_tilde, position);
  }
  std::vector<double> w_v;
  w_v.reserve(n);
  for (NodeId i = 0; i < net.node_count(); ++i) {
    if (i != proposer) w_v.push_back(double(wireless::max_hops(net, i)));
  }
  return analytics::r2c_latency_expected(double(wireless::max_hops(net, proposer)), w_v, n,
                                         n_tilde);
}

std::vector<ResultRow> run_scenario(const Scenario& s, unsigned workers) {
  s.validate();
  return Runner(s, workers).run();
}

}  // namespace r2c::experiments
