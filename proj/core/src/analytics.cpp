#include "r2c/analytics.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "r2c/error.hpp"

namespace r2c::analytics {

namespace {

std::uint32_t exact_root(std::uint32_t node_count) {
  const auto s = static_cast<std::uint32_t>(std::llround(std::sqrt(double(node_count))));
  if (s * s != node_count) {
    throw InvalidParameter(fmt::format("N + 1 = {} is not a perfect square", node_count));
  }
  return s;
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidParameter(fmt::format("{} must lie in [0, 1], got {}", name, p));
  }
}

}  // namespace

void ReliabilityTargets::validate(std::uint32_t validators) const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw InvalidParameter(fmt::format("alpha must lie in (0, 1], got {}", alpha));
  }
  if (!(beta_s >= 0.0)) throw InvalidParameter(fmt::format("beta must be >= 0, got {}", beta_s));
  check_probability(gamma, "gamma");
  if (!(zeta >= 0.0 && zeta < 1.0)) {
    throw InvalidParameter(fmt::format("zeta must lie in [0, 1), got {}", zeta));
  }
  if (f_faulty > validators) {
    throw InvalidParameter(
        fmt::format("F = {} exceeds the validator count {}", f_faulty, validators));
  }
}

double erf_approx(double x) {
  if (std::isnan(x)) return x;
  const double ax = std::fabs(x);
  if (ax > 1e10) return std::copysign(1.0, x);
  const double x2 = ax * ax;
  const double a = kWinitzkiA;
  const double e = x2 * (4.0 / std::numbers::pi + a * x2) / (1.0 + a * x2);
  return std::copysign(std::sqrt(-std::expm1(-e)), x);
}

double erf_approx_inv(double y) {
  if (!(std::fabs(y) < 1.0)) {
    throw DomainError(fmt::format("erf_approx_inv needs |y| < 1, got {}", y));
  }
  if (y == 0.0) return 0.0;
  const double ay = std::fabs(y);
  const double a = kWinitzkiA;
  // log(1 - y^2) without losing the small difference near |y| = 1.
  const double l = std::log1p(-ay) + std::log1p(ay);
  const double h = 2.0 / (std::numbers::pi * a) + l / 2.0;
  const double t = -l / a;
  const double root = std::sqrt(h * h + t);
  // -h + root, rearranged to avoid cancellation when h > 0.
  const double inner = h >= 0.0 ? t / (h + root) : root - h;
  return std::copysign(std::sqrt(inner), y);
}

double resiliency_exact(std::uint32_t n, std::uint32_t f, std::uint32_t n_tilde) {
  if (f > n) throw InvalidParameter(fmt::format("F = {} exceeds N = {}", f, n));
  if (n_tilde < 1 || n_tilde > n) {
    throw InvalidParameter(fmt::format("representative count {} outside [1, {}]", n_tilde, n));
  }
  const std::int64_t lo = std::max<std::int64_t>(0, std::int64_t(n_tilde) - (n - f));
  const std::int64_t hi = std::min(f, n_tilde);
  // F~ < n_tilde / 3  <=>  F~ <= ceil(n_tilde / 3) - 1.
  const std::int64_t k = (std::int64_t(n_tilde) + 2) / 3 - 1;
  if (k < lo) return 0.0;
  if (k >= hi) return 1.0;

  // Unnormalised log pmf via the term ratio; the normalisation cancels.
  std::vector<double> log_terms;
  log_terms.reserve(std::size_t(hi - lo + 1));
  double acc = 0.0;
  log_terms.push_back(acc);
  const double bad = f, good = n - f, draws = n_tilde;
  for (std::int64_t j = lo; j < hi; ++j) {
    const double fj = double(j);
    acc += std::log((bad - fj) * (draws - fj)) - std::log((fj + 1.0) * (good - draws + fj + 1.0));
    log_terms.push_back(acc);
  }
  const double peak = *std::max_element(log_terms.begin(), log_terms.end());
  double lower = 0.0, upper = 0.0;
  for (std::int64_t j = lo; j <= hi; ++j) {
    const double w = std::exp(log_terms[std::size_t(j - lo)] - peak);
    (j <= k ? lower : upper) += w;
  }
  const double total = lower + upper;
  return lower <= upper ? lower / total : 1.0 - upper / total;
}

double resiliency_normal(std::uint32_t n, std::uint32_t f, std::uint32_t n_tilde, double phi) {
  if (f > n) throw InvalidParameter(fmt::format("F = {} exceeds N = {}", f, n));
  if (n_tilde < 1 || n_tilde > n) {
    throw InvalidParameter(fmt::format("representative count {} outside [1, {}]", n_tilde, n));
  }
  if (!(phi > 0.0 && phi < 1.0)) {
    throw InvalidParameter(fmt::format("continuity correction must lie in (0, 1), got {}", phi));
  }
  if (f == 0 || f == n || n_tilde == n) return resiliency_exact(n, f, n_tilde);
  const double nn = n, ff = f, nt = n_tilde;
  const double mu = ff * nt / nn;
  const double sigma = std::sqrt(ff * nt * (nn - ff) * (nn - nt) / (nn * nn * (nn - 1.0)));
  return 0.5 * (1.0 + erf_approx((nt / 3.0 - mu - phi) / (sigma * std::numbers::sqrt2)));
}

double n_alpha(std::uint32_t n, std::uint32_t f, double alpha, double phi) {
  if (n == 0) throw InvalidParameter("n_alpha needs at least one validator");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw InvalidParameter(fmt::format("alpha must lie in (0, 1], got {}", alpha));
  }
  if (!(phi > 0.0 && phi < 1.0)) {
    throw InvalidParameter(fmt::format("continuity correction must lie in (0, 1), got {}", phi));
  }
  if (f > n) throw InvalidParameter(fmt::format("F = {} exceeds N = {}", f, n));
  if (3ull * f >= n) {
    throw InfeasibleResiliency(fmt::format(
        "F = {} faulty of N = {} violates N > 3F; no representative count is resilient", f, n));
  }
  const double nn = n;
  const double A = 1.0 / 3.0 - double(f) / nn;
  if (f == 0) return phi / A;
  const double y = 2.0 * alpha - 1.0;
  // The quantile diverges at alpha = 1; the root converges to N there.
  if (!(std::fabs(y) < 1.0)) return nn;
  const double q = erf_approx_inv(y);
  const double B = double(f) * (nn - f) / ((nn - 1.0) * nn * nn) * q * q;
  const double disc = 2.0 * phi * A * B * nn - 2.0 * phi * phi * B + B * B * nn * nn;
  const double root = std::sqrt(std::max(0.0, disc));
  // alpha < 1/2 flips the sign of the quantile: the smaller root bounds the set.
  const double numer = phi * A + B * nn + (q >= 0.0 ? root : -root);
  return numer / (A * A + 2.0 * B);
}

PsiVariant psi_from_moments(std::span<const double> mean, std::span<const double> second_moment,
                            PsiSign sign) {
  if (mean.size() != second_moment.size()) {
    throw InvalidParameter("psi needs matching first and second moment vectors");
  }
  if (mean.empty()) throw InvalidParameter("psi needs at least one validator");
  const double sum = std::accumulate(mean.begin(), mean.end(), 0.0);
  const double sum_sq =
      std::inner_product(mean.begin(), mean.end(), mean.begin(), 0.0);
  const double second = std::accumulate(second_moment.begin(), second_moment.end(), 0.0);
  const double n = double(mean.size());
  const double cross = n > 1.0 ? (sum * sum - sum_sq) / (n - 1.0) : 0.0;
  return {sign, sign == PsiSign::paper_plus ? second + cross : second - cross};
}

PsiVariant psi_gossip(const wireless::GridNetwork& net, NodeId proposer, PsiSign sign) {
  if (!net.contains(proposer)) throw InvalidParameter("proposer outside the grid");
  std::vector<double> m, m2;
  m.reserve(net.validator_count());
  m2.reserve(net.validator_count());
  for (NodeId v = 0; v < net.node_count(); ++v) {
    if (v == proposer) continue;
    const double e = wireless::shortest_paths(net, proposer, v).edges;
    m.push_back(e);
    m2.push_back(e * e);
  }
  return psi_from_moments(m, m2, sign);
}

PsiVariant psi_broadcast(const wireless::ChannelParams& ch, const wireless::GridNetwork& net,
                         NodeId proposer, PsiSign sign) {
  if (!net.contains(proposer)) throw InvalidParameter("proposer outside the grid");
  std::vector<double> m, m2;
  m.reserve(net.validator_count());
  m2.reserve(net.validator_count());
  for (NodeId v = 0; v < net.node_count(); ++v) {
    if (v == proposer) continue;
    const double eps = wireless::outage_prob(ch, net.distance(proposer, v), ch.pt_broadcast_mw);
    // Geometric slot count on {1, 2, ...}.
    m.push_back(1.0 / (1.0 - eps));
    m2.push_back((1.0 + eps) / ((1.0 - eps) * (1.0 - eps)));
  }
  return psi_from_moments(m, m2, sign);
}

PsiVariant psi_for(Dissemination d, const wireless::ChannelParams& ch,
                   const wireless::GridNetwork& net, NodeId proposer, PsiSign sign) {
  return d == Dissemination::gossip ? psi_gossip(net, proposer, sign)
                                    : psi_broadcast(ch, net, proposer, sign);
}

double psi_gossip_corner_closed_form(std::uint32_t n) {
  if (n < 2) throw InvalidParameter("closed-form psi needs N >= 2");
  const double r = exact_root(n + 1);
  const double nn = n;
  return (nn + 1.0) * ((13.0 * nn - 24.0 * r + 16.0) * nn + 12.0 * (r - 1.0)) / (6.0 * (nn - 1.0));
}

double psi_gossip_center_closed_form(std::uint32_t n) {
  if (n < 2) throw InvalidParameter("closed-form psi needs N >= 2");
  if (exact_root(n + 1) % 2 == 0) {
    throw InvalidParameter("the center closed form needs an odd grid side");
  }
  const double nn = n;
  return (13.0 * nn * nn - 4.0 * nn - 8.0) * nn / (24.0 * (nn - 1.0));
}

double sigma_d_squared(std::uint32_t n, double n_tilde, double tau_s, double psi) {
  if (!(n_tilde > 0.0 && n_tilde <= double(n))) {
    throw InvalidParameter(fmt::format("representative count {} outside (0, {}]", n_tilde, n));
  }
  const double nn = n;
  return tau_s * tau_s * (nn - n_tilde) * psi / (n_tilde * nn * nn);
}

double n_beta_gamma(std::uint32_t n, double beta_s, double gamma, double tau_s, double psi) {
  if (n == 0) throw InvalidParameter("n_beta_gamma needs at least one validator");
  if (!(beta_s >= 0.0)) throw InvalidParameter(fmt::format("beta must be >= 0, got {}", beta_s));
  check_probability(gamma, "gamma");
  if (!(tau_s > 0.0)) throw InvalidParameter("slot duration must be positive");
  if (!(psi >= 0.0)) throw InvalidParameter(fmt::format("psi must be >= 0, got {}", psi));
  const double nn = n;
  if (psi == 0.0) return 1.0;
  if (gamma >= 1.0) return nn;
  if (gamma == 0.0) return 0.0;
  const double q = erf_approx_inv(gamma);
  const double b = beta_s / tau_s;
  const double slack = b * b * nn / (2.0 * q * q * psi);
  return 1.0 / (1.0 / nn + slack);
}

double robustness_normal(double beta_s, double sigma_d_s) {
  if (!(beta_s >= 0.0)) throw InvalidParameter("beta must be >= 0");
  if (sigma_d_s == 0.0) return 1.0;
  return std::erf(beta_s / (sigma_d_s * std::numbers::sqrt2));
}

double robustness_normal_approx(double beta_s, double sigma_d_s) {
  if (!(beta_s >= 0.0)) throw InvalidParameter("beta must be >= 0");
  if (sigma_d_s == 0.0) return 1.0;
  return erf_approx(beta_s / (sigma_d_s * std::numbers::sqrt2));
}

double chebyshev_distortion_bound(double var_d, double beta_s) {
  if (!(beta_s > 0.0)) return 1.0;
  return std::min(1.0, var_d / (beta_s * beta_s));
}

double rc_latency_gossip_lb(std::uint32_t n) {
  const double s = exact_root(n + 1);
  const double nodes = double(n) + 1.0;
  const double even = (3.0 * s - 2.0) * nodes / 2.0;
  return std::llround(s) % 2 == 1 ? even - s / 2.0 : even;
}

std::vector<Slots> broadcast_windows(const wireless::ChannelParams& ch,
                                     const wireless::GridNetwork& net, double zeta) {
  std::vector<Slots> w(net.node_count());
  for (NodeId i = 0; i < net.node_count(); ++i) w[i] = wireless::broadcast_window(ch, net, i, zeta);
  return w;
}

Slots rc_latency_broadcast(const wireless::ChannelParams& ch, const wireless::GridNetwork& net,
                           double zeta) {
  const auto w = broadcast_windows(ch, net, zeta);
  return std::accumulate(w.begin(), w.end(), Slots{0});
}

double r2c_latency_expected(double w_p, std::span<const double> w_v, std::uint32_t n,
                            double n_tilde) {
  if (w_v.size() != n) {
    throw InvalidParameter(
        fmt::format("expected {} validator windows, got {}", n, w_v.size()));
  }
  if (!(n_tilde >= 0.0 && n_tilde <= double(n))) {
    throw InvalidParameter(fmt::format("representative count {} outside [0, {}]", n_tilde, n));
  }
  if (n == 0) return w_p;
  return w_p + n_tilde / double(n) * std::accumulate(w_v.begin(), w_v.end(), 0.0);
}

double r2c_latency_gossip_lb(std::uint32_t n, double n_tilde, ProposerPosition position) {
  const double s = exact_root(n + 1);
  const double nn = n;
  switch (position) {
    case ProposerPosition::corner: {
      const double slope = std::llround(s) % 2 == 1
                               ? 1.5 * s - (s - 1.0) / nn - 1.0
                               : 1.5 * s - (s - 2.0) / (2.0 * nn) - 1.0;
      return slope * n_tilde + 2.0 * (s - 1.0);
    }
    case ProposerPosition::center:
      return (1.5 * s - 1.0) * n_tilde + s - 1.0;
    case ProposerPosition::index:
      break;
  }
  throw InvalidParameter("the gossip R2C bound is only defined for corner and center proposers");
}

double r2c_latency_broadcast(const wireless::ChannelParams& ch, const wireless::GridNetwork& net,
                             NodeId proposer, double n_tilde, double zeta) {
  if (!net.contains(proposer)) throw InvalidParameter("proposer outside the grid");
  const auto w = broadcast_windows(ch, net, zeta);
  std::vector<double> w_v;
  w_v.reserve(net.validator_count());
  for (NodeId i = 0; i < net.node_count(); ++i) {
    if (i != proposer) w_v.push_back(double(w[i]));
  }
  return r2c_latency_expected(double(w[proposer]), w_v, net.validator_count(), n_tilde);
}

SizingResult required_validators(const ReliabilityTargets& targets,
                                 const wireless::GridNetwork& net,
                                 const wireless::ChannelParams& ch, NodeId proposer,
                                 Dissemination dissemination, PsiSign sign, double phi) {
  const std::uint32_t n = net.validator_count();
  targets.validate(n);
  SizingResult out;
  out.n_alpha = n_alpha(n, targets.f_faulty, targets.alpha, phi);
  const double psi = psi_for(dissemination, ch, net, proposer, sign).value;
  out.n_beta_gamma = n_beta_gamma(n, targets.beta_s, targets.gamma, wireless::slot_duration(ch),
                                  std::max(0.0, psi));
  const double need = std::ceil(std::max(out.n_alpha, out.n_beta_gamma));
  out.n_required = static_cast<std::uint32_t>(std::clamp(need, 1.0, double(n)));
  return out;
}

}  // namespace r2c::analytics
