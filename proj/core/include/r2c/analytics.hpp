#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "r2c/types.hpp"
#include "r2c/wireless.hpp"

namespace r2c::analytics {

inline constexpr double kWinitzkiA = 0.14;
inline constexpr double kDefaultPhi = 0.5;

/// Reliability targets. beta is held in seconds; see beta_slots().
struct ReliabilityTargets {
  double alpha = 0.99;
  double beta_s = 0.0;
  double gamma = 0.9;
  double zeta = 0.9999;
  std::uint32_t f_faulty = 0;

  /// beta in units of slot duration tau.
  double beta_slots(double tau_s) const { return beta_s / tau_s; }
  void validate(std::uint32_t validators) const;
};

struct SizingResult {
  double n_alpha = 0.0;
  double n_beta_gamma = 0.0;
  std::uint32_t n_required = 1;
};

enum class PsiSign { paper_plus, corrected_minus };

struct PsiVariant {
  PsiSign tag = PsiSign::paper_plus;
  double value = 0.0;
};

// Winitzki error-function approximant and its closed-form inverse.
double erf_approx(double x);
/// Throws DomainError for |y| >= 1.
double erf_approx_inv(double y);

/// Pr[F~ < n/3] for a uniformly drawn n-subset of N validators of which F
/// are faulty. Log-space hypergeometric tail.
double resiliency_exact(std::uint32_t n, std::uint32_t f, std::uint32_t n_tilde);

/// Normal approximation with continuity correction phi. Falls back to
/// resiliency_exact when the hypergeometric variance vanishes.
double resiliency_normal(std::uint32_t n, std::uint32_t f, std::uint32_t n_tilde,
                         double phi = kDefaultPhi);

/// Smallest real representative count for alpha-resiliency under the normal
/// model. Throws InfeasibleResiliency when 3F >= N.
double n_alpha(std::uint32_t n, std::uint32_t f, double alpha, double phi = kDefaultPhi);

/// Aggregate of per-validator delay moments (first and second moment of the
/// slot count Z_pv) entering Var(D).
PsiVariant psi_from_moments(std::span<const double> mean, std::span<const double> second_moment,
                            PsiSign sign);

PsiVariant psi_gossip(const wireless::GridNetwork& net, NodeId proposer, PsiSign sign);
PsiVariant psi_broadcast(const wireless::ChannelParams& ch, const wireless::GridNetwork& net,
                         NodeId proposer, PsiSign sign);
PsiVariant psi_for(Dissemination d, const wireless::ChannelParams& ch,
                   const wireless::GridNetwork& net, NodeId proposer, PsiSign sign);

/// Closed forms of the gossip psi (plus sign) for a corner and a center
/// proposer; `n` is the validator count, n + 1 must be a perfect square
/// (odd side for the center form).
double psi_gossip_corner_closed_form(std::uint32_t n);
double psi_gossip_center_closed_form(std::uint32_t n);

/// Var(D) in seconds^2 for a representative count n_tilde.
double sigma_d_squared(std::uint32_t n, double n_tilde, double tau_s, double psi);

/// Minimum representative count for (beta, gamma)-robustness (beta in s).
double n_beta_gamma(std::uint32_t n, double beta_s, double gamma, double tau_s, double psi);

/// Pr[|D| <= beta] under the zero-mean normal model: exact erf and the
/// approximant g, respectively.
double robustness_normal(double beta_s, double sigma_d_s);
double robustness_normal_approx(double beta_s, double sigma_d_s);

/// Chebyshev bound Pr[|D| >= beta] <= Var(D) / beta^2, clipped to 1.
/// Diagnostic only; sizing uses the normal model.
double chebyshev_distortion_bound(double var_d, double beta_s);

// ---- Latency (all in slots; multiply by tau for seconds) ----

double rc_latency_gossip_lb(std::uint32_t n);
Slots rc_latency_broadcast(const wireless::ChannelParams& ch, const wireless::GridNetwork& net,
                           double zeta);
/// Expected R2C latency given the proposer window and all N validator windows.
double r2c_latency_expected(double w_p, std::span<const double> w_v, std::uint32_t n,
                            double n_tilde);
double r2c_latency_gossip_lb(std::uint32_t n, double n_tilde, ProposerPosition position);
double r2c_latency_broadcast(const wireless::ChannelParams& ch, const wireless::GridNetwork& net,
                             NodeId proposer, double n_tilde, double zeta);

/// Per-node broadcast windows for every node of the grid.
std::vector<Slots> broadcast_windows(const wireless::ChannelParams& ch,
                                     const wireless::GridNetwork& net, double zeta);

SizingResult required_validators(const ReliabilityTargets& targets,
                                 const wireless::GridNetwork& net,
                                 const wireless::ChannelParams& ch, NodeId proposer,
                                 Dissemination dissemination,
                                 PsiSign sign = PsiSign::paper_plus, double phi = kDefaultPhi);

}  // namespace r2c::analytics
