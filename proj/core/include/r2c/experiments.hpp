#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "r2c/analytics.hpp"
#include "r2c/consensus.hpp"
#include "r2c/types.hpp"
#include "r2c/wireless.hpp"

namespace r2c::experiments {

/// Which sweep a scenario runs. `round` is a single Monte Carlo point.
enum class Study { round, resiliency, distortion, latency_vs_alpha, latency_vs_beta,
                   latency_vs_gamma, latency_energy_vs_f, sizing_vs_n };

std::string_view to_string(Study s);
Study parse_study(std::string_view s);

struct Scenario {
  std::string name;
  Study study = Study::round;
  ProtocolMode mode = ProtocolMode::r2c;
  Dissemination dissemination = Dissemination::broadcast;

  std::uint32_t side = 9;
  double spacing_m = 10.0;
  /// When set, the lattice is stretched over a square of this edge length
  /// and `spacing_m` is derived per grid size.
  std::optional<double> area_edge_m;

  wireless::ChannelParams channel;
  analytics::ReliabilityTargets targets;
  /// Distortion budget in slots; overrides targets.beta_s once tau is known.
  std::optional<double> beta_slots;
  /// F as a fraction of N (rounded down), for sweeps over network size.
  std::optional<double> f_fraction;

  ProposerPosition proposer_position = ProposerPosition::corner;
  NodeId proposer_index = 0;
  /// Fixed representative count; empty means sized from the targets.
  std::optional<std::uint32_t> n_tilde;
  double phi = analytics::kDefaultPhi;
  analytics::PsiSign psi_sign = analytics::PsiSign::paper_plus;

  consensus::FaultPolicy fault_policy = consensus::FaultPolicy::vote_invert;
  Slots max_perturb_slots = 0;

  std::uint64_t trials = 1000;
  std::uint64_t seed = 12345;
  std::uint64_t calibration_trials = 10000;

  /// Swept variable and the per-curve series; meaning depends on `study`.
  std::vector<double> sweep;
  std::vector<double> series;

  wireless::GridNetwork network() const { return network(side); }
  wireless::GridNetwork network(std::uint32_t grid_side) const;
  NodeId proposer(const wireless::GridNetwork& net) const;
  /// Targets with beta converted to seconds and F resolved for `net`.
  analytics::ReliabilityTargets resolved_targets(const wireless::GridNetwork& net) const;
  void validate() const;
};

std::vector<std::string> builtin_names();
/// Throws InvalidParameter for unknown names.
Scenario builtin_scenario(std::string_view name);

Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);
/// A built-in name, or a path to a scenario file.
Scenario resolve_scenario(std::string_view name_or_path);
std::string to_json(const Scenario& s);

struct ResultRow {
  std::string scenario;
  std::string sweep_var;
  double sweep_value = 0.0;
  std::string metric;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
};

/// Runs every sweep point. Rows come out in a fixed order, and Monte Carlo
/// values do not depend on `workers`.
std::vector<ResultRow> run_scenario(const Scenario& s, unsigned workers = 1);

/// RFC 4180, header row first, numbers in a fixed round-trippable format.
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::string format_number(double v);
std::string csv_field(std::string_view s);

/// Analytic latency in slots for one protocol/dissemination pairing.
/// Gossip uses the closed-form bounds where they exist and the hop
/// eccentricities otherwise.
double analytic_latency(ProtocolMode mode, Dissemination d, const wireless::ChannelParams& ch,
                        const wireless::GridNetwork& net, NodeId proposer,
                        ProposerPosition position, double n_tilde, double zeta);

}  // namespace r2c::experiments
