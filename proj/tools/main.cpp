#include <fmt/core.h>

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <thread>

#include "criteria.hpp"
#include "r2c/analytics.hpp"
#include "r2c/error.hpp"
#include "r2c/experiments.hpp"
#include "r2c/wireless.hpp"

namespace {

using namespace r2c;
using nlohmann::ordered_json;

constexpr int kExitInfeasible = 1;
constexpr int kExitSelftest = 2;

/// Key/value output, as an aligned table or a JSON object.
class Report {
 public:
  explicit Report(bool json) : json_(json) {}
  void add(const std::string& key, double v) {
    rows_.emplace_back(key, experiments::format_number(v));
    obj_[key] = v;
  }
  void add(const std::string& key, const std::string& v) {
    rows_.emplace_back(key, v);
    obj_[key] = v;
  }
  void print() const {
    if (json_) {
      fmt::print("{}\n", obj_.dump(2));
      return;
    }
    std::size_t width = 0;
    for (const auto& [k, _] : rows_) width = std::max(width, k.size());
    for (const auto& [k, v] : rows_) fmt::print("{:<{}}  {}\n", k, width, v);
  }

 private:
  bool json_;
  std::vector<std::pair<std::string, std::string>> rows_;
  ordered_json obj_;
};

struct NetOptions {
  std::optional<std::uint32_t> n;
  std::optional<std::uint32_t> grid;
  double spacing_m = 10.0;
  std::string proposer = "corner";
  NodeId index = 0;

  void attach(CLI::App* cmd, bool with_proposer) {
    cmd->add_option("--n", n, "Validator count N (N + 1 must be a square)");
    cmd->add_option("--grid", grid, "Nodes per grid edge");
    cmd->add_option("--spacing", spacing_m, "Grid spacing in metres");
    if (with_proposer) {
      cmd->add_option("--proposer", proposer, "corner, center or index");
      cmd->add_option("--index", index, "Proposer node id when --proposer index");
    }
  }
  wireless::GridNetwork network() const {
    if (grid) return wireless::GridNetwork(*grid, spacing_m);
    if (n) return wireless::GridNetwork::from_node_count(*n + 1, spacing_m);
    throw InvalidParameter("give --n or --grid");
  }
  ProposerPosition position() const { return parse_proposer_position(proposer); }
  NodeId node(const wireless::GridNetwork& net) const {
    switch (position()) {
      case ProposerPosition::corner:
        return net.corner();
      case ProposerPosition::center:
        return net.center();
      case ProposerPosition::index:
        break;
    }
    if (!net.contains(index)) throw InvalidParameter("proposer index outside the grid");
    return index;
  }
};

analytics::PsiSign parse_variant(const std::string& v) {
  if (v == "paper" || v == "plus" || v == "paper_plus") return analytics::PsiSign::paper_plus;
  if (v == "corrected" || v == "minus" || v == "corrected_minus") {
    return analytics::PsiSign::corrected_minus;
  }
  throw InvalidParameter(fmt::format("unknown psi variant '{}'", v));
}

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RC / R2C consensus over a wireless grid: analytics and Monte Carlo sweeps"};
  app.require_subcommand(1);
  bool as_json = false;
  wireless::ChannelParams ch;
  double zeta = 0.9999;

  // run
  auto* run = app.add_subcommand("run", "Run a scenario and write its CSV");
  std::string scenario_name;
  std::optional<std::uint64_t> trials, seed, calibration;
  std::string out_dir = "results";
  unsigned workers = default_workers();
  run->add_option("--scenario", scenario_name, "Built-in name or path to a JSON file")->required();
  run->add_option("--trials", trials, "Monte Carlo trials per sweep point");
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--calibration-trials", calibration, "Trials for gossip window calibration");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  // scenario
  auto* show = app.add_subcommand("scenario", "Print a scenario as JSON, or list built-ins");
  std::string show_name;
  bool list = false;
  show->add_option("name", show_name, "Built-in name or path");
  show->add_flag("--list", list, "List built-in scenarios");

  // analytic
  auto* analytic = app.add_subcommand("analytic", "Evaluate closed-form expressions");
  analytic->require_subcommand(1);
  analytic->fallthrough();
  analytic->add_flag("--json", as_json, "Print JSON instead of a table");
  analytic->add_option("--zeta", zeta, "Target dissemination success probability");

  auto* na = analytic->add_subcommand("n-alpha", "Representatives for alpha-resiliency");
  std::uint32_t n = 0, f = 0;
  double alpha = 0.99, phi = analytics::kDefaultPhi;
  na->add_option("--n", n, "Validator count N")->required();
  na->add_option("--f", f, "Faulty nodes F")->required();
  na->add_option("--alpha", alpha, "Target resiliency");
  na->add_option("--phi", phi, "Continuity correction");

  auto* nbg = analytic->add_subcommand("n-beta-gamma", "Representatives for (beta,gamma)-robustness");
  NetOptions nbg_net;
  nbg_net.attach(nbg, true);
  std::optional<double> beta_s, psi_given;
  double beta_slots = 1.0, gamma = 0.9;
  std::string dissemination = "gossip", variant = "plus";
  nbg->add_option("--beta-slots", beta_slots, "Distortion budget in slots");
  nbg->add_option("--beta", beta_s, "Distortion budget in seconds (overrides --beta-slots)");
  nbg->add_option("--gamma", gamma, "Target robustness");
  nbg->add_option("--psi", psi_given, "Use this psi instead of computing it");
  nbg->add_option("--dissemination", dissemination, "gossip or broadcast");
  nbg->add_option("--variant", variant, "plus (default) or minus sign in the cross term");

  auto* lat = analytic->add_subcommand("latency", "End-to-end latency in slots");
  NetOptions lat_net;
  lat_net.attach(lat, true);
  std::string protocol = "rc", lat_diss = "gossip";
  std::optional<double> n_tilde;
  lat->add_option("protocol", protocol, "rc or r2c")->required();
  lat->add_option("dissemination", lat_diss, "gossip or broadcast")->required();
  lat->add_option("--n-tilde", n_tilde, "Representatives (R2C)");

  auto* res = analytic->add_subcommand("resiliency", "Pr[representatives tolerate their faults]");
  std::string method = "exact";
  std::uint32_t rn = 0, rf = 0, rk = 0;
  double rphi = analytics::kDefaultPhi;
  res->add_option("method", method, "exact or normal")->required();
  res->add_option("--n", rn, "Validator count N")->required();
  res->add_option("--f", rf, "Faulty nodes F")->required();
  res->add_option("--n-tilde", rk, "Representatives")->required();
  res->add_option("--phi", rphi, "Continuity correction (normal)");

  auto* psi = analytic->add_subcommand("psi", "Delay-moment aggregate psi");
  NetOptions psi_net;
  psi_net.attach(psi, true);
  std::string psi_diss = "gossip", psi_variant = "plus";
  psi->add_option("--dissemination", psi_diss, "gossip or broadcast");
  psi->add_option("--variant", psi_variant, "plus (default) or minus sign in the cross term");

  // selftest
  auto* selftest = app.add_subcommand("selftest", "Run the acceptance checks");
  int only = 0;
  unsigned st_workers = default_workers();
  selftest->add_option("--criterion", only, "Run a single criterion");
  selftest->add_option("--workers", st_workers, "Worker threads")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto s = experiments::resolve_scenario(scenario_name);
      if (trials) s.trials = *trials;
      if (seed) s.seed = *seed;
      if (calibration) s.calibration_trials = *calibration;
      const auto rows = experiments::run_scenario(s, workers);
      std::filesystem::create_directories(out_dir);
      const auto path = std::filesystem::path(out_dir) / (s.name + ".csv");
      std::ofstream out(path, std::ios::binary);
      experiments::write_csv(out, rows);
      if (!out) throw std::runtime_error(fmt::format("failed writing {}", path.string()));
      fmt::print("{}: {} rows -> {}\n", s.name, rows.size(), path.string());
      return 0;
    }
    if (*show) {
      if (list || show_name.empty()) {
        for (const auto& name : experiments::builtin_names()) fmt::print("{}\n", name);
        return 0;
      }
      fmt::print("{}", experiments::to_json(experiments::resolve_scenario(show_name)));
      return 0;
    }
    if (*selftest) {
      std::vector<int> ids = acceptance::criterion_ids();
      if (only != 0) ids = {only};
      int failed = 0;
      for (int id : ids) {
        const auto r = acceptance::run_criterion(id, st_workers);
        fmt::print("{}\n", acceptance::format_line(r));
        std::fflush(stdout);
        failed += !r.passed;
      }
      fmt::print("{}/{} criteria passed\n", ids.size() - failed, ids.size());
      return failed == 0 ? 0 : kExitSelftest;
    }

    ch.validate();
    Report report(as_json);
    if (*na) {
      const double v = analytics::n_alpha(n, f, alpha, phi);
      report.add("n_alpha", v);
      report.add("n_alpha_ceil", std::ceil(v));
    } else if (*nbg) {
      const auto net = nbg_net.network();
      const double tau = wireless::slot_duration(ch);
      const double b = beta_s ? *beta_s : beta_slots * tau;
      const double p = psi_given ? *psi_given
                                 : analytics::psi_for(parse_dissemination(dissemination), ch, net,
                                                      nbg_net.node(net), parse_variant(variant))
                                       .value;
      const double v = analytics::n_beta_gamma(net.validator_count(), b, gamma, tau, p);
      report.add("psi", p);
      report.add("beta_s", b);
      report.add("n_beta_gamma", v);
      report.add("n_beta_gamma_ceil", std::ceil(v));
    } else if (*lat) {
      const auto net = lat_net.network();
      const auto mode = parse_protocol_mode(protocol);
      const auto d = parse_dissemination(lat_diss);
      const double k = n_tilde ? *n_tilde : net.validator_count();
      const double slots = experiments::analytic_latency(mode, d, ch, net, lat_net.node(net),
                                                         lat_net.position(), k, zeta);
      report.add("latency_slots", slots);
      report.add("latency_s", slots * wireless::slot_duration(ch));
    } else if (*res) {
      double v = 0.0;
      if (method == "exact") {
        v = analytics::resiliency_exact(rn, rf, rk);
      } else if (method == "normal") {
        v = analytics::resiliency_normal(rn, rf, rk, rphi);
      } else {
        throw InvalidParameter(fmt::format("unknown resiliency method '{}'", method));
      }
      report.add("resiliency", v);
    } else if (*psi) {
      const auto net = psi_net.network();
      const auto v = analytics::psi_for(parse_dissemination(psi_diss), ch, net, psi_net.node(net),
                                        parse_variant(psi_variant));
      report.add("variant", v.tag == analytics::PsiSign::paper_plus ? "paper_plus"
                                                                     : "corrected_minus");
      report.add("psi", v.value);
    }
    report.print();
    return 0;
  } catch (const r2c::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInfeasible;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInfeasible;
  }
}
