#include <fmt/core.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "r2c/error.hpp"
#include "r2c/experiments.hpp"

namespace r2c::experiments {

using nlohmann::ordered_json;

namespace {

struct StudyName {
  Study study;
  std::string_view name;
};

constexpr StudyName kStudies[] = {
    {Study::round, "round"},
    {Study::resiliency, "resiliency"},
    {Study::distortion, "distortion"},
    {Study::latency_vs_alpha, "latency-vs-alpha"},
    {Study::latency_vs_beta, "latency-vs-beta"},
    {Study::latency_vs_gamma, "latency-vs-gamma"},
    {Study::latency_energy_vs_f, "latency-energy-vs-f"},
    {Study::sizing_vs_n, "sizing-vs-n"},
};

std::vector<double> range(double first, double last, double step) {
  std::vector<double> v;
  for (int i = 0;; ++i) {
    const double x = first + i * step;
    if (x > last + 1e-9) break;
    v.push_back(x);
  }
  return v;
}

Scenario base(std::string name, Study study) {
  Scenario s;
  s.name = std::move(name);
  s.study = study;
  return s;
}

Scenario latency_study(std::string name, Study study, double alpha, double beta_slots,
                       double gamma) {
  Scenario s = base(std::move(name), study);
  s.targets.alpha = alpha;
  s.targets.gamma = gamma;
  s.targets.f_faulty = 5;
  s.beta_slots = beta_slots;
  s.trials = 200;
  return s;
}

Scenario make_builtin(std::string_view name) {
  if (name == "default") {
    Scenario s = base("default", Study::round);
    s.targets.f_faulty = 5;
    s.beta_slots = 1.0;
    return s;
  }
  if (name == "fig3") {
    Scenario s = base("fig3", Study::resiliency);
    s.trials = 100000;
    s.series = {5, 15, 25};
    s.sweep = range(10, 70, 1);
    return s;
  }
  if (name == "fig4") {
    Scenario s = base("fig4", Study::distortion);
    s.dissemination = Dissemination::gossip;
    s.trials = 10000;
    s.series = {0.5, 1.0, 2.0};
    s.sweep = range(5, 75, 5);
    return s;
  }
  if (name == "fig5") {
    Scenario s = latency_study("fig5", Study::latency_vs_alpha, 0.99, 1.0, 0.9);
    s.series = {5, 25};
    s.sweep = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999, 0.9999, 1.0};
    return s;
  }
  if (name == "fig6a") {
    Scenario s = latency_study("fig6a", Study::latency_vs_beta, 0.99, 1.0, 0.9);
    s.series = {5};
    s.sweep = {0.25, 0.5, 1, 2, 4, 8};
    return s;
  }
  if (name == "fig6b") {
    Scenario s = latency_study("fig6b", Study::latency_vs_gamma, 0.99, 1.0, 0.9);
    s.series = {5};
    s.sweep = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99};
    return s;
  }
  if (name == "fig7" || name == "fig7a" || name == "fig7b" || name == "fig7-caption") {
    Scenario s = latency_study(std::string(name), Study::latency_energy_vs_f, 0.99, 1.0, 0.9);
    s.sweep = range(0, 25, 5);
    return s;
  }
  if (name == "fig7-text") {
    Scenario s = latency_study("fig7-text", Study::latency_energy_vs_f, 0.01, 1.0, 0.1);
    s.sweep = range(0, 25, 5);
    return s;
  }
  if (name == "fig8") {
    Scenario s = base("fig8", Study::sizing_vs_n);
    s.area_edge_m = 100.0;
    s.f_fraction = 0.1;
    s.beta_slots = 1.0;
    s.targets.alpha = 0.99;
    s.targets.gamma = 0.9;
    s.sweep = range(4, 28, 2);
    return s;
  }
  throw InvalidParameter(fmt::format("unknown scenario '{}'", name));
}

template <typename T>
void read(const ordered_json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

template <typename T>
void read(const ordered_json& j, const char* key, std::optional<T>& out) {
  if (auto it = j.find(key); it != j.end()) {
    if (it->is_null()) {
      out.reset();
    } else {
      out = it->get<T>();
    }
  }
}

void reject_unknown(const ordered_json& j, std::initializer_list<std::string_view> keys,
                    std::string_view where) {
  if (!j.is_object()) throw InvalidParameter(fmt::format("'{}' must be an object", where));
  const std::set<std::string_view> known(keys);
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw InvalidParameter(fmt::format("unknown key '{}' in {}", k, where));
  }
}

template <typename T>
ordered_json opt(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string_view psi_sign_name(analytics::PsiSign s) {
  return s == analytics::PsiSign::paper_plus ? "paper_plus" : "corrected_minus";
}

analytics::PsiSign parse_psi_sign(std::string_view s) {
  if (s == "paper_plus" || s == "plus" || s == "paper") return analytics::PsiSign::paper_plus;
  if (s == "corrected_minus" || s == "minus" || s == "corrected") {
    return analytics::PsiSign::corrected_minus;
  }
  throw InvalidParameter(fmt::format("unknown psi variant '{}'", s));
}

void apply_overrides(const ordered_json& j, Scenario& s) {
  reject_unknown(j,
                 {"extends", "name", "study", "mode", "dissemination", "grid", "channel",
                  "targets", "proposer", "n_tilde", "phi", "psi_sign", "faults", "trials", "seed",
                  "calibration_trials", "sweep", "series"},
                 "scenario");
  read(j, "name", s.name);
  if (auto it = j.find("study"); it != j.end()) s.study = parse_study(it->get<std::string>());
  if (auto it = j.find("mode"); it != j.end()) s.mode = parse_protocol_mode(it->get<std::string>());
  if (auto it = j.find("dissemination"); it != j.end()) {
    s.dissemination = parse_dissemination(it->get<std::string>());
  }
  if (auto it = j.find("grid"); it != j.end()) {
    reject_unknown(*it, {"side", "spacing_m", "area_edge_m"}, "grid");
    read(*it, "side", s.side);
    read(*it, "spacing_m", s.spacing_m);
    read(*it, "area_edge_m", s.area_edge_m);
  }
  if (auto it = j.find("channel"); it != j.end()) {
    auto& c = s.channel;
    reject_unknown(*it,
                   {"eta", "lambda_m", "r0_m", "pn_mw", "rho_db", "bandwidth_hz", "msg_bits",
                    "pt_gossip_mw", "pt_broadcast_mw"},
                   "channel");
    read(*it, "eta", c.eta);
    read(*it, "lambda_m", c.lambda_m);
    read(*it, "r0_m", c.r0_m);
    read(*it, "pn_mw", c.pn_mw);
    read(*it, "rho_db", c.rho_db);
    read(*it, "bandwidth_hz", c.bandwidth_hz);
    read(*it, "msg_bits", c.msg_bits);
    read(*it, "pt_gossip_mw", c.pt_gossip_mw);
    read(*it, "pt_broadcast_mw", c.pt_broadcast_mw);
  }
  if (auto it = j.find("targets"); it != j.end()) {
    auto& t = s.targets;
    reject_unknown(*it, {"alpha", "beta_s", "beta_slots", "gamma", "zeta", "f_faulty", "f_fraction"},
                   "targets");
    read(*it, "alpha", t.alpha);
    read(*it, "beta_s", t.beta_s);
    read(*it, "gamma", t.gamma);
    read(*it, "zeta", t.zeta);
    read(*it, "f_faulty", t.f_faulty);
    read(*it, "beta_slots", s.beta_slots);
    read(*it, "f_fraction", s.f_fraction);
  }
  if (auto it = j.find("proposer"); it != j.end()) {
    reject_unknown(*it, {"position", "index"}, "proposer");
    if (auto p = it->find("position"); p != it->end()) {
      s.proposer_position = parse_proposer_position(p->get<std::string>());
    }
    read(*it, "index", s.proposer_index);
  }
  if (auto it = j.find("n_tilde"); it != j.end()) {
    if (it->is_null() || (it->is_string() && it->get<std::string>() == "auto")) {
      s.n_tilde.reset();
    } else {
      s.n_tilde = it->get<std::uint32_t>();
    }
  }
  read(j, "phi", s.phi);
  if (auto it = j.find("psi_sign"); it != j.end()) s.psi_sign = parse_psi_sign(it->get<std::string>());
  if (auto it = j.find("faults"); it != j.end()) {
    reject_unknown(*it, {"policy", "max_perturb_slots"}, "faults");
    if (auto p = it->find("policy"); p != it->end()) {
      s.fault_policy = consensus::parse_fault_policy(p->get<std::string>());
    }
    read(*it, "max_perturb_slots", s.max_perturb_slots);
  }
  read(j, "trials", s.trials);
  read(j, "seed", s.seed);
  read(j, "calibration_trials", s.calibration_trials);
  read(j, "sweep", s.sweep);
  read(j, "series", s.series);
}

}  // namespace

std::string_view to_string(Study s) {
  for (const auto& e : kStudies) {
    if (e.study == s) return e.name;
  }
  return "round";
}

Study parse_study(std::string_view s) {
  for (const auto& e : kStudies) {
    if (e.name == s) return e.study;
  }
  throw InvalidParameter(fmt::format("unknown study '{}'", s));
}

wireless::GridNetwork Scenario::network(std::uint32_t grid_side) const {
  if (area_edge_m) return wireless::GridNetwork::over_area(grid_side, *area_edge_m);
  return wireless::GridNetwork(grid_side, spacing_m);
}

NodeId Scenario::proposer(const wireless::GridNetwork& net) const {
  switch (proposer_position) {
    case ProposerPosition::corner:
      return net.corner();
    case ProposerPosition::center:
      return net.center();
    case ProposerPosition::index:
      if (!net.contains(proposer_index)) {
        throw InvalidParameter(fmt::format("proposer index {} outside the grid", proposer_index));
      }
      return proposer_index;
  }
  return net.corner();
}

analytics::ReliabilityTargets Scenario::resolved_targets(const wireless::GridNetwork& net) const {
  analytics::ReliabilityTargets t = targets;
  if (beta_slots) t.beta_s = *beta_slots * wireless::slot_duration(channel);
  if (f_fraction) {
    t.f_faulty = static_cast<std::uint32_t>(std::floor(*f_fraction * net.validator_count()));
  }
  return t;
}

void Scenario::validate() const {
  if (name.empty()) throw InvalidParameter("scenario needs a name");
  if (side < 2) throw InvalidParameter(fmt::format("grid side must be >= 2, got {}", side));
  if (area_edge_m && !(*area_edge_m > 0.0)) throw InvalidParameter("area edge must be positive");
  if (!area_edge_m && !(spacing_m > 0.0)) throw InvalidParameter("grid spacing must be positive");
  channel.validate();
  if (beta_slots && !(*beta_slots >= 0.0)) throw InvalidParameter("beta_slots must be >= 0");
  if (f_fraction && !(*f_fraction >= 0.0 && *f_fraction <= 1.0)) {
    throw InvalidParameter("f_fraction must lie in [0, 1]");
  }
  if (!(phi > 0.0 && phi < 1.0)) throw InvalidParameter("phi must lie in (0, 1)");
  if (trials == 0) throw InvalidParameter("trials must be >= 1");
  if (max_perturb_slots < 0) throw InvalidParameter("max_perturb_slots must be >= 0");
  if (study == Study::round) {
    const auto net = network();
    resolved_targets(net).validate(net.validator_count());
    proposer(net);
  } else if (sweep.empty()) {
    throw InvalidParameter(fmt::format("scenario '{}' has an empty sweep", name));
  }
}

std::vector<std::string> builtin_names() {
  return {"default", "fig3",  "fig4",  "fig5",         "fig6a",     "fig6b",
          "fig7",    "fig7a", "fig7b", "fig7-caption", "fig7-text", "fig8"};
}

Scenario builtin_scenario(std::string_view name) { return make_builtin(name); }

Scenario parse_scenario(std::string_view json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const ordered_json::exception& e) {
    throw InvalidParameter(fmt::format("scenario file is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw InvalidParameter("scenario file must hold a JSON object");
  Scenario s;
  try {
    if (auto it = j.find("extends"); it != j.end()) s = make_builtin(it->get<std::string>());
    apply_overrides(j, s);
  } catch (const ordered_json::exception& e) {
    throw InvalidParameter(fmt::format("bad scenario field: {}", e.what()));
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter(fmt::format("cannot open scenario file '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Scenario resolve_scenario(std::string_view name_or_path) {
  const auto names = builtin_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return make_builtin(name_or_path);
  }
  return load_scenario(std::filesystem::path(name_or_path));
}

std::string to_json(const Scenario& s) {
  const auto& c = s.channel;
  const auto& t = s.targets;
  ordered_json j;
  j["name"] = s.name;
  j["study"] = to_string(s.study);
  j["mode"] = to_string(s.mode);
  j["dissemination"] = to_string(s.dissemination);
  j["grid"] = {{"side", s.side}, {"spacing_m", s.spacing_m}, {"area_edge_m", opt(s.area_edge_m)}};
  j["channel"] = {{"eta", c.eta},
                  {"lambda_m", c.lambda_m},
                  {"r0_m", c.r0_m},
                  {"pn_mw", c.pn_mw},
                  {"rho_db", c.rho_db},
                  {"bandwidth_hz", c.bandwidth_hz},
                  {"msg_bits", c.msg_bits},
                  {"pt_gossip_mw", c.pt_gossip_mw},
                  {"pt_broadcast_mw", c.pt_broadcast_mw}};
  j["targets"] = {{"alpha", t.alpha},          {"beta_s", t.beta_s},
                  {"beta_slots", opt(s.beta_slots)}, {"gamma", t.gamma},
                  {"zeta", t.zeta},            {"f_faulty", t.f_faulty},
                  {"f_fraction", opt(s.f_fraction)}};
  j["proposer"] = {{"position", to_string(s.proposer_position)}, {"index", s.proposer_index}};
  j["n_tilde"] = s.n_tilde ? ordered_json(*s.n_tilde) : ordered_json("auto");
  j["phi"] = s.phi;
  j["psi_sign"] = psi_sign_name(s.psi_sign);
  j["faults"] = {{"policy", consensus::to_string(s.fault_policy)},
                 {"max_perturb_slots", s.max_perturb_slots}};
  j["trials"] = s.trials;
  j["seed"] = s.seed;
  j["calibration_trials"] = s.calibration_trials;
  j["sweep"] = s.sweep;
  j["series"] = s.series;
  return j.dump(2) + "\n";
}

}  // namespace r2c::experiments
