#include "r2c/types.hpp"

#include <fmt/core.h>

#include "r2c/error.hpp"

namespace r2c {

std::string_view to_string(Dissemination d) {
  return d == Dissemination::gossip ? "gossip" : "broadcast";
}

std::string_view to_string(ProtocolMode m) { return m == ProtocolMode::rc ? "rc" : "r2c"; }

std::string_view to_string(ProposerPosition p) {
  switch (p) {
    case ProposerPosition::corner:
      return "corner";
    case ProposerPosition::center:
      return "center";
    case ProposerPosition::index:
      return "index";
  }
  return "index";
}

Dissemination parse_dissemination(std::string_view s) {
  if (s == "gossip" || s == "g") return Dissemination::gossip;
  if (s == "broadcast" || s == "b") return Dissemination::broadcast;
  throw InvalidParameter(fmt::format("unknown dissemination '{}'", s));
}

ProtocolMode parse_protocol_mode(std::string_view s) {
  if (s == "rc" || s == "RC") return ProtocolMode::rc;
  if (s == "r2c" || s == "R2C") return ProtocolMode::r2c;
  throw InvalidParameter(fmt::format("unknown protocol mode '{}'", s));
}

ProposerPosition parse_proposer_position(std::string_view s) {
  if (s == "corner") return ProposerPosition::corner;
  if (s == "center" || s == "centre") return ProposerPosition::center;
  if (s == "index") return ProposerPosition::index;
  throw InvalidParameter(fmt::format("unknown proposer position '{}'", s));
}

}  // namespace r2c
