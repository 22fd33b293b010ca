#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace r2c {

using NodeId = std::uint32_t;

/// Slot counts and slot-valued timestamps.
using Slots = std::int64_t;

inline constexpr Slots kUndelivered = std::numeric_limits<Slots>::max();

enum class Dissemination { gossip, broadcast };
enum class ProtocolMode { rc, r2c };
enum class ProposerPosition { corner, center, index };

std::string_view to_string(Dissemination d);
std::string_view to_string(ProtocolMode m);
std::string_view to_string(ProposerPosition p);

Dissemination parse_dissemination(std::string_view s);
ProtocolMode parse_protocol_mode(std::string_view s);
ProposerPosition parse_proposer_position(std::string_view s);

}  // namespace r2c
