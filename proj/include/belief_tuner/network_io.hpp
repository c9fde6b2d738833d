#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "belief_tuner/network.hpp"

namespace belief_tuner {

/// Parses the canonical JSON network document:
///
///   {"variables": [{"name": ..., "states": [...], "parents": [...],
///                   "cpt": [[...], ...]}, ...]}
///
/// Throws ParseError (with byte offset) on malformed JSON or a document of
/// the wrong shape, ValidationError when the network itself is invalid.
Network parse_network(std::string_view text);

/// Canonical document with fields in declared order and probabilities in
/// shortest round-trip form.
std::string serialize_network(const Network& n);

Network read_network_file(const std::filesystem::path& path);

}  // namespace belief_tuner
