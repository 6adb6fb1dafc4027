#pragma once

// Snapshot serializers. Nodes are keyed "u<id>" and carry name, release and
// time attributes; edges carry a kind of "use" or "update". Output order
// follows the snapshot, so documents are byte-stable for a fixed log.

#include <filesystem>
#include <span>
#include <string>

#include "sug/graph.hpp"

namespace sug {

std::string snapshot_to_dot(const TimedSnapshot& snapshot);
std::string snapshot_to_graphml(const TimedSnapshot& snapshot);
std::string snapshot_to_json(const TimedSnapshot& snapshot);

/// Writes one DOT file per snapshot ("snapshot-<n>.dot", n zero-padded) into
/// `dir`, creating it if needed. Returns the written paths.
std::vector<std::filesystem::path> write_dot_series(
    std::span<const TimedSnapshot> series, const std::filesystem::path& dir);

}  // namespace sug
