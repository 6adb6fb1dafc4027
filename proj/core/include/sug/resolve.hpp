#pragma once

// Dependency trees under nested and flat (hoisted) semantics.
//
// Nested: every dependency is resolved for its own parent and installed below
// it. Flat: the nested tree is walked breadth-first in declaration order and
// the first version of each name encountered is hoisted to the top level;
// a later, conflicting version stays nested under the package that needs it.
// Lookup of a dependency from a package checks the package's own nested
// entries first, then the top level.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sug/graph.hpp"
#include "sug/ingest.hpp"

namespace sug {

/// Manifests available for resolution, keyed by name then release.
class ManifestRegistry {
 public:
  void add(Manifest manifest);

  const Manifest* find(std::string_view name, std::string_view release) const;

  /// Highest release of `dep.name` matching the dependency: semver ranges
  /// select the maximum satisfying release, anything else matches the
  /// release label exactly. Returns nullopt when nothing matches.
  std::optional<std::string> resolve(const Dependency& dep) const;

  std::size_t size() const noexcept;

 private:
  std::map<std::string, std::map<std::string, Manifest>, std::less<>> by_name_;
};

/// Manifest view of a snapshot: each unit's use-edges become exact
/// dependencies in edge insertion order.
ManifestRegistry registry_from_snapshot(const TimedSnapshot& snapshot);

enum class DepStyle { kNested, kFlat };

struct DepNode {
  std::string name;
  std::string version;
  std::vector<DepNode> children;
  /// Repeat of a package already on the active path; never expanded.
  bool back_reference = false;

  friend bool operator==(const DepNode&, const DepNode&) = default;
};

struct DepTree {
  DepNode root;
  DepStyle style = DepStyle::kNested;

  std::size_t node_count() const;

  friend bool operator==(const DepTree&, const DepTree&) = default;
};

struct Conflict {
  std::string name;
  /// Distinct versions, ascending.
  std::vector<std::string> versions;

  friend bool operator==(const Conflict&, const Conflict&) = default;
};

struct ResolveOptions {
  /// Abort with TreeTooLarge once the nested tree exceeds this many nodes.
  std::size_t max_nodes = 1'000'000;
};

/// Throws NoMatchingVersion naming the dependency and the path to it.
DepTree build_nested_tree(const Manifest& root, const ManifestRegistry& registry,
                          ResolveOptions options = {});

DepTree flatten_tree(const DepTree& nested);

std::vector<Conflict> detect_conflicts(const DepTree& tree);

/// Version seen when `node` (reached by following `path` child indices from
/// the root) looks up `dep_name`: its own children first, then the top level.
std::optional<std::string> lookup(const DepTree& tree,
                                  const std::vector<std::size_t>& path,
                                  std::string_view dep_name);

struct DeclaredUsage {
  std::set<std::string> unused;   // declared but not observed
  std::set<std::string> phantom;  // observed but not declared
};

DeclaredUsage unused_declared(const Manifest& manifest,
                              const std::set<std::string>& observed_imports);

/// {"name","version","backReference"?,"children":[...]} with a top-level
/// "style" field.
std::string tree_to_json(const DepTree& tree);

/// One line per non-root node: "name@version,path" where path joins the
/// names from the top level down to the node with '/'.
std::string tree_to_listing(const DepTree& tree);

}  // namespace sug
