#pragma once

// Software Universe Graph: versioned software units joined by use-relations
// (u uses v) and update-relations (u is immediately succeeded by v).
// The graph is append-only. Queries are const and may run concurrently as long
// as no writer is active.

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace sug {

/// UTC seconds since the epoch.
using Timestamp = std::int64_t;

inline constexpr Timestamp kTimeMin = std::numeric_limits<Timestamp>::min();
inline constexpr Timestamp kTimeMax = std::numeric_limits<Timestamp>::max();

/// Stable handle of a unit, assigned in insertion order starting at 0.
struct UnitId {
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(UnitId, UnitId) = default;
};

struct SoftwareUnit {
  UnitId id;
  std::string name;
  std::string release;
  Timestamp time = 0;

  friend bool operator==(const SoftwareUnit&, const SoftwareUnit&) = default;
};

struct UseEdge {
  UnitId from;
  UnitId to;

  friend constexpr auto operator<=>(const UseEdge&, const UseEdge&) = default;
};

struct UpdateEdge {
  UnitId from;
  UnitId to;

  friend constexpr auto operator<=>(const UpdateEdge&, const UpdateEdge&) = default;
};

struct SugOptions {
  /// Reject use-edges whose target was released after the user.
  bool strict = false;
};

class Sug {
 public:
  Sug() = default;
  explicit Sug(SugOptions options) : options_(options) {}

  UnitId add_unit(std::string name, std::string release, Timestamp time);
  UseEdge add_use_edge(UnitId from, UnitId to);
  UpdateEdge add_update_edge(UnitId from, UnitId to);

  /// Throws the error add_use_edge/add_update_edge would throw, without
  /// mutating the graph.
  void check_use_edge(UnitId from, UnitId to) const;
  void check_update_edge(UnitId from, UnitId to) const;

  std::size_t unit_count() const noexcept { return units_.size(); }
  std::span<const SoftwareUnit> units() const noexcept { return units_; }
  std::span<const UseEdge> use_edges() const noexcept { return use_edges_; }
  std::span<const UpdateEdge> update_edges() const noexcept {
    return update_edges_;
  }

  bool contains(UnitId id) const noexcept { return id.value < units_.size(); }
  const SoftwareUnit& unit(UnitId id) const;
  std::optional<UnitId> find(std::string_view name,
                             std::string_view release) const;

  /// Out-neighbourhood over use-edges, in insertion order.
  std::span<const UnitId> use_of(UnitId id) const;
  /// In-neighbourhood over use-edges, in insertion order.
  std::span<const UnitId> used_by(UnitId id) const;

  bool has_use_edge(UnitId from, UnitId to) const noexcept;

  std::optional<UnitId> successor(UnitId id) const;
  std::optional<UnitId> predecessor(UnitId id) const;

  /// All units named `name`, ordered by time (ties by insertion order).
  /// Units linked by update-edges appear in chain order.
  std::vector<UnitId> update_chain(std::string_view name) const;

  /// Distinct unit names in first-insertion order.
  std::vector<std::string> names() const;

  /// Units with the given name in insertion order; empty for unknown names.
  std::span<const UnitId> units_named(std::string_view name) const;

  /// Indices into use_edges() of edges whose target was released after the
  /// user. Only populated in non-strict mode.
  std::span<const std::size_t> time_anomalies() const noexcept {
    return time_anomalies_;
  }

  const SugOptions& options() const noexcept { return options_; }

  /// Identity token shared by snapshots derived from this graph.
  std::uint64_t identity() const noexcept { return identity_; }

  Timestamp max_time() const noexcept { return max_time_; }
  Timestamp min_time() const noexcept { return min_time_; }

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  static std::uint64_t next_identity();
  static std::uint64_t edge_key(UnitId from, UnitId to) noexcept {
    return (static_cast<std::uint64_t>(from.value) << 32) | to.value;
  }
  void require(UnitId id) const;

  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };

  SugOptions options_;
  std::uint64_t identity_ = next_identity();
  std::vector<SoftwareUnit> units_;
  std::vector<UseEdge> use_edges_;
  std::vector<UpdateEdge> update_edges_;
  std::vector<std::vector<UnitId>> out_;
  std::vector<std::vector<UnitId>> in_;
  std::vector<std::uint32_t> succ_;
  std::vector<std::uint32_t> pred_;
  std::unordered_set<std::uint64_t> use_keys_;
  std::unordered_map<std::string, UnitId, StringHash, std::equal_to<>> by_key_;
  std::unordered_map<std::string, std::vector<UnitId>, StringHash, std::equal_to<>>
      by_name_;
  std::vector<std::string> name_order_;
  std::vector<std::size_t> time_anomalies_;
  Timestamp max_time_ = kTimeMin;
  Timestamp min_time_ = kTimeMax;
};

struct GrowthDelta;

/// Immutable induced sub-graph of all units released at or before `at`.
class TimedSnapshot {
 public:
  TimedSnapshot() = default;

  Timestamp at() const noexcept { return at_; }
  std::uint64_t source() const noexcept { return source_; }

  /// Units in id order.
  std::span<const SoftwareUnit> units() const noexcept { return units_; }
  /// Edges in the parent graph's insertion order.
  std::span<const UseEdge> use_edges() const noexcept { return use_edges_; }
  std::span<const UpdateEdge> update_edges() const noexcept {
    return update_edges_;
  }

  bool contains(UnitId id) const noexcept;
  const SoftwareUnit& unit(UnitId id) const;
  std::span<const UnitId> use_of(UnitId id) const;
  std::span<const UnitId> used_by(UnitId id) const;

  /// Distinct package names, sorted ascending.
  std::vector<std::string> package_names() const;

  bool empty() const noexcept { return units_.empty(); }

  /// Structural equality: same instant, units, and edge sets.
  friend bool operator==(const TimedSnapshot& a, const TimedSnapshot& b);

 private:
  friend TimedSnapshot timed_snapshot(const Sug& g, Timestamp t);
  friend TimedSnapshot apply_delta(const TimedSnapshot& older,
                                   const GrowthDelta& delta,
                                   Timestamp at);

  void index();
  std::size_t local(UnitId id) const;

  Timestamp at_ = kTimeMin;
  std::uint64_t source_ = 0;
  std::vector<SoftwareUnit> units_;
  std::vector<UseEdge> use_edges_;
  std::vector<UpdateEdge> update_edges_;
  std::unordered_map<std::uint32_t, std::uint32_t> local_;
  std::vector<std::vector<UnitId>> out_;
  std::vector<std::vector<UnitId>> in_;
};

TimedSnapshot timed_snapshot(const Sug& g, Timestamp t);

struct GrowthDelta {
  std::vector<SoftwareUnit> added_units;
  std::vector<UseEdge> added_use_edges;
  std::vector<UpdateEdge> added_update_edges;
  /// True when every added edge touches at least one added unit.
  bool strict_growth = true;

  bool empty() const noexcept {
    return added_units.empty() && added_use_edges.empty() &&
           added_update_edges.empty();
  }
};

GrowthDelta diff(const TimedSnapshot& older, const TimedSnapshot& newer);

/// Rebuilds the newer snapshot from an older one plus the delta between them.
TimedSnapshot apply_delta(const TimedSnapshot& older, const GrowthDelta& delta,
                          Timestamp at);

std::vector<UnitId> transitive_dependencies(const Sug& g, UnitId u);
std::vector<UnitId> transitive_dependencies(const TimedSnapshot& s, UnitId u);

/// Rebuilds a standalone, non-strict graph from a snapshot. Unit handles are
/// reassigned densely in the snapshot's id order.
Sug materialize(const TimedSnapshot& s);

/// Equality of content, ignoring handle identity tokens.
bool structurally_equal(const Sug& a, const Sug& b);

}  // namespace sug

template <>
struct std::hash<sug::UnitId> {
  std::size_t operator()(sug::UnitId id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
