#include "sug/graph.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <set>

#include "sug/error.hpp"

namespace sug {

namespace {

std::string unit_key(std::string_view name, std::string_view release) {
  std::string key;
  key.reserve(name.size() + release.size() + 1);
  key.append(name);
  key.push_back('\0');
  key.append(release);
  return key;
}

std::string describe(const SoftwareUnit& u) {
  return u.name + "@" + u.release;
}

}  // namespace

std::uint64_t Sug::next_identity() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

void Sug::require(UnitId id) const {
  if (!contains(id)) {
    throw Error(ErrorCode::kUnknownUnit,
                "no unit with handle " + std::to_string(id.value));
  }
}

const SoftwareUnit& Sug::unit(UnitId id) const {
  require(id);
  return units_[id.value];
}

UnitId Sug::add_unit(std::string name, std::string release, Timestamp time) {
  if (name.empty() || release.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "unit name and release must be non-empty");
  }
  std::string key = unit_key(name, release);
  if (by_key_.contains(key)) {
    throw Error(ErrorCode::kDuplicateUnit, name + "@" + release);
  }
  if (units_.size() >= kNone) {
    throw Error(ErrorCode::kInvalidArgument, "unit handle space exhausted");
  }
  const UnitId id{static_cast<std::uint32_t>(units_.size())};
  by_key_.emplace(std::move(key), id);
  auto [it, inserted] = by_name_.try_emplace(name);
  if (inserted) name_order_.push_back(name);
  it->second.push_back(id);
  units_.push_back(SoftwareUnit{id, std::move(name), std::move(release), time});
  out_.emplace_back();
  in_.emplace_back();
  succ_.push_back(kNone);
  pred_.push_back(kNone);
  max_time_ = std::max(max_time_, time);
  min_time_ = std::min(min_time_, time);
  return id;
}

void Sug::check_use_edge(UnitId from, UnitId to) const {
  require(from);
  require(to);
  if (from == to) {
    throw Error(ErrorCode::kSelfLoop, describe(units_[from.value]));
  }
  if (use_keys_.contains(edge_key(from, to))) {
    throw Error(ErrorCode::kParallelEdge, describe(units_[from.value]) +
                                              " -> " +
                                              describe(units_[to.value]));
  }
  if (options_.strict && units_[to.value].time > units_[from.value].time) {
    throw Error(ErrorCode::kTimeAnomaly,
                describe(units_[from.value]) + " uses later release " +
                    describe(units_[to.value]));
  }
}

UseEdge Sug::add_use_edge(UnitId from, UnitId to) {
  check_use_edge(from, to);
  use_keys_.insert(edge_key(from, to));
  if (units_[to.value].time > units_[from.value].time) {
    time_anomalies_.push_back(use_edges_.size());
  }
  use_edges_.push_back(UseEdge{from, to});
  out_[from.value].push_back(to);
  in_[to.value].push_back(from);
  return use_edges_.back();
}

void Sug::check_update_edge(UnitId from, UnitId to) const {
  require(from);
  require(to);
  const SoftwareUnit& a = units_[from.value];
  const SoftwareUnit& b = units_[to.value];
  if (a.name != b.name) {
    throw Error(ErrorCode::kNameAxiomViolation,
                describe(a) + " => " + describe(b));
  }
  if (!(a.time < b.time)) {
    throw Error(ErrorCode::kTimeOrderViolation,
                describe(a) + " (t=" + std::to_string(a.time) + ") => " +
                    describe(b) + " (t=" + std::to_string(b.time) + ")");
  }
  if (succ_[from.value] != kNone) {
    throw Error(ErrorCode::kBranchingUpdate,
                describe(a) + " already has a successor");
  }
  if (pred_[to.value] != kNone) {
    throw Error(ErrorCode::kBranchingUpdate,
                describe(b) + " already has a predecessor");
  }
}

UpdateEdge Sug::add_update_edge(UnitId from, UnitId to) {
  check_update_edge(from, to);
  succ_[from.value] = to.value;
  pred_[to.value] = from.value;
  update_edges_.push_back(UpdateEdge{from, to});
  return update_edges_.back();
}

std::optional<UnitId> Sug::find(std::string_view name,
                                std::string_view release) const {
  auto it = by_key_.find(unit_key(name, release));
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

std::span<const UnitId> Sug::use_of(UnitId id) const {
  require(id);
  return out_[id.value];
}

std::span<const UnitId> Sug::used_by(UnitId id) const {
  require(id);
  return in_[id.value];
}

bool Sug::has_use_edge(UnitId from, UnitId to) const noexcept {
  return use_keys_.contains(edge_key(from, to));
}

std::optional<UnitId> Sug::successor(UnitId id) const {
  require(id);
  if (succ_[id.value] == kNone) return std::nullopt;
  return UnitId{succ_[id.value]};
}

std::optional<UnitId> Sug::predecessor(UnitId id) const {
  require(id);
  if (pred_[id.value] == kNone) return std::nullopt;
  return UnitId{pred_[id.value]};
}

std::span<const UnitId> Sug::units_named(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return {};
  return it->second;
}

std::vector<UnitId> Sug::update_chain(std::string_view name) const {
  std::span<const UnitId> named = units_named(name);
  std::vector<UnitId> chain(named.begin(), named.end());
  // Update-edges force strictly increasing time, so a stable time sort is
  // consistent with every chain.
  std::stable_sort(chain.begin(), chain.end(), [this](UnitId a, UnitId b) {
    return units_[a.value].time < units_[b.value].time;
  });
  return chain;
}

std::vector<std::string> Sug::names() const { return name_order_; }

// ---------------------------------------------------------------------------
// TimedSnapshot

void TimedSnapshot::index() {
  local_.clear();
  local_.reserve(units_.size());
  for (std::uint32_t i = 0; i < units_.size(); ++i) {
    local_.emplace(units_[i].id.value, i);
  }
  out_.assign(units_.size(), {});
  in_.assign(units_.size(), {});
  for (const UseEdge& e : use_edges_) {
    out_[local(e.from)].push_back(e.to);
    in_[local(e.to)].push_back(e.from);
  }
}

std::size_t TimedSnapshot::local(UnitId id) const {
  auto it = local_.find(id.value);
  if (it == local_.end()) {
    throw Error(ErrorCode::kUnknownUnit, "unit handle " +
                                             std::to_string(id.value) +
                                             " not in snapshot");
  }
  return it->second;
}

bool TimedSnapshot::contains(UnitId id) const noexcept {
  return local_.contains(id.value);
}

const SoftwareUnit& TimedSnapshot::unit(UnitId id) const {
  return units_[local(id)];
}

std::span<const UnitId> TimedSnapshot::use_of(UnitId id) const {
  return out_[local(id)];
}

std::span<const UnitId> TimedSnapshot::used_by(UnitId id) const {
  return in_[local(id)];
}

std::vector<std::string> TimedSnapshot::package_names() const {
  std::set<std::string> names;
  for (const SoftwareUnit& u : units_) names.insert(u.name);
  return {names.begin(), names.end()};
}

bool operator==(const TimedSnapshot& a, const TimedSnapshot& b) {
  if (a.at_ != b.at_ || a.units_ != b.units_) return false;
  auto sorted = [](auto edges) {
    std::sort(edges.begin(), edges.end());
    return edges;
  };
  return sorted(a.use_edges_) == sorted(b.use_edges_) &&
         sorted(a.update_edges_) == sorted(b.update_edges_);
}

TimedSnapshot timed_snapshot(const Sug& g, Timestamp t) {
  TimedSnapshot s;
  s.at_ = t;
  s.source_ = g.identity();
  std::vector<bool> keep(g.unit_count(), false);
  for (const SoftwareUnit& u : g.units()) {
    if (u.time <= t) {
      keep[u.id.value] = true;
      s.units_.push_back(u);
    }
  }
  for (const UseEdge& e : g.use_edges()) {
    if (keep[e.from.value] && keep[e.to.value]) s.use_edges_.push_back(e);
  }
  for (const UpdateEdge& e : g.update_edges()) {
    if (keep[e.from.value] && keep[e.to.value]) s.update_edges_.push_back(e);
  }
  s.index();
  return s;
}

GrowthDelta diff(const TimedSnapshot& older, const TimedSnapshot& newer) {
  if (older.at() > newer.at()) {
    throw Error(ErrorCode::kSnapshotOrderError,
                "older snapshot at " + std::to_string(older.at()) +
                    " is after newer snapshot at " +
                    std::to_string(newer.at()));
  }
  if (older.source() != newer.source()) {
    throw Error(ErrorCode::kInvalidArgument,
                "snapshots derive from different graphs");
  }
  GrowthDelta delta;
  for (const SoftwareUnit& u : newer.units()) {
    if (!older.contains(u.id)) delta.added_units.push_back(u);
  }
  auto touches_new = [&](UnitId a, UnitId b) {
    return !older.contains(a) || !older.contains(b);
  };
  std::set<UseEdge> old_use(older.use_edges().begin(), older.use_edges().end());
  std::set<UpdateEdge> old_update(older.update_edges().begin(),
                                  older.update_edges().end());
  for (const UseEdge& e : newer.use_edges()) {
    if (touches_new(e.from, e.to) || !old_use.contains(e)) {
      delta.added_use_edges.push_back(e);
      if (!touches_new(e.from, e.to)) delta.strict_growth = false;
    }
  }
  for (const UpdateEdge& e : newer.update_edges()) {
    if (touches_new(e.from, e.to) || !old_update.contains(e)) {
      delta.added_update_edges.push_back(e);
      if (!touches_new(e.from, e.to)) delta.strict_growth = false;
    }
  }
  return delta;
}

TimedSnapshot apply_delta(const TimedSnapshot& older, const GrowthDelta& delta,
                          Timestamp at) {
  TimedSnapshot s;
  s.at_ = at;
  s.source_ = older.source_;
  s.units_ = older.units_;
  s.units_.insert(s.units_.end(), delta.added_units.begin(),
                  delta.added_units.end());
  std::sort(s.units_.begin(), s.units_.end(),
            [](const SoftwareUnit& a, const SoftwareUnit& b) {
              return a.id < b.id;
            });
  s.use_edges_ = older.use_edges_;
  s.use_edges_.insert(s.use_edges_.end(), delta.added_use_edges.begin(),
                      delta.added_use_edges.end());
  s.update_edges_ = older.update_edges_;
  s.update_edges_.insert(s.update_edges_.end(),
                         delta.added_update_edges.begin(),
                         delta.added_update_edges.end());
  s.index();
  return s;
}

namespace {

template <typename Graph>
std::vector<UnitId> reachable_from(const Graph& g, UnitId start) {
  std::unordered_set<UnitId> visited{start};
  std::vector<UnitId> stack{start};
  std::vector<UnitId> result;
  while (!stack.empty()) {
    UnitId cur = stack.back();
    stack.pop_back();
    for (UnitId next : g.use_of(cur)) {
      if (visited.insert(next).second) {
        result.push_back(next);
        stack.push_back(next);
      }
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace

std::vector<UnitId> transitive_dependencies(const Sug& g, UnitId u) {
  g.use_of(u);  // validates the handle
  return reachable_from(g, u);
}

std::vector<UnitId> transitive_dependencies(const TimedSnapshot& s, UnitId u) {
  s.use_of(u);
  return reachable_from(s, u);
}

Sug materialize(const TimedSnapshot& s) {
  Sug g;
  std::unordered_map<std::uint32_t, UnitId> remap;
  remap.reserve(s.units().size());
  for (const SoftwareUnit& u : s.units()) {
    remap.emplace(u.id.value, g.add_unit(u.name, u.release, u.time));
  }
  for (const UseEdge& e : s.use_edges()) {
    g.add_use_edge(remap.at(e.from.value), remap.at(e.to.value));
  }
  for (const UpdateEdge& e : s.update_edges()) {
    g.add_update_edge(remap.at(e.from.value), remap.at(e.to.value));
  }
  return g;
}

bool structurally_equal(const Sug& a, const Sug& b) {
  if (a.unit_count() != b.unit_count()) return false;
  for (std::size_t i = 0; i < a.unit_count(); ++i) {
    if (a.units()[i] != b.units()[i]) return false;
  }
  auto same = [](auto x, auto y) {
    return std::equal(x.begin(), x.end(), y.begin(), y.end());
  };
  return same(a.use_edges(), b.use_edges()) &&
         same(a.update_edges(), b.update_edges()) &&
         same(a.time_anomalies(), b.time_anomalies());
}

}  // namespace sug
