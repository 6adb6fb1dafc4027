#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "generators.hpp"
#include "oracles.hpp"
#include "sug/error.hpp"
#include "sug/eventlog.hpp"
#include "sug/graph.hpp"

namespace {

using sug::ErrorCode;
using sug::Sug;
using sug::UnitId;

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const sug::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no sug::Error thrown";
  return ErrorCode::kInvalidArgument;
}

std::set<std::string> labels(const Sug& g, std::span<const UnitId> ids) {
  std::set<std::string> out;
  for (UnitId id : ids) out.insert(g.unit(id).name + "@" + g.unit(id).release);
  return out;
}

Sug load_fixture(const char* file) {
  auto r = sug::replay(std::filesystem::path(SUG_FIXTURE_DIR) / file);
  EXPECT_TRUE(r.quarantine.empty());
  return std::move(r.graph);
}

TEST(Graph, AddsUnitsWithDenseIds) {
  Sug g;
  EXPECT_EQ(g.add_unit("a", "1.0.0", 10).value, 0u);
  EXPECT_EQ(g.add_unit("a", "1.1.0", 20).value, 1u);
  EXPECT_EQ(g.add_unit("b", "1.0.0", 5).value, 2u);
  EXPECT_EQ(g.unit_count(), 3u);
  EXPECT_EQ(g.min_time(), 5);
  EXPECT_EQ(g.max_time(), 20);
  EXPECT_EQ(g.find("a", "1.1.0")->value, 1u);
  EXPECT_FALSE(g.find("a", "9.9.9"));
  EXPECT_EQ(g.names(), (std::vector<std::string>{"a", "b"}));
}

TEST(Graph, RejectsDuplicateUnit) {
  Sug g;
  g.add_unit("a", "1.0.0", 10);
  EXPECT_EQ(code_of([&] { g.add_unit("a", "1.0.0", 11); }), ErrorCode::kDuplicateUnit);
  EXPECT_EQ(g.unit_count(), 1u);
}

TEST(Graph, RejectsEmptyName) {
  Sug g;
  EXPECT_EQ(code_of([&] { g.add_unit("", "1.0.0", 1); }), ErrorCode::kInvalidArgument);
}

TEST(Graph, UseEdgeErrors) {
  Sug g;
  const UnitId a = g.add_unit("a", "1.0.0", 10);
  const UnitId b = g.add_unit("b", "1.0.0", 5);
  EXPECT_EQ(code_of([&] { g.add_use_edge(a, a); }), ErrorCode::kSelfLoop);
  EXPECT_EQ(code_of([&] { g.add_use_edge(a, UnitId{7}); }), ErrorCode::kUnknownUnit);
  g.add_use_edge(a, b);
  EXPECT_EQ(code_of([&] { g.add_use_edge(a, b); }), ErrorCode::kParallelEdge);
  EXPECT_EQ(g.use_edges().size(), 1u);
  EXPECT_TRUE(g.has_use_edge(a, b));
  EXPECT_FALSE(g.has_use_edge(b, a));
}

TEST(Graph, LaterTargetIsAnomalyUnlessStrict) {
  Sug lax;
  UnitId a = lax.add_unit("a", "1.0.0", 10);
  UnitId b = lax.add_unit("b", "1.0.0", 20);
  lax.add_use_edge(a, b);
  ASSERT_EQ(lax.time_anomalies().size(), 1u);
  EXPECT_EQ(lax.time_anomalies()[0], 0u);

  Sug strict(sug::SugOptions{true});
  a = strict.add_unit("a", "1.0.0", 10);
  b = strict.add_unit("b", "1.0.0", 20);
  EXPECT_EQ(code_of([&] { strict.add_use_edge(a, b); }), ErrorCode::kTimeAnomaly);
  EXPECT_TRUE(strict.use_edges().empty());
}

TEST(Graph, UpdateEdgeAxioms) {
  Sug g;
  const UnitId a1 = g.add_unit("a", "1.0.0", 10);
  const UnitId a2 = g.add_unit("a", "2.0.0", 20);
  const UnitId a3 = g.add_unit("a", "3.0.0", 30);
  const UnitId a0 = g.add_unit("a", "0.9.0", 15);
  const UnitId b = g.add_unit("b", "1.0.0", 40);
  EXPECT_EQ(code_of([&] { g.add_update_edge(a1, b); }), ErrorCode::kNameAxiomViolation);
  EXPECT_EQ(code_of([&] { g.add_update_edge(a2, a1); }), ErrorCode::kTimeOrderViolation);
  EXPECT_EQ(code_of([&] { g.add_update_edge(a2, a0); }), ErrorCode::kTimeOrderViolation);
  g.add_update_edge(a1, a2);
  EXPECT_EQ(code_of([&] { g.add_update_edge(a1, a3); }), ErrorCode::kBranchingUpdate);
  EXPECT_EQ(code_of([&] { g.add_update_edge(a0, a2); }), ErrorCode::kBranchingUpdate);
  g.add_update_edge(a2, a3);
  EXPECT_EQ(g.successor(a1), a2);
  EXPECT_EQ(g.predecessor(a3), a2);
  EXPECT_FALSE(g.successor(a3));
  EXPECT_FALSE(g.predecessor(a1));
}

TEST(Graph, CheckDoesNotMutate) {
  Sug g;
  const UnitId a = g.add_unit("a", "1.0.0", 10);
  const UnitId b = g.add_unit("b", "1.0.0", 5);
  g.check_use_edge(a, b);
  EXPECT_TRUE(g.use_edges().empty());
  EXPECT_EQ(code_of([&] { g.check_update_edge(a, b); }), ErrorCode::kNameAxiomViolation);
}

TEST(Graph, UpdateChainOrdersByTime) {
  Sug g;
  g.add_unit("a", "2.0.0", 20);
  g.add_unit("a", "1.0.0", 10);
  g.add_unit("a", "3.0.0", 30);
  const auto chain = g.update_chain("a");
  ASSERT_EQ(chain.size(), 3u);
  EXPECT_EQ(g.unit(chain[0]).release, "1.0.0");
  EXPECT_EQ(g.unit(chain[2]).release, "3.0.0");
  EXPECT_TRUE(g.update_chain("zzz").empty());
}

TEST(Graph, RandomSequencesSatisfyAxioms) {
  sugtest::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Sug g = sugtest::build_graph(sugtest::random_valid_events(rng, 200));
    const auto violation = sugtest::axiom_violation(g);
    ASSERT_FALSE(violation) << *violation;
  }
}

TEST(Graph, EveryViolationKindIsRejected) {
  sugtest::Rng rng(12);
  std::set<sugtest::Violation> exercised;
  for (int i = 0; i < 100; ++i) {
    Sug g = sugtest::build_graph(sugtest::random_valid_events(rng, 120));
    for (sugtest::Violation v : sugtest::kAllViolations) {
      const auto bad = sugtest::violating_event(rng, g, v);
      if (!bad) continue;
      exercised.insert(v);
      sug::ReplayResult r;
      r.graph = sug::materialize(sug::timed_snapshot(g, sug::kTimeMax));
      sug::apply_event(r, sug::EcosystemEvent{1, std::nullopt, *bad}, 1);
      ASSERT_EQ(r.quarantine.size(), 1u) << sugtest::to_string(v);
      EXPECT_FALSE(sugtest::axiom_violation(r.graph));
    }
  }
  EXPECT_EQ(exercised.size(), std::size(sugtest::kAllViolations));
}

TEST(Snapshot, MatchesFilterAndInduce) {
  sugtest::Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const Sug g = sugtest::random_graph(rng, 60);
    if (g.unit_count() == 0) continue;
    const auto t = static_cast<sug::Timestamp>(
        sugtest::uniform(rng, 0, static_cast<std::size_t>(g.max_time()) + 10));
    EXPECT_EQ(sugtest::view_of(sug::timed_snapshot(g, t)), sugtest::filter_and_induce(g, t));
  }
}

TEST(Snapshot, ExtremesAndNeighbourhoods) {
  const Sug g = load_fixture("example_sug.ndjson");
  EXPECT_TRUE(sug::timed_snapshot(g, 0).empty());
  const auto all = sug::timed_snapshot(g, sug::kTimeMax);
  EXPECT_EQ(all.units().size(), g.unit_count());
  EXPECT_EQ(all.package_names(), (std::vector<std::string>{"a", "q", "x"}));
  const UnitId x1 = *g.find("x", "1.0.0");
  EXPECT_EQ(labels(g, all.used_by(x1)), labels(g, g.used_by(x1)));
  EXPECT_THROW(all.unit(UnitId{999}), sug::Error);
}

TEST(Snapshot, DiffAndApplyDeltaRoundTrip) {
  sugtest::Rng rng(14);
  for (int i = 0; i < 100; ++i) {
    const Sug g = sugtest::random_graph(rng, 60);
    const auto hi = static_cast<std::size_t>(std::max<sug::Timestamp>(g.max_time(), 1));
    auto t1 = static_cast<sug::Timestamp>(sugtest::uniform(rng, 0, hi));
    auto t2 = static_cast<sug::Timestamp>(sugtest::uniform(rng, 0, hi));
    if (t1 > t2) std::swap(t1, t2);
    const auto older = sug::timed_snapshot(g, t1);
    const auto newer = sug::timed_snapshot(g, t2);
    const auto delta = sug::diff(older, newer);
    EXPECT_TRUE(delta.strict_growth);
    EXPECT_EQ(delta.added_units.size(), newer.units().size() - older.units().size());
    EXPECT_TRUE(sug::apply_delta(older, delta, t2) == newer);
  }
}

TEST(Snapshot, DiffOrderAndSourceChecked) {
  const Sug g = load_fixture("example_sug.ndjson");
  const Sug h = load_fixture("example_sug.ndjson");
  const auto a = sug::timed_snapshot(g, 100);
  const auto b = sug::timed_snapshot(g, 200);
  EXPECT_EQ(code_of([&] { sug::diff(b, a); }), ErrorCode::kSnapshotOrderError);
  EXPECT_EQ(code_of([&] { sug::diff(a, sug::timed_snapshot(h, 300)); }),
            ErrorCode::kInvalidArgument);
}

TEST(Graph, TransitiveDependenciesMatchBfs) {
  sugtest::Rng rng(15);
  for (int i = 0; i < 100; ++i) {
    const Sug g = sugtest::random_graph(rng, 50);
    for (const auto& u : g.units()) {
      const auto got = sug::transitive_dependencies(g, u.id);
      std::set<std::uint32_t> ids;
      for (UnitId id : got) ids.insert(id.value);
      EXPECT_EQ(ids.size(), got.size());
      EXPECT_EQ(ids, sugtest::bfs_dependencies(g, u.id));
    }
  }
}

TEST(Graph, MaterializeIsStructurallyEqual) {
  sugtest::Rng rng(16);
  for (int i = 0; i < 50; ++i) {
    const Sug g = sugtest::random_graph(rng, 40);
    const Sug copy = sug::materialize(sug::timed_snapshot(g, sug::kTimeMax));
    EXPECT_TRUE(sug::structurally_equal(g, copy));
  }
}

TEST(ReferenceGraphs, SugFixture) {
  const Sug g = load_fixture("example_sug.ndjson");
  const UnitId a1 = *g.find("a", "1.0.0");
  const UnitId x1 = *g.find("x", "1.0.0");
  EXPECT_EQ(labels(g, g.use_of(a1)), (std::set<std::string>{"x@1.0.0"}));
  EXPECT_EQ(labels(g, g.used_by(x1)),
            (std::set<std::string>{"a@1.0.0", "q@1.0.0", "q@2.0.0"}));
  const auto chain = g.update_chain("q");
  ASSERT_EQ(chain.size(), 3u);
  EXPECT_EQ(g.successor(chain[0]), chain[1]);
  EXPECT_EQ(g.successor(chain[1]), chain[2]);
  EXPECT_EQ(g.unit(chain[2]).release, "3.0.0");
}

TEST(ReferenceGraphs, SugTempFixtureDelta) {
  const Sug g = load_fixture("example_sugtemp.ndjson");
  const auto a3 = *g.find("a", "3.0.0");
  const auto older = sug::timed_snapshot(g, g.unit(a3).time - 1);
  const auto newer = sug::timed_snapshot(g, g.unit(a3).time);
  const auto d = sug::diff(older, newer);
  ASSERT_EQ(d.added_units.size(), 1u);
  EXPECT_EQ(d.added_units[0].id, a3);
  ASSERT_EQ(d.added_use_edges.size(), 1u);
  EXPECT_EQ(d.added_use_edges[0].from, a3);
  EXPECT_EQ(d.added_use_edges[0].to, *g.find("x", "2.0.0"));
  ASSERT_EQ(d.added_update_edges.size(), 1u);
  EXPECT_EQ(d.added_update_edges[0].from, *g.find("a", "2.0.0"));
  EXPECT_EQ(d.added_update_edges[0].to, a3);
  EXPECT_TRUE(d.strict_growth);
}

}  // namespace
