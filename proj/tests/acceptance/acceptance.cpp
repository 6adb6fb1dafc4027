// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <sys/resource.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "fixture_eval.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "range_oracle.hpp"
#include "sug/eventlog.hpp"
#include "sug/pipeline.hpp"
#include "sug/resolve.hpp"
#include "sug/sampling.hpp"
#include "sug/semver.hpp"
#include "tempdir.hpp"

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

long peak_rss_kb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss;
}

struct Counts {
  std::size_t units, use_edges, update_edges;
};

Counts counts(const sug::Sug& g) {
  return {g.unit_count(), g.use_edges().size(), g.update_edges().size()};
}

Outcome axioms_and_rejection() {
  Outcome o;
  const auto start = Clock::now();
  sugtest::Rng rng(1001);
  std::size_t sequences = 0, mutations = 0;
  for (; sequences < 1000; ++sequences) {
    const auto events = sugtest::random_valid_events(rng, 500);
    sug::ReplayResult state;
    std::uint64_t seq = 0;
    for (const auto& e : events) {
      sug::apply_event(state, sug::EcosystemEvent{++seq, std::nullopt, e}, seq);
    }
    if (!state.quarantine.empty()) {
      o.fail("valid event quarantined: " + state.quarantine.front().message);
      break;
    }
    if (auto v = sugtest::axiom_violation(state.graph)) {
      o.fail("axiom violated: " + *v);
      break;
    }
    for (sugtest::Violation kind : sugtest::kAllViolations) {
      const auto bad = sugtest::violating_event(rng, state.graph, kind);
      if (!bad) continue;
      ++mutations;
      const Counts before = counts(state.graph);
      sug::apply_event(state, sug::EcosystemEvent{++seq, std::nullopt, *bad}, seq);
      const Counts after = counts(state.graph);
      if (state.quarantine.size() != 1 || before.units != after.units ||
          before.use_edges != after.use_edges || before.update_edges != after.update_edges) {
        o.fail(std::string("accepted violating event: ") + sugtest::to_string(kind));
        break;
      }
      state.quarantine.clear();
    }
    if (!o.pass) break;
  }
  const double elapsed = seconds_since(start);
  if (o.pass && elapsed >= 10.0) o.fail("took " + std::to_string(elapsed) + " s");
  if (o.pass) {
    o.detail = std::to_string(sequences) + " sequences, " + std::to_string(mutations) +
               " violating events rejected, " + std::to_string(elapsed) + " s";
  }
  return o;
}

Outcome snapshot_equals_filter() {
  Outcome o;
  sugtest::Rng rng(1002);
  std::size_t checks = 0;
  for (int i = 0; i < 200 && o.pass; ++i) {
    const auto g = sugtest::random_graph(rng, 200);
    for (int k = 0; k < 5; ++k) {
      const auto t = static_cast<sug::Timestamp>(
          sugtest::uniform(rng, 0, static_cast<std::size_t>(std::max<sug::Timestamp>(0, g.max_time())) + 10));
      ++checks;
      if (sugtest::view_of(sug::timed_snapshot(g, t)) != sugtest::filter_and_induce(g, t)) {
        o.fail("mismatch at t=" + std::to_string(t));
        break;
      }
    }
  }
  if (o.pass) o.detail = "200 graphs, " + std::to_string(checks) + " snapshots";
  return o;
}

std::set<std::string> labels(const sug::Sug& g, std::span<const sug::UnitId> ids) {
  std::set<std::string> out;
  for (auto id : ids) out.insert(g.unit(id).name + "@" + g.unit(id).release);
  return out;
}

Outcome reference_fixtures() {
  Outcome o;
  const auto example = sug::replay(sugtest::fixture_path("example_sug.ndjson"));
  const auto& g = example.graph;
  const auto a1 = g.find("a", "1.0.0");
  const auto x1 = g.find("x", "1.0.0");
  if (!a1 || !x1) {
    o.fail("SUG example units missing");
    return o;
  }
  if (labels(g, g.use_of(*a1)) != std::set<std::string>{"x@1.0.0"}) o.fail("use_of(a1)");
  if (labels(g, g.used_by(*x1)) != std::set<std::string>{"a@1.0.0", "q@1.0.0", "q@2.0.0"}) {
    o.fail("used_by(x1)");
  }
  const auto chain = g.update_chain("q");
  if (chain.size() != 3 || g.successor(chain[0]) != chain[1] ||
      g.successor(chain[1]) != chain[2]) {
    o.fail("q update chain");
  }

  const auto temp = sug::replay(sugtest::fixture_path("example_sugtemp.ndjson")).graph;
  const auto a2 = temp.find("a", "2.0.0");
  const auto a3 = temp.find("a", "3.0.0");
  const auto x2 = temp.find("x", "2.0.0");
  if (!a2 || !a3 || !x2) {
    o.fail("SUGTemp example units missing");
    return o;
  }
  const auto t3 = temp.unit(*a3).time;
  const auto d = sug::diff(sug::timed_snapshot(temp, t3 - 1), sug::timed_snapshot(temp, t3));
  if (d.added_units.size() != 1 || d.added_units[0].id != *a3 ||
      d.added_use_edges.size() != 1 || d.added_use_edges[0].from != *a3 ||
      d.added_use_edges[0].to != *x2 || d.added_update_edges.size() != 1 ||
      d.added_update_edges[0].from != *a2 || d.added_update_edges[0].to != *a3 ||
      !d.strict_growth) {
    o.fail("SUGTemp delta");
  }

  const auto dc_graph = sug::replay(sugtest::fixture_path("dc_graph.ndjson")).graph;
  const auto contributions = sugtest::load_dc_contributions("dc_contributions.ndjson");
  const sug::Window window{sug::parse_timestamp("2021-01-31"), sug::parse_timestamp("2021-03-01")};
  const auto pairs =
      sug::congruent_contributions(sug::build_dc_graph(dc_graph, contributions, window));
  if (pairs.size() != 2) o.fail(std::to_string(pairs.size()) + " congruent pairs");
  if (o.pass) o.detail = "SUG, SUGTemp and dc-graph fixtures";
  return o;
}

bool top_level_only(const sug::DepTree& flat) {
  for (const auto& top : flat.root.children) {
    if (!top.children.empty()) return false;
  }
  return true;
}

Outcome flatten_properties() {
  Outcome o;
  sugtest::Rng rng(1004);
  std::size_t universes = 0, trees = 0, conflict_free = 0, oversized = 0;
  while (universes < 500 && o.pass) {
    std::vector<sug::Manifest> roots;
    const auto reg = sugtest::random_universe(rng, 50, &roots);
    ++universes;
    for (const auto& root : roots) {
      sug::DepTree nested;
      try {
        nested = sug::build_nested_tree(root, reg, {20000});
      } catch (const sug::Error& e) {
        if (e.code() != sug::ErrorCode::kTreeTooLarge) throw;
        ++oversized;
        continue;
      }
      ++trees;
      const auto flat = sug::flatten_tree(nested);
      if (auto mismatch = sugtest::flat_matches_nested(nested, flat)) {
        o.fail("resolution changed: " + *mismatch);
        break;
      }
      if (sug::flatten_tree(flat) != flat) {
        o.fail("flatten not idempotent for " + root.name);
        break;
      }
      if (sug::detect_conflicts(nested).empty()) {
        ++conflict_free;
        if (!top_level_only(flat)) {
          o.fail("conflict-free tree kept nested entries for " + root.name);
          break;
        }
      }
    }
  }
  if (o.pass && trees == 0) o.fail("no tree was checked");
  if (o.pass) {
    o.detail = std::to_string(universes) + " universes, " + std::to_string(trees) +
               " trees (" + std::to_string(conflict_free) + " conflict-free, " +
               std::to_string(oversized) + " over the node cap)";
  }
  return o;
}

Outcome congruence_oracle() {
  Outcome o;
  sugtest::Rng rng(1005);
  std::size_t pairs = 0;
  for (int i = 0; i < 100; ++i) {
    const auto inst = sugtest::random_congruence_instance(rng, 50, 100, 30);
    const bool unmerged = sugtest::chance(rng, 0.5);
    const auto got = sug::congruent_contributions(
        sug::build_dc_graph(inst.graph, inst.contributions, inst.window, {unmerged}));
    if (got != sugtest::brute_force_congruence(inst.graph, inst.contributions, inst.window,
                                                unmerged)) {
      o.fail("instance " + std::to_string(i) + " differs from oracle");
      break;
    }
    pairs += got.size();
  }
  if (o.pass) o.detail = "100 instances, " + std::to_string(pairs) + " pairs";
  return o;
}

Outcome breakage_oracle() {
  Outcome o;
  sugtest::Rng rng(1006);
  for (int i = 0; i < 100; ++i) {
    const auto g = sugtest::random_graph_with_units(rng, 100, 2.0);
    const auto snap = sug::timed_snapshot(g, sug::kTimeMax);
    const auto names = snap.package_names();
    std::set<std::string> subset;
    for (const auto& n : names) {
      if (sugtest::chance(rng, 0.5)) subset.insert(n);
    }
    if (sug::chain_breakage(snap, subset) != sugtest::brute_force_breakage(snap, subset)) {
      o.fail("subset " + std::to_string(i) + " differs from oracle");
      break;
    }
    const std::set<std::string> all(names.begin(), names.end());
    if (sug::chain_breakage(snap, all) != sug::BreakageReport{}) {
      o.fail("full subset reports breakage");
      break;
    }
  }
  if (o.pass) o.detail = "100 subsets of 100-unit graphs";
  return o;
}

std::size_t line_boundary(const std::string& text, std::size_t lines) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < lines; ++i) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) return text.size();
    pos = nl + 1;
  }
  return pos;
}

Outcome replay_properties() {
  Outcome o;
  sugtest::Rng rng(1007);
  for (int i = 0; i < 100; ++i) {
    const std::string text = sugtest::random_log_text(rng, 300);
    std::istringstream a(text), b(text);
    const auto r1 = sug::replay(a);
    const auto r2 = sug::replay(b);
    if (!sug::structurally_equal(r1.graph, r2.graph) || r1.quarantine != r2.quarantine) {
      o.fail("replay of log " + std::to_string(i) + " is not deterministic");
      break;
    }
    const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    const std::size_t cut = line_boundary(text, sugtest::uniform(rng, 0, lines));
    std::istringstream head(text.substr(0, cut)), tail(text.substr(cut));
    auto split = sug::replay(head);
    sug::replay_into(split, tail);
    if (!sug::structurally_equal(split.graph, r1.graph) || split.quarantine != r1.quarantine) {
      o.fail("split replay of log " + std::to_string(i) + " differs");
      break;
    }
  }
  if (o.pass) o.detail = "100 logs";
  return o;
}

Outcome range_resolution() {
  Outcome o;
  sugtest::Rng rng(1008);
  std::size_t cases = 0;
  while (cases < 600 && o.pass) {
    const sugtest::Triple base{static_cast<int>(sugtest::uniform(rng, 0, 3)),
                               static_cast<int>(sugtest::uniform(rng, 0, 3)),
                               static_cast<int>(sugtest::uniform(rng, 0, 3))};
    for (const auto& r : sugtest::ranges_around(base)) {
      const auto range = sug::VersionRange::parse(r.text);
      std::vector<sug::Version> available;
      std::vector<sugtest::Triple> triples;
      const std::size_t n = sugtest::uniform(rng, 1, 15);
      for (std::size_t k = 0; k < n; ++k) {
        const sugtest::Triple t{static_cast<int>(sugtest::uniform(rng, 0, 4)),
                                static_cast<int>(sugtest::uniform(rng, 0, 4)),
                                static_cast<int>(sugtest::uniform(rng, 0, 4))};
        triples.push_back(t);
        available.push_back(sug::parse_version(sugtest::triple_string(t)));
      }
      const bool any = std::any_of(triples.begin(), triples.end(), r.accepts);
      if (!any) continue;
      const sug::Version got = sug::resolve_version_range(range, available);
      const sugtest::Triple g{static_cast<int>(got.major), static_cast<int>(got.minor),
                              static_cast<int>(got.patch)};
      ++cases;
      if (!r.accepts(g) || !range.satisfied_by(got)) {
        o.fail(r.text + " resolved to unsatisfying " + got.to_string());
        break;
      }
      for (const auto& t : triples) {
        if (t > g && r.accepts(t)) {
          o.fail(r.text + " skipped greater " + sugtest::triple_string(t));
          break;
        }
      }
      if (!o.pass) break;
    }
  }
  if (o.pass) o.detail = std::to_string(cases) + " range cases";
  return o;
}

/// Registry dump with `packages` x `releases` units; every unit declares
/// `deps` dependencies on the packages just below it.
void write_scale_dump(const std::filesystem::path& path, std::size_t packages,
                      std::size_t releases, std::size_t deps) {
  std::ofstream out(path, std::ios::binary);
  out << "platform,name,version,released_at,dep_name,dep_requirement\n";
  const sug::Timestamp base = sug::parse_timestamp("2015-01-01");
  std::string row;
  for (std::size_t r = 0; r < releases; ++r) {
    for (std::size_t p = 0; p < packages; ++p) {
      const std::string prefix = "npm,pkg" + std::to_string(p) + ",1." + std::to_string(r) +
                                 ".0," +
                                 std::to_string(base + static_cast<sug::Timestamp>(r) * 1000000 +
                                                static_cast<sug::Timestamp>(p)) +
                                 ",";
      if (p < deps) {
        out << prefix << ",\n";
        continue;
      }
      for (std::size_t d = 1; d <= deps; ++d) {
        out << prefix << "pkg" << (p - d) << ",^1.0.0\n";
      }
    }
  }
}

Outcome scale() {
  Outcome o;
  constexpr std::size_t kPackages = 10000, kReleases = 10, kDeps = 6;
  sugtest::TempDir dir;
  const auto dump = dir / "dump.csv";
  const auto log = dir / "events.ndjson";
  write_scale_dump(dump, kPackages, kReleases, kDeps);

  const auto start = Clock::now();
  sug::IngestSummary summary;
  {
    sug::Ingestor ingestor(log);
    std::ifstream in(dump, std::ios::binary);
    ingestor.add_dump(in, {}, "dump.csv");
    ingestor.finish();
    summary = ingestor.summary();
  }
  const double ingest_s = seconds_since(start);
  const auto replayed = sug::replay(log);
  const auto snap = sug::timed_snapshot(replayed.graph, sug::kTimeMax);
  const double total = seconds_since(start);
  const double rss_mb = static_cast<double>(peak_rss_kb()) / 1024.0;

  if (summary.units < 100000) o.fail(std::to_string(summary.units) + " units ingested");
  if (summary.use_edges < 500000) o.fail(std::to_string(summary.use_edges) + " use edges");
  if (summary.quarantined != 0) o.fail(std::to_string(summary.quarantined) + " quarantined");
  if (snap.units().size() != summary.units || snap.use_edges().size() != summary.use_edges) {
    o.fail("snapshot does not cover the ingested graph");
  }
  if (total >= 60.0) o.fail("took " + std::to_string(total) + " s");
  if (rss_mb >= 2048.0) o.fail("peak RSS " + std::to_string(rss_mb) + " MB");
  if (o.pass) {
    std::ostringstream d;
    d.precision(3);
    d << summary.units << " units, " << summary.use_edges << " use edges, "
      << summary.update_edges << " update edges; ingest " << ingest_s << " s, total "
      << total << " s, peak RSS " << rss_mb << " MB";
    o.detail = d.str();
  }
  return o;
}

Outcome bot_fixture() {
  Outcome o;
  const auto eval = sugtest::evaluate_bot_fixture();
  std::ostringstream d;
  d.precision(3);
  d << "precision " << eval.precision() << ", recall " << eval.recall() << " over "
    << eval.verdicts.size() << " accounts";
  if (eval.verdicts.size() != 30) o.fail("fixture has " + std::to_string(eval.verdicts.size()) + " accounts");
  if (eval.precision() < 0.9 || eval.recall() < 0.8) o.fail(d.str());
  if (o.pass) o.detail = d.str();
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"event axioms and violation rejection", axioms_and_rejection},
      {"snapshot equals filter-and-induce", snapshot_equals_filter},
      {"reference fixtures", reference_fixtures},
      {"flatten preserves resolution, idempotent, hoists", flatten_properties},
      {"congruent contributions match oracle", congruence_oracle},
      {"chain breakage matches oracle", breakage_oracle},
      {"deterministic and incremental replay", replay_properties},
      {"range resolution is maximal and satisfying", range_resolution},
      {"scale: 100k units, 500k use edges", scale},
      {"bot fixture precision and recall", bot_fixture},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failures;
    std::printf("criterion %d: %s  %s (%s)\n", index, o.pass ? "PASS" : "FAIL", name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
