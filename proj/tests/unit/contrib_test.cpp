#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>

#include "fixture_eval.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "sug/contrib.hpp"
#include "sug/eventlog.hpp"

namespace {

using sug::AliasEvent;
using sug::Developer;
using sug::RawAuthor;

const Developer* owner(const std::vector<Developer>& devs, const std::string& alias) {
  for (const auto& d : devs) {
    if (d.aliases.contains(alias)) return &d;
  }
  return nullptr;
}

sug::Sug load_dc_graph() {
  auto r = sug::replay(sugtest::fixture_path("dc_graph.ndjson"));
  return std::move(r.graph);
}

TEST(Identity, AuthorAlias) {
  EXPECT_EQ(sug::author_alias({"Jane", "Jane@X.com"}), "Jane <jane@x.com>");
  EXPECT_EQ(sug::author_alias({"Jane", ""}), "Jane");
  EXPECT_EQ(sug::author_alias({"", "Jane@X.com"}), "jane@x.com");
}

TEST(Identity, SharedEmailMerges) {
  const std::vector<RawAuthor> authors{{"Jane Doe", "jane@x.com"}, {"J. Doe", "JANE@x.com"}};
  const auto devs = sug::merge_identities(authors, {});
  ASSERT_EQ(devs.size(), 1u);
  EXPECT_EQ(devs[0].canonical_id, "J. Doe <jane@x.com>");
  EXPECT_EQ(devs[0].emails, (std::set<std::string>{"jane@x.com"}));
  EXPECT_EQ(devs[0].names, (std::set<std::string>{"J. Doe", "Jane Doe"}));
}

TEST(Identity, SameNameDifferentEmailStaysSeparate) {
  const std::vector<RawAuthor> authors{{"John Smith", "john@a.org"},
                                       {"John Smith", "jsmith@b.org"}};
  EXPECT_EQ(sug::merge_identities(authors, {}).size(), 2u);
}

TEST(Identity, ExplicitCanonicalWins) {
  const std::vector<RawAuthor> authors{{"Jane Doe", "jane@x.com"}, {"jdoe", ""}};
  const std::vector<AliasEvent> links{{"jane", "jane@x.com"}, {"jane", "jdoe"}};
  const auto devs = sug::merge_identities(authors, links);
  ASSERT_EQ(devs.size(), 1u);
  EXPECT_EQ(devs[0].canonical_id, "jane");
  EXPECT_TRUE(devs[0].aliases.contains("jdoe"));
  EXPECT_TRUE(devs[0].aliases.contains("jane"));
}

TEST(Identity, ConflictingAliasThrows) {
  const std::vector<RawAuthor> authors{{"Pat", "pat@x.com"}};
  const std::vector<AliasEvent> links{{"pat-a", "pat@x.com"}, {"pat-b", "Pat"}};
  try {
    sug::merge_identities(authors, links);
    FAIL();
  } catch (const sug::Error& e) {
    EXPECT_EQ(e.code(), sug::ErrorCode::kConflictingAlias);
  }
}

TEST(Identity, ExplicitIdsBlockEmailMerge) {
  const std::vector<RawAuthor> authors{{"A", "shared@x.com"}, {"B", "shared@x.com"}};
  const std::vector<AliasEvent> links{{"alpha", "A <shared@x.com>"},
                                      {"beta", "B <shared@x.com>"}};
  const auto devs = sug::merge_identities(authors, links);
  ASSERT_EQ(devs.size(), 2u);
  EXPECT_EQ(devs[0].canonical_id, "alpha");
  EXPECT_EQ(devs[1].canonical_id, "beta");
}

TEST(Identity, MapLookups) {
  const std::vector<RawAuthor> authors{{"Jane Doe", "jane@x.com"},
                                       {"John Smith", "john@a.org"},
                                       {"John Smith", "jsmith@b.org"}};
  const std::vector<AliasEvent> links{{"jane", "Jane Doe"}};
  const sug::IdentityMap ids(sug::merge_identities(authors, links));
  EXPECT_EQ(ids.canonical(RawAuthor{"Jane Doe", "JANE@x.com"}), "jane");
  EXPECT_EQ(ids.canonical("Jane Doe"), "jane");
  EXPECT_EQ(ids.canonical("JANE@X.COM"), "jane");
  EXPECT_EQ(ids.canonical("jsmith@b.org"), "John Smith <jsmith@b.org>");
  EXPECT_EQ(ids.canonical("John Smith"), "John Smith");
  EXPECT_EQ(ids.canonical("stranger"), "stranger");
}

TEST(Identity, FixturePartitionMatchesLabels) {
  const auto labelled = sugtest::load_identity_authors();
  ASSERT_EQ(labelled.size(), 30u);
  std::vector<RawAuthor> authors;
  for (const auto& l : labelled) authors.push_back(l.author);
  const auto devs = sug::merge_identities(authors, sugtest::load_identity_aliases());
  for (const auto& l : labelled) {
    const Developer* d = owner(devs, sug::author_alias(l.author));
    ASSERT_NE(d, nullptr) << sug::author_alias(l.author);
    EXPECT_EQ(d->canonical_id, l.expected_canonical) << sug::author_alias(l.author);
  }
  std::set<std::string> labels;
  for (const auto& l : labelled) labels.insert(l.expected_canonical);
  EXPECT_EQ(devs.size(), labels.size());
}

TEST(Identity, OrderInvariant) {
  const auto labelled = sugtest::load_identity_authors();
  std::vector<RawAuthor> authors;
  for (const auto& l : labelled) authors.push_back(l.author);
  const auto aliases = sugtest::load_identity_aliases();
  const auto reference = sug::merge_identities(authors, aliases);
  sugtest::Rng rng(51);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(authors.begin(), authors.end(), rng);
    const auto devs = sug::merge_identities(authors, aliases);
    ASSERT_EQ(devs.size(), reference.size());
    for (std::size_t k = 0; k < devs.size(); ++k) {
      EXPECT_EQ(devs[k].canonical_id, reference[k].canonical_id);
      EXPECT_EQ(devs[k].aliases, reference[k].aliases);
    }
  }
}

Developer named(const std::string& name) {
  Developer d;
  d.canonical_id = name;
  d.names = {name};
  d.aliases = {name};
  return d;
}

TEST(Bots, NameSignal) {
  for (const char* bot : {"dependabot[bot]", "renovate", "snyk-bot", "deploy_bot", "ci.bot",
                          "Release Bot", "greenkeeper"}) {
    EXPECT_EQ(sug::bot_signals(named(bot), {}).name, 1.0) << bot;
    EXPECT_TRUE(sug::classify_bot(named(bot), {}).is_bot) << bot;
  }
  EXPECT_EQ(sug::bot_signals(named("talbot"), {}).name, 0.5);
  EXPECT_FALSE(sug::classify_bot(named("talbot"), {}).is_bot);
  EXPECT_EQ(sug::bot_signals(named("alice"), {}).name, 0.0);
}

TEST(Bots, BehaviourSignals) {
  std::vector<sug::ContributionRecord> templated;
  for (int i = 0; i < 10; ++i) {
    sug::ContributionRecord r;
    r.id = std::to_string(i);
    r.author = "release-automation";
    r.time = 1000 + i * 86400;
    r.title = "Bump version to 1." + std::to_string(i) + ".0";
    templated.push_back(r);
  }
  const auto s = sug::bot_signals(named("release-automation"), templated);
  EXPECT_DOUBLE_EQ(s.repetitiveness, 1.0);
  EXPECT_DOUBLE_EQ(s.regularity, 1.0);
  EXPECT_TRUE(sug::classify_bot(named("release-automation"), templated).is_bot);

  std::vector<sug::ContributionRecord> human;
  const char* titles[] = {"Fix crash on empty input", "Document the cache flag",
                          "Refactor tokenizer state", "Add Windows CI job"};
  const sug::Timestamp times[] = {0, 400, 90000, 91000};
  for (int i = 0; i < 4; ++i) {
    sug::ContributionRecord r;
    r.title = titles[i];
    r.time = times[i];
    human.push_back(r);
  }
  const auto h = sug::bot_signals(named("alice"), human);
  EXPECT_EQ(h.repetitiveness, 0.0);
  EXPECT_LT(h.regularity, 0.5);
  EXPECT_FALSE(sug::classify_bot(named("alice"), human).is_bot);
}

TEST(Bots, ThresholdIsMonotone) {
  double previous_flagged = 1e9;
  for (double threshold : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    const auto eval = sugtest::evaluate_bot_fixture(threshold);
    const double flagged = static_cast<double>(eval.true_positive + eval.false_positive);
    EXPECT_LE(flagged, previous_flagged);
    previous_flagged = flagged;
  }
}

TEST(Bots, FixtureBaseline) {
  const auto eval = sugtest::evaluate_bot_fixture();
  EXPECT_EQ(eval.verdicts.size(), 30u);
  EXPECT_GE(eval.precision(), 0.9);
  EXPECT_GE(eval.recall(), 0.8);
  EXPECT_FALSE(eval.verdicts.at("talbot"));
  EXPECT_FALSE(eval.verdicts.at("abbot-lee"));
  EXPECT_TRUE(eval.verdicts.at("dependabot[bot]"));
}

TEST(Windows, PartitionTiles) {
  const auto w = sug::window_partition(0, 250, 100);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0], (sug::Window{0, 100}));
  EXPECT_EQ(w[1], (sug::Window{100, 200}));
  EXPECT_EQ(w[2], (sug::Window{200, 250}));
  EXPECT_FALSE(w[0].contains(0));
  EXPECT_TRUE(w[0].contains(100));
  EXPECT_FALSE(w[1].contains(100));
  EXPECT_THROW(sug::window_partition(5, 5, 10), sug::Error);
  EXPECT_THROW(sug::window_partition(0, 5, 0), sug::Error);
}

TEST(Windows, EveryInstantInExactlyOneWindow) {
  sugtest::Rng rng(52);
  for (int i = 0; i < 50; ++i) {
    const auto start = static_cast<sug::Timestamp>(sugtest::uniform(rng, 0, 1000));
    const auto end = start + static_cast<sug::Timestamp>(sugtest::uniform(rng, 1, 1000));
    const auto width = static_cast<sug::Timestamp>(sugtest::uniform(rng, 1, 300));
    const auto windows = sug::window_partition(start, end, width);
    for (sug::Timestamp t = start + 1; t <= end; ++t) {
      std::size_t hits = 0;
      for (const auto& w : windows) hits += w.contains(t);
      ASSERT_EQ(hits, 1u);
    }
  }
}

TEST(DcGraph, FixtureHasTwoCongruentPairs) {
  const sug::Sug g = load_dc_graph();
  const auto contributions = sugtest::load_dc_contributions("dc_contributions.ndjson");
  const sug::Window window{sug::parse_timestamp("2021-01-31"), sug::parse_timestamp("2021-03-01")};
  const auto dc = sug::build_dc_graph(g, contributions, window);
  EXPECT_EQ(dc.dependency_edges.size(), 3u);
  EXPECT_EQ(dc.contribution_edges.size(), 4u);
  const auto pairs = sug::congruent_contributions(dc);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0], (sug::CongruentPair{"dev_x <x@example.org>", "lib_i", "lib_k", "c3", "c4"}));
  EXPECT_EQ(pairs[1], (sug::CongruentPair{"dev_y <y@example.org>", "lib_i", "lib_j", "c1", "c2"}));
}

TEST(DcGraph, UnmergedPullRequestsExcludedByDefault) {
  sug::Sug g;
  const auto a = g.add_unit("a", "1.0.0", 0);
  const auto b = g.add_unit("b", "1.0.0", 0);
  g.add_use_edge(a, b);
  const std::vector<sug::DcContribution> cs{
      {"p1", "dev", "a", sug::ContributionType::kPullRequest, 10, false},
      {"p2", "dev", "b", sug::ContributionType::kDiscussion, 20, false}};
  const sug::Window w{0, 100};
  EXPECT_TRUE(sug::congruent_contributions(sug::build_dc_graph(g, cs, w)).empty());
  EXPECT_EQ(sug::congruent_contributions(sug::build_dc_graph(g, cs, w, {true})).size(), 1u);
}

TEST(DcGraph, CsvRow) {
  const sug::CongruentPair p{"dev, jr", "a", "b", "c1", "c2"};
  EXPECT_EQ(sug::congruence_csv_row({0, 10}, p), "1970-01-01T00:00:00Z,\"dev, jr\",a,b,c1,c2\n");
  EXPECT_EQ(sug::congruence_csv_header(),
            "window_start,developer,client,library,client_contribution,library_contribution\n");
}

TEST(DcGraph, MatchesBruteForce) {
  sugtest::Rng rng(53);
  for (int i = 0; i < 60; ++i) {
    const auto inst = sugtest::random_congruence_instance(rng, 20, 80, 15);
    const bool unmerged = sugtest::chance(rng, 0.5);
    const auto got = sug::congruent_contributions(
        sug::build_dc_graph(inst.graph, inst.contributions, inst.window, {unmerged}));
    EXPECT_EQ(got, sugtest::brute_force_congruence(inst.graph, inst.contributions, inst.window,
                                                   unmerged));
  }
}

TEST(DcGraph, PermutationInvariant) {
  sugtest::Rng rng(54);
  for (int i = 0; i < 30; ++i) {
    auto inst = sugtest::random_congruence_instance(rng, 10, 60, 10);
    const auto before =
        sug::congruent_contributions(sug::build_dc_graph(inst.graph, inst.contributions, inst.window));
    std::shuffle(inst.contributions.begin(), inst.contributions.end(), rng);
    EXPECT_EQ(before, sug::congruent_contributions(
                          sug::build_dc_graph(inst.graph, inst.contributions, inst.window)));
  }
}

TEST(DcGraph, FilteringADeveloperOnlyRemovesPairs) {
  sugtest::Rng rng(55);
  for (int i = 0; i < 30; ++i) {
    const auto inst = sugtest::random_congruence_instance(rng, 8, 60, 10);
    const auto all =
        sug::congruent_contributions(sug::build_dc_graph(inst.graph, inst.contributions, inst.window));
    if (inst.contributions.empty()) continue;
    const std::string dropped = inst.contributions.front().developer;
    std::vector<sug::DcContribution> kept;
    for (const auto& c : inst.contributions) {
      if (c.developer != dropped) kept.push_back(c);
    }
    const auto filtered =
        sug::congruent_contributions(sug::build_dc_graph(inst.graph, kept, inst.window));
    for (const auto& p : filtered) {
      EXPECT_NE(p.developer, dropped);
      EXPECT_NE(std::find(all.begin(), all.end(), p), all.end());
    }
    std::size_t others = 0;
    for (const auto& p : all) others += p.developer != dropped;
    EXPECT_EQ(filtered.size(), others);
  }
}

TEST(DcGraph, BotFilteringRemovesBotPairs) {
  const sug::Sug g = load_dc_graph();
  auto contributions = sugtest::load_dc_contributions("dc_contributions_with_bot.ndjson");
  const sug::Window window{sug::parse_timestamp("2021-01-31"), sug::parse_timestamp("2021-03-01")};
  const auto with_bot = sug::congruent_contributions(sug::build_dc_graph(g, contributions, window));
  EXPECT_EQ(with_bot.size(), 3u);
  std::erase_if(contributions, [](const auto& c) { return c.developer.find("[bot]") != std::string::npos; });
  EXPECT_EQ(sug::congruent_contributions(sug::build_dc_graph(g, contributions, window)).size(), 2u);
}

}  // namespace
