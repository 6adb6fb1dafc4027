#pragma once

// Dependency-contribution analysis: developer identity merging, bot
// filtering, analysis windows, and detection of congruent contributions
// (one developer contributing to both a client and a library it uses within
// the same window).

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sug/eventlog.hpp"
#include "sug/graph.hpp"
#include "sug/ingest.hpp"

namespace sug {

struct RawAuthor {
  std::string name;
  std::string email;
};

struct Developer {
  std::string canonical_id;
  /// Author identities ("Name <email>", or the bare name or email when the
  /// other is missing) plus the canonical id.
  std::set<std::string> aliases;
  /// Case-folded emails.
  std::set<std::string> emails;
  std::set<std::string> names;
  bool is_bot = false;
  double bot_score = 0.0;
};

/// Identity string of a raw author as it appears in Developer::aliases.
std::string author_alias(const RawAuthor& author);

/// Maps identifiers to their developer's canonical id.
class IdentityMap {
 public:
  IdentityMap() = default;
  explicit IdentityMap(const std::vector<Developer>& developers);

  std::string canonical(const RawAuthor& author) const;

  /// Looks up an alias, a case-folded email, or a name shared by exactly one
  /// developer. Unknown identifiers map to themselves.
  std::string canonical(std::string_view identifier) const;

 private:
  std::map<std::string, std::string, std::less<>> by_alias_;
  std::map<std::string, std::string, std::less<>> by_email_;
  std::map<std::string, std::string, std::less<>> by_name_;
};

/// Partitions raw authors into developers. Authors sharing a case-folded
/// email are merged. An alias link (canonical, alias) matches authors by
/// identity string, name or email, merges them with the canonical side and
/// names that developer's canonical id. Email evidence never merges two
/// developers with different explicit canonical ids; alias links that would
/// do so throw ConflictingAlias. Without an explicit canonical id the
/// lexicographically smallest alias is canonical. Output is sorted by
/// canonical id.
std::vector<Developer> merge_identities(std::span<const RawAuthor> authors,
                                        std::span<const AliasEvent> aliases);

struct BotVerdict {
  bool is_bot = false;
  double score = 0.0;
};

struct BotSignals {
  double name = 0.0;
  double repetitiveness = 0.0;
  double regularity = 0.0;
};

inline constexpr double kDefaultBotThreshold = 0.8;

/// Individual heuristic signals, each in [0, 1].
BotSignals bot_signals(const Developer& dev,
                       std::span<const ContributionRecord> contributions);

/// Weighted combination of bot_signals: 0.8 name + 0.45 repetitiveness +
/// 0.45 regularity, clamped to [0, 1]; bot when score >= threshold.
BotVerdict classify_bot(const Developer& dev,
                        std::span<const ContributionRecord> contributions,
                        double threshold = kDefaultBotThreshold);

/// Analysis window (start, end].
struct Window {
  Timestamp start = 0;
  Timestamp end = 0;

  bool contains(Timestamp t) const noexcept { return start < t && t <= end; }
  friend bool operator==(const Window&, const Window&) = default;
};

inline constexpr Timestamp kDefaultWindowWidth = 90 * 86400;

/// Consecutive windows tiling (start, end]; the last may be shorter.
/// Throws InvalidRange unless start < end and width > 0.
std::vector<Window> window_partition(Timestamp start, Timestamp end,
                                     Timestamp width = kDefaultWindowWidth);

struct PackageEdge {
  std::string client;
  std::string library;

  friend auto operator<=>(const PackageEdge&, const PackageEdge&) = default;
};

/// Package-level projection of a snapshot's use-edges, sorted, without
/// self-edges.
std::vector<PackageEdge> package_dependencies(const TimedSnapshot& snapshot);

struct DcContribution {
  std::string id;
  std::string developer;
  std::string package;
  ContributionType type = ContributionType::kPullRequest;
  Timestamp time = 0;
  bool merged = false;
};

struct DcGraph {
  Window window;
  std::vector<PackageEdge> dependency_edges;
  /// Distinct (developer, package) pairs, sorted.
  std::vector<std::pair<std::string, std::string>> contribution_edges;
  /// Contributions inside the window, sorted by (time, id).
  std::vector<DcContribution> contributions;
};

struct DcOptions {
  /// Closed, unmerged pull requests count as contributions.
  bool include_unmerged_prs = false;
};

/// Contributions are expected identity-merged (developer = canonical id) and
/// bot-filtered.
DcGraph build_dc_graph(const Sug& sug, std::span<const DcContribution> contributions,
                       const Window& window, DcOptions options = {});

struct CongruentPair {
  std::string developer;
  std::string client;
  std::string library;
  std::string client_contribution;
  std::string library_contribution;

  friend bool operator==(const CongruentPair&, const CongruentPair&) = default;
};

/// One pair per (developer, dependency edge) where the developer contributed
/// to both endpoints in the window; the earliest contribution on each side
/// (by time, then id) is reported. Sorted by developer, client, library.
std::vector<CongruentPair> congruent_contributions(const DcGraph& graph);

/// Header plus one CSV row per pair.
std::string congruence_csv_header();
std::string congruence_csv_row(const Window& window, const CongruentPair& pair);

}  // namespace sug
