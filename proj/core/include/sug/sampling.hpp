#pragma once

// Ecosystem sampling: ranking packages by importance, measuring how much of
// the dependency structure a package subset loses, snapshot series over time,
// and per-package release activity.

#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sug/contrib.hpp"
#include "sug/graph.hpp"

namespace sug {

enum class SampleMetric { kDependents, kContributors, kActivity, kPopularity };

std::string_view to_string(SampleMetric metric);
/// Throws InvalidArgument for unknown names.
SampleMetric parse_sample_metric(std::string_view text);

struct SampleSpec {
  SampleMetric metric = SampleMetric::kDependents;
  std::size_t k = 1;
};

/// Optional inputs some metrics need.
struct SampleData {
  /// Identity-merged contributions; required by kContributors.
  std::optional<std::span<const DcContribution>> contributions;
  /// External popularity scores by package; required by kPopularity.
  const std::map<std::string, double, std::less<>>* popularity = nullptr;
};

struct RankedPackage {
  std::string name;
  double score = 0.0;

  friend bool operator==(const RankedPackage&, const RankedPackage&) = default;
};

/// Every package in the snapshot with its metric value, best first; ties by
/// name ascending.
///   dependents:   distinct other packages using any release of it
///   contributors: distinct developers contributing up to the snapshot time
///   activity:     releases in the snapshot
///   popularity:   external score, 0 when absent from the table
/// Throws InsufficientData when the metric's input is missing.
std::vector<RankedPackage> rank_packages(const TimedSnapshot& snapshot,
                                         SampleMetric metric,
                                         const SampleData& data = {});

/// First min(k, package count) names of rank_packages. Throws
/// InvalidArgument when k is 0.
std::vector<RankedPackage> sample_top_k(const TimedSnapshot& snapshot,
                                        const SampleSpec& spec,
                                        const SampleData& data = {});

/// CSV with header "package,popularity".
std::map<std::string, double, std::less<>> parse_popularity_csv(std::istream& in);

struct BreakageReport {
  /// Release-level use-edges with exactly one endpoint in the subset.
  std::size_t dangling_use_edges = 0;
  /// Ordered package pairs (a, b), a != b, with b reachable from a over the
  /// package projection of the snapshot but not within the subset alone.
  std::size_t broken_transitive_paths = 0;
  /// Excluded packages that have an update chain and at least one release
  /// in a use relation with a sampled release.
  std::size_t severed_update_chains = 0;

  friend bool operator==(const BreakageReport&, const BreakageReport&) = default;
};

/// Throws UnknownPackage when the subset names a package missing from the
/// snapshot.
BreakageReport chain_breakage(const TimedSnapshot& snapshot,
                              const std::set<std::string>& subset);

/// Snapshots at t0, t0 + step, ... up to and including t1. Throws
/// InvalidRange unless t0 <= t1 and step > 0.
std::vector<TimedSnapshot> snapshot_series(const Sug& g, Timestamp t0,
                                           Timestamp t1, Timestamp step);

struct ActivityOptions {
  /// Evaluation instant; defaults to the graph's latest release time.
  std::optional<Timestamp> as_of;
  /// Minimum dependents for the dormant-but-depended-upon flag.
  std::size_t dependent_threshold = 1;
};

struct ActivityReport {
  std::string package;
  Timestamp as_of = 0;
  Timestamp window = 0;
  std::size_t releases_in_window = 0;
  std::optional<Timestamp> last_release_time;
  std::optional<Timestamp> seconds_since_last_release;
  std::size_t dependent_count = 0;
  /// No release inside (as_of - window, as_of] yet still used by others.
  /// Not a failure verdict.
  bool dormant_but_depended_upon = false;
};

/// Throws UnknownPackage for packages absent from the graph and
/// InvalidRange for non-positive windows.
ActivityReport activity_report(const Sug& g, std::string_view package,
                               Timestamp window, ActivityOptions options = {});

std::string ranking_to_csv(std::span<const RankedPackage> ranking);
std::string ranking_to_json(SampleMetric metric,
                            std::span<const RankedPackage> ranking);
std::string breakage_to_csv(const BreakageReport& report);
std::string breakage_to_json(const BreakageReport& report);
std::string activity_to_csv(std::span<const ActivityReport> reports);
std::string activity_to_json(std::span<const ActivityReport> reports);

}  // namespace sug
