#pragma once

// Adapters from raw ecosystem data (manifests, registry dumps, contribution
// exports, the bundled registry table) to ecosystem events.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sug/eventlog.hpp"
#include "sug/graph.hpp"
#include "sug/semver.hpp"

namespace sug {

/// Accepts epoch seconds or ISO-8601 ("2020-01-02", "2020-01-02T03:04:05Z",
/// fractional seconds and +hh:mm offsets allowed). Throws InvalidTimestamp.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

/// "90d", "12w", "36h", "15m", "30s" or plain seconds. Throws InvalidArgument.
Timestamp parse_duration(std::string_view text);

// ---------------------------------------------------------------------------
// Manifests

struct Dependency {
  std::string name;
  /// Constraint exactly as declared.
  std::string constraint;
  /// Parsed range; empty when the constraint is not a semver range (tags,
  /// URLs, opaque releases), in which case matching is by exact string.
  std::optional<VersionRange> range;

  friend bool operator==(const Dependency&, const Dependency&) = default;
};

Dependency make_dependency(std::string name, std::string constraint);

struct Manifest {
  std::string name;
  std::string release;
  std::vector<Dependency> dependencies;
  std::optional<Timestamp> time;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

struct ManifestOptions {
  bool include_dev = false;
  bool include_peer = false;
  bool include_optional = false;
};

/// Parses a package.json-like document. Throws ParseError on malformed JSON or
/// duplicate keys, MissingField when name or version is absent.
Manifest parse_manifest(std::string_view bytes, ManifestOptions options = {});

/// Serializes back to a package.json-like document; parse_manifest inverts it.
std::string serialize_manifest(const Manifest& manifest);

// ---------------------------------------------------------------------------
// CSV

/// RFC 4180 reader: quoted fields may contain separators, quotes ("") and
/// newlines. Holds one record at a time.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Returns false at end of input. Throws CsvError on an unterminated quote.
  bool next(std::vector<std::string>& fields);

  /// 1-based number of the last record returned.
  std::uint64_t record_number() const noexcept { return record_; }

 private:
  std::istream& in_;
  std::uint64_t record_ = 0;
};

std::string csv_escape(std::string_view field);

// ---------------------------------------------------------------------------
// Registry dumps

/// Column names for each role in a registry dump header.
struct DumpMapping {
  std::string platform = "platform";
  std::string name = "name";
  std::string version = "version";
  std::string released_at = "released_at";
  std::string dep_name = "dep_name";
  std::string dep_requirement = "dep_requirement";

  /// "role=column,role=column"; unspecified roles keep their default.
  static DumpMapping parse(std::string_view spec);
};

struct DumpRow {
  std::uint64_t record = 0;
  std::string platform;
  std::string name;
  std::string version;
  std::string released_at;
  std::string dep_name;
  std::string dep_requirement;
};

/// Streams a dump one record at a time; memory is bounded by the record size.
class RegistryDumpReader {
 public:
  /// Reads and validates the header. Throws CsvError.
  RegistryDumpReader(std::istream& in, const DumpMapping& mapping);

  bool next(DumpRow& row);

 private:
  CsvReader csv_;
  std::vector<std::string> fields_;
  std::size_t width_ = 0;
  std::size_t platform_ = 0, name_ = 0, version_ = 0, released_ = 0,
              dep_name_ = 0, dep_req_ = 0;
  bool has_platform_ = false;
};

struct IngestIssue {
  std::uint64_t record = 0;
  ErrorCode code = ErrorCode::kParseError;
  std::string message;
};

/// Unit events, then declared dependencies still to be resolved.
struct DeclaredDependency {
  UnitRef from;
  Timestamp from_time = 0;
  std::string dep_name;
  std::string requirement;
  std::uint64_t record = 0;
};

using EventSink = std::function<void(const EventPayload&)>;
using IssueSink = std::function<void(const IngestIssue&)>;

/// Streams unit events from a dump (one per distinct consecutive
/// name/version group) and reports each dependency row to `on_dependency`.
/// Rows with unparsable timestamps are reported to `on_issue`.
void parse_registry_dump(std::istream& in, const DumpMapping& mapping,
                         const EventSink& on_unit,
                         const std::function<void(DeclaredDependency)>& on_dependency,
                         const IssueSink& on_issue);

/// Release index used to turn declared requirements into concrete use-edges.
class ReleaseIndex {
 public:
  void add(const std::string& name, const std::string& release, Timestamp time);

  /// The highest release of `name` satisfying `requirement`, preferring
  /// releases published no later than `as_of`. Non-semver releases only
  /// match an identical requirement string. Throws NoMatchingVersion.
  std::string resolve(const std::string& name, const std::string& requirement,
                      Timestamp as_of) const;

  /// Update chains implied by release times: consecutive releases of each
  /// name with strictly increasing time.
  std::vector<UpdateEvent> derived_updates() const;

  bool contains(const std::string& name) const;

 private:
  struct Release {
    std::string label;
    Timestamp time = 0;
    std::optional<Version> version;
  };
  std::unordered_map<std::string, std::vector<Release>> releases_;
  std::vector<std::string> order_;
};

// ---------------------------------------------------------------------------
// Contribution exports

struct ContributionRecord {
  std::string id;
  std::string author;
  std::string email;
  std::string target;
  ContributionType type = ContributionType::kPullRequest;
  Timestamp time = 0;
  bool merged = false;
  std::string title;

  ContributionEvent to_event() const;
};

/// Parses NDJSON records {"id","author","email"?,"target","type","time",
/// "merged"?,"title"?}. Invalid records are reported to `on_issue`.
std::vector<ContributionRecord> parse_contribution_records(
    std::istream& in, const IssueSink& on_issue);

/// Same records, as ecosystem events.
void parse_contribution_events(std::istream& in, const EventSink& on_event,
                               const IssueSink& on_issue);

// ---------------------------------------------------------------------------
// Registry table

enum class TreeStyle { kFlat, kNested };

std::string_view to_string(TreeStyle style) noexcept;

struct RegistryInfo {
  std::string ecosystem;
  std::string language;
  std::string tiobe_rank;
  std::string environment;
  TreeStyle tree_style = TreeStyle::kFlat;
  /// Tree style as tabulated, e.g. "Nested (v2)".
  std::string tree_label;
  std::string archive_url;
};

/// The bundled table of 13 package managers as CSV text.
std::string_view bundled_registry_csv() noexcept;

std::vector<RegistryInfo> parse_registry_table(std::istream& in);
std::vector<RegistryInfo> load_registry_table(const std::filesystem::path& path);
std::vector<RegistryInfo> load_registry_table();

/// Case-insensitive lookup by ecosystem name.
std::optional<RegistryInfo> lookup_registry(const std::vector<RegistryInfo>& table,
                                            std::string_view ecosystem);

}  // namespace sug
