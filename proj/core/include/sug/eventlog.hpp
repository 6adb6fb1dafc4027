#pragma once

// Append-only NDJSON event log. Replaying a log rebuilds the graph it
// describes; events that would violate a graph axiom or reference unknown
// units are quarantined with a reason instead of aborting the replay.
//
// Line schema (schema version 1), fields in this order:
//   {"v":1,"seq":N,"kind":"unit","name":S,"release":S,"time":N}
//   {"v":1,"seq":N,"kind":"use","from":[S,S],"to":[S,S]}
//   {"v":1,"seq":N,"kind":"update","from":[S,S],"to":[S,S]}
//   {"v":1,"seq":N,"kind":"contribution","id":S,"dev":S,"target":[S],
//    "ctype":"pr"|"issue"|"discussion","time":N,"merged":B}
//   {"v":1,"seq":N,"kind":"developer-alias","canonical":S,"alias":S}
// An optional trailing "recorded_at":N carries provenance only.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sug/error.hpp"
#include "sug/graph.hpp"

namespace sug {

struct UnitRef {
  std::string name;
  std::string release;

  friend bool operator==(const UnitRef&, const UnitRef&) = default;
};

struct UnitEvent {
  std::string name;
  std::string release;
  Timestamp time = 0;

  friend bool operator==(const UnitEvent&, const UnitEvent&) = default;
};

struct UseEvent {
  UnitRef from;
  UnitRef to;

  friend bool operator==(const UseEvent&, const UseEvent&) = default;
};

struct UpdateEvent {
  UnitRef from;
  UnitRef to;

  friend bool operator==(const UpdateEvent&, const UpdateEvent&) = default;
};

enum class ContributionType { kPullRequest, kIssue, kDiscussion };

std::string_view to_string(ContributionType type) noexcept;
std::optional<ContributionType> parse_contribution_type(std::string_view s);

struct ContributionEvent {
  std::string id;
  std::string dev;
  std::string target;
  ContributionType ctype = ContributionType::kPullRequest;
  Timestamp time = 0;
  bool merged = false;

  friend bool operator==(const ContributionEvent&,
                         const ContributionEvent&) = default;
};

struct AliasEvent {
  std::string canonical;
  std::string alias;

  friend bool operator==(const AliasEvent&, const AliasEvent&) = default;
};

using EventPayload =
    std::variant<UnitEvent, UseEvent, UpdateEvent, ContributionEvent, AliasEvent>;

std::string_view kind_of(const EventPayload& payload) noexcept;

struct EcosystemEvent {
  std::uint64_t seq = 0;
  std::optional<Timestamp> recorded_at;
  EventPayload payload;

  friend bool operator==(const EcosystemEvent&, const EcosystemEvent&) = default;
};

/// Throws SchemaError when a required string field is empty.
void validate_payload(const EventPayload& payload);

/// One NDJSON line, without the trailing newline.
std::string encode_event(const EcosystemEvent& event);

/// Throws CorruptLog on malformed JSON, SchemaError on a well-formed line that
/// does not match the schema.
EcosystemEvent decode_event(std::string_view line);

class EventLog {
 public:
  /// Opens or creates the log. An existing log is scanned for its last seq.
  explicit EventLog(std::filesystem::path path);

  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;
  EventLog(EventLog&&) = default;
  EventLog& operator=(EventLog&&) = default;

  /// Appends one event and flushes; returns the assigned seq.
  std::uint64_t append(const EventPayload& payload,
                       std::optional<Timestamp> recorded_at = std::nullopt);

  /// Appends all payloads with a single flush; returns the last assigned seq.
  std::uint64_t append_all(std::span<const EventPayload> payloads);

  std::uint64_t last_seq() const noexcept { return last_seq_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  void write_line(const EventPayload& payload,
                  std::optional<Timestamp> recorded_at);
  void flush();

  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t last_seq_ = 0;
};

struct QuarantineEntry {
  std::uint64_t seq = 0;
  std::uint64_t line = 0;
  std::string kind;
  ErrorCode code = ErrorCode::kSchemaError;
  std::string message;

  friend bool operator==(const QuarantineEntry&, const QuarantineEntry&) = default;
};

std::string encode_quarantine(const QuarantineEntry& entry);

struct ReplayResult {
  Sug graph;
  std::vector<QuarantineEntry> quarantine;
  std::vector<ContributionEvent> contributions;
  std::vector<AliasEvent> aliases;
  std::uint64_t last_seq = 0;
  std::uint64_t lines = 0;
};

/// Applies one decoded event to a replay state, quarantining it on failure.
void apply_event(ReplayResult& state, const EcosystemEvent& event,
                 std::uint64_t line);

/// Streams `in` into an existing replay state.
void replay_into(ReplayResult& state, std::istream& in);
void replay_into(ReplayResult& state, const std::filesystem::path& path);

ReplayResult replay(std::istream& in, SugOptions options = {});
ReplayResult replay(const std::filesystem::path& path, SugOptions options = {});

/// The graph as of release time `t` (not recording time).
Sug replay_until(const std::filesystem::path& path, Timestamp t,
                 SugOptions options = {});

}  // namespace sug
