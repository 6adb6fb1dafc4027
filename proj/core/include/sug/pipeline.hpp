#pragma once

// Ingestion into an event log. Every candidate event is validated against the
// graph replayed from the log so far; valid events are appended, invalid ones
// are written to "<log>.quarantine" together with parse-level rejects.
//
// Units are submitted first, then declared dependencies (resolved against all
// known releases), then update chains derived from release times, so inputs
// may reference packages that appear later in the same batch.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "sug/eventlog.hpp"
#include "sug/ingest.hpp"

namespace sug {

struct IngestSummary {
  std::size_t units = 0;
  std::size_t use_edges = 0;
  std::size_t update_edges = 0;
  std::size_t contributions = 0;
  std::size_t aliases = 0;
  std::size_t quarantined = 0;

  friend bool operator==(const IngestSummary&, const IngestSummary&) = default;
};

/// "2 units, 1 use edge, 0 quarantined"; update, contribution and alias
/// counts appear only when non-zero.
std::string format_summary(const IngestSummary& summary);

class Ingestor {
 public:
  /// Replays the existing log (if any). Throws CorruptLog on a garbled log.
  explicit Ingestor(std::filesystem::path log, SugOptions options = {});
  ~Ingestor();

  Ingestor(const Ingestor&) = delete;
  Ingestor& operator=(const Ingestor&) = delete;

  /// Registry dump rows; dependencies are queued until finish().
  void add_dump(std::istream& in, const DumpMapping& mapping,
                const std::string& source);
  /// A single manifest document. `fallback_time` is used when the manifest
  /// carries no release time.
  void add_manifest(std::string_view bytes, const std::string& source,
                    std::optional<Timestamp> fallback_time = std::nullopt,
                    ManifestOptions options = {});
  /// Contribution export (CSV or NDJSON records).
  void add_contributions(std::istream& in, const std::string& source);
  /// Developer alias links, CSV with header "canonical,alias".
  void add_aliases(std::istream& in, const std::string& source);
  /// One explicit event, validated and appended immediately.
  bool submit(const EventPayload& payload, const std::string& source,
              std::uint64_t record);

  /// Resolves queued dependencies, derives update chains and flushes the
  /// log and quarantine file.
  void finish();

  const IngestSummary& summary() const noexcept { return summary_; }
  const Sug& graph() const noexcept { return state_.graph; }
  const std::filesystem::path& quarantine_path() const noexcept {
    return quarantine_path_;
  }

 private:
  void reject(std::string_view kind, ErrorCode code, const std::string& message,
              std::uint64_t record);
  void flush_pending();

  std::filesystem::path log_path_;
  std::filesystem::path quarantine_path_;
  ReplayResult state_;
  EventLog log_;
  std::vector<EventPayload> pending_;
  std::ofstream quarantine_;
  std::vector<std::pair<DeclaredDependency, std::size_t>> declared_;
  std::vector<std::string> sources_;
  IngestSummary summary_;
  bool finished_ = false;
};

}  // namespace sug
