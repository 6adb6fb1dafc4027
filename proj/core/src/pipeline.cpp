#include "sug/pipeline.hpp"

#include "sug/error.hpp"

namespace sug {

namespace {

constexpr std::size_t kFlushEvery = 16384;

ReplayResult load(const std::filesystem::path& log, SugOptions options) {
  ReplayResult state{Sug(options), {}, {}, {}, 0, 0};
  if (std::filesystem::exists(log)) replay_into(state, log);
  // Quarantines already recorded in the log belong to earlier runs.
  state.quarantine.clear();
  return state;
}

std::string plural(std::size_t n, std::string_view noun) {
  std::string out = std::to_string(n) + " " + std::string(noun);
  if (n != 1) out += "s";
  return out;
}

}  // namespace

std::string format_summary(const IngestSummary& s) {
  std::string out = plural(s.units, "unit") + ", " + plural(s.use_edges, "use edge");
  if (s.update_edges) out += ", " + plural(s.update_edges, "update edge");
  if (s.contributions) out += ", " + plural(s.contributions, "contribution");
  if (s.aliases) {
    out += ", " + std::to_string(s.aliases) + (s.aliases == 1 ? " alias" : " aliases");
  }
  out += ", " + std::to_string(s.quarantined) + " quarantined";
  return out;
}

Ingestor::Ingestor(std::filesystem::path log, SugOptions options)
    : log_path_(std::move(log)),
      quarantine_path_(log_path_.string() + ".quarantine"),
      state_(load(log_path_, options)),
      log_(log_path_) {}

Ingestor::~Ingestor() {
  try {
    if (!finished_) finish();
  } catch (...) {
  }
}

void Ingestor::reject(std::string_view kind, ErrorCode code,
                      const std::string& message, std::uint64_t record) {
  if (!quarantine_.is_open()) {
    quarantine_.open(quarantine_path_, std::ios::binary | std::ios::app);
    if (!quarantine_) {
      throw Error(ErrorCode::kIoError, "cannot write " + quarantine_path_.string());
    }
  }
  quarantine_ << encode_quarantine(
                     QuarantineEntry{0, record, std::string(kind), code, message})
              << '\n';
  ++summary_.quarantined;
}

bool Ingestor::submit(const EventPayload& payload, const std::string& source,
                      std::uint64_t record) {
  const std::string_view kind = kind_of(payload);
  try {
    validate_payload(payload);
  } catch (const Error& e) {
    reject(kind, e.code(), source + ": " + e.what(), record);
    return false;
  }
  const std::size_t before = state_.quarantine.size();
  apply_event(state_, EcosystemEvent{state_.last_seq + 1, std::nullopt, payload},
              record);
  if (state_.quarantine.size() != before) {
    const QuarantineEntry entry = std::move(state_.quarantine.back());
    state_.quarantine.pop_back();
    reject(kind, entry.code, source + ": " + entry.message, record);
    return false;
  }
  std::visit(
      [this](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, UnitEvent>) ++summary_.units;
        if constexpr (std::is_same_v<T, UseEvent>) ++summary_.use_edges;
        if constexpr (std::is_same_v<T, UpdateEvent>) ++summary_.update_edges;
        if constexpr (std::is_same_v<T, ContributionEvent>) ++summary_.contributions;
        if constexpr (std::is_same_v<T, AliasEvent>) ++summary_.aliases;
      },
      payload);
  pending_.push_back(payload);
  if (pending_.size() >= kFlushEvery) flush_pending();
  return true;
}

void Ingestor::flush_pending() {
  if (pending_.empty()) return;
  log_.append_all(pending_);
  pending_.clear();
}

void Ingestor::add_dump(std::istream& in, const DumpMapping& mapping,
                        const std::string& source) {
  sources_.push_back(source);
  const std::size_t source_index = sources_.size() - 1;
  parse_registry_dump(
      in, mapping,
      [&](const EventPayload& unit) { submit(unit, source, 0); },
      [&](DeclaredDependency dep) {
        declared_.emplace_back(std::move(dep), source_index);
      },
      [&](const IngestIssue& issue) {
        reject("unit", issue.code, source + ": " + issue.message, issue.record);
      });
}

void Ingestor::add_manifest(std::string_view bytes, const std::string& source,
                            std::optional<Timestamp> fallback_time,
                            ManifestOptions options) {
  Manifest m;
  try {
    m = parse_manifest(bytes, options);
  } catch (const Error& e) {
    reject("unit", e.code(), source + ": " + e.what(), 0);
    return;
  }
  const std::optional<Timestamp> time = m.time ? m.time : fallback_time;
  if (!time) {
    reject("unit", ErrorCode::kMissingField,
           source + ": manifest has no release time", 0);
    return;
  }
  if (!submit(UnitEvent{m.name, m.release, *time}, source, 0)) return;
  sources_.push_back(source);
  for (const Dependency& d : m.dependencies) {
    declared_.emplace_back(
        DeclaredDependency{UnitRef{m.name, m.release}, *time, d.name, d.constraint, 0},
        sources_.size() - 1);
  }
}

void Ingestor::add_contributions(std::istream& in, const std::string& source) {
  std::uint64_t record = 0;
  for (const ContributionRecord& rec : parse_contribution_records(
           in, [&](const IngestIssue& issue) {
             reject("contribution", issue.code, source + ": " + issue.message,
                    issue.record);
           })) {
    submit(rec.to_event(), source, ++record);
  }
}

void Ingestor::add_aliases(std::istream& in, const std::string& source) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields) || fields.size() != 2 || fields[0] != "canonical" ||
      fields[1] != "alias") {
    reject("developer-alias", ErrorCode::kCsvError,
           source + ": expected header 'canonical,alias'", 1);
    return;
  }
  while (reader.next(fields)) {
    if (fields.size() != 2) {
      reject("developer-alias", ErrorCode::kCsvError,
             source + ": expected 2 fields", reader.record_number());
      continue;
    }
    submit(AliasEvent{fields[0], fields[1]}, source, reader.record_number());
  }
}

void Ingestor::finish() {
  if (finished_) return;
  finished_ = true;

  ReleaseIndex index;
  for (const SoftwareUnit& u : state_.graph.units()) {
    index.add(u.name, u.release, u.time);
  }
  for (const auto& [dep, source_index] : declared_) {
    const std::string& source = sources_[source_index];
    std::string release;
    try {
      release = index.resolve(dep.dep_name, dep.requirement, dep.from_time);
    } catch (const Error& e) {
      reject("use", e.code(),
             source + ": " + dep.from.name + "@" + dep.from.release + " -> " +
                 e.what(),
             dep.record);
      continue;
    }
    submit(UseEvent{dep.from, UnitRef{dep.dep_name, release}}, source, dep.record);
  }
  declared_.clear();

  for (const UpdateEvent& up : index.derived_updates()) {
    const auto from = state_.graph.find(up.from.name, up.from.release);
    const auto to = state_.graph.find(up.to.name, up.to.release);
    if (from && to && state_.graph.successor(*from) == to) continue;
    submit(up, "derived", 0);
  }

  flush_pending();
  if (quarantine_.is_open()) quarantine_.flush();
}

}  // namespace sug
