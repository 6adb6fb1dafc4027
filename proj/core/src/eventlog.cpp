#include "sug/eventlog.hpp"

#include <istream>
#include <nlohmann/json.hpp>

#include "json_text.hpp"

namespace sug {

using nlohmann::json;

std::string_view to_string(ContributionType type) noexcept {
  switch (type) {
    case ContributionType::kPullRequest: return "pr";
    case ContributionType::kIssue: return "issue";
    case ContributionType::kDiscussion: return "discussion";
  }
  return "pr";
}

std::optional<ContributionType> parse_contribution_type(std::string_view s) {
  if (s == "pr" || s == "pull_request" || s == "PullRequest") {
    return ContributionType::kPullRequest;
  }
  if (s == "issue" || s == "Issue") return ContributionType::kIssue;
  if (s == "discussion" || s == "Discussion") {
    return ContributionType::kDiscussion;
  }
  return std::nullopt;
}

std::string_view kind_of(const EventPayload& payload) noexcept {
  struct Visitor {
    std::string_view operator()(const UnitEvent&) const { return "unit"; }
    std::string_view operator()(const UseEvent&) const { return "use"; }
    std::string_view operator()(const UpdateEvent&) const { return "update"; }
    std::string_view operator()(const ContributionEvent&) const {
      return "contribution";
    }
    std::string_view operator()(const AliasEvent&) const {
      return "developer-alias";
    }
  };
  return std::visit(Visitor{}, payload);
}

namespace {

void require_non_empty(std::string_view value, std::string_view field,
                       std::string_view kind) {
  if (value.empty()) {
    throw Error(ErrorCode::kSchemaError, std::string(kind) + " event: field '" +
                                             std::string(field) +
                                             "' must be non-empty");
  }
}

void require_ref(const UnitRef& ref, std::string_view field,
                 std::string_view kind) {
  require_non_empty(ref.name, std::string(field) + "[0]", kind);
  require_non_empty(ref.release, std::string(field) + "[1]", kind);
}

void append_ref(std::string& out, const UnitRef& ref) {
  out.push_back('[');
  append_json_string(out, ref.name);
  out.push_back(',');
  append_json_string(out, ref.release);
  out.push_back(']');
}

const json& field(const json& obj, const char* name, std::string_view kind) {
  auto it = obj.find(name);
  if (it == obj.end()) {
    throw Error(ErrorCode::kSchemaError, std::string(kind) +
                                             " event: missing field '" + name +
                                             "'");
  }
  return *it;
}

std::string string_field(const json& obj, const char* name,
                         std::string_view kind) {
  const json& v = field(obj, name, kind);
  if (!v.is_string()) {
    throw Error(ErrorCode::kSchemaError, std::string(kind) + " event: field '" +
                                             name + "' must be a string");
  }
  return v.get<std::string>();
}

std::int64_t int_field(const json& obj, const char* name,
                       std::string_view kind) {
  const json& v = field(obj, name, kind);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::kSchemaError, std::string(kind) + " event: field '" +
                                             name + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

UnitRef ref_field(const json& obj, const char* name, std::string_view kind) {
  const json& v = field(obj, name, kind);
  if (!v.is_array() || v.size() != 2 || !v[0].is_string() ||
      !v[1].is_string()) {
    throw Error(ErrorCode::kSchemaError,
                std::string(kind) + " event: field '" + name +
                    "' must be [name, release]");
  }
  return UnitRef{v[0].get<std::string>(), v[1].get<std::string>()};
}

}  // namespace

void validate_payload(const EventPayload& payload) {
  std::string_view kind = kind_of(payload);
  if (const auto* e = std::get_if<UnitEvent>(&payload)) {
    require_non_empty(e->name, "name", kind);
    require_non_empty(e->release, "release", kind);
  } else if (const auto* e = std::get_if<UseEvent>(&payload)) {
    require_ref(e->from, "from", kind);
    require_ref(e->to, "to", kind);
  } else if (const auto* e = std::get_if<UpdateEvent>(&payload)) {
    require_ref(e->from, "from", kind);
    require_ref(e->to, "to", kind);
  } else if (const auto* e = std::get_if<ContributionEvent>(&payload)) {
    require_non_empty(e->id, "id", kind);
    require_non_empty(e->dev, "dev", kind);
    require_non_empty(e->target, "target", kind);
  } else if (const auto* e = std::get_if<AliasEvent>(&payload)) {
    require_non_empty(e->canonical, "canonical", kind);
    require_non_empty(e->alias, "alias", kind);
  }
}

std::string encode_event(const EcosystemEvent& event) {
  std::string out;
  out.reserve(96);
  out += "{\"v\":1,\"seq\":";
  out += std::to_string(event.seq);
  out += ",\"kind\":\"";
  out += kind_of(event.payload);
  out += '"';
  if (const auto* e = std::get_if<UnitEvent>(&event.payload)) {
    out += ",\"name\":";
    append_json_string(out, e->name);
    out += ",\"release\":";
    append_json_string(out, e->release);
    out += ",\"time\":";
    out += std::to_string(e->time);
  } else if (const auto* e = std::get_if<UseEvent>(&event.payload)) {
    out += ",\"from\":";
    append_ref(out, e->from);
    out += ",\"to\":";
    append_ref(out, e->to);
  } else if (const auto* e = std::get_if<UpdateEvent>(&event.payload)) {
    out += ",\"from\":";
    append_ref(out, e->from);
    out += ",\"to\":";
    append_ref(out, e->to);
  } else if (const auto* e = std::get_if<ContributionEvent>(&event.payload)) {
    out += ",\"id\":";
    append_json_string(out, e->id);
    out += ",\"dev\":";
    append_json_string(out, e->dev);
    out += ",\"target\":[";
    append_json_string(out, e->target);
    out += "],\"ctype\":\"";
    out += to_string(e->ctype);
    out += "\",\"time\":";
    out += std::to_string(e->time);
    out += ",\"merged\":";
    out += e->merged ? "true" : "false";
  } else if (const auto* e = std::get_if<AliasEvent>(&event.payload)) {
    out += ",\"canonical\":";
    append_json_string(out, e->canonical);
    out += ",\"alias\":";
    append_json_string(out, e->alias);
  }
  if (event.recorded_at) {
    out += ",\"recorded_at\":";
    out += std::to_string(*event.recorded_at);
  }
  out += '}';
  return out;
}

EcosystemEvent decode_event(std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kCorruptLog, e.what());
  }
  if (!obj.is_object()) {
    throw Error(ErrorCode::kCorruptLog, "event line is not a JSON object");
  }
  const std::string_view any = "event";
  if (int_field(obj, "v", any) != 1) {
    throw Error(ErrorCode::kSchemaError, "unsupported schema version");
  }
  EcosystemEvent event;
  const std::int64_t seq = int_field(obj, "seq", any);
  if (seq < 1) throw Error(ErrorCode::kSchemaError, "seq must be positive");
  event.seq = static_cast<std::uint64_t>(seq);
  if (obj.contains("recorded_at")) {
    event.recorded_at = int_field(obj, "recorded_at", any);
  }
  const std::string kind = string_field(obj, "kind", any);
  if (kind == "unit") {
    event.payload = UnitEvent{string_field(obj, "name", kind),
                              string_field(obj, "release", kind),
                              int_field(obj, "time", kind)};
  } else if (kind == "use") {
    event.payload =
        UseEvent{ref_field(obj, "from", kind), ref_field(obj, "to", kind)};
  } else if (kind == "update") {
    event.payload =
        UpdateEvent{ref_field(obj, "from", kind), ref_field(obj, "to", kind)};
  } else if (kind == "contribution") {
    ContributionEvent c;
    c.id = string_field(obj, "id", kind);
    c.dev = string_field(obj, "dev", kind);
    const json& target = field(obj, "target", kind);
    if (!target.is_array() || target.size() != 1 || !target[0].is_string()) {
      throw Error(ErrorCode::kSchemaError,
                  "contribution event: field 'target' must be [name]");
    }
    c.target = target[0].get<std::string>();
    auto ctype = parse_contribution_type(string_field(obj, "ctype", kind));
    if (!ctype) {
      throw Error(ErrorCode::kSchemaError,
                  "contribution event: unknown ctype");
    }
    c.ctype = *ctype;
    c.time = int_field(obj, "time", kind);
    const json& merged = field(obj, "merged", kind);
    if (!merged.is_boolean()) {
      throw Error(ErrorCode::kSchemaError,
                  "contribution event: field 'merged' must be a boolean");
    }
    c.merged = merged.get<bool>();
    event.payload = std::move(c);
  } else if (kind == "developer-alias") {
    event.payload = AliasEvent{string_field(obj, "canonical", kind),
                               string_field(obj, "alias", kind)};
  } else {
    throw Error(ErrorCode::kSchemaError, "unknown event kind '" + kind + "'");
  }
  validate_payload(event.payload);
  return event;
}

// ---------------------------------------------------------------------------
// EventLog

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) {
      throw Error(ErrorCode::kIoError, "cannot read " + path_.string());
    }
    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (in.eof() && !line.empty()) {
        throw Error(ErrorCode::kCorruptLog,
                    path_.string() + ":" + std::to_string(lineno) +
                        ": truncated final line");
      }
      if (line.empty()) continue;
      try {
        last_seq_ = decode_event(line).seq;
      } catch (const Error& e) {
        // A schema-invalid line still carries a readable seq for ordering.
        if (e.code() != ErrorCode::kSchemaError) throw;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_object() && obj.contains("seq") &&
            obj["seq"].is_number_unsigned()) {
          last_seq_ = obj["seq"].get<std::uint64_t>();
        }
      }
    }
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) {
    throw Error(ErrorCode::kIoError, "cannot open " + path_.string() +
                                         " for appending");
  }
}

void EventLog::write_line(const EventPayload& payload,
                          std::optional<Timestamp> recorded_at) {
  validate_payload(payload);
  EcosystemEvent event{last_seq_ + 1, recorded_at, payload};
  std::string line = encode_event(event);
  line.push_back('\n');
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  if (!out_) {
    throw Error(ErrorCode::kIoError, "write failed on " + path_.string());
  }
  ++last_seq_;
}

void EventLog::flush() {
  out_.flush();
  if (!out_) {
    throw Error(ErrorCode::kIoError, "flush failed on " + path_.string());
  }
}

std::uint64_t EventLog::append(const EventPayload& payload,
                               std::optional<Timestamp> recorded_at) {
  write_line(payload, recorded_at);
  flush();
  return last_seq_;
}

std::uint64_t EventLog::append_all(std::span<const EventPayload> payloads) {
  for (const EventPayload& p : payloads) validate_payload(p);
  for (const EventPayload& p : payloads) write_line(p, std::nullopt);
  flush();
  return last_seq_;
}

// ---------------------------------------------------------------------------
// Replay

std::string encode_quarantine(const QuarantineEntry& entry) {
  std::string out = "{\"seq\":" + std::to_string(entry.seq) +
                    ",\"line\":" + std::to_string(entry.line) + ",\"kind\":";
  append_json_string(out, entry.kind);
  out += ",\"error\":\"";
  out += to_string(entry.code);
  out += "\",\"message\":";
  append_json_string(out, entry.message);
  out += '}';
  return out;
}

namespace {

UnitId resolve_ref(const Sug& g, const UnitRef& ref) {
  auto id = g.find(ref.name, ref.release);
  if (!id) {
    throw Error(ErrorCode::kUnknownUnit,
                "unresolved reference " + ref.name + "@" + ref.release);
  }
  return *id;
}

}  // namespace

void apply_event(ReplayResult& state, const EcosystemEvent& event,
                 std::uint64_t line) {
  if (event.seq <= state.last_seq) {
    throw Error(ErrorCode::kCorruptLog,
                "line " + std::to_string(line) + ": seq " +
                    std::to_string(event.seq) + " does not increase past " +
                    std::to_string(state.last_seq));
  }
  state.last_seq = event.seq;
  try {
    if (const auto* e = std::get_if<UnitEvent>(&event.payload)) {
      state.graph.add_unit(e->name, e->release, e->time);
    } else if (const auto* e = std::get_if<UseEvent>(&event.payload)) {
      state.graph.add_use_edge(resolve_ref(state.graph, e->from),
                               resolve_ref(state.graph, e->to));
    } else if (const auto* e = std::get_if<UpdateEvent>(&event.payload)) {
      state.graph.add_update_edge(resolve_ref(state.graph, e->from),
                                  resolve_ref(state.graph, e->to));
    } else if (const auto* e = std::get_if<ContributionEvent>(&event.payload)) {
      state.contributions.push_back(*e);
    } else if (const auto* e = std::get_if<AliasEvent>(&event.payload)) {
      state.aliases.push_back(*e);
    }
  } catch (const Error& e) {
    state.quarantine.push_back(QuarantineEntry{
        event.seq, line, std::string(kind_of(event.payload)), e.code(),
        e.what()});
  }
}

void replay_into(ReplayResult& state, std::istream& in) {
  std::string text;
  std::uint64_t lineno = state.lines;
  while (std::getline(in, text)) {
    ++lineno;
    if (in.eof() && !text.empty()) {
      throw Error(ErrorCode::kCorruptLog,
                  "line " + std::to_string(lineno) + ": truncated final line");
    }
    if (text.empty()) continue;
    EcosystemEvent event;
    try {
      event = decode_event(text);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSchemaError) {
        throw Error(ErrorCode::kCorruptLog,
                    "line " + std::to_string(lineno) + ": " + e.what());
      }
      // Well-formed JSON that breaks the schema is quarantined; its seq, when
      // present, still advances the ordering check.
      json obj = json::parse(text, nullptr, false);
      std::uint64_t seq = 0;
      if (obj.is_object() && obj.contains("seq") &&
          obj["seq"].is_number_unsigned()) {
        seq = obj["seq"].get<std::uint64_t>();
        if (seq > state.last_seq) state.last_seq = seq;
      }
      std::string kind = "unknown";
      if (obj.is_object() && obj.contains("kind") && obj["kind"].is_string()) {
        kind = obj["kind"].get<std::string>();
      }
      state.quarantine.push_back(
          QuarantineEntry{seq, lineno, kind, e.code(), e.what()});
      continue;
    }
    apply_event(state, event, lineno);
  }
  if (in.bad()) throw Error(ErrorCode::kIoError, "read failed");
  state.lines = lineno;
}

void replay_into(ReplayResult& state, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  replay_into(state, in);
}

ReplayResult replay(std::istream& in, SugOptions options) {
  ReplayResult state{Sug(options), {}, {}, {}, 0, 0};
  replay_into(state, in);
  return state;
}

ReplayResult replay(const std::filesystem::path& path, SugOptions options) {
  ReplayResult state{Sug(options), {}, {}, {}, 0, 0};
  replay_into(state, path);
  return state;
}

Sug replay_until(const std::filesystem::path& path, Timestamp t,
                 SugOptions options) {
  ReplayResult full = replay(path, options);
  return materialize(timed_snapshot(full.graph, t));
}

}  // namespace sug
