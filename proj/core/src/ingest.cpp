#include "sug/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "sug/error.hpp"

namespace sug {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Time

namespace {

[[noreturn]] void bad_time(std::string_view text, std::string_view why) {
  throw Error(ErrorCode::kInvalidTimestamp,
              "'" + std::string(text) + "': " + std::string(why));
}

bool read_int(std::string_view& s, std::size_t digits, int& out) {
  if (s.size() < digits) return false;
  int value = 0;
  for (std::size_t i = 0; i < digits; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    value = value * 10 + (s[i] - '0');
  }
  s.remove_prefix(digits);
  out = value;
  return true;
}

bool consume(std::string_view& s, char c) {
  if (s.empty() || s.front() != c) return false;
  s.remove_prefix(1);
  return true;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  if (s.empty()) bad_time(text, "empty");

  const bool all_digits =
      std::all_of(s.begin() + (s.front() == '-' ? 1 : 0), s.end(),
                  [](unsigned char c) { return std::isdigit(c) != 0; });
  if (all_digits && s.size() > (s.front() == '-' ? 1u : 0u) &&
      s.find('-', 1) == std::string_view::npos) {
    Timestamp value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      bad_time(text, "epoch seconds out of range");
    }
    return value;
  }

  using namespace std::chrono;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!read_int(s, 4, y) || !consume(s, '-') || !read_int(s, 2, mo) ||
      !consume(s, '-') || !read_int(s, 2, d)) {
    bad_time(text, "expected YYYY-MM-DD");
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) bad_time(text, "invalid calendar date");
  std::int64_t offset = 0;
  if (!s.empty()) {
    if (!consume(s, 'T') && !consume(s, ' ') && !consume(s, 't')) {
      bad_time(text, "expected time separator");
    }
    if (!read_int(s, 2, h) || !consume(s, ':') || !read_int(s, 2, mi)) {
      bad_time(text, "expected hh:mm");
    }
    if (consume(s, ':') && !read_int(s, 2, sec)) bad_time(text, "expected ss");
    if (consume(s, '.') || consume(s, ',')) {
      std::size_t n = 0;
      while (n < s.size() && std::isdigit(static_cast<unsigned char>(s[n]))) {
        ++n;
      }
      if (n == 0) bad_time(text, "empty fraction");
      s.remove_prefix(n);
    }
    if (h > 23 || mi > 59 || sec > 60) bad_time(text, "time out of range");
    if (consume(s, 'Z') || consume(s, 'z')) {
      // UTC
    } else if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
      const int sign = s.front() == '-' ? -1 : 1;
      s.remove_prefix(1);
      int oh = 0, om = 0;
      if (!read_int(s, 2, oh)) bad_time(text, "bad offset");
      consume(s, ':');
      if (!s.empty() && !read_int(s, 2, om)) bad_time(text, "bad offset");
      offset = sign * (oh * 3600 + om * 60);
    }
  }
  if (!s.empty()) bad_time(text, "trailing characters");
  const sys_days days{ymd};
  return static_cast<Timestamp>(days.time_since_epoch().count()) * 86400 +
         h * 3600 + mi * 60 + sec - offset;
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  Timestamp days = t / 86400;
  Timestamp rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
  return buf;
}

Timestamp parse_duration(std::string_view text) {
  if (text.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty duration");
  }
  Timestamp unit = 1;
  std::string_view digits = text;
  switch (text.back()) {
    case 'w': unit = 7 * 86400; break;
    case 'd': unit = 86400; break;
    case 'h': unit = 3600; break;
    case 'm': unit = 60; break;
    case 's': unit = 1; break;
    default: unit = 0;
  }
  if (unit != 0) {
    digits.remove_suffix(1);
  } else {
    unit = 1;
  }
  Timestamp value = 0;
  auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (digits.empty() || ec != std::errc{} ||
      ptr != digits.data() + digits.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "bad duration '" + std::string(text) + "'");
  }
  return value * unit;
}

// ---------------------------------------------------------------------------
// Manifests

Dependency make_dependency(std::string name, std::string constraint) {
  Dependency dep{std::move(name), std::move(constraint), std::nullopt};
  try {
    dep.range = VersionRange::parse(dep.constraint);
  } catch (const Error&) {
    dep.range.reset();
  }
  return dep;
}

namespace {

Timestamp manifest_time(const ordered_json& v) {
  if (v.is_number_integer()) return v.get<Timestamp>();
  if (v.is_string()) return parse_timestamp(v.get<std::string>());
  throw Error(ErrorCode::kParseError, "'time' must be a string or integer");
}

}  // namespace

Manifest parse_manifest(std::string_view bytes, ManifestOptions options) {
  std::vector<std::set<std::string>> keys;
  std::string duplicate;
  auto callback = [&](int, ordered_json::parse_event_t event,
                      ordered_json& parsed) {
    using E = ordered_json::parse_event_t;
    if (event == E::object_start) {
      keys.emplace_back();
    } else if (event == E::object_end) {
      if (!keys.empty()) keys.pop_back();
    } else if (event == E::key && !keys.empty()) {
      const auto& key = parsed.get_ref<const std::string&>();
      if (!keys.back().insert(key).second && duplicate.empty()) {
        duplicate = key;
      }
    }
    return true;
  };
  ordered_json doc;
  try {
    doc = ordered_json::parse(bytes, callback);
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  if (!duplicate.empty()) {
    throw Error(ErrorCode::kParseError, "duplicate key '" + duplicate + "'");
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::kParseError, "manifest must be a JSON object");
  }
  Manifest m;
  for (const char* field : {"name", "version"}) {
    auto it = doc.find(field);
    if (it == doc.end() || !it->is_string() ||
        it->get_ref<const std::string&>().empty()) {
      throw Error(ErrorCode::kMissingField,
                  std::string("manifest has no '") + field + "'");
    }
  }
  m.name = doc["name"].get<std::string>();
  m.release = doc["version"].get<std::string>();
  for (const char* field : {"time", "releaseTime"}) {
    if (auto it = doc.find(field); it != doc.end()) {
      m.time = manifest_time(*it);
      break;
    }
  }
  std::vector<const char*> sections{"dependencies"};
  if (options.include_peer) sections.push_back("peerDependencies");
  if (options.include_optional) sections.push_back("optionalDependencies");
  if (options.include_dev) sections.push_back("devDependencies");
  std::set<std::string> seen;
  for (const char* section : sections) {
    auto it = doc.find(section);
    if (it == doc.end()) continue;
    if (!it->is_object()) {
      throw Error(ErrorCode::kParseError,
                  std::string("'") + section + "' must be an object");
    }
    for (const auto& [name, constraint] : it->items()) {
      if (!constraint.is_string()) {
        throw Error(ErrorCode::kParseError,
                    "constraint for '" + name + "' must be a string");
      }
      if (!seen.insert(name).second) continue;
      m.dependencies.push_back(
          make_dependency(name, constraint.get<std::string>()));
    }
  }
  return m;
}

std::string serialize_manifest(const Manifest& manifest) {
  ordered_json doc;
  doc["name"] = manifest.name;
  doc["version"] = manifest.release;
  if (manifest.time) doc["time"] = *manifest.time;
  ordered_json deps = ordered_json::object();
  for (const Dependency& d : manifest.dependencies) {
    deps[d.name] = d.constraint;
  }
  doc["dependencies"] = std::move(deps);
  return doc.dump();
}

// ---------------------------------------------------------------------------
// CSV

bool CsvReader::next(std::vector<std::string>& fields) {
  fields.clear();
  std::streambuf* buf = in_.rdbuf();
  using Traits = std::char_traits<char>;
  while (true) {
    int c = buf->sgetc();
    if (c == Traits::eof()) {
      in_.setstate(std::ios::eofbit);
      return false;
    }
    if (c != '\n' && c != '\r') break;
    buf->sbumpc();  // skip blank lines
  }
  ++record_;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  while (true) {
    int c = buf->sbumpc();
    if (c == Traits::eof()) {
      if (quoted) {
        throw Error(ErrorCode::kCsvError, "record " + std::to_string(record_) +
                                              ": unterminated quoted field");
      }
      fields.push_back(std::move(field));
      return true;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (buf->sgetc() == '"') {
          buf->sbumpc();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && buf->sgetc() == '\n') buf->sbumpc();
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(ch);
      field_started = true;
    }
  }
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// ---------------------------------------------------------------------------
// Registry dumps

DumpMapping DumpMapping::parse(std::string_view spec) {
  DumpMapping m;
  std::size_t start = 0;
  while (start <= spec.size()) {
    std::size_t comma = spec.find(',', start);
    std::string_view item = spec.substr(
        start, comma == std::string_view::npos ? std::string_view::npos
                                               : comma - start);
    if (!item.empty()) {
      std::size_t eq = item.find('=');
      if (eq == std::string_view::npos) {
        throw Error(ErrorCode::kInvalidArgument,
                    "mapping entry '" + std::string(item) +
                        "' is not role=column");
      }
      std::string_view role = item.substr(0, eq);
      std::string column(item.substr(eq + 1));
      if (role == "platform") m.platform = column;
      else if (role == "name") m.name = column;
      else if (role == "version") m.version = column;
      else if (role == "released_at") m.released_at = column;
      else if (role == "dep_name") m.dep_name = column;
      else if (role == "dep_requirement") m.dep_requirement = column;
      else {
        throw Error(ErrorCode::kInvalidArgument,
                    "unknown mapping role '" + std::string(role) + "'");
      }
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return m;
}

RegistryDumpReader::RegistryDumpReader(std::istream& in,
                                       const DumpMapping& mapping)
    : csv_(in) {
  std::vector<std::string> header;
  if (!csv_.next(header)) {
    throw Error(ErrorCode::kCsvError, "record 1: missing header");
  }
  width_ = header.size();
  auto column = [&](const std::string& name, bool required,
                    std::size_t& index) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required) {
        throw Error(ErrorCode::kCsvError,
                    "record 1: header lacks column '" + name + "'");
      }
      return false;
    }
    index = static_cast<std::size_t>(it - header.begin());
    return true;
  };
  has_platform_ = column(mapping.platform, false, platform_);
  column(mapping.name, true, name_);
  column(mapping.version, true, version_);
  column(mapping.released_at, true, released_);
  column(mapping.dep_name, true, dep_name_);
  column(mapping.dep_requirement, true, dep_req_);
}

bool RegistryDumpReader::next(DumpRow& row) {
  if (!csv_.next(fields_)) return false;
  if (fields_.size() != width_) {
    throw Error(ErrorCode::kCsvError,
                "record " + std::to_string(csv_.record_number()) +
                    ": expected " + std::to_string(width_) + " fields, got " +
                    std::to_string(fields_.size()));
  }
  row.record = csv_.record_number();
  if (has_platform_) {
    row.platform.swap(fields_[platform_]);
  } else {
    row.platform.clear();
  }
  row.name.swap(fields_[name_]);
  row.version.swap(fields_[version_]);
  row.released_at.swap(fields_[released_]);
  row.dep_name.swap(fields_[dep_name_]);
  row.dep_requirement.swap(fields_[dep_req_]);
  return true;
}

void parse_registry_dump(
    std::istream& in, const DumpMapping& mapping, const EventSink& on_unit,
    const std::function<void(DeclaredDependency)>& on_dependency,
    const IssueSink& on_issue) {
  RegistryDumpReader reader(in, mapping);
  DumpRow row;
  std::string last_name, last_version;
  bool have_last = false;
  bool group_ok = false;
  Timestamp group_time = 0;
  while (reader.next(row)) {
    if (!have_last || row.name != last_name || row.version != last_version) {
      have_last = true;
      last_name = row.name;
      last_version = row.version;
      group_ok = false;
      if (row.name.empty() || row.version.empty()) {
        on_issue({row.record, ErrorCode::kMissingField,
                  "record " + std::to_string(row.record) +
                      ": empty name or version"});
        continue;
      }
      try {
        group_time = parse_timestamp(row.released_at);
      } catch (const Error& e) {
        on_issue({row.record, e.code(),
                  "record " + std::to_string(row.record) + ": " + e.what()});
        continue;
      }
      group_ok = true;
      on_unit(UnitEvent{row.name, row.version, group_time});
    }
    if (!group_ok || row.dep_name.empty()) continue;
    on_dependency(DeclaredDependency{UnitRef{row.name, row.version}, group_time,
                                     row.dep_name, row.dep_requirement,
                                     row.record});
  }
}

void ReleaseIndex::add(const std::string& name, const std::string& release,
                       Timestamp time) {
  auto [it, inserted] = releases_.try_emplace(name);
  if (inserted) order_.push_back(name);
  it->second.push_back(Release{release, time, try_parse_version(release)});
}

bool ReleaseIndex::contains(const std::string& name) const {
  return releases_.contains(name);
}

std::string ReleaseIndex::resolve(const std::string& name,
                                  const std::string& requirement,
                                  Timestamp as_of) const {
  auto it = releases_.find(name);
  if (it == releases_.end()) {
    throw Error(ErrorCode::kNoMatchingVersion,
                "unknown package '" + name + "'");
  }
  const std::vector<Release>& rels = it->second;
  std::optional<VersionRange> range;
  try {
    range = VersionRange::parse(requirement);
  } catch (const Error&) {
  }
  if (range) {
    for (bool only_released : {true, false}) {
      const Release* best = nullptr;
      for (const Release& r : rels) {
        if (!r.version || (only_released && r.time > as_of)) continue;
        if (!range->satisfied_by(*r.version)) continue;
        if (!best || version_less(*best->version, *r.version)) best = &r;
      }
      if (best) return best->label;
    }
  }
  for (const Release& r : rels) {
    if (r.label == requirement) return r.label;
  }
  throw Error(ErrorCode::kNoMatchingVersion,
              name + ": no release satisfies '" + requirement + "'");
}

std::vector<UpdateEvent> ReleaseIndex::derived_updates() const {
  std::vector<UpdateEvent> out;
  for (const std::string& name : order_) {
    std::vector<const Release*> rels;
    for (const Release& r : releases_.at(name)) rels.push_back(&r);
    std::stable_sort(rels.begin(), rels.end(),
                     [](const Release* a, const Release* b) {
                       return a->time < b->time;
                     });
    const Release* prev = nullptr;
    for (const Release* r : rels) {
      if (prev && prev->time < r->time) {
        out.push_back(UpdateEvent{UnitRef{name, prev->label},
                                  UnitRef{name, r->label}});
      }
      if (!prev || prev->time < r->time) prev = r;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Contribution exports

ContributionEvent ContributionRecord::to_event() const {
  return ContributionEvent{id, author, target, type, time, merged};
}

namespace {

std::optional<std::string> first_string(const nlohmann::json& obj,
                                        std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    auto it = obj.find(key);
    if (it != obj.end() && it->is_string() &&
        !it->get_ref<const std::string&>().empty()) {
      return it->get<std::string>();
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<ContributionRecord> parse_contribution_records(
    std::istream& in, const IssueSink& on_issue) {
  std::vector<ContributionRecord> records;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto issue = [&](ErrorCode code, const std::string& why) {
      on_issue({lineno, code, "record " + std::to_string(lineno) + ": " + why});
    };
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      issue(ErrorCode::kSchemaError, "not a JSON object");
      continue;
    }
    ContributionRecord rec;
    auto author = first_string(obj, {"author", "user", "login"});
    if (!author) {
      issue(ErrorCode::kSchemaError, "missing author");
      continue;
    }
    rec.author = *author;
    auto target = first_string(obj, {"target", "package", "repo"});
    if (!target) {
      issue(ErrorCode::kSchemaError, "missing target");
      continue;
    }
    rec.target = *target;
    auto type = first_string(obj, {"type", "ctype"});
    std::optional<ContributionType> ctype =
        type ? parse_contribution_type(*type) : std::nullopt;
    if (!ctype) {
      issue(ErrorCode::kSchemaError, "missing or unknown type");
      continue;
    }
    rec.type = *ctype;
    auto time_it = obj.find("time");
    if (time_it == obj.end()) time_it = obj.find("created_at");
    try {
      if (time_it == obj.end()) {
        throw Error(ErrorCode::kInvalidTimestamp, "missing time");
      }
      if (time_it->is_number_integer()) {
        rec.time = time_it->get<Timestamp>();
      } else if (time_it->is_string()) {
        rec.time = parse_timestamp(time_it->get<std::string>());
      } else {
        throw Error(ErrorCode::kInvalidTimestamp, "time must be string or int");
      }
    } catch (const Error& e) {
      issue(e.code(), e.what());
      continue;
    }
    if (auto it = obj.find("merged"); it != obj.end()) {
      if (!it->is_boolean()) {
        issue(ErrorCode::kSchemaError, "'merged' must be a boolean");
        continue;
      }
      rec.merged = it->get<bool>();
    }
    rec.id = first_string(obj, {"id"}).value_or("");
    if (rec.id.empty()) {
      if (auto it = obj.find("id"); it != obj.end() && it->is_number_integer()) {
        rec.id = std::to_string(it->get<std::int64_t>());
      } else {
        rec.id = rec.target + "#" + std::to_string(lineno);
      }
    }
    rec.email = first_string(obj, {"email"}).value_or("");
    rec.title = first_string(obj, {"title"}).value_or("");
    records.push_back(std::move(rec));
  }
  return records;
}

void parse_contribution_events(std::istream& in, const EventSink& on_event,
                               const IssueSink& on_issue) {
  for (const ContributionRecord& rec : parse_contribution_records(in, on_issue)) {
    on_event(rec.to_event());
  }
}

// ---------------------------------------------------------------------------
// Registry table

std::string_view to_string(TreeStyle style) noexcept {
  return style == TreeStyle::kNested ? "nested" : "flat";
}

std::vector<RegistryInfo> parse_registry_table(std::istream& in) {
  CsvReader csv(in);
  std::vector<std::string> fields;
  if (!csv.next(fields)) {
    throw Error(ErrorCode::kCsvError, "record 1: missing header");
  }
  const std::vector<std::string> expected{"ecosystem",   "language",
                                          "tiobe_rank",  "environment",
                                          "tree_style",  "archive_url"};
  if (fields != expected) {
    throw Error(ErrorCode::kCsvError, "record 1: unexpected header");
  }
  std::vector<RegistryInfo> table;
  while (csv.next(fields)) {
    if (fields.size() != expected.size()) {
      throw Error(ErrorCode::kCsvError,
                  "record " + std::to_string(csv.record_number()) +
                      ": expected 6 fields");
    }
    RegistryInfo info;
    info.ecosystem = fields[0];
    info.language = fields[1];
    info.tiobe_rank = fields[2];
    info.environment = fields[3];
    info.tree_label = fields[4];
    std::string lower = fields[4];
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (lower.starts_with("nested")) {
      info.tree_style = TreeStyle::kNested;
    } else if (lower.starts_with("flat")) {
      info.tree_style = TreeStyle::kFlat;
    } else {
      throw Error(ErrorCode::kCsvError,
                  "record " + std::to_string(csv.record_number()) +
                      ": tree style must be flat or nested");
    }
    info.archive_url = fields[5];
    table.push_back(std::move(info));
  }
  return table;
}

std::vector<RegistryInfo> load_registry_table(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  return parse_registry_table(in);
}

std::vector<RegistryInfo> load_registry_table() {
  std::istringstream in{std::string(bundled_registry_csv())};
  return parse_registry_table(in);
}

std::optional<RegistryInfo> lookup_registry(
    const std::vector<RegistryInfo>& table, std::string_view ecosystem) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  const std::string key = lower(ecosystem);
  for (const RegistryInfo& info : table) {
    if (lower(info.ecosystem) == key) return info;
  }
  return std::nullopt;
}

}  // namespace sug
