#include "sug/export.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "sug/error.hpp"
#include "sug/ingest.hpp"

namespace sug {

namespace {

std::string dot_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string xml_text(std::string_view s) {
  std::string out;
  for (char c : s) {
    const auto uc = static_cast<unsigned char>(c);
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        // XML 1.0 forbids most control characters even as references.
        if (uc < 0x20 && c != '\t' && c != '\n' && c != '\r') break;
        out += c;
    }
  }
  return out;
}

std::string node_key(UnitId id) { return "u" + std::to_string(id.value); }

}  // namespace

std::string snapshot_to_dot(const TimedSnapshot& s) {
  std::string out = "digraph sug {\n";
  for (const SoftwareUnit& u : s.units()) {
    out += "  " + node_key(u.id) + " [label=" +
           dot_string(u.name + "@" + u.release) + ", name=" + dot_string(u.name) +
           ", release=" + dot_string(u.release) +
           ", time=" + dot_string(format_timestamp(u.time)) + "];\n";
  }
  for (const UseEdge& e : s.use_edges()) {
    out += "  " + node_key(e.from) + " -> " + node_key(e.to) + " [kind=use];\n";
  }
  for (const UpdateEdge& e : s.update_edges()) {
    out += "  " + node_key(e.from) + " -> " + node_key(e.to) +
           " [kind=update, style=dashed];\n";
  }
  out += "}\n";
  return out;
}

std::string snapshot_to_graphml(const TimedSnapshot& s) {
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      "  <key id=\"name\" for=\"node\" attr.name=\"name\" attr.type=\"string\"/>\n"
      "  <key id=\"release\" for=\"node\" attr.name=\"release\" attr.type=\"string\"/>\n"
      "  <key id=\"time\" for=\"node\" attr.name=\"time\" attr.type=\"long\"/>\n"
      "  <key id=\"kind\" for=\"edge\" attr.name=\"kind\" attr.type=\"string\"/>\n"
      "  <graph id=\"sug\" edgedefault=\"directed\">\n";
  for (const SoftwareUnit& u : s.units()) {
    out += "    <node id=\"" + node_key(u.id) + "\">\n";
    out += "      <data key=\"name\">" + xml_text(u.name) + "</data>\n";
    out += "      <data key=\"release\">" + xml_text(u.release) + "</data>\n";
    out += "      <data key=\"time\">" + std::to_string(u.time) + "</data>\n";
    out += "    </node>\n";
  }
  std::size_t n = 0;
  auto edge = [&](UnitId from, UnitId to, const char* kind) {
    out += "    <edge id=\"e" + std::to_string(n++) + "\" source=\"" +
           node_key(from) + "\" target=\"" + node_key(to) +
           "\">\n      <data key=\"kind\">" + kind + "</data>\n    </edge>\n";
  };
  for (const UseEdge& e : s.use_edges()) edge(e.from, e.to, "use");
  for (const UpdateEdge& e : s.update_edges()) edge(e.from, e.to, "update");
  out += "  </graph>\n</graphml>\n";
  return out;
}

std::string snapshot_to_json(const TimedSnapshot& s) {
  nlohmann::ordered_json j;
  j["at"] = s.at();
  auto units = nlohmann::ordered_json::array();
  for (const SoftwareUnit& u : s.units()) {
    units.push_back({{"id", node_key(u.id)},
                     {"name", u.name},
                     {"release", u.release},
                     {"time", u.time}});
  }
  j["units"] = std::move(units);
  auto uses = nlohmann::ordered_json::array();
  for (const UseEdge& e : s.use_edges()) {
    uses.push_back({node_key(e.from), node_key(e.to)});
  }
  j["use_edges"] = std::move(uses);
  auto updates = nlohmann::ordered_json::array();
  for (const UpdateEdge& e : s.update_edges()) {
    updates.push_back({node_key(e.from), node_key(e.to)});
  }
  j["update_edges"] = std::move(updates);
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> write_dot_series(
    std::span<const TimedSnapshot> series, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot create " + dir.string() + ": " + ec.message());
  }
  std::vector<std::filesystem::path> paths;
  for (std::size_t i = 0; i < series.size(); ++i) {
    char name[48];
    std::snprintf(name, sizeof name, "snapshot-%04zu.dot", i);
    const std::filesystem::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    out << snapshot_to_dot(series[i]);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
    paths.push_back(path);
  }
  return paths;
}

}  // namespace sug
