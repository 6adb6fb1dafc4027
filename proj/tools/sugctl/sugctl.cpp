#include "sugctl.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sug/contrib.hpp"
#include "sug/error.hpp"
#include "sug/eventlog.hpp"
#include "sug/export.hpp"
#include "sug/ingest.hpp"
#include "sug/pipeline.hpp"
#include "sug/resolve.hpp"
#include "sug/sampling.hpp"

namespace sugctl {

namespace {

using sug::Error;
using sug::ErrorCode;
using sug::Timestamp;

struct Global {
  std::string log;
  bool strict = false;
  std::string format;
  std::string out_path;
};

struct IngestArgs {
  std::string kind = "dump";
  std::vector<std::string> files;
  std::string mapping;
  std::string time;
  bool include_dev = false;
  bool include_peer = false;
  bool include_optional = false;
};

struct SnapshotArgs {
  std::string at;
  std::string series_from;
  std::string step = "90d";
  std::string series_dir;
};

struct ResolveArgs {
  std::string root;
  std::string at;
  std::string style = "flat";
};

struct SampleArgs {
  std::string metric = "dependents";
  std::size_t k = 10;
  std::string at;
  std::string popularity;
  bool measure_breakage = false;
};

struct CongruenceArgs {
  std::string contributions;
  std::string window = "90d";
  std::string from;
  std::string to;
  bool cross_window = false;
  bool include_unmerged = false;
  bool keep_bots = false;
  double bot_threshold = sug::kDefaultBotThreshold;
};

struct ActivityArgs {
  std::vector<std::string> packages;
  std::string window = "90d";
  std::string as_of;
  std::size_t threshold = 1;
};

struct RegistriesArgs {
  std::string table;
  std::string ecosystem;
};

class Context {
 public:
  Context(const Global& global, std::ostream& out, std::ostream& err)
      : global_(global), out_(out), err_(err) {}

  std::ostream& err() { return err_; }
  const Global& global() const { return global_; }

  std::string format_or(std::string_view fallback,
                        std::initializer_list<std::string_view> allowed) const {
    const std::string f = global_.format.empty() ? std::string(fallback)
                                                 : global_.format;
    if (std::find(allowed.begin(), allowed.end(), f) == allowed.end()) {
      std::string list;
      for (std::string_view a : allowed) list += (list.empty() ? "" : "|") + std::string(a);
      throw Error(ErrorCode::kInvalidArgument,
                  "format '" + f + "' not supported here (" + list + ")");
    }
    return f;
  }

  void emit(const std::string& document) {
    if (global_.out_path.empty()) {
      out_ << document;
      out_.flush();
      return;
    }
    std::ofstream file(global_.out_path, std::ios::binary);
    file << document;
    if (!file) throw Error(ErrorCode::kIoError, "cannot write " + global_.out_path);
  }

  const std::string& require_log() const {
    if (global_.log.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "--log is required");
    }
    return global_.log;
  }

  /// Replays the log; returns the state and reports prior quarantines.
  sug::ReplayResult load() {
    sug::ReplayResult state =
        sug::replay(std::filesystem::path(require_log()),
                    sug::SugOptions{global_.strict});
    if (!state.quarantine.empty()) {
      err_ << state.quarantine.size()
           << " log events quarantined during replay\n";
      for (const sug::QuarantineEntry& q : state.quarantine) {
        err_ << "  " << sug::encode_quarantine(q) << "\n";
      }
      quarantined_ = true;
    }
    return state;
  }

  int status() const { return quarantined_ ? kQuarantined : kOk; }

 private:
  const Global& global_;
  std::ostream& out_;
  std::ostream& err_;
  bool quarantined_ = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  return in;
}

std::string count(std::size_t n, std::string_view one, std::string_view many) {
  return std::to_string(n) + " " + std::string(n == 1 ? one : many);
}

Timestamp time_or(const std::string& text, Timestamp fallback) {
  return text.empty() ? fallback : sug::parse_timestamp(text);
}

Timestamp positive_duration(const std::string& text, const char* what) {
  const Timestamp d = sug::parse_duration(text);
  if (d <= 0) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be positive");
  }
  return d;
}

// ---------------------------------------------------------------------------

int cmd_ingest(Context& ctx, const IngestArgs& a) {
  sug::Ingestor ingestor(ctx.require_log(), sug::SugOptions{ctx.global().strict});
  const std::optional<Timestamp> fallback_time =
      a.time.empty() ? std::nullopt : std::optional(sug::parse_timestamp(a.time));
  const sug::DumpMapping mapping =
      a.mapping.empty() ? sug::DumpMapping{} : sug::DumpMapping::parse(a.mapping);
  for (const std::string& file : a.files) {
    if (a.kind == "dump") {
      std::ifstream in = open_input(file);
      ingestor.add_dump(in, mapping, file);
    } else if (a.kind == "manifest") {
      ingestor.add_manifest(read_file(file), file, fallback_time,
                            sug::ManifestOptions{a.include_dev, a.include_peer,
                                                 a.include_optional});
    } else if (a.kind == "contributions") {
      std::ifstream in = open_input(file);
      ingestor.add_contributions(in, file);
    } else if (a.kind == "aliases") {
      std::ifstream in = open_input(file);
      ingestor.add_aliases(in, file);
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown input kind '" + a.kind + "'");
    }
  }
  ingestor.finish();
  const sug::IngestSummary& s = ingestor.summary();
  ctx.err() << sug::format_summary(s) << "\n";
  if (s.quarantined > 0) {
    ctx.err() << "quarantine report: " << ingestor.quarantine_path().string() << "\n";
    return kQuarantined;
  }
  return kOk;
}

int cmd_snapshot(Context& ctx, const SnapshotArgs& a) {
  const std::string format = ctx.format_or("dot", {"dot", "graphml", "json"});
  sug::ReplayResult state = ctx.load();
  const Timestamp at = time_or(a.at, std::max<Timestamp>(state.graph.max_time(), 0));
  if (!a.series_dir.empty()) {
    if (format != "dot") {
      throw Error(ErrorCode::kInvalidArgument, "snapshot series are written as DOT");
    }
    const Timestamp from = time_or(a.series_from, state.graph.min_time());
    const auto series = sug::snapshot_series(state.graph, from, at,
                                             positive_duration(a.step, "--step"));
    const auto paths = sug::write_dot_series(series, a.series_dir);
    for (std::size_t i = 0; i < series.size(); ++i) {
      ctx.err() << sug::format_timestamp(series[i].at()) << " "
                << count(series[i].units().size(), "unit", "units") << " -> "
                << paths[i].string() << "\n";
    }
    return ctx.status();
  }
  const sug::TimedSnapshot snap = sug::timed_snapshot(state.graph, at);
  if (format == "dot") ctx.emit(sug::snapshot_to_dot(snap));
  if (format == "graphml") ctx.emit(sug::snapshot_to_graphml(snap));
  if (format == "json") ctx.emit(sug::snapshot_to_json(snap));
  ctx.err() << count(snap.units().size(), "unit", "units") << ", "
            << count(snap.use_edges().size(), "use edge", "use edges") << ", "
            << count(snap.update_edges().size(), "update edge", "update edges") << " at "
            << sug::format_timestamp(at) << "\n";
  return ctx.status();
}

int cmd_resolve(Context& ctx, const ResolveArgs& a) {
  const std::string format = ctx.format_or("json", {"json", "csv"});
  const auto at_sign = a.root.rfind('@');
  if (at_sign == std::string::npos || at_sign == 0 || at_sign + 1 == a.root.size()) {
    throw Error(ErrorCode::kInvalidArgument, "--root must be name@version");
  }
  const std::string name = a.root.substr(0, at_sign);
  const std::string version = a.root.substr(at_sign + 1);
  if (a.style != "flat" && a.style != "nested") {
    throw Error(ErrorCode::kInvalidArgument, "--style must be nested or flat");
  }
  sug::ReplayResult state = ctx.load();
  const sug::TimedSnapshot snap =
      sug::timed_snapshot(state.graph, time_or(a.at, sug::kTimeMax));
  const sug::ManifestRegistry registry = sug::registry_from_snapshot(snap);
  const sug::Manifest* root = registry.find(name, version);
  if (!root) {
    throw Error(ErrorCode::kUnknownRoot, a.root + " is not present at the given time");
  }
  sug::DepTree tree = sug::build_nested_tree(*root, registry);
  if (a.style == "flat") tree = sug::flatten_tree(tree);
  const std::vector<sug::Conflict> conflicts = sug::detect_conflicts(tree);

  if (format == "json") {
    nlohmann::ordered_json doc = nlohmann::ordered_json::parse(sug::tree_to_json(tree));
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const sug::Conflict& c : conflicts) {
      list.push_back({{"name", c.name}, {"versions", c.versions}});
    }
    doc["conflicts"] = std::move(list);
    ctx.emit(doc.dump(2) + "\n");
  } else {
    ctx.emit(sug::tree_to_listing(tree));
  }
  ctx.err() << count(tree.node_count(), "node", "nodes") << ", "
            << count(conflicts.size(), "conflict", "conflicts") << "\n";
  for (const sug::Conflict& c : conflicts) {
    ctx.err() << "  conflict " << c.name << ":";
    for (const std::string& v : c.versions) ctx.err() << " " << v;
    ctx.err() << "\n";
  }
  return ctx.status();
}

/// Contributions from the log with identities merged through its aliases.
std::vector<sug::DcContribution> log_contributions(const sug::ReplayResult& state) {
  std::vector<sug::RawAuthor> authors;
  for (const sug::ContributionEvent& c : state.contributions) {
    authors.push_back({c.dev, ""});
  }
  const sug::IdentityMap ids(sug::merge_identities(authors, state.aliases));
  std::vector<sug::DcContribution> out;
  for (const sug::ContributionEvent& c : state.contributions) {
    out.push_back({c.id, ids.canonical(sug::RawAuthor{c.dev, ""}), c.target, c.ctype,
                   c.time, c.merged});
  }
  return out;
}

int cmd_sample(Context& ctx, const SampleArgs& a) {
  const std::string format = ctx.format_or("csv", {"csv", "json"});
  const sug::SampleMetric metric = sug::parse_sample_metric(a.metric);
  sug::ReplayResult state = ctx.load();
  const sug::TimedSnapshot snap =
      sug::timed_snapshot(state.graph, time_or(a.at, sug::kTimeMax));

  std::vector<sug::DcContribution> contributions;
  std::map<std::string, double, std::less<>> popularity;
  sug::SampleData data;
  if (!state.contributions.empty()) {
    contributions = log_contributions(state);
    data.contributions = std::span<const sug::DcContribution>(contributions);
  }
  if (!a.popularity.empty()) {
    std::ifstream in = open_input(a.popularity);
    popularity = sug::parse_popularity_csv(in);
    data.popularity = &popularity;
  }
  const auto ranking = sug::sample_top_k(snap, sug::SampleSpec{metric, a.k}, data);

  std::optional<sug::BreakageReport> breakage;
  if (a.measure_breakage) {
    std::set<std::string> subset;
    for (const sug::RankedPackage& p : ranking) subset.insert(p.name);
    breakage = sug::chain_breakage(snap, subset);
  }

  if (format == "json") {
    nlohmann::ordered_json doc =
        nlohmann::ordered_json::parse(sug::ranking_to_json(metric, ranking));
    if (breakage) {
      doc["breakage"] = nlohmann::ordered_json::parse(sug::breakage_to_json(*breakage));
    }
    ctx.emit(doc.dump(2) + "\n");
  } else {
    ctx.emit(sug::ranking_to_csv(ranking));
  }
  ctx.err() << ranking.size() << " of " << snap.package_names().size()
            << " packages sampled by " << sug::to_string(metric) << "\n";
  if (breakage) {
    ctx.err() << "breakage: " << breakage->dangling_use_edges
              << " dangling use edges, " << breakage->broken_transitive_paths
              << " broken transitive paths, " << breakage->severed_update_chains
              << " severed update chains\n";
  }
  return ctx.status();
}

int cmd_congruence(Context& ctx, const CongruenceArgs& a) {
  ctx.format_or("csv", {"csv"});
  if (a.bot_threshold < 0.0 || a.bot_threshold > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "--bot-threshold must be in [0, 1]");
  }
  const Timestamp width = positive_duration(a.window, "--window");
  sug::ReplayResult state = ctx.load();

  std::vector<sug::ContributionRecord> records;
  if (!a.contributions.empty()) {
    std::ifstream in = open_input(a.contributions);
    std::size_t issues = 0;
    records = sug::parse_contribution_records(in, [&](const sug::IngestIssue& issue) {
      ctx.err() << a.contributions << ": " << issue.message << "\n";
      ++issues;
    });
    if (issues) throw Error(ErrorCode::kSchemaError, "invalid contribution records");
  } else {
    for (const sug::ContributionEvent& c : state.contributions) {
      records.push_back({c.id, c.dev, "", c.target, c.ctype, c.time, c.merged, ""});
    }
  }

  std::vector<sug::RawAuthor> authors;
  for (const sug::ContributionRecord& r : records) authors.push_back({r.author, r.email});
  std::vector<sug::Developer> developers = sug::merge_identities(authors, state.aliases);
  const sug::IdentityMap ids(developers);

  std::map<std::string, std::vector<sug::ContributionRecord>> by_dev;
  for (const sug::ContributionRecord& r : records) {
    by_dev[ids.canonical(sug::RawAuthor{r.author, r.email})].push_back(r);
  }
  std::set<std::string> bots;
  for (sug::Developer& d : developers) {
    const auto verdict = sug::classify_bot(d, by_dev[d.canonical_id], a.bot_threshold);
    if (verdict.is_bot) bots.insert(d.canonical_id);
  }

  std::vector<sug::DcContribution> contributions;
  for (const sug::ContributionRecord& r : records) {
    const std::string dev = ids.canonical(sug::RawAuthor{r.author, r.email});
    if (!a.keep_bots && bots.contains(dev)) continue;
    contributions.push_back({r.id, dev, r.target, r.type, r.time, r.merged});
  }

  std::string doc = sug::congruence_csv_header();
  std::size_t pairs = 0;
  std::size_t window_count = 0;
  if (!contributions.empty()) {
    Timestamp lo = sug::kTimeMax, hi = sug::kTimeMin;
    for (const auto& c : contributions) {
      lo = std::min(lo, c.time);
      hi = std::max(hi, c.time);
    }
    const Timestamp start = time_or(a.from, lo - 1);
    const Timestamp end = std::max(time_or(a.to, hi), start + 1);
    const std::vector<sug::Window> windows =
        a.cross_window ? std::vector<sug::Window>{{start, end}}
                       : sug::window_partition(start, end, width);
    window_count = windows.size();
    for (const sug::Window& w : windows) {
      const sug::DcGraph g = sug::build_dc_graph(
          state.graph, contributions, w, sug::DcOptions{a.include_unmerged});
      for (const sug::CongruentPair& p : sug::congruent_contributions(g)) {
        doc += sug::congruence_csv_row(w, p);
        ++pairs;
      }
    }
  }
  ctx.emit(doc);
  ctx.err() << count(developers.size(), "developer", "developers") << ", "
            << count(bots.size(), "bot", "bots")
            << (a.keep_bots ? " kept" : " excluded") << ", " << window_count
            << " " << (window_count == 1 ? "window" : "windows") << ", "
            << count(pairs, "congruent pair", "congruent pairs") << "\n";
  return ctx.status();
}

int cmd_activity(Context& ctx, const ActivityArgs& a) {
  const std::string format = ctx.format_or("csv", {"csv", "json"});
  const Timestamp window = positive_duration(a.window, "--window");
  sug::ReplayResult state = ctx.load();
  std::vector<std::string> packages = a.packages;
  if (packages.empty()) {
    packages = state.graph.names();
    std::sort(packages.begin(), packages.end());
  }
  sug::ActivityOptions options;
  if (!a.as_of.empty()) options.as_of = sug::parse_timestamp(a.as_of);
  options.dependent_threshold = a.threshold;
  std::vector<sug::ActivityReport> reports;
  for (const std::string& p : packages) {
    reports.push_back(sug::activity_report(state.graph, p, window, options));
  }
  ctx.emit(format == "json" ? sug::activity_to_json(reports)
                            : sug::activity_to_csv(reports));
  const auto dormant = std::count_if(reports.begin(), reports.end(), [](const auto& r) {
    return r.dormant_but_depended_upon;
  });
  ctx.err() << count(reports.size(), "package", "packages") << ", " << dormant
            << " dormant but depended upon\n";
  return ctx.status();
}

int cmd_registries(Context& ctx, const RegistriesArgs& a) {
  const std::string format = ctx.format_or("csv", {"csv", "json"});
  std::vector<sug::RegistryInfo> table =
      a.table.empty() ? sug::load_registry_table() : sug::load_registry_table(a.table);
  if (!a.ecosystem.empty()) {
    auto hit = sug::lookup_registry(table, a.ecosystem);
    if (!hit) throw Error(ErrorCode::kUnknownPackage, "no registry named " + a.ecosystem);
    table = {*hit};
  }
  if (format == "json") {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const sug::RegistryInfo& r : table) {
      arr.push_back({{"ecosystem", r.ecosystem},
                     {"language", r.language},
                     {"tiobe_rank", r.tiobe_rank},
                     {"environment", r.environment},
                     {"tree_style", sug::to_string(r.tree_style)},
                     {"tree_label", r.tree_label},
                     {"archive_url", r.archive_url}});
    }
    ctx.emit(arr.dump(2) + "\n");
  } else {
    std::string doc = "ecosystem,language,tiobe_rank,environment,tree_style,archive_url\n";
    for (const sug::RegistryInfo& r : table) {
      doc += sug::csv_escape(r.ecosystem) + "," + sug::csv_escape(r.language) + "," +
             sug::csv_escape(r.tiobe_rank) + "," + sug::csv_escape(r.environment) +
             "," + sug::csv_escape(r.tree_label) + "," + sug::csv_escape(r.archive_url) +
             "\n";
    }
    ctx.emit(doc);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Software universe graph toolkit", "sugctl"};
  app.require_subcommand(1);
  app.fallthrough();

  Global global;
  app.add_option("--log", global.log, "Event log (NDJSON)");
  app.add_flag("--strict", global.strict,
               "Reject use-edges to units released after their user");
  app.add_option("--format", global.format, "json | csv | dot | graphml");
  app.add_option("--out", global.out_path, "Write the document here instead of stdout");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Append manifests, dumps or contributions to the log");
  c_ingest->add_option("--kind", ingest.kind, "dump | manifest | contributions | aliases")
      ->check(CLI::IsMember({"dump", "manifest", "contributions", "aliases"}));
  c_ingest->add_option("files", ingest.files, "Input files")->required();
  c_ingest->add_option("--mapping", ingest.mapping, "Dump columns, role=column,...");
  c_ingest->add_option("--time", ingest.time, "Release time for manifests without one");
  c_ingest->add_flag("--include-dev", ingest.include_dev);
  c_ingest->add_flag("--include-peer", ingest.include_peer);
  c_ingest->add_flag("--include-optional", ingest.include_optional);

  SnapshotArgs snapshot;
  auto* c_snapshot = app.add_subcommand("snapshot", "Export the graph as of a time");
  c_snapshot->add_option("--at", snapshot.at, "Epoch seconds or ISO-8601");
  c_snapshot->add_option("--series-dir", snapshot.series_dir,
                         "Write a DOT series from --from to --at into this directory");
  c_snapshot->add_option("--from", snapshot.series_from, "Series start");
  c_snapshot->add_option("--step", snapshot.step, "Series step, e.g. 90d");

  ResolveArgs resolve;
  auto* c_resolve = app.add_subcommand("resolve", "Dependency tree of a release");
  c_resolve->add_option("--root", resolve.root, "name@version")->required();
  c_resolve->add_option("--at", resolve.at);
  c_resolve->add_option("--style", resolve.style, "nested | flat");

  SampleArgs sample;
  auto* c_sample = app.add_subcommand("sample", "Top-k packages and chain breakage");
  c_sample->add_option("--metric", sample.metric,
                       "dependents | contributors | activity | popularity");
  c_sample->add_option("--k", sample.k)->check(CLI::PositiveNumber);
  c_sample->add_option("--at", sample.at);
  c_sample->add_option("--popularity", sample.popularity, "CSV package,popularity");
  c_sample->add_flag("--measure-breakage", sample.measure_breakage);

  CongruenceArgs congruence;
  auto* c_congruence = app.add_subcommand("congruence", "Congruent contributions per window");
  c_congruence->add_option("--contributions", congruence.contributions,
                           "Contribution records (NDJSON); defaults to the log's");
  c_congruence->add_option("--window", congruence.window);
  c_congruence->add_option("--from", congruence.from);
  c_congruence->add_option("--to", congruence.to);
  c_congruence->add_flag("--cross-window", congruence.cross_window,
                         "One window spanning all contributions");
  c_congruence->add_flag("--include-unmerged", congruence.include_unmerged);
  c_congruence->add_flag("--keep-bots", congruence.keep_bots);
  c_congruence->add_option("--bot-threshold", congruence.bot_threshold);

  ActivityArgs activity;
  auto* c_activity = app.add_subcommand("activity", "Release activity per package");
  c_activity->add_option("--package", activity.packages);
  c_activity->add_option("--window", activity.window);
  c_activity->add_option("--as-of", activity.as_of);
  c_activity->add_option("--threshold", activity.threshold, "Dependents for the dormant flag");

  RegistriesArgs registries;
  auto* c_registries = app.add_subcommand("registries", "Package manager reference table");
  c_registries->add_option("--table", registries.table, "Alternative table CSV");
  c_registries->add_option("--ecosystem", registries.ecosystem);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kFatal;
  }

  Context ctx(global, out, err);
  try {
    if (*c_ingest) return cmd_ingest(ctx, ingest);
    if (*c_snapshot) return cmd_snapshot(ctx, snapshot);
    if (*c_resolve) return cmd_resolve(ctx, resolve);
    if (*c_sample) return cmd_sample(ctx, sample);
    if (*c_congruence) return cmd_congruence(ctx, congruence);
    if (*c_activity) return cmd_activity(ctx, activity);
    if (*c_registries) return cmd_registries(ctx, registries);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kFatal;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFatal;
  }
  return kFatal;
}

}  // namespace sugctl
