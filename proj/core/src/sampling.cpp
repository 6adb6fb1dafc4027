#include "sug/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <nlohmann/json.hpp>
#include <unordered_map>

#include "sug/error.hpp"
#include "sug/ingest.hpp"

namespace sug {

std::string_view to_string(SampleMetric metric) {
  switch (metric) {
    case SampleMetric::kDependents: return "dependents";
    case SampleMetric::kContributors: return "contributors";
    case SampleMetric::kActivity: return "activity";
    case SampleMetric::kPopularity: return "popularity";
  }
  return "unknown";
}

SampleMetric parse_sample_metric(std::string_view text) {
  for (SampleMetric m : {SampleMetric::kDependents, SampleMetric::kContributors,
                         SampleMetric::kActivity, SampleMetric::kPopularity}) {
    if (to_string(m) == text) return m;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown metric '" + std::string(text) + "'");
}

namespace {

/// Package-level projection of a snapshot: names sorted, adjacency by index.
struct Projection {
  std::vector<std::string> names;
  std::unordered_map<std::string_view, std::size_t> index;
  std::vector<std::set<std::size_t>> out;

  explicit Projection(const TimedSnapshot& s) : names(s.package_names()) {
    for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], i);
    out.resize(names.size());
    for (const UseEdge& e : s.use_edges()) {
      const std::size_t a = of(s, e.from);
      const std::size_t b = of(s, e.to);
      if (a != b) out[a].insert(b);
    }
  }

  std::size_t of(const TimedSnapshot& s, UnitId id) const {
    return index.at(s.unit(id).name);
  }

  /// Ordered pairs (a, b), a != b, with b reachable from a using only
  /// packages allowed by `keep`.
  std::size_t reachable_pairs(const std::vector<bool>& keep) const {
    std::size_t total = 0;
    std::vector<std::size_t> mark(names.size(), names.size());
    std::vector<std::size_t> stack;
    for (std::size_t a = 0; a < names.size(); ++a) {
      if (!keep[a]) continue;
      mark[a] = a;
      stack.assign(1, a);
      while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (std::size_t w : out[v]) {
          if (!keep[w] || mark[w] == a) continue;
          mark[w] = a;
          ++total;
          stack.push_back(w);
        }
      }
    }
    return total;
  }
};

std::string format_score(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

std::vector<RankedPackage> rank_packages(const TimedSnapshot& snapshot,
                                         SampleMetric metric,
                                         const SampleData& data) {
  const std::vector<std::string> names = snapshot.package_names();
  std::map<std::string, double, std::less<>> score;
  for (const std::string& n : names) score.emplace(n, 0.0);

  switch (metric) {
    case SampleMetric::kDependents: {
      std::set<std::pair<std::string_view, std::string_view>> pairs;
      for (const UseEdge& e : snapshot.use_edges()) {
        std::string_view user = snapshot.unit(e.from).name;
        std::string_view used = snapshot.unit(e.to).name;
        if (user != used) pairs.emplace(used, user);
      }
      for (const auto& [used, user] : pairs) score.find(used)->second += 1;
      break;
    }
    case SampleMetric::kContributors: {
      if (!data.contributions) {
        throw Error(ErrorCode::kInsufficientData,
                    "contributors metric needs contribution data");
      }
      std::set<std::pair<std::string_view, std::string_view>> pairs;
      for (const DcContribution& c : *data.contributions) {
        if (c.time <= snapshot.at() && score.contains(c.package)) {
          pairs.emplace(c.package, c.developer);
        }
      }
      for (const auto& [pkg, dev] : pairs) score.find(pkg)->second += 1;
      break;
    }
    case SampleMetric::kActivity:
      for (const SoftwareUnit& u : snapshot.units()) score[u.name] += 1;
      break;
    case SampleMetric::kPopularity: {
      if (!data.popularity) {
        throw Error(ErrorCode::kInsufficientData,
                    "popularity metric needs an external popularity table");
      }
      for (auto& [name, value] : score) {
        auto it = data.popularity->find(name);
        if (it != data.popularity->end()) value = it->second;
      }
      break;
    }
  }

  std::vector<RankedPackage> ranking;
  ranking.reserve(score.size());
  for (const auto& [name, value] : score) ranking.push_back({name, value});
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const RankedPackage& a, const RankedPackage& b) {
                     return a.score > b.score;
                   });
  return ranking;
}

std::vector<RankedPackage> sample_top_k(const TimedSnapshot& snapshot,
                                        const SampleSpec& spec,
                                        const SampleData& data) {
  if (spec.k == 0) {
    throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  }
  std::vector<RankedPackage> ranking = rank_packages(snapshot, spec.metric, data);
  if (ranking.size() > spec.k) ranking.resize(spec.k);
  return ranking;
}

std::map<std::string, double, std::less<>> parse_popularity_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields) || fields.size() < 2 || fields[0] != "package" ||
      fields[1] != "popularity") {
    throw Error(ErrorCode::kCsvError,
                "popularity table needs a 'package,popularity' header");
  }
  std::map<std::string, double, std::less<>> table;
  while (reader.next(fields)) {
    if (fields.size() < 2) {
      throw Error(ErrorCode::kCsvError,
                  "record " + std::to_string(reader.record_number()) +
                      ": expected 2 fields");
    }
    double value = 0;
    const std::string& text = fields[1];
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw Error(ErrorCode::kCsvError,
                  "record " + std::to_string(reader.record_number()) +
                      ": bad popularity '" + text + "'");
    }
    table.insert_or_assign(fields[0], value);
  }
  return table;
}

BreakageReport chain_breakage(const TimedSnapshot& snapshot,
                              const std::set<std::string>& subset) {
  const Projection proj(snapshot);
  std::vector<bool> in_subset(proj.names.size(), false);
  for (const std::string& name : subset) {
    auto it = proj.index.find(name);
    if (it == proj.index.end()) {
      throw Error(ErrorCode::kUnknownPackage,
                  "'" + name + "' is not in the snapshot");
    }
    in_subset[it->second] = true;
  }

  BreakageReport report;
  std::vector<bool> touches_subset(proj.names.size(), false);
  for (const UseEdge& e : snapshot.use_edges()) {
    const std::size_t a = proj.of(snapshot, e.from);
    const std::size_t b = proj.of(snapshot, e.to);
    if (in_subset[a] != in_subset[b]) {
      ++report.dangling_use_edges;
      touches_subset[in_subset[a] ? b : a] = true;
    }
  }

  const std::vector<bool> all(proj.names.size(), true);
  report.broken_transitive_paths =
      proj.reachable_pairs(all) - proj.reachable_pairs(in_subset);

  std::vector<bool> has_chain(proj.names.size(), false);
  for (const UpdateEdge& e : snapshot.update_edges()) {
    has_chain[proj.of(snapshot, e.from)] = true;
  }
  for (std::size_t p = 0; p < proj.names.size(); ++p) {
    if (!in_subset[p] && has_chain[p] && touches_subset[p]) {
      ++report.severed_update_chains;
    }
  }
  return report;
}

std::vector<TimedSnapshot> snapshot_series(const Sug& g, Timestamp t0,
                                           Timestamp t1, Timestamp step) {
  if (t0 > t1) throw Error(ErrorCode::kInvalidRange, "series start after end");
  if (step <= 0) throw Error(ErrorCode::kInvalidRange, "step must be positive");
  std::vector<TimedSnapshot> series;
  for (Timestamp t = t0;; t += step) {
    series.push_back(timed_snapshot(g, t));
    if (t1 - t < step) break;
  }
  return series;
}

ActivityReport activity_report(const Sug& g, std::string_view package,
                               Timestamp window, ActivityOptions options) {
  if (g.units_named(package).empty()) {
    throw Error(ErrorCode::kUnknownPackage,
                "'" + std::string(package) + "' is not in the graph");
  }
  if (window <= 0) throw Error(ErrorCode::kInvalidRange, "window must be positive");

  ActivityReport r;
  r.package = std::string(package);
  r.as_of = options.as_of.value_or(g.max_time());
  r.window = window;
  std::set<std::string_view> dependents;
  for (UnitId id : g.units_named(package)) {
    const SoftwareUnit& u = g.unit(id);
    if (u.time > r.as_of) continue;
    if (u.time > r.as_of - window) ++r.releases_in_window;
    if (!r.last_release_time || u.time > *r.last_release_time) {
      r.last_release_time = u.time;
    }
    for (UnitId user : g.used_by(id)) {
      const SoftwareUnit& d = g.unit(user);
      if (d.time <= r.as_of && d.name != package) dependents.insert(d.name);
    }
  }
  if (r.last_release_time) {
    r.seconds_since_last_release = r.as_of - *r.last_release_time;
  }
  r.dependent_count = dependents.size();
  r.dormant_but_depended_upon =
      r.releases_in_window == 0 && r.dependent_count >= options.dependent_threshold &&
      r.dependent_count > 0;
  return r;
}

// ---------------------------------------------------------------------------
// Report writers

std::string ranking_to_csv(std::span<const RankedPackage> ranking) {
  std::string out = "rank,package,score\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    out += std::to_string(i + 1) + "," + csv_escape(ranking[i].name) + "," +
           format_score(ranking[i].score) + "\n";
  }
  return out;
}

std::string ranking_to_json(SampleMetric metric,
                            std::span<const RankedPackage> ranking) {
  nlohmann::ordered_json j;
  j["metric"] = to_string(metric);
  j["packages"] = nlohmann::ordered_json::array();
  for (const RankedPackage& p : ranking) {
    j["packages"].push_back({{"name", p.name}, {"score", p.score}});
  }
  return j.dump(2) + "\n";
}

std::string breakage_to_csv(const BreakageReport& r) {
  return "dangling_use_edges,broken_transitive_paths,severed_update_chains\n" +
         std::to_string(r.dangling_use_edges) + "," +
         std::to_string(r.broken_transitive_paths) + "," +
         std::to_string(r.severed_update_chains) + "\n";
}

std::string breakage_to_json(const BreakageReport& r) {
  nlohmann::ordered_json j;
  j["dangling_use_edges"] = r.dangling_use_edges;
  j["broken_transitive_paths"] = r.broken_transitive_paths;
  j["severed_update_chains"] = r.severed_update_chains;
  return j.dump(2) + "\n";
}

std::string activity_to_csv(std::span<const ActivityReport> reports) {
  std::string out =
      "package,as_of,window_seconds,releases_in_window,last_release,"
      "seconds_since_last_release,dependents,dormant_but_depended_upon\n";
  for (const ActivityReport& r : reports) {
    out += csv_escape(r.package) + "," + format_timestamp(r.as_of) + "," +
           std::to_string(r.window) + "," + std::to_string(r.releases_in_window) +
           ",";
    if (r.last_release_time) out += format_timestamp(*r.last_release_time);
    out += ",";
    if (r.seconds_since_last_release) {
      out += std::to_string(*r.seconds_since_last_release);
    }
    out += "," + std::to_string(r.dependent_count) + "," +
           (r.dormant_but_depended_upon ? "true" : "false") + "\n";
  }
  return out;
}

std::string activity_to_json(std::span<const ActivityReport> reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const ActivityReport& r : reports) {
    nlohmann::ordered_json j;
    j["package"] = r.package;
    j["as_of"] = format_timestamp(r.as_of);
    j["window_seconds"] = r.window;
    j["releases_in_window"] = r.releases_in_window;
    j["last_release"] = r.last_release_time
                            ? nlohmann::ordered_json(format_timestamp(*r.last_release_time))
                            : nlohmann::ordered_json(nullptr);
    j["seconds_since_last_release"] =
        r.seconds_since_last_release
            ? nlohmann::ordered_json(*r.seconds_since_last_release)
            : nlohmann::ordered_json(nullptr);
    j["dependents"] = r.dependent_count;
    j["dormant_but_depended_upon"] = r.dormant_but_depended_upon;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace sug
