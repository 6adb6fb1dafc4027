#include "sug/contrib.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "sug/error.hpp"

namespace sug {

namespace {

std::string fold_case(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

class UnionFind {
 public:
  std::size_t add() {
    parent_.push_back(parent_.size());
    return parent_.size() - 1;
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  /// Attaches b's set under a's root.
  void attach(std::size_t a, std::size_t b) { parent_[find(b)] = find(a); }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::string author_alias(const RawAuthor& author) {
  const std::string email = fold_case(author.email);
  if (email.empty()) return author.name;
  if (author.name.empty()) return email;
  return author.name + " <" + email + ">";
}

IdentityMap::IdentityMap(const std::vector<Developer>& developers) {
  std::set<std::string> ambiguous;
  for (const Developer& d : developers) {
    for (const std::string& alias : d.aliases) by_alias_.emplace(alias, d.canonical_id);
    for (const std::string& email : d.emails) by_email_.emplace(email, d.canonical_id);
    for (const std::string& name : d.names) {
      auto [it, inserted] = by_name_.emplace(name, d.canonical_id);
      if (!inserted && it->second != d.canonical_id) ambiguous.insert(name);
    }
  }
  for (const std::string& name : ambiguous) by_name_.erase(name);
}

std::string IdentityMap::canonical(const RawAuthor& author) const {
  auto it = by_alias_.find(author_alias(author));
  if (it != by_alias_.end()) return it->second;
  return canonical(author.name.empty() ? author.email : author.name);
}

std::string IdentityMap::canonical(std::string_view identifier) const {
  for (const auto* table : {&by_alias_, &by_email_, &by_name_}) {
    auto it = table->find(identifier);
    if (it != table->end()) return it->second;
  }
  auto it = by_email_.find(fold_case(identifier));
  if (it != by_email_.end()) return it->second;
  return std::string(identifier);
}

std::vector<Developer> merge_identities(std::span<const RawAuthor> authors,
                                        std::span<const AliasEvent> aliases) {
  struct Node {
    std::string alias;
    std::string name;
    std::string email;
  };
  UnionFind sets;
  std::vector<Node> nodes;
  std::map<std::string, std::size_t> by_alias;
  std::map<std::string, std::vector<std::size_t>> by_name;
  std::map<std::string, std::vector<std::size_t>> by_email;
  // Explicit canonical id held by each set root, if any.
  std::vector<std::optional<std::string>> explicit_id;

  auto add_node = [&](Node node) {
    auto [it, inserted] = by_alias.try_emplace(node.alias, nodes.size());
    if (!inserted) return it->second;
    sets.add();
    explicit_id.emplace_back();
    if (!node.name.empty()) by_name[node.name].push_back(nodes.size());
    if (!node.email.empty()) by_email[node.email].push_back(nodes.size());
    nodes.push_back(std::move(node));
    return nodes.size() - 1;
  };
  for (const RawAuthor& a : authors) {
    if (a.name.empty() && a.email.empty()) continue;
    add_node(Node{author_alias(a), a.name, fold_case(a.email)});
  }

  // Nodes an identifier refers to; creates a bare node for unknown ones.
  auto lookup = [&](const std::string& id) {
    std::set<std::size_t> found;
    if (auto it = by_alias.find(id); it != by_alias.end()) found.insert(it->second);
    if (auto it = by_name.find(id); it != by_name.end()) {
      found.insert(it->second.begin(), it->second.end());
    }
    if (auto it = by_email.find(fold_case(id)); it != by_email.end()) {
      found.insert(it->second.begin(), it->second.end());
    }
    if (found.empty()) found.insert(add_node(Node{id, id, ""}));
    return found;
  };

  for (const AliasEvent& link : aliases) {
    const std::set<std::size_t> canon = lookup(link.canonical);
    const std::set<std::size_t> alias = lookup(link.alias);
    const std::size_t root = sets.find(*canon.begin());
    for (const auto* group : {&canon, &alias}) {
      for (std::size_t n : *group) {
        const std::size_t r = sets.find(n);
        if (explicit_id[r] && *explicit_id[r] != link.canonical) {
          throw Error(ErrorCode::kConflictingAlias,
                      "'" + nodes[n].alias + "' belongs to '" + *explicit_id[r] +
                          "', cannot link it to '" + link.canonical + "'");
        }
      }
    }
    for (const auto* group : {&canon, &alias}) {
      for (std::size_t n : *group) sets.attach(root, n);
    }
    explicit_id[sets.find(root)] = link.canonical;
  }

  for (const auto& [email, members] : by_email) {
    for (std::size_t i = 1; i < members.size(); ++i) {
      const std::size_t r0 = sets.find(members[0]);
      const std::size_t ri = sets.find(members[i]);
      if (r0 == ri) continue;
      if (explicit_id[r0] && explicit_id[ri] &&
          *explicit_id[r0] != *explicit_id[ri]) {
        continue;  // explicit separation wins over email evidence
      }
      if (!explicit_id[r0]) explicit_id[r0] = explicit_id[ri];
      sets.attach(r0, ri);
    }
  }

  std::map<std::size_t, Developer> groups;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    Developer& dev = groups[sets.find(i)];
    dev.aliases.insert(nodes[i].alias);
    if (!nodes[i].name.empty()) dev.names.insert(nodes[i].name);
    if (!nodes[i].email.empty()) dev.emails.insert(nodes[i].email);
  }
  std::vector<Developer> developers;
  developers.reserve(groups.size());
  for (auto& [root, dev] : groups) {
    dev.canonical_id =
        explicit_id[root] ? *explicit_id[root] : *dev.aliases.begin();
    dev.aliases.insert(dev.canonical_id);
    developers.push_back(std::move(dev));
  }
  std::sort(developers.begin(), developers.end(),
            [](const Developer& a, const Developer& b) {
              return a.canonical_id < b.canonical_id;
            });
  return developers;
}

// ---------------------------------------------------------------------------
// Bot heuristics

namespace {

constexpr std::string_view kKnownBots[] = {
    "dependabot", "dependabot-preview", "renovate", "greenkeeper",
    "github-actions", "snyk-bot", "mergify", "codecov", "pyup-bot",
    "imgbot", "allcontributors", "stale",
};

double name_signal(std::string_view raw) {
  const std::string name = fold_case(raw);
  if (name.find("[bot]") != std::string::npos) return 1.0;
  if (std::find(std::begin(kKnownBots), std::end(kKnownBots), name) !=
      std::end(kKnownBots)) {
    return 1.0;
  }
  for (std::string_view suffix : {"-bot", "_bot", ".bot", " bot"}) {
    if (name.ends_with(suffix)) return 1.0;
  }
  if (name.ends_with("bot")) return 0.5;
  return 0.0;
}

std::vector<std::string> title_tokens(std::string_view title) {
  std::vector<std::string> tokens;
  std::string cur;
  bool in_digits = false;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(std::move(cur));
    cur.clear();
    in_digits = false;
  };
  for (unsigned char c : title) {
    if (std::isdigit(c)) {
      if (!in_digits) {
        flush();
        cur = "#";
        in_digits = true;
      }
    } else if (std::isalnum(c)) {
      if (in_digits) flush();
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

double jaccard(const std::vector<std::string>& a,
               const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::string> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(common));
  const double uni = static_cast<double>(a.size() + b.size() - common.size());
  return static_cast<double>(common.size()) / uni;
}

constexpr double kTemplateSimilarity = 0.6;
constexpr std::size_t kMaxTitles = 300;
constexpr double kConfidentSample = 5.0;

}  // namespace

BotSignals bot_signals(const Developer& dev,
                       std::span<const ContributionRecord> contributions) {
  BotSignals s;
  s.name = name_signal(dev.canonical_id);
  for (const std::string& name : dev.names) {
    s.name = std::max(s.name, name_signal(name));
  }

  std::vector<std::vector<std::string>> titles;
  for (const ContributionRecord& c : contributions) {
    if (titles.size() == kMaxTitles) break;
    if (!c.title.empty()) titles.push_back(title_tokens(c.title));
  }
  if (titles.size() >= 2) {
    std::size_t duplicates = 0;
    for (std::size_t i = 0; i < titles.size(); ++i) {
      for (std::size_t j = 0; j < titles.size(); ++j) {
        if (i != j && jaccard(titles[i], titles[j]) >= kTemplateSimilarity) {
          ++duplicates;
          break;
        }
      }
    }
    const double n = static_cast<double>(titles.size());
    s.repetitiveness = duplicates / n * std::min(1.0, n / kConfidentSample);
  }

  std::vector<Timestamp> times;
  for (const ContributionRecord& c : contributions) times.push_back(c.time);
  std::sort(times.begin(), times.end());
  if (times.size() >= 3) {
    std::vector<double> gaps;
    for (std::size_t i = 1; i < times.size(); ++i) {
      gaps.push_back(static_cast<double>(times[i] - times[i - 1]));
    }
    const double mean =
        std::accumulate(gaps.begin(), gaps.end(), 0.0) / gaps.size();
    if (mean > 0) {
      double var = 0;
      for (double g : gaps) var += (g - mean) * (g - mean);
      const double cv = std::sqrt(var / gaps.size()) / mean;
      const double confidence =
          std::min(1.0, static_cast<double>(gaps.size()) / kConfidentSample);
      s.regularity = std::clamp(1.0 - cv, 0.0, 1.0) * confidence;
    }
  }
  return s;
}

BotVerdict classify_bot(const Developer& dev,
                        std::span<const ContributionRecord> contributions,
                        double threshold) {
  const BotSignals s = bot_signals(dev, contributions);
  const double score = std::clamp(
      0.8 * s.name + 0.45 * s.repetitiveness + 0.45 * s.regularity, 0.0, 1.0);
  return BotVerdict{score >= threshold, score};
}

// ---------------------------------------------------------------------------
// Windows and the dependency-contribution graph

std::vector<Window> window_partition(Timestamp start, Timestamp end,
                                     Timestamp width) {
  if (!(start < end)) {
    throw Error(ErrorCode::kInvalidRange, "window start must precede end");
  }
  if (width <= 0) {
    throw Error(ErrorCode::kInvalidRange, "window width must be positive");
  }
  std::vector<Window> windows;
  for (Timestamp lo = start; lo < end;) {
    const Timestamp hi = (end - lo > width) ? lo + width : end;
    windows.push_back(Window{lo, hi});
    lo = hi;
  }
  return windows;
}

std::vector<PackageEdge> package_dependencies(const TimedSnapshot& snapshot) {
  std::set<PackageEdge> edges;
  for (const UseEdge& e : snapshot.use_edges()) {
    const std::string& client = snapshot.unit(e.from).name;
    const std::string& library = snapshot.unit(e.to).name;
    if (client != library) edges.insert(PackageEdge{client, library});
  }
  return {edges.begin(), edges.end()};
}

DcGraph build_dc_graph(const Sug& sug,
                       std::span<const DcContribution> contributions,
                       const Window& window, DcOptions options) {
  DcGraph g;
  g.window = window;
  g.dependency_edges = package_dependencies(timed_snapshot(sug, window.end));
  for (const DcContribution& c : contributions) {
    if (!window.contains(c.time)) continue;
    if (c.type == ContributionType::kPullRequest && !c.merged &&
        !options.include_unmerged_prs) {
      continue;
    }
    g.contributions.push_back(c);
  }
  std::sort(g.contributions.begin(), g.contributions.end(),
            [](const DcContribution& a, const DcContribution& b) {
              return std::tie(a.time, a.id) < std::tie(b.time, b.id);
            });
  std::set<std::pair<std::string, std::string>> pairs;
  for (const DcContribution& c : g.contributions) {
    pairs.emplace(c.developer, c.package);
  }
  g.contribution_edges.assign(pairs.begin(), pairs.end());
  return g;
}

std::vector<CongruentPair> congruent_contributions(const DcGraph& graph) {
  // package -> developer -> earliest contribution id
  std::map<std::string, std::map<std::string, std::string>> first;
  for (const DcContribution& c : graph.contributions) {
    first[c.package].try_emplace(c.developer, c.id);
  }
  std::vector<CongruentPair> pairs;
  for (const PackageEdge& edge : graph.dependency_edges) {
    auto client = first.find(edge.client);
    auto library = first.find(edge.library);
    if (client == first.end() || library == first.end()) continue;
    for (const auto& [dev, client_id] : client->second) {
      auto lib = library->second.find(dev);
      if (lib == library->second.end()) continue;
      pairs.push_back(
          CongruentPair{dev, edge.client, edge.library, client_id, lib->second});
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const CongruentPair& a, const CongruentPair& b) {
              return std::tie(a.developer, a.client, a.library) <
                     std::tie(b.developer, b.client, b.library);
            });
  return pairs;
}

std::string congruence_csv_header() {
  return "window_start,developer,client,library,client_contribution,"
         "library_contribution\n";
}

std::string congruence_csv_row(const Window& window, const CongruentPair& pair) {
  return format_timestamp(window.start) + "," + csv_escape(pair.developer) +
         "," + csv_escape(pair.client) + "," + csv_escape(pair.library) + "," +
         csv_escape(pair.client_contribution) + "," +
         csv_escape(pair.library_contribution) + "\n";
}

}  // namespace sug
