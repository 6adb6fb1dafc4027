#include "sug/resolve.hpp"

#include <algorithm>
#include <deque>
#include <nlohmann/json.hpp>
#include <unordered_map>

#include "sug/error.hpp"

namespace sug {

void ManifestRegistry::add(Manifest manifest) {
  auto& releases = by_name_[manifest.name];
  std::string release = manifest.release;
  releases.insert_or_assign(std::move(release), std::move(manifest));
}

const Manifest* ManifestRegistry::find(std::string_view name,
                                       std::string_view release) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return nullptr;
  auto rel = it->second.find(std::string(release));
  return rel == it->second.end() ? nullptr : &rel->second;
}

std::optional<std::string> ManifestRegistry::resolve(const Dependency& dep) const {
  auto it = by_name_.find(dep.name);
  if (it == by_name_.end()) return std::nullopt;
  const auto& releases = it->second;
  if (releases.contains(dep.constraint)) return dep.constraint;
  if (!dep.range) return std::nullopt;
  const std::string* best_label = nullptr;
  std::optional<Version> best;
  for (const auto& [label, manifest] : releases) {
    auto v = try_parse_version(label);
    if (!v || !dep.range->satisfied_by(*v)) continue;
    if (!best || version_less(*best, *v)) {
      best = std::move(v);
      best_label = &label;
    }
  }
  if (!best_label) return std::nullopt;
  return *best_label;
}

std::size_t ManifestRegistry::size() const noexcept {
  std::size_t n = 0;
  for (const auto& [name, releases] : by_name_) n += releases.size();
  return n;
}

ManifestRegistry registry_from_snapshot(const TimedSnapshot& snapshot) {
  ManifestRegistry registry;
  for (const SoftwareUnit& u : snapshot.units()) {
    Manifest m{u.name, u.release, {}, u.time};
    std::set<std::string> seen;
    for (UnitId dep : snapshot.use_of(u.id)) {
      const SoftwareUnit& target = snapshot.unit(dep);
      if (!seen.insert(target.name).second) continue;
      m.dependencies.push_back(make_dependency(target.name, target.release));
    }
    registry.add(std::move(m));
  }
  return registry;
}

std::size_t DepTree::node_count() const {
  std::size_t n = 0;
  std::vector<const DepNode*> stack{&root};
  while (!stack.empty()) {
    const DepNode* node = stack.back();
    stack.pop_back();
    ++n;
    for (const DepNode& child : node->children) stack.push_back(&child);
  }
  return n;
}

// ---------------------------------------------------------------------------
// Nested resolution

namespace {

class NestedBuilder {
 public:
  NestedBuilder(const ManifestRegistry& registry, ResolveOptions options)
      : registry_(registry), options_(options) {}

  DepNode build(const Manifest& root) {
    DepNode node{root.name, root.release, {}, false};
    count_ = 1;
    expand(node, root);
    return node;
  }

 private:
  void expand(DepNode& node, const Manifest& manifest) {
    active_.emplace_back(manifest.name, manifest.release);
    for (const Dependency& dep : manifest.dependencies) {
      std::optional<std::string> version = registry_.resolve(dep);
      if (!version) {
        throw Error(ErrorCode::kNoMatchingVersion,
                    dep.name + "@" + dep.constraint + " required at " +
                        path_string());
      }
      if (++count_ > options_.max_nodes) {
        throw Error(ErrorCode::kTreeTooLarge,
                    "nested tree exceeds " +
                        std::to_string(options_.max_nodes) + " nodes");
      }
      DepNode child{dep.name, *version, {}, false};
      const bool on_path =
          std::find(active_.begin(), active_.end(),
                    std::pair{dep.name, *version}) != active_.end();
      if (on_path) {
        child.back_reference = true;
      } else if (const Manifest* m = registry_.find(dep.name, *version)) {
        expand(child, *m);
      }
      node.children.push_back(std::move(child));
    }
    active_.pop_back();
  }

  std::string path_string() const {
    std::string out;
    for (const auto& [name, release] : active_) {
      if (!out.empty()) out += " > ";
      out += name + "@" + release;
    }
    return out;
  }

  const ManifestRegistry& registry_;
  ResolveOptions options_;
  std::vector<std::pair<std::string, std::string>> active_;
  std::size_t count_ = 0;
};

}  // namespace

DepTree build_nested_tree(const Manifest& root, const ManifestRegistry& registry,
                          ResolveOptions options) {
  NestedBuilder builder(registry, options);
  return DepTree{builder.build(root), DepStyle::kNested};
}

// ---------------------------------------------------------------------------
// Hoisting

namespace {

struct FlatNode {
  std::string name;
  std::string version;
  bool back_reference = false;
  std::vector<std::size_t> children;
};

DepNode to_tree(const std::vector<FlatNode>& arena, std::size_t index) {
  const FlatNode& f = arena[index];
  DepNode node{f.name, f.version, {}, f.back_reference};
  node.children.reserve(f.children.size());
  for (std::size_t c : f.children) node.children.push_back(to_tree(arena, c));
  return node;
}

}  // namespace

DepTree flatten_tree(const DepTree& nested) {
  std::vector<FlatNode> arena;
  arena.push_back(FlatNode{nested.root.name, nested.root.version,
                           nested.root.back_reference, {}});
  std::unordered_map<std::string, std::size_t> top;

  struct Pending {
    const DepNode* node;
    std::size_t parent;
  };
  std::deque<Pending> queue;
  for (const DepNode& child : nested.root.children) queue.push_back({&child, 0});

  auto enqueue_children = [&](const DepNode* node, std::size_t placed) {
    if (node->back_reference) return;
    for (const DepNode& child : node->children) {
      queue.push_back({&child, placed});
    }
  };
  auto place = [&](const DepNode* node, std::size_t parent) {
    arena.push_back(FlatNode{node->name, node->version, node->back_reference, {}});
    const std::size_t index = arena.size() - 1;
    arena[parent].children.push_back(index);
    enqueue_children(node, index);
    return index;
  };
  // An existing copy of the same version satisfies the dependency. A leaf
  // back-reference copy is promoted when the full package reaches it.
  auto reuse = [&](const DepNode* node, std::size_t existing) {
    if (arena[existing].back_reference && !node->back_reference) {
      arena[existing].back_reference = false;
      enqueue_children(node, existing);
    }
  };

  while (!queue.empty()) {
    auto [node, parent] = queue.front();
    queue.pop_front();
    auto it = top.find(node->name);
    if (it == top.end()) {
      top.emplace(node->name, place(node, 0));
      continue;
    }
    if (arena[it->second].version == node->version) {
      reuse(node, it->second);
      continue;
    }
    std::size_t existing = arena.size();
    for (std::size_t c : arena[parent].children) {
      if (arena[c].name == node->name) existing = c;
    }
    if (existing != arena.size() && arena[existing].version == node->version) {
      reuse(node, existing);
    } else {
      place(node, parent);
    }
  }
  return DepTree{to_tree(arena, 0), DepStyle::kFlat};
}

// ---------------------------------------------------------------------------

namespace {

bool release_less(const std::string& a, const std::string& b) {
  auto va = try_parse_version(a);
  auto vb = try_parse_version(b);
  if (va && vb) return version_less(*va, *vb);
  if (va != vb) return va.has_value();  // semver releases first
  return a < b;
}

}  // namespace

std::vector<Conflict> detect_conflicts(const DepTree& tree) {
  std::map<std::string, std::set<std::string>> versions;
  std::vector<const DepNode*> stack{&tree.root};
  while (!stack.empty()) {
    const DepNode* node = stack.back();
    stack.pop_back();
    versions[node->name].insert(node->version);
    for (const DepNode& child : node->children) stack.push_back(&child);
  }
  std::vector<Conflict> conflicts;
  for (auto& [name, set] : versions) {
    if (set.size() < 2) continue;
    Conflict c{name, {set.begin(), set.end()}};
    std::sort(c.versions.begin(), c.versions.end(), release_less);
    conflicts.push_back(std::move(c));
  }
  return conflicts;
}

std::optional<std::string> lookup(const DepTree& tree,
                                  const std::vector<std::size_t>& path,
                                  std::string_view dep_name) {
  const DepNode* node = &tree.root;
  for (std::size_t index : path) {
    if (index >= node->children.size()) {
      throw Error(ErrorCode::kInvalidArgument, "path leaves the tree");
    }
    node = &node->children[index];
  }
  for (const DepNode& child : node->children) {
    if (child.name == dep_name) return child.version;
  }
  for (const DepNode& child : tree.root.children) {
    if (child.name == dep_name) return child.version;
  }
  return std::nullopt;
}

DeclaredUsage unused_declared(const Manifest& manifest,
                              const std::set<std::string>& observed_imports) {
  DeclaredUsage usage;
  std::set<std::string> declared;
  for (const Dependency& d : manifest.dependencies) declared.insert(d.name);
  std::set_difference(declared.begin(), declared.end(),
                      observed_imports.begin(), observed_imports.end(),
                      std::inserter(usage.unused, usage.unused.end()));
  std::set_difference(observed_imports.begin(), observed_imports.end(),
                      declared.begin(), declared.end(),
                      std::inserter(usage.phantom, usage.phantom.end()));
  return usage;
}

namespace {

nlohmann::ordered_json node_json(const DepNode& node) {
  nlohmann::ordered_json j;
  j["name"] = node.name;
  j["version"] = node.version;
  if (node.back_reference) j["backReference"] = true;
  nlohmann::ordered_json children = nlohmann::ordered_json::array();
  for (const DepNode& child : node.children) children.push_back(node_json(child));
  j["children"] = std::move(children);
  return j;
}

void listing(const DepNode& node, const std::string& prefix, std::string& out) {
  for (const DepNode& child : node.children) {
    const std::string path = prefix.empty() ? child.name : prefix + "/" + child.name;
    out += csv_escape(child.name + "@" + child.version);
    out += ',';
    out += csv_escape(path);
    out += '\n';
    listing(child, path, out);
  }
}

}  // namespace

std::string tree_to_json(const DepTree& tree) {
  nlohmann::ordered_json j;
  j["style"] = tree.style == DepStyle::kFlat ? "flat" : "nested";
  j["root"] = node_json(tree.root);
  return j.dump(2);
}

std::string tree_to_listing(const DepTree& tree) {
  std::string out = "package,path\n";
  listing(tree.root, "", out);
  return out;
}

}  // namespace sug
