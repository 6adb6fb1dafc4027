#include "sug/semver.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "sug/error.hpp"

namespace sug {

namespace {

[[noreturn]] void bad_version(std::string_view text, std::string_view why) {
  throw Error(ErrorCode::kVersionParseError,
              "'" + std::string(text) + "': " + std::string(why));
}

bool is_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](unsigned char c) {
           return std::isdigit(c) != 0;
         });
}

bool is_ident_char(unsigned char c) {
  return std::isalnum(c) != 0 || c == '-';
}

std::uint64_t parse_number(std::string_view s, std::string_view text) {
  if (!is_digits(s)) bad_version(text, "expected a numeric component");
  if (s.size() > 1 && s[0] == '0') bad_version(text, "leading zero");
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    bad_version(text, "numeric component out of range");
  }
  return value;
}

std::vector<std::string> split_identifiers(std::string_view s,
                                           std::string_view text,
                                           bool numeric_no_leading_zero) {
  std::vector<std::string> ids;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = s.find('.', start);
    std::string_view id = s.substr(start, dot == std::string_view::npos
                                              ? std::string_view::npos
                                              : dot - start);
    if (id.empty()) bad_version(text, "empty identifier");
    if (!std::all_of(id.begin(), id.end(),
                     [](unsigned char c) { return is_ident_char(c); })) {
      bad_version(text, "invalid character in identifier");
    }
    if (numeric_no_leading_zero && is_digits(id) && id.size() > 1 &&
        id[0] == '0') {
      bad_version(text, "leading zero in numeric identifier");
    }
    ids.emplace_back(id);
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return ids;
}

// Splits "core-pre+build" into its three parts.
void split_suffixes(std::string_view s, std::string_view text,
                    std::string_view& core, std::vector<std::string>& pre,
                    std::vector<std::string>& build) {
  std::size_t plus = s.find('+');
  std::string_view head = s.substr(0, plus);
  if (plus != std::string_view::npos) {
    build = split_identifiers(s.substr(plus + 1), text, false);
  }
  std::size_t dash = head.find('-');
  core = head.substr(0, dash);
  if (dash != std::string_view::npos) {
    pre = split_identifiers(head.substr(dash + 1), text, true);
  }
}

int compare_identifier(const std::string& a, const std::string& b) {
  const bool an = is_digits(a);
  const bool bn = is_digits(b);
  if (an && bn) {
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    return a.compare(b) < 0 ? -1 : (a == b ? 0 : 1);
  }
  if (an) return -1;
  if (bn) return 1;
  int c = a.compare(b);
  return c < 0 ? -1 : (c == 0 ? 0 : 1);
}

std::string join(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back('.');
    out += ids[i];
  }
  return out;
}

}  // namespace

std::string Version::to_string() const {
  std::string out = std::to_string(major) + "." + std::to_string(minor) + "." +
                    std::to_string(patch);
  if (!prerelease.empty()) out += "-" + join(prerelease);
  if (!build.empty()) out += "+" + join(build);
  return out;
}

std::strong_ordering compare_precedence(const Version& a, const Version& b) {
  if (auto c = a.major <=> b.major; c != 0) return c;
  if (auto c = a.minor <=> b.minor; c != 0) return c;
  if (auto c = a.patch <=> b.patch; c != 0) return c;
  if (a.prerelease.empty() || b.prerelease.empty()) {
    // A release outranks any of its prereleases.
    return a.prerelease.empty() <=> b.prerelease.empty();
  }
  const std::size_t n = std::min(a.prerelease.size(), b.prerelease.size());
  for (std::size_t i = 0; i < n; ++i) {
    int c = compare_identifier(a.prerelease[i], b.prerelease[i]);
    if (c != 0) return c <=> 0;
  }
  return a.prerelease.size() <=> b.prerelease.size();
}

bool version_less(const Version& a, const Version& b) {
  auto c = compare_precedence(a, b);
  if (c != 0) return c < 0;
  return a.build < b.build;
}

Version parse_version(std::string_view text) {
  std::string_view core;
  Version v;
  split_suffixes(text, text, core, v.prerelease, v.build);
  std::size_t d1 = core.find('.');
  if (d1 == std::string_view::npos) bad_version(text, "missing minor/patch");
  std::size_t d2 = core.find('.', d1 + 1);
  if (d2 == std::string_view::npos) bad_version(text, "missing patch");
  if (core.find('.', d2 + 1) != std::string_view::npos) {
    bad_version(text, "too many components");
  }
  v.major = parse_number(core.substr(0, d1), text);
  v.minor = parse_number(core.substr(d1 + 1, d2 - d1 - 1), text);
  v.patch = parse_number(core.substr(d2 + 1), text);
  return v;
}

std::optional<Version> try_parse_version(std::string_view s) {
  try {
    return parse_version(s);
  } catch (const Error&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Ranges

namespace {

bool is_wildcard(std::string_view s) {
  return s == "x" || s == "X" || s == "*";
}

Partial parse_partial(std::string_view s, std::string_view text) {
  Partial p;
  if (s.empty()) bad_version(text, "empty version in range");
  std::string_view core;
  split_suffixes(s, text, core, p.prerelease, p.build);
  std::optional<std::uint64_t>* slots[] = {&p.major, &p.minor, &p.patch};
  std::size_t start = 0;
  int index = 0;
  bool wildcard_seen = false;
  while (true) {
    if (index == 3) bad_version(text, "too many components");
    std::size_t dot = core.find('.', start);
    std::string_view part = core.substr(
        start, dot == std::string_view::npos ? std::string_view::npos
                                             : dot - start);
    if (is_wildcard(part)) {
      wildcard_seen = true;
    } else if (!wildcard_seen) {
      *slots[index] = parse_number(part, text);
    } else if (!is_digits(part)) {
      bad_version(text, "bad component after wildcard");
    }
    ++index;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if ((!p.prerelease.empty() || !p.build.empty()) && !p.patch) {
    bad_version(text, "prerelease/build requires a full version");
  }
  return p;
}

std::string partial_to_string(const Partial& p) {
  if (!p.major) return "*";
  std::string out = std::to_string(*p.major);
  if (p.minor) {
    out += "." + std::to_string(*p.minor);
    if (p.patch) out += "." + std::to_string(*p.patch);
  }
  if (!p.prerelease.empty()) out += "-" + join(p.prerelease);
  if (!p.build.empty()) out += "+" + join(p.build);
  return out;
}

std::string_view op_prefix(TermOp op) {
  switch (op) {
    case TermOp::kExact: return "";
    case TermOp::kCaret: return "^";
    case TermOp::kTilde: return "~";
    case TermOp::kLess: return "<";
    case TermOp::kLessEq: return "<=";
    case TermOp::kGreater: return ">";
    case TermOp::kGreaterEq: return ">=";
  }
  return "";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

Term parse_term(std::string_view tok, std::string_view text) {
  Term t;
  static constexpr std::pair<std::string_view, TermOp> kOps[] = {
      {"~>", TermOp::kTilde}, {">=", TermOp::kGreaterEq},
      {"<=", TermOp::kLessEq}, {"^", TermOp::kCaret},
      {"~", TermOp::kTilde},   {">", TermOp::kGreater},
      {"<", TermOp::kLess},    {"=", TermOp::kExact},
  };
  for (auto [prefix, op] : kOps) {
    if (tok.starts_with(prefix)) {
      t.op = op;
      tok.remove_prefix(prefix.size());
      break;
    }
  }
  t.version = parse_partial(tok, text);
  return t;
}

bool is_operator_only(std::string_view tok) {
  return tok == "^" || tok == "~" || tok == "~>" || tok == "<" ||
         tok == "<=" || tok == ">" || tok == ">=" || tok == "=";
}

Version floor_of(const Partial& p) {
  Version v;
  v.major = p.major.value_or(0);
  v.minor = p.minor.value_or(0);
  v.patch = p.patch.value_or(0);
  v.prerelease = p.prerelease;
  return v;
}

Version make(std::uint64_t major, std::uint64_t minor, std::uint64_t patch) {
  Version v;
  v.major = major;
  v.minor = minor;
  v.patch = patch;
  return v;
}

// Smallest release above every version matching the partial's prefix.
Version bump_partial(const Partial& p) {
  if (p.minor) return make(*p.major, *p.minor + 1, 0);
  return make(*p.major + 1, 0, 0);
}

}  // namespace

VersionRange VersionRange::parse(std::string_view text) {
  VersionRange range;
  std::size_t start = 0;
  while (true) {
    std::size_t bar = text.find("||", start);
    std::string_view clause_text = trim(text.substr(
        start, bar == std::string_view::npos ? std::string_view::npos
                                             : bar - start));
    RangeClause clause;
    std::vector<std::string_view> toks = tokens(clause_text);
    if (toks.size() == 3 && toks[1] == "-") {
      clause.hyphen = true;
      clause.terms.push_back(Term{TermOp::kExact, parse_partial(toks[0], text)});
      clause.terms.push_back(Term{TermOp::kExact, parse_partial(toks[2], text)});
    } else if (toks.empty()) {
      clause.terms.push_back(Term{TermOp::kExact, Partial{}});
    } else {
      for (std::size_t i = 0; i < toks.size(); ++i) {
        if (toks[i] == "-") bad_version(text, "misplaced hyphen");
        if (is_operator_only(toks[i])) {
          if (i + 1 == toks.size()) bad_version(text, "dangling operator");
          std::string joined(toks[i]);
          joined += toks[i + 1];
          clause.terms.push_back(parse_term(joined, text));
          ++i;
        } else {
          clause.terms.push_back(parse_term(toks[i], text));
        }
      }
    }
    range.clauses_.push_back(std::move(clause));
    if (bar == std::string_view::npos) break;
    start = bar + 2;
  }
  range.sets_ = desugar(range.clauses_);
  return range;
}

std::string VersionRange::to_string() const {
  std::string out;
  for (std::size_t c = 0; c < clauses_.size(); ++c) {
    if (c) out += " || ";
    const RangeClause& clause = clauses_[c];
    if (clause.hyphen) {
      out += partial_to_string(clause.terms[0].version) + " - " +
             partial_to_string(clause.terms[1].version);
      continue;
    }
    for (std::size_t i = 0; i < clause.terms.size(); ++i) {
      if (i) out.push_back(' ');
      const Term& t = clause.terms[i];
      if (!t.version.major && t.op == TermOp::kExact) {
        out += "*";
      } else {
        out += op_prefix(t.op);
        out += partial_to_string(t.version);
      }
    }
  }
  return out;
}

std::vector<VersionRange::ComparatorSet> VersionRange::desugar(
    const std::vector<RangeClause>& clauses) {
  // "<0.0.0" matches nothing: every release is >= 0.0.0 and prereleases of
  // 0.0.0 are excluded by the prerelease rule.
  const Comparator never{CmpOp::kLess, make(0, 0, 0)};
  std::vector<ComparatorSet> sets;
  for (const RangeClause& clause : clauses) {
    ComparatorSet set;
    if (clause.hyphen) {
      const Partial& lo = clause.terms[0].version;
      const Partial& hi = clause.terms[1].version;
      if (lo.major) set.push_back({CmpOp::kGreaterEq, floor_of(lo)});
      if (hi.patch) {
        set.push_back({CmpOp::kLessEq, floor_of(hi)});
      } else if (hi.major) {
        set.push_back({CmpOp::kLess, bump_partial(hi)});
      }
      sets.push_back(std::move(set));
      continue;
    }
    for (const Term& t : clause.terms) {
      const Partial& p = t.version;
      const bool full = p.patch.has_value();
      switch (t.op) {
        case TermOp::kExact:
          if (!p.major) break;
          if (full) {
            set.push_back({CmpOp::kEq, floor_of(p)});
          } else {
            set.push_back({CmpOp::kGreaterEq, floor_of(p)});
            set.push_back({CmpOp::kLess, bump_partial(p)});
          }
          break;
        case TermOp::kTilde:
          if (!p.major) break;
          set.push_back({CmpOp::kGreaterEq, floor_of(p)});
          set.push_back({CmpOp::kLess, p.minor ? make(*p.major, *p.minor + 1, 0)
                                               : make(*p.major + 1, 0, 0)});
          break;
        case TermOp::kCaret: {
          if (!p.major) break;
          set.push_back({CmpOp::kGreaterEq, floor_of(p)});
          Version upper;
          if (*p.major > 0 || !p.minor) {
            upper = make(*p.major + 1, 0, 0);
          } else if (*p.minor > 0 || !p.patch) {
            upper = make(0, *p.minor + 1, 0);
          } else {
            upper = make(0, 0, *p.patch + 1);
          }
          set.push_back({CmpOp::kLess, upper});
          break;
        }
        case TermOp::kGreater:
          if (!p.major) {
            set.push_back(never);
          } else if (full) {
            set.push_back({CmpOp::kGreater, floor_of(p)});
          } else {
            set.push_back({CmpOp::kGreaterEq, bump_partial(p)});
          }
          break;
        case TermOp::kGreaterEq:
          if (p.major) set.push_back({CmpOp::kGreaterEq, floor_of(p)});
          break;
        case TermOp::kLess:
          if (!p.major) {
            set.push_back(never);
          } else {
            set.push_back({CmpOp::kLess, floor_of(p)});
          }
          break;
        case TermOp::kLessEq:
          if (!p.major) break;
          if (full) {
            set.push_back({CmpOp::kLessEq, floor_of(p)});
          } else {
            set.push_back({CmpOp::kLess, bump_partial(p)});
          }
          break;
      }
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

bool VersionRange::set_matches(const ComparatorSet& set, const Version& v) {
  for (const Comparator& c : set) {
    auto order = compare_precedence(v, c.version);
    bool ok = false;
    switch (c.op) {
      case CmpOp::kLess: ok = order < 0; break;
      case CmpOp::kLessEq: ok = order <= 0; break;
      case CmpOp::kGreater: ok = order > 0; break;
      case CmpOp::kGreaterEq: ok = order >= 0; break;
      case CmpOp::kEq: ok = order == 0; break;
    }
    if (!ok) return false;
  }
  if (!v.is_prerelease()) return true;
  return std::any_of(set.begin(), set.end(), [&](const Comparator& c) {
    return c.version.is_prerelease() && c.version.major == v.major &&
           c.version.minor == v.minor && c.version.patch == v.patch;
  });
}

bool VersionRange::satisfied_by(const Version& v) const {
  return std::any_of(sets_.begin(), sets_.end(),
                     [&](const ComparatorSet& s) { return set_matches(s, v); });
}

Version resolve_version_range(const VersionRange& range,
                              std::span<const Version> available) {
  const Version* best = nullptr;
  for (const Version& v : available) {
    if (!range.satisfied_by(v)) continue;
    if (!best || version_less(*best, v)) best = &v;
  }
  if (!best) {
    throw Error(ErrorCode::kNoMatchingVersion,
                "no available version satisfies '" + range.to_string() + "'");
  }
  return *best;
}

}  // namespace sug
