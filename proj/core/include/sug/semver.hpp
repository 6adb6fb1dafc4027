#pragma once

// Semantic versions and npm-style version ranges.
//
// Range grammar (a node-semver subset):
//   range-set  := range ( "||" range )*
//   range      := hyphen | simple ( " " simple )* | ""
//   hyphen     := partial " - " partial
//   simple     := ( "^" | "~" | "<" | "<=" | ">" | ">=" | "=" )? partial
//   partial    := xr ( "." xr ( "." xr prerelease? build? )? )?
//   xr         := "x" | "X" | "*" | numeric
// A prerelease version only satisfies a comparator set that names a
// prerelease on the same major.minor.patch.

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sug {

struct Version {
  std::uint64_t major = 0;
  std::uint64_t minor = 0;
  std::uint64_t patch = 0;
  std::vector<std::string> prerelease;
  std::vector<std::string> build;

  bool is_prerelease() const noexcept { return !prerelease.empty(); }
  std::string to_string() const;

  /// Field-wise equality, including build metadata.
  friend bool operator==(const Version&, const Version&) = default;
};

/// Precedence order. Build metadata does not affect precedence.
std::strong_ordering compare_precedence(const Version& a, const Version& b);

/// Total order: precedence, then build metadata lexicographically.
bool version_less(const Version& a, const Version& b);

/// Strict grammar: MAJOR.MINOR.PATCH[-PRERELEASE][+BUILD], no leading zeros,
/// no "v" prefix. Throws VersionParseError.
Version parse_version(std::string_view s);
std::optional<Version> try_parse_version(std::string_view s);

/// A possibly incomplete version. A missing component and an "x" are the same
/// wildcard; components after the first wildcard are dropped.
struct Partial {
  std::optional<std::uint64_t> major;
  std::optional<std::uint64_t> minor;
  std::optional<std::uint64_t> patch;
  std::vector<std::string> prerelease;
  std::vector<std::string> build;

  friend bool operator==(const Partial&, const Partial&) = default;
};

enum class TermOp { kExact, kCaret, kTilde, kLess, kLessEq, kGreater, kGreaterEq };

struct Term {
  TermOp op = TermOp::kExact;
  Partial version;

  friend bool operator==(const Term&, const Term&) = default;
};

/// One alternative of a range: either a hyphen range or a conjunction.
struct RangeClause {
  bool hyphen = false;
  std::vector<Term> terms;  // for hyphen ranges: exactly {low, high}

  friend bool operator==(const RangeClause&, const RangeClause&) = default;
};

class VersionRange {
 public:
  /// Throws VersionParseError.
  static VersionRange parse(std::string_view text);

  bool satisfied_by(const Version& v) const;

  /// Canonical form; parse(to_string()) == *this.
  std::string to_string() const;

  const std::vector<RangeClause>& clauses() const noexcept { return clauses_; }

  friend bool operator==(const VersionRange& a, const VersionRange& b) {
    return a.clauses_ == b.clauses_;
  }

 private:
  enum class CmpOp { kLess, kLessEq, kGreater, kGreaterEq, kEq };
  struct Comparator {
    CmpOp op;
    Version version;
  };
  using ComparatorSet = std::vector<Comparator>;

  static std::vector<ComparatorSet> desugar(const std::vector<RangeClause>& clauses);
  static bool set_matches(const ComparatorSet& set, const Version& v);

  std::vector<RangeClause> clauses_;
  std::vector<ComparatorSet> sets_;
};

/// Highest version in `available` that satisfies `range`.
/// Throws NoMatchingVersion.
Version resolve_version_range(const VersionRange& range,
                              std::span<const Version> available);

}  // namespace sug
