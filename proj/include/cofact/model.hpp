#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cofact {

// 1-based position of an assertion in the traversal sequence.
struct AssertionId {
  std::size_t value = 0;
  auto operator<=>(const AssertionId&) const = default;
};

using AssertionIdSet = std::set<AssertionId>;

std::string to_string(const AssertionIdSet& ids);

// Half-open byte range [begin, end) into a source buffer.
struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool contains(std::size_t offset) const { return offset >= begin && offset < end; }
  bool operator==(const SourceSpan&) const = default;
};

// An `assert(predicate);` statement located at a logical line of a function.
// The logical line counts statement lines of the function's assertion-free
// skeleton that precede the assertion, so it does not move when other
// assertions are inserted or removed.
struct Assertion {
  std::string function;
  std::size_t logical_line = 0;
  std::string predicate;
  std::optional<AssertionId> id;

  SourceSpan statement;   // `assert ( ... ) ;` in ProgramModel::source
  SourceSpan keyword;     // the `assert` token
  std::size_t source_line = 0;  // 1-based physical line
};

struct Verified {
  bool operator==(const Verified&) const = default;
};
struct CondVerified {
  AssertionIdSet assumptions;
  bool operator==(const CondVerified&) const = default;
};
struct Falsified {
  bool operator==(const Falsified&) const = default;
};
struct Unknown {
  bool operator==(const Unknown&) const = default;
};

using VerificationStatus = std::variant<Verified, CondVerified, Falsified, Unknown>;

std::string_view status_tag(const VerificationStatus& status);

// Assumption sets per verified assertion plus the falsified set. An empty
// assumption set means the assertion was verified unconditionally.
struct ImplicationGraph {
  std::map<AssertionId, AssertionIdSet> entries;
  AssertionIdSet falsified;

  bool contains(AssertionId id) const { return entries.contains(id); }

  // entries[i] only references j < i, and entries/falsified are disjoint.
  bool well_formed() const;
};

VerificationStatus status_of(AssertionId id, const ImplicationGraph& ig,
                             const AssertionIdSet& timeout_set);

struct Function {
  std::string name;
  SourceSpan extent;  // declaration specifiers through the closing brace
  SourceSpan body;    // strictly between the braces
  std::size_t line = 0;  // physical line of the function name
};

struct ProgramModel {
  std::string source;
  std::string global_code;
  std::vector<Function> functions;  // declaration order
  unsigned unwind_bound = 5;

  const Function* find(std::string_view name) const;
};

struct VerifiedFact {
  AssertionId assertion;
  unsigned bound = 0;
  std::string text;
  bool conditional = false;
  AssertionIdSet dependency_indices;
};

}  // namespace cofact
