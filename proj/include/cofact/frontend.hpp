#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cofact/model.hpp"

namespace cofact {

struct CallEdge {
  std::string caller;
  std::string callee;
  std::size_t call_site_logical_line = 0;
  std::size_t offset = 0;  // callee identifier in ProgramModel::source

  bool operator==(const CallEdge&) const = default;
};

// Direct calls between functions defined in the program. Edges are listed
// per caller in textual order of their call sites.
struct CallGraph {
  std::vector<std::string> nodes;
  std::vector<CallEdge> edges;

  std::vector<CallEdge> calls_from(std::string_view caller) const;
  bool has_node(std::string_view name) const;
};

enum class AssertionRole { KeepAsAssert, ConvertToAssume, Drop };

// Roles keyed by Assertion::statement.begin.
using RoleMap = std::map<std::size_t, AssertionRole>;

// How a bounded model checker spells `assume`. The preamble declares the
// intrinsic so that rendered programs also pass an ordinary compiler.
struct AssumeDialect {
  std::string id;
  std::string intrinsic;
  std::string preamble;
};

// Registered by default: "cbmc" (__CPROVER_assume) and "esbmc" (__ESBMC_assume).
void register_dialect(AssumeDialect dialect);
const AssumeDialect& find_dialect(std::string_view id);

// Joins every multi-line `assert(...);` statement onto one physical line.
// Line comments inside the statement become block comments. All text
// outside assertion statements is left untouched.
std::string normalize_assertions(std::string_view source);

// Locates function definitions and the global code around them.
ProgramModel parse_program(std::string source, unsigned unwind_bound = 5);

CallGraph build_call_graph(const ProgramModel& model);

// Assertions of every function, in declaration order of functions and
// document order within a function. Ids are left unset.
std::vector<Assertion> extract_assertions(const ProgramModel& model);

// Number of statement lines in a function's assertion-free skeleton.
std::size_t skeleton_length(const ProgramModel& model, const Function& fn);

std::string render_with_roles(const ProgramModel& model, const std::vector<Assertion>& assertions,
                              const RoleMap& roles, std::string_view dialect_id);

// The program with every assertion removed.
std::string strip_assertions(const ProgramModel& model);

// Start offset of the first body line after `logical_line` statement lines of
// `fn`; used to place text at a logical position. Throws ConsistencyError when
// the position is beyond the skeleton.
std::size_t logical_line_insertion_offset(const ProgramModel& model, const Function& fn,
                                          std::size_t logical_line);

struct SkeletonComparison {
  bool equal = true;
  std::vector<std::string> problems;
  std::vector<std::string> added_functions;
};

// Checks that `annotated` differs from `original` only by inserted
// assertions, added helper functions (which must not contain assertions) and
// added preprocessor includes/prototypes.
SkeletonComparison compare_skeletons(const ProgramModel& original, const ProgramModel& annotated);

// True when the two programs differ only in numeric literals (including
// literals inside #define directives). `differences` receives one line per
// changed literal.
bool differs_only_in_constants(std::string_view before, std::string_view after,
                               std::vector<std::string>* differences = nullptr);

}  // namespace cofact
