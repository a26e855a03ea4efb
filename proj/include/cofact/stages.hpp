#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cofact/compile.hpp"
#include "cofact/gateway.hpp"
#include "cofact/solver.hpp"

namespace cofact {

struct StageOptions {
  int max_retries = 3;
  CompilerSettings compiler;
};

// Items of a "1. ... 2. ..." answer. Indented or bulleted continuation lines
// are folded into the item above them. Throws Error(Stage::Elicitation) on
// out-of-sequence numbering or when no item is found.
std::vector<std::string> parse_numbered_list(std::string_view response);

// Body of the first ```c fenced block, if any.
std::optional<std::string> extract_c_block(std::string_view response);

std::vector<std::string> elicit_properties(Gateway& gateway, std::string_view description);

// Returns a program that compiles; compiler errors are fed back up to
// max_retries times.
std::string synthesize(Gateway& gateway, std::string_view description, const StageOptions& options);

// Returns the annotated program with multi-line assertions flattened. With
// no properties the input is returned without consulting the model.
std::string annotate(Gateway& gateway, std::string_view description, const std::string& program,
                     const std::vector<std::string>& properties, const StageOptions& options);

// Names the loops that can still exceed the bound, or nullopt when none can
// (or when that cannot be decided).
using UnwindValidator = std::function<std::optional<std::string>(const std::string& program)>;

UnwindValidator portfolio_unwind_validator(std::vector<SolverConfig> configs, unsigned bound,
                                           double timeout_seconds);

std::string bound_reduce(Gateway& gateway, const std::string& program, unsigned bound,
                         const StageOptions& options, const UnwindValidator& validator);

}  // namespace cofact
