#include "cofact/prompts.hpp"

namespace cofact::prompts {

namespace {

std::string fill(std::string_view tmpl, std::string_view name, std::string_view value) {
  std::string out(tmpl);
  const std::string slot = "{" + std::string(name) + "}";
  for (std::size_t pos = out.find(slot); pos != std::string::npos;
       pos = out.find(slot, pos + value.size())) {
    out.replace(pos, slot.size(), value);
  }
  return out;
}

constexpr std::string_view kElicit = R"(You are an expert C programmer. You need to generate a C program
based on the following natural language description:

  {description}

List safety/correctness properties of the program that performs
this task in succinct natural language. The properties should be
expressible as assertions in the code.

Your answer should just be:
1. ...
2. ...
)";

constexpr std::string_view kSynthesize = R"(You are an expert C programmer and verification-aware developer.

Task: Generate a complete, working C program that implements the
following specification:

SPEC:
{description}

Constraints (must follow all):
1) Avoid using any third-party/external libraries.
2) Keep the program verification-friendly:
   - No recursion.
   - No dynamic allocation (malloc/free).
   - No floating point.
   - No pointer arithmetic beyond array indexing.
   - Avoid undefined behavior (signed overflow, out-of-bounds,
     shifting by >= width, uninitialized reads).
   - Use fixed maximum sizes for arrays/buffers; validate lengths.
   - For strings, use strnlen() instead of strlen().
3) Deterministic control flow for bounded verification:
   - Every loop must have clear static bounds (constants or
     validated input capped at a constant).
   - If a bound is configurable, declare it as a macro at the top
     (e.g., #define MAX_N 100).
4) Decomposable structure:
   - Provide small functions for each subtask (parsing, validation,
     core logic, output formatting).
5) I/O:
   - Read from stdin and write to stdout.
   - On invalid input, print an error and exit with nonzero code.
6) Output:
   - Return ONLY the full program as a single C file, wrapped in
     triple-backtick ```c formatting.
   - Include a brief comment at the top stating assumptions and bounds.
)";

constexpr std::string_view kAnnotate = R"(You are an expert C programmer.

You are given:
  Description: {description}
  A C program that implements the task: {program}
  Safety and correctness properties: {properties}

Annotate the C program with assertions that express these properties
as function contracts.

Rules:
- Treat each C function (including static functions and main) as a
  method.
- Add preconditions as assert(...) at the very start of each function.
- Add postconditions as assert(...) immediately before each return.
  For void functions, place postconditions before the closing brace.
- Use only standard C assertions: assert(condition);
- Include <assert.h>.
- Do not add, remove, or modify existing code except for inserting
  assertions.
- Helper functions (returning bool, called within assert, containing
  no assert themselves) are allowed.
- Assertions may reference function parameters, return values (via
  existing variables), and globals in scope.

Applicability:
- Add an assertion only if it meaningfully applies to the function
  and can be soundly checked at the function boundary.
- Do not add trivial assertions (assert(true), assert(1), x == x).
- Only add assertions that enforce one of the listed properties.

Output:
- Output only the annotated C program in triple-backtick C formatting.
- Do not include any explanation outside the code block.
)";

constexpr std::string_view kBoundReduce = R"(You are an expert C programmer preparing a program for bounded model checking.

The checker unrolls every loop at most {bound} times. Lower the compile-time
bound constants of the program (macro values and constant initializers that
cap array sizes or loop counts) so that no loop can execute more than
{bound} iterations.

Rules:
- Change only numeric constants. Do not add, remove, or reorder any other
  token, and keep every assert(...) statement exactly as it is.
- Keep each constant at least 1 and keep the program meaningful.
- Constants that are already small enough must stay unchanged.

Output only the full program in triple-backtick C formatting.

Program:
{program}
)";

constexpr std::string_view kMapProperties = R"(You are an expert C programmer.

Below are a C program, a numbered list of properties, and a numbered list of
assertions taken from the program. For every assertion, name the property it
enforces, or "none" when it enforces none of them.

Program:
{program}

Properties:
{properties}

Assertions:
{assertions}

Answer with exactly one line per assertion and nothing else:
A<assertion number>: P<property number>
or
A<assertion number>: none
)";

constexpr std::string_view kTranslateFact = R"(You are an expert C programmer converting assertions in a C program
into easily understandable natural-language facts.

Goal: make assertions easier to understand for non-experts.
Facts should represent the technical content of the assertion but
be written in simple, accessible language.
Do not give MORE information than the assertion. Do not interpret
it---just translate it into simple natural language.

Format: "//FACT: At this point in the program, ..."

Replace each assertion statement with a //FACT: comment.
Keep all other code exactly the same.
Do not add code fences.

C Program:
{program}
)";

}  // namespace

std::string numbered(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += "\n";
    out += std::to_string(i + 1) + ". " + items[i];
  }
  return out;
}

std::string elicit(std::string_view description) {
  return fill(kElicit, "description", description);
}

std::string synthesize(std::string_view description) {
  return fill(kSynthesize, "description", description);
}

std::string annotate(std::string_view description, std::string_view program,
                     const std::vector<std::string>& properties) {
  // Placeholders are filled in an order where substituted text is never rescanned.
  std::string out(kAnnotate);
  const std::string slots[] = {"{description}", "{program}", "{properties}"};
  const std::string values[] = {std::string(description), std::string(program),
                                numbered(properties)};
  std::string result;
  std::size_t pos = 0;
  while (pos < out.size()) {
    std::size_t best = std::string::npos;
    int which = -1;
    for (int i = 0; i < 3; ++i) {
      auto p = out.find(slots[i], pos);
      if (p < best) best = p, which = i;
    }
    if (which < 0) {
      result.append(out, pos);
      break;
    }
    result.append(out, pos, best - pos);
    result += values[which];
    pos = best + slots[which].size();
  }
  return result;
}

std::string bound_reduce(std::string_view program, unsigned bound) {
  std::string out = fill(kBoundReduce, "bound", std::to_string(bound));
  auto pos = out.rfind("{program}");
  out.replace(pos, 9, program);
  return out;
}

std::string map_properties(std::string_view program, const std::vector<std::string>& properties,
                           const std::vector<std::string>& assertions) {
  std::string out(kMapProperties);
  auto put = [&](std::string_view slot, const std::string& value) {
    auto p = out.find(slot);
    out.replace(p, slot.size(), value);
  };
  // Later slots first so earlier substitutions cannot shift them.
  put("{assertions}", numbered(assertions));
  put("{properties}", numbered(properties));
  put("{program}", std::string(program));
  return out;
}

std::string translate_fact(std::string_view program) {
  std::string out(kTranslateFact);
  auto p = out.find("{program}");
  out.replace(p, 9, program);
  return out;
}

std::string retry_feedback(std::string_view previous_prompt, std::string_view previous_answer,
                           std::string_view problem, int attempt) {
  std::string out(previous_prompt);
  out += "\n\nYour previous answer (attempt " + std::to_string(attempt) + ") was:\n";
  out += previous_answer;
  out += "\n\nIt was rejected for the following reason:\n";
  out += problem;
  out += "\n\nFix the problem and answer again, following all of the instructions above.\n";
  return out;
}

}  // namespace cofact::prompts
