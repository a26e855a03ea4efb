#include "cofact/stages.hpp"

#include <cctype>
#include <regex>
#include <sstream>

#include "cofact/error.hpp"
#include "cofact/frontend.hpp"
#include "cofact/prompts.hpp"

namespace cofact {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::size_t indent_of(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return i;
}

std::string strip_bullet(std::string s) {
  static const std::regex bullet(R"(^(?:[-*+•]|[a-zA-Z0-9]{1,3}[.)])\s+)");
  std::smatch m;
  if (std::regex_search(s, m, bullet)) return m.suffix().str();
  return s;
}

std::string excerpt(std::string_view text, std::size_t limit = 2000) {
  if (text.size() <= limit) return std::string(text);
  return std::string(text.substr(0, limit)) + "\n[...]";
}

}  // namespace

std::vector<std::string> parse_numbered_list(std::string_view response) {
  static const std::regex item(R"(^([ \t]*)(?:\*\*)?(\d+)[.)](?:\*\*)?[ \t]+(.*)$)");
  std::vector<std::string> out;
  std::optional<std::size_t> base_indent;
  std::istringstream in{std::string(response)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::smatch m;
    const bool numbered = std::regex_match(line, m, item);
    if (numbered && (!base_indent || m[1].length() <= static_cast<long>(*base_indent))) {
      const std::size_t n = std::stoul(m[2].str());
      if (n != out.size() + 1) {
        throw Error(Stage::Elicitation, "property list numbering jumps to " + std::to_string(n) +
                                            " after " + std::to_string(out.size()) +
                                            "; raw response:\n" + excerpt(response));
      }
      if (!base_indent) base_indent = static_cast<std::size_t>(m[1].length());
      out.push_back(trim(m[3].str()));
      continue;
    }
    if (out.empty()) continue;  // preamble
    std::string text = strip_bullet(trim(line));
    if (indent_of(line) > *base_indent || text != trim(line)) {
      out.back() += (out.back().empty() ? "" : "; ") + text;
    } else {
      out.back() += " " + text;
    }
  }
  if (out.empty()) {
    throw Error(Stage::Elicitation,
                "no numbered properties in response; raw response:\n" + excerpt(response));
  }
  return out;
}

std::optional<std::string> extract_c_block(std::string_view response) {
  static const std::regex fence(R"(```[ \t]*(?:c|C)[ \t]*\r?\n)");
  std::string s(response);
  std::smatch m;
  if (!std::regex_search(s, m, fence)) return std::nullopt;
  std::size_t body = m.position(0) + m.length(0);
  std::size_t close = s.find("```", body);
  if (close == std::string::npos) return std::nullopt;
  std::string code = s.substr(body, close - body);
  if (!code.empty() && code.back() != '\n') code += '\n';
  return code;
}

std::vector<std::string> elicit_properties(Gateway& gateway, std::string_view description) {
  if (trim(description).empty()) throw Error(Stage::Elicitation, "empty task description");
  return parse_numbered_list(
      gateway.complete(PromptStage::Elicit, "elicit", prompts::elicit(description)));
}

std::string synthesize(Gateway& gateway, std::string_view description, const StageOptions& options) {
  const std::string base = prompts::synthesize(description);
  std::string prompt = base;
  std::string last_problem;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    const std::string response = gateway.complete(PromptStage::Synthesize, "synthesize", prompt);
    auto code = extract_c_block(response);
    if (!code) {
      throw Error(Stage::Synthesis, "response contains no ```c code block:\n" + excerpt(response));
    }
    auto diag = compile_check(*code, options.compiler);
    if (diag.success) return *code;
    last_problem = "The program does not compile. Compiler errors:\n" + diag.text();
    prompt = prompts::retry_feedback(base, response, last_problem, attempt + 1);
  }
  throw Error(Stage::Synthesis, "no compiling program after " + std::to_string(options.max_retries) +
                                    " retries; last diagnostics:\n" + last_problem);
}

std::string annotate(Gateway& gateway, std::string_view description, const std::string& program,
                     const std::vector<std::string>& properties, const StageOptions& options) {
  if (properties.empty()) return program;
  const ProgramModel original = parse_program(normalize_assertions(program));
  const std::string base = prompts::annotate(description, program, properties);
  std::string prompt = base;
  std::string last_problem;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    const std::string response = gateway.complete(PromptStage::Annotate, "annotate", prompt);
    std::string problem;
    auto code = extract_c_block(response);
    if (!code) {
      problem = "The answer contains no ```c code block.";
    } else {
      try {
        std::string normalized = normalize_assertions(*code);
        auto diag = compile_check(normalized, options.compiler);
        if (!diag.success) {
          problem = "The annotated program does not compile. Compiler errors:\n" + diag.text();
        } else {
          ProgramModel annotated = parse_program(normalized);
          extract_assertions(annotated);
          auto cmp = compare_skeletons(original, annotated);
          if (cmp.equal) return normalized;
          problem = "The annotated program changes existing code:\n";
          for (const auto& p : cmp.problems) problem += "- " + p + "\n";
        }
      } catch (const FrontendError& e) {
        problem = std::string("The annotated program cannot be analysed: ") + e.what();
      }
    }
    last_problem = problem;
    prompt = prompts::retry_feedback(base, response, problem, attempt + 1);
  }
  throw Error(Stage::Annotation, "annotation rejected after " + std::to_string(options.max_retries) +
                                     " retries:\n" + last_problem);
}

UnwindValidator portfolio_unwind_validator(std::vector<SolverConfig> configs, unsigned bound,
                                           double timeout_seconds) {
  for (auto& c : configs) c.unwinding_assertions = true;
  return [configs = std::move(configs), bound,
          timeout_seconds](const std::string& program) -> std::optional<std::string> {
    const std::string bare = strip_assertions(parse_program(program));
    Verdict v = run_portfolio(configs, PortfolioInput(bare), bound, timeout_seconds);
    if (v.outcome != Outcome::Falsified) return std::nullopt;
    std::string report;
    for (const auto& run : v.runs) {
      if (!v.winning_solver || run.solver != *v.winning_solver) continue;
      std::istringstream in(run.transcript);
      std::string line;
      while (std::getline(in, line)) {
        if (line.find("unwinding assertion") != std::string::npos ||
            line.find("FAILURE") != std::string::npos) {
          report += trim(line) + "\n";
        }
      }
    }
    if (report.empty()) report = v.counterexample.value_or("a loop exceeds the unwind bound\n");
    return report;
  };
}

std::string bound_reduce(Gateway& gateway, const std::string& program, unsigned bound,
                         const StageOptions& options, const UnwindValidator& validator) {
  if (bound < 1) throw ConfigError("unwind bound must be at least 1");
  const ProgramModel before = parse_program(program);
  std::vector<std::string> predicates;
  for (const auto& a : extract_assertions(before)) predicates.push_back(a.predicate);

  const std::string base = prompts::bound_reduce(program, bound);
  std::string prompt = base;
  std::string last_problem;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    const std::string response = gateway.complete(PromptStage::BoundReduce, "bound_reduce", prompt);
    std::string problem;
    auto code = extract_c_block(response);
    std::vector<std::string> diffs;
    if (!code) {
      problem = "The answer contains no ```c code block.";
    } else if (!differs_only_in_constants(program, *code, &diffs)) {
      problem = "The program changes more than numeric constants.";
    } else {
      std::vector<std::string> after;
      for (const auto& a : extract_assertions(parse_program(*code))) after.push_back(a.predicate);
      auto diag = compile_check(*code, options.compiler);
      if (after != predicates) {
        problem = "Constants inside assert(...) statements were changed.";
      } else if (!diag.success) {
        problem = "The program does not compile. Compiler errors:\n" + diag.text();
      } else if (auto loops = validator ? validator(*code) : std::nullopt) {
        problem = "Some loops can still run more than " + std::to_string(bound) +
                  " iterations:\n" + *loops;
      } else {
        return *code;
      }
    }
    last_problem = problem;
    prompt = prompts::retry_feedback(base, response, problem, attempt + 1);
  }
  throw Error(Stage::BoundReduction, "bound reduction rejected after " +
                                         std::to_string(options.max_retries) + " retries:\n" +
                                         last_problem);
}

}  // namespace cofact
