#include "cofact/frontend.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>
#include <optional>
#include <set>

#include "cofact/error.hpp"
#include "cofact/lexer.hpp"

namespace cofact {
namespace {

// ---------------------------------------------------------------------------
// Dialect registry
// ---------------------------------------------------------------------------

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::vector<AssumeDialect>& registry() {
  static std::vector<AssumeDialect> dialects = {
      {"cbmc", "__CPROVER_assume", "void __CPROVER_assume(_Bool assumption);\n"},
      {"esbmc", "__ESBMC_assume", "void __ESBMC_assume(_Bool assumption);\n"},
  };
  return dialects;
}

// ---------------------------------------------------------------------------
// Assertion statement recognition
// ---------------------------------------------------------------------------

struct AssertStatement {
  std::size_t keyword;  // token indices
  std::size_t lparen;
  std::size_t rparen;
  std::size_t semicolon;
};

bool is_keyword_assert(const TokenStream& ts, std::string_view src, std::size_t i) {
  const Token& t = ts.tokens[i];
  return t.kind == TokenKind::Identifier && t.is(src, "assert") && i + 1 < ts.tokens.size() &&
         ts.tokens[i + 1].is(src, "(");
}

// A `:` ending a case/default label or a goto label.
bool is_label_colon(const TokenStream& ts, std::string_view src, std::size_t colon) {
  std::size_t j = colon;
  while (j > 0) {
    const Token& t = ts.tokens[j - 1];
    if (t.is(src, ";") || t.is(src, "{") || t.is(src, "}") || t.kind == TokenKind::Directive) break;
    --j;
  }
  if (j >= colon) return false;
  const Token& first = ts.tokens[j];
  if (first.is(src, "case") || first.is(src, "default")) return true;
  return colon == j + 1 && first.kind == TokenKind::Identifier;
}

enum class Position { Statement, ControlBody, Expression };

Position classify_position(const TokenStream& ts, std::string_view src, std::size_t i) {
  if (i == 0) return Position::Statement;
  const Token& prev = ts.tokens[i - 1];
  if (prev.kind == TokenKind::Directive) return Position::Statement;
  if (prev.is(src, ";") || prev.is(src, "{") || prev.is(src, "}")) return Position::Statement;
  if (prev.is(src, ":")) {
    return is_label_colon(ts, src, i - 1) ? Position::Statement : Position::Expression;
  }
  if (prev.is(src, ")") || prev.is(src, "else") || prev.is(src, "do")) {
    if (prev.is(src, ")")) {
      // Only a control header `if (...)`, `while (...)`, `for (...)` can put
      // a statement right after a closing parenthesis.
      int depth = 0;
      std::size_t j = i - 1;
      while (true) {
        const Token& t = ts.tokens[j];
        if (t.is(src, ")")) {
          ++depth;
        } else if (t.is(src, "(") && --depth == 0) {
          if (j > 0) {
            const Token& head = ts.tokens[j - 1];
            if (head.is(src, "if") || head.is(src, "while") || head.is(src, "for") ||
                head.is(src, "switch")) {
              return Position::ControlBody;
            }
          }
          return Position::Expression;
        }
        if (j == 0) break;
        --j;
      }
      return Position::Expression;
    }
    return Position::ControlBody;
  }
  return Position::Expression;
}

std::size_t line_of(std::string_view src, std::size_t offset) {
  return static_cast<std::size_t>(std::count(src.begin(), src.begin() + offset, '\n')) + 1;
}

// Parses `assert ( ... ) ;` starting at token `i`. Returns nullopt when the
// parenthesised expression is not followed by `;`. Throws on unbalanced
// parentheses.
std::optional<AssertStatement> match_assert(const TokenStream& ts, std::string_view src,
                                            std::size_t i) {
  const auto& toks = ts.tokens;
  int depth = 0;
  for (std::size_t j = i + 1; j < toks.size(); ++j) {
    const Token& t = toks[j];
    if (t.is(src, "(")) ++depth;
    else if (t.is(src, ")")) {
      if (--depth == 0) {
        if (j + 1 < toks.size() && toks[j + 1].is(src, ";")) {
          return AssertStatement{i, i + 1, j, j + 1};
        }
        return std::nullopt;
      }
    } else if (t.is(src, ";") || t.is(src, "{") || t.is(src, "}") ||
               t.kind == TokenKind::Directive) {
      break;
    }
  }
  throw FrontendError("unbalanced parentheses in assert at line " +
                      std::to_string(line_of(src, toks[i].offset)));
}

std::vector<AssertStatement> find_assert_statements(const TokenStream& ts, std::string_view src,
                                                    std::size_t first, std::size_t last) {
  std::vector<AssertStatement> out;
  for (std::size_t i = first; i < last; ++i) {
    if (!is_keyword_assert(ts, src, i)) continue;
    Position pos = classify_position(ts, src, i);
    if (pos == Position::Expression) continue;
    if (pos == Position::ControlBody) {
      throw FrontendError("assert used as an unbraced control-statement body at line " +
                          std::to_string(line_of(src, ts.tokens[i].offset)) +
                          "; wrap it in braces");
    }
    if (auto st = match_assert(ts, src, i)) {
      out.push_back(*st);
      i = st->semicolon;
    }
  }
  return out;
}

std::size_t token_index_at_or_after(const TokenStream& ts, std::size_t offset) {
  auto it = std::lower_bound(ts.tokens.begin(), ts.tokens.end(), offset,
                             [](const Token& t, std::size_t off) { return t.offset < off; });
  return static_cast<std::size_t>(it - ts.tokens.begin());
}

// ---------------------------------------------------------------------------
// Per-function layout: which body lines carry skeleton tokens.
// ---------------------------------------------------------------------------

struct FunctionLayout {
  std::vector<AssertStatement> asserts;
  // Physical lines (ascending) that carry at least one non-assertion body token.
  std::vector<std::size_t> skeleton_lines;
  // Offsets of non-assertion body tokens.
  std::vector<std::size_t> skeleton_token_offsets;

  // Number of skeleton lines with a token strictly before `offset`.
  std::size_t logical_line_at(const LineIndex& lines, std::size_t offset) const {
    std::size_t line = lines.line_of(offset);
    std::size_t before = static_cast<std::size_t>(
        std::lower_bound(skeleton_lines.begin(), skeleton_lines.end(), line) -
        skeleton_lines.begin());
    auto it = std::lower_bound(skeleton_token_offsets.begin(), skeleton_token_offsets.end(),
                               lines.line_start(line));
    if (it != skeleton_token_offsets.end() && *it < offset && lines.line_of(*it) == line) {
      ++before;
    }
    return before;
  }

  // Number of skeleton lines up to and including the line of `offset`.
  std::size_t lines_through(const LineIndex& lines, std::size_t offset) const {
    std::size_t line = lines.line_of(offset);
    return static_cast<std::size_t>(
        std::upper_bound(skeleton_lines.begin(), skeleton_lines.end(), line) -
        skeleton_lines.begin());
  }
};

FunctionLayout layout_function(const TokenStream& ts, std::string_view src,
                               const LineIndex& lines, const Function& fn) {
  FunctionLayout layout;
  std::size_t first = token_index_at_or_after(ts, fn.body.begin);
  std::size_t last = token_index_at_or_after(ts, fn.body.end);
  layout.asserts = find_assert_statements(ts, src, first, last);

  std::size_t next_assert = 0;
  for (std::size_t i = first; i < last; ++i) {
    if (next_assert < layout.asserts.size() && i == layout.asserts[next_assert].keyword) {
      i = layout.asserts[next_assert].semicolon;
      ++next_assert;
      continue;
    }
    std::size_t off = ts.tokens[i].offset;
    layout.skeleton_token_offsets.push_back(off);
    std::size_t line = lines.line_of(off);
    if (layout.skeleton_lines.empty() || layout.skeleton_lines.back() != line) {
      layout.skeleton_lines.push_back(line);
    }
  }
  return layout;
}

struct Analysis {
  TokenStream ts;
  LineIndex lines;
  std::vector<FunctionLayout> layouts;  // parallel to model.functions
};

Analysis analyze(const ProgramModel& model) {
  Analysis a{tokenize(model.source), LineIndex(model.source), {}};
  for (const auto& fn : model.functions) {
    a.layouts.push_back(layout_function(a.ts, model.source, a.lines, fn));
  }
  return a;
}

std::string flatten_statement(std::string_view text) {
  // Convert line comments first so that joining lines cannot swallow code.
  std::string converted;
  converted.reserve(text.size() + 8);
  for (std::size_t i = 0; i < text.size();) {
    char c = text[i];
    if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < text.size() && text[j] != c) {
        if (text[j] == '\\') ++j;
        ++j;
      }
      converted.append(text.substr(i, j + 1 - i));
      i = j + 1;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
      std::size_t j = text.find("*/", i + 2);
      j = j == std::string_view::npos ? text.size() : j + 2;
      converted.append(text.substr(i, j - i));
      i = j;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      std::size_t j = text.find('\n', i);
      if (j == std::string_view::npos) j = text.size();
      std::string_view body = text.substr(i + 2, j - i - 2);
      if (body.find("*/") != std::string_view::npos) {
        throw FrontendError("line comment containing '*/' inside a multi-line assert");
      }
      while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back()))) {
        body.remove_suffix(1);
      }
      converted += "/*";
      converted.append(body);
      converted += " */";
      i = j;
      continue;
    }
    converted.push_back(c);
    ++i;
  }

  std::string out;
  out.reserve(converted.size());
  for (std::size_t i = 0; i < converted.size();) {
    if (std::isspace(static_cast<unsigned char>(converted[i]))) {
      std::size_t j = i;
      bool newline = false;
      while (j < converted.size() && std::isspace(static_cast<unsigned char>(converted[j]))) {
        newline = newline || converted[j] == '\n';
        ++j;
      }
      if (newline) {
        out.push_back(' ');
      } else {
        out.append(converted, i, j - i);
      }
      i = j;
      continue;
    }
    out.push_back(converted[i]);
    ++i;
  }
  return out;
}

bool is_include_directive(std::string_view text) {
  std::size_t i = 1;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  return text.substr(i, 7) == "include";
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<CallEdge> CallGraph::calls_from(std::string_view caller) const {
  std::vector<CallEdge> out;
  for (const auto& e : edges) {
    if (e.caller == caller) out.push_back(e);
  }
  return out;
}

bool CallGraph::has_node(std::string_view name) const {
  return std::find(nodes.begin(), nodes.end(), name) != nodes.end();
}

void register_dialect(AssumeDialect dialect) {
  std::lock_guard lock(registry_mutex());
  auto& reg = registry();
  for (auto& d : reg) {
    if (d.id == dialect.id) {
      d = std::move(dialect);
      return;
    }
  }
  reg.push_back(std::move(dialect));
}

const AssumeDialect& find_dialect(std::string_view id) {
  std::lock_guard lock(registry_mutex());
  for (const auto& d : registry()) {
    if (d.id == id) return d;
  }
  throw ConfigError("unregistered assume dialect '" + std::string(id) + "'");
}

std::string normalize_assertions(std::string_view source) {
  TokenStream ts = tokenize(source);
  auto stmts = find_assert_statements(ts, source, 0, ts.tokens.size());
  std::string out;
  out.reserve(source.size());
  std::size_t cursor = 0;
  for (const auto& st : stmts) {
    std::size_t begin = ts.tokens[st.keyword].offset;
    std::size_t end = ts.tokens[st.semicolon].end();
    std::string_view text = source.substr(begin, end - begin);
    if (text.find('\n') == std::string_view::npos) continue;
    out.append(source.substr(cursor, begin - cursor));
    out += flatten_statement(text);
    cursor = end;
  }
  out.append(source.substr(cursor));
  return out;
}

ProgramModel parse_program(std::string source, unsigned unwind_bound) {
  ProgramModel model;
  model.source = std::move(source);
  model.unwind_bound = unwind_bound;
  const std::string_view src = model.source;
  TokenStream ts = tokenize(src);
  const auto& toks = ts.tokens;

  std::size_t unit_start = 0;  // first token of the current file-scope declaration
  int depth = 0;
  std::set<std::string> seen;

  for (std::size_t i = 0; i < toks.size(); ++i) {
    const Token& t = toks[i];
    if (t.kind == TokenKind::Directive) {
      if (depth == 0) unit_start = i + 1;
      continue;
    }
    if (t.is(src, "{")) {
      if (depth == 0 && i > 0 && toks[i - 1].is(src, ")")) {
        // Walk back over the parameter list (and any trailing attributes) to
        // the function name.
        std::optional<std::size_t> name_index;
        std::size_t close = i - 1;
        while (true) {
          int pd = 0;
          std::size_t j = close;
          bool matched = false;
          while (true) {
            if (toks[j].is(src, ")")) ++pd;
            else if (toks[j].is(src, "(") && --pd == 0) {
              matched = true;
              break;
            }
            if (j == 0) break;
            --j;
          }
          if (!matched || j == 0) break;
          const Token& before = toks[j - 1];
          if (before.kind == TokenKind::Identifier &&
              (before.is(src, "__attribute__") || before.is(src, "__declspec"))) {
            if (j < 2 || !toks[j - 2].is(src, ")")) break;
            close = j - 2;
            continue;
          }
          if (before.kind == TokenKind::Identifier) name_index = j - 1;
          break;
        }
        bool initializer = false;
        for (std::size_t k = unit_start; k < i; ++k) {
          if (toks[k].is(src, "=")) initializer = true;
        }
        if (name_index && !initializer) {
          int bd = 0;
          std::size_t j = i;
          for (; j < toks.size(); ++j) {
            if (toks[j].is(src, "{")) ++bd;
            else if (toks[j].is(src, "}") && --bd == 0) break;
          }
          if (j >= toks.size()) {
            throw FrontendError("unbalanced braces in function starting at line " +
                                std::to_string(line_of(src, t.offset)));
          }
          Function fn;
          fn.name = std::string(toks[*name_index].text(src));
          fn.extent = {toks[unit_start].offset, toks[j].end()};
          fn.body = {t.end(), toks[j].offset};
          fn.line = line_of(src, toks[*name_index].offset);
          if (!seen.insert(fn.name).second) {
            throw FrontendError("function '" + fn.name + "' is defined more than once");
          }
          model.functions.push_back(std::move(fn));
          i = j;
          unit_start = j + 1;
          continue;
        }
      }
      ++depth;
      continue;
    }
    if (t.is(src, "}")) {
      if (--depth < 0) {
        throw FrontendError("unbalanced '}' at line " + std::to_string(line_of(src, t.offset)));
      }
      continue;
    }
    if (depth == 0 && t.is(src, ";")) unit_start = i + 1;
  }
  if (depth != 0) throw FrontendError("unbalanced braces at end of input");

  std::size_t cursor = 0;
  for (const auto& fn : model.functions) {
    model.global_code.append(src.substr(cursor, fn.extent.begin - cursor));
    cursor = fn.extent.end;
  }
  model.global_code.append(src.substr(cursor));
  return model;
}

CallGraph build_call_graph(const ProgramModel& model) {
  CallGraph cg;
  for (const auto& fn : model.functions) cg.nodes.push_back(fn.name);
  Analysis a = analyze(model);
  const std::string_view src = model.source;
  const auto& toks = a.ts.tokens;

  for (std::size_t f = 0; f < model.functions.size(); ++f) {
    const Function& fn = model.functions[f];
    const FunctionLayout& layout = a.layouts[f];
    std::size_t first = token_index_at_or_after(a.ts, fn.body.begin);
    std::size_t last = token_index_at_or_after(a.ts, fn.body.end);
    for (std::size_t i = first; i < last; ++i) {
      const Token& t = toks[i];
      if (t.kind != TokenKind::Identifier || i + 1 >= last || !toks[i + 1].is(src, "(")) continue;
      if (i > 0 && (toks[i - 1].is(src, ".") || toks[i - 1].is(src, "->"))) continue;
      std::string_view name = t.text(src);
      if (!model.find(name)) continue;

      std::size_t line = layout.lines_through(a.lines, t.offset);
      for (const auto& st : layout.asserts) {
        if (i > st.keyword && i < st.semicolon) {
          line = layout.logical_line_at(a.lines, toks[st.keyword].offset);
        }
      }
      CallEdge edge{fn.name, std::string(name), line, t.offset};
      bool duplicate = std::any_of(cg.edges.begin(), cg.edges.end(), [&](const CallEdge& e) {
        return e.caller == edge.caller && e.callee == edge.callee &&
               e.call_site_logical_line == edge.call_site_logical_line;
      });
      if (!duplicate) cg.edges.push_back(std::move(edge));
    }
  }
  return cg;
}

std::vector<Assertion> extract_assertions(const ProgramModel& model) {
  Analysis a = analyze(model);
  const std::string_view src = model.source;
  const auto& toks = a.ts.tokens;

  // Assertions at file scope (outside every function extent) are rejected.
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].kind != TokenKind::Identifier || !toks[i].is(src, "assert")) continue;
    if (i + 1 >= toks.size() || !toks[i + 1].is(src, "(")) continue;
    bool inside = std::any_of(model.functions.begin(), model.functions.end(),
                              [&](const Function& fn) { return fn.extent.contains(toks[i].offset); });
    if (!inside) {
      throw FrontendError("assert outside any function at line " +
                          std::to_string(a.lines.line_of(toks[i].offset)));
    }
  }

  std::vector<Assertion> out;
  for (std::size_t f = 0; f < model.functions.size(); ++f) {
    const Function& fn = model.functions[f];
    for (const auto& st : a.layouts[f].asserts) {
      const Token& kw = toks[st.keyword];
      const Token& semi = toks[st.semicolon];
      std::size_t line = a.lines.line_of(kw.offset);
      if (a.lines.line_of(semi.offset) != line) {
        throw FrontendError("assert at line " + std::to_string(line) +
                            " spans several lines; normalize assertions first");
      }
      Assertion as;
      as.function = fn.name;
      as.logical_line = a.layouts[f].logical_line_at(a.lines, kw.offset);
      std::size_t pbegin = toks[st.lparen].end();
      std::size_t pend = toks[st.rparen].offset;
      as.predicate = std::string(src.substr(pbegin, pend - pbegin));
      as.statement = {kw.offset, semi.end()};
      as.keyword = {kw.offset, kw.end()};
      as.source_line = line;
      bool blank = std::all_of(as.predicate.begin(), as.predicate.end(),
                               [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
      if (blank) {
        throw FrontendError("assert with an empty predicate at line " + std::to_string(line));
      }
      out.push_back(std::move(as));
    }
  }
  return out;
}

std::size_t skeleton_length(const ProgramModel& model, const Function& fn) {
  TokenStream ts = tokenize(model.source);
  LineIndex lines(model.source);
  return layout_function(ts, model.source, lines, fn).skeleton_lines.size();
}

std::string render_with_roles(const ProgramModel& model, const std::vector<Assertion>& assertions,
                              const RoleMap& roles, std::string_view dialect_id) {
  const AssumeDialect* dialect = nullptr;
  bool needs_dialect = std::any_of(roles.begin(), roles.end(), [](const auto& kv) {
    return kv.second == AssertionRole::ConvertToAssume;
  });
  if (needs_dialect || !dialect_id.empty()) dialect = &find_dialect(dialect_id);

  const std::string_view src = model.source;
  TokenStream ts = tokenize(src);
  LineIndex lines(src);

  struct Edit {
    SourceSpan span;
    std::string replacement;
  };
  std::vector<Edit> edits;

  std::map<std::size_t, std::vector<const Assertion*>> by_line;
  for (const auto& as : assertions) {
    if (!roles.contains(as.statement.begin)) {
      throw ConsistencyError("no role assigned to assertion '" + as.predicate + "' in " +
                             as.function);
    }
    by_line[as.source_line].push_back(&as);
  }

  for (const auto& [line, group] : by_line) {
    std::size_t begin = lines.line_start(line);
    std::size_t end = lines.line_end(line);
    bool only_assertions = true;
    for (std::size_t i = token_index_at_or_after(ts, begin);
         i < ts.tokens.size() && ts.tokens[i].offset < end; ++i) {
      std::size_t off = ts.tokens[i].offset;
      bool covered = std::any_of(group.begin(), group.end(),
                                 [&](const Assertion* a) { return a->statement.contains(off); });
      if (!covered) {
        only_assertions = false;
        break;
      }
    }
    bool all_dropped = std::all_of(group.begin(), group.end(), [&](const Assertion* a) {
      return roles.at(a->statement.begin) == AssertionRole::Drop;
    });
    if (only_assertions && all_dropped) {
      edits.push_back({{begin, end}, ""});
      continue;
    }
    for (const Assertion* as : group) {
      switch (roles.at(as->statement.begin)) {
        case AssertionRole::KeepAsAssert: break;
        case AssertionRole::ConvertToAssume:
          edits.push_back({as->keyword, dialect->intrinsic});
          break;
        case AssertionRole::Drop:
          edits.push_back({as->statement, ""});
          break;
      }
    }
  }

  std::sort(edits.begin(), edits.end(),
            [](const Edit& a, const Edit& b) { return a.span.begin < b.span.begin; });
  std::string out;
  out.reserve(src.size());
  std::size_t cursor = 0;
  for (const auto& e : edits) {
    out.append(src.substr(cursor, e.span.begin - cursor));
    out += e.replacement;
    cursor = e.span.end;
  }
  out.append(src.substr(cursor));
  return out;
}

std::string strip_assertions(const ProgramModel& model) {
  auto assertions = extract_assertions(model);
  RoleMap roles;
  for (const auto& a : assertions) roles[a.statement.begin] = AssertionRole::Drop;
  return render_with_roles(model, assertions, roles, "");
}

std::size_t logical_line_insertion_offset(const ProgramModel& model, const Function& fn,
                                          std::size_t logical_line) {
  TokenStream ts = tokenize(model.source);
  LineIndex lines(model.source);
  FunctionLayout layout = layout_function(ts, model.source, lines, fn);
  if (logical_line > layout.skeleton_lines.size()) {
    throw ConsistencyError("logical line " + std::to_string(logical_line) + " is outside " +
                           fn.name + " (" + std::to_string(layout.skeleton_lines.size()) +
                           " statement lines)");
  }
  std::size_t line = logical_line == 0 ? lines.line_of(fn.body.begin)
                                       : layout.skeleton_lines[logical_line - 1];
  return lines.line_end(line);
}

SkeletonComparison compare_skeletons(const ProgramModel& original, const ProgramModel& annotated) {
  SkeletonComparison cmp;
  ProgramModel base = parse_program(strip_assertions(original));
  ProgramModel target = parse_program(strip_assertions(annotated));

  // Body lines as token sequences; signature as a flat token sequence.
  auto shape = [](const ProgramModel& m, const Function& fn) {
    TokenStream ts = tokenize(m.source);
    LineIndex lines(m.source);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> signature;
    std::size_t last_line = 0;
    for (const auto& t : ts.tokens) {
      if (t.offset < fn.extent.begin || t.offset >= fn.extent.end) continue;
      if (t.offset < fn.body.begin) {
        signature.emplace_back(t.text(m.source));
        continue;
      }
      if (t.offset >= fn.body.end) continue;
      std::size_t line = lines.line_of(t.offset);
      if (rows.empty() || line != last_line) rows.emplace_back();
      rows.back().emplace_back(t.text(m.source));
      last_line = line;
    }
    return std::make_pair(signature, rows);
  };

  for (const auto& fn : base.functions) {
    const Function* other = target.find(fn.name);
    if (!other) {
      cmp.problems.push_back("function '" + fn.name + "' was removed");
      continue;
    }
    auto [sig_a, rows_a] = shape(base, fn);
    auto [sig_b, rows_b] = shape(target, *other);
    if (sig_a != sig_b) cmp.problems.push_back("signature of '" + fn.name + "' changed");
    if (rows_a != rows_b) cmp.problems.push_back("body of '" + fn.name + "' changed");
  }

  auto annotated_assertions = extract_assertions(annotated);
  for (const auto& fn : annotated.functions) {
    if (original.find(fn.name)) continue;
    cmp.added_functions.push_back(fn.name);
    for (const auto& a : annotated_assertions) {
      if (a.function == fn.name) {
        cmp.problems.push_back("added helper '" + fn.name + "' contains an assertion");
        break;
      }
    }
  }

  // Existing assertions must survive.
  std::multiset<std::tuple<std::string, std::size_t, std::string>> kept;
  for (const auto& a : annotated_assertions) kept.insert({a.function, a.logical_line, a.predicate});
  for (const auto& a : extract_assertions(original)) {
    auto it = kept.find({a.function, a.logical_line, a.predicate});
    if (it == kept.end()) {
      cmp.problems.push_back("existing assertion '" + a.predicate + "' in " + a.function +
                             " was removed or moved");
    } else {
      kept.erase(it);
    }
  }

  // Global code may only grow (includes, helper prototypes).
  auto global_tokens = [](const std::string& code) {
    TokenStream ts = tokenize(code);
    std::vector<std::string> out;
    for (const auto& t : ts.tokens) {
      if (t.kind == TokenKind::Directive && is_include_directive(t.text(code))) continue;
      out.emplace_back(t.text(code));
    }
    return out;
  };
  auto ga = global_tokens(base.global_code);
  auto gb = global_tokens(target.global_code);
  std::size_t j = 0;
  for (std::size_t i = 0; i < gb.size() && j < ga.size(); ++i) {
    if (gb[i] == ga[j]) ++j;
  }
  if (j != ga.size()) cmp.problems.push_back("global code was modified");

  cmp.equal = cmp.problems.empty();
  return cmp;
}

bool differs_only_in_constants(std::string_view before, std::string_view after,
                               std::vector<std::string>* differences) {
  struct Flat {
    std::string text;
    bool number;
    std::size_t line;
  };
  auto flatten = [](std::string_view src) {
    std::vector<Flat> out;
    TokenStream ts = tokenize(src);
    for (const auto& t : ts.tokens) {
      std::size_t line = line_of(src, t.offset);
      if (t.kind == TokenKind::Directive) {
        std::string_view body = t.text(src).substr(1);
        out.push_back({"#", false, line});
        TokenStream inner = tokenize(body);
        for (const auto& it : inner.tokens) {
          out.push_back({std::string(it.text(body)), it.kind == TokenKind::Number, line});
        }
        out.push_back({"<eol>", false, line});
        continue;
      }
      out.push_back({std::string(t.text(src)), t.kind == TokenKind::Number, line});
    }
    return out;
  };
  auto a = flatten(before);
  auto b = flatten(after);
  if (a.size() != b.size()) {
    if (differences) differences->push_back("token structure changed");
    return false;
  }
  bool ok = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].text == b[i].text) continue;
    if (a[i].number && b[i].number) {
      if (differences) {
        differences->push_back("line " + std::to_string(a[i].line) + ": " + a[i].text + " -> " +
                               b[i].text);
      }
      continue;
    }
    if (differences) {
      differences->push_back("line " + std::to_string(a[i].line) + ": '" + a[i].text +
                             "' changed to '" + b[i].text + "'");
    }
    ok = false;
  }
  return ok;
}

}  // namespace cofact
