#include "cofact/facts.hpp"

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cofact/error.hpp"
#include "cofact/frontend.hpp"
#include "cofact/lexer.hpp"
#include "cofact/prompts.hpp"

namespace cofact {

namespace {

constexpr std::string_view kSentencePrefix = "At this point in the program, ";

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings) warnings->push_back(std::move(msg));
}

std::string leading_whitespace(std::string_view src, std::size_t line_begin) {
  std::size_t i = line_begin;
  while (i < src.size() && (src[i] == ' ' || src[i] == '\t')) ++i;
  return std::string(src.substr(line_begin, i - line_begin));
}

}  // namespace

std::optional<std::size_t> PropertyMap::property_of(AssertionId id) const {
  auto it = entries.find(id);
  return it == entries.end() ? std::nullopt : it->second;
}

void PropertyMap::validate(std::size_t property_count) const {
  for (const auto& [id, p] : entries) {
    if (p && (*p < 1 || *p > property_count)) {
      throw ConsistencyError("assertion " + std::to_string(id.value) + " maps to property " +
                             std::to_string(*p) + " of " + std::to_string(property_count));
    }
  }
}

PropertyMap parse_property_answer(const std::string& answer, std::size_t assertion_count,
                                  std::size_t property_count) {
  PropertyMap map;
  for (std::size_t i = 1; i <= assertion_count; ++i) map.entries[AssertionId{i}] = std::nullopt;
  static const std::regex line(R"(A\s*(\d+)\s*[:=-]\s*(?:P\s*(\d+)|none))", std::regex::icase);
  for (auto it = std::sregex_iterator(answer.begin(), answer.end(), line);
       it != std::sregex_iterator(); ++it) {
    const std::size_t a = std::stoul((*it)[1].str());
    if (a < 1 || a > assertion_count) continue;
    if ((*it)[2].matched) {
      const std::size_t p = std::stoul((*it)[2].str());
      if (p >= 1 && p <= property_count) map.entries[AssertionId{a}] = p;
    }
  }
  return map;
}

PropertyMap map_to_properties(Gateway& gateway, const ProgramModel& annotated,
                              const AssertionSequence& sequence,
                              const std::vector<std::string>& properties,
                              std::vector<std::string>* warnings) {
  PropertyMap empty;
  for (const auto& a : sequence) empty.entries[*a.id] = std::nullopt;
  if (sequence.empty() || properties.empty()) return empty;
  std::vector<std::string> listed;
  for (const auto& a : sequence) {
    listed.push_back("assert(" + a.predicate + "); in function " + a.function);
  }
  try {
    const std::string answer = gateway.complete(
        PromptStage::MapProps, "map_props",
        prompts::map_properties(annotated.source, properties, listed));
    return parse_property_answer(answer, sequence.size(), properties.size());
  } catch (const GatewayError& e) {
    warn(warnings, std::string("property mapping unavailable, all assertions unmapped: ") + e.what());
    return empty;
  }
}

PropertyMap load_property_map(const std::filesystem::path& path, std::size_t property_count) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read property map " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (!j.is_object()) throw ConfigError("property map " + path.string() + " is not a JSON object");
  PropertyMap map;
  for (const auto& [key, value] : j.items()) {
    std::size_t id = 0;
    try {
      id = std::stoul(key);
    } catch (const std::exception&) {
      throw ConfigError("property map key '" + key + "' is not an assertion index");
    }
    if (value.is_null()) {
      map.entries[AssertionId{id}] = std::nullopt;
    } else if (value.is_number_unsigned()) {
      map.entries[AssertionId{id}] = value.get<std::size_t>();
    } else {
      throw ConfigError("property map value for '" + key + "' must be an index or null");
    }
  }
  try {
    map.validate(property_count);
  } catch (const ConsistencyError& e) {
    throw ConfigError(e.what());
  }
  return map;
}

std::string template_fact(const Assertion& assertion) {
  return std::string(kSentencePrefix) + "the condition `" + assertion.predicate + "` holds.";
}

std::string fact_prompt_program(const ProgramModel& model, const Assertion& assertion) {
  auto all = extract_assertions(model);
  RoleMap roles;
  for (const auto& a : all) {
    roles[a.statement.begin] = a.statement == assertion.statement ? AssertionRole::KeepAsAssert
                                                                  : AssertionRole::Drop;
  }
  const ProgramModel single = parse_program(render_with_roles(model, all, roles, ""));
  const Function* fn = single.find(assertion.function);
  if (!fn) throw ConsistencyError("function " + assertion.function + " vanished while rendering");

  std::set<std::string> helpers;
  const TokenStream ts = tokenize(assertion.predicate);
  for (const auto& t : ts.tokens) {
    if (t.kind != TokenKind::Identifier) continue;
    std::string name(t.text(assertion.predicate));
    if (name != assertion.function && single.find(name)) helpers.insert(name);
  }
  std::string out = trim(single.global_code) + "\n\n";
  for (const auto& f : single.functions) {
    if (helpers.contains(f.name)) {
      out += single.source.substr(f.extent.begin, f.extent.size()) + "\n\n";
    }
  }
  out += single.source.substr(fn->extent.begin, fn->extent.size()) + "\n";
  return out;
}

std::string translate_fact(Gateway* gateway, const ProgramModel& model, const Assertion& assertion,
                           std::vector<std::string>* warnings) {
  if (!gateway) return template_fact(assertion);
  std::string answer;
  try {
    answer = gateway->complete(PromptStage::TranslateFact, "translate_fact",
                               prompts::translate_fact(fact_prompt_program(model, assertion)));
  } catch (const GatewayError& e) {
    warn(warnings, "fact translation for assert(" + assertion.predicate +
                       ") fell back to the template: " + e.what());
    return template_fact(assertion);
  }
  std::istringstream in(answer);
  std::string line;
  while (std::getline(in, line)) {
    auto pos = line.find("//FACT:");
    if (pos == std::string::npos) continue;
    std::string sentence = trim(std::string_view(line).substr(pos + 7));
    if (sentence.rfind(kSentencePrefix, 0) == 0 && sentence.size() > kSentencePrefix.size()) {
      return sentence;
    }
    break;
  }
  warn(warnings, "fact translation for assert(" + assertion.predicate +
                     ") had no usable //FACT line; used the template");
  return template_fact(assertion);
}

std::vector<VerifiedFact> build_facts(const AssertionSequence& sequence, const VerifyRunResult& result,
                                      unsigned bound,
                                      const std::map<AssertionId, std::string>& sentences) {
  std::vector<VerifiedFact> out;
  const AssertionIdSet attempted = result.attempted();
  for (const auto& a : sequence) {
    const AssertionId id = *a.id;
    auto entry = result.ig.entries.find(id);
    if (entry == result.ig.entries.end()) continue;
    VerifiedFact f;
    f.assertion = id;
    f.bound = bound;
    auto s = sentences.find(id);
    f.text = s != sentences.end() ? s->second : template_fact(a);
    if (!entry->second.empty()) {
      f.dependency_indices = dependency_closure(result.ig, attempted, id);
      f.conditional = !f.dependency_indices.empty();
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::string fact_comment(const VerifiedFact& fact) {
  std::string out = "//FACT[k=" + std::to_string(fact.bound);
  if (fact.conditional) out += ", cond";
  out += "]: " + fact.text;
  if (fact.conditional) out += " (depends on: " + to_string(fact.dependency_indices) + ")";
  return out;
}

std::string embed_facts(const std::string& p0, const ProgramModel& annotated,
                        const AssertionSequence& sequence, const std::vector<VerifiedFact>& facts) {
  if (facts.empty()) return p0;
  const ProgramModel base = parse_program(p0);
  const LineIndex annotated_lines(annotated.source);
  const LineIndex base_lines(base.source);

  // Stable by insertion offset so facts sharing a position keep sequence order.
  std::vector<std::pair<std::size_t, std::string>> inserts;
  for (const auto& fact : facts) {
    const Assertion& a = sequence.at(fact.assertion);
    const Function* fn = base.find(a.function);
    if (!fn) {
      throw ConsistencyError("function " + a.function + " of assertion " +
                             std::to_string(fact.assertion.value) + " is not in the base program");
    }
    const std::size_t offset = logical_line_insertion_offset(base, *fn, a.logical_line);
    std::string indent;
    if (a.source_line >= 1 && a.source_line <= annotated_lines.line_count()) {
      indent = leading_whitespace(annotated.source, annotated_lines.line_start(a.source_line));
    } else {
      const std::size_t next = base_lines.line_of(std::min(offset, base.source.size()));
      indent = leading_whitespace(base.source, base_lines.line_start(next));
    }
    inserts.emplace_back(offset, indent + fact_comment(fact) + "\n");
  }
  std::stable_sort(inserts.begin(), inserts.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });

  std::string out;
  out.reserve(p0.size() + inserts.size() * 80);
  std::size_t cursor = 0;
  for (const auto& [offset, text] : inserts) {
    out.append(base.source, cursor, offset - cursor);
    // The insertion point is a line start; a body line without a trailing newline
    // cannot occur because the closing brace follows it.
    out += text;
    cursor = offset;
  }
  out.append(base.source, cursor);
  return out;
}

std::string strip_facts(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::size_t end = nl == std::string::npos ? text.size() : nl + 1;
    std::string_view line(text.data() + pos, end - pos);
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (line.substr(i, 6) != "//FACT") out.append(line);
    pos = end;
  }
  return out;
}

}  // namespace cofact
