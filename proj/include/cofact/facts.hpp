#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cofact/gateway.hpp"
#include "cofact/model.hpp"
#include "cofact/traversal.hpp"
#include "cofact/verifier.hpp"

namespace cofact {

// Property index (1-based into the elicited list) per assertion; nullopt
// means unmapped.
struct PropertyMap {
  std::map<AssertionId, std::optional<std::size_t>> entries;

  std::optional<std::size_t> property_of(AssertionId id) const;
  // Throws ConsistencyError if an index is outside 1..property_count.
  void validate(std::size_t property_count) const;
};

// Parses "A<n>: P<m>" / "A<n>: none" lines. Unlisted or out-of-range
// assertions stay unmapped.
PropertyMap parse_property_answer(const std::string& answer, std::size_t assertion_count,
                                  std::size_t property_count);

// Falls back to all-unmapped (and appends a warning) when the gateway fails.
PropertyMap map_to_properties(Gateway& gateway, const ProgramModel& annotated,
                              const AssertionSequence& sequence,
                              const std::vector<std::string>& properties,
                              std::vector<std::string>* warnings = nullptr);

// Sidecar JSON {"1": 2, "2": null}.
PropertyMap load_property_map(const std::filesystem::path& path, std::size_t property_count);

std::string template_fact(const Assertion& assertion);

// The enclosing function with only `assertion` kept, prefixed by global code
// and the helper functions it calls.
std::string fact_prompt_program(const ProgramModel& model, const Assertion& assertion);

// Sentence from the model, or the template when the gateway fails or the
// answer does not have the expected shape.
std::string translate_fact(Gateway* gateway, const ProgramModel& model, const Assertion& assertion,
                           std::vector<std::string>* warnings = nullptr);

// Facts for every verified or conditionally verified assertion, in sequence
// order, with dependency indices from the dependency closure.
std::vector<VerifiedFact> build_facts(const AssertionSequence& sequence, const VerifyRunResult& result,
                                      unsigned bound,
                                      const std::map<AssertionId, std::string>& sentences);

std::string fact_comment(const VerifiedFact& fact);

// Inserts one comment line per fact into the assertion-free program at the
// logical position of its assertion. `annotated` supplies positions and
// indentation. Throws ConsistencyError when a position is out of range.
std::string embed_facts(const std::string& p0, const ProgramModel& annotated,
                        const AssertionSequence& sequence, const std::vector<VerifiedFact>& facts);

// Removes every line whose first non-blank characters are `//FACT`.
std::string strip_facts(const std::string& text);

}  // namespace cofact
