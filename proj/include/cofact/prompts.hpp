#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cofact::prompts {

std::string elicit(std::string_view description);
std::string synthesize(std::string_view description);
std::string annotate(std::string_view description, std::string_view program,
                     const std::vector<std::string>& properties);
std::string bound_reduce(std::string_view program, unsigned bound);
std::string map_properties(std::string_view program, const std::vector<std::string>& properties,
                           const std::vector<std::string>& assertions);
std::string translate_fact(std::string_view program);

// Appended to a previous prompt when its answer was rejected.
std::string retry_feedback(std::string_view previous_prompt, std::string_view previous_answer,
                           std::string_view problem, int attempt);

// "1. a\n2. b" rendering used in prompts.
std::string numbered(const std::vector<std::string>& items);

}  // namespace cofact::prompts
