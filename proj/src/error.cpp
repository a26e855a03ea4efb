#include "cofact/error.hpp"

namespace cofact {

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::Usage: return "usage";
    case Stage::Frontend: return "frontend";
    case Stage::Elicitation: return "elicitation";
    case Stage::Synthesis: return "synthesis";
    case Stage::Annotation: return "annotation";
    case Stage::BoundReduction: return "bound-reduction";
    case Stage::Traversal: return "traversal";
    case Stage::Verification: return "verification";
    case Stage::Environment: return "environment";
    case Stage::Gateway: return "gateway";
    case Stage::Facts: return "facts";
    case Stage::Internal: return "internal";
  }
  return "internal";
}

int exit_code(Stage stage) {
  switch (stage) {
    case Stage::Usage: return 2;
    case Stage::Frontend: return 3;
    case Stage::Elicitation: return 4;
    case Stage::Synthesis: return 5;
    case Stage::Annotation: return 6;
    case Stage::BoundReduction: return 7;
    case Stage::Traversal: return 8;
    case Stage::Verification: return 9;
    case Stage::Environment: return 10;
    case Stage::Gateway: return 11;
    case Stage::Facts: return 12;
    case Stage::Internal: return 70;
  }
  return 70;
}

}  // namespace cofact
