#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cofact {

struct CompilerSettings {
  std::string compiler = "gcc";
  // Syntax-only; a missing #include <assert.h> surfaces as an implicit
  // declaration, which is promoted to an error.
  std::vector<std::string> flags = {"-fsyntax-only", "-std=gnu11", "-Wall",
                                    "-Werror=implicit-function-declaration"};
  double timeout_seconds = 60;
};

struct CompileDiagnostics {
  bool success = false;
  std::vector<std::string> messages;  // compiler stderr, one entry per line

  std::string text() const;
};

// Compiles `source` (written to a temporary `program.c`). Throws
// EnvironmentError when the compiler binary is missing.
CompileDiagnostics compile_check(std::string_view source, const CompilerSettings& settings = {});

}  // namespace cofact
