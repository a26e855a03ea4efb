#include "cofact/compile.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "cofact/error.hpp"
#include "cofact/process.hpp"

namespace cofact {

std::string CompileDiagnostics::text() const {
  std::string out;
  for (const auto& m : messages) {
    out += m;
    out += '\n';
  }
  return out;
}

CompileDiagnostics compile_check(std::string_view source, const CompilerSettings& settings) {
  if (!find_executable(settings.compiler)) {
    throw EnvironmentError("C compiler '" + settings.compiler + "' not found");
  }
  TempDir dir("cofact-cc");
  auto file = dir.path() / "program.c";
  {
    std::ofstream out(file, std::ios::binary);
    out << source;
  }
  std::vector<std::string> argv{settings.compiler};
  argv.insert(argv.end(), settings.flags.begin(), settings.flags.end());
  argv.push_back(file.string());

  ProcessResult r = run_process(argv, std::chrono::duration<double>(settings.timeout_seconds));
  CompileDiagnostics diag;
  diag.success = !r.timed_out && r.exit_code && *r.exit_code == 0;
  std::istringstream lines(r.err);
  for (std::string line; std::getline(lines, line);) {
    // Report paths relative to the temporary file name.
    std::string::size_type pos;
    const std::string prefix = file.string();
    while ((pos = line.find(prefix)) != std::string::npos) line.replace(pos, prefix.size(), "program.c");
    diag.messages.push_back(std::move(line));
  }
  if (r.timed_out) diag.messages.push_back("compiler timed out");
  return diag;
}

}  // namespace cofact
