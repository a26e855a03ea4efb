#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cofact {

enum class Outcome { Verified, Falsified, Unknown };

std::string_view outcome_name(Outcome outcome);

// Output conventions differ between checker families (result banner is the
// same, exit codes are not).
enum class SolverFamily { Cbmc, Esbmc };

struct SolverConfig {
  std::string name;
  std::string binary;
  // Must contain the "{bound}" and "{file}" slots exactly once each.
  std::vector<std::string> arguments;
  std::string dialect;
  SolverFamily family = SolverFamily::Cbmc;
  bool unwinding_assertions = true;
  std::vector<std::string> unwinding_on_args = {"--unwinding-assertions"};
  std::vector<std::string> unwinding_off_args = {"--no-unwinding-assertions"};

  // Throws ConfigError when the argument template is malformed.
  void validate() const;
  std::vector<std::string> command_line(unsigned bound, const std::string& file) const;
};

// CBMC, CBMC with the Bitwuzla back-end, and ESBMC with Bitwuzla.
std::vector<SolverConfig> default_portfolio(const std::string& cbmc_binary = "cbmc",
                                            const std::string& esbmc_binary = "esbmc");

// One solver process in a race.
struct SolverRun {
  std::string solver;
  Outcome outcome = Outcome::Unknown;
  std::optional<int> exit_code;
  double elapsed = 0;
  bool cancelled = false;
  std::string transcript;  // stdout followed by stderr, verbatim
  std::string diagnostic;
};

struct Verdict {
  Outcome outcome = Outcome::Unknown;
  std::optional<std::string> winning_solver;
  double elapsed = 0;
  std::optional<std::string> counterexample;  // only for Falsified
  std::string diagnostic;
  std::vector<SolverRun> runs;
};

struct ParsedOutput {
  Outcome outcome = Outcome::Unknown;
  std::optional<std::string> counterexample;
  std::string diagnostic;
};

// Maps a finished solver process to an outcome. Never throws: anything that
// is not a well-formed success or failure report is Unknown.
ParsedOutput parse_solver_output(SolverFamily family, std::optional<int> exit_code, int term_signal,
                                 std::string_view out, std::string_view err);

// Program text per assume dialect (one text for all dialects is allowed).
class PortfolioInput {
 public:
  PortfolioInput(std::string source);  // NOLINT(google-explicit-constructor)
  explicit PortfolioInput(std::map<std::string, std::string> by_dialect);

  const std::string& for_dialect(const std::string& dialect) const;

 private:
  std::optional<std::string> shared_;
  std::map<std::string, std::string> by_dialect_;
};

struct RaceOptions {
  double cancel_grace_seconds = 0.2;
};

// Runs one solver to completion. Throws EnvironmentError when the binary is
// missing.
Verdict check_single(const SolverConfig& config, const std::string& source, unsigned bound,
                     double timeout_seconds);

// Launches every available configuration concurrently; the first Verified
// or Falsified verdict wins and the others are cancelled. Unknown when
// nothing definitive arrives before the timeout. Throws EnvironmentError
// only when none of the binaries exists.
Verdict run_portfolio(const std::vector<SolverConfig>& configs, const PortfolioInput& input,
                      unsigned bound, double timeout_seconds, const RaceOptions& options = {});

struct SolverAvailability {
  std::string name;
  std::string binary;
  std::optional<std::string> resolved;
};
std::vector<SolverAvailability> probe_solvers(const std::vector<SolverConfig>& configs);

}  // namespace cofact
