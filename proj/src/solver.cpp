#include "cofact/solver.hpp"

#include <signal.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <memory>

#include "cofact/error.hpp"
#include "cofact/process.hpp"

namespace cofact {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::string_view kSuccessBanner = "VERIFICATION SUCCESSFUL";
constexpr std::string_view kFailureBanner = "VERIFICATION FAILED";

int failure_exit_code(SolverFamily family) { return family == SolverFamily::Cbmc ? 10 : 1; }

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string counterexample_section(SolverFamily family, std::string_view out) {
  std::size_t end = out.rfind(kFailureBanner);
  std::size_t begin = std::string_view::npos;
  if (family == SolverFamily::Cbmc) {
    begin = out.find("Trace for ");
    if (begin == std::string_view::npos) begin = out.find("** Results:");
  } else {
    begin = out.find("[Counterexample]");
    if (begin == std::string_view::npos) begin = out.find("Violated property:");
  }
  if (begin == std::string_view::npos || begin > end) begin = 0;
  std::string_view section = out.substr(begin, end - begin);
  while (!section.empty() && (section.back() == '\n' || section.back() == ' ')) section.remove_suffix(1);
  return std::string(section);
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw EnvironmentError("cannot write " + path.string());
}

}  // namespace

std::string_view outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::Verified: return "verified";
    case Outcome::Falsified: return "falsified";
    case Outcome::Unknown: return "unknown";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  std::size_t bound_slots = 0;
  std::size_t file_slots = 0;
  for (const auto& arg : arguments) {
    bound_slots += count_occurrences(arg, "{bound}");
    file_slots += count_occurrences(arg, "{file}");
  }
  if (bound_slots != 1 || file_slots != 1) {
    throw ConfigError("solver '" + name + "': argument template needs exactly one {bound} and one {file} slot");
  }
  if (binary.empty()) throw ConfigError("solver '" + name + "': empty binary path");
}

std::vector<std::string> SolverConfig::command_line(unsigned bound, const std::string& file) const {
  validate();
  std::vector<std::string> argv{binary};
  for (auto arg : arguments) {
    replace_all(arg, "{bound}", std::to_string(bound));
    replace_all(arg, "{file}", file);
    argv.push_back(std::move(arg));
  }
  const auto& extra = unwinding_assertions ? unwinding_on_args : unwinding_off_args;
  argv.insert(argv.end(), extra.begin(), extra.end());
  return argv;
}

std::vector<SolverConfig> default_portfolio(const std::string& cbmc_binary,
                                            const std::string& esbmc_binary) {
  SolverConfig cbmc;
  cbmc.name = "cbmc";
  cbmc.binary = cbmc_binary;
  cbmc.arguments = {"{file}", "--unwind", "{bound}", "--no-standard-checks", "--trace"};
  cbmc.dialect = "cbmc";
  cbmc.family = SolverFamily::Cbmc;

  SolverConfig cbmc_bitwuzla = cbmc;
  cbmc_bitwuzla.name = "cbmc-bitwuzla";
  cbmc_bitwuzla.arguments.push_back("--bitwuzla");

  SolverConfig esbmc;
  esbmc.name = "esbmc-bitwuzla";
  esbmc.binary = esbmc_binary;
  esbmc.arguments = {"{file}",           "--unwind",          "{bound}",
                     "--bitwuzla",       "--no-bounds-check", "--no-pointer-check",
                     "--no-div-by-zero-check", "--no-align-check"};
  esbmc.dialect = "esbmc";
  esbmc.family = SolverFamily::Esbmc;
  esbmc.unwinding_on_args = {};  // on by default in ESBMC

  return {cbmc, cbmc_bitwuzla, esbmc};
}

ParsedOutput parse_solver_output(SolverFamily family, std::optional<int> exit_code, int term_signal,
                                 std::string_view out, std::string_view err) {
  ParsedOutput p;
  if (term_signal != 0) {
    p.diagnostic = "solver terminated by signal " + std::to_string(term_signal);
    return p;
  }
  if (!exit_code) {
    p.diagnostic = "solver did not exit normally";
    return p;
  }
  const bool success = out.find(kSuccessBanner) != std::string_view::npos;
  const bool failure = out.find(kFailureBanner) != std::string_view::npos;
  if (success && !failure && *exit_code == 0) {
    p.outcome = Outcome::Verified;
    return p;
  }
  if (failure && !success && *exit_code == failure_exit_code(family)) {
    p.outcome = Outcome::Falsified;
    p.counterexample = counterexample_section(family, out);
    return p;
  }
  p.diagnostic = "unrecognised solver report (exit status " + std::to_string(*exit_code) + ")";
  std::string_view tail = err.empty() ? out : err;
  if (!tail.empty()) {
    std::size_t keep = std::min<std::size_t>(tail.size(), 400);
    p.diagnostic += ": " + std::string(tail.substr(tail.size() - keep));
  }
  return p;
}

PortfolioInput::PortfolioInput(std::string source) : shared_(std::move(source)) {}

PortfolioInput::PortfolioInput(std::map<std::string, std::string> by_dialect)
    : by_dialect_(std::move(by_dialect)) {}

const std::string& PortfolioInput::for_dialect(const std::string& dialect) const {
  if (shared_) return *shared_;
  auto it = by_dialect_.find(dialect);
  if (it == by_dialect_.end()) {
    throw ConsistencyError("no program rendered for assume dialect '" + dialect + "'");
  }
  return it->second;
}

Verdict check_single(const SolverConfig& config, const std::string& source, unsigned bound,
                     double timeout_seconds) {
  config.validate();
  if (!find_executable(config.binary)) {
    throw EnvironmentError("solver '" + config.name + "' not found (" + config.binary + ")");
  }
  TempDir dir("cofact-bmc");
  auto file = dir.path() / "target.c";
  write_file(file, source);
  ProcessResult r = run_process(config.command_line(bound, file.string()),
                                std::chrono::duration<double>(timeout_seconds));
  Verdict v;
  v.elapsed = r.elapsed;
  SolverRun run;
  run.solver = config.name;
  run.exit_code = r.exit_code;
  run.elapsed = r.elapsed;
  run.transcript = r.out + r.err;
  replace_all(run.transcript, file.string(), "target.c");
  if (r.timed_out) {
    run.diagnostic = "timed out after " + std::to_string(timeout_seconds) + " s";
  } else {
    ParsedOutput p = parse_solver_output(config.family, r.exit_code, r.term_signal, r.out, r.err);
    run.outcome = p.outcome;
    run.diagnostic = p.diagnostic;
    v.outcome = p.outcome;
    v.counterexample = p.counterexample;
    if (v.counterexample) replace_all(*v.counterexample, file.string(), "target.c");
  }
  v.diagnostic = run.diagnostic;
  if (v.outcome != Outcome::Unknown) v.winning_solver = config.name;
  v.runs.push_back(std::move(run));
  return v;
}

Verdict run_portfolio(const std::vector<SolverConfig>& configs, const PortfolioInput& input,
                      unsigned bound, double timeout_seconds, const RaceOptions& options) {
  if (configs.empty()) throw ConfigError("portfolio has no solver configurations");
  for (const auto& c : configs) c.validate();

  struct Contender {
    const SolverConfig* config;
    std::unique_ptr<TempDir> dir;
    std::string file;
    std::optional<Subprocess> proc;
    bool done = false;
    SolverRun run;
  };

  const auto start = Clock::now();
  const auto deadline = start + std::chrono::duration_cast<Clock::duration>(
                                    std::chrono::duration<double>(timeout_seconds));
  std::vector<Contender> field;
  std::vector<std::string> missing;
  for (const auto& c : configs) {
    if (!find_executable(c.binary)) {
      missing.push_back(c.name + " (" + c.binary + ")");
      continue;
    }
    Contender ct{&c, std::make_unique<TempDir>("cofact-bmc"), {}, std::nullopt, false, {}};
    ct.run.solver = c.name;
    field.push_back(std::move(ct));
  }
  if (field.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw EnvironmentError("no solver of the portfolio is available: " + list);
  }
  for (auto& ct : field) {
    ct.file = (ct.dir->path() / "target.c").string();
    write_file(ct.file, input.for_dialect(ct.config->dialect));
    ct.proc.emplace(Subprocess::spawn(ct.config->command_line(bound, ct.file)));
  }

  Verdict verdict;
  for (const auto& m : missing) verdict.diagnostic += "skipped missing solver " + m + "\n";
  std::optional<std::size_t> winner;

  auto finish = [&](Contender& ct) {
    ct.done = true;
    ct.run.exit_code = ct.proc->exit_code();
    ct.run.elapsed = seconds_since(start);
    ct.run.transcript = ct.proc->out() + ct.proc->err();
    replace_all(ct.run.transcript, ct.file, "target.c");
    ParsedOutput p = parse_solver_output(ct.config->family, ct.run.exit_code, ct.proc->term_signal(),
                                         ct.proc->out(), ct.proc->err());
    if (p.counterexample) replace_all(*p.counterexample, ct.file, "target.c");
    ct.run.outcome = p.outcome;
    ct.run.diagnostic = p.diagnostic;
    return p;
  };

  std::vector<Subprocess*> handles;
  for (auto& ct : field) handles.push_back(&*ct.proc);

  while (!winner) {
    bool all_done = true;
    for (std::size_t i = 0; i < field.size(); ++i) {
      Contender& ct = field[i];
      if (ct.done) continue;
      if (!ct.proc->poll_exit()) {
        all_done = false;
        continue;
      }
      ParsedOutput p = finish(ct);
      if (p.outcome != Outcome::Unknown) {
        winner = i;
        verdict.outcome = p.outcome;
        verdict.counterexample = p.counterexample;
        verdict.winning_solver = ct.config->name;
        break;
      }
    }
    if (winner || all_done) break;
    auto now = Clock::now();
    if (now >= deadline) {
      verdict.diagnostic += "portfolio timed out after " + std::to_string(timeout_seconds) + " s\n";
      break;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
    wait_for_activity(handles, std::min(left + std::chrono::milliseconds(1), std::chrono::milliseconds(20)));
  }
  verdict.elapsed = seconds_since(start);

  // Cancel the rest: SIGTERM, a short grace window, then SIGKILL.
  bool any_running = std::any_of(field.begin(), field.end(), [](const Contender& c) { return !c.done; });
  if (any_running) {
    for (auto& ct : field) {
      if (!ct.done) ct.proc->signal_group(SIGTERM);
    }
    const auto grace_end = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                              std::chrono::duration<double>(options.cancel_grace_seconds));
    while (Clock::now() < grace_end) {
      bool pending = false;
      for (auto& ct : field) {
        if (ct.done) continue;
        if (ct.proc->poll_exit()) {
          ParsedOutput p = finish(ct);
          ct.run.cancelled = true;
          if (winner && p.outcome != Outcome::Unknown && p.outcome != verdict.outcome) {
            verdict.diagnostic += "disagreement: " + ct.config->name + " reported " +
                                  std::string(outcome_name(p.outcome)) + " after " +
                                  *verdict.winning_solver + " reported " +
                                  std::string(outcome_name(verdict.outcome)) + "\n";
          }
        } else {
          pending = true;
        }
      }
      if (!pending) break;
      wait_for_activity(handles, std::chrono::milliseconds(10));
    }
  }
  for (auto& ct : field) {
    if (!ct.done) {
      ct.proc->kill_and_reap();
      ct.done = true;
      ct.run.cancelled = true;
      ct.run.exit_code = ct.proc->exit_code();
      ct.run.elapsed = seconds_since(start);
      ct.run.transcript = ct.proc->out() + ct.proc->err();
      replace_all(ct.run.transcript, ct.file, "target.c");
      ct.run.diagnostic = winner ? "cancelled after a definitive verdict" : "cancelled at timeout";
    }
    ct.proc->signal_group(SIGKILL);  // stray grandchildren
    verdict.runs.push_back(std::move(ct.run));
  }
  if (!winner) {
    for (const auto& r : verdict.runs) {
      if (!r.diagnostic.empty()) verdict.diagnostic += r.solver + ": " + r.diagnostic + "\n";
    }
  }
  return verdict;
}

std::vector<SolverAvailability> probe_solvers(const std::vector<SolverConfig>& configs) {
  std::vector<SolverAvailability> out;
  for (const auto& c : configs) {
    SolverAvailability a{c.name, c.binary, std::nullopt};
    if (auto p = find_executable(c.binary)) a.resolved = p->string();
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace cofact
