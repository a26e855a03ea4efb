#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "cofact/error.hpp"
#include "cofact/pipeline.hpp"
#include "cofact/process.hpp"
#include "cofact/solver.hpp"

using namespace cofact;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int doctor(const RunConfig& config) {
  bool ok = true;
  std::cout << "solvers:\n";
  bool any = false;
  for (const auto& s : probe_solvers(config.solvers)) {
    std::cout << "  " << s.name << ": " << (s.resolved ? *s.resolved : "missing (" + s.binary + ")")
              << "\n";
    any = any || s.resolved.has_value();
  }
  if (!any) ok = false;
  auto cc = find_executable(config.compiler.compiler);
  std::cout << "compiler: " << (cc ? cc->string() : "missing (" + config.compiler.compiler + ")") << "\n";
  if (!cc) ok = false;
  const char* key = std::getenv(config.provider.http.credential_env.c_str());
  std::cout << "credential " << config.provider.http.credential_env << ": "
            << (key && *key ? "set" : "not set") << "\n";
  std::cout << "cache: " << config.cache_dir.string() << "\n";
  std::cout << (ok ? "ok\n" : "not ready\n");
  return ok ? 0 : exit_code(Stage::Environment);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-generates C programs and bounded-verified facts from task descriptions"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI/TOML file with option values (command-line flags take precedence)");

  RunConfig config;
  std::string cbmc = "cbmc", esbmc = "esbmc", solvers_csv, mode = "live", provider = "openai";
  std::string script_dir, property_map, out_dir = "cofact-out", cache_dir = ".cofact-cache";
  bool no_unwinding = false, quiet = false, print_json = false;

  app.add_option("-k,--bound", config.bound, "Loop unwind bound")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--timeout", config.timeout_seconds, "Per-assertion portfolio timeout in seconds")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--cbmc", cbmc, "CBMC binary")->capture_default_str();
  app.add_option("--esbmc", esbmc, "ESBMC binary")->capture_default_str();
  app.add_option("--solvers", solvers_csv, "Comma-separated subset of cbmc,cbmc-bitwuzla,esbmc-bitwuzla");
  app.add_flag("--no-unwinding-assertions", no_unwinding, "Do not check unwinding assertions");
  app.add_option("--model", config.provider.model, "Model id")->capture_default_str();
  app.add_option("--effort", config.provider.effort, "Reasoning effort")->capture_default_str();
  app.add_option("--mode", mode, "live or replay")->capture_default_str()->check(CLI::IsMember({"live", "replay"}));
  app.add_option("--provider", provider, "openai or scripted")
      ->capture_default_str()
      ->check(CLI::IsMember({"openai", "scripted"}));
  app.add_option("--script-dir", script_dir, "Directory of canned responses for the scripted provider");
  app.add_option("--endpoint", config.provider.http.endpoint, "Chat-completion endpoint")->capture_default_str();
  app.add_option("--api-key-env", config.provider.http.credential_env, "Environment variable holding the credential")
      ->capture_default_str();
  app.add_option("--cache-dir", cache_dir, "Response cache directory")->capture_default_str();
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--max-retries", config.max_retries, "Re-prompts per stage")->capture_default_str();
  app.add_flag("--offline-facts", config.offline_facts, "Template facts and sidecar property map, no model calls");
  app.add_option("--property-map", property_map, "JSON sidecar mapping assertion ids to property indices");
  app.add_option("--cc", config.compiler.compiler, "C compiler for compile checks")->capture_default_str();
  app.add_flag("-q,--quiet", quiet, "No progress output");
  app.add_flag("--json", print_json, "Print the JSON report instead of the table");

  std::string input;
  auto* full = app.add_subcommand("full", "Run the whole pipeline on a task description");
  full->add_option("description", input, "Task description file")->required()->check(CLI::ExistingFile);
  auto* verify = app.add_subcommand("verify", "Verify the assertions of an annotated C file");
  verify->add_option("file", input, "Annotated C file")->required()->check(CLI::ExistingFile);
  auto* bench = app.add_subcommand("bench", "Run every task description in a directory");
  bench->add_option("tasks", input, "Directory of *.txt descriptions")->required()->check(CLI::ExistingDirectory);
  auto* doc = app.add_subcommand("doctor", "Report which external tools are available");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(Stage::Usage);
  }

  try {
    config.solvers = default_portfolio(cbmc, esbmc);
    if (!solvers_csv.empty()) {
      std::set<std::string> wanted;
      for (const auto& s : split_csv(solvers_csv)) wanted.insert(s);
      std::vector<SolverConfig> kept;
      for (const auto& s : config.solvers) {
        if (wanted.erase(s.name)) kept.push_back(s);
      }
      if (!wanted.empty()) throw ConfigError("unknown solver '" + *wanted.begin() + "'");
      config.solvers = kept;
    }
    config.unwinding_assertions = !no_unwinding;
    config.mode = mode == "replay" ? GatewayMode::Replay : GatewayMode::Live;
    config.provider.kind = provider == "scripted" ? ProviderKind::Scripted : ProviderKind::Http;
    config.provider.script_dir = script_dir;
    config.cache_dir = cache_dir;
    config.output_dir = out_dir;
    if (!property_map.empty()) config.property_map = property_map;
    if (!quiet) config.log = [](const std::string& m) { std::cerr << m << "\n"; };

    if (*doc) return doctor(config);

    auto emit = [&](const RunReport& r) {
      if (print_json) std::cout << r.to_json().dump(2) << "\n";
      else std::cout << r.table();
    };
    if (*full) {
      emit(run_full(input, config));
    } else if (*verify) {
      emit(run_verify_only(input, config));
    } else if (*bench) {
      auto result = run_bench(input, config);
      std::cout << result.table;
      for (const auto& row : result.rows) {
        if (row.error) std::cerr << row.task << ": " << *row.failed_stage << ": " << *row.error << "\n";
      }
    }
  } catch (const RunFailed& e) {
    if (!print_json) std::cout << e.partial().table();
    std::cerr << "cofact: " << stage_name(e.stage()) << ": " << e.what() << "\n";
    return exit_code(e.stage());
  } catch (const Error& e) {
    std::cerr << "cofact: " << stage_name(e.stage()) << ": " << e.what() << "\n";
    return exit_code(e.stage());
  } catch (const std::exception& e) {
    std::cerr << "cofact: internal: " << e.what() << "\n";
    return exit_code(Stage::Internal);
  }
  return 0;
}
