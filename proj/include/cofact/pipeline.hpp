#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cofact/compile.hpp"
#include "cofact/error.hpp"
#include "cofact/gateway.hpp"
#include "cofact/model.hpp"
#include "cofact/solver.hpp"

namespace cofact {

enum class ProviderKind { Http, Scripted };

struct ProviderSettings {
  ProviderKind kind = ProviderKind::Http;
  HttpProviderSettings http;
  std::filesystem::path script_dir;
  std::string model = "gpt-5.1";
  std::string effort = "low";
};

struct RunConfig {
  unsigned bound = 5;
  double timeout_seconds = 60;
  std::vector<SolverConfig> solvers = default_portfolio();
  bool unwinding_assertions = true;
  ProviderSettings provider;
  GatewayMode mode = GatewayMode::Live;
  std::filesystem::path cache_dir = ".cofact-cache";
  std::filesystem::path output_dir = "cofact-out";
  int max_retries = 3;
  bool offline_facts = false;
  std::optional<std::filesystem::path> property_map;
  CompilerSettings compiler;
  std::function<void(const std::string&)> log;

  // Throws ConfigError on k < 1, a non-positive timeout or an empty portfolio.
  void validate() const;
};

struct AssertionRecord {
  AssertionId id;
  std::string function;
  std::size_t logical_line = 0;
  std::string predicate;
  std::string status;
  std::optional<std::string> winning_solver;
  double elapsed = 0;
  AssertionIdSet closure;
  std::optional<std::size_t> property;
  std::optional<std::string> fact;
  std::optional<std::string> counterexample;
};

struct RunTotals {
  std::size_t attempted = 0;
  std::size_t verified = 0;
  std::size_t cond_verified = 0;
  std::size_t falsified = 0;
  std::size_t unknown = 0;

  std::size_t unverified() const { return falsified + unknown; }
};

struct RunReport {
  static constexpr int kSchemaVersion = 1;

  std::string task;
  std::string mode;  // full | verify
  unsigned bound = 5;
  double timeout_seconds = 60;
  std::vector<std::string> properties;
  std::vector<AssertionRecord> records;
  RunTotals totals;
  double llm_seconds = 0;
  double verify_seconds = 0;
  int provider_calls = 0;
  int cache_hits = 0;
  std::vector<std::string> warnings;
  std::optional<std::string> failed_stage;
  std::optional<std::string> error;

  void recompute_totals();
  nlohmann::json to_json() const;
  static RunReport from_json(const nlohmann::json& j);
  std::string table() const;
};

// Raised by run_full and run_verify_only; carries the partial report that was
// written before the failing stage.
class RunFailed : public Error {
 public:
  RunFailed(const Error& cause, RunReport partial)
      : Error(cause.stage(), cause.what()), partial_(std::move(partial)) {}
  const RunReport& partial() const { return partial_; }

 private:
  RunReport partial_;
};

std::unique_ptr<Gateway> make_gateway(const RunConfig& config);

RunReport run_full(const std::filesystem::path& description_file, const RunConfig& config);
RunReport run_verify_only(const std::filesystem::path& c_file, const RunConfig& config);

struct BenchRow {
  std::string task;
  std::optional<RunReport> report;
  std::optional<std::string> failed_stage;
  std::optional<std::string> error;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::string table;
};

// Per-task summary with a Mean±Std footer over the completed rows
// (sample standard deviation).
std::string bench_table(const std::vector<BenchRow>& rows);

// One run_full per `*.txt` description in name order; each task writes into
// `<output_dir>/<task>`. Failures become rows.
BenchResult run_bench(const std::filesystem::path& task_dir, const RunConfig& config);

}  // namespace cofact
