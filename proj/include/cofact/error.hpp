#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cofact {

// Pipeline stage an error originated from. Each stage maps to a stable
// process exit code (see exit_code()).
enum class Stage {
  Usage,
  Frontend,
  Elicitation,
  Synthesis,
  Annotation,
  BoundReduction,
  Traversal,
  Verification,
  Environment,
  Gateway,
  Facts,
  Internal,
};

std::string_view stage_name(Stage stage);
int exit_code(Stage stage);

class Error : public std::runtime_error {
 public:
  Error(Stage stage, const std::string& what) : std::runtime_error(what), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Stage::Usage, what) {}
};

class FrontendError : public Error {
 public:
  explicit FrontendError(const std::string& what) : Error(Stage::Frontend, what) {}
};

// A required external tool (compiler, solver) is not available.
class EnvironmentError : public Error {
 public:
  explicit EnvironmentError(const std::string& what) : Error(Stage::Environment, what) {}
};

// Orchestration bug: data produced by one stage contradicts another.
class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& what) : Error(Stage::Internal, what) {}
};

class GatewayError : public Error {
 public:
  GatewayError(Stage stage, const std::string& what) : Error(stage, what) {}
  explicit GatewayError(const std::string& what) : Error(Stage::Gateway, what) {}
};

class ReplayMissError : public GatewayError {
 public:
  ReplayMissError(const std::string& key, const std::string& stage)
      : GatewayError("replay miss for key " + key + " (stage " + stage + ")"), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace cofact
