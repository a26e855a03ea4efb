#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cofact {

// Resolves a program name against PATH (names containing '/' are checked
// directly). Returns nullopt when no executable file is found.
std::optional<std::filesystem::path> find_executable(std::string_view name);

// A child process running in its own process group, with stdout and stderr
// captured through non-blocking pipes. Destroying a running Subprocess kills
// its whole process group and reaps it.
class Subprocess {
 public:
  // Throws EnvironmentError when the program cannot be found.
  static Subprocess spawn(const std::vector<std::string>& argv);

  Subprocess(Subprocess&& other) noexcept;
  Subprocess& operator=(Subprocess&& other) noexcept;
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;
  ~Subprocess();

  pid_t pid() const { return pid_; }

  // Reads whatever is available on the pipes without blocking.
  void pump();
  // Non-blocking check for termination; drains the pipes once it has exited.
  bool poll_exit();
  bool exited() const { return exited_; }

  // Sends `signal` to the whole process group (no-op after exit+reap unless
  // grandchildren remain in the group).
  void signal_group(int signal) const;
  // SIGKILL the group and block until the child is reaped.
  void kill_and_reap();

  const std::string& out() const { return out_; }
  const std::string& err() const { return err_; }
  // Exit status when the child exited normally, else nullopt.
  std::optional<int> exit_code() const;
  // Terminating signal when killed by a signal, else 0.
  int term_signal() const;

  std::vector<int> open_fds() const;

 private:
  Subprocess() = default;
  void close_fds();

  pid_t pid_ = -1;
  int out_fd_ = -1;
  int err_fd_ = -1;
  bool exited_ = false;
  int status_ = 0;
  std::string out_;
  std::string err_;
};

// Blocks until one of the processes produces output or `max_wait` elapses.
void wait_for_activity(std::span<Subprocess* const> processes, std::chrono::milliseconds max_wait);

struct ProcessResult {
  std::optional<int> exit_code;
  int term_signal = 0;
  bool timed_out = false;
  std::string out;
  std::string err;
  double elapsed = 0;
};

// Runs a program to completion or until `timeout` expires (then the process
// group is killed and `timed_out` is set).
ProcessResult run_process(const std::vector<std::string>& argv, std::chrono::duration<double> timeout);

// mkdtemp-backed directory removed recursively on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view prefix = "cofact");
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir();

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace cofact
