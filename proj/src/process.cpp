#include "cofact/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "cofact/error.hpp"

namespace cofact {
namespace {

bool executable(const std::filesystem::path& p) {
  struct stat st {};
  return ::stat(p.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(p.c_str(), X_OK) == 0;
}

void read_available(int& fd, std::string& sink) {
  if (fd < 0) return;
  char buf[8192];
  while (true) {
    ssize_t n = ::read(fd, buf, sizeof buf);
    if (n > 0) {
      sink.append(buf, static_cast<std::size_t>(n));
      continue;
    }
    if (n == 0) {
      ::close(fd);
      fd = -1;
    } else if (errno == EINTR) {
      continue;
    }
    return;  // EAGAIN or error: nothing more right now
  }
}

}  // namespace

std::optional<std::filesystem::path> find_executable(std::string_view name) {
  if (name.empty()) return std::nullopt;
  if (name.find('/') != std::string_view::npos) {
    std::filesystem::path p(name);
    if (executable(p)) return p;
    return std::nullopt;
  }
  const char* path_env = std::getenv("PATH");
  std::string_view paths = path_env ? path_env : "/usr/bin:/bin";
  while (!paths.empty()) {
    std::size_t colon = paths.find(':');
    std::string_view dir = paths.substr(0, colon);
    std::filesystem::path candidate = std::filesystem::path(dir.empty() ? "." : dir) / name;
    if (executable(candidate)) return candidate;
    if (colon == std::string_view::npos) break;
    paths.remove_prefix(colon + 1);
  }
  return std::nullopt;
}

Subprocess Subprocess::spawn(const std::vector<std::string>& argv) {
  if (argv.empty()) throw EnvironmentError("empty command line");
  auto exe = find_executable(argv[0]);
  if (!exe) throw EnvironmentError("program not found: " + argv[0]);

  int out_pipe[2];
  int err_pipe[2];
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw EnvironmentError("pipe: " + std::string(std::strerror(errno)));
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    throw EnvironmentError("pipe: " + std::string(std::strerror(errno)));
  }

  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  std::string exe_str = exe->string();
  cargv.push_back(exe_str.data());
  for (std::size_t i = 1; i < argv.size(); ++i) cargv.push_back(const_cast<char*>(argv[i].c_str()));
  cargv.push_back(nullptr);

  pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) ::close(fd);
    throw EnvironmentError("fork: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    ::execv(cargv[0], cargv.data());
    _exit(127);
  }
  ::setpgid(pid, pid);  // also done in the child; whichever runs first wins
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::fcntl(out_pipe[0], F_SETFL, ::fcntl(out_pipe[0], F_GETFL) | O_NONBLOCK);
  ::fcntl(err_pipe[0], F_SETFL, ::fcntl(err_pipe[0], F_GETFL) | O_NONBLOCK);

  Subprocess p;
  p.pid_ = pid;
  p.out_fd_ = out_pipe[0];
  p.err_fd_ = err_pipe[0];
  return p;
}

Subprocess::Subprocess(Subprocess&& other) noexcept { *this = std::move(other); }

Subprocess& Subprocess::operator=(Subprocess&& other) noexcept {
  if (this != &other) {
    if (pid_ > 0 && !exited_) kill_and_reap();
    close_fds();
    pid_ = std::exchange(other.pid_, -1);
    out_fd_ = std::exchange(other.out_fd_, -1);
    err_fd_ = std::exchange(other.err_fd_, -1);
    exited_ = other.exited_;
    status_ = other.status_;
    out_ = std::move(other.out_);
    err_ = std::move(other.err_);
  }
  return *this;
}

Subprocess::~Subprocess() {
  if (pid_ > 0) {
    if (!exited_) {
      kill_and_reap();
    } else {
      // Grandchildren may still hold the group alive.
      ::kill(-pid_, SIGKILL);
    }
  }
  close_fds();
}

void Subprocess::close_fds() {
  if (out_fd_ >= 0) ::close(out_fd_);
  if (err_fd_ >= 0) ::close(err_fd_);
  out_fd_ = err_fd_ = -1;
}

void Subprocess::pump() {
  read_available(out_fd_, out_);
  read_available(err_fd_, err_);
}

bool Subprocess::poll_exit() {
  if (exited_) return true;
  pump();
  int status = 0;
  pid_t r = ::waitpid(pid_, &status, WNOHANG);
  if (r == pid_) {
    exited_ = true;
    status_ = status;
    pump();
  }
  return exited_;
}

void Subprocess::signal_group(int signal) const {
  if (pid_ > 0) ::kill(-pid_, signal);
}

void Subprocess::kill_and_reap() {
  if (pid_ <= 0) return;
  ::kill(-pid_, SIGKILL);
  if (!exited_) {
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    exited_ = true;
    status_ = status;
  }
  pump();
}

std::optional<int> Subprocess::exit_code() const {
  if (exited_ && WIFEXITED(status_)) return WEXITSTATUS(status_);
  return std::nullopt;
}

int Subprocess::term_signal() const {
  if (exited_ && WIFSIGNALED(status_)) return WTERMSIG(status_);
  return 0;
}

std::vector<int> Subprocess::open_fds() const {
  std::vector<int> fds;
  if (out_fd_ >= 0) fds.push_back(out_fd_);
  if (err_fd_ >= 0) fds.push_back(err_fd_);
  return fds;
}

void wait_for_activity(std::span<Subprocess* const> processes, std::chrono::milliseconds max_wait) {
  std::vector<pollfd> fds;
  for (const Subprocess* p : processes) {
    if (p->exited()) continue;
    for (int fd : p->open_fds()) fds.push_back({fd, POLLIN, 0});
  }
  if (fds.empty()) {
    ::usleep(static_cast<useconds_t>(std::min<long>(max_wait.count(), 10) * 1000));
    return;
  }
  ::poll(fds.data(), fds.size(), static_cast<int>(max_wait.count()));
}

ProcessResult run_process(const std::vector<std::string>& argv, std::chrono::duration<double> timeout) {
  using clock = std::chrono::steady_clock;
  auto start = clock::now();
  auto deadline = start + std::chrono::duration_cast<clock::duration>(timeout);
  Subprocess proc = Subprocess::spawn(argv);
  ProcessResult result;
  Subprocess* list[] = {&proc};
  while (!proc.poll_exit()) {
    auto now = clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      proc.kill_and_reap();
      break;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
    wait_for_activity(list, std::min(left, std::chrono::milliseconds(20)));
  }
  proc.signal_group(SIGKILL);
  result.exit_code = proc.exit_code();
  result.term_signal = proc.term_signal();
  result.out = proc.out();
  result.err = proc.err();
  result.elapsed = std::chrono::duration<double>(clock::now() - start).count();
  return result;
}

TempDir::TempDir(std::string_view prefix) {
  std::string tmpl = (std::filesystem::temp_directory_path() / (std::string(prefix) + "-XXXXXX")).string();
  if (!::mkdtemp(tmpl.data())) {
    throw EnvironmentError("cannot create temporary directory: " + std::string(std::strerror(errno)));
  }
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace cofact
