#include <catch_amalgamated.hpp>

#include <signal.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "cofact/error.hpp"
#include "cofact/process.hpp"
#include "cofact/solver.hpp"

using namespace cofact;

namespace {

const std::string kData = COFACT_TEST_DATA;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string golden(const std::string& name) { return kData + "/solver_output/" + name; }

SolverConfig replay(const std::string& name, const std::string& transcript, int code, double delay = 0,
                    SolverFamily family = SolverFamily::Cbmc) {
  SolverConfig c;
  c.name = name;
  c.binary = kData + "/stubs/replay.sh";
  c.arguments = {transcript, std::to_string(code), std::to_string(delay), "--", "{file}", "--unwind", "{bound}"};
  c.dialect = family == SolverFamily::Cbmc ? "cbmc" : "esbmc";
  c.family = family;
  return c;
}

SolverConfig stub(const std::string& name, const std::string& script) {
  SolverConfig c;
  c.name = name;
  c.binary = kData + "/stubs/" + script;
  c.arguments = {"{file}", "--unwind", "{bound}"};
  c.dialect = "cbmc";
  return c;
}

bool process_gone(pid_t pid) {
  if (::kill(pid, 0) != 0) return true;
  std::string stat = slurp("/proc/" + std::to_string(pid) + "/stat");
  auto close = stat.rfind(')');
  return close != std::string::npos && close + 2 < stat.size() && stat[close + 2] == 'Z';
}

}  // namespace

TEST_CASE("golden transcripts parse to the right outcome") {
  auto cbmc_ok = slurp(golden("cbmc_success.txt"));
  auto cbmc_bad = slurp(golden("cbmc_failure.txt"));
  auto esbmc_ok = slurp(golden("esbmc_success.txt"));
  auto esbmc_bad = slurp(golden("esbmc_failure.txt"));

  CHECK(parse_solver_output(SolverFamily::Cbmc, 0, 0, cbmc_ok, "").outcome == Outcome::Verified);
  auto f = parse_solver_output(SolverFamily::Cbmc, 10, 0, cbmc_bad, "");
  CHECK(f.outcome == Outcome::Falsified);
  REQUIRE(f.counterexample);
  CHECK(f.counterexample->find("VERIFICATION FAILED") == std::string::npos);
  CHECK_FALSE(f.counterexample->empty());

  CHECK(parse_solver_output(SolverFamily::Esbmc, 0, 0, esbmc_ok, "").outcome == Outcome::Verified);
  auto e = parse_solver_output(SolverFamily::Esbmc, 1, 0, esbmc_bad, "");
  CHECK(e.outcome == Outcome::Falsified);
  REQUIRE(e.counterexample);
  CHECK(e.counterexample->rfind("[Counterexample]", 0) == 0);
}

TEST_CASE("inconsistent or incomplete reports are unknown") {
  auto cbmc_ok = slurp(golden("cbmc_success.txt"));
  auto cbmc_bad = slurp(golden("cbmc_failure.txt"));
  CHECK(parse_solver_output(SolverFamily::Cbmc, 10, 0, cbmc_ok, "").outcome == Outcome::Unknown);
  CHECK(parse_solver_output(SolverFamily::Cbmc, 0, 0, cbmc_bad, "").outcome == Outcome::Unknown);
  CHECK(parse_solver_output(SolverFamily::Esbmc, 10, 0, cbmc_bad, "").outcome == Outcome::Unknown);
  CHECK(parse_solver_output(SolverFamily::Cbmc, 6, 0, "PARSING ERROR\n", "").outcome == Outcome::Unknown);
  CHECK(parse_solver_output(SolverFamily::Cbmc, std::nullopt, SIGSEGV, cbmc_bad, "").outcome ==
        Outcome::Unknown);
  CHECK(parse_solver_output(SolverFamily::Cbmc, 0, 0, cbmc_ok + cbmc_bad, "").outcome == Outcome::Unknown);
  auto g = parse_solver_output(SolverFamily::Cbmc, 134, 0, "partial", "segmentation fault");
  CHECK(g.outcome == Outcome::Unknown);
  CHECK(g.diagnostic.find("segmentation fault") != std::string::npos);
}

TEST_CASE("solver configurations") {
  auto p = default_portfolio("/opt/cbmc", "/opt/esbmc");
  REQUIRE(p.size() == 3);
  CHECK(p[0].name == "cbmc");
  CHECK(p[1].name == "cbmc-bitwuzla");
  CHECK(p[2].name == "esbmc-bitwuzla");
  CHECK(p[2].dialect == "esbmc");
  auto argv = p[1].command_line(7, "/tmp/x.c");
  CHECK(argv == std::vector<std::string>{"/opt/cbmc", "/tmp/x.c", "--unwind", "7", "--no-standard-checks",
                                         "--trace", "--bitwuzla", "--unwinding-assertions"});
  auto esbmc = p[2].command_line(3, "t.c");
  CHECK(std::find(esbmc.begin(), esbmc.end(), "--bitwuzla") != esbmc.end());
  CHECK(std::find(esbmc.begin(), esbmc.end(), "--unwinding-assertions") == esbmc.end());
  p[2].unwinding_assertions = false;
  esbmc = p[2].command_line(3, "t.c");
  CHECK(esbmc.back() == "--no-unwinding-assertions");

  SolverConfig bad = p[0];
  bad.arguments = {"--unwind", "{bound}"};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.arguments = {"{file}", "{file}", "{bound}"};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("check_single passes the program and bound to the solver") {
  TempDir dir("cofact-test");
  auto record = (dir.path() / "record.txt").string();
  ::setenv("STUB_RECORD", record.c_str(), 1);
  auto v = check_single(stub("rec", "record_args.sh"), "int main(void) { return 0; }\n", 4, 10);
  CHECK(v.outcome == Outcome::Verified);
  CHECK(v.winning_solver == "rec");
  auto text = slurp(record);
  CHECK(text.find("--unwind\n4\n--unwinding-assertions\n") != std::string::npos);
  CHECK(text.find("int main(void) { return 0; }") != std::string::npos);
}

TEST_CASE("check_single reports a counterexample with a stable file name") {
  auto v = check_single(replay("r", golden("cbmc_failure.txt"), 10), "int main(void){return 0;}", 5, 10);
  CHECK(v.outcome == Outcome::Falsified);
  REQUIRE(v.counterexample);
  REQUIRE(v.runs.size() == 1);
  CHECK(v.runs[0].transcript == slurp(golden("cbmc_failure.txt")));
}

TEST_CASE("missing solver binaries") {
  SolverConfig c = stub("none", "does-not-exist.sh");
  CHECK_THROWS_AS(check_single(c, "int main(void){return 0;}", 5, 5), EnvironmentError);
  CHECK_THROWS_AS(run_portfolio({c, c}, PortfolioInput("int main(void){return 0;}"), 5, 5), EnvironmentError);
  auto ok = replay("ok", golden("cbmc_success.txt"), 0);
  auto v = run_portfolio({c, ok}, PortfolioInput("int main(void){return 0;}"), 5, 5);
  CHECK(v.outcome == Outcome::Verified);
  CHECK(v.winning_solver == "ok");
  CHECK_THROWS_AS(run_portfolio({}, PortfolioInput("x"), 5, 5), ConfigError);
}

TEST_CASE("the first definitive verdict wins the race") {
  auto slow = replay("slow", golden("cbmc_success.txt"), 0, 4);
  auto fast = replay("fast", golden("esbmc_failure.txt"), 1, 0, SolverFamily::Esbmc);
  auto start = std::chrono::steady_clock::now();
  auto v = run_portfolio({slow, fast}, PortfolioInput("int main(void){return 0;}"), 5, 30);
  double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(v.outcome == Outcome::Falsified);
  CHECK(v.winning_solver == "fast");
  CHECK(took < 3.0);
  REQUIRE(v.runs.size() == 2);
  for (const auto& r : v.runs) {
    if (r.solver == "slow") CHECK(r.cancelled);
  }
}

TEST_CASE("an unknown answer does not end the race") {
  auto garbage = stub("garbage", "garbage.sh");
  auto slow = replay("slow", golden("cbmc_success.txt"), 0, 1);
  auto v = run_portfolio({garbage, slow}, PortfolioInput("int main(void){return 0;}"), 5, 30);
  CHECK(v.outcome == Outcome::Verified);
  CHECK(v.winning_solver == "slow");
  REQUIRE(v.runs.size() == 2);
  CHECK(v.runs[0].solver == "garbage");
  CHECK(v.runs[0].outcome == Outcome::Unknown);
  CHECK(v.runs[0].diagnostic.find("exit status 134") != std::string::npos);
}

TEST_CASE("garbage output alone is unknown, not falsified") {
  auto v = run_portfolio({stub("garbage", "garbage.sh")}, PortfolioInput("int main(void){return 0;}"), 5, 30);
  CHECK(v.outcome == Outcome::Unknown);
  CHECK_FALSE(v.winning_solver);
}

TEST_CASE("timeouts are unknown and leave no processes behind") {
  TempDir dir("cofact-test");
  auto pidfile = (dir.path() / "pids").string();
  ::setenv("STUB_PIDFILE", pidfile.c_str(), 1);
  auto start = std::chrono::steady_clock::now();
  auto v = run_portfolio({stub("hang", "hang.sh")}, PortfolioInput("int main(void){return 0;}"), 5, 1.0);
  double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ::unsetenv("STUB_PIDFILE");
  CHECK(v.outcome == Outcome::Unknown);
  CHECK(took < 4.0);
  std::ifstream in(pidfile);
  pid_t shell = 0, child = 0;
  in >> shell >> child;
  REQUIRE(shell > 0);
  REQUIRE(child > 0);
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  CHECK(process_gone(shell));
  CHECK(process_gone(child));
}

TEST_CASE("cancelled losers leave no processes behind") {
  TempDir dir("cofact-test");
  auto pidfile = (dir.path() / "pids").string();
  ::setenv("STUB_PIDFILE", pidfile.c_str(), 1);
  auto fast = replay("fast", golden("cbmc_success.txt"), 0, 0.5);
  auto v = run_portfolio({stub("hang", "hang.sh"), fast}, PortfolioInput("int main(void){return 0;}"), 5, 30);
  ::unsetenv("STUB_PIDFILE");
  CHECK(v.outcome == Outcome::Verified);
  std::ifstream in(pidfile);
  pid_t shell = 0, child = 0;
  in >> shell >> child;
  REQUIRE(shell > 0);
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  CHECK(process_gone(shell));
  CHECK(process_gone(child));
}

TEST_CASE("per-dialect inputs reach the matching solvers") {
  TempDir dir("cofact-test");
  auto record = (dir.path() / "record.txt").string();
  ::setenv("STUB_RECORD", record.c_str(), 1);
  auto rec = stub("rec", "record_args.sh");
  rec.dialect = "esbmc";
  PortfolioInput input(std::map<std::string, std::string>{{"cbmc", "/* cbmc */"}, {"esbmc", "/* esbmc */"}});
  auto v = run_portfolio({rec}, input, 2, 10);
  CHECK(v.outcome == Outcome::Verified);
  CHECK(slurp(record).find("/* esbmc */") != std::string::npos);
  CHECK_THROWS_AS(PortfolioInput(std::map<std::string, std::string>{}).for_dialect("cbmc"), ConsistencyError);
}

TEST_CASE("probe_solvers resolves binaries") {
  auto probes = probe_solvers({stub("rec", "record_args.sh"), stub("none", "missing.sh")});
  REQUIRE(probes.size() == 2);
  CHECK(probes[0].resolved);
  CHECK_FALSE(probes[1].resolved);
}

TEST_CASE("run_process captures output and enforces timeouts") {
  auto r = run_process({"/bin/sh", "-c", "echo out; echo err >&2; exit 3"}, std::chrono::seconds(5));
  CHECK(r.exit_code == 3);
  CHECK(r.out == "out\n");
  CHECK(r.err == "err\n");
  auto t = run_process({"/bin/sh", "-c", "sleep 10"}, std::chrono::milliseconds(300));
  CHECK(t.timed_out);
  CHECK(t.elapsed < 3);
  CHECK(find_executable("sh"));
  CHECK_FALSE(find_executable("definitely-not-a-program-xyz"));
}
