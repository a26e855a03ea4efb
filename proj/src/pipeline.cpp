#include "cofact/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cofact/facts.hpp"
#include "cofact/frontend.hpp"
#include "cofact/stages.hpp"
#include "cofact/traversal.hpp"
#include "cofact/verifier.hpp"

namespace cofact {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::string read_text(const fs::path& p, Stage stage) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(stage, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out.flush()) throw Error(Stage::Environment, "cannot write " + p.string());
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// Exclusive flock on `<dir>/.lock` for the lifetime of the object.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path p = dir / ".lock";
    fd_ = ::open(p.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(Stage::Environment, "cannot open " + p.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw ConfigError("output directory " + dir.string() + " is in use by another run");
    }
  }
  ~DirLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  int fd_ = -1;
};

std::string fmt1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string pad(std::string s, std::size_t width, bool right = false) {
  // Width counts code points so that ✓ lines up.
  std::size_t cps = 0;
  for (unsigned char c : s) cps += (c & 0xC0) != 0x80;
  if (cps >= width) return right ? " " + s : s + " ";
  std::string fill(width - cps, ' ');
  return right ? fill + s : s + fill;
}

std::vector<SolverConfig> solvers_for(const RunConfig& config) {
  auto solvers = config.solvers;
  for (auto& s : solvers) s.unwinding_assertions = config.unwinding_assertions;
  return solvers;
}

void log(const RunConfig& config, const std::string& msg) {
  if (config.log) config.log(msg);
}

void write_solver_logs(const fs::path& dir, const CheckRecord& rec) {
  auto dump = [&](const Verdict& v, const char* phase) {
    for (const auto& run : v.runs) {
      char name[160];
      std::snprintf(name, sizeof name, "a%03zu_%s_%s.log", rec.id.value, phase, run.solver.c_str());
      std::string text = "solver: " + run.solver + "\noutcome: " +
                         std::string(outcome_name(run.outcome)) + "\ncancelled: " +
                         (run.cancelled ? "yes" : "no") + "\ndiagnostic: " + run.diagnostic +
                         "\n===== output =====\n" + run.transcript;
      write_text(dir / name, text);
    }
  };
  dump(rec.standalone, "standalone");
  if (rec.compositional) dump(*rec.compositional, "compositional");
}

struct VerifiedProgram {
  ProgramModel model;
  AssertionSequence sequence;
  VerifyRunResult result;
};

VerifiedProgram verify_program(const std::string& text, const RunConfig& config,
                               const std::optional<fs::path>& log_dir, RunReport& report) {
  VerifiedProgram vp{parse_program(text, config.bound), {}, {}};
  const CallGraph cg = build_call_graph(vp.model);
  vp.sequence = cg_traversal(vp.model, cg);
  log(config, "verifying " + std::to_string(vp.sequence.size()) + " assertions");
  if (log_dir) fs::create_directories(*log_dir);
  auto progress = [&](const CheckRecord& rec) {
    const Verdict& last = rec.compositional ? *rec.compositional : rec.standalone;
    std::string how = rec.compositional ? "compositional" : "standalone";
    log(config, "  a" + std::to_string(rec.id.value) + " " + how + " " +
                    std::string(outcome_name(last.outcome)));
    if (log_dir) write_solver_logs(*log_dir, rec);
  };
  const auto start = Clock::now();
  try {
    vp.result = verify_all(vp.model, vp.sequence, solvers_for(config), config.bound,
                           config.timeout_seconds, progress);
  } catch (const VerifyAborted& e) {
    report.verify_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    vp.result = e.partial();
    throw;
  }
  report.verify_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return vp;
}

void fill_records(RunReport& report, const VerifiedProgram& vp, const PropertyMap& props,
                  const std::vector<VerifiedFact>& facts) {
  std::map<AssertionId, const VerifiedFact*> fact_of;
  for (const auto& f : facts) fact_of[f.assertion] = &f;
  std::map<AssertionId, const CheckRecord*> log_of;
  for (const auto& rec : vp.result.log) log_of[rec.id] = &rec;
  const AssertionIdSet attempted = vp.result.attempted();

  report.records.clear();
  for (const auto& a : vp.sequence) {
    const AssertionId id = *a.id;
    auto lr = log_of.find(id);
    if (lr == log_of.end()) continue;
    AssertionRecord r;
    r.id = id;
    r.function = a.function;
    r.logical_line = a.logical_line;
    r.predicate = a.predicate;
    r.status = std::string(status_tag(vp.result.status(id)));
    const CheckRecord& rec = *lr->second;
    const Verdict& last = rec.compositional ? *rec.compositional : rec.standalone;
    r.winning_solver = last.winning_solver;
    r.elapsed = rec.standalone.elapsed + (rec.compositional ? rec.compositional->elapsed : 0.0);
    if (vp.result.ig.contains(id)) r.closure = dependency_closure(vp.result.ig, attempted, id);
    r.property = props.property_of(id);
    if (auto f = fact_of.find(id); f != fact_of.end()) r.fact = fact_comment(*f->second);
    if (last.outcome == Outcome::Falsified) r.counterexample = last.counterexample;
    report.records.push_back(std::move(r));
  }
  report.recompute_totals();
}

PropertyMap offline_property_map(const RunConfig& config, const AssertionSequence& seq,
                                 std::size_t property_count) {
  if (config.property_map) return load_property_map(*config.property_map, property_count);
  PropertyMap m;
  for (const auto& a : seq) m.entries[*a.id] = std::nullopt;
  return m;
}

void write_report(const fs::path& dir, const RunReport& report) {
  write_text(dir / "report.json", report.to_json().dump(2) + "\n");
}

}  // namespace

void RunConfig::validate() const {
  if (bound < 1) throw ConfigError("unwind bound k must be at least 1");
  if (!(timeout_seconds > 0)) throw ConfigError("timeout must be positive");
  if (solvers.empty()) throw ConfigError("no solver configured");
  for (const auto& s : solvers) s.validate();
  if (max_retries < 0) throw ConfigError("max retries must not be negative");
}

void RunReport::recompute_totals() {
  totals = {};
  for (const auto& r : records) {
    ++totals.attempted;
    if (r.status == "verified") ++totals.verified;
    else if (r.status == "cond-verified") ++totals.cond_verified;
    else if (r.status == "falsified") ++totals.falsified;
    else ++totals.unknown;
  }
}

json RunReport::to_json() const {
  json recs = json::array();
  for (const auto& r : records) {
    json closure = json::array();
    for (const auto& c : r.closure) closure.push_back(c.value);
    recs.push_back({{"id", r.id.value},
                    {"function", r.function},
                    {"logical_line", r.logical_line},
                    {"predicate", r.predicate},
                    {"status", r.status},
                    {"winning_solver", r.winning_solver ? json(*r.winning_solver) : json()},
                    {"elapsed", r.elapsed},
                    {"closure", closure},
                    {"property", r.property ? json(*r.property) : json()},
                    {"fact", r.fact ? json(*r.fact) : json()},
                    {"counterexample", r.counterexample ? json(*r.counterexample) : json()}});
  }
  return {{"schema_version", kSchemaVersion},
          {"task", task},
          {"mode", mode},
          {"bound", bound},
          {"timeout_seconds", timeout_seconds},
          {"properties", properties},
          {"records", recs},
          {"totals",
           {{"attempted", totals.attempted},
            {"verified", totals.verified},
            {"cond_verified", totals.cond_verified},
            {"falsified", totals.falsified},
            {"unknown", totals.unknown},
            {"unverified", totals.unverified()}}},
          {"timings", {{"llm_seconds", llm_seconds}, {"verify_seconds", verify_seconds}}},
          {"gateway", {{"provider_calls", provider_calls}, {"cache_hits", cache_hits}}},
          {"warnings", warnings},
          {"failed_stage", failed_stage ? json(*failed_stage) : json()},
          {"error", error ? json(*error) : json()}};
}

RunReport RunReport::from_json(const json& j) {
  if (j.value("schema_version", 0) != kSchemaVersion) {
    throw ConfigError("unsupported report schema version");
  }
  RunReport r;
  r.task = j.value("task", "");
  r.mode = j.value("mode", "");
  r.bound = j.value("bound", 5u);
  r.timeout_seconds = j.value("timeout_seconds", 60.0);
  r.properties = j.value("properties", std::vector<std::string>{});
  for (const auto& x : j.at("records")) {
    AssertionRecord a;
    a.id = AssertionId{x.at("id").get<std::size_t>()};
    a.function = x.at("function");
    a.logical_line = x.at("logical_line");
    a.predicate = x.at("predicate");
    a.status = x.at("status");
    if (!x["winning_solver"].is_null()) a.winning_solver = x["winning_solver"].get<std::string>();
    a.elapsed = x.value("elapsed", 0.0);
    for (const auto& c : x.at("closure")) a.closure.insert(AssertionId{c.get<std::size_t>()});
    if (!x["property"].is_null()) a.property = x["property"].get<std::size_t>();
    if (!x["fact"].is_null()) a.fact = x["fact"].get<std::string>();
    if (!x["counterexample"].is_null()) a.counterexample = x["counterexample"].get<std::string>();
    r.records.push_back(std::move(a));
  }
  r.recompute_totals();
  r.llm_seconds = j.at("timings").value("llm_seconds", 0.0);
  r.verify_seconds = j.at("timings").value("verify_seconds", 0.0);
  r.provider_calls = j.at("gateway").value("provider_calls", 0);
  r.cache_hits = j.at("gateway").value("cache_hits", 0);
  r.warnings = j.value("warnings", std::vector<std::string>{});
  if (!j["failed_stage"].is_null()) r.failed_stage = j["failed_stage"].get<std::string>();
  if (!j["error"].is_null()) r.error = j["error"].get<std::string>();
  return r;
}

std::string RunReport::table() const {
  std::ostringstream out;
  out << pad("#", 4) << pad("function", 24) << pad("line", 6) << pad("status", 15)
      << pad("solver", 16) << pad("time(s)", 9) << "predicate\n";
  for (const auto& r : records) {
    std::string status = r.status;
    if (!r.closure.empty()) status += " {" + to_string(r.closure) + "}";
    out << pad(std::to_string(r.id.value), 4) << pad(r.function, 24)
        << pad(std::to_string(r.logical_line), 6) << pad(status, 15)
        << pad(r.winning_solver.value_or("-"), 16) << pad(fmt2(r.elapsed), 9) << r.predicate
        << "\n";
  }
  out << "attempted " << totals.attempted << ", verified " << totals.verified
      << ", cond-verified " << totals.cond_verified << ", falsified " << totals.falsified
      << ", unknown " << totals.unknown << "\n";
  out << "LLM " << fmt1(llm_seconds) << " s, verify " << fmt1(verify_seconds) << " s\n";
  if (failed_stage) out << "failed at stage " << *failed_stage << ": " << error.value_or("") << "\n";
  return out.str();
}

std::unique_ptr<Gateway> make_gateway(const RunConfig& config) {
  std::unique_ptr<Provider> provider;
  if (config.mode == GatewayMode::Live) {
    if (config.provider.kind == ProviderKind::Scripted) {
      if (config.provider.script_dir.empty()) throw ConfigError("scripted provider needs a script directory");
      provider = std::make_unique<ScriptedProvider>(config.provider.script_dir);
    } else {
      provider = std::make_unique<HttpChatProvider>(config.provider.http);
    }
  }
  auto gw = std::make_unique<Gateway>(config.mode, config.cache_dir, std::move(provider),
                                      config.provider.model);
  gw->set_effort(config.provider.effort);
  return gw;
}

RunReport run_verify_only(const fs::path& c_file, const RunConfig& config) {
  config.validate();
  RunReport report;
  report.task = c_file.stem().string();
  report.mode = "verify";
  report.bound = config.bound;
  report.timeout_seconds = config.timeout_seconds;

  const std::string source = read_text(c_file, Stage::Usage);
  std::optional<fs::path> out_dir;
  std::unique_ptr<DirLock> lock;
  if (!config.output_dir.empty()) {
    out_dir = config.output_dir;
    lock = std::make_unique<DirLock>(*out_dir);
    fs::remove_all(*out_dir / "solver_logs");
  }
  try {
    auto diag = compile_check(source, config.compiler);
    if (!diag.success) throw FrontendError("input does not compile:\n" + diag.text());
    const std::string normalized = normalize_assertions(source);
    VerifiedProgram vp = verify_program(
        normalized, config, out_dir ? std::optional(*out_dir / "solver_logs") : std::nullopt, report);
    const PropertyMap props = offline_property_map(config, vp.sequence, 0);
    std::map<AssertionId, std::string> sentences;
    const auto facts = build_facts(vp.sequence, vp.result, config.bound, sentences);
    fill_records(report, vp, props, facts);
    if (out_dir) {
      const std::string p0 = strip_assertions(vp.model);
      write_text(*out_dir / "annotated.c", embed_facts(p0, vp.model, vp.sequence, facts));
      write_report(*out_dir, report);
    }
  } catch (const Error& e) {
    report.failed_stage = std::string(stage_name(e.stage()));
    report.error = e.what();
    if (out_dir) write_report(*out_dir, report);
    throw RunFailed(e, report);
  }
  return report;
}

RunReport run_full(const fs::path& description_file, const RunConfig& config) {
  config.validate();
  const std::string description = read_text(description_file, Stage::Usage);
  if (blank(description)) throw ConfigError("description file " + description_file.string() + " is empty");

  RunReport report;
  report.task = description_file.stem().string();
  report.mode = "full";
  report.bound = config.bound;
  report.timeout_seconds = config.timeout_seconds;

  const fs::path out = config.output_dir;
  DirLock lock(out);
  for (const char* stale : {"transcripts", "solver_logs"}) fs::remove_all(out / stale);
  for (const char* stale : {"p0.c", "pplus.c", "pplusk.c", "annotated.c", "report.json"}) {
    fs::remove(out / stale);
  }

  auto gateway = make_gateway(config);
  gateway->set_transcript_dir(out / "transcripts");
  StageOptions opts{config.max_retries, config.compiler};

  auto sync_gateway_stats = [&] {
    auto st = gateway->stats();
    report.llm_seconds = st.llm_seconds;
    report.provider_calls = st.provider_calls;
    report.cache_hits = st.cache_hits;
  };

  std::optional<VerifiedProgram> vp;
  try {
    log(config, "eliciting properties");
    report.properties = elicit_properties(*gateway, description);
    log(config, "synthesizing program");
    const std::string p0 = synthesize(*gateway, description, opts);
    write_text(out / "p0.c", p0);
    log(config, "annotating with assertions");
    const std::string pplus = annotate(*gateway, description, p0, report.properties, opts);
    write_text(out / "pplus.c", pplus);
    log(config, "reducing loop bounds to k=" + std::to_string(config.bound));
    const std::string pplusk =
        bound_reduce(*gateway, pplus, config.bound, opts,
                     portfolio_unwind_validator(solvers_for(config), config.bound, config.timeout_seconds));
    write_text(out / "pplusk.c", pplusk);

    vp.emplace(verify_program(pplusk, config, out / "solver_logs", report));

    PropertyMap props;
    if (config.offline_facts) {
      props = offline_property_map(config, vp->sequence, report.properties.size());
    } else {
      props = map_to_properties(*gateway, vp->model, vp->sequence, report.properties, &report.warnings);
    }
    std::map<AssertionId, std::string> sentences;
    for (const auto& a : vp->sequence) {
      if (!vp->result.ig.contains(*a.id)) continue;
      sentences[*a.id] =
          translate_fact(config.offline_facts ? nullptr : gateway.get(), vp->model, a, &report.warnings);
    }
    const auto facts = build_facts(vp->sequence, vp->result, config.bound, sentences);
    fill_records(report, *vp, props, facts);
    write_text(out / "annotated.c", embed_facts(p0, vp->model, vp->sequence, facts));
    sync_gateway_stats();
    write_report(out, report);
  } catch (const Error& e) {
    sync_gateway_stats();
    report.failed_stage = std::string(stage_name(e.stage()));
    report.error = e.what();
    write_report(out, report);
    throw RunFailed(e, report);
  }
  for (const auto& w : report.warnings) log(config, "warning: " + w);
  return report;
}

std::string bench_table(const std::vector<BenchRow>& rows) {
  const std::vector<std::string> header = {"Benchmark", "#Assert", "✓", "✓(S)", "Unverified",
                                           "LLM (s)", "Verify (s)"};
  const std::size_t widths[] = {24, 10, 10, 10, 12, 14, 14};
  std::ostringstream out;
  for (std::size_t i = 0; i < header.size(); ++i) out << pad(header[i], widths[i], i > 0);
  out << "\n";
  std::vector<std::vector<double>> cols(6);
  for (const auto& row : rows) {
    out << pad(row.task, widths[0]);
    if (!row.report || row.failed_stage) {
      out << "  failed at " << row.failed_stage.value_or("?") << "\n";
      continue;
    }
    const RunReport& r = *row.report;
    const double vals[] = {double(r.totals.attempted), double(r.totals.verified),
                           double(r.totals.cond_verified), double(r.totals.unverified()),
                           r.llm_seconds, r.verify_seconds};
    for (int c = 0; c < 6; ++c) {
      cols[c].push_back(vals[c]);
      out << pad(c < 4 ? std::to_string(static_cast<long>(vals[c])) : fmt1(vals[c]), widths[c + 1], true);
    }
    out << "\n";
  }
  out << pad("Mean±Std", widths[0]);
  for (int c = 0; c < 6; ++c) {
    const auto& v = cols[c];
    double mean = 0, sd = 0;
    if (!v.empty()) {
      for (double x : v) mean += x;
      mean /= v.size();
      if (v.size() > 1) {
        for (double x : v) sd += (x - mean) * (x - mean);
        sd = std::sqrt(sd / (v.size() - 1));
      }
    }
    out << pad(fmt1(mean) + "±" + fmt1(sd), widths[c + 1], true);
  }
  out << "\n";
  return out.str();
}

BenchResult run_bench(const fs::path& task_dir, const RunConfig& config) {
  config.validate();
  if (!fs::is_directory(task_dir)) throw ConfigError("task directory " + task_dir.string() + " not found");
  std::vector<fs::path> tasks;
  for (const auto& de : fs::directory_iterator(task_dir)) {
    if (de.is_regular_file() && de.path().extension() == ".txt") tasks.push_back(de.path());
  }
  std::sort(tasks.begin(), tasks.end());
  if (tasks.empty()) throw ConfigError("no *.txt task descriptions in " + task_dir.string());

  BenchResult result;
  for (const auto& t : tasks) {
    const std::string name = t.stem().string();
    RunConfig sub = config;
    sub.output_dir = config.output_dir / name;
    if (config.provider.kind == ProviderKind::Scripted && fs::is_directory(config.provider.script_dir / name)) {
      sub.provider.script_dir = config.provider.script_dir / name;
    }
    log(config, "== " + name);
    BenchRow row{name, std::nullopt, std::nullopt, std::nullopt};
    try {
      row.report = run_full(t, sub);
    } catch (const RunFailed& e) {
      row.report = e.partial();
      row.failed_stage = std::string(stage_name(e.stage()));
      row.error = e.what();
    } catch (const Error& e) {
      row.failed_stage = std::string(stage_name(e.stage()));
      row.error = e.what();
    }
    result.rows.push_back(std::move(row));
  }
  result.table = bench_table(result.rows);
  fs::create_directories(config.output_dir);
  json rows = json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"task", r.task},
                    {"report", r.report ? r.report->to_json() : json()},
                    {"failed_stage", r.failed_stage ? json(*r.failed_stage) : json()},
                    {"error", r.error ? json(*r.error) : json()}});
  }
  write_text(config.output_dir / "bench.json", json{{"schema_version", RunReport::kSchemaVersion}, {"rows", rows}}.dump(2) + "\n");
  write_text(config.output_dir / "bench.txt", result.table);
  return result;
}

}  // namespace cofact
