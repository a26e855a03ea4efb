#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "cofact/error.hpp"
#include "cofact/facts.hpp"
#include "cofact/frontend.hpp"
#include "cofact/pipeline.hpp"
#include "cofact/process.hpp"
#include "cofact/stages.hpp"
#include "cofact/traversal.hpp"
#include "cofact/verifier.hpp"
#include "enum_oracle.hpp"
#include "enum_solver.hpp"
#include "generators.hpp"
#include "golden_case.hpp"
#include "mock_checker.hpp"

using namespace cofact;
namespace fs = std::filesystem;

namespace {

const fs::path kData = COFACT_TEST_DATA;

struct Result {
  bool pass = false;
  std::string detail;
};

void note(const std::string& text) { std::cout << "  note: " << text << "\n"; }

std::string show(const AssertionIdSet& s) {
  std::string out = "{";
  for (const auto& a : s) out += (out.size() > 1 ? ", " : "") + std::to_string(a.value);
  return out + "}";
}

std::string show(const ImplicationGraph& ig) {
  std::string out = "{";
  for (const auto& [id, s] : ig.entries) {
    out += (out.size() > 1 ? ", " : "") + std::to_string(id.value) + ":" + (s.empty() ? "∅" : show(s));
  }
  return out + "}";
}

std::optional<SolverConfig> cbmc_solver() {
  if (!find_executable("cbmc")) return std::nullopt;
  return default_portfolio().front();
}

std::vector<SolverConfig> available_portfolio() {
  std::vector<SolverConfig> out;
  for (const auto& s : default_portfolio()) {
    if (find_executable(s.binary)) out.push_back(s);
  }
  return out;
}

Result verify_only_bubblesort() {
  const fs::path fixture = kData / "fixtures" / "bubblesort.c";
  TempDir dir("cofact-accept");
  RunConfig c;
  c.bound = 5;
  c.timeout_seconds = 60;
  c.output_dir = dir.path() / "out";
  if (!cbmc_solver()) {
    ::setenv("COFACT_ENUM_DOMAIN", "-1:1:8", 1);
    c.solvers = {gen::enum_solver()};
    auto r = run_verify_only(fixture, c);
    ::unsetenv("COFACT_ENUM_DOMAIN");
    note("enumeration stand-in over inputs in [-1, 1], not counted: " + std::to_string(r.totals.verified) + "/" +
         std::to_string(r.totals.attempted) + " verified");
    return {false, "cbmc not found on PATH"};
  }
  c.solvers = available_portfolio();
  auto r = run_verify_only(fixture, c);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu/%zu verified, verify %.1f s (limit 120 s)", r.totals.verified,
                r.totals.attempted, r.verify_seconds);
  return {r.totals.attempted == 10 && r.totals.verified == 10 && r.verify_seconds <= 120, buf};
}

Result compositional_fixture() {
  auto model = parse_program(normalize_assertions(gen::read_text(kData / "fixtures" / "compositional.c")));
  auto seq = cg_traversal(model, build_call_graph(model));
  if (seq.size() != 2) return {false, "fixture has " + std::to_string(seq.size()) + " assertions"};
  std::vector<SolverConfig> solvers;
  if (auto c = cbmc_solver()) {
    solvers = {*c};
  } else {
    solvers = {gen::enum_solver()};
    note("cbmc not found; the checker is the enumeration stand-in");
  }
  auto r = verify_all(model, seq, solvers, 5, 60);
  const AssertionId a1{1}, a2{2};

  auto oracle_run = oracle::enumerate(model.source);
  const int l1 = static_cast<int>(seq.at(a1).source_line);
  const int l2 = static_cast<int>(seq.at(a2).source_line);
  const bool oracle_standalone_fails = oracle_run.violated(l2);
  const bool oracle_compositional_holds = !oracle_run.violated(l2, {l1});
  const CheckRecord& rec2 = r.log.at(1);
  const bool standalone_agrees = (rec2.standalone.outcome == Outcome::Falsified) == oracle_standalone_fails;
  const bool compositional_agrees =
      rec2.compositional && (rec2.compositional->outcome == Outcome::Verified) == oracle_compositional_holds;
  note(std::string("oracle: a2 standalone ") + (oracle_standalone_fails ? "falsified" : "holds") +
       ", a2 assuming a1 " + (oracle_compositional_holds ? "holds" : "falsified") + ", a1 " +
       (oracle_run.violated(l1) ? "falsified" : "holds") + "; checker agrees: " +
       (standalone_agrees && compositional_agrees ? "yes" : "no"));

  bool closure_ok = true;
  std::string closure_text = "n/a";
  if (r.ig.contains(a2)) {
    auto closure = dependency_closure(r.ig, r.attempted(), a2);
    closure_ok = closure == gen::naive_closure(r.ig, a2);
    closure_text = show(closure);
  }
  ImplicationGraph expected;
  expected.entries[a1] = {};
  expected.entries[a2] = {a1};
  const bool exact = r.ig.entries == expected.entries && r.ig.falsified.empty();
  return {exact && closure_ok && oracle_run.conclusive() && standalone_agrees && compositional_agrees,
          "ig = " + show(r.ig) + ", F = " + show(r.ig.falsified) + " (expected ig = {1:∅, 2:{1}}); closure(2) = " +
              closure_text + (closure_ok ? " matches" : " differs from") + " the naive oracle"};
}

Result mock_theorems() {
  std::mt19937 rng(90210);
  int instances = 0, entries = 0, violations = 0;
  for (int round = 0; round < 2000; ++round) {
    auto model = gen::random_micro_model(rng, 6);
    gen::MockChecker checker(model, &rng, round % 2 ? 0.2 : 0.0);
    auto seq = gen::placeholder_sequence(model.assertions);
    auto r = verify_all(seq, checker);
    ++instances;
    if (!r.ig.well_formed()) ++violations;
    for (const auto& [id, s] : r.ig.entries) {
      ++entries;
      const int i = static_cast<int>(id.value);
      const auto& execs = s.empty() ? model.executions : gen::assume_executions(model, gen::as_ints(s));
      if (!gen::holds_everywhere(execs, i)) ++violations;
      auto closure = dependency_closure(r.ig, r.attempted(), id);
      if (closure != gen::naive_closure(r.ig, id)) ++violations;
      if (!gen::holds_everywhere(gen::assume_executions(model, gen::as_ints(closure)), i)) ++violations;
    }
    for (const auto& f : r.falsified()) {
      auto before = gen::assume_executions(model, gen::as_ints(seq.ids_before(f)));
      if (gen::holds_everywhere(before, static_cast<int>(f.value))) ++violations;
    }
  }
  return {instances >= 1000 && violations == 0,
          std::to_string(instances) + " micro-models, " + std::to_string(entries) + " ig entries, " +
              std::to_string(violations) + " violations"};
}

Result traversal_property() {
  std::mt19937 rng(314159);
  int graphs = 0, edges = 0, constraints = 0, violations = 0;
  for (int round = 0; round < 1200; ++round) {
    auto p = gen::random_program(rng, std::uniform_int_distribution<int>(1, 7)(rng), true);
    auto m = parse_program(p.source);
    auto cg = build_call_graph(m);
    auto seq = cg_traversal(m, cg);
    ++graphs;
    edges += static_cast<int>(cg.edges.size());
    if (seq.size() != p.assertions.size()) {
      ++violations;
      continue;
    }
    std::map<std::string, std::size_t> pos;
    for (const auto& a : seq) pos[a.predicate] = a.id->value;
    for (const auto& [earlier, later] : gen::ordering_requirements(p)) {
      ++constraints;
      if (pos.at(earlier) >= pos.at(later)) ++violations;
    }
  }
  int cyclic = 0, count_errors = 0;
  for (int round = 0; round < 400; ++round) {
    auto p = gen::random_program(rng, std::uniform_int_distribution<int>(1, 6)(rng), false);
    auto m = parse_program(p.source);
    auto seq = cg_traversal(m, build_call_graph(m));
    ++cyclic;
    std::set<std::string> seen;
    for (const auto& a : seq) seen.insert(a.predicate);
    if (seq.size() != p.assertions.size() || seen.size() != seq.size()) ++count_errors;
  }
  return {graphs >= 1000 && violations == 0 && count_errors == 0,
          std::to_string(graphs) + " acyclic graphs (" + std::to_string(edges) + " edges, " +
              std::to_string(constraints) + " ordering constraints, " + std::to_string(violations) +
              " violated); " + std::to_string(cyclic) + " cyclic graphs, " + std::to_string(count_errors) +
              " count mismatches"};
}

Result brute_force_agreement() {
  auto solvers = available_portfolio();
  if (solvers.empty()) return {false, "no solver of the portfolio (cbmc, esbmc) found on PATH"};
  int fixtures = 0, queries = 0, disagreements = 0, inconclusive = 0;
  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(kData / "bruteforce")) files.push_back(de.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto model = parse_program(normalize_assertions(gen::read_text(f)));
    auto seq = cg_traversal(model, build_call_graph(model));
    auto run = oracle::enumerate(model.source);
    ++fixtures;
    if (!run.conclusive()) {
      ++inconclusive;
      continue;
    }
    PortfolioChecker checker(model, solvers, 5, 60);
    for (const auto& a : seq) {
      const int line = static_cast<int>(a.source_line);
      std::set<int> before_lines;
      for (const auto& b : seq.ids_before(*a.id)) before_lines.insert(static_cast<int>(seq.at(b).source_line));
      for (const auto& [assumed, lines] : {std::pair{AssertionIdSet{}, std::set<int>{}},
                                           std::pair{seq.ids_before(*a.id), before_lines}}) {
        auto v = checker.check(seq, *a.id, assumed);
        ++queries;
        const bool violated = run.violated(line, lines);
        const bool agree = violated ? v.outcome == Outcome::Falsified : v.outcome == Outcome::Verified;
        if (!agree) {
          ++disagreements;
          note(f.filename().string() + " a" + std::to_string(a.id->value) + ": checker " +
               std::string(outcome_name(v.outcome)) + ", oracle " + (violated ? "violated" : "holds"));
        }
      }
    }
  }
  return {fixtures >= 10 && disagreements == 0 && inconclusive == 0,
          std::to_string(fixtures) + " fixtures, " + std::to_string(queries) + " queries, " +
              std::to_string(disagreements) + " disagreements, " + std::to_string(inconclusive) +
              " inconclusive enumerations"};
}

std::vector<std::string> stability_corpus() {
  std::vector<std::string> out;
  out.push_back(gen::read_text(kData / "fixtures" / "bubblesort.c"));
  for (const auto& de : fs::directory_iterator(kData / "bruteforce")) out.push_back(gen::read_text(de.path()));
  for (const char* g : {"sum", "clamp"}) out.push_back(gen::read_text(kData / "golden" / g / "pplus.c"));
  for (const auto& de : fs::directory_iterator(kData / "transcripts")) {
    if (auto code = extract_c_block(gen::read_text(de.path() / "script" / "annotate.txt"))) out.push_back(*code);
  }
  return out;
}

std::size_t line_start(const std::string& s, std::size_t pos) {
  auto nl = pos == 0 ? std::string::npos : s.rfind('\n', pos - 1);
  return nl == std::string::npos ? 0 : nl + 1;
}

std::size_t line_end(const std::string& s, std::size_t pos) {
  auto nl = s.find('\n', pos);
  return nl == std::string::npos ? s.size() : nl + 1;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

// Line starts inside function bodies where a statement may begin.
std::vector<std::size_t> insertion_points(const ProgramModel& m) {
  std::vector<std::size_t> out;
  const std::string& s = m.source;
  for (const auto& fn : m.functions) {
    std::size_t pos = line_end(s, fn.body.begin);
    while (pos < fn.body.end) {
      std::size_t end = line_end(s, pos);
      std::string prev = trim(s.substr(line_start(s, pos - 1), pos - line_start(s, pos - 1)));
      std::string cur = trim(s.substr(pos, end - pos));
      const bool boundary = !prev.empty() && (prev.back() == ';' || prev.back() == '{' || prev.back() == '}');
      if (boundary && cur.rfind("else", 0) != 0 && cur.rfind("#", 0) != 0) out.push_back(pos);
      pos = end;
    }
  }
  return out;
}

Result logical_line_stability() {
  const auto corpus = stability_corpus();
  std::mt19937 rng(8675309);
  int edits = 0, trials = 0, survivors_checked = 0, mismatches = 0, probe = 0;
  while (edits < 100) {
    std::string text = normalize_assertions(corpus[rng() % corpus.size()]);
    auto base = parse_program(text);
    auto original = extract_assertions(base);
    std::vector<std::optional<std::size_t>> offset;
    for (const auto& a : original) offset.push_back(a.statement.begin);
    ++trials;
    const int n_edits = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int e = 0; e < n_edits; ++e) {
      auto current = parse_program(text);
      std::vector<std::size_t> removable;
      for (std::size_t i = 0; i < offset.size(); ++i) {
        if (!offset[i]) continue;
        std::size_t ls = line_start(text, *offset[i]), le = line_end(text, *offset[i]);
        auto as = extract_assertions(current);
        auto it = std::find_if(as.begin(), as.end(), [&](const Assertion& a) { return a.statement.begin == *offset[i]; });
        if (it != as.end() && trim(text.substr(ls, le - ls)) == trim(text.substr(it->statement.begin, it->statement.size()))) {
          removable.push_back(i);
        }
      }
      const bool insert = removable.empty() || rng() % 2 == 0;
      if (insert) {
        auto points = insertion_points(current);
        if (points.empty()) continue;
        std::size_t at = points[rng() % points.size()];
        std::string line = "  assert(edit_probe_" + std::to_string(++probe) + " >= 0);\n";
        text.insert(at, line);
        for (auto& o : offset) {
          if (o && *o >= at) *o += line.size();
        }
      } else {
        std::size_t victim = removable[rng() % removable.size()];
        std::size_t ls = line_start(text, *offset[victim]), le = line_end(text, *offset[victim]);
        text.erase(ls, le - ls);
        offset[victim].reset();
        for (auto& o : offset) {
          if (o && *o >= le) *o -= le - ls;
        }
      }
      ++edits;
    }
    auto edited = extract_assertions(parse_program(text));
    std::map<std::size_t, const Assertion*> at;
    for (const auto& a : edited) at[a.statement.begin] = &a;
    for (std::size_t i = 0; i < original.size(); ++i) {
      if (!offset[i]) continue;
      ++survivors_checked;
      auto it = at.find(*offset[i]);
      if (it == at.end() || it->second->function != original[i].function ||
          it->second->logical_line != original[i].logical_line || it->second->predicate != original[i].predicate) {
        ++mismatches;
      }
    }
  }
  return {edits >= 100 && mismatches == 0,
          std::to_string(edits) + " edits over " + std::to_string(trials) + " edited programs, " +
              std::to_string(survivors_checked) + " surviving assertions, " + std::to_string(mismatches) +
              " logical-line changes"};
}

Result fact_format() {
  int cases = 0, embed_ok = 0, strip_ok = 0;
  for (const char* name : {"sum", "clamp"}) {
    gen::GoldenCase c(kData / "golden" / name);
    ++cases;
    embed_ok += c.embed() == c.expected;
    strip_ok += strip_facts(c.expected) == c.p0;
  }
  return {embed_ok == cases && strip_ok == cases,
          std::to_string(embed_ok) + "/" + std::to_string(cases) + " golden embeddings byte-exact, " +
              std::to_string(strip_ok) + "/" + std::to_string(cases) + " strips reproduce P0"};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& de : fs::recursive_directory_iterator(root)) {
    if (!de.is_regular_file() || de.path().filename() == ".lock") continue;
    std::string text = gen::read_text(de.path());
    if (de.path().filename() == "report.json") {
      auto j = nlohmann::json::parse(text);
      j.erase("timings");
      for (auto& r : j["records"]) r.erase("elapsed");
      text = j.dump(2);
    }
    files[fs::relative(de.path(), root).string()] = text;
  }
  return files;
}

Result hermetic_pipeline() {
  std::vector<fs::path> sets;
  for (const auto& de : fs::directory_iterator(kData / "transcripts")) sets.push_back(de.path());
  std::sort(sets.begin(), sets.end());
  std::vector<SolverConfig> solvers;
  if (auto c = cbmc_solver()) {
    solvers = {*c};
  } else {
    solvers = {gen::enum_solver()};
    note("cbmc not found; the checker is the enumeration stand-in");
  }
  ::unsetenv("COFACT_ACCEPT_UNSET_KEY");
  TempDir dir("cofact-accept");
  int completed = 0, reproducible = 0, provider_calls = 0;
  for (const auto& set : sets) {
    std::map<std::string, std::string> snaps[2];
    bool ok = true;
    for (int run = 0; run < 2; ++run) {
      RunConfig c;
      c.mode = GatewayMode::Replay;
      c.provider.kind = ProviderKind::Http;
      c.provider.http.endpoint = "http://192.0.2.1:9";
      c.provider.http.credential_env = "COFACT_ACCEPT_UNSET_KEY";
      c.cache_dir = set / "cache";
      c.solvers = solvers;
      c.output_dir = dir.path() / (set.filename().string() + std::to_string(run));
      try {
        auto r = run_full(set / "description.txt", c);
        provider_calls += r.provider_calls;
        ok = ok && r.cache_hits > 0;
      } catch (const Error& e) {
        note(set.filename().string() + ": " + std::string(stage_name(e.stage())) + ": " + e.what());
        ok = false;
        break;
      }
      snaps[run] = snapshot(c.output_dir);
    }
    if (!ok) continue;
    ++completed;
    if (snaps[0] == snaps[1] && !snaps[0].empty()) ++reproducible;
    else note(set.filename().string() + ": outputs differ between replays");
  }
  return {sets.size() >= 3 && completed == static_cast<int>(sets.size()) && reproducible == completed &&
              provider_calls == 0,
          std::to_string(completed) + "/" + std::to_string(sets.size()) + " transcript sets replayed, " +
              std::to_string(reproducible) + " byte-reproducible, " + std::to_string(provider_calls) +
              " provider calls"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
      {"verify-only bubblesort", verify_only_bubblesort},
      {"compositional fixture", compositional_fixture},
      {"mock-verifier soundness", mock_theorems},
      {"traversal ordering", traversal_property},
      {"brute-force agreement", brute_force_agreement},
      {"logical-line stability", logical_line_stability},
      {"fact-format regression", fact_format},
      {"hermetic pipeline", hermetic_pipeline},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Result r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string("error: ") + e.what()};
    }
    failed += !r.pass;
    std::cout << (r.pass ? "PASS " : "FAIL ") << name << ": " << r.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
