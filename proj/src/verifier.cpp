#include "cofact/verifier.hpp"

#include <map>

#include "cofact/frontend.hpp"

namespace cofact {

PortfolioChecker::PortfolioChecker(const ProgramModel& model, std::vector<SolverConfig> configs,
                                   unsigned bound, double timeout_seconds)
    : model_(model), configs_(std::move(configs)), bound_(bound), timeout_(timeout_seconds) {}

std::string PortfolioChecker::render_query(const AssertionSequence& sequence, AssertionId target,
                                           const AssertionIdSet& assumed,
                                           const std::string& dialect) const {
  RoleMap roles;
  for (const auto& a : sequence) {
    AssertionRole role = AssertionRole::Drop;
    if (*a.id == target) role = AssertionRole::KeepAsAssert;
    else if (assumed.contains(*a.id)) role = AssertionRole::ConvertToAssume;
    roles[a.statement.begin] = role;
  }
  // Assertions outside the sequence (none in practice) are dropped as well.
  auto all = extract_assertions(model_);
  for (const auto& a : all) roles.try_emplace(a.statement.begin, AssertionRole::Drop);
  return render_with_roles(model_, all, roles, dialect);
}

Verdict PortfolioChecker::check(const AssertionSequence& sequence, AssertionId target,
                                const AssertionIdSet& assumed) {
  std::map<std::string, std::string> by_dialect;
  for (const auto& c : configs_) {
    if (!by_dialect.contains(c.dialect)) {
      by_dialect[c.dialect] = render_query(sequence, target, assumed, c.dialect);
    }
  }
  return run_portfolio(configs_, PortfolioInput(std::move(by_dialect)), bound_, timeout_);
}

AssertionIdSet VerifyRunResult::attempted() const {
  AssertionIdSet out = ig.falsified;
  for (const auto& [id, _] : ig.entries) out.insert(id);
  out.insert(unknown.begin(), unknown.end());
  return out;
}

VerifyRunResult verify_all(const AssertionSequence& sequence, BoundedChecker& checker,
                           const VerifyProgress& progress) {
  VerifyRunResult result;
  for (const auto& a : sequence) {
    const AssertionId id = *a.id;
    CheckRecord record{id, {}, std::nullopt, {}};
    try {
      record.standalone = checker.check(sequence, id, {});
      if (record.standalone.outcome == Outcome::Verified) {
        result.ig.entries[id] = {};
      } else {
        record.assumed = sequence.ids_before(id);
        record.compositional = checker.check(sequence, id, record.assumed);
        switch (record.compositional->outcome) {
          case Outcome::Verified: result.ig.entries[id] = record.assumed; break;
          case Outcome::Falsified: result.ig.falsified.insert(id); break;
          case Outcome::Unknown: result.unknown.insert(id); break;
        }
      }
    } catch (const Error& e) {
      throw VerifyAborted(e.stage(), "verification of assertion " + std::to_string(id.value) +
                                         " aborted: " + e.what(),
                          std::move(result));
    }
    if (progress) progress(record);
    result.log.push_back(std::move(record));
  }
  return result;
}

VerifyRunResult verify_all(const ProgramModel& model, const AssertionSequence& sequence,
                           const std::vector<SolverConfig>& configs, unsigned bound,
                           double timeout_seconds, const VerifyProgress& progress) {
  PortfolioChecker checker(model, configs, bound, timeout_seconds);
  return verify_all(sequence, checker, progress);
}

namespace {

const AssertionIdSet& closure_of(const ImplicationGraph& ig, AssertionId id,
                                 std::map<AssertionId, AssertionIdSet>& memo) {
  if (auto it = memo.find(id); it != memo.end()) return it->second;
  AssertionIdSet out;
  auto entry = ig.entries.find(id);
  if (entry == ig.entries.end()) {
    out.insert(id);
  } else {
    for (const auto& j : entry->second) {
      if (!(j < id)) {
        throw ConsistencyError("implication graph entry " + std::to_string(id.value) +
                               " references a non-preceding assertion");
      }
      const auto& sub = closure_of(ig, j, memo);
      out.insert(sub.begin(), sub.end());
    }
  }
  return memo.emplace(id, std::move(out)).first->second;
}

}  // namespace

AssertionIdSet dependency_closure(const ImplicationGraph& ig, const AssertionIdSet& attempted,
                                  AssertionId id) {
  if (!attempted.contains(id)) {
    throw ConsistencyError("dependency closure requested for unattempted assertion " +
                           std::to_string(id.value));
  }
  std::map<AssertionId, AssertionIdSet> memo;
  return closure_of(ig, id, memo);
}

}  // namespace cofact
