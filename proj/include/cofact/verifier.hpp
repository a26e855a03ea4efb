#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "cofact/error.hpp"
#include "cofact/model.hpp"
#include "cofact/solver.hpp"
#include "cofact/traversal.hpp"

namespace cofact {

// The bounded checker used by verify_all: does `target` hold on every
// k-bounded execution on which all of `assumed` hold?
class BoundedChecker {
 public:
  virtual ~BoundedChecker() = default;
  virtual Verdict check(const AssertionSequence& sequence, AssertionId target,
                        const AssertionIdSet& assumed) = 0;
};

// Renders each query with the target kept, assumptions converted to the
// solver's assume intrinsic and every other assertion dropped, then races
// the portfolio.
class PortfolioChecker : public BoundedChecker {
 public:
  PortfolioChecker(const ProgramModel& model, std::vector<SolverConfig> configs, unsigned bound,
                   double timeout_seconds);

  Verdict check(const AssertionSequence& sequence, AssertionId target,
                const AssertionIdSet& assumed) override;

  // Program text for one query in the given dialect.
  std::string render_query(const AssertionSequence& sequence, AssertionId target,
                           const AssertionIdSet& assumed, const std::string& dialect) const;

 private:
  const ProgramModel& model_;
  std::vector<SolverConfig> configs_;
  unsigned bound_;
  double timeout_;
};

struct CheckRecord {
  AssertionId id;
  Verdict standalone;
  std::optional<Verdict> compositional;
  AssertionIdSet assumed;  // S used for the compositional check
};

struct VerifyRunResult {
  ImplicationGraph ig;
  AssertionIdSet unknown;
  std::vector<CheckRecord> log;

  const AssertionIdSet& falsified() const { return ig.falsified; }
  AssertionIdSet attempted() const;
  VerificationStatus status(AssertionId id) const { return status_of(id, ig, unknown); }
};

// Raised when a query cannot be rendered or run; carries what was verified
// before the failure.
class VerifyAborted : public Error {
 public:
  VerifyAborted(Stage stage, const std::string& what, VerifyRunResult partial)
      : Error(stage, what), partial_(std::move(partial)) {}
  const VerifyRunResult& partial() const { return partial_; }

 private:
  VerifyRunResult partial_;
};

using VerifyProgress = std::function<void(const CheckRecord&)>;

// Standalone check first; on anything but Verified, a compositional check
// assuming every preceding assertion. Sequential, in sequence order.
VerifyRunResult verify_all(const AssertionSequence& sequence, BoundedChecker& checker,
                           const VerifyProgress& progress = {});

VerifyRunResult verify_all(const ProgramModel& model, const AssertionSequence& sequence,
                           const std::vector<SolverConfig>& configs, unsigned bound,
                           double timeout_seconds, const VerifyProgress& progress = {});

// Unverified leaves that a verified assertion ultimately rests on: an
// unverified j contributes {j}, an unconditional one nothing, and a
// conditional one the union over its assumptions.
AssertionIdSet dependency_closure(const ImplicationGraph& ig, const AssertionIdSet& attempted,
                                  AssertionId id);

}  // namespace cofact
