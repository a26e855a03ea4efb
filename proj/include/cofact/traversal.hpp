#pragma once

#include <cstddef>
#include <vector>

#include "cofact/frontend.hpp"
#include "cofact/model.hpp"

namespace cofact {

// Assertions in verification order with ids 1..m assigned.
class AssertionSequence {
 public:
  AssertionSequence() = default;
  explicit AssertionSequence(std::vector<Assertion> ordered);

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Assertion& at(AssertionId id) const;
  const std::vector<Assertion>& items() const { return items_; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  AssertionIdSet ids_before(AssertionId id) const;
  AssertionIdSet all_ids() const;

 private:
  std::vector<Assertion> items_;
};

// Orders assertions so that callee assertions precede the caller assertions
// that follow the call site. Depth-first from `main`, skipping functions on
// the current path; a callee is expanded at its first call site only.
// Functions unreachable from main are traversed afterwards, rooted in
// declaration order. Throws Error(Stage::Traversal) when there is no main.
AssertionSequence cg_traversal(const ProgramModel& model, const CallGraph& cg);

// Same ordering over pre-extracted assertions (document order per function).
AssertionSequence cg_traversal(const std::vector<std::string>& functions,
                               const std::vector<Assertion>& assertions, const CallGraph& cg);

}  // namespace cofact
