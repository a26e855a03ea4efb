#include "cofact/traversal.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "cofact/error.hpp"

namespace cofact {

AssertionSequence::AssertionSequence(std::vector<Assertion> ordered) : items_(std::move(ordered)) {
  for (std::size_t i = 0; i < items_.size(); ++i) items_[i].id = AssertionId{i + 1};
}

const Assertion& AssertionSequence::at(AssertionId id) const {
  if (id.value == 0 || id.value > items_.size()) {
    throw ConsistencyError("assertion id " + std::to_string(id.value) + " is out of range");
  }
  return items_[id.value - 1];
}

AssertionIdSet AssertionSequence::ids_before(AssertionId id) const {
  AssertionIdSet out;
  for (std::size_t j = 1; j < id.value && j <= items_.size(); ++j) out.insert(AssertionId{j});
  return out;
}

AssertionIdSet AssertionSequence::all_ids() const { return ids_before(AssertionId{items_.size() + 1}); }

namespace {

struct Event {
  std::size_t line;
  int kind;  // 0 = call, 1 = assertion; calls sort first at equal lines
  std::size_t order;
  const Assertion* assertion = nullptr;
  const CallEdge* call = nullptr;
};

class Traverser {
 public:
  Traverser(const std::vector<Assertion>& assertions, const CallGraph& cg) {
    for (std::size_t i = 0; i < assertions.size(); ++i) {
      const Assertion& a = assertions[i];
      events_[a.function].push_back({a.logical_line, 1, i, &a, nullptr});
    }
    for (std::size_t i = 0; i < cg.edges.size(); ++i) {
      const CallEdge& e = cg.edges[i];
      events_[e.caller].push_back({e.call_site_logical_line, 0, i, nullptr, &e});
    }
    for (auto& [fn, evs] : events_) {
      std::stable_sort(evs.begin(), evs.end(), [](const Event& a, const Event& b) {
        if (a.line != b.line) return a.line < b.line;
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.order < b.order;
      });
    }
  }

  void visit(const std::string& fn) {
    if (on_path_.contains(fn) || visited_.contains(fn)) return;
    visited_.insert(fn);
    on_path_.insert(fn);
    if (auto it = events_.find(fn); it != events_.end()) {
      for (const Event& ev : it->second) {
        if (ev.assertion) {
          out_.push_back(*ev.assertion);
        } else {
          visit(ev.call->callee);
        }
      }
    }
    on_path_.erase(fn);
  }

  std::vector<Assertion> take() { return std::move(out_); }

 private:
  std::map<std::string, std::vector<Event>> events_;
  std::set<std::string> on_path_;
  std::set<std::string> visited_;
  std::vector<Assertion> out_;
};

}  // namespace

AssertionSequence cg_traversal(const std::vector<std::string>& functions,
                               const std::vector<Assertion>& assertions, const CallGraph& cg) {
  if (std::find(functions.begin(), functions.end(), "main") == functions.end()) {
    throw Error(Stage::Traversal, "program has no main function");
  }
  Traverser t(assertions, cg);
  t.visit("main");
  for (const auto& fn : functions) t.visit(fn);
  return AssertionSequence(t.take());
}

AssertionSequence cg_traversal(const ProgramModel& model, const CallGraph& cg) {
  std::vector<std::string> names;
  for (const auto& fn : model.functions) names.push_back(fn.name);
  return cg_traversal(names, extract_assertions(model), cg);
}

}  // namespace cofact
