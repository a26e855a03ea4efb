#include "cofact/model.hpp"

#include "cofact/error.hpp"

namespace cofact {

std::string to_string(const AssertionIdSet& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += std::to_string(id.value);
  }
  return out;
}

std::string_view status_tag(const VerificationStatus& status) {
  struct Visitor {
    std::string_view operator()(const Verified&) const { return "verified"; }
    std::string_view operator()(const CondVerified&) const { return "cond-verified"; }
    std::string_view operator()(const Falsified&) const { return "falsified"; }
    std::string_view operator()(const Unknown&) const { return "unknown"; }
  };
  return std::visit(Visitor{}, status);
}

bool ImplicationGraph::well_formed() const {
  for (const auto& [id, assumed] : entries) {
    if (falsified.contains(id)) return false;
    for (const auto& j : assumed) {
      if (!(j < id)) return false;
    }
  }
  return true;
}

VerificationStatus status_of(AssertionId id, const ImplicationGraph& ig,
                             const AssertionIdSet& timeout_set) {
  int hits = 0;
  VerificationStatus status = Unknown{};
  if (auto it = ig.entries.find(id); it != ig.entries.end()) {
    ++hits;
    if (it->second.empty()) {
      status = Verified{};
    } else {
      status = CondVerified{it->second};
    }
  }
  if (ig.falsified.contains(id)) {
    ++hits;
    status = Falsified{};
  }
  if (timeout_set.contains(id)) {
    ++hits;
    status = Unknown{};
  }
  if (hits != 1) {
    throw ConsistencyError("assertion " + std::to_string(id.value) +
                           (hits == 0 ? " has no verification record"
                                      : " appears in more than one status set"));
  }
  return status;
}

const Function* ProgramModel::find(std::string_view name) const {
  for (const auto& fn : functions) {
    if (fn.name == name) return &fn;
  }
  return nullptr;
}

}  // namespace cofact
