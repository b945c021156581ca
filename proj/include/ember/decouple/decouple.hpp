// Splits a structured-loop function into stream loops (address generation)
// and callbacks (compute).
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ember/scf/scf.hpp"
#include "ember/slc/slc.hpp"

namespace ember::decouple {

enum class LoopKind { Candidate, Workspace, Rejected };
const char* loop_kind_name(LoopKind k);

struct LoopClass {
  std::string path;  // induction variables from the root, joined by '/'
  LoopKind kind = LoopKind::Workspace;
  std::string reason;
};

struct LoadClass {
  std::string loop;  // path of the enclosing loop ("" at function level)
  std::string load;  // printed load expression
  bool offloadable = false;
};

struct Classification {
  std::vector<LoopClass> loops;  // program order
  std::vector<LoadClass> loads;  // filled by lowering
  std::map<const ir::Stmt*, LoopKind> kind_of;

  const LoopClass* find(const std::string& path) const;
  std::vector<std::string> candidates() const;
};

/// Classifies every loop. A candidate has bounds computable from literals,
/// scalar parameters and streams of enclosing candidates, and loads some
/// read-only memref that no earlier statement of the enclosing candidates
/// has read. `extra_written` marks further memrefs as written. Throws
/// VerifyError when two sibling loops are both candidates.
Classification classify_loops(const scf::Function& fn, const std::set<std::string>& extra_written = {});

/// Lowers to the streaming loop IR: candidate loops become stream loops,
/// read-only loads with stream-computable indices become load streams, index
/// arithmetic feeding them becomes alu streams, and everything else runs in
/// callbacks. `cls`, if given, receives the loop and load classification.
slc::Function lower_scf_to_slc(const scf::Function& fn, Classification* cls = nullptr);

/// {"loops": {path: {"class", "reason"}}, "loads": [{"loop", "load", "class"}]}
std::string classification_json(const Classification& c);

}  // namespace ember::decouple
