// The structured-loop input language: a function over memrefs and index
// scalars whose body is a nest of `for` loops, declarations, assignments and
// stores.
#pragma once

#include <set>
#include <string>

#include "ember/common/memory.hpp"
#include "ember/common/signature.hpp"
#include "ember/ir/ir.hpp"

namespace ember::scf {

struct Function {
  Signature sig;
  ir::Block body;
};

/// Parses and type-checks. Throws ParseError (with line/column) on syntax
/// errors, undeclared identifiers and type mismatches.
Function parse_scf(std::string_view text);
std::string print_scf(const Function& fn);
bool equal(const Function& a, const Function& b);

struct VerifyResult {
  Diagnostics diags;
  std::set<std::string> read_only;
  std::set<std::string> written;
  bool ok() const { return diags.empty(); }
};

/// Independent re-check of a (possibly hand-built) function: types,
/// declaration before use, immutability of induction variables and that only
/// input-language constructs appear. Also classifies memrefs.
VerifyResult verify_scf(const Function& fn);

/// Sequential reference semantics. Returns the final memory image; throws
/// BoundsError naming the buffer, indices and active loop variables.
Memory interpret_scf(const Function& fn, const Memory& inputs);

}  // namespace ember::scf
