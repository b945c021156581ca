// Type checking and literal resolution for statement trees.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ember/common/signature.hpp"
#include "ember/ir/ir.hpp"

namespace ember::ir {

class TypeError : public Error {
 public:
  using Error::Error;
};

/// Lexically scoped variable environment for the checker.
class Scope {
 public:
  explicit Scope(const Signature* sig) : sig_(sig) { frames_.emplace_back(); }

  void push() { frames_.emplace_back(); }
  void pop() { frames_.pop_back(); }
  /// Throws TypeError if `name` is already visible or names a parameter.
  void declare(const std::string& name, Type t, bool immutable = false);
  const Type* lookup(const std::string& name) const;
  bool is_immutable(const std::string& name) const;
  const Signature* sig() const { return sig_; }
  const Param* memref(const std::string& name) const;

 private:
  struct Entry {
    Type type;
    bool immutable;
  };
  const Signature* sig_;
  std::vector<std::map<std::string, Entry>> frames_;
};

/// Resolves `e` in `scope`: integer literals adopt the element type their
/// context requires, and every operand is checked. Returns the rewritten
/// expression and stores its type in `out`.
ExprP check_expr(const ExprP& e, const Scope& scope, std::optional<Elem> hint, Type* out);

/// Checks one statement list. With `diags` set, errors are recorded (with
/// `path` prefixes) and checking continues; otherwise TypeError propagates
/// carrying "line:col: message".
void check_block(Block& b, Scope& scope, Diagnostics* diags, const std::string& path);

}  // namespace ember::ir
