// Reference evaluator for statement trees over a memory image.
#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ember/common/memory.hpp"
#include "ember/ir/ir.hpp"

namespace ember::ir {

/// Runtime value. Scalars hold one lane, vectors `width` lanes, buffers a
/// whole number of `width`-lane chunks.
struct Value {
  Type type;
  std::vector<Bits> lanes;

  static Value scalar(Elem e, Bits b) { return {Type::scalar(e), {b}}; }
  Bits bits() const { return lanes.at(0); }
  std::size_t chunks() const { return type.width ? lanes.size() / type.width : 0; }
};

/// Variable frame; lookups fall through to the parent frame.
class Env {
 public:
  explicit Env(Env* parent = nullptr) : parent_(parent) {}
  Value* find(const std::string& name);
  const Value& get(const std::string& name);
  void define(const std::string& name, Value v) { vars_[name] = std::move(v); }
  /// Assigns to the innermost frame that defines `name`.
  void assign(const std::string& name, Value v);
  void clear() { vars_.clear(); }

 private:
  Env* parent_;
  std::unordered_map<std::string, Value> vars_;
};

struct EvalContext {
  Memory* mem = nullptr;
  /// Active loop variables, reported by bounds errors.
  std::vector<std::pair<std::string, Bits>> loops;
  /// Incremented once per memory instruction (scalar or vector).
  std::uint64_t* mem_requests = nullptr;

  std::string loop_state() const;
};

Value eval(const Expr& e, Env& env, EvalContext& ctx);
void exec(const Block& b, Env& env, EvalContext& ctx);
void exec(const Stmt& s, Env& env, EvalContext& ctx);

/// Lane j of `v`, broadcasting scalars.
inline Bits lane(const Value& v, std::size_t j) { return v.lanes.size() == 1 ? v.lanes[0] : v.lanes[j]; }

}  // namespace ember::ir
