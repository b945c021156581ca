// Statement and expression trees shared by the input language, SLC callbacks
// and DLC execute arms.
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ember/common/error.hpp"
#include "ember/common/types.hpp"

namespace ember::ir {

/// Scalar (`width == 0`), vector `vec<W x T>`, or buffer `buf<W x T>` (a
/// sequence of W-lane chunks).
struct Type {
  Elem elem = Elem::Index;
  int width = 0;
  bool buffer = false;

  static Type scalar(Elem e) { return {e, 0, false}; }
  static Type vector(Elem e, int w) { return {e, w, false}; }
  static Type buf(Elem e, int w) { return {e, w, true}; }
  bool is_scalar() const { return width == 0 && !buffer; }
  bool is_vector() const { return width > 0 && !buffer; }
  int lanes() const { return width == 0 ? 1 : width; }
  bool operator==(const Type&) const = default;
};

std::string type_name(Type t);

struct Expr;
using ExprP = std::shared_ptr<const Expr>;

enum class ExprKind {
  Lit,      // value
  Var,      // name
  Load,     // memref[args]
  Bin,      // args[0] op args[1]
  Abs,      // abs(args[0])
  Extract,  // args[0][lane]
  VLoad,    // vload<width>(memref[args], mask?)  contiguous along last index
  Gather,   // gather<width>(memref[args], mask?) lane-wise indices
  Reduce,   // vreduce_add(args[0], args[1], mask?) ordered lane sum
  Mask,     // vmask<width>(args[0], args[1]): lane j live iff base + j < ub
  Pop,      // dataQ.pop<type>()
};

struct Expr {
  ExprKind kind = ExprKind::Lit;
  Elem elem = Elem::Index;  // Lit
  Bits value = 0;           // Lit
  std::string name;         // Var name or memref
  BinOp op = BinOp::Add;
  int width = 0;  // VLoad/Gather/Mask
  int lane = 0;   // Extract
  Type type;      // Pop
  std::vector<ExprP> args;
  ExprP mask;  // optional for VLoad/Gather/Reduce
};

ExprP lit(Elem e, Bits v);
inline ExprP lit_index(std::uint64_t v) { return lit(Elem::Index, v); }
inline ExprP lit_f32(float f) { return lit(Elem::F32, from_f32(f)); }
ExprP var(std::string name);
ExprP load(std::string memref, std::vector<ExprP> indices);
ExprP bin(BinOp op, ExprP lhs, ExprP rhs);
ExprP abs_of(ExprP arg);
ExprP extract(ExprP vec, int lane);
ExprP vload(int width, std::string memref, std::vector<ExprP> indices, ExprP mask);
ExprP gather(int width, std::string memref, std::vector<ExprP> indices, ExprP mask);
ExprP reduce_add(ExprP init, ExprP vec, ExprP mask);
ExprP vmask(int width, ExprP base, ExprP ub);
ExprP pop(Type t);

struct Stmt;
using Block = std::vector<Stmt>;

enum class StmtKind {
  Let,      // type name = value
  Set,      // name = value
  Store,    // memref[indices] = value
  VStore,   // vstore<width>(value, memref[indices], mask?)
  Scatter,  // scatter<width>(value, memref[indices], mask?)
  For,      // for(idx var = lb; var < ub; var += stride) body
  Drain,    // for<width>(idx var from lb to ub) bind(name <- source, ...) body
};

struct Bind {
  std::string name;
  ExprP source;
};

struct Stmt {
  StmtKind kind = StmtKind::Let;
  SourceLoc loc;
  Type type;         // Let
  std::string name;  // Let/Set target, memref of stores, loop variable
  ExprP value;       // Let/Set/stores
  std::vector<ExprP> indices;
  ExprP mask;
  int width = 0;  // VStore/Scatter/Drain
  ExprP lb, ub;   // For/Drain
  std::uint64_t stride = 1;
  std::vector<Bind> binds;
  Block body;
};

Stmt let(Type t, std::string name, ExprP value);
Stmt set(std::string name, ExprP value);
Stmt store(std::string memref, std::vector<ExprP> indices, ExprP value);
Stmt vstore(int width, ExprP value, std::string memref, std::vector<ExprP> indices, ExprP mask);
Stmt scatter(int width, ExprP value, std::string memref, std::vector<ExprP> indices, ExprP mask);
Stmt for_loop(std::string var, ExprP lb, ExprP ub, std::uint64_t stride, Block body);
Stmt drain(std::string var, int width, ExprP lb, ExprP ub, std::vector<Bind> binds, Block body);

bool equal(const ExprP& a, const ExprP& b);
bool equal(const Stmt& a, const Stmt& b);
bool equal(const Block& a, const Block& b);

/// Calls `fn` on every expression node reachable from `e`, parents first.
template <typename Fn>
void walk(const ExprP& e, Fn&& fn) {
  if (!e) return;
  fn(*e);
  for (const auto& a : e->args) walk(a, fn);
  walk(e->mask, fn);
}

/// Calls `on_stmt` for every statement (recursively) and `on_expr` for every
/// expression node they contain.
template <typename S, typename E>
void walk(const Block& b, S&& on_stmt, E&& on_expr) {
  for (const auto& s : b) {
    on_stmt(s);
    auto visit = [&](const ExprP& e) { walk(e, on_expr); };
    visit(s.value);
    for (const auto& i : s.indices) visit(i);
    visit(s.mask);
    visit(s.lb);
    visit(s.ub);
    for (const auto& bd : s.binds) visit(bd.source);
    walk(s.body, on_stmt, on_expr);
  }
}

/// Rebuilds `e` bottom-up; `fn` maps each rebuilt node to its replacement
/// (return the argument unchanged to keep it).
ExprP rewrite(const ExprP& e, const std::function<ExprP(const ExprP&)>& fn);
void rewrite(Block& b, const std::function<ExprP(const ExprP&)>& fn);

/// Replaces reads of variable `from` by `to` (expression nodes only).
void rename_var(Block& b, const std::string& from, const std::string& to);

/// Names of variables read in `b` that are not bound inside `b`, in order of
/// first use.
std::vector<std::string> free_vars(const Block& b);

/// Memrefs loaded / stored inside `b` (vector forms included).
std::vector<std::string> loaded_memrefs(const Block& b);
std::vector<std::string> stored_memrefs(const Block& b);

}  // namespace ember::ir
