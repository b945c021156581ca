#include "ember/ir/typecheck.hpp"

namespace ember::ir {

void Scope::declare(const std::string& name, Type t, bool immutable) {
  if (lookup(name)) throw TypeError("redeclaration of '" + name + "'");
  if (sig_ && sig_->find(name)) throw TypeError("'" + name + "' shadows a parameter");
  frames_.back()[name] = {t, immutable};
}

const Type* Scope::lookup(const std::string& name) const {
  for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
    auto f = it->find(name);
    if (f != it->end()) return &f->second.type;
  }
  if (sig_) {
    if (const Param* p = sig_->find(name); p && !p->is_memref) {
      static thread_local Type scalar_types[4];
      scalar_types[static_cast<int>(p->elem)] = Type::scalar(p->elem);
      return &scalar_types[static_cast<int>(p->elem)];
    }
  }
  return nullptr;
}

bool Scope::is_immutable(const std::string& name) const {
  for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
    auto f = it->find(name);
    if (f != it->end()) return f->second.immutable;
  }
  return sig_ && sig_->find(name);
}

const Param* Scope::memref(const std::string& name) const {
  if (!sig_) return nullptr;
  const Param* p = sig_->find(name);
  return p && p->is_memref ? p : nullptr;
}

namespace {

std::string tn(Type t) { return type_name(t); }

ExprP coerce_literal(const ExprP& e, Elem want) {
  if (e->kind != ExprKind::Lit || e->elem == want) return e;
  if (e->elem == Elem::Index) {
    if (want == Elem::F32) return lit(Elem::F32, from_f32(static_cast<float>(e->value)));
    if (want == Elem::I32) {
      if (e->value > 0x7fffffffull) throw TypeError("literal out of i32 range");
      return lit(Elem::I32, e->value);
    }
  }
  if (e->elem == Elem::I32 && want == Elem::Index) throw TypeError("negative literal used as index");
  return e;
}

void expect_index_scalar(const ExprP& e, Type t, const char* what) {
  (void)e;
  if (!(t == Type::scalar(Elem::Index))) throw TypeError(std::string(what) + " must be idx, found " + tn(t));
}

std::vector<ExprP> check_indices(const std::vector<ExprP>& idx, const Param& m, const Scope& scope, int width,
                                 bool allow_vector) {
  if (idx.size() != m.shape.size())
    throw TypeError("memref '" + m.name + "' has rank " + std::to_string(m.shape.size()) + ", indexed with " +
                    std::to_string(idx.size()) + " indices");
  std::vector<ExprP> out;
  for (const auto& i : idx) {
    Type t;
    ExprP r = check_expr(i, scope, Elem::Index, &t);
    if (allow_vector && t == Type::vector(Elem::Index, width)) {
      out.push_back(r);
      continue;
    }
    expect_index_scalar(r, t, "index");
    out.push_back(r);
  }
  return out;
}

ExprP check_mask(const ExprP& m, const Scope& scope, int width) {
  if (!m) return m;
  Type t;
  ExprP r = check_expr(m, scope, Elem::I1, &t);
  if (!(t == Type::vector(Elem::I1, width)))
    throw TypeError("mask must be vec<" + std::to_string(width) + " x i1>, found " + tn(t));
  return r;
}

const Param& need_memref(const Scope& scope, const std::string& name) {
  const Param* p = scope.memref(name);
  if (!p) throw TypeError("undeclared memref '" + name + "'");
  return *p;
}

}  // namespace

ExprP check_expr(const ExprP& e, const Scope& scope, std::optional<Elem> hint, Type* out) {
  auto copy_with = [&](std::vector<ExprP> args, ExprP mask) {
    auto c = std::make_shared<Expr>(*e);
    c->args = std::move(args);
    c->mask = std::move(mask);
    return ExprP(c);
  };
  switch (e->kind) {
    case ExprKind::Lit: {
      ExprP r = hint ? coerce_literal(e, *hint) : e;
      *out = Type::scalar(r->elem);
      return r;
    }
    case ExprKind::Var: {
      if (scope.memref(e->name)) throw TypeError("memref '" + e->name + "' used as a value");
      const Type* t = scope.lookup(e->name);
      if (!t) throw TypeError("undeclared identifier '" + e->name + "'");
      *out = *t;
      return e;
    }
    case ExprKind::Load: {
      const Param& m = need_memref(scope, e->name);
      auto idx = check_indices(e->args, m, scope, 0, false);
      *out = Type::scalar(m.elem);
      return copy_with(std::move(idx), nullptr);
    }
    case ExprKind::Bin: {
      // Check the non-literal side first so a literal can adopt its type.
      bool lhs_lit = e->args[0]->kind == ExprKind::Lit;
      int first = lhs_lit ? 1 : 0;
      Type t0, t1;
      ExprP a = check_expr(e->args[first], scope, hint, &t0);
      ExprP b = check_expr(e->args[1 - first], scope, t0.elem, &t1);
      if (lhs_lit && !(e->args[1]->kind == ExprKind::Lit)) {
        // nothing further: literal already coerced to t0.elem
      }
      if (t0.elem != t1.elem)
        throw TypeError("operand types of '" + std::string(1, bin_op_symbol(e->op)) + "' differ: " + tn(t0) + " vs " +
                        tn(t1));
      if (t0.buffer || t1.buffer) throw TypeError("arithmetic on a buffer value");
      if (t0.width && t1.width && t0.width != t1.width) throw TypeError("vector widths differ");
      if ((e->op == BinOp::Div || e->op == BinOp::Rem) && !is_integer(t0.elem))
        throw TypeError("division/modulo operands must be integer typed");
      if (t0.elem == Elem::I1) throw TypeError("arithmetic on masks is not supported");
      *out = Type{t0.elem, std::max(t0.width, t1.width), false};
      std::vector<ExprP> args = first == 0 ? std::vector<ExprP>{a, b} : std::vector<ExprP>{b, a};
      return copy_with(std::move(args), nullptr);
    }
    case ExprKind::Abs: {
      Type t;
      ExprP a = check_expr(e->args[0], scope, hint, &t);
      if (t.elem == Elem::Index || t.elem == Elem::I1 || t.buffer) throw TypeError("abs needs f32 or i32 operand");
      *out = t;
      return copy_with({a}, nullptr);
    }
    case ExprKind::Extract: {
      Type t;
      ExprP a = check_expr(e->args[0], scope, std::nullopt, &t);
      if (!t.is_vector()) throw TypeError("lane extract from non-vector " + tn(t));
      if (e->lane < 0 || e->lane >= t.width) throw TypeError("lane " + std::to_string(e->lane) + " out of range");
      *out = Type::scalar(t.elem);
      return copy_with({a}, nullptr);
    }
    case ExprKind::VLoad:
    case ExprKind::Gather: {
      const Param& m = need_memref(scope, e->name);
      auto idx = check_indices(e->args, m, scope, e->width, e->kind == ExprKind::Gather);
      ExprP mask = check_mask(e->mask, scope, e->width);
      *out = Type::vector(m.elem, e->width);
      return copy_with(std::move(idx), mask);
    }
    case ExprKind::Reduce: {
      Type ti, tv;
      ExprP v = check_expr(e->args[1], scope, hint, &tv);
      if (!tv.is_vector()) throw TypeError("vreduce_add needs a vector operand");
      ExprP init = check_expr(e->args[0], scope, tv.elem, &ti);
      if (!(ti == Type::scalar(tv.elem))) throw TypeError("vreduce_add init must be " + std::string(elem_name(tv.elem)));
      ExprP mask = check_mask(e->mask, scope, tv.width);
      *out = ti;
      return copy_with({init, v}, mask);
    }
    case ExprKind::Mask: {
      Type tb, tu;
      ExprP b = check_expr(e->args[0], scope, Elem::Index, &tb);
      ExprP u = check_expr(e->args[1], scope, Elem::Index, &tu);
      expect_index_scalar(b, tb, "mask base");
      expect_index_scalar(u, tu, "mask bound");
      *out = Type::vector(Elem::I1, e->width);
      return copy_with({b, u}, nullptr);
    }
    case ExprKind::Pop:
      *out = e->type;
      return e;
  }
  throw TypeError("unknown expression");
}

namespace {

void check_stmt(Stmt& s, Scope& scope, Diagnostics* diags, const std::string& path);

void check_value(Stmt& s, const Scope& scope, Type want) {
  Type t;
  s.value = check_expr(s.value, scope, want.elem, &t);
  if (!(t == want)) throw TypeError("type mismatch: expected " + tn(want) + ", found " + tn(t));
}

void check_stmt(Stmt& s, Scope& scope, Diagnostics* diags, const std::string& path) {
  switch (s.kind) {
    case StmtKind::Let: {
      Type t = s.type;
      if (s.value->kind == ExprKind::Pop && t.is_scalar() && s.value->type == Type::vector(t.elem, 1))
        s.value = pop(t);
      try {
        check_value(s, scope, t);
      } catch (...) {
        // Declare anyway so later statements do not cascade.
        if (!scope.lookup(s.name)) scope.declare(s.name, t);
        throw;
      }
      scope.declare(s.name, t);
      return;
    }
    case StmtKind::Set: {
      const Type* t = scope.lookup(s.name);
      if (!t) throw TypeError("undeclared identifier '" + s.name + "'");
      if (scope.is_immutable(s.name)) throw TypeError("cannot assign to '" + s.name + "'");
      check_value(s, scope, *t);
      return;
    }
    case StmtKind::Store: {
      const Param& m = need_memref(scope, s.name);
      s.indices = check_indices(s.indices, m, scope, 0, false);
      check_value(s, scope, Type::scalar(m.elem));
      return;
    }
    case StmtKind::VStore:
    case StmtKind::Scatter: {
      const Param& m = need_memref(scope, s.name);
      s.indices = check_indices(s.indices, m, scope, s.width, s.kind == StmtKind::Scatter);
      s.mask = check_mask(s.mask, scope, s.width);
      check_value(s, scope, Type::vector(m.elem, s.width));
      return;
    }
    case StmtKind::For:
    case StmtKind::Drain: {
      Type tl, tu;
      s.lb = check_expr(s.lb, scope, Elem::Index, &tl);
      s.ub = check_expr(s.ub, scope, Elem::Index, &tu);
      expect_index_scalar(s.lb, tl, "loop lower bound");
      expect_index_scalar(s.ub, tu, "loop upper bound");
      if (s.stride == 0) throw TypeError("stride must be positive literal");
      scope.push();
      try {
        scope.declare(s.name, Type::scalar(Elem::Index), true);
        for (auto& b : s.binds) {
          Type t;
          b.source = check_expr(b.source, scope, std::nullopt, &t);
          bool ok = (t.buffer || t.is_vector()) && t.width == s.width;
          if (!ok) throw TypeError("drain source of '" + b.name + "' must hold " + std::to_string(s.width) + "-lane chunks");
          scope.declare(b.name, Type::vector(t.elem, t.width));
        }
      } catch (...) {
        scope.pop();
        throw;
      }
      std::string sub = path + (s.kind == StmtKind::For ? "for " : "drain ") + s.name + "/";
      check_block(s.body, scope, diags, sub);
      scope.pop();
      return;
    }
  }
}

}  // namespace

void check_block(Block& b, Scope& scope, Diagnostics* diags, const std::string& path) {
  for (std::size_t i = 0; i < b.size(); ++i) {
    Stmt& s = b[i];
    try {
      check_stmt(s, scope, diags, path);
    } catch (const TypeError& err) {
      if (!diags) throw ParseError(s.loc, err.what());
      diags->push_back({path + "stmt " + std::to_string(i), err.what()});
    }
  }
}

}  // namespace ember::ir
