#include "ember/ir/eval.hpp"

namespace ember::ir {

Value* Env::find(const std::string& name) {
  for (Env* e = this; e; e = e->parent_) {
    auto it = e->vars_.find(name);
    if (it != e->vars_.end()) return &it->second;
  }
  return nullptr;
}

const Value& Env::get(const std::string& name) {
  Value* v = find(name);
  if (!v) throw Error("unbound variable '" + name + "'");
  return *v;
}

void Env::assign(const std::string& name, Value v) {
  Value* slot = find(name);
  if (!slot) throw Error("assignment to unbound variable '" + name + "'");
  *slot = std::move(v);
}

std::string EvalContext::loop_state() const {
  std::string s;
  for (const auto& [n, v] : loops) {
    if (!s.empty()) s += ", ";
    s += n + "=" + std::to_string(v);
  }
  return s;
}

namespace {

std::vector<std::uint64_t> scalar_indices(const std::vector<ExprP>& idx, Env& env, EvalContext& ctx) {
  std::vector<std::uint64_t> out;
  out.reserve(idx.size());
  for (const auto& i : idx) out.push_back(eval(*i, env, ctx).bits());
  return out;
}

bool live(const Value* mask, std::size_t j) { return !mask || mask->lanes[j] != 0; }

void count(EvalContext& ctx) {
  if (ctx.mem_requests) ++*ctx.mem_requests;
}

}  // namespace

Value eval(const Expr& e, Env& env, EvalContext& ctx) {
  switch (e.kind) {
    case ExprKind::Lit:
      return Value::scalar(e.elem, e.value);
    case ExprKind::Var:
      return env.get(e.name);
    case ExprKind::Load: {
      const Buffer& b = ctx.mem->buffer(e.name);
      auto idx = scalar_indices(e.args, env, ctx);
      count(ctx);
      return Value::scalar(b.elem, b.data[flat_offset(b, e.name, idx, ctx.loop_state())]);
    }
    case ExprKind::Bin: {
      Value a = eval(*e.args[0], env, ctx);
      Value b = eval(*e.args[1], env, ctx);
      std::size_t n = std::max(a.lanes.size(), b.lanes.size());
      Value r;
      r.type = a.type.width >= b.type.width ? a.type : b.type;
      r.lanes.resize(n);
      for (std::size_t j = 0; j < n; ++j) r.lanes[j] = apply_binary(e.op, a.type.elem, lane(a, j), lane(b, j));
      return r;
    }
    case ExprKind::Abs: {
      Value a = eval(*e.args[0], env, ctx);
      for (auto& l : a.lanes) l = apply_abs(a.type.elem, l);
      return a;
    }
    case ExprKind::Extract: {
      Value a = eval(*e.args[0], env, ctx);
      return Value::scalar(a.type.elem, a.lanes.at(e.lane));
    }
    case ExprKind::VLoad:
    case ExprKind::Gather: {
      const Buffer& b = ctx.mem->buffer(e.name);
      Value mask;
      if (e.mask) mask = eval(*e.mask, env, ctx);
      const Value* m = e.mask ? &mask : nullptr;
      std::vector<Value> idx;
      for (const auto& i : e.args) idx.push_back(eval(*i, env, ctx));
      Value r;
      r.type = Type::vector(b.elem, e.width);
      r.lanes.assign(e.width, 0);
      std::vector<std::uint64_t> at(idx.size());
      for (int j = 0; j < e.width; ++j) {
        if (!live(m, j)) continue;
        for (std::size_t k = 0; k < idx.size(); ++k) at[k] = lane(idx[k], j);
        if (e.kind == ExprKind::VLoad) at.back() += j;
        r.lanes[j] = b.data[flat_offset(b, e.name, at, ctx.loop_state())];
      }
      count(ctx);
      return r;
    }
    case ExprKind::Reduce: {
      Value acc = eval(*e.args[0], env, ctx);
      Value v = eval(*e.args[1], env, ctx);
      Value mask;
      if (e.mask) mask = eval(*e.mask, env, ctx);
      Bits r = acc.bits();
      for (std::size_t j = 0; j < v.lanes.size(); ++j)
        if (live(e.mask ? &mask : nullptr, j)) r = apply_binary(BinOp::Add, v.type.elem, r, v.lanes[j]);
      return Value::scalar(v.type.elem, r);
    }
    case ExprKind::Mask: {
      Bits base = eval(*e.args[0], env, ctx).bits();
      Bits ub = eval(*e.args[1], env, ctx).bits();
      Value r;
      r.type = Type::vector(Elem::I1, e.width);
      r.lanes.resize(e.width);
      for (int j = 0; j < e.width; ++j) r.lanes[j] = base + j < ub ? 1 : 0;
      return r;
    }
    case ExprKind::Pop:
      throw Error("queue pop outside an execute arm");
  }
  throw Error("unknown expression kind");
}

void exec(const Stmt& s, Env& env, EvalContext& ctx) {
  switch (s.kind) {
    case StmtKind::Let: {
      Value v = eval(*s.value, env, ctx);
      v.type = s.type;
      env.define(s.name, std::move(v));
      return;
    }
    case StmtKind::Set: {
      Value v = eval(*s.value, env, ctx);
      v.type = env.get(s.name).type;
      env.assign(s.name, std::move(v));
      return;
    }
    case StmtKind::Store: {
      Buffer& b = ctx.mem->buffer(s.name);
      auto idx = scalar_indices(s.indices, env, ctx);
      Value v = eval(*s.value, env, ctx);
      count(ctx);
      b.data[flat_offset(b, s.name, idx, ctx.loop_state())] = v.bits();
      return;
    }
    case StmtKind::VStore:
    case StmtKind::Scatter: {
      Buffer& b = ctx.mem->buffer(s.name);
      Value v = eval(*s.value, env, ctx);
      Value mask;
      if (s.mask) mask = eval(*s.mask, env, ctx);
      const Value* m = s.mask ? &mask : nullptr;
      std::vector<Value> idx;
      for (const auto& i : s.indices) idx.push_back(eval(*i, env, ctx));
      std::vector<std::uint64_t> at(idx.size());
      for (int j = 0; j < s.width; ++j) {
        if (!live(m, j)) continue;
        for (std::size_t k = 0; k < idx.size(); ++k) at[k] = lane(idx[k], j);
        if (s.kind == StmtKind::VStore) at.back() += j;
        b.data[flat_offset(b, s.name, at, ctx.loop_state())] = lane(v, j);
      }
      count(ctx);
      return;
    }
    case StmtKind::For: {
      Bits lb = eval(*s.lb, env, ctx).bits();
      Bits ub = eval(*s.ub, env, ctx).bits();
      Env inner(&env);
      ctx.loops.emplace_back(s.name, lb);
      for (Bits i = lb; i < ub; i += s.stride) {
        ctx.loops.back().second = i;
        inner.clear();
        inner.define(s.name, Value::scalar(Elem::Index, i));
        exec(s.body, inner, ctx);
        if (i + s.stride < i) break;
      }
      ctx.loops.pop_back();
      return;
    }
    case StmtKind::Drain: {
      Bits lb = eval(*s.lb, env, ctx).bits();
      Bits ub = eval(*s.ub, env, ctx).bits();
      std::vector<Value> sources;
      for (const auto& b : s.binds) sources.push_back(eval(*b.source, env, ctx));
      Env inner(&env);
      ctx.loops.emplace_back(s.name, lb);
      std::size_t k = 0;
      for (Bits i = lb; i < ub; i += s.width, ++k) {
        ctx.loops.back().second = i;
        inner.clear();
        inner.define(s.name, Value::scalar(Elem::Index, i));
        for (std::size_t n = 0; n < s.binds.size(); ++n) {
          const Value& src = sources[n];
          int w = s.width;
          if ((k + 1) * w > src.lanes.size()) throw Error("read from an empty buffer stream '" + s.binds[n].name + "'");
          Value chunk;
          chunk.type = Type::vector(src.type.elem, w);
          chunk.lanes.assign(src.lanes.begin() + k * w, src.lanes.begin() + (k + 1) * w);
          inner.define(s.binds[n].name, std::move(chunk));
        }
        exec(s.body, inner, ctx);
      }
      ctx.loops.pop_back();
      return;
    }
  }
}

void exec(const Block& b, Env& env, EvalContext& ctx) {
  for (const auto& s : b) exec(s, env, ctx);
}

}  // namespace ember::ir
