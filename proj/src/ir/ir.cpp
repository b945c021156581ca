#include "ember/ir/ir.hpp"

#include <algorithm>
#include <set>

namespace ember::ir {

std::string type_name(Type t) {
  std::string elem(elem_name(t.elem));
  if (t.buffer) return "buf<" + std::to_string(t.width) + " x " + elem + ">";
  if (t.width > 0) return "vec<" + std::to_string(t.width) + " x " + elem + ">";
  return elem;
}

namespace {

std::shared_ptr<Expr> node(ExprKind k) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  return e;
}

}  // namespace

ExprP lit(Elem e, Bits v) {
  auto n = node(ExprKind::Lit);
  n->elem = e;
  n->value = v;
  return n;
}

ExprP var(std::string name) {
  auto n = node(ExprKind::Var);
  n->name = std::move(name);
  return n;
}

ExprP load(std::string memref, std::vector<ExprP> indices) {
  auto n = node(ExprKind::Load);
  n->name = std::move(memref);
  n->args = std::move(indices);
  return n;
}

ExprP bin(BinOp op, ExprP lhs, ExprP rhs) {
  auto n = node(ExprKind::Bin);
  n->op = op;
  n->args = {std::move(lhs), std::move(rhs)};
  return n;
}

ExprP abs_of(ExprP arg) {
  auto n = node(ExprKind::Abs);
  n->args = {std::move(arg)};
  return n;
}

ExprP extract(ExprP vec, int lane) {
  auto n = node(ExprKind::Extract);
  n->args = {std::move(vec)};
  n->lane = lane;
  return n;
}

ExprP vload(int width, std::string memref, std::vector<ExprP> indices, ExprP mask) {
  auto n = node(ExprKind::VLoad);
  n->width = width;
  n->name = std::move(memref);
  n->args = std::move(indices);
  n->mask = std::move(mask);
  return n;
}

ExprP gather(int width, std::string memref, std::vector<ExprP> indices, ExprP mask) {
  auto n = node(ExprKind::Gather);
  n->width = width;
  n->name = std::move(memref);
  n->args = std::move(indices);
  n->mask = std::move(mask);
  return n;
}

ExprP reduce_add(ExprP init, ExprP vec, ExprP mask) {
  auto n = node(ExprKind::Reduce);
  n->args = {std::move(init), std::move(vec)};
  n->mask = std::move(mask);
  return n;
}

ExprP vmask(int width, ExprP base, ExprP ub) {
  auto n = node(ExprKind::Mask);
  n->width = width;
  n->args = {std::move(base), std::move(ub)};
  return n;
}

ExprP pop(Type t) {
  auto n = node(ExprKind::Pop);
  n->type = t;
  return n;
}

Stmt let(Type t, std::string name, ExprP value) {
  Stmt s;
  s.kind = StmtKind::Let;
  s.type = t;
  s.name = std::move(name);
  s.value = std::move(value);
  return s;
}

Stmt set(std::string name, ExprP value) {
  Stmt s;
  s.kind = StmtKind::Set;
  s.name = std::move(name);
  s.value = std::move(value);
  return s;
}

Stmt store(std::string memref, std::vector<ExprP> indices, ExprP value) {
  Stmt s;
  s.kind = StmtKind::Store;
  s.name = std::move(memref);
  s.indices = std::move(indices);
  s.value = std::move(value);
  return s;
}

Stmt vstore(int width, ExprP value, std::string memref, std::vector<ExprP> indices, ExprP mask) {
  Stmt s = store(std::move(memref), std::move(indices), std::move(value));
  s.kind = StmtKind::VStore;
  s.width = width;
  s.mask = std::move(mask);
  return s;
}

Stmt scatter(int width, ExprP value, std::string memref, std::vector<ExprP> indices, ExprP mask) {
  Stmt s = vstore(width, std::move(value), std::move(memref), std::move(indices), std::move(mask));
  s.kind = StmtKind::Scatter;
  return s;
}

Stmt for_loop(std::string var, ExprP lb, ExprP ub, std::uint64_t stride, Block body) {
  Stmt s;
  s.kind = StmtKind::For;
  s.name = std::move(var);
  s.lb = std::move(lb);
  s.ub = std::move(ub);
  s.stride = stride;
  s.body = std::move(body);
  return s;
}

Stmt drain(std::string var, int width, ExprP lb, ExprP ub, std::vector<Bind> binds, Block body) {
  Stmt s = for_loop(std::move(var), std::move(lb), std::move(ub), 1, std::move(body));
  s.kind = StmtKind::Drain;
  s.width = width;
  s.binds = std::move(binds);
  return s;
}

bool equal(const ExprP& a, const ExprP& b) {
  if (!a || !b) return !a && !b;
  if (a->kind != b->kind || a->args.size() != b->args.size()) return false;
  switch (a->kind) {
    case ExprKind::Lit:
      if (a->elem != b->elem || a->value != b->value) return false;
      break;
    case ExprKind::Var:
    case ExprKind::Load:
      if (a->name != b->name) return false;
      break;
    case ExprKind::Bin:
      if (a->op != b->op) return false;
      break;
    case ExprKind::Extract:
      if (a->lane != b->lane) return false;
      break;
    case ExprKind::VLoad:
    case ExprKind::Gather:
      if (a->name != b->name || a->width != b->width) return false;
      break;
    case ExprKind::Mask:
      if (a->width != b->width) return false;
      break;
    case ExprKind::Pop:
      if (!(a->type == b->type)) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!equal(a->args[i], b->args[i])) return false;
  return equal(a->mask, b->mask);
}

namespace {

bool equal_list(const std::vector<ExprP>& a, const std::vector<ExprP>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!equal(a[i], b[i])) return false;
  return true;
}

}  // namespace

bool equal(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind || a.name != b.name || a.width != b.width || a.stride != b.stride) return false;
  if (a.kind == StmtKind::Let && !(a.type == b.type)) return false;
  if (!equal(a.value, b.value) || !equal(a.mask, b.mask) || !equal(a.lb, b.lb) || !equal(a.ub, b.ub))
    return false;
  if (!equal_list(a.indices, b.indices)) return false;
  if (a.binds.size() != b.binds.size()) return false;
  for (std::size_t i = 0; i < a.binds.size(); ++i)
    if (a.binds[i].name != b.binds[i].name || !equal(a.binds[i].source, b.binds[i].source)) return false;
  return equal(a.body, b.body);
}

bool equal(const Block& a, const Block& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!equal(a[i], b[i])) return false;
  return true;
}

ExprP rewrite(const ExprP& e, const std::function<ExprP(const ExprP&)>& fn) {
  if (!e) return e;
  bool changed = false;
  std::vector<ExprP> args;
  args.reserve(e->args.size());
  for (const auto& a : e->args) {
    args.push_back(rewrite(a, fn));
    changed |= args.back() != a;
  }
  ExprP mask = rewrite(e->mask, fn);
  changed |= mask != e->mask;
  ExprP cur = e;
  if (changed) {
    auto copy = std::make_shared<Expr>(*e);
    copy->args = std::move(args);
    copy->mask = std::move(mask);
    cur = copy;
  }
  return fn(cur);
}

void rewrite(Block& b, const std::function<ExprP(const ExprP&)>& fn) {
  for (auto& s : b) {
    s.value = rewrite(s.value, fn);
    for (auto& i : s.indices) i = rewrite(i, fn);
    s.mask = rewrite(s.mask, fn);
    s.lb = rewrite(s.lb, fn);
    s.ub = rewrite(s.ub, fn);
    for (auto& bd : s.binds) bd.source = rewrite(bd.source, fn);
    rewrite(s.body, fn);
  }
}

void rename_var(Block& b, const std::string& from, const std::string& to) {
  rewrite(b, [&](const ExprP& e) -> ExprP {
    if (e->kind == ExprKind::Var && e->name == from) return var(to);
    return e;
  });
  for (auto& s : b) {
    if (s.kind == StmtKind::Set && s.name == from) s.name = to;
    rename_var(s.body, from, to);
  }
}

namespace {

void collect_free(const Block& b, std::set<std::string>& bound, std::vector<std::string>& out) {
  auto note = [&](const std::string& n) {
    if (!bound.count(n) && std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  };
  auto scan = [&](const ExprP& e) {
    walk(e, [&](const Expr& x) {
      if (x.kind == ExprKind::Var) note(x.name);
    });
  };
  for (const auto& s : b) {
    scan(s.value);
    for (const auto& i : s.indices) scan(i);
    scan(s.mask);
    scan(s.lb);
    scan(s.ub);
    for (const auto& bd : s.binds) scan(bd.source);
    switch (s.kind) {
      case StmtKind::Let:
        bound.insert(s.name);
        break;
      case StmtKind::Set:
        note(s.name);
        break;
      case StmtKind::For:
      case StmtKind::Drain:
        bound.insert(s.name);
        for (const auto& bd : s.binds) bound.insert(bd.name);
        collect_free(s.body, bound, out);
        break;
      default:
        break;
    }
  }
}

void add_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

}  // namespace

std::vector<std::string> free_vars(const Block& b) {
  std::set<std::string> bound;
  std::vector<std::string> out;
  collect_free(b, bound, out);
  return out;
}

std::vector<std::string> loaded_memrefs(const Block& b) {
  std::vector<std::string> out;
  walk(
      b, [](const Stmt&) {},
      [&](const Expr& e) {
        if (e.kind == ExprKind::Load || e.kind == ExprKind::VLoad || e.kind == ExprKind::Gather)
          add_unique(out, e.name);
      });
  return out;
}

std::vector<std::string> stored_memrefs(const Block& b) {
  std::vector<std::string> out;
  walk(
      b,
      [&](const Stmt& s) {
        if (s.kind == StmtKind::Store || s.kind == StmtKind::VStore || s.kind == StmtKind::Scatter)
          add_unique(out, s.name);
      },
      [](const Expr&) {});
  return out;
}

}  // namespace ember::ir
