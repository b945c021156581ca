#include "util.hpp"

namespace ember::passes {

std::vector<slc::Loop*> loop_chain(slc::Function& fn) {
  std::vector<slc::Loop*> out;
  std::vector<slc::BodyItem>* items = &fn.body;
  while (true) {
    slc::Loop* next = nullptr;
    for (auto& it : *items)
      if (it.is_loop()) next = it.loop.get();
    if (!next) break;
    out.push_back(next);
    items = &next->body;
  }
  return out;
}

int loop_index(const std::vector<slc::BodyItem>& items) {
  for (std::size_t i = 0; i < items.size(); ++i)
    if (items[i].is_loop()) return static_cast<int>(i);
  return -1;
}

int callback_after_loop(const std::vector<slc::BodyItem>& items) {
  int l = loop_index(items);
  if (l < 0) return -1;
  for (std::size_t i = l + 1; i < items.size(); ++i)
    if (!items[i].is_loop()) return static_cast<int>(i);
  return -1;
}

Names::Names(slc::Function& fn) {
  for (const auto& p : fn.sig.params) used_.insert(p.name);
  for (const auto& [name, info] : slc::stream_types(fn)) used_.insert(name);
  for (slc::Loop* l : loop_chain(fn))
    for (const auto& c : l->carried) used_.insert(c.name);
  for (auto& site : slc::callback_sites(fn)) {
    for (const auto& t : site.callback->conversions) used_.insert(t.var);
    ir::walk(site.callback->body, [&](const ir::Stmt& s) {
      if (s.kind == ir::StmtKind::Let || s.kind == ir::StmtKind::For || s.kind == ir::StmtKind::Drain) used_.insert(s.name);
      for (const auto& b : s.binds) used_.insert(b.name);
    }, [&](const ir::Expr& e) {
      if (e.kind == ir::ExprKind::Var) used_.insert(e.name);
    });
  }
}

std::string Names::fresh(const std::string& base) {
  std::string n = base;
  for (int k = 1; used_.count(n); ++k) n = base + "_" + std::to_string(k);
  used_.insert(n);
  return n;
}

ir::ExprP operand_expr(const slc::Operand& o) {
  switch (o.kind) {
    case slc::Operand::Lit: return ir::lit_index(o.value);
    case slc::Operand::Var: return ir::var(o.name);
    case slc::Operand::Stream: return nullptr;
  }
  return nullptr;
}

}  // namespace ember::passes
