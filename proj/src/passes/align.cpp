#include "ember/passes/passes.hpp"
#include "util.hpp"

namespace ember::passes {

namespace {

// Callbacks nested anywhere under `l`, including its own body.
void subtree_callbacks(slc::Loop& l, std::vector<slc::Callback*>& out) {
  for (auto& it : l.body) {
    if (it.is_loop())
      subtree_callbacks(*it.loop, out);
    else
      out.push_back(&it.callback);
  }
}

bool elide_outer_induction(slc::Function& fn) {
  auto chain = loop_chain(fn);
  if (chain.size() < 2) return false;
  slc::Loop& outer = *chain.front();
  if (outer.lower.kind == slc::Operand::Stream) return false;

  std::vector<slc::Callback*> cbs;
  subtree_callbacks(outer, cbs);
  bool used = false;
  for (auto* cb : cbs)
    for (const auto& t : cb->conversions) used |= t.stream == outer.induction && t.lane < 0 && t.type.is_scalar();
  if (!used) return false;

  Names names(fn);
  std::string base = outer.induction.rfind("s_", 0) == 0 ? outer.induction.substr(2) : outer.induction;
  std::string counter = names.fresh("i_" + base);
  outer.carried.push_back({counter, outer.lower});
  for (auto* cb : cbs) {
    std::vector<slc::ToVal> kept;
    for (const auto& t : cb->conversions) {
      if (t.stream == outer.induction && t.lane < 0 && t.type.is_scalar())
        ir::rename_var(cb->body, t.var, counter);
      else
        kept.push_back(t);
    }
    cb->conversions = std::move(kept);
  }

  ir::Stmt step = ir::set(counter, ir::bin(BinOp::Add, ir::var(counter), ir::lit_index(outer.stride)));
  int after = callback_after_loop(outer.body);
  if (after >= 0) {
    outer.body[after].callback.body.push_back(std::move(step));
  } else {
    slc::Callback cb;
    cb.body.push_back(std::move(step));
    outer.body.push_back(slc::item(std::move(cb)));
  }
  return true;
}

bool pad_scalars(slc::Function& fn) {
  auto chain = loop_chain(fn);
  int vlen = 0;
  for (auto* l : chain) vlen = std::max(vlen, l->vlen);
  if (!vlen) return false;
  bool changed = false;
  for (auto& site : slc::callback_sites(fn)) {
    if (!site.callback->vector) continue;
    for (auto& t : site.callback->conversions) {
      if (t.lane >= 0 || !t.type.is_scalar() || t.pad == vlen) continue;
      t.pad = vlen;
      changed = true;
    }
  }
  return changed;
}

}  // namespace

bool align_queues(slc::Function& fn, Diagnostics&) {
  bool changed = elide_outer_induction(fn);
  changed |= pad_scalars(fn);
  return changed;
}

}  // namespace ember::passes
