#include <map>

#include "ember/passes/passes.hpp"
#include "util.hpp"

namespace ember::passes {

namespace {

struct NotCopy {
  std::string why;
};

// Rewrites the index expressions of a copy callback into stream operands,
// declaring alu streams for integer arithmetic.
class IndexOffloader {
 public:
  IndexOffloader(const slc::Callback& cb, const Signature& sig, Names& names) : names_(names) {
    for (const auto& t : cb.conversions)
      if (t.lane < 0 && t.type.is_scalar()) tovals_[t.var] = t.stream;
    for (const auto& p : sig.params)
      if (!p.is_memref) scalars_.insert(p.name);
  }

  void let(const ir::Stmt& s) {
    if (s.type.elem == Elem::F32 || !s.type.is_scalar()) throw NotCopy{"computes a non-index value '" + s.name + "'"};
    lets_[s.name] = operand(s.value);
  }

  slc::Operand operand(const ir::ExprP& e) {
    switch (e->kind) {
      case ir::ExprKind::Lit:
        if (e->elem == Elem::F32) break;
        return slc::Operand::lit(e->value);
      case ir::ExprKind::Var:
        if (auto it = tovals_.find(e->name); it != tovals_.end()) return slc::Operand::stream(it->second);
        if (auto it = lets_.find(e->name); it != lets_.end()) return it->second;
        if (scalars_.count(e->name)) return slc::Operand::var(e->name);
        break;
      case ir::ExprKind::Bin: {
        slc::StreamDecl d;
        d.kind = slc::StreamDecl::Alu;
        d.op = e->op;
        d.lhs = operand(e->args[0]);
        d.rhs = operand(e->args[1]);
        d.name = names_.fresh("s_addr");
        decls.push_back(d);
        return slc::Operand::stream(d.name);
      }
      default:
        break;
    }
    throw NotCopy{"address is not computable by streams"};
  }

  std::string source(const ir::ExprP& e) const {
    if (e->kind == ir::ExprKind::Var)
      if (auto it = tovals_.find(e->name); it != tovals_.end()) return it->second;
    throw NotCopy{"stored value is not a stream element"};
  }

  std::vector<slc::StreamDecl> decls;

 private:
  Names& names_;
  std::map<std::string, std::string> tovals_;
  std::map<std::string, slc::Operand> lets_;
  std::set<std::string> scalars_;
};

// Memrefs read by load streams or callbacks, and stores per memref.
struct MemrefUse {
  std::set<std::string> loaded;
  std::map<std::string, int> stores;
};

void scan(std::vector<slc::BodyItem>& items, MemrefUse& use) {
  for (auto& it : items) {
    if (it.is_loop()) {
      for (const auto& d : it.loop->decls) {
        if (d.kind == slc::StreamDecl::Load) use.loaded.insert(d.memref);
        if (d.kind == slc::StreamDecl::Store) ++use.stores[d.memref];
      }
      scan(it.loop->body, use);
      continue;
    }
    for (const auto& m : ir::loaded_memrefs(it.callback.body)) use.loaded.insert(m);
    ir::walk(it.callback.body, [&](const ir::Stmt& s) {
      if (s.kind == ir::StmtKind::Store || s.kind == ir::StmtKind::VStore || s.kind == ir::StmtKind::Scatter)
        ++use.stores[s.name];
    }, [](const ir::Expr&) {});
  }
}

}  // namespace

bool store_streams(slc::Function& fn, Diagnostics& diags) {
  MemrefUse use;
  scan(fn.body, use);
  Names names(fn);
  bool changed = false;
  for (auto& site : slc::callback_sites(fn)) {
    const slc::Callback& cb = *site.callback;
    if (ir::stored_memrefs(cb.body).empty()) continue;
    auto fail = [&](const std::string& why) { diags.push_back({site.path, "store streams: callback is not a copy: " + why}); };
    slc::Loop* loop = site.owner;
    if (!loop || site.trigger != slc::Trigger::Iteration || loop->child()) {
      fail("not the iteration callback of an innermost loop");
      continue;
    }
    if (cb.vector || loop->vlen) {
      fail("loop is already vectorized");
      continue;
    }
    try {
      IndexOffloader off(cb, fn.sig, names);
      const ir::Stmt* store = nullptr;
      for (const auto& s : cb.body) {
        if (s.kind == ir::StmtKind::Let)
          off.let(s);
        else if (s.kind == ir::StmtKind::Store && !store)
          store = &s;
        else
          throw NotCopy{"statement other than index arithmetic and a single store"};
      }
      if (use.loaded.count(store->name)) throw NotCopy{"memref '" + store->name + "' is also read"};
      if (use.stores[store->name] != 1) throw NotCopy{"memref '" + store->name + "' is written elsewhere"};
      slc::StreamDecl st;
      st.kind = slc::StreamDecl::Store;
      st.memref = store->name;
      st.source = off.source(store->value);
      for (const auto& i : store->indices) st.indices.push_back(off.operand(i));
      loop->decls.insert(loop->decls.end(), off.decls.begin(), off.decls.end());
      loop->decls.push_back(st);
      loop->body.clear();
      changed = true;
    } catch (const NotCopy& e) {
      fail(e.why);
    }
  }
  return changed;
}

}  // namespace ember::passes
