#include <map>
#include <optional>

#include "ember/ir/text.hpp"
#include "ember/passes/passes.hpp"
#include "util.hpp"

namespace ember::passes {

namespace {

struct Veto {
  std::string why;
};

// Placeholder for the scalar lane-0 induction value until we know whether the
// vector form of the induction is still needed.
const char* kBase = "@base";

class CallbackVectorizer {
 public:
  CallbackVectorizer(slc::Function& fn, const slc::Loop& loop, int vlen, const std::set<std::string>& varying_streams,
                     Names& names)
      : fn_(fn), loop_(loop), V(vlen), varying_streams_(varying_streams), names_(names) {}

  slc::Callback run(const slc::Callback& cb, bool simplify) {
    slc::Callback out;
    out.vector = true;
    for (auto t : cb.conversions) {
      if (varying_streams_.count(t.stream)) {
        t.type = ir::Type::vector(t.type.elem, V);
        varying_.insert(t.var);
        if (t.stream == loop_.induction) ind_ = t.var;
      }
      out.conversions.push_back(t);
    }
    if (ind_.empty()) {
      std::string base = loop_.induction.rfind("s_", 0) == 0 ? loop_.induction.substr(2) : loop_.induction;
      ind_ = names_.fresh(base);
      varying_.insert(ind_);
      out.conversions.push_back({ind_, ir::Type::vector(Elem::Index, V), loop_.induction, -1, 0});
    }
    mask_ = names_.fresh("m");

    ir::ExprP ub;
    switch (loop_.upper.kind) {
      case slc::Operand::Lit: ub = ir::lit_index(loop_.upper.value); break;
      case slc::Operand::Var: ub = ir::var(loop_.upper.name); break;
      case slc::Operand::Stream: {
        for (const auto& t : out.conversions)
          if (t.stream == loop_.upper.name && t.lane < 0 && t.type.is_scalar()) ub = ir::var(t.var);
        if (!ub) {
          std::string v = names_.fresh(loop_.upper.name + "_v");
          out.conversions.push_back({v, ir::Type::scalar(Elem::Index), loop_.upper.name, -1, 0});
          ub = ir::var(v);
        }
        break;
      }
    }

    ir::Block body;
    body.push_back(ir::let(ir::Type::vector(Elem::I1, V), mask_, ir::vmask(V, ir::var(kBase), ub)));
    for (const auto& s : cb.body) body.push_back(stmt(s));
    check_accesses();

    if (simplify) body = simplify_block(body);
    int vector_uses = 0;
    ir::walk(body, [](const ir::Stmt&) {}, [&](const ir::Expr& e) {
      vector_uses += e.kind == ir::ExprKind::Var && e.name == ind_;
    });
    ir::ExprP base;
    if (vector_uses == 0) {
      for (auto& t : out.conversions)
        if (t.var == ind_) {
          t.type = ir::Type::scalar(Elem::Index);
          t.lane = 0;
        }
      base = ir::var(ind_);
    } else {
      base = ir::extract(ir::var(ind_), 0);
    }
    ir::rewrite(body, [&](const ir::ExprP& e) {
      return e->kind == ir::ExprKind::Var && e->name == kBase ? base : e;
    });
    out.body = std::move(body);
    return out;
  }

 private:
  struct Access {
    std::vector<ir::ExprP> indices;
    bool varying;
    bool store;
  };

  bool uniform(const ir::ExprP& e) {
    bool v = false;
    ir::walk(e, [&](const ir::Expr& x) { v |= x.kind == ir::ExprKind::Var && varying_.count(x.name); });
    return !v;
  }

  static bool has_gather(const ir::ExprP& e) {
    bool g = false;
    ir::walk(e, [&](const ir::Expr& x) { g |= x.kind == ir::ExprKind::Gather; });
    return g;
  }

  bool is_ind(const ir::ExprP& e) const { return e->kind == ir::ExprKind::Var && e->name == ind_; }

  // Every index but the last is uniform and the last is the induction
  // variable, possibly plus a uniform offset.
  bool contiguous(const std::vector<ir::ExprP>& idx) {
    for (std::size_t k = 0; k + 1 < idx.size(); ++k)
      if (!uniform(idx[k])) return false;
    const ir::ExprP& last = idx.back();
    if (is_ind(last)) return true;
    if (last->kind == ir::ExprKind::Bin && last->op == BinOp::Add) {
      if (is_ind(last->args[1]) && uniform(last->args[0])) return true;
      if (is_ind(last->args[0]) && uniform(last->args[1])) return true;
    }
    return false;
  }

  ir::ExprP expr(const ir::ExprP& e, bool& vary) {
    switch (e->kind) {
      case ir::ExprKind::Lit:
        vary = false;
        return e;
      case ir::ExprKind::Var:
        vary = varying_.count(e->name) > 0;
        return e;
      case ir::ExprKind::Load: {
        bool any = false;
        for (const auto& a : e->args) {
          bool v;
          expr(a, v);
          any |= v;
        }
        accesses_[e->name].push_back({e->args, any, false});
        vary = any;
        if (!any) return e;
        if (!contiguous(e->args))
          throw Veto{"load from '" + e->name + "' is not contiguous in the vector loop's induction variable"};
        return ir::gather(V, e->name, e->args, ir::var(mask_));
      }
      case ir::ExprKind::Bin: {
        bool va, vb;
        auto a = expr(e->args[0], va);
        auto b = expr(e->args[1], vb);
        vary = va || vb;
        if (vary && (e->op == BinOp::Div || e->op == BinOp::Rem))
          throw Veto{"integer division on vector lanes (masked lanes may divide by zero)"};
        return ir::bin(e->op, a, b);
      }
      case ir::ExprKind::Abs: {
        auto a = expr(e->args[0], vary);
        return ir::abs_of(a);
      }
      default:
        throw Veto{"unsupported expression '" + ir::print_expr(e) + "'"};
    }
  }

  ir::Stmt stmt(const ir::Stmt& s) {
    switch (s.kind) {
      case ir::StmtKind::Let: {
        bool v;
        auto val = expr(s.value, v);
        if (v) varying_.insert(s.name);
        if (!v && s.value->kind == ir::ExprKind::Load) uniform_loads_[s.name] = s.value;
        ir::Stmt out = ir::let(v ? ir::Type::vector(s.type.elem, V) : s.type, s.name, val);
        out.loc = s.loc;
        return out;
      }
      case ir::StmtKind::Store: {
        bool any = false;
        for (const auto& i : s.indices) {
          bool v;
          expr(i, v);
          any |= v;
        }
        bool vv;
        auto val = expr(s.value, vv);
        accesses_[s.name].push_back({s.indices, any, true});
        if (any) {
          if (!contiguous(s.indices))
            throw Veto{"store to '" + s.name + "' is not contiguous in the vector loop's induction variable"};
          if (!vv) throw Veto{"uniform value stored to every lane of '" + s.name + "'"};
          return ir::scatter(V, val, s.name, s.indices, ir::var(mask_));
        }
        if (!vv) throw Veto{"uniform store to '" + s.name + "' inside the vector loop"};
        // Reduction: M[u] = acc + x with acc = M[u].
        if (val->kind == ir::ExprKind::Bin && val->op == BinOp::Add) {
          for (int side = 0; side < 2; ++side) {
            const auto& acc = val->args[side];
            const auto& x = val->args[1 - side];
            if (acc->kind != ir::ExprKind::Var) continue;
            auto it = uniform_loads_.find(acc->name);
            if (it == uniform_loads_.end()) continue;
            if (!ir::equal(it->second, ir::load(s.name, s.indices))) continue;
            if (uniform(x) && !has_gather(x)) continue;
            reductions_.insert(s.name);
            return ir::store(s.name, s.indices, ir::reduce_add(acc, x, ir::var(mask_)));
          }
        }
        throw Veto{"vector value stored to a single element of '" + s.name + "' is not a sum reduction"};
      }
      default:
        throw Veto{"statement kind not supported in vector callbacks"};
    }
  }

  // Lanes execute one statement at a time, so two lanes must never touch the
  // same element of a memref that is written.
  void check_accesses() {
    for (const auto& [m, acc] : accesses_) {
      bool stored = false, stored_vec = false;
      for (const auto& a : acc) {
        stored |= a.store;
        stored_vec |= a.store && a.varying;
      }
      if (!stored) continue;
      const auto& ref = acc.front().indices;
      for (const auto& a : acc) {
        if (a.varying != stored_vec)
          throw Veto{"memref '" + m + "' is accessed both per lane and as a single element"};
        if (a.indices.size() != ref.size()) throw Veto{"inconsistent rank for '" + m + "'"};
        for (std::size_t k = 0; k < ref.size(); ++k)
          if (!ir::equal(a.indices[k], ref[k]))
            throw Veto{"memref '" + m + "' is written and accessed at different indices"};
      }
    }
  }

  ir::ExprP contiguous_base(const ir::ExprP& last) {
    if (is_ind(last)) return ir::var(kBase);
    if (is_ind(last->args[1])) return ir::bin(BinOp::Add, last->args[0], ir::var(kBase));
    return ir::bin(BinOp::Add, ir::var(kBase), last->args[1]);
  }

  ir::Block simplify_block(const ir::Block& b) {
    auto fix = [&](const ir::ExprP& e) -> ir::ExprP {
      if (e->kind != ir::ExprKind::Gather) return e;
      auto idx = e->args;
      idx.back() = contiguous_base(idx.back());
      return ir::vload(e->width, e->name, idx, e->mask);
    };
    ir::Block out = b;
    ir::rewrite(out, fix);
    for (auto& s : out) {
      if (s.kind != ir::StmtKind::Scatter) continue;
      s.kind = ir::StmtKind::VStore;
      s.indices.back() = contiguous_base(s.indices.back());
    }
    return out;
  }

  slc::Function& fn_;
  const slc::Loop& loop_;
  int V;
  const std::set<std::string>& varying_streams_;
  Names& names_;
  std::set<std::string> varying_;
  std::string ind_, mask_;
  std::map<std::string, ir::ExprP> uniform_loads_;
  std::map<std::string, std::vector<Access>> accesses_;
  std::set<std::string> reductions_;
};

std::string chain_path(const std::vector<slc::Loop*>& chain) {
  std::string p;
  for (auto* l : chain) p += (p.empty() ? "" : "/") + l->induction;
  return p;
}

bool vectorize_impl(slc::Function& fn, int vlen, Diagnostics& diags, bool simplify) {
  auto chain = loop_chain(fn);
  if (chain.empty()) return false;
  slc::Loop& loop = *chain.back();
  std::string path = chain_path(chain);
  if (loop.vlen) return false;
  if (loop.stride != 1) {
    diags.push_back({path, "vectorize: loop stride is not 1"});
    return false;
  }
  if (vlen < 1 || (vlen & (vlen - 1))) {
    diags.push_back({path, "vectorize: vector length must be a power of two"});
    return false;
  }
  std::set<std::string> varying{loop.induction};
  auto uses_varying = [&](const slc::Operand& o) { return o.kind == slc::Operand::Stream && varying.count(o.name); };
  std::vector<bool> widen(loop.decls.size(), false);
  for (std::size_t i = 0; i < loop.decls.size(); ++i) {
    const auto& d = loop.decls[i];
    bool w = false;
    for (const auto& o : d.indices) w |= uses_varying(o);
    if (d.kind == slc::StreamDecl::Alu) w = uses_varying(d.lhs) || uses_varying(d.rhs);
    if (d.kind == slc::StreamDecl::Store) w |= varying.count(d.source) > 0;
    if (d.kind == slc::StreamDecl::Push || d.kind == slc::StreamDecl::Buffer) {
      diags.push_back({path, "vectorize: loop already holds buffer streams"});
      return false;
    }
    widen[i] = w;
    if (w && !d.name.empty() && d.kind != slc::StreamDecl::Store) varying.insert(d.name);
  }

  Names names(fn);
  std::optional<slc::Callback> cb;
  if (!loop.body.empty()) {
    try {
      cb = CallbackVectorizer(fn, loop, vlen, varying, names).run(loop.body[0].callback, simplify);
    } catch (const Veto& v) {
      diags.push_back({path, "vectorize: " + v.why});
      return false;
    }
  }
  loop.vlen = vlen;
  loop.mask = names.fresh("msk");
  for (std::size_t i = 0; i < loop.decls.size(); ++i) {
    if (!widen[i]) continue;
    auto& d = loop.decls[i];
    d.width = vlen;
    if (d.kind == slc::StreamDecl::Load || d.kind == slc::StreamDecl::Store) d.mask = loop.mask;
  }
  if (cb) loop.body[0].callback = std::move(*cb);
  return true;
}

}  // namespace

bool vectorize(slc::Function& fn, int vlen, Diagnostics& diags) { return vectorize_impl(fn, vlen, diags, true); }
bool vectorize_gather_form(slc::Function& fn, int vlen, Diagnostics& diags) {
  return vectorize_impl(fn, vlen, diags, false);
}

}  // namespace ember::passes
