#include "ember/decouple/decouple.hpp"

#include <algorithm>
#include <functional>
#include <optional>

#include "ember/ir/text.hpp"
#include "json.hpp"

namespace ember::decouple {

const char* loop_kind_name(LoopKind k) {
  switch (k) {
    case LoopKind::Candidate: return "candidate";
    case LoopKind::Workspace: return "workspace";
    case LoopKind::Rejected: return "rejected";
  }
  return "?";
}

const LoopClass* Classification::find(const std::string& path) const {
  for (const auto& l : loops)
    if (l.path == path) return &l;
  return nullptr;
}

std::vector<std::string> Classification::candidates() const {
  std::vector<std::string> out;
  for (const auto& l : loops)
    if (l.kind == LoopKind::Candidate) out.push_back(l.path);
  return out;
}

namespace {

std::set<std::string> set_targets(const ir::Block& b) {
  std::set<std::string> out;
  ir::walk(b, [&](const ir::Stmt& s) {
    if (s.kind == ir::StmtKind::Set) out.insert(s.name);
  }, [](const ir::Expr&) {});
  return out;
}

/// Facts shared by classification and lowering.
struct Facts {
  const scf::Function& fn;
  std::set<std::string> written;
  std::set<std::string> assigned;  // variables that are ever re-assigned

  Facts(const scf::Function& f, const std::set<std::string>& extra) : fn(f) {
    for (const auto& m : ir::stored_memrefs(f.body)) written.insert(m);
    written.insert(extra.begin(), extra.end());
    assigned = set_targets(f.body);
  }

  bool read_only(const std::string& m) const { return !written.count(m); }
  bool scalar_param(const std::string& n) const {
    const Param* p = fn.sig.find(n);
    return p && !p->is_memref;
  }

  /// True if `e` can be computed by streams given stream-bound variables
  /// `vars`. At function level (`root`) only literals and scalar parameters
  /// qualify: there is no loop to host a stream.
  bool offloadable(const ir::ExprP& e, const std::set<std::string>& vars, bool root, bool integer_ctx) const {
    switch (e->kind) {
      case ir::ExprKind::Lit:
        return !integer_ctx || e->elem == Elem::Index;
      case ir::ExprKind::Var:
        return scalar_param(e->name) || (!root && vars.count(e->name));
      case ir::ExprKind::Bin:
        return !root && integer_ctx && offloadable(e->args[0], vars, root, true) &&
               offloadable(e->args[1], vars, root, true);
      case ir::ExprKind::Load:
        if (root || !read_only(e->name)) return false;
        for (const auto& a : e->args)
          if (!offloadable(a, vars, root, true)) return false;
        return true;
      default:
        return false;
    }
  }

  /// Let statements whose value can live in a stream.
  bool stream_let(const ir::Stmt& s, const std::set<std::string>& vars) const {
    return s.kind == ir::StmtKind::Let && s.type.is_scalar() && !assigned.count(s.name) &&
           (s.value->kind == ir::ExprKind::Load || s.value->kind == ir::ExprKind::Bin) &&
           offloadable(s.value, vars, false, is_integer(s.type.elem));
  }
};

std::string join(const std::string& prefix, const std::string& name) { return prefix.empty() ? name : prefix + "/" + name; }

class Classifier {
 public:
  Classifier(const Facts& f, Classification& out) : f_(f), out_(out) {}

  void run() {
    std::set<std::string> vars, read;
    block(f_.fn.body, "", vars, read, true, true);
    if (!diags_.empty()) throw VerifyError("decouple", diags_);
  }

 private:
  std::string unique_path(const std::string& p) {
    int n = used_[p]++;
    return n ? p + "@" + std::to_string(n) : p;
  }

  void record(const ir::Stmt& s, const std::string& path, LoopKind k, std::string reason) {
    out_.loops.push_back({path, k, std::move(reason)});
    out_.kind_of[&s] = k;
  }

  // Loops nested in callback code: not offloaded.
  void inside_callback(const ir::Block& b, const std::string& prefix) {
    for (const auto& s : b) {
      if (s.kind != ir::StmtKind::For) continue;
      std::string path = unique_path(join(prefix, s.name));
      record(s, path, LoopKind::Workspace, "nested in callback code");
      inside_callback(s.body, path);
    }
  }

  void block(const ir::Block& b, const std::string& prefix, std::set<std::string> vars, std::set<std::string>& read,
             bool in_candidate, bool root) {
    int candidates = 0;
    std::string first;
    for (const auto& s : b) {
      if (s.kind != ir::StmtKind::For) {
        if (in_candidate && !root && f_.stream_let(s, vars)) vars.insert(s.name);
        for (const auto& m : ir::loaded_memrefs({s})) read.insert(m);
        continue;
      }
      std::string path = unique_path(join(prefix, s.name));
      std::string why;
      if (!f_.offloadable(s.lb, vars, root, true))
        why = "lower bound '" + ir::print_expr(s.lb) + "' is not stream-computable";
      else if (!f_.offloadable(s.ub, vars, root, true))
        why = "upper bound '" + ir::print_expr(s.ub) + "' is not stream-computable";
      if (!why.empty()) {
        record(s, path, LoopKind::Rejected, why);
        inside_callback(s.body, path);
      } else {
        bool fresh = false;
        for (const auto& m : ir::loaded_memrefs(s.body))
          if (f_.read_only(m) && !read.count(m)) fresh = true;
        if (fresh) {
          record(s, path, LoopKind::Candidate, "");
          if (++candidates == 1) first = path;
          else
            diags_.push_back({path, "second offloading candidate at one nesting level (first: " + first + ")"});
          auto inner = vars;
          inner.insert(s.name);
          block(s.body, path, inner, read, true, false);
        } else {
          record(s, path, LoopKind::Workspace, "loads only memrefs that are written or already read");
          inside_callback(s.body, path);
        }
      }
      for (const auto& m : ir::loaded_memrefs(s.body)) read.insert(m);
    }
  }

  const Facts& f_;
  Classification& out_;
  Diagnostics diags_;
  std::map<std::string, int> used_;
};

// ---------------------------------------------------------------------------
// Lowering

class Lowering {
 public:
  Lowering(const Facts& f, Classification& cls) : f_(f), cls_(cls) {
    for (const auto& p : f.fn.sig.params) taken_.insert(p.name);
    ir::walk(f.fn.body, [&](const ir::Stmt& s) {
      if (s.kind == ir::StmtKind::Let || s.kind == ir::StmtKind::For) taken_.insert(s.name);
    }, [](const ir::Expr&) {});
    compute_access_vars();
  }

  slc::Function run() {
    slc::Function out;
    out.sig = f_.fn.sig;
    Ctx ctx;
    level(f_.fn.body, nullptr, out.body, ctx, "");
    return out;
  }

 private:
  // Variable -> stream operand for stream-bound variables at this point.
  struct Ctx {
    std::map<std::string, slc::Operand> streams;
    std::set<std::string> vars() const {
      std::set<std::string> s;
      for (const auto& [k, v] : streams) s.insert(k);
      return s;
    }
  };

  std::string fresh(const std::string& base) {
    std::string n = base;
    for (int k = 1; taken_.count(n); ++k) n = base + "_" + std::to_string(k);
    taken_.insert(n);
    return n;
  }

  bool candidate(const ir::Stmt& s) const {
    auto it = cls_.kind_of.find(&s);
    return it != cls_.kind_of.end() && it->second == LoopKind::Candidate;
  }

  // Integer Let variables that must be streams: they feed a candidate bound,
  // an offloaded load index, or are read inside a nested candidate loop
  // (which runs in different callbacks).
  void compute_access_vars() {
    std::function<void(const ir::Block&, bool)> scan = [&](const ir::Block& b, bool in_child) {
      for (const auto& s : b) {
        if (s.kind == ir::StmtKind::For && candidate(s)) {
          for (const auto& v : ir::free_vars({ir::let(ir::Type::scalar(Elem::Index), "_", s.lb),
                                              ir::let(ir::Type::scalar(Elem::Index), "_", s.ub)}))
            access_vars_.insert(v);
          for (const auto& v : ir::free_vars(s.body)) access_vars_.insert(v);
          scan(s.body, true);
          continue;
        }
        if (s.kind == ir::StmtKind::For) continue;
        auto note_load = [&](const ir::Expr& e) {
          if (e.kind == ir::ExprKind::Load && f_.read_only(e.name))
            for (const auto& a : e.args)
              ir::walk(a, [&](const ir::Expr& x) {
                if (x.kind == ir::ExprKind::Var) access_vars_.insert(x.name);
              });
        };
        ir::walk(ir::Block{s}, [](const ir::Stmt&) {}, note_load);
      }
      (void)in_child;
    };
    scan(f_.fn.body, false);
    // Operands of stream-bound arithmetic are themselves needed.
    bool changed = true;
    while (changed) {
      changed = false;
      ir::walk(f_.fn.body, [&](const ir::Stmt& s) {
        if (s.kind != ir::StmtKind::Let || !access_vars_.count(s.name)) return;
        ir::walk(s.value, [&](const ir::Expr& x) {
          if (x.kind == ir::ExprKind::Var && access_vars_.insert(x.name).second) changed = true;
        });
      }, [](const ir::Expr&) {});
    }
  }

  /// Makes `e` (offloadable) available as a stream operand, declaring load
  /// and alu streams in `owner`. `name` names the resulting stream.
  slc::Operand operand(const ir::ExprP& e, slc::Loop* owner, Ctx& ctx, const std::string& name) {
    switch (e->kind) {
      case ir::ExprKind::Lit:
        return slc::Operand::lit(e->value);
      case ir::ExprKind::Var: {
        auto it = ctx.streams.find(e->name);
        if (it != ctx.streams.end()) return it->second;
        return slc::Operand::var(e->name);
      }
      case ir::ExprKind::Bin: {
        slc::StreamDecl d;
        d.kind = slc::StreamDecl::Alu;
        d.op = e->op;
        d.lhs = operand(e->args[0], owner, ctx, name + "_l");
        d.rhs = operand(e->args[1], owner, ctx, name + "_r");
        d.name = fresh(name);
        owner->decls.push_back(d);
        return slc::Operand::stream(d.name);
      }
      case ir::ExprKind::Load: {
        slc::StreamDecl d;
        d.kind = slc::StreamDecl::Load;
        d.memref = e->name;
        for (std::size_t k = 0; k < e->args.size(); ++k)
          d.indices.push_back(operand(e->args[k], owner, ctx, name + "_i" + std::to_string(k)));
        d.name = fresh(name);
        owner->decls.push_back(d);
        cls_.loads.push_back({loop_path_, ir::print_expr(e), true});
        return slc::Operand::stream(d.name);
      }
      default:
        throw Error("internal: expression is not stream-computable");
    }
  }

  /// Replaces offloadable loads inside `e` by variables bound to new streams.
  ir::ExprP hoist(const ir::ExprP& e, slc::Loop* owner, Ctx& ctx) {
    if (!e) return e;
    return ir::rewrite(e, [&](const ir::ExprP& x) -> ir::ExprP {
      if (x->kind != ir::ExprKind::Load) return x;
      if (!owner || !f_.offloadable(x, ctx.vars(), false, false)) {
        cls_.loads.push_back({loop_path_, ir::print_expr(x), false});
        return x;
      }
      std::string var = fresh("v_" + x->name);
      ctx.streams[var] = operand(x, owner, ctx, "s_" + x->name);
      return ir::var(var);
    });
  }

  void note_resident_loads(const ir::Block& b) {
    ir::walk(b, [](const ir::Stmt&) {}, [&](const ir::Expr& e) {
      if (e.kind == ir::ExprKind::Load) cls_.loads.push_back({loop_path_, ir::print_expr(ir::load(e.name, e.args)), false});
    });
  }

  /// Statement in callback position: hoists offloadable loads from its own
  /// expressions; nested loop bodies stay as they are.
  ir::Stmt callback_stmt(const ir::Stmt& s, slc::Loop* owner, Ctx& ctx) {
    ir::Stmt out = s;
    out.value = hoist(s.value, owner, ctx);
    for (auto& i : out.indices) i = hoist(i, owner, ctx);
    out.mask = hoist(s.mask, owner, ctx);
    if (s.kind == ir::StmtKind::For) {
      out.lb = hoist(s.lb, owner, ctx);
      out.ub = hoist(s.ub, owner, ctx);
      note_resident_loads(s.body);
    }
    return out;
  }

  slc::Callback make_callback(ir::Block body, const Ctx& ctx, const std::string& where) {
    slc::Callback cb;
    for (const auto& v : ir::free_vars(body)) {
      auto it = ctx.streams.find(v);
      if (it != ctx.streams.end()) {
        const auto& op = it->second;
        if (op.kind != slc::Operand::Stream) {
          // Alias of a literal or scalar parameter: substitute directly.
          ir::ExprP rep = op.kind == slc::Operand::Lit ? ir::lit_index(op.value) : ir::var(op.name);
          ir::rewrite(body, [&](const ir::ExprP& x) {
            return x->kind == ir::ExprKind::Var && x->name == v ? rep : x;
          });
          continue;
        }
        cb.conversions.push_back({v, stream_type(op.name), op.name, -1, 0});
        continue;
      }
      if (f_.scalar_param(v)) continue;
      throw VerifyError("decouple", {{where, "value '" + v + "' computed in one callback is used by another"}});
    }
    cb.body = std::move(body);
    return cb;
  }

  ir::Type stream_type(const std::string& s) const {
    auto it = stream_elem_.find(s);
    return ir::Type::scalar(it == stream_elem_.end() ? Elem::Index : it->second);
  }

  void record_types(const slc::Loop& l) {
    stream_elem_[l.induction] = Elem::Index;
    for (const auto& d : l.decls) {
      if (d.kind == slc::StreamDecl::Load) stream_elem_[d.name] = f_.fn.sig.find(d.memref)->elem;
      if (d.kind == slc::StreamDecl::Alu) {
        Elem e = Elem::Index;
        if (d.lhs.kind == slc::Operand::Stream) e = stream_elem_[d.lhs.name];
        else if (d.lhs.kind == slc::Operand::Var) e = f_.fn.sig.find(d.lhs.name)->elem;
        stream_elem_[d.name] = e;
      }
    }
  }

  void level(const ir::Block& body, slc::Loop* owner, std::vector<slc::BodyItem>& out, Ctx& ctx,
             const std::string& path) {
    const ir::Stmt* child = nullptr;
    for (const auto& s : body)
      if (s.kind == ir::StmtKind::For && candidate(s)) child = &s;

    ir::Block pre, post;
    bool after = false;
    std::optional<slc::Loop> loop;
    for (const auto& s : body) {
      loop_path_ = path;
      if (&s == child) {
        after = true;
        loop = lower_loop(s, owner, ctx, path);
        continue;
      }
      if (owner && f_.stream_let(s, ctx.vars()) &&
          (s.value->kind == ir::ExprKind::Load || access_vars_.count(s.name))) {
        ctx.streams[s.name] = operand(s.value, owner, ctx, "s_" + s.name);
        continue;
      }
      (after ? post : pre).push_back(callback_stmt(s, owner, ctx));
    }
    if (owner) record_types(*owner);
    if (!pre.empty()) out.push_back(slc::item(make_callback(std::move(pre), ctx, path)));
    if (loop) out.push_back(slc::item(std::move(*loop)));
    if (!post.empty()) out.push_back(slc::item(make_callback(std::move(post), ctx, path)));
  }

  slc::Loop lower_loop(const ir::Stmt& s, slc::Loop* owner, Ctx& ctx, const std::string& path) {
    slc::Loop l;
    l.lower = operand_or_root(s.lb, owner, ctx, "s_" + s.name + "_lb");
    l.upper = operand_or_root(s.ub, owner, ctx, "s_" + s.name + "_ub");
    l.stride = s.stride;
    l.induction = fresh("s_" + s.name);
    if (owner) record_types(*owner);
    Ctx inner = ctx;
    inner.streams[s.name] = slc::Operand::stream(l.induction);
    std::string sub = join(path, s.name);
    level(s.body, &l, l.body, inner, sub);
    loop_path_ = path;
    return l;
  }

  slc::Operand operand_or_root(const ir::ExprP& e, slc::Loop* owner, Ctx& ctx, const std::string& name) {
    if (!owner) {
      if (e->kind == ir::ExprKind::Lit) return slc::Operand::lit(e->value);
      return slc::Operand::var(e->name);  // classification admits only scalar parameters here
    }
    return operand(e, owner, ctx, name);
  }

  const Facts& f_;
  Classification& cls_;
  std::set<std::string> taken_;
  std::set<std::string> access_vars_;
  std::map<std::string, Elem> stream_elem_;
  std::string loop_path_;
};

}  // namespace

Classification classify_loops(const scf::Function& fn, const std::set<std::string>& extra_written) {
  Classification c;
  Facts f(fn, extra_written);
  Classifier(f, c).run();
  return c;
}

slc::Function lower_scf_to_slc(const scf::Function& fn, Classification* cls) {
  Classification local;
  Classification& c = cls ? *cls : local;
  c = Classification{};
  Facts f(fn, {});
  Classifier(f, c).run();
  return Lowering(f, c).run();
}

std::string classification_json(const Classification& c) {
  nlohmann::ordered_json j;
  j["loops"] = nlohmann::ordered_json::object();
  for (const auto& l : c.loops) {
    nlohmann::ordered_json e;
    e["class"] = loop_kind_name(l.kind);
    if (!l.reason.empty()) e["reason"] = l.reason;
    j["loops"][l.path] = e;
  }
  j["loads"] = nlohmann::ordered_json::array();
  for (const auto& l : c.loads)
    j["loads"].push_back({{"loop", l.loop}, {"load", l.load}, {"class", l.offloadable ? "offloadable" : "callback-resident"}});
  return j.dump(2);
}

}  // namespace ember::decouple
