#include <functional>
#include <set>

#include "ember/ir/typecheck.hpp"
#include "ember/slc/slc.hpp"

namespace ember::slc {

void check_callback_types(Function& fn, Diagnostics* diags) {
  for (auto& site : callback_sites(fn)) {
    ir::Scope scope(&fn.sig);
    scope.push();
    std::string path = site.path + "/";
    try {
      for (Loop* l : site.ancestors)
        for (const auto& c : l->carried) scope.declare(c.name, ir::Type::scalar(Elem::Index));
      for (const auto& t : site.callback->conversions) scope.declare(t.var, t.type, true);
    } catch (const ir::TypeError& e) {
      if (!diags) throw ParseError({}, e.what());
      diags->push_back({site.path, e.what()});
      continue;
    }
    ir::check_block(site.callback->body, scope, diags, path);
  }
}

namespace {

struct Visible {
  ir::Type type;
  const Loop* owner;
};
using Streams = std::map<std::string, Visible>;

class Verifier {
 public:
  Verifier(const Function& fn, Diagnostics& d) : fn_(fn), d_(d) {}

  void run() {
    all_streams_ = stream_types(fn_);
    check_items(fn_.body, nullptr, {}, "");
    for (const auto& it : fn_.body)
      if (!it.is_loop() && !it.callback.conversions.empty()) diag("", "to_val outside a loop");
  }

 private:
  void diag(const std::string& path, const std::string& msg) { d_.push_back({path.empty() ? "function" : path, msg}); }

  void check_items(const std::vector<BodyItem>& items, const Loop* owner, const Streams& vis, const std::string& path) {
    int loops = 0, before = 0, after = 0;
    for (const auto& it : items) {
      if (it.is_loop())
        ++loops;
      else
        ++(loops ? after : before);
    }
    if (loops > 1) diag(path, "at most one nested loop per loop body");
    if (before > 1 || after > 1) diag(path, "at most one callback per loop event");
    for (const auto& it : items) {
      if (it.is_loop()) check_loop(*it.loop, owner, vis, path);
    }
  }

  void declare(Streams& vis, const std::string& name, ir::Type t, const Loop* owner, const std::string& path) {
    if (!seen_.insert(name).second) diag(path, "duplicate stream name '" + name + "'");
    vis[name] = {t, owner};
  }

  // Returns the operand's type, reporting scope errors.
  std::optional<ir::Type> operand(const Operand& o, const Streams& vis, const std::string& path) {
    switch (o.kind) {
      case Operand::Lit:
        return ir::Type::scalar(Elem::Index);
      case Operand::Var: {
        const Param* p = fn_.sig.find(o.name);
        if (!p || p->is_memref) {
          diag(path, "undeclared scalar '" + o.name + "'");
          return std::nullopt;
        }
        return ir::Type::scalar(p->elem);
      }
      case Operand::Stream: {
        auto it = vis.find(o.name);
        if (it == vis.end()) {
          diag(path, "stream '" + o.name + "' is not in scope");
          return std::nullopt;
        }
        return it->second.type;
      }
    }
    return std::nullopt;
  }

  void integer_operand(const Operand& o, const Streams& vis, int width, const std::string& path, const char* what) {
    auto t = operand(o, vis, path);
    if (!t) return;
    if (!is_integer(t->elem) || t->buffer) diag(path, std::string(what) + " must be an integer stream or value");
    else if (t->width && t->width != width) diag(path, std::string(what) + " has " + std::to_string(t->width) + " lanes in a " + (width ? std::to_string(width) + "-lane" : "scalar") + " stream");
  }

  void mask_operand(const std::string& mask, const Streams& vis, int width, const std::string& path) {
    if (!width) {
      if (!mask.empty()) diag(path, "mask on a scalar stream");
      return;
    }
    if (mask.empty()) {
      diag(path, "vector memory stream without mask");
      return;
    }
    auto it = vis.find(mask);
    if (it == vis.end()) diag(path, "stream '" + mask + "' is not in scope");
    else if (!(it->second.type == ir::Type::vector(Elem::I1, width))) diag(path, "mask '" + mask + "' is not a " + std::to_string(width) + "-lane mask");
  }

  void check_loop(const Loop& l, const Loop* parent, Streams vis, const std::string& outer) {
    std::string path = outer + l.induction;
    for (const Operand* b : {&l.lower, &l.upper}) {
      auto t = operand(*b, vis, path);
      if (t && !(t->is_scalar() && is_integer(t->elem))) diag(path, "loop bound must be a scalar integer");
    }
    for (const auto& c : l.carried) {
      auto t = operand(c.init, vis, path);
      if (t && !(t->is_scalar() && is_integer(t->elem))) diag(path, "carried variable '" + c.name + "' needs a scalar integer initializer");
    }
    if (l.stride == 0) diag(path, "stride must be positive literal");
    if (l.vlen) {
      if (l.stride != 1) diag(path, "vector loop stride must be 1");
      if ((l.vlen & (l.vlen - 1)) != 0) diag(path, "vector length must be a power of two");
      if (l.mask.empty()) diag(path, "vector loop without mask stream");
      if (l.child()) diag(path, "vector loop must be innermost");
      if (parent && parent->vlen) diag(path, "vector loop nested in a vector loop");
    } else if (!l.mask.empty()) {
      diag(path, "mask stream on a scalar loop");
    }
    declare(vis, l.induction, l.vlen ? ir::Type::vector(Elem::Index, l.vlen) : ir::Type::scalar(Elem::Index), &l, path);
    if (l.vlen && !l.mask.empty()) declare(vis, l.mask, ir::Type::vector(Elem::I1, l.vlen), &l, path);

    for (const auto& d : l.decls) check_decl(d, l, parent, vis, path);

    Streams cb_vis = vis;
    check_items(l.body, &l, vis, path + "/");
    for (const auto& it : l.body)
      if (!it.is_loop()) check_callback(it.callback, l, cb_vis, path);
  }

  void check_width(const StreamDecl& d, const Loop& l, const std::string& path) {
    if (d.width && d.width != l.vlen)
      diag(path, "stream '" + (d.name.empty() ? d.memref : d.name) + "' width " + std::to_string(d.width) +
                     " does not match loop vector length " + std::to_string(l.vlen));
  }

  void check_decl(const StreamDecl& d, const Loop& l, const Loop* parent, Streams& vis, const std::string& path) {
    switch (d.kind) {
      case StreamDecl::Load:
      case StreamDecl::Store: {
        check_width(d, l, path);
        const Param* m = fn_.sig.find(d.memref);
        if (!m || !m->is_memref) {
          diag(path, "undeclared memref '" + d.memref + "'");
          return;
        }
        if (d.indices.size() != m->shape.size())
          diag(path, "memref '" + d.memref + "' has rank " + std::to_string(m->shape.size()) + ", indexed with " +
                         std::to_string(d.indices.size()) + " indices");
        for (const auto& i : d.indices) integer_operand(i, vis, d.width, path, "index");
        mask_operand(d.mask, vis, d.width, path);
        if (d.kind == StreamDecl::Load) {
          declare(vis, d.name, d.width ? ir::Type::vector(m->elem, d.width) : ir::Type::scalar(m->elem), &l, path);
        } else {
          auto it = vis.find(d.source);
          if (it == vis.end()) diag(path, "stream '" + d.source + "' is not in scope");
          else if (it->second.type.elem != m->elem || it->second.type.buffer ||
                   (it->second.type.width != 0 && it->second.type.width != d.width))
            diag(path, "stored stream '" + d.source + "' has type " + ir::type_name(it->second.type));
        }
        return;
      }
      case StreamDecl::Alu: {
        check_width(d, l, path);
        integer_operand(d.lhs, vis, d.width, path, "alu operand");
        integer_operand(d.rhs, vis, d.width, path, "alu operand");
        auto t = operand(d.lhs, vis, path);
        Elem e = t ? t->elem : Elem::Index;
        declare(vis, d.name, d.width ? ir::Type::vector(e, d.width) : ir::Type::scalar(e), &l, path);
        return;
      }
      case StreamDecl::Buffer: {
        const Loop* c = l.child();
        if (!c || c->vlen != d.width)
          diag(path, "buffer stream '" + d.name + "' must be declared in the parent of a " + std::to_string(d.width) +
                         "-lane vector loop");
        declare(vis, d.name, ir::Type::buf(d.elem, d.width), &l, path);
        return;
      }
      case StreamDecl::Push: {
        auto b = vis.find(d.name);
        if (b == vis.end() || !b->second.type.buffer) {
          diag(path, "push target '" + d.name + "' is not a buffer stream in scope");
          return;
        }
        if (b->second.owner != parent) diag(path, "push target '" + d.name + "' must belong to the parent loop");
        auto s = vis.find(d.source);
        if (s == vis.end() || s->second.owner != &l) {
          diag(path, "pushed stream '" + d.source + "' must be declared in this loop");
          return;
        }
        ir::Type bt = b->second.type, st = s->second.type;
        if (!(st.is_vector() && st.elem == bt.elem && st.width == bt.width))
          diag(path, "pushed stream '" + d.source + "' of type " + ir::type_name(st) + " does not fit " +
                         ir::type_name(bt));
        return;
      }
    }
  }

  void check_callback(const Callback& c, const Loop& owner, const Streams& vis, const std::string& path) {
    std::set<std::string> bound;
    for (const auto& t : c.conversions) {
      bound.insert(t.var);
      auto it = vis.find(t.stream);
      if (it == vis.end()) {
        diag(path, "to_val of stream '" + t.stream + "' which is not in scope of the callback");
        continue;
      }
      ir::Type st = it->second.type;
      bool ok;
      if (t.pad) ok = st.is_scalar() && t.type == st && t.pad >= 1;
      else if (t.lane >= 0) ok = st.is_vector() && t.lane < st.width && t.type == ir::Type::scalar(st.elem);
      else ok = t.type == st;
      if (!ok) diag(path, "to_val '" + t.var + "' of type " + ir::type_name(t.type) + " does not match stream '" + t.stream + "' (" + ir::type_name(st) + ")");
    }
    for (const auto& v : ir::free_vars(c.body)) {
      if (bound.count(v)) continue;
      if (all_streams_.count(v)) diag(path, "callback reads stream '" + v + "' without to_val");
    }
    // Carried variables are updated only by the loop that carries them.
    std::set<std::string> own;
    for (const auto& cv : owner.carried) own.insert(cv.name);
    ir::walk(c.body, [&](const ir::Stmt& s) {
      if (s.kind == ir::StmtKind::Set && carried_names().count(s.name) && !own.count(s.name))
        diag(path, "carried variable '" + s.name + "' updated outside its loop");
      bool vec_store = s.kind == ir::StmtKind::VStore || s.kind == ir::StmtKind::Scatter;
      if (vec_store && !s.mask) diag(path, "vector memory operation without mask");
    }, [&](const ir::Expr& e) {
      bool vec = e.kind == ir::ExprKind::VLoad || e.kind == ir::ExprKind::Gather || e.kind == ir::ExprKind::Reduce;
      if (vec && !e.mask) diag(path, "vector memory operation without mask");
    });
  }

  const std::set<std::string>& carried_names() {
    if (!carried_init_) {
      carried_init_ = true;
      std::function<void(const std::vector<BodyItem>&)> go = [&](const std::vector<BodyItem>& items) {
        for (const auto& it : items)
          if (it.is_loop()) {
            for (const auto& c : it.loop->carried) carried_.insert(c.name);
            go(it.loop->body);
          }
      };
      go(fn_.body);
    }
    return carried_;
  }

  const Function& fn_;
  Diagnostics& d_;
  std::set<std::string> seen_;
  std::map<std::string, StreamInfo> all_streams_;
  std::set<std::string> carried_;
  bool carried_init_ = false;
};

}  // namespace

Diagnostics verify_slc(const Function& fn) {
  Diagnostics d;
  Verifier(fn, d).run();
  // Root-level callbacks read no streams; their bodies are still typed.
  Function copy = fn;
  Diagnostics types;
  check_callback_types(copy, &types);
  for (auto& t : types) {
    bool dup = false;
    for (const auto& x : d)
      if (t.message.find("undeclared identifier") != std::string::npos && x.message.find("without to_val") != std::string::npos)
        dup = true;
    if (!dup) d.push_back(std::move(t));
  }
  return d;
}

}  // namespace ember::slc
