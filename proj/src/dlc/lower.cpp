// SLC to DLC: loops become traversal units, stream declarations become
// streams and marshal ops, callbacks become a trigger, its pushes and one
// execute arm.
#include <algorithm>
#include <set>

#include "ember/dlc/dlc.hpp"

namespace ember::dlc {

namespace {

struct BufferInfo {
  Elem elem = Elem::F32;
  int width = 0;
  int unit = -1;     // unit pushing into it
  int order = -1;    // position among that unit's chunk pushes
  bool consumed = false;
};

class Lowering {
 public:
  explicit Lowering(const slc::Function& fn) : fn_(fn) {
    p_.sig = fn.sig;
    for (const auto& prm : fn.sig.params) taken_.insert(prm.name);
    for (const auto& [name, info] : slc::stream_types(fn)) taken_.insert(name);
  }

  Program run() {
    units(fn_.body, -1);
    for (const auto& [loop, id] : unit_of_) decls(*loop, id);
    callbacks();
    for (auto& [name, b] : buffers_)
      if (b.unit >= 0 && !b.consumed) fail("access", "buffer stream '" + name + "' is never drained");
    if (!diags_.empty()) throw VerifyError("dlc lowering", diags_);

    auto by_unit = [](const auto& a, const auto& b) { return a.unit < b.unit; };
    std::stable_sort(p_.access.streams.begin(), p_.access.streams.end(), by_unit);
    std::stable_sort(p_.access.marshals.begin(), p_.access.marshals.end(), [](const Marshal& a, const Marshal& b) {
      return std::pair(a.unit, a.event) < std::pair(b.unit, b.event);
    });
    std::stable_sort(p_.execute.arms.begin(), p_.execute.arms.end(),
                     [&](const Arm& a, const Arm& b) { return arm_rank(a.token) < arm_rank(b.token); });

    Diagnostics typing;  // reported again by verify_dlc
    check_arm_types(p_, &typing);
    auto d = verify_dlc(p_);
    if (!d.empty()) throw VerifyError("dlc", d);
    return std::move(p_);
  }

 private:
  void fail(const std::string& path, const std::string& msg) { diags_.push_back({path, msg}); }

  // Arms follow callback order; the entry arm, if any, goes first.
  int arm_rank(std::uint8_t t) const { return t == kEntryToken ? -1 : static_cast<int>(arm_order_.at(t)); }

  std::string unit_name(const std::string& induction) {
    std::string base = induction.rfind("s_", 0) == 0 ? induction.substr(2) : induction;
    std::string n = base + "_tr";
    for (int k = 1; taken_.count(n); ++k) n = base + "_tr" + std::to_string(k);
    taken_.insert(n);
    return n;
  }

  void units(const std::vector<slc::BodyItem>& items, int parent) {
    for (const auto& it : items) {
      if (!it.is_loop()) continue;
      const slc::Loop& l = *it.loop;
      Unit u;
      u.name = unit_name(l.induction);
      u.parent = parent;
      u.vlen = l.vlen;
      u.lower = map(l.lower);
      u.upper = map(l.upper);
      u.stride = l.stride;
      int id = static_cast<int>(p_.access.units.size());
      if (id >= kEntryToken / 3) fail(l.induction, "too many loops for one-byte tokens");
      p_.access.units.push_back(u);
      unit_of_.emplace_back(&l, id);
      rename_[l.induction] = ite_name(u);
      if (!l.mask.empty()) rename_[l.mask] = mask_name(u);
      stream_unit_[ite_name(u)] = id;
      stream_unit_[mask_name(u)] = id;
      for (const auto& c : l.carried) {
        if (parent >= 0) {
          fail(l.induction, "carried variable '" + c.name + "' below the outermost loop is not supported");
          continue;
        }
        if (c.init.kind == slc::Operand::Stream) {
          fail(l.induction, "carried variable '" + c.name + "' starts from a stream");
          continue;
        }
        p_.execute.locals.push_back({c.name, c.init});
      }
      units(l.body, id);
    }
  }

  Operand map(const slc::Operand& o) const {
    if (o.kind != slc::Operand::Stream) return o;
    auto it = rename_.find(o.name);
    return it == rename_.end() ? o : Operand::stream(it->second);
  }

  int depth_unit(const Operand& o) const {
    if (o.kind != Operand::Stream) return -1;
    auto it = stream_unit_.find(o.name);
    return it == stream_unit_.end() ? -1 : it->second;
  }

  int width_of(const Operand& o) const {
    auto t = operand_type(p_, o);
    return t ? t->width : 0;
  }

  std::string fresh(const std::string& base) {
    std::string n = base;
    for (int k = 1; taken_.count(n); ++k) n = base + std::to_string(k);
    taken_.insert(n);
    return n;
  }

  Operand add_alu(const std::string& name, BinOp op, Operand a, Operand b, int fallback_unit) {
    Stream s;
    s.kind = Stream::Alu;
    s.name = fresh(name);
    s.op = op;
    s.unit = std::max({depth_unit(a), depth_unit(b)});
    if (s.unit < 0) s.unit = fallback_unit;
    s.width = std::max(width_of(a), width_of(b));
    s.lhs = std::move(a);
    s.rhs = std::move(b);
    stream_unit_[s.name] = s.unit;
    p_.access.streams.push_back(s);
    return Operand::stream(s.name);
  }

  // Row-major flattening into one offset stream, unless a trailing
  // dimension is only known from the input image.
  std::vector<Operand> flatten(const std::string& stream, const std::string& memref,
                               const std::vector<slc::Operand>& indices, int unit) {
    std::vector<Operand> idx;
    for (const auto& i : indices) idx.push_back(map(i));
    const Param* m = fn_.sig.find(memref);
    if (idx.size() < 2 || !m || m->shape.size() != idx.size()) return idx;
    for (std::size_t k = 1; k < m->shape.size(); ++k)
      if (m->shape[k].kind == Dim::Dynamic) return idx;
    Operand off = idx[0];
    for (std::size_t k = 1; k < idx.size(); ++k) {
      const Dim& d = m->shape[k];
      Operand size = d.kind == Dim::Static ? Operand::lit(d.size) : Operand::var(d.name);
      off = add_alu(stream + "_off", BinOp::Mul, off, size, unit);
      off = add_alu(stream + "_off", BinOp::Add, off, idx[k], unit);
    }
    return {off};
  }

  void decls(const slc::Loop& l, int id) {
    int chunk = 0;
    for (const auto& d : l.decls) {
      switch (d.kind) {
        case slc::StreamDecl::Load: {
          Stream s;
          s.kind = Stream::Mem;
          s.name = d.name;
          taken_.insert(d.name);
          s.unit = id;
          s.memref = d.memref;
          s.indices = flatten(d.name, d.memref, d.indices, id);
          s.mask = d.mask.empty() ? "" : map(slc::Operand::stream(d.mask)).name;
          s.width = d.width;
          s.hint = d.hint;
          stream_unit_[s.name] = id;
          p_.access.streams.push_back(std::move(s));
          break;
        }
        case slc::StreamDecl::Alu: {
          Stream s;
          s.kind = Stream::Alu;
          s.name = d.name;
          taken_.insert(d.name);
          s.unit = id;
          s.op = d.op;
          s.lhs = map(d.lhs);
          s.rhs = map(d.rhs);
          s.width = d.width;
          stream_unit_[s.name] = id;
          p_.access.streams.push_back(std::move(s));
          break;
        }
        case slc::StreamDecl::Buffer:
          buffers_[d.name].elem = d.elem;
          buffers_[d.name].width = d.width;
          break;
        case slc::StreamDecl::Push: {
          auto& b = buffers_[d.name];
          if (b.unit >= 0) fail(d.name, "buffer stream is filled by more than one push");
          b.unit = id;
          b.order = chunk++;
          Marshal m;
          m.kind = Marshal::Push;
          m.unit = id;
          m.event = Event::Ite;
          m.source = map(slc::Operand::stream(d.source));
          p_.access.marshals.push_back(m);
          break;
        }
        case slc::StreamDecl::Store: {
          Marshal m;
          m.kind = Marshal::Store;
          m.unit = id;
          m.event = Event::Ite;
          m.memref = d.memref;
          m.indices = flatten(d.memref + "_st", d.memref, d.indices, id);
          m.source = map(slc::Operand::stream(d.source));
          m.mask = d.mask.empty() ? "" : map(slc::Operand::stream(d.mask)).name;
          m.width = d.width;
          p_.access.marshals.push_back(m);
          break;
        }
      }
    }
    chunks_[id] = chunk;
  }

  int id_of(const slc::Loop* l) const {
    for (const auto& [loop, id] : unit_of_)
      if (loop == l) return id;
    return -1;
  }

  void callbacks() {
    for (const auto& site : slc::callback_sites(fn_)) {
      const slc::Callback& cb = *site.callback;
      Marshal trig;
      trig.kind = Marshal::Trigger;
      if (site.trigger == slc::Trigger::Entry) {
        trig.unit = -1;
        trig.event = trig.label = Event::Beg;
      } else {
        trig.unit = id_of(site.event_loop);
        trig.label = site.trigger == slc::Trigger::Begin       ? Event::Beg
                     : site.trigger == slc::Trigger::Iteration ? Event::Ite
                                                               : Event::End;
        trig.event = trig.label;
      }
      bool buffered = false;
      for (const auto& t : cb.conversions) buffered |= buffers_.count(t.stream) > 0;
      if (buffered) {
        if (site.trigger != slc::Trigger::End) {
          fail(site.path, "buffer streams can only be drained after their loop");
          continue;
        }
        trig.event = Event::Beg;  // token first, so the drain never waits behind its own chunks
      }
      std::uint8_t tok = trig.token();
      if (arm_order_.count(tok)) {
        fail(site.path, "several callbacks on the event " + token_name(p_, tok));
        continue;
      }
      arm_order_[tok] = arm_order_.size();
      p_.access.marshals.push_back(trig);

      Arm arm;
      arm.token = tok;
      std::set<std::string> names;
      ir::walk(cb.body, [&](const ir::Stmt& s) { names.insert(s.name); }, [&](const ir::Expr& e) { names.insert(e.name); });
      for (const auto& t : cb.conversions) names.insert(t.var);
      std::map<std::string, std::string> buffer_vars;  // callback var -> buffer stream
      for (const auto& t : cb.conversions) {
        if (buffers_.count(t.stream)) {
          buffer_vars[t.var] = t.stream;
          continue;
        }
        Marshal m;
        m.kind = Marshal::Push;
        m.unit = trig.unit;
        m.event = trig.event;
        m.source = map(slc::Operand::stream(t.stream));
        m.lane = t.lane;
        m.pad = t.pad;
        if (trig.unit < 0) {
          fail(site.path, "callback outside every loop reads stream '" + t.stream + "'");
          continue;
        }
        p_.access.marshals.push_back(m);
        if (t.pad) {
          std::string wide = t.var + "_pad";
          for (int k = 1; names.count(wide); ++k) wide = t.var + "_pad" + std::to_string(k);
          names.insert(wide);
          arm.body.push_back(ir::let(ir::Type::vector(t.type.elem, t.pad), wide, ir::pop(ir::Type::vector(t.type.elem, t.pad))));
          arm.body.push_back(ir::let(t.type, t.var, ir::extract(ir::var(wide), 0)));
        } else {
          arm.body.push_back(ir::let(t.type, t.var, ir::pop(t.type)));
        }
      }
      ir::Block body = cb.body;
      if (!buffer_vars.empty()) drains(site.path, trig.unit, buffer_vars, body);
      arm.body.insert(arm.body.end(), body.begin(), body.end());
      p_.execute.arms.push_back(std::move(arm));
    }
  }

  // Drain sources naming buffer variables pop one chunk per step instead, in
  // the order the access side pushes them.
  void drains(const std::string& path, int unit, const std::map<std::string, std::string>& buffer_vars,
              ir::Block& body) {
    int drained = 0;
    for (auto& s : body) {
      if (s.kind != ir::StmtKind::Drain) continue;
      bool any = false;
      for (const auto& b : s.binds) any |= b.source->kind == ir::ExprKind::Var && buffer_vars.count(b.source->name);
      if (!any) continue;
      ++drained;
      std::vector<std::pair<int, ir::Bind>> ordered;
      for (const auto& b : s.binds) {
        auto it = b.source->kind == ir::ExprKind::Var ? buffer_vars.find(b.source->name) : buffer_vars.end();
        if (it == buffer_vars.end()) {
          fail(path, "drain of '" + b.name + "' mixes buffer and non-buffer sources");
          return;
        }
        BufferInfo& info = buffers_.at(it->second);
        if (info.unit != unit) {
          fail(path, "buffer stream '" + it->second + "' is not filled by the drained loop");
          return;
        }
        if (info.consumed) {
          fail(path, "buffer stream '" + it->second + "' is drained twice");
          return;
        }
        info.consumed = true;
        ordered.push_back({info.order, {b.name, ir::pop(ir::Type::vector(info.elem, info.width))}});
      }
      std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      s.binds.clear();
      for (auto& [o, b] : ordered) s.binds.push_back(std::move(b));
    }
    if (drained != 1) fail(path, "buffered callback must drain its buffers in exactly one top-level loop");
    if (static_cast<int>(buffer_vars.size()) != chunks_[unit])
      fail(path, "buffered callback does not drain every chunk its loop pushes");
    // Any other use of a buffer variable would read data that never reaches the queue.
    std::set<std::string> left;
    ir::walk(body, [](const ir::Stmt&) {}, [&](const ir::Expr& e) {
      if (e.kind == ir::ExprKind::Var && buffer_vars.count(e.name)) left.insert(e.name);
    });
    for (const auto& n : left) fail(path, "buffer variable '" + n + "' used outside a drain source");
  }

  slc::Function fn_;  // own copy: callback_sites hands out mutable pointers
  Program p_;
  Diagnostics diags_;
  std::vector<std::pair<const slc::Loop*, int>> unit_of_;
  std::map<std::string, std::string> rename_;
  std::map<std::string, int> stream_unit_;
  std::map<std::string, BufferInfo> buffers_;
  std::map<int, int> chunks_;
  std::map<std::uint8_t, std::size_t> arm_order_;
  std::set<std::string> taken_;
};

}  // namespace

Program lower_slc_to_dlc(const slc::Function& fn) { return Lowering(fn).run(); }

}  // namespace ember::dlc
