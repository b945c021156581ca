#include <algorithm>
#include <set>

#include "ember/dlc/dlc.hpp"
#include "ember/ir/text.hpp"

namespace ember::dlc {

namespace {

std::string type_text(ir::Type t) { return ir::type_name(t); }

class Verifier {
 public:
  Verifier(const Program& p, Diagnostics& d) : p_(p), d_(d) {}

  void run() {
    units();
    streams();
    bounds();
    marshals();
    arms();
    disjoint();
    Program copy = p_;
    check_arm_types(copy, &d_);
  }

 private:
  void diag(const std::string& path, const std::string& msg) { d_.push_back({path, msg}); }

  bool is_ancestor_or_self(int anc, int u) const {
    for (; u >= 0; u = p_.access.units[u].parent)
      if (u == anc) return true;
    return false;
  }

  // Unit that produces stream operand `o`, or -1 for literals and scalars.
  // Reports operands that are not yet defined or out of scope for `unit`.
  int scope_check(const Operand& o, int unit, const std::string& path, bool strict) {
    if (o.kind == Operand::Lit) return -1;
    if (o.kind == Operand::Var) {
      const Param* prm = p_.sig.find(o.name);
      if (!prm || prm->is_memref) diag(path, "'" + o.name + "' is not a scalar parameter");
      return -1;
    }
    auto it = defined_.find(o.name);
    if (it == defined_.end()) {
      diag(path, "stream '" + o.name + "' used before its definition");
      return -1;
    }
    int owner = it->second;
    bool ok = strict ? owner != unit && is_ancestor_or_self(owner, unit) : is_ancestor_or_self(owner, unit);
    if (!ok) diag(path, "stream '" + o.name + "' is not visible in unit " + unit_name(unit));
    return owner;
  }

  std::string unit_name(int u) const { return u < 0 ? "entry" : p_.access.units[u].name; }

  void units() {
    std::set<std::string> names;
    for (std::size_t i = 0; i < p_.access.units.size(); ++i) {
      const Unit& u = p_.access.units[i];
      std::string path = "access/" + u.name;
      if (!names.insert(u.name).second) diag(path, "duplicate unit name");
      if (u.parent >= static_cast<int>(i)) diag(path, "parent unit must be declared first");
      if (u.stride == 0) diag(path, "stride must be at least 1");
      if (u.vlen < 0) diag(path, "negative vector length");
      if (u.vlen && u.stride != 1) diag(path, "vector units step by their vector length");
      defined_[ite_name(u)] = static_cast<int>(i);
      if (u.vlen) defined_[mask_name(u)] = static_cast<int>(i);
    }
    if (p_.access.units.size() >= kEntryToken / 3) diag("access", "too many units for one-byte tokens");
  }

  // Bounds come from strict ancestors, evaluated when the unit begins.
  void bounds() {
    for (const auto& u : p_.access.units) {
      if (u.parent >= static_cast<int>(&u - p_.access.units.data())) continue;
      for (const auto& b : {u.lower, u.upper}) {
        scope_check(b, u.parent, "access/" + u.name, false);
        auto t = operand_type(p_, b);
        if (t && !(*t == ir::Type::scalar(Elem::Index)))
          diag("access/" + u.name, "loop bounds must be scalar index values");
      }
    }
  }

  void width_check(const Operand& o, int width, const std::string& path) {
    auto t = operand_type(p_, o);
    if (!t) return;
    if (t->buffer || (t->width && t->width != width))
      diag(path, "operand '" + o.name + "' of type " + type_text(*t) + " does not fit a " +
                     (width ? std::to_string(width) + "-lane" : std::string("scalar")) + " stream");
  }

  void mask_check(const std::string& mask, int unit, int width, const std::string& path) {
    if (mask.empty()) return;
    scope_check(Operand::stream(mask), unit, path, false);
    auto t = operand_type(p_, Operand::stream(mask));
    if (t && !(*t == ir::Type::vector(Elem::I1, width))) diag(path, "mask '" + mask + "' is not a " + std::to_string(width) + "-lane mask");
  }

  void access_check(const std::string& memref, const std::vector<Operand>& idx, int unit, int width,
                    const std::string& path) {
    const Param* m = p_.sig.find(memref);
    if (!m || !m->is_memref) {
      diag(path, "unknown memref '" + memref + "'");
      return;
    }
    if (idx.size() != 1 && idx.size() != m->shape.size())
      diag(path, "memref '" + memref + "' has rank " + std::to_string(m->shape.size()) + ", indexed with " +
                     std::to_string(idx.size()) + " indices");
    for (const auto& i : idx) {
      scope_check(i, unit, path, false);
      auto t = operand_type(p_, i);
      if (t && !is_integer(t->elem)) diag(path, "index '" + i.name + "' is not integer-typed");
      width_check(i, width, path);
    }
  }

  void streams() {
    for (const auto& s : p_.access.streams) {
      std::string path = "access/stream " + s.name;
      if (s.unit < 0 || s.unit >= static_cast<int>(p_.access.units.size())) {
        diag(path, "stream belongs to no unit");
        continue;
      }
      if (defined_.count(s.name)) diag(path, "redefinition of stream '" + s.name + "'");
      const Unit& u = p_.access.units[s.unit];
      if (s.width && s.width != u.vlen) diag(path, "vector stream width differs from its unit's vector length");
      if (s.kind == Stream::Mem) {
        access_check(s.memref, s.indices, s.unit, s.width, path);
        if (s.width) mask_check(s.mask, s.unit, s.width, path);
        else if (!s.mask.empty()) diag(path, "scalar stream with a mask");
      } else {
        for (const auto& o : {s.lhs, s.rhs}) {
          scope_check(o, s.unit, path, false);
          width_check(o, s.width, path);
        }
        auto l = operand_type(p_, s.lhs), r = operand_type(p_, s.rhs);
        if (l && r && l->elem != r->elem && s.lhs.kind != Operand::Lit && s.rhs.kind != Operand::Lit)
          diag(path, "alu operands have different element types");
        if (l && !is_integer(l->elem)) diag(path, "alu streams compute on integers");
      }
      defined_[s.name] = s.unit;
    }
  }

  void marshals() {
    const auto& ms = p_.access.marshals;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const Marshal& m = ms[i];
      std::string path = "access/marshal " + std::to_string(i);
      if (m.unit >= static_cast<int>(p_.access.units.size()) || (m.unit < 0 && m.kind != Marshal::Trigger)) {
        diag(path, "marshal names no unit");
        continue;
      }
      switch (m.kind) {
        case Marshal::Trigger: {
          if (m.unit >= 0 && m.label != m.event && !(m.label == Event::End && m.event == Event::Beg))
            diag(path, "a callback token is emitted at its own event, or at beg for an end drain");
          if (!triggers_.emplace(m.token(), i).second) diag(path, "two callbacks share token " + token_name(p_, m.token()));
          break;
        }
        case Marshal::Push: {
          scope_check(m.source, m.unit, path, false);
          auto t = operand_type(p_, m.source);
          if (!t) break;
          if (m.lane >= 0 && (!t->is_vector() || m.lane >= t->width)) diag(path, "lane push from a stream without that lane");
          if (m.pad && !t->is_scalar()) diag(path, "only scalar streams are padded");
          if (m.event != Event::Ite && m.source.kind == Operand::Stream && defined_.count(m.source.name) &&
              defined_.at(m.source.name) == m.unit)
            diag(path, "push at " + std::string(event_name(m.event)) + " reads a per-iteration stream of its own unit");
          break;
        }
        case Marshal::Store: {
          if (m.event != Event::Ite) diag(path, "store streams run on iterations");
          access_check(m.memref, m.indices, m.unit, m.width, path);
          scope_check(m.source, m.unit, path, false);
          auto t = operand_type(p_, m.source);
          const Param* prm = p_.sig.find(m.memref);
          if (t && prm && !(*t == (m.width ? ir::Type::vector(prm->elem, m.width) : ir::Type::scalar(prm->elem))))
            diag(path, "store of " + type_text(*t) + " into '" + m.memref + "'");
          if (m.width) mask_check(m.mask, m.unit, m.width, path);
          break;
        }
      }
    }

    // Group pushes: those after a trigger at the same unit and event belong
    // to it; iteration pushes before any trigger are buffered chunks.
    std::map<std::pair<int, Event>, std::uint8_t> current;
    std::map<int, std::uint8_t> drained;  // unit -> token of its end drain
    for (const auto& m : ms)
      if (m.kind == Marshal::Trigger && m.unit >= 0 && m.label != m.event) drained[m.unit] = m.token();
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const Marshal& m = ms[i];
      if (m.kind == Marshal::Trigger) {
        current[{m.unit, m.event}] = m.token();
        pushes_[m.token()];
        continue;
      }
      if (m.kind != Marshal::Push) continue;
      auto it = current.find({m.unit, m.event});
      ir::Type t;
      try {
        t = push_type(p_, m);
      } catch (const Error&) {
        continue;
      }
      if (it != current.end()) {
        pushes_[it->second].push_back(t);
      } else if (m.event == Event::Ite && drained.count(m.unit)) {
        chunks_[drained[m.unit]].push_back(t);
      } else {
        diag("access/marshal " + std::to_string(i), "push without a callback to consume it");
      }
    }
    for (const auto& [unit, tok] : drained) {
      for (const auto& m : ms)
        if (m.kind == Marshal::Trigger && m.unit == unit && m.event == Event::Ite)
          diag("access/" + unit_name(unit), "a drained unit cannot also trigger on iterations");
      for (const auto& t : chunks_[tok])
        if (!t.is_vector() || t.width != p_.access.units[unit].vlen)
          diag("access/" + unit_name(unit), "drained chunks must be full vectors of the unit");
    }
  }

  static bool has_pop(const ir::ExprP& e) {
    bool found = false;
    ir::walk(e, [&](const ir::Expr& x) { found |= x.kind == ir::ExprKind::Pop; });
    return found;
  }

  static bool same_bound(const ir::ExprP& e, const Operand& o) {
    if (o.kind == Operand::Lit) return e->kind == ir::ExprKind::Lit && e->value == o.value;
    return e->kind == ir::ExprKind::Var && e->name == o.name;
  }

  void arms() {
    std::set<std::uint8_t> seen;
    for (const auto& a : p_.execute.arms) {
      std::string path = "execute/" + token_name(p_, a.token);
      if (!seen.insert(a.token).second) diag(path, "duplicate arm");
      if (!triggers_.count(a.token)) diag(path, "arm for a token the access program never emits");

      std::vector<ir::Type> pops;
      std::vector<ir::Type> chunk_pops;
      const ir::Stmt* drain = nullptr;
      for (std::size_t i = 0; i < a.body.size(); ++i) {
        const ir::Stmt& s = a.body[i];
        std::string sp = path + "/stmt " + std::to_string(i);
        bool top_pop = s.kind == ir::StmtKind::Let && s.value && s.value->kind == ir::ExprKind::Pop;
        if (top_pop) {
          if (drain) diag(sp, "pop after the drain loop");
          pops.push_back(s.value->type);
          continue;
        }
        bool drain_pops = false;
        if (s.kind == ir::StmtKind::Drain)
          for (const auto& b : s.binds) drain_pops |= b.source && b.source->kind == ir::ExprKind::Pop;
        if (drain_pops) {
          if (drain) diag(sp, "more than one draining loop");
          drain = &s;
          for (const auto& b : s.binds) {
            if (b.source->kind != ir::ExprKind::Pop) diag(sp, "drain mixes queue and non-queue sources");
            else chunk_pops.push_back(b.source->type);
          }
        }
        // Any other pop position makes the pop count data dependent.
        bool stray = false;
        ir::Block one{s};
        if (drain_pops) one[0].binds.clear();
        ir::walk(one, [](const ir::Stmt&) {}, [&](const ir::Expr& e) { stray |= e.kind == ir::ExprKind::Pop; });
        if (stray) diag(sp, "pop outside a top-level let or drain source");
      }

      auto pushed = pushes_.count(a.token) ? pushes_.at(a.token) : std::vector<ir::Type>{};
      compare(path, "pop", pops, pushed);
      auto chunks = chunks_.count(a.token) ? chunks_.at(a.token) : std::vector<ir::Type>{};
      if (!chunks.empty() && !drain) diag(path, "buffered chunks are never drained");
      if (drain) {
        compare(path, "drained chunk", chunk_pops, chunks);
        int unit = a.token < kEntryToken ? a.token / 3 : -1;
        bool fits = unit >= 0 && unit < static_cast<int>(p_.access.units.size()) && chunks_.count(a.token);
        if (fits) {
          const Unit& u = p_.access.units[unit];
          fits = drain->width == u.vlen && same_bound(drain->lb, u.lower) && same_bound(drain->ub, u.upper);
        }
        if (!fits) diag(path, "drain loop does not step through the pushing unit's iterations");
      }
    }
    for (const auto& [tok, at] : triggers_)
      if (!seen.count(tok)) diag("execute", "no arm for token " + token_name(p_, tok));
  }

  void compare(const std::string& path, const char* what, const std::vector<ir::Type>& got,
               const std::vector<ir::Type>& want) {
    if (got.size() != want.size()) {
      diag(path, std::to_string(got.size()) + " " + what + "s but the access program pushes " + std::to_string(want.size()));
      return;
    }
    for (std::size_t i = 0; i < got.size(); ++i)
      if (!(got[i] == want[i]))
        diag(path, std::string(what) + " " + std::to_string(i) + " has type " + type_text(got[i]) + " but the push has type " +
                       type_text(want[i]));
  }

  void disjoint() {
    std::set<std::string> reads, targets, exec_reads, exec_writes;
    for (const auto& s : p_.access.streams)
      if (s.kind == Stream::Mem) reads.insert(s.memref);
    for (const auto& m : p_.access.marshals)
      if (m.kind == Marshal::Store) targets.insert(m.memref);
    for (const auto& a : p_.execute.arms) {
      for (const auto& n : ir::stored_memrefs(a.body)) exec_writes.insert(n);
      for (const auto& n : ir::loaded_memrefs(a.body)) exec_reads.insert(n);
    }
    for (const auto& n : exec_writes)
      if (reads.count(n)) diag("execute", "execute writes '" + n + "', which the access program reads");
    for (const auto& n : targets) {
      if (reads.count(n)) diag("access", "store stream target '" + n + "' is also read by the access program");
      if (exec_reads.count(n) || exec_writes.count(n))
        diag("access", "store stream target '" + n + "' is also accessed by the execute program");
    }
  }

  const Program& p_;
  Diagnostics& d_;
  std::map<std::string, int> defined_;
  std::map<std::uint8_t, std::size_t> triggers_;
  std::map<std::uint8_t, std::vector<ir::Type>> pushes_, chunks_;
};

}  // namespace

Diagnostics verify_dlc(const Program& p) {
  Diagnostics d;
  Verifier(p, d).run();
  for (const auto& l : p.execute.locals)
    if (l.init.kind == Operand::Stream) d.push_back({"execute/local " + l.name, "locals start from a literal or scalar"});
  return d;
}

}  // namespace ember::dlc
