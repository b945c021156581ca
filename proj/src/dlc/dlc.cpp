#include "ember/dlc/dlc.hpp"

#include <algorithm>
#include <set>

#include "ember/ir/text.hpp"
#include "ember/ir/typecheck.hpp"

namespace ember::dlc {

const char* event_name(Event e) {
  switch (e) {
    case Event::Beg: return "beg";
    case Event::Ite: return "ite";
    case Event::End: return "end";
  }
  return "?";
}

std::string ite_name(const Unit& u) { return u.name + ".ite"; }
std::string mask_name(const Unit& u) { return u.name + ".msk"; }

std::string token_name(const Program& p, std::uint8_t token) {
  if (token == kDoneToken) return "done";
  if (token == kEntryToken) return "entry";
  std::size_t unit = token / 3;
  if (unit >= p.access.units.size() || token % 3 > 2) return "token " + std::to_string(token);
  return p.access.units[unit].name + "." + event_name(static_cast<Event>(token % 3));
}

namespace {

const Unit* unit_named(const Program& p, const std::string& n) {
  for (const auto& u : p.access.units)
    if (u.name == n) return &u;
  return nullptr;
}

const Stream* stream_named(const Program& p, const std::string& n) {
  for (const auto& s : p.access.streams)
    if (s.name == n) return &s;
  return nullptr;
}

// `depth` bounds the walk along alu operands, so cyclic definitions
// (rejected by the verifier) have no type instead of recursing forever.
std::optional<ir::Type> operand_type_at(const Program& p, const Operand& o, std::size_t depth) {
  switch (o.kind) {
    case Operand::Lit: return ir::Type::scalar(Elem::Index);
    case Operand::Var: {
      const Param* prm = p.sig.find(o.name);
      if (!prm || prm->is_memref) return std::nullopt;
      return ir::Type::scalar(prm->elem);
    }
    case Operand::Stream: break;
  }
  auto [head, tail] = split_dot(o.name);
  if (tail == "ite" || tail == "msk") {
    const Unit* u = unit_named(p, head);
    if (!u) return std::nullopt;
    Elem e = tail == "ite" ? Elem::Index : Elem::I1;
    if (u->vlen) return ir::Type::vector(e, u->vlen);
    if (tail == "msk") return std::nullopt;
    return ir::Type::scalar(e);
  }
  const Stream* s = stream_named(p, o.name);
  if (!s || depth > p.access.streams.size()) return std::nullopt;
  Elem e = Elem::Index;
  if (s->kind == Stream::Mem) {
    const Param* prm = p.sig.find(s->memref);
    if (!prm) return std::nullopt;
    e = prm->elem;
  } else {
    auto l = operand_type_at(p, s->lhs, depth + 1);
    if (!l) return std::nullopt;
    e = l->elem;
  }
  return s->width ? ir::Type::vector(e, s->width) : ir::Type::scalar(e);
}

}  // namespace

std::optional<ir::Type> operand_type(const Program& p, const Operand& o) { return operand_type_at(p, o, 0); }

ir::Type push_type(const Program& p, const Marshal& m) {
  auto t = operand_type(p, m.source);
  if (!t) throw Error("push of unknown stream '" + m.source.name + "'");
  if (m.lane >= 0) return ir::Type::scalar(t->elem);
  if (m.pad) return ir::Type::vector(t->elem, m.pad);
  return *t;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string op_text(const Operand& o) { return o.kind == Operand::Lit ? std::to_string(o.value) : o.name; }

std::string access_text(const std::string& memref, const std::vector<Operand>& idx) {
  std::string s = memref + "[";
  for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? ", " : "") + op_text(idx[i]);
  return s + "]";
}

std::string width_suffix(int w) { return w ? "<" + std::to_string(w) + ">" : ""; }

std::string unit_ref(const Program& p, int u) { return u < 0 ? "entry" : p.access.units.at(u).name; }

void print_marshal(const Program& p, const Marshal& m, std::string& out) {
  out += "    ";
  switch (m.kind) {
    case Marshal::Trigger:
      if (m.unit < 0) {
        out += "callback(entry);\n";
        return;
      }
      out += "callback(" + unit_ref(p, m.unit) + ", " + event_name(m.label) + ")";
      if (m.label != m.event) out += std::string(" at ") + event_name(m.event);
      out += ";\n";
      return;
    case Marshal::Push:
      out += "push_op" + width_suffix(m.pad) + "(" + op_text(m.source);
      if (m.lane >= 0) out += "[" + std::to_string(m.lane) + "]";
      out += ", " + unit_ref(p, m.unit) + ", " + event_name(m.event) + ");\n";
      return;
    case Marshal::Store:
      out += unit_ref(p, m.unit) + ".store_str" + width_suffix(m.width) + "(" + access_text(m.memref, m.indices) +
             ", " + op_text(m.source);
      if (!m.mask.empty()) out += ", " + m.mask;
      out += ");\n";
      return;
  }
}

void print_stream(const Program& p, const Stream& s, std::string& out) {
  out += "    str " + s.name + " = " + unit_ref(p, s.unit) + ".";
  if (s.kind == Stream::Mem) {
    out += "mem_str" + width_suffix(s.width) + "(" + access_text(s.memref, s.indices);
    if (!s.mask.empty()) out += ", " + s.mask;
    out += ")";
    if (s.hint)
      out += std::string(" hint(") + slc::level_name(s.hint->level) + ", " +
             (s.hint->temporal ? "temporal" : "nontemporal") + ")";
  } else {
    out += "alu_str" + width_suffix(s.width) + "('" + bin_op_symbol(s.op) + "', " + op_text(s.lhs) + ", " +
           op_text(s.rhs) + ")";
  }
  out += ";\n";
}

}  // namespace

std::string print_dlc(const Program& p) {
  std::string out = "dlc " + p.sig.name + "(" + print_params(p.sig) + ") {\n  access {\n";
  for (const auto& m : p.access.marshals)
    if (m.unit < 0) print_marshal(p, m, out);
  for (std::size_t i = 0; i < p.access.units.size(); ++i) {
    const Unit& u = p.access.units[i];
    out += "    tu " + u.name + " = loop_tr" + width_suffix(u.vlen) + "(" + op_text(u.lower) + ", " +
           op_text(u.upper) + ", " + std::to_string(u.stride) + ")";
    if (u.parent >= 0) out += " in " + unit_ref(p, u.parent);
    out += ";\n";
    for (const auto& s : p.access.streams)
      if (s.unit == static_cast<int>(i)) print_stream(p, s, out);
    for (const auto& m : p.access.marshals)
      if (m.unit == static_cast<int>(i)) print_marshal(p, m, out);
  }
  out += "  }\n  execute {\n";
  for (const auto& l : p.execute.locals) out += "    idx " + l.name + " = " + op_text(l.init) + ";\n";
  out += "    while((tkn = ctrlQ.pop()) != done) {";
  for (std::size_t i = 0; i < p.execute.arms.size(); ++i) {
    const Arm& a = p.execute.arms[i];
    out += i ? " else if (tkn == " : "\n      if (tkn == ";
    out += token_name(p, a.token) + ") {\n";
    ir::print_block(a.body, 4, out);
    out += "      }";
  }
  out += "\n    }\n  }\n}\n";
  return out;
}

bool equal(const Program& a, const Program& b) {
  if (!(a.sig == b.sig)) return false;
  if (a.access.units != b.access.units || a.access.streams != b.access.streams ||
      a.access.marshals != b.access.marshals)
    return false;
  if (a.execute.locals != b.execute.locals || a.execute.arms.size() != b.execute.arms.size()) return false;
  for (std::size_t i = 0; i < a.execute.arms.size(); ++i) {
    const Arm &x = a.execute.arms[i], &y = b.execute.arms[i];
    if (x.token != y.token || !ir::equal(x.body, y.body)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : ts_(text) {}

  Program program() {
    ts_.expect("dlc");
    p_.sig.name = ts_.ident();
    p_.sig.params = parse_params(ts_);
    for (const auto& prm : p_.sig.params)
      if (prm.is_memref) memrefs_.insert(prm.name);
    ts_.expect("{");
    ts_.expect("access");
    ts_.expect("{");
    while (!ts_.is("}")) access_item();
    ts_.expect("}");
    execute();
    ts_.expect("}");
    if (!ts_.at_end()) ts_.fail("unexpected text after the program");
    return std::move(p_);
  }

 private:
  int unit_index(const std::string& n) {
    for (std::size_t i = 0; i < p_.access.units.size(); ++i)
      if (p_.access.units[i].name == n) return static_cast<int>(i);
    ts_.fail("unknown traversal unit '" + n + "'");
  }

  int unit_ref() {
    std::string n = ts_.ident();
    return unit_index(n);
  }

  Event event() {
    std::string e = ts_.ident();
    if (e == "beg") return Event::Beg;
    if (e == "ite") return Event::Ite;
    if (e == "end") return Event::End;
    ts_.fail("expected beg, ite or end, found '" + e + "'");
  }

  Operand operand() {
    if (ts_.peek().kind == TokKind::Int) return Operand::lit(ts_.uint_literal());
    std::string n = ts_.ident();
    auto [head, tail] = split_dot(n);
    if ((tail == "ite" || tail == "msk") && !tail.empty()) {
      unit_index(head);
      return Operand::stream(n);
    }
    if (streams_.count(n)) return Operand::stream(n);
    const Param* prm = p_.sig.find(n);
    if (!prm || prm->is_memref) ts_.fail("unknown stream or scalar '" + n + "'");
    return Operand::var(n);
  }

  std::string mask_ref() {
    Operand o = operand();
    if (o.kind != Operand::Stream) ts_.fail("expected a mask stream");
    return o.name;
  }

  int angle_width() {
    if (!ts_.accept("<")) return 0;
    auto w = ts_.uint_literal();
    ts_.expect(">");
    if (w < 1) ts_.fail("vector width must be positive");
    return static_cast<int>(w);
  }

  void access(std::string& memref, std::vector<Operand>& idx) {
    memref = ts_.ident();
    if (!memrefs_.count(memref)) ts_.fail("undeclared memref '" + memref + "'");
    ts_.expect("[");
    if (!ts_.is("]")) {
      idx.push_back(operand());
      while (ts_.accept(",")) idx.push_back(operand());
    }
    ts_.expect("]");
  }

  void access_item() {
    Token head = ts_.peek();
    if (head.text == "tu") return unit();
    if (head.text == "str") return stream();
    if (head.text == "callback") return trigger();
    if (head.text == "push_op") return push();
    auto [u, what] = split_dot(head.text);
    if (what == "store_str") return store();
    ts_.fail("expected tu, str, callback, push_op or store_str, found '" + head.text + "'");
  }

  void unit() {
    ts_.expect("tu");
    Unit u;
    u.name = ts_.ident();
    if (u.name.find('.') != std::string::npos) ts_.fail("unit names cannot contain '.'");
    for (const auto& o : p_.access.units)
      if (o.name == u.name) ts_.fail("redeclaration of unit '" + u.name + "'");
    ts_.expect("=");
    ts_.expect("loop_tr");
    u.vlen = angle_width();
    ts_.expect("(");
    u.lower = operand();
    ts_.expect(",");
    u.upper = operand();
    ts_.expect(",");
    u.stride = ts_.uint_literal();
    if (u.stride == 0) ts_.fail("stride must be positive literal");
    ts_.expect(")");
    if (ts_.accept("in")) u.parent = unit_ref();
    ts_.expect(";");
    p_.access.units.push_back(u);
  }

  void stream() {
    ts_.expect("str");
    Stream s;
    s.name = ts_.ident();
    if (streams_.count(s.name)) ts_.fail("redeclaration of stream '" + s.name + "'");
    ts_.expect("=");
    Token op = ts_.next();
    auto [u, what] = split_dot(op.text);
    s.unit = unit_index(u);
    if (what == "mem_str") {
      s.kind = Stream::Mem;
      s.width = angle_width();
      ts_.expect("(");
      access(s.memref, s.indices);
      if (ts_.accept(",")) s.mask = mask_ref();
      ts_.expect(")");
      if (ts_.accept("hint")) {
        ts_.expect("(");
        std::string lvl = ts_.ident();
        slc::Hint h;
        if (lvl == "L1") h.level = slc::CacheLevel::L1;
        else if (lvl == "L2") h.level = slc::CacheLevel::L2;
        else if (lvl == "LLC") h.level = slc::CacheLevel::LLC;
        else ts_.fail("unknown cache level '" + lvl + "'");
        ts_.expect(",");
        std::string tmp = ts_.ident();
        if (tmp != "temporal" && tmp != "nontemporal") ts_.fail("expected temporal or nontemporal");
        h.temporal = tmp == "temporal";
        ts_.expect(")");
        s.hint = h;
      }
    } else if (what == "alu_str") {
      s.kind = Stream::Alu;
      s.width = angle_width();
      ts_.expect("(");
      Token o = ts_.next();
      auto bop = o.text.size() == 1 ? parse_bin_op(o.text[0]) : std::nullopt;
      if (!bop) ts_.fail_at(o.loc, "unknown operator '" + o.text + "'");
      s.op = *bop;
      ts_.expect(",");
      s.lhs = operand();
      ts_.expect(",");
      s.rhs = operand();
      ts_.expect(")");
    } else {
      ts_.fail_at(op.loc, "unknown stream operation '" + op.text + "'");
    }
    ts_.expect(";");
    streams_.insert(s.name);
    p_.access.streams.push_back(std::move(s));
  }

  void trigger() {
    ts_.expect("callback");
    ts_.expect("(");
    Marshal m;
    m.kind = Marshal::Trigger;
    if (ts_.accept("entry")) {
      m.unit = -1;
      m.event = m.label = Event::Beg;
    } else {
      m.unit = unit_ref();
      ts_.expect(",");
      m.label = m.event = event();
    }
    ts_.expect(")");
    if (m.unit >= 0 && ts_.accept("at")) m.event = event();
    ts_.expect(";");
    p_.access.marshals.push_back(m);
  }

  void push() {
    ts_.expect("push_op");
    Marshal m;
    m.kind = Marshal::Push;
    m.pad = angle_width();
    ts_.expect("(");
    m.source = operand();
    if (m.source.kind != Operand::Stream) ts_.fail("push_op needs a stream");
    if (ts_.accept("[")) {
      m.lane = static_cast<int>(ts_.uint_literal());
      ts_.expect("]");
    }
    ts_.expect(",");
    m.unit = unit_ref();
    ts_.expect(",");
    m.event = event();
    ts_.expect(")");
    ts_.expect(";");
    p_.access.marshals.push_back(m);
  }

  void store() {
    Token head = ts_.next();
    Marshal m;
    m.kind = Marshal::Store;
    m.unit = unit_index(split_dot(head.text).first);
    m.event = Event::Ite;
    m.width = angle_width();
    ts_.expect("(");
    access(m.memref, m.indices);
    ts_.expect(",");
    m.source = operand();
    if (m.source.kind != Operand::Stream) ts_.fail("store_str needs a value stream");
    if (ts_.accept(",")) m.mask = mask_ref();
    ts_.expect(")");
    ts_.expect(";");
    p_.access.marshals.push_back(m);
  }

  std::uint8_t token() {
    std::string n = ts_.ident();
    if (n == "entry") return kEntryToken;
    auto [u, e] = split_dot(n);
    int id = unit_index(u);
    if (e == "beg") return token_of(id, Event::Beg);
    if (e == "ite") return token_of(id, Event::Ite);
    if (e == "end") return token_of(id, Event::End);
    ts_.fail("unknown token '" + n + "'");
  }

  void execute() {
    ts_.expect("execute");
    ts_.expect("{");
    while (ts_.accept("idx")) {
      Local l;
      l.name = ts_.ident();
      ts_.expect("=");
      l.init = operand();
      if (l.init.kind == Operand::Stream) ts_.fail("execute locals start from a literal or scalar");
      ts_.expect(";");
      p_.execute.locals.push_back(l);
    }
    for (const char* t : {"while", "(", "(", "tkn", "=", "ctrlQ.pop", "(", ")", ")", "!=", "done", ")", "{"})
      ts_.expect(t);
    if (!ts_.is("}")) {
      ts_.expect("if");
      do {
        ts_.expect("(");
        ts_.expect("tkn");
        ts_.expect("==");
        Arm a;
        a.token = token();
        for (const auto& o : p_.execute.arms)
          if (o.token == a.token) ts_.fail("two arms for token '" + token_name(p_, a.token) + "'");
        ts_.expect(")");
        ir::StmtParser sp(ts_, memrefs_);
        a.body = sp.braced_block();
        p_.execute.arms.push_back(std::move(a));
      } while (ts_.accept("else") && (ts_.expect("if"), true));
    }
    ts_.expect("}");
    ts_.expect("}");
  }

  TokenStream ts_;
  Program p_;
  std::set<std::string> memrefs_;
  std::set<std::string> streams_;
};

}  // namespace

void check_arm_types(Program& p, Diagnostics* diags) {
  ir::Scope scope(&p.sig);
  for (const auto& l : p.execute.locals) {
    try {
      scope.declare(l.name, ir::Type::scalar(Elem::Index));
    } catch (const ir::TypeError& e) {
      if (!diags) throw ParseError({}, e.what());
      diags->push_back({"execute/local " + l.name, e.what()});
    }
  }
  for (auto& a : p.execute.arms) {
    scope.push();
    ir::check_block(a.body, scope, diags, "execute/" + token_name(p, a.token) + "/");
    scope.pop();
  }
}

Program parse_dlc(std::string_view text) {
  Program p = Parser(text).program();
  check_arm_types(p, nullptr);
  return p;
}

}  // namespace ember::dlc
