#include "ember/slc/slc.hpp"

#include <functional>

#include "ember/ir/text.hpp"

namespace ember::slc {

const char* level_name(CacheLevel l) {
  switch (l) {
    case CacheLevel::L1: return "L1";
    case CacheLevel::L2: return "L2";
    case CacheLevel::LLC: return "LLC";
  }
  return "?";
}

Loop* Loop::child() const {
  for (const auto& it : body)
    if (it.is_loop()) return it.loop.get();
  return nullptr;
}

BodyItem item(Loop l) {
  BodyItem b;
  b.loop = Box<Loop>(std::move(l));
  return b;
}

BodyItem item(Callback c) {
  BodyItem b;
  b.callback = std::move(c);
  return b;
}

namespace {

const char* trigger_name(Trigger t) {
  switch (t) {
    case Trigger::Entry: return "entry";
    case Trigger::Begin: return "beg";
    case Trigger::Iteration: return "ite";
    case Trigger::End: return "end";
  }
  return "?";
}

void collect_sites(std::vector<BodyItem>& items, Loop* owner, std::vector<Loop*>& chain, const std::string& prefix,
                   std::vector<CallbackSite>& out) {
  Loop* child = nullptr;
  for (auto& it : items)
    if (it.is_loop()) child = it.loop.get();
  bool seen_child = false;
  for (auto& it : items) {
    if (it.is_loop()) {
      seen_child = true;
      chain.push_back(it.loop.get());
      collect_sites(it.loop->body, it.loop.get(), chain, prefix + it.loop->induction + "/", out);
      chain.pop_back();
      continue;
    }
    CallbackSite s;
    s.owner = owner;
    s.callback = &it.callback;
    s.ancestors = chain;
    if (child) {
      s.event_loop = child;
      s.trigger = seen_child ? Trigger::End : Trigger::Begin;
    } else if (owner) {
      s.event_loop = owner;
      s.trigger = Trigger::Iteration;
    } else {
      s.trigger = Trigger::Entry;
    }
    s.path = prefix + trigger_name(s.trigger);
    // Disambiguate several callbacks on the same event.
    int dup = 0;
    for (const auto& o : out)
      if (o.path == s.path || o.path.rfind(s.path + "@", 0) == 0) ++dup;
    if (dup) s.path += "@" + std::to_string(dup);
    out.push_back(std::move(s));
  }
}

}  // namespace

std::vector<CallbackSite> callback_sites(Function& fn) {
  std::vector<CallbackSite> out;
  std::vector<Loop*> chain;
  collect_sites(fn.body, nullptr, chain, "", out);
  return out;
}

std::map<std::string, StreamInfo> stream_types(const Function& fn) {
  std::map<std::string, StreamInfo> out;
  auto operand_elem = [&](const Operand& o) {
    if (o.kind == Operand::Stream) {
      auto it = out.find(o.name);
      return it == out.end() ? Elem::Index : it->second.type.elem;
    }
    if (o.kind == Operand::Var)
      if (const Param* p = fn.sig.find(o.name)) return p->elem;
    return Elem::Index;
  };
  std::function<void(const std::vector<BodyItem>&)> visit = [&](const std::vector<BodyItem>& items) {
    for (const auto& it : items) {
      if (!it.is_loop()) continue;
      const Loop& l = *it.loop;
      out[l.induction] = {l.vlen ? ir::Type::vector(Elem::Index, l.vlen) : ir::Type::scalar(Elem::Index), &l};
      if (l.vlen && !l.mask.empty()) out[l.mask] = {ir::Type::vector(Elem::I1, l.vlen), &l};
      for (const auto& d : l.decls) {
        switch (d.kind) {
          case StreamDecl::Load: {
            const Param* p = fn.sig.find(d.memref);
            Elem e = p ? p->elem : Elem::F32;
            out[d.name] = {d.width ? ir::Type::vector(e, d.width) : ir::Type::scalar(e), &l};
            break;
          }
          case StreamDecl::Alu: {
            Elem e = operand_elem(d.lhs);
            out[d.name] = {d.width ? ir::Type::vector(e, d.width) : ir::Type::scalar(e), &l};
            break;
          }
          case StreamDecl::Buffer:
            out[d.name] = {ir::Type::buf(d.elem, d.width), &l};
            break;
          case StreamDecl::Push:
          case StreamDecl::Store:
            break;
        }
      }
      visit(l.body);
    }
  };
  visit(fn.body);
  return out;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string pad(int n) { return std::string(n * 2, ' '); }

std::string op_text(const Operand& o) {
  return o.kind == Operand::Lit ? std::to_string(o.value) : o.name;
}

std::string access_text(const std::string& memref, const std::vector<Operand>& idx) {
  std::string s = memref + "[";
  for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? ", " : "") + op_text(idx[i]);
  return s + "]";
}

std::string width_suffix(int w) { return w ? "<" + std::to_string(w) + ">" : ""; }
std::string prefix(int w) { return w ? "slcv." : "slc."; }

void print_decl(const StreamDecl& d, int ind, std::string& out) {
  out += pad(ind);
  switch (d.kind) {
    case StreamDecl::Load:
      out += "str " + d.name + " = " + prefix(d.width) + "mem_str" + width_suffix(d.width) + "(" +
             access_text(d.memref, d.indices);
      if (!d.mask.empty()) out += ", " + d.mask;
      out += ")";
      if (d.hint)
        out += std::string(" hint(") + level_name(d.hint->level) + ", " +
               (d.hint->temporal ? "temporal" : "nontemporal") + ")";
      out += ";\n";
      return;
    case StreamDecl::Alu:
      out += "str " + d.name + " = " + prefix(d.width) + "alu_str" + width_suffix(d.width) + "('" +
             bin_op_symbol(d.op) + "', " + op_text(d.lhs) + ", " + op_text(d.rhs) + ");\n";
      return;
    case StreamDecl::Buffer:
      out += "str " + d.name + " = slcv.buf_str<" + std::to_string(d.width) + " x " + std::string(elem_name(d.elem)) + ">();\n";
      return;
    case StreamDecl::Push:
      out += "slc.push(" + d.name + ", " + d.source + ");\n";
      return;
    case StreamDecl::Store:
      out += prefix(d.width) + "store_str" + width_suffix(d.width) + "(" + access_text(d.memref, d.indices) + ", " +
             d.source;
      if (!d.mask.empty()) out += ", " + d.mask;
      out += ");\n";
      return;
  }
}

void print_items(const std::vector<BodyItem>& items, int ind, std::string& out);

void print_callback(const Callback& c, int ind, std::string& out) {
  out += pad(ind) + (c.vector ? "slcv.callback {\n" : "slc.callback {\n");
  for (const auto& t : c.conversions) {
    out += pad(ind + 1) + ir::type_name(t.type) + " " + t.var + " = ";
    if (t.pad)
      out += "slcv.to_val_pad<" + std::to_string(t.pad) + ">(" + t.stream + ")";
    else if (t.lane >= 0)
      out += "slcv.to_val(" + t.stream + ")[" + std::to_string(t.lane) + "]";
    else if (t.type.is_vector())
      out += "slcv.to_val<" + std::to_string(t.type.width) + ">(" + t.stream + ")";
    else
      out += "slc.to_val(" + t.stream + ")";
    out += ";\n";
  }
  ir::print_block(c.body, ind + 1, out);
  out += pad(ind) + "}\n";
}

void print_loop(const Loop& l, int ind, std::string& out) {
  out += pad(ind);
  if (l.vlen)
    out += "slcv.for<" + std::to_string(l.vlen) + ">((str " + l.induction + ", str " + l.mask + ")";
  else
    out += "slc.for(str " + l.induction;
  out += " from " + op_text(l.lower) + " to " + op_text(l.upper) + " step " + std::to_string(l.stride) + ")";
  if (!l.carried.empty()) {
    out += " (";
    for (std::size_t i = 0; i < l.carried.size(); ++i)
      out += (i ? ", " : "") + std::string("idx ") + l.carried[i].name + " = " + op_text(l.carried[i].init);
    out += ")";
  }
  out += " {\n";
  for (const auto& d : l.decls) print_decl(d, ind + 1, out);
  print_items(l.body, ind + 1, out);
  out += pad(ind) + "}\n";
}

void print_items(const std::vector<BodyItem>& items, int ind, std::string& out) {
  for (const auto& it : items) {
    if (it.is_loop())
      print_loop(*it.loop, ind, out);
    else
      print_callback(it.callback, ind, out);
  }
}

}  // namespace

std::string print_slc(const Function& fn) {
  std::string out = "void " + fn.sig.name + "(" + print_params(fn.sig) + ") {\n";
  print_items(fn.body, 1, out);
  out += "}\n";
  return out;
}

// ---------------------------------------------------------------------------
// Equality

namespace {

bool equal_decl(const StreamDecl& a, const StreamDecl& b) {
  return a.kind == b.kind && a.name == b.name && a.memref == b.memref && a.indices == b.indices && a.mask == b.mask &&
         a.hint == b.hint && a.width == b.width && (a.kind != StreamDecl::Alu || (a.op == b.op && a.lhs == b.lhs && a.rhs == b.rhs)) &&
         (a.kind != StreamDecl::Buffer || a.elem == b.elem) && a.source == b.source;
}

bool equal_items(const std::vector<BodyItem>& a, const std::vector<BodyItem>& b);

bool equal_loop(const Loop& a, const Loop& b) {
  if (a.induction != b.induction || a.mask != b.mask || a.vlen != b.vlen || !(a.lower == b.lower) ||
      !(a.upper == b.upper) || a.stride != b.stride || a.carried != b.carried || a.decls.size() != b.decls.size())
    return false;
  for (std::size_t i = 0; i < a.decls.size(); ++i)
    if (!equal_decl(a.decls[i], b.decls[i])) return false;
  return equal_items(a.body, b.body);
}

bool equal_items(const std::vector<BodyItem>& a, const std::vector<BodyItem>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].is_loop() != b[i].is_loop()) return false;
    if (a[i].is_loop()) {
      if (!equal_loop(*a[i].loop, *b[i].loop)) return false;
    } else {
      const Callback &x = a[i].callback, &y = b[i].callback;
      if (x.vector != y.vector || x.conversions != y.conversions || !ir::equal(x.body, y.body)) return false;
    }
  }
  return true;
}

}  // namespace

bool equal(const Function& a, const Function& b) { return a.sig == b.sig && equal_items(a.body, b.body); }

// ---------------------------------------------------------------------------
// Parsing

void check_callback_types(Function& fn, Diagnostics* diags);  // verify.cpp

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : ts_(text) {}

  Function function() {
    Function fn;
    ts_.expect("void");
    fn.sig.name = ts_.ident();
    fn.sig.params = parse_params(ts_);
    for (const auto& m : fn.sig.memrefs()) memrefs_.insert(m);
    ts_.expect("{");
    fn.body = items(nullptr);
    ts_.expect("}");
    if (!ts_.at_end()) ts_.fail("unexpected text after function body");
    return fn;
  }

 private:
  std::vector<BodyItem> items(Loop* owner) {
    std::vector<BodyItem> out;
    while (!ts_.is("}") && !ts_.at_end()) {
      const Token& t = ts_.peek();
      if (t.text == "slc.for" || t.text == "slcv.for") {
        out.push_back(item(loop()));
      } else if (t.text == "slc.callback" || t.text == "slcv.callback") {
        out.push_back(item(callback()));
      } else if (t.text == "str" || t.text == "slc.push" || t.text == "slc.store_str" || t.text == "slcv.store_str") {
        if (!owner) ts_.fail("'" + t.text + "' outside a loop");
        if (!out.empty()) ts_.fail("stream declarations must precede the loop body");
        owner->decls.push_back(decl());
      } else {
        ts_.fail("expected a loop, callback or stream declaration, found '" + t.text + "'");
      }
    }
    return out;
  }

  Operand operand() {
    const Token& t = ts_.peek();
    if (t.kind == TokKind::Int) return Operand::lit(ts_.uint_literal());
    std::string n = ts_.ident();
    return streams_.count(n) ? Operand::stream(n) : Operand::var(n);
  }

  int angle_width() {
    ts_.expect("<");
    auto w = ts_.uint_literal();
    ts_.expect(">");
    if (w < 1) ts_.fail("vector width must be positive");
    return static_cast<int>(w);
  }

  void access(StreamDecl& d) {
    d.memref = ts_.ident();
    if (!memrefs_.count(d.memref)) ts_.fail("undeclared memref '" + d.memref + "'");
    ts_.expect("[");
    if (!ts_.is("]")) {
      d.indices.push_back(operand());
      while (ts_.accept(",")) d.indices.push_back(operand());
    }
    ts_.expect("]");
  }

  std::string stream_name() {
    std::string n = ts_.ident();
    if (!streams_.count(n)) ts_.fail("unknown stream '" + n + "'");
    return n;
  }

  StreamDecl decl() {
    StreamDecl d;
    Token head = ts_.next();
    if (head.text == "slc.push") {
      d.kind = StreamDecl::Push;
      ts_.expect("(");
      d.name = stream_name();
      ts_.expect(",");
      d.source = stream_name();
      ts_.expect(")");
      ts_.expect(";");
      return d;
    }
    if (head.text == "slc.store_str" || head.text == "slcv.store_str") {
      d.kind = StreamDecl::Store;
      if (head.text == "slcv.store_str") d.width = angle_width();
      ts_.expect("(");
      access(d);
      ts_.expect(",");
      d.source = stream_name();
      if (ts_.accept(",")) d.mask = stream_name();
      ts_.expect(")");
      ts_.expect(";");
      return d;
    }
    d.name = ts_.ident();
    if (streams_.count(d.name)) ts_.fail("redeclaration of stream '" + d.name + "'");
    ts_.expect("=");
    Token op = ts_.next();
    bool vec = op.text.rfind("slcv.", 0) == 0;
    std::string what = op.text.substr(op.text.find('.') + 1);
    if (what == "mem_str") {
      d.kind = StreamDecl::Load;
      if (vec) d.width = angle_width();
      ts_.expect("(");
      access(d);
      if (ts_.accept(",")) d.mask = stream_name();
      ts_.expect(")");
      if (ts_.accept("hint")) {
        ts_.expect("(");
        std::string lvl = ts_.ident();
        Hint h;
        if (lvl == "L1") h.level = CacheLevel::L1;
        else if (lvl == "L2") h.level = CacheLevel::L2;
        else if (lvl == "LLC") h.level = CacheLevel::LLC;
        else ts_.fail("unknown cache level '" + lvl + "'");
        ts_.expect(",");
        std::string tmp = ts_.ident();
        if (tmp != "temporal" && tmp != "nontemporal") ts_.fail("expected temporal or nontemporal");
        h.temporal = tmp == "temporal";
        ts_.expect(")");
        d.hint = h;
      }
    } else if (what == "alu_str") {
      d.kind = StreamDecl::Alu;
      if (vec) d.width = angle_width();
      ts_.expect("(");
      Token o = ts_.next();
      auto bop = o.text.size() == 1 ? parse_bin_op(o.text[0]) : std::nullopt;
      if (!bop) ts_.fail_at(o.loc, "unknown operator '" + o.text + "'");
      d.op = *bop;
      ts_.expect(",");
      d.lhs = operand();
      ts_.expect(",");
      d.rhs = operand();
      ts_.expect(")");
    } else if (what == "buf_str") {
      d.kind = StreamDecl::Buffer;
      ts_.expect("<");
      d.width = static_cast<int>(ts_.uint_literal());
      ts_.expect("x");
      std::string en = ts_.ident();
      auto e = parse_elem(en);
      if (!e) ts_.fail("unknown element type '" + en + "'");
      d.elem = *e;
      ts_.expect(">");
      ts_.expect("(");
      ts_.expect(")");
    } else {
      ts_.fail_at(op.loc, "unknown stream operation '" + op.text + "'");
    }
    ts_.expect(";");
    streams_.insert(d.name);
    return d;
  }

  Loop loop() {
    Loop l;
    Token head = ts_.next();
    if (head.text == "slcv.for") {
      l.vlen = angle_width();
      ts_.expect("(");
      ts_.expect("(");
      ts_.expect("str");
      l.induction = ts_.ident();
      ts_.expect(",");
      ts_.expect("str");
      l.mask = ts_.ident();
      ts_.expect(")");
    } else {
      ts_.expect("(");
      ts_.expect("str");
      l.induction = ts_.ident();
    }
    ts_.expect("from");
    l.lower = operand();
    ts_.expect("to");
    l.upper = operand();
    ts_.expect("step");
    l.stride = ts_.uint_literal();
    if (l.stride == 0) ts_.fail("stride must be positive literal");
    ts_.expect(")");
    streams_.insert(l.induction);
    if (!l.mask.empty()) streams_.insert(l.mask);
    if (ts_.accept("(")) {
      do {
        ts_.expect("idx");
        Carried c;
        c.name = ts_.ident();
        ts_.expect("=");
        c.init = operand();
        l.carried.push_back(c);
      } while (ts_.accept(","));
      ts_.expect(")");
    }
    ts_.expect("{");
    l.body = items(&l);
    ts_.expect("}");
    return l;
  }

  bool at_conversion() {
    ir::StmtParser sp(ts_, memrefs_);
    if (!sp.at_type()) return false;
    auto m = ts_.mark();
    sp.type();
    bool yes = ts_.peek().kind == TokKind::Ident && ts_.is("=", 1) &&
               (ts_.peek(2).text.rfind("slc.to_val", 0) == 0 || ts_.peek(2).text.rfind("slcv.to_val", 0) == 0);
    ts_.reset(m);
    return yes;
  }

  ToVal conversion() {
    ir::StmtParser sp(ts_, memrefs_);
    ToVal t;
    t.type = sp.type();
    t.var = ts_.ident();
    ts_.expect("=");
    Token f = ts_.next();
    if (f.text == "slcv.to_val_pad") {
      t.pad = angle_width();
    } else if (f.text == "slcv.to_val") {
      if (ts_.is("<")) angle_width();
    } else if (f.text != "slc.to_val") {
      ts_.fail_at(f.loc, "expected to_val");
    }
    ts_.expect("(");
    t.stream = stream_name();
    ts_.expect(")");
    if (ts_.accept("[")) {
      t.lane = static_cast<int>(ts_.uint_literal());
      ts_.expect("]");
    }
    ts_.expect(";");
    return t;
  }

  Callback callback() {
    Callback c;
    c.vector = ts_.next().text == "slcv.callback";
    ts_.expect("{");
    while (at_conversion()) c.conversions.push_back(conversion());
    ir::StmtParser sp(ts_, memrefs_);
    c.body = sp.block_items();
    ts_.expect("}");
    return c;
  }

  TokenStream ts_;
  std::set<std::string> memrefs_;
  std::set<std::string> streams_;
};

}  // namespace

Function parse_slc(std::string_view text) {
  Function fn = Parser(text).function();
  check_callback_types(fn, nullptr);
  return fn;
}

}  // namespace ember::slc
