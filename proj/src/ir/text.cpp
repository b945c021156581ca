#include "ember/ir/text.hpp"

#include <charconv>
#include <cstdlib>

namespace ember::ir {

namespace {

int precedence(const ExprP& e) { return e->kind == ExprKind::Bin ? bin_op_precedence(e->op) : 3; }

std::string join_indices(const std::vector<ExprP>& idx) {
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) s += ", ";
    s += print_expr(idx[i]);
  }
  return s;
}

std::string access(const std::string& m, const std::vector<ExprP>& idx) { return m + "[" + join_indices(idx) + "]"; }

std::string mask_suffix(const ExprP& m) { return m ? ", " + print_expr(m) : ""; }

}  // namespace

std::string print_expr(const ExprP& e) {
  switch (e->kind) {
    case ExprKind::Lit: return format_scalar(e->elem, e->value);
    case ExprKind::Var: return e->name;
    case ExprKind::Load: return access(e->name, e->args);
    case ExprKind::Bin: {
      int p = bin_op_precedence(e->op);
      std::string l = print_expr(e->args[0]), r = print_expr(e->args[1]);
      if (precedence(e->args[0]) < p) l = "(" + l + ")";
      if (precedence(e->args[1]) <= p) r = "(" + r + ")";
      return l + " " + bin_op_symbol(e->op) + " " + r;
    }
    case ExprKind::Abs: return "abs(" + print_expr(e->args[0]) + ")";
    case ExprKind::Extract: {
      std::string inner = print_expr(e->args[0]);
      if (e->args[0]->kind == ExprKind::Bin) inner = "(" + inner + ")";
      return inner + "[" + std::to_string(e->lane) + "]";
    }
    case ExprKind::VLoad:
      return "vload<" + std::to_string(e->width) + ">(" + access(e->name, e->args) + mask_suffix(e->mask) + ")";
    case ExprKind::Gather:
      return "gather<" + std::to_string(e->width) + ">(" + access(e->name, e->args) + mask_suffix(e->mask) + ")";
    case ExprKind::Reduce:
      return "vreduce_add(" + print_expr(e->args[0]) + ", " + print_expr(e->args[1]) + mask_suffix(e->mask) + ")";
    case ExprKind::Mask:
      return "vmask<" + std::to_string(e->width) + ">(" + print_expr(e->args[0]) + ", " + print_expr(e->args[1]) +
             ")";
    case ExprKind::Pop:
      return "dataQ.pop<" + std::to_string(e->type.lanes()) + " x " + std::string(elem_name(e->type.elem)) + ">()";
  }
  return "?";
}

void print_block(const Block& b, int indent, std::string& out) {
  std::string pad(indent * 2, ' ');
  for (const auto& s : b) {
    switch (s.kind) {
      case StmtKind::Let:
        out += pad + type_name(s.type) + " " + s.name + " = " + print_expr(s.value) + ";\n";
        break;
      case StmtKind::Set:
        out += pad + s.name + " = " + print_expr(s.value) + ";\n";
        break;
      case StmtKind::Store:
        out += pad + access(s.name, s.indices) + " = " + print_expr(s.value) + ";\n";
        break;
      case StmtKind::VStore:
      case StmtKind::Scatter:
        out += pad + (s.kind == StmtKind::VStore ? "vstore<" : "scatter<") + std::to_string(s.width) + ">(" +
               print_expr(s.value) + ", " + access(s.name, s.indices) + mask_suffix(s.mask) + ");\n";
        break;
      case StmtKind::For: {
        std::string step = s.stride == 1 ? s.name + "++" : s.name + " += " + std::to_string(s.stride);
        out += pad + "for(idx " + s.name + " = " + print_expr(s.lb) + "; " + s.name + " < " + print_expr(s.ub) +
               "; " + step + ") {\n";
        print_block(s.body, indent + 1, out);
        out += pad + "}\n";
        break;
      }
      case StmtKind::Drain: {
        out += pad + "for<" + std::to_string(s.width) + ">(idx " + s.name + " from " + print_expr(s.lb) + " to " +
               print_expr(s.ub) + ") bind(";
        for (std::size_t i = 0; i < s.binds.size(); ++i) {
          if (i) out += ", ";
          out += s.binds[i].name + " <- " + print_expr(s.binds[i].source);
        }
        out += ") {\n";
        print_block(s.body, indent + 1, out);
        out += pad + "}\n";
        break;
      }
    }
  }
}

std::string print_block(const Block& b, int indent) {
  std::string out;
  print_block(b, indent, out);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

bool is_type_word(const std::string& s) {
  return s == "idx" || s == "index" || s == "i32" || s == "f32" || s == "i1" || s == "vec" || s == "buf";
}

ExprP number(const Token& t, bool negate) {
  if (t.kind == TokKind::Int) {
    std::uint64_t v = 0;
    auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (res.ec != std::errc()) throw ParseError(t.loc, "integer literal out of range");
    if (negate) {
      if (v > 0x80000000ull) throw ParseError(t.loc, "negative literal out of i32 range");
      return lit(Elem::I32, from_i32(static_cast<std::int32_t>(-static_cast<std::int64_t>(v))));
    }
    return lit(Elem::Index, v);
  }
  float f = std::strtof(t.text.c_str(), nullptr);
  return lit(Elem::F32, from_f32(negate ? -f : f));
}

}  // namespace

bool StmtParser::at_type() const { return ts_.peek().kind == TokKind::Ident && is_type_word(ts_.peek().text); }

Type StmtParser::type() {
  std::string w = ts_.ident();
  if (w == "vec" || w == "buf") {
    ts_.expect("<");
    int width = static_cast<int>(ts_.uint_literal());
    if (width < 1) ts_.fail("vector width must be at least 1");
    ts_.expect("x");
    std::string e = ts_.ident();
    auto el = parse_elem(e);
    if (!el) ts_.fail("unknown element type '" + e + "'");
    ts_.expect(">");
    return w == "vec" ? Type::vector(*el, width) : Type::buf(*el, width);
  }
  auto el = parse_elem(w);
  if (!el) ts_.fail("unknown type '" + w + "'");
  return Type::scalar(*el);
}

int StmtParser::width_arg() {
  ts_.expect("<");
  int w = static_cast<int>(ts_.uint_literal());
  if (w < 1) ts_.fail("vector width must be at least 1");
  ts_.expect(">");
  return w;
}

std::vector<ExprP> StmtParser::index_list() {
  std::vector<ExprP> out;
  ts_.expect("[");
  if (ts_.is("]")) ts_.fail("empty index list");
  do {
    out.push_back(expr());
  } while (ts_.accept(","));
  ts_.expect("]");
  return out;
}

ExprP StmtParser::expr() { return binary(1); }

ExprP StmtParser::binary(int min_prec) {
  ExprP lhs = unary();
  while (true) {
    const Token& t = ts_.peek();
    if (t.kind != TokKind::Punct || t.text.size() != 1) break;
    auto op = parse_bin_op(t.text[0]);
    if (!op || bin_op_precedence(*op) < min_prec) break;
    ts_.next();
    ExprP rhs = binary(bin_op_precedence(*op) + 1);
    lhs = bin(*op, lhs, rhs);
  }
  return lhs;
}

ExprP StmtParser::unary() {
  if (ts_.is("-")) {
    ts_.next();
    const Token& t = ts_.peek();
    if (t.kind != TokKind::Int && t.kind != TokKind::Float) ts_.fail("unary minus only applies to literals");
    Token num = ts_.next();
    return postfix(number(num, true));
  }
  const Token& t = ts_.peek();
  if (t.kind == TokKind::Int || t.kind == TokKind::Float) {
    Token num = ts_.next();
    return postfix(number(num, false));
  }
  if (ts_.accept("(")) {
    ExprP e = expr();
    ts_.expect(")");
    return postfix(e);
  }
  if (t.kind != TokKind::Ident) ts_.fail("expected expression, found '" + t.text + "'");
  std::string name = ts_.ident();
  if (name == "abs") {
    ts_.expect("(");
    ExprP a = expr();
    ts_.expect(")");
    return postfix(abs_of(a));
  }
  if (name == "vload" || name == "gather") {
    int w = width_arg();
    ts_.expect("(");
    std::string m = ts_.ident();
    auto idx = index_list();
    ExprP mask;
    if (ts_.accept(",")) mask = expr();
    ts_.expect(")");
    return postfix(name == "vload" ? vload(w, m, idx, mask) : gather(w, m, idx, mask));
  }
  if (name == "vreduce_add") {
    ts_.expect("(");
    ExprP init = expr();
    ts_.expect(",");
    ExprP v = expr();
    ExprP mask;
    if (ts_.accept(",")) mask = expr();
    ts_.expect(")");
    return postfix(reduce_add(init, v, mask));
  }
  if (name == "vmask") {
    int w = width_arg();
    ts_.expect("(");
    ExprP base = expr();
    ts_.expect(",");
    ExprP ub = expr();
    ts_.expect(")");
    return postfix(vmask(w, base, ub));
  }
  if (name == "dataQ.pop") {
    ts_.expect("<");
    int w = static_cast<int>(ts_.uint_literal());
    if (w < 1) ts_.fail("pop width must be at least 1");
    ts_.expect("x");
    std::string e = ts_.ident();
    auto el = parse_elem(e);
    if (!el) ts_.fail("unknown element type '" + e + "'");
    ts_.expect(">");
    ts_.expect("(");
    ts_.expect(")");
    return postfix(pop(Type::vector(*el, w)));
  }
  if (ts_.is("[") && memrefs_.count(name)) return postfix(load(name, index_list()));
  return postfix(var(name));
}

ExprP StmtParser::postfix(ExprP e) {
  while (ts_.is("[")) {
    ts_.next();
    int lane = static_cast<int>(ts_.uint_literal());
    ts_.expect("]");
    e = extract(e, lane);
  }
  return e;
}

Stmt StmtParser::for_stmt() {
  SourceLoc loc = ts_.peek().loc;
  ts_.expect("for");
  if (ts_.is("<")) {
    int w = width_arg();
    ts_.expect("(");
    ts_.expect("idx");
    std::string v = ts_.ident();
    ts_.expect("from");
    ExprP lb = expr();
    ts_.expect("to");
    ExprP ub = expr();
    ts_.expect(")");
    ts_.expect("bind");
    ts_.expect("(");
    std::vector<Bind> binds;
    do {
      Bind b;
      b.name = ts_.ident();
      ts_.expect("<-");
      b.source = expr();
      binds.push_back(std::move(b));
    } while (ts_.accept(","));
    ts_.expect(")");
    Block body = braced_block();
    Stmt s = drain(v, w, lb, ub, std::move(binds), std::move(body));
    s.loc = loc;
    return s;
  }
  ts_.expect("(");
  if (ts_.is("idx") || ts_.is("index")) ts_.next();
  std::string v = ts_.ident();
  ts_.expect("=");
  ExprP lb = expr();
  ts_.expect(";");
  std::string v2 = ts_.ident();
  if (v2 != v) ts_.fail("loop condition must test '" + v + "'");
  ts_.expect("<");
  ExprP ub = expr();
  ts_.expect(";");
  std::string v3 = ts_.ident();
  if (v3 != v) ts_.fail("loop step must update '" + v + "'");
  std::uint64_t stride = 0;
  if (ts_.accept("++")) {
    stride = 1;
  } else if (ts_.accept("+=") && ts_.peek().kind == TokKind::Int) {
    stride = ts_.uint_literal();
  }
  if (stride == 0) ts_.fail("stride must be positive literal");
  ts_.expect(")");
  Block body = braced_block();
  Stmt s = for_loop(v, lb, ub, stride, std::move(body));
  s.loc = loc;
  return s;
}

Stmt StmtParser::stmt() {
  SourceLoc loc = ts_.peek().loc;
  if (ts_.is("for")) return for_stmt();
  Stmt s;
  if (ts_.is("vstore") || ts_.is("scatter")) {
    bool contiguous = ts_.next().text == "vstore";
    int w = width_arg();
    ts_.expect("(");
    ExprP value = expr();
    ts_.expect(",");
    std::string m = ts_.ident();
    auto idx = index_list();
    ExprP mask;
    if (ts_.accept(",")) mask = expr();
    ts_.expect(")");
    s = contiguous ? vstore(w, value, m, idx, mask) : scatter(w, value, m, idx, mask);
  } else if (at_type()) {
    Type t = type();
    std::string name = ts_.ident();
    ts_.expect("=");
    ExprP value = expr();
    // A `<1 x T>` pop initializing a scalar is a scalar pop.
    if (t.is_scalar() && value->kind == ExprKind::Pop && value->type.width == 1) value = pop(Type::scalar(value->type.elem));
    s = let(t, name, value);
  } else {
    std::string name = ts_.ident();
    if (ts_.is("[")) {
      if (!memrefs_.count(name)) ts_.fail_at(loc, "undeclared memref '" + name + "'");
      auto idx = index_list();
      if (ts_.accept("+=")) {
        ExprP rhs = expr();
        s = store(name, idx, bin(BinOp::Add, load(name, idx), rhs));
      } else {
        ts_.expect("=");
        s = store(name, idx, expr());
      }
    } else if (ts_.accept("++")) {
      s = set(name, bin(BinOp::Add, var(name), lit_index(1)));
    } else if (ts_.accept("+=")) {
      s = set(name, bin(BinOp::Add, var(name), expr()));
    } else {
      ts_.expect("=");
      s = set(name, expr());
    }
  }
  ts_.expect(";");
  s.loc = loc;
  return s;
}

Block StmtParser::block_items() {
  Block b;
  while (!ts_.is("}") && !ts_.at_end()) b.push_back(stmt());
  return b;
}

Block StmtParser::braced_block() {
  ts_.expect("{");
  Block b = block_items();
  ts_.expect("}");
  return b;
}

}  // namespace ember::ir
