#include "ember/scf/scf.hpp"

#include "ember/ir/eval.hpp"
#include "ember/ir/text.hpp"
#include "ember/ir/typecheck.hpp"

namespace ember::scf {

namespace {

/// Returns an error message if `b` uses constructs outside the input
/// language, else an empty string.
std::string subset_violation(const ir::Block& b) {
  std::string bad;
  ir::walk(
      b,
      [&](const ir::Stmt& s) {
        if (!bad.empty()) return;
        switch (s.kind) {
          case ir::StmtKind::Let:
            if (!s.type.is_scalar() || s.type.elem == Elem::I1) bad = "only idx, i32 and f32 variables are allowed";
            break;
          case ir::StmtKind::Set:
          case ir::StmtKind::Store:
          case ir::StmtKind::For:
            break;
          default:
            bad = "vector statements are not part of the input language";
        }
      },
      [&](const ir::Expr& e) {
        if (!bad.empty()) return;
        switch (e.kind) {
          case ir::ExprKind::Lit:
          case ir::ExprKind::Var:
          case ir::ExprKind::Load:
          case ir::ExprKind::Bin:
          case ir::ExprKind::Abs:
            break;
          default:
            bad = "vector expressions are not part of the input language";
        }
      });
  return bad;
}

SourceLoc first_violation_loc(const ir::Block& b) {
  for (const auto& s : b) {
    if (!subset_violation({s}).empty()) {
      if (s.kind == ir::StmtKind::For) {
        SourceLoc inner = first_violation_loc(s.body);
        if (inner.line) return inner;
      }
      return s.loc;
    }
  }
  return {};
}

}  // namespace

Function parse_scf(std::string_view text) {
  TokenStream ts(text);
  Function fn;
  ts.expect("void");
  fn.sig.name = ts.ident();
  fn.sig.params = parse_params(ts);
  std::set<std::string> memrefs;
  for (const auto& m : fn.sig.memrefs()) memrefs.insert(m);
  ir::StmtParser sp(ts, memrefs);
  fn.body = sp.braced_block();
  if (!ts.at_end()) ts.fail("unexpected text after function body");
  std::string bad = subset_violation(fn.body);
  if (!bad.empty()) throw ParseError(first_violation_loc(fn.body), bad);
  ir::Scope scope(&fn.sig);
  ir::check_block(fn.body, scope, nullptr, "");
  return fn;
}

std::string print_scf(const Function& fn) {
  std::string out = "void " + fn.sig.name + "(" + print_params(fn.sig) + ") {\n";
  ir::print_block(fn.body, 1, out);
  out += "}\n";
  return out;
}

bool equal(const Function& a, const Function& b) { return a.sig == b.sig && ir::equal(a.body, b.body); }

VerifyResult verify_scf(const Function& fn) {
  VerifyResult r;
  ir::Block body = fn.body;
  std::string bad = subset_violation(body);
  if (!bad.empty()) r.diags.push_back({"", bad});
  ir::Scope scope(&fn.sig);
  ir::check_block(body, scope, &r.diags, "");
  for (const auto& m : ir::stored_memrefs(fn.body)) r.written.insert(m);
  for (const auto& m : fn.sig.memrefs())
    if (!r.written.count(m)) r.read_only.insert(m);
  return r;
}

Memory interpret_scf(const Function& fn, const Memory& inputs) {
  check_memory(fn.sig, inputs);
  Memory mem = inputs;
  ir::Env env;
  for (const auto& p : fn.sig.params)
    if (!p.is_memref) env.define(p.name, ir::Value::scalar(p.elem, mem.scalar(p.name)));
  ir::EvalContext ctx;
  ctx.mem = &mem;
  ir::exec(fn.body, env, ctx);
  return mem;
}

}  // namespace ember::scf
