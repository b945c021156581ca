#include "ember/common/signature.hpp"

#include <set>

namespace ember {

const Param* Signature::find(const std::string& n) const {
  for (const auto& p : params)
    if (p.name == n) return &p;
  return nullptr;
}

std::vector<std::string> Signature::memrefs() const {
  std::vector<std::string> out;
  for (const auto& p : params)
    if (p.is_memref) out.push_back(p.name);
  return out;
}

std::vector<std::string> Signature::scalars() const {
  std::vector<std::string> out;
  for (const auto& p : params)
    if (!p.is_memref) out.push_back(p.name);
  return out;
}

std::string print_param(const Param& p) {
  std::string out = p.name + ": ";
  if (!p.is_memref) return out + std::string(elem_name(p.elem));
  out += "mref<";
  for (const auto& d : p.shape) {
    switch (d.kind) {
      case Dim::Static: out += std::to_string(d.size); break;
      case Dim::Dynamic: out += "?"; break;
      case Dim::Named: out += d.name; break;
    }
    out += " x ";
  }
  return out + std::string(elem_name(p.elem)) + ">";
}

std::string print_params(const Signature& sig) {
  std::string out;
  for (std::size_t i = 0; i < sig.params.size(); ++i) {
    if (i) out += ", ";
    out += print_param(sig.params[i]);
  }
  return out;
}

std::vector<Param> parse_params(TokenStream& ts) {
  std::vector<Param> out;
  std::set<std::string> seen;
  ts.expect("(");
  if (ts.accept(")")) return out;
  do {
    SourceLoc loc = ts.peek().loc;
    Param p;
    p.name = ts.ident();
    if (!seen.insert(p.name).second) ts.fail_at(loc, "duplicate parameter '" + p.name + "'");
    ts.expect(":");
    std::string ty = ts.ident();
    if (ty == "mref") {
      p.is_memref = true;
      ts.expect("<");
      // Dimensions are separated by the identifier `x`; the last item is the
      // element type.
      while (true) {
        const Token& t = ts.peek();
        Dim d;
        if (ts.accept("?")) {
          d.kind = Dim::Dynamic;
        } else if (t.kind == TokKind::Int) {
          d.kind = Dim::Static;
          d.size = ts.uint_literal();
        } else if (t.kind == TokKind::Ident && ts.is("x", 1)) {
          d.kind = Dim::Named;
          d.name = ts.ident();
        } else {
          break;
        }
        p.shape.push_back(d);
        ts.expect("x");
      }
      std::string et = ts.ident();
      auto e = parse_elem(et);
      if (!e || *e == Elem::I1) ts.fail("unknown element type '" + et + "'");
      p.elem = *e;
      if (p.shape.empty()) ts.fail("memref needs at least one dimension");
      ts.expect(">");
    } else {
      auto e = parse_elem(ty);
      if (!e || *e == Elem::I1) ts.fail_at(loc, "unknown parameter type '" + ty + "'");
      p.elem = *e;
    }
    out.push_back(std::move(p));
  } while (ts.accept(","));
  ts.expect(")");
  for (const auto& p : out)
    for (const auto& d : p.shape)
      if (d.kind == Dim::Named) {
        bool ok = false;
        for (const auto& q : out) ok |= (!q.is_memref && q.name == d.name && q.elem == Elem::Index);
        if (!ok) ts.fail("dimension '" + d.name + "' of '" + p.name + "' is not an index parameter");
      }
  return out;
}

}  // namespace ember
