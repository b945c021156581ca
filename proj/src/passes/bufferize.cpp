#include "ember/passes/passes.hpp"
#include "util.hpp"

namespace ember::passes {

bool bufferize(slc::Function& fn, Diagnostics& diags) {
  auto chain = loop_chain(fn);
  if (chain.size() < 2) return false;
  slc::Loop& loop = *chain.back();
  slc::Loop& parent = *chain[chain.size() - 2];
  std::string path;
  for (auto* l : chain) path += (path.empty() ? "" : "/") + l->induction;
  auto fail = [&](const std::string& why) {
    diags.push_back({path, "bufferize: " + why});
    return false;
  };
  if (!loop.vlen) return false;
  if (loop.body.empty()) return false;  // nothing to move (already bufferized or fully offloaded)
  for (const auto& b : {loop.lower, loop.upper})
    if (b.kind == slc::Operand::Stream) return fail("vector loop bounds are not static");

  const slc::Callback& cb = loop.body[0].callback;
  auto types = slc::stream_types(fn);
  Names names(fn);
  slc::Callback moved;
  moved.vector = true;
  std::vector<ir::Bind> binds;
  std::vector<slc::StreamDecl> buffers, pushes;
  std::string drain_var;
  for (const auto& t : cb.conversions) {
    const auto& info = types.at(t.stream);
    if (t.stream == loop.induction) {
      if (t.lane != 0) return fail("callback uses the vector induction beyond its first lane");
      drain_var = t.var;
      continue;
    }
    if (info.owner != &loop) {
      moved.conversions.push_back(t);
      continue;
    }
    if (!info.type.is_vector() || t.lane >= 0) return fail("callback reads per-iteration scalar stream '" + t.stream + "'");
    slc::StreamDecl buf;
    buf.kind = slc::StreamDecl::Buffer;
    buf.name = names.fresh(t.stream + "_buf");
    buf.width = loop.vlen;
    buf.elem = info.type.elem;
    slc::StreamDecl push;
    push.kind = slc::StreamDecl::Push;
    push.name = buf.name;
    push.source = t.stream;
    std::string buf_var = names.fresh(t.var + "_buf");
    moved.conversions.push_back({buf_var, ir::Type::buf(info.type.elem, loop.vlen), buf.name, -1, 0});
    binds.push_back({t.var, ir::var(buf_var)});
    buffers.push_back(buf);
    pushes.push_back(push);
  }
  if (drain_var.empty()) return fail("callback does not read the vector induction");

  ir::Block body;
  body.push_back(ir::drain(drain_var, loop.vlen, operand_expr(loop.lower), operand_expr(loop.upper), binds, cb.body));

  // Merge with a callback already placed after the loop.
  int after = callback_after_loop(parent.body);
  if (after >= 0) {
    auto& existing = parent.body[after].callback;
    for (const auto& t : existing.conversions) {
      bool dup = false;
      for (const auto& m : moved.conversions) {
        if (m.var == t.var && !(m == t)) return fail("conflicting conversions for '" + t.var + "'");
        dup |= m == t;
      }
      if (!dup) moved.conversions.push_back(t);
    }
    body.insert(body.end(), existing.body.begin(), existing.body.end());
  }
  moved.body = std::move(body);

  parent.decls.insert(parent.decls.end(), buffers.begin(), buffers.end());
  loop.decls.insert(loop.decls.end(), pushes.begin(), pushes.end());
  loop.body.clear();
  if (after >= 0)
    parent.body[after].callback = std::move(moved);
  else
    parent.body.push_back(slc::item(std::move(moved)));
  return true;
}

}  // namespace ember::passes
