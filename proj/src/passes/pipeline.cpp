#include "ember/passes/passes.hpp"
#include "util.hpp"

namespace ember::passes {

PassConfig PassConfig::for_opt(int opt, int vlen) {
  PassConfig c;
  c.opt = opt;
  c.vlen = vlen;
  c.vectorize = opt >= 1;
  c.bufferize = opt >= 2;
  c.align = opt >= 3;
  return c;
}

void PassConfig::validate() const {
  if (opt < 0 || opt > 3) throw ConfigError("optimization level must be 0..3, got " + std::to_string(opt));
  if (vlen < 1 || (vlen & (vlen - 1))) throw ConfigError("vector length must be a power of two, got " + std::to_string(vlen));
  if (bufferize && !vectorize) throw ConfigError("bufferization requires vectorization");
  if (align && !bufferize) throw ConfigError("queue alignment requires bufferization");
}

bool apply_stream_hints(slc::Function& fn, const std::map<std::string, slc::Hint>& hints) {
  bool changed = false;
  for (slc::Loop* l : loop_chain(fn)) {
    for (auto& d : l->decls) {
      if (d.kind != slc::StreamDecl::Load) continue;
      auto it = hints.find(d.memref);
      if (it == hints.end() || d.hint == it->second) continue;
      d.hint = it->second;
      changed = true;
    }
  }
  return changed;
}

slc::Function run_passes(slc::Function fn, const PassConfig& cfg, Diagnostics& diags,
                         const std::function<void(const std::string&, const slc::Function&)>& after) {
  cfg.validate();
  auto step = [&](const char* name, bool enabled, auto&& pass) {
    if (!enabled) return;
    pass();
    if (after) after(name, fn);
  };
  step("store-streams", cfg.store_streams, [&] { store_streams(fn, diags); });
  step("vectorize", cfg.vectorize, [&] { vectorize(fn, cfg.vlen, diags); });
  step("bufferize", cfg.bufferize, [&] { bufferize(fn, diags); });
  step("align", cfg.align, [&] { align_queues(fn, diags); });
  step("hints", !cfg.hints.empty(), [&] { apply_stream_hints(fn, cfg.hints); });
  return fn;
}

}  // namespace ember::passes
