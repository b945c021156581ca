#include "ember/ir/eval.hpp"
#include "ember/slc/slc.hpp"

namespace ember::slc {

namespace {

using ir::Value;

class Interp {
 public:
  Interp(Function& fn, Memory mem) : fn_(fn) {
    run_.memory = std::move(mem);
    ctx_.mem = &run_.memory;
    for (auto& s : callback_sites(fn_)) site_of_[s.callback] = s.path;
  }

  SlcRun run() {
    ir::Env root;
    for (const auto& n : fn_.sig.scalars()) root.define(n, Value::scalar(fn_.sig.find(n)->elem, run_.memory.scalar(n)));
    items(fn_.body, root);
    return std::move(run_);
  }

 private:
  Value operand(const Operand& o) {
    switch (o.kind) {
      case Operand::Lit: return Value::scalar(Elem::Index, o.value);
      case Operand::Var: return Value::scalar(fn_.sig.find(o.name)->elem, run_.memory.scalar(o.name));
      case Operand::Stream: {
        auto it = streams_.find(o.name);
        if (it == streams_.end()) throw Error("stream '" + o.name + "' has no value");
        return it->second;
      }
    }
    return {};
  }

  void items(std::vector<BodyItem>& body, ir::Env& env) {
    for (auto& it : body) {
      if (it.is_loop())
        loop(*it.loop, env);
      else
        callback(it.callback, env);
    }
  }

  void callback(Callback& c, ir::Env& env) {
    ir::Env local(&env);
    for (const auto& t : c.conversions) {
      const Value& s = streams_.at(t.stream);
      Value v;
      if (t.lane >= 0) v = Value::scalar(s.type.elem, s.lanes.at(t.lane));
      else v = s;
      v.type = t.type;
      local.define(t.var, std::move(v));
    }
    ++run_.callback_invocations[site_of_.at(&c)];
    ++run_.total_callbacks;
    ir::exec(c.body, local, ctx_);
  }

  bool live(const std::string& mask, std::size_t j) { return mask.empty() || streams_.at(mask).lanes[j] != 0; }

  void decl(const StreamDecl& d, const Loop& l) {
    std::size_t lanes = d.width ? d.width : 1;
    switch (d.kind) {
      case StreamDecl::Load:
      case StreamDecl::Store: {
        Buffer& b = run_.memory.buffer(d.memref);
        std::vector<Value> idx;
        for (const auto& o : d.indices) idx.push_back(operand(o));
        Value out;
        out.type = d.width ? ir::Type::vector(b.elem, d.width) : ir::Type::scalar(b.elem);
        out.lanes.assign(lanes, 0);
        const Value* src = d.kind == StreamDecl::Store ? &streams_.at(d.source) : nullptr;
        std::vector<std::uint64_t> at(idx.size());
        for (std::size_t j = 0; j < lanes; ++j) {
          if (!live(d.mask, j)) continue;
          for (std::size_t k = 0; k < idx.size(); ++k) at[k] = ir::lane(idx[k], j);
          std::uint64_t off = flat_offset(b, d.memref, at, ctx_.loop_state());
          if (src) {
            b.data[off] = ir::lane(*src, j);
            ++run_.store_stream_writes;
          } else {
            out.lanes[j] = b.data[off];
          }
        }
        if (!src) streams_[d.name] = std::move(out);
        return;
      }
      case StreamDecl::Alu: {
        Value a = operand(d.lhs), c = operand(d.rhs);
        Value out;
        out.type = d.width ? ir::Type::vector(a.type.elem, d.width) : ir::Type::scalar(a.type.elem);
        out.lanes.assign(lanes, 0);
        for (std::size_t j = 0; j < lanes; ++j) {
          // Lanes past the loop bound carry no data and are never read.
          if (d.width && !live(l.mask, j)) continue;
          out.lanes[j] = apply_binary(d.op, a.type.elem, ir::lane(a, j), ir::lane(c, j));
        }
        streams_[d.name] = std::move(out);
        return;
      }
      case StreamDecl::Buffer:
        streams_[d.name] = Value{ir::Type::buf(d.elem, d.width), {}};
        return;
      case StreamDecl::Push: {
        const Value& s = streams_.at(d.source);
        auto& dst = streams_.at(d.name).lanes;
        dst.insert(dst.end(), s.lanes.begin(), s.lanes.end());
        return;
      }
    }
  }

  void loop(Loop& l, ir::Env& env) {
    Bits lb = operand(l.lower).bits(), ub = operand(l.upper).bits();
    ir::Env carried(&env);
    for (const auto& c : l.carried) carried.define(c.name, Value::scalar(Elem::Index, operand(c.init).bits()));
    ctx_.loops.emplace_back(l.induction, lb);
    std::uint64_t step = l.vlen ? l.vlen : l.stride;
    for (Bits i = lb; i < ub; i += step) {
      ctx_.loops.back().second = i;
      if (l.vlen) {
        Value ind{ir::Type::vector(Elem::Index, l.vlen), {}};
        Value msk{ir::Type::vector(Elem::I1, l.vlen), {}};
        for (int j = 0; j < l.vlen; ++j) {
          ind.lanes.push_back(i + j);
          msk.lanes.push_back(i + j < ub ? 1 : 0);
        }
        streams_[l.induction] = std::move(ind);
        streams_[l.mask] = std::move(msk);
      } else {
        streams_[l.induction] = Value::scalar(Elem::Index, i);
      }
      for (const auto& d : l.decls) decl(d, l);
      items(l.body, carried);
      if (i + step < i) break;
    }
    ctx_.loops.pop_back();
  }

  Function& fn_;
  SlcRun run_;
  ir::EvalContext ctx_;
  std::map<std::string, Value> streams_;
  std::map<const Callback*, std::string> site_of_;
};

}  // namespace

SlcRun interpret_slc(const Function& fn, const Memory& inputs) {
  check_memory(fn.sig, inputs);
  Function copy = fn;
  return Interp(copy, inputs).run();
}

}  // namespace ember::slc
