#include "ember/vm/vm.hpp"

#include <array>
#include <coroutine>
#include <deque>
#include <exception>
#include <random>
#include <utility>

#include "ember/ir/eval.hpp"

namespace ember::vm {

void VmConfig::check() const {
  if (ctrl_capacity == 0) throw ConfigError("control queue capacity must be at least 1");
  if (data_capacity == 0) throw ConfigError("data queue capacity must be at least 1");
  if (cache.enabled) cache.check();
}

namespace {

using ir::Value;

// What a suspended engine needs before it can take its next step.
enum class Wait : std::uint8_t { Start, CtrlSpace, DataSpace, CtrlItem, DataItem };

const char* wait_text(Wait w) {
  switch (w) {
    case Wait::Start: return "to start";
    case Wait::CtrlSpace: return "for control queue space";
    case Wait::DataSpace: return "for data queue space";
    case Wait::CtrlItem: return "for a control token";
    case Wait::DataItem: return "for a data slot";
  }
  return "?";
}

// An engine suspends before every queue operation; the scheduler resumes it
// only once that operation can proceed.
class Engine {
 public:
  struct promise_type {
    Wait wait = Wait::Start;
    std::exception_ptr error;
    Engine get_return_object() { return Engine(std::coroutine_handle<promise_type>::from_promise(*this)); }
    std::suspend_always initial_suspend() noexcept { return {}; }
    std::suspend_always final_suspend() noexcept { return {}; }
    std::suspend_always yield_value(Wait w) noexcept {
      wait = w;
      return {};
    }
    void return_void() noexcept {}
    void unhandled_exception() noexcept { error = std::current_exception(); }
  };

  explicit Engine(std::coroutine_handle<promise_type> h) : h_(h) {}
  Engine(Engine&& o) noexcept : h_(std::exchange(o.h_, {})) {}
  Engine(const Engine&) = delete;
  ~Engine() {
    if (h_) h_.destroy();
  }

  bool done() const { return h_.done(); }
  Wait wait() const { return h_.promise().wait; }
  void resume() {
    h_.resume();
    if (h_.promise().error) std::rethrow_exception(h_.promise().error);
  }

 private:
  std::coroutine_handle<promise_type> h_;
};

// Operand resolved once: literal and scalar values are kept inline.
struct Ref {
  enum Kind { Const, Stream, Ite, Msk } kind = Const;
  int index = 0;
  Value value;
};

struct MemAccess {
  std::string memref;
  Buffer* buf = nullptr;
  std::vector<Ref> indices;
  std::optional<Ref> mask;
  int width = 0;
  std::uint64_t base = 0;  // first element address of the memref's region
};

struct RtStream {
  dlc::Stream::Kind kind = dlc::Stream::Mem;
  int unit = 0;
  MemAccess mem;
  std::optional<slc::Hint> hint;
  BinOp op = BinOp::Add;
  Ref lhs, rhs;
  int width = 0;
};

struct RtMarshal {
  dlc::Marshal::Kind kind = dlc::Marshal::Push;
  std::uint8_t token = 0;
  Ref source;
  int lane = -1;
  int pad = 0;
  MemAccess store;
};

struct RtUnit {
  Ref lower, upper;
  std::uint64_t step = 1;
  int vlen = 0;
  std::vector<int> children;
  std::vector<int> streams;
  std::array<std::vector<int>, 3> marshals;  // by event
};

// Queued work of one marshal event: a token or a data slot.
struct Action {
  bool ctrl = false;
  std::uint8_t token = 0;
  Value slot;
};

class Machine {
 public:
  Machine(const dlc::Program& p, const Memory& inputs, const VmConfig& cfg) : p_(p), cfg_(cfg) {
    cfg.check();
    auto diags = dlc::verify_dlc(p);
    if (!diags.empty()) throw VerifyError("dlc", diags);
    check_memory(p.sig, inputs);
    mem_ = inputs;
    if (cfg.cache.enabled) cache_.emplace(cfg.cache);
    compile();
  }

  VmResult run(std::mt19937_64* rng) {
    Engine a = access(), e = execute();
    Engine* eng[2] = {&a, &e};
    int last = 1;
    std::string schedule;
    while (!(a.done() && e.done())) {
      bool ready[2] = {runnable(a), runnable(e)};
      int pick;
      if (ready[0] && ready[1])
        pick = rng ? static_cast<int>((*rng)() & 1) : 1 - last;
      else if (ready[0] || ready[1])
        pick = ready[0] ? 0 : 1;
      else
        throw DeadlockError(deadlock_report(a, e));
      last = pick;
      if (cfg_.record_schedule) schedule.push_back(pick ? 'e' : 'a');
      eng[pick]->resume();
    }
    VmResult r;
    r.memory = std::move(mem_);
    if (cache_) counters_.cache = cache_->stats();
    r.counters = counters_;
    for (int t = 0; t < 256; ++t)
      if (arm_runs_[t]) r.arm_invocations[dlc::token_name(p_, static_cast<std::uint8_t>(t))] = arm_runs_[t];
    r.schedule = std::move(schedule);
    return r;
  }

 private:
  bool runnable(const Engine& e) const {
    if (e.done()) return false;
    switch (e.wait()) {
      case Wait::Start: return true;
      case Wait::CtrlSpace: return ctrl_.size() < cfg_.ctrl_capacity;
      case Wait::DataSpace: return data_.size() < cfg_.data_capacity;
      case Wait::CtrlItem: return !ctrl_.empty();
      case Wait::DataItem: return !data_.empty();
    }
    return false;
  }

  std::string deadlock_report(const Engine& a, const Engine& e) const {
    auto state = [](const Engine& x) { return x.done() ? std::string("finished") : std::string("waits ") + wait_text(x.wait()); };
    return "deadlock: access engine " + state(a) + ", execute engine " + state(e) + "; ctrlQ holds " +
           std::to_string(ctrl_.size()) + "/" + std::to_string(cfg_.ctrl_capacity) + " tokens, dataQ holds " +
           std::to_string(data_.size()) + "/" + std::to_string(cfg_.data_capacity) + " slots";
  }

  // ---- compilation ----

  Ref ref(const dlc::Operand& o) {
    Ref r;
    switch (o.kind) {
      case dlc::Operand::Lit:
        r.value = Value::scalar(Elem::Index, o.value);
        return r;
      case dlc::Operand::Var:
        r.value = Value::scalar(p_.sig.find(o.name)->elem, mem_.scalar(o.name));
        return r;
      case dlc::Operand::Stream: break;
    }
    auto [head, tail] = split_dot(o.name);
    if (tail == "ite" || tail == "msk") {
      for (std::size_t u = 0; u < p_.access.units.size(); ++u)
        if (p_.access.units[u].name == head) {
          r.kind = tail == "ite" ? Ref::Ite : Ref::Msk;
          r.index = static_cast<int>(u);
          return r;
        }
    }
    r.kind = Ref::Stream;
    r.index = stream_index_.at(o.name);
    return r;
  }

  MemAccess mem_access(const std::string& memref, const std::vector<dlc::Operand>& idx, const std::string& mask,
                       int width) {
    MemAccess m;
    m.memref = memref;
    m.buf = &mem_.buffer(memref);
    for (const auto& i : idx) m.indices.push_back(ref(i));
    if (!mask.empty()) m.mask = ref(dlc::Operand::stream(mask));
    m.width = width;
    m.base = region_.at(memref);
    return m;
  }

  void compile() {
    // Each memref gets its own line-aligned address region.
    std::uint64_t next = 0, line = cfg_.cache.line_elems ? cfg_.cache.line_elems : 1;
    for (const auto& n : p_.sig.memrefs()) {
      region_[n] = next;
      next += (mem_.buffer(n).size() + line - 1) / line * line + line;
    }
    const auto& units = p_.access.units;
    units_.resize(units.size());
    ite_.resize(units.size());
    msk_.resize(units.size());
    for (std::size_t u = 0; u < units.size(); ++u) {
      units_[u].vlen = units[u].vlen;
      units_[u].step = units[u].vlen ? units[u].vlen : units[u].stride;
      if (units[u].parent >= 0) units_[units[u].parent].children.push_back(static_cast<int>(u));
      else roots_.push_back(static_cast<int>(u));
    }
    for (std::size_t i = 0; i < p_.access.streams.size(); ++i) stream_index_[p_.access.streams[i].name] = static_cast<int>(i);
    for (std::size_t u = 0; u < units.size(); ++u) {
      units_[u].lower = ref(units[u].lower);
      units_[u].upper = ref(units[u].upper);
    }
    streams_.resize(p_.access.streams.size());
    values_.resize(p_.access.streams.size());
    for (std::size_t i = 0; i < p_.access.streams.size(); ++i) {
      const auto& s = p_.access.streams[i];
      RtStream& r = streams_[i];
      r.kind = s.kind;
      r.unit = s.unit;
      r.width = s.width;
      if (s.kind == dlc::Stream::Mem) {
        r.mem = mem_access(s.memref, s.indices, s.mask, s.width);
        r.hint = s.hint;
      } else {
        r.op = s.op;
        r.lhs = ref(s.lhs);
        r.rhs = ref(s.rhs);
      }
      units_[s.unit].streams.push_back(static_cast<int>(i));
    }
    for (const auto& m : p_.access.marshals) {
      RtMarshal r;
      r.kind = m.kind;
      r.token = m.token();
      if (m.kind != dlc::Marshal::Trigger) r.source = ref(m.source);
      r.lane = m.lane;
      r.pad = m.pad;
      if (m.kind == dlc::Marshal::Store) r.store = mem_access(m.memref, m.indices, m.mask, m.width);
      int id = static_cast<int>(marshals_.size());
      marshals_.push_back(std::move(r));
      if (m.unit < 0) entry_.push_back(id);
      else units_[m.unit].marshals[static_cast<int>(m.event)].push_back(id);
    }
    for (const auto& a : p_.execute.arms) arms_[a.token] = &a;
  }

  // ---- access engine ----

  const Value& val(const Ref& r) const {
    switch (r.kind) {
      case Ref::Const: return r.value;
      case Ref::Stream: return values_[r.index];
      case Ref::Ite: return ite_[r.index];
      case Ref::Msk: return msk_[r.index];
    }
    return r.value;
  }

  std::string loop_state() const {
    std::string s;
    for (int u : active_) {
      if (!s.empty()) s += ", ";
      s += dlc::ite_name(p_.access.units[u]) + "=" + std::to_string(ite_[u].lanes.at(0));
    }
    return s;
  }

  // Element offset of lane `j`, bounds checked per dimension (or against the
  // whole buffer for a flattened index).
  std::uint64_t offset(const MemAccess& m, std::size_t j, std::vector<std::uint64_t>& at) const {
    const Buffer& b = *m.buf;
    at.resize(m.indices.size());
    for (std::size_t k = 0; k < at.size(); ++k) at[k] = ir::lane(val(m.indices[k]), j);
    if (at.size() == 1 && b.shape.size() != 1) {
      if (at[0] >= b.size())
        throw BoundsError("offset " + std::to_string(at[0]) + " is outside '" + m.memref + "' (" +
                          std::to_string(b.size()) + " elements) at " + loop_state());
      return at[0];
    }
    return flat_offset(b, m.memref, at, loop_state());
  }

  bool live(const MemAccess& m, std::size_t j) const { return !m.mask || val(*m.mask).lanes[j] != 0; }

  void eval_stream(int id) {
    const RtStream& s = streams_[id];
    std::size_t lanes = s.width ? s.width : 1;
    Value out;
    if (s.kind == dlc::Stream::Mem) {
      const MemAccess& m = s.mem;
      out.type = s.width ? ir::Type::vector(m.buf->elem, s.width) : ir::Type::scalar(m.buf->elem);
      out.lanes.assign(lanes, 0);
      ++counters_.mem_requests_access;
      lines_.clear();
      for (std::size_t j = 0; j < lanes; ++j) {
        if (!live(m, j)) continue;
        std::uint64_t off = offset(m, j, at_);
        out.lanes[j] = m.buf->data[off];
        if (cache_) {
          cache_->count_elements(1);
          std::uint64_t line = (m.base + off) / cfg_.cache.line_elems;
          if (std::find(lines_.begin(), lines_.end(), line) == lines_.end()) lines_.push_back(line);
        }
      }
      for (auto line : lines_) cache_->access(line, s.hint);
    } else {
      const Value& a = val(s.lhs);
      const Value& b = val(s.rhs);
      out.type = s.width ? ir::Type::vector(a.type.elem, s.width) : ir::Type::scalar(a.type.elem);
      out.lanes.assign(lanes, 0);
      const Value* mask = s.width && units_[s.unit].vlen ? &msk_[s.unit] : nullptr;
      for (std::size_t j = 0; j < lanes; ++j) {
        // Lanes past the unit's bound carry no data and are never read.
        if (mask && !mask->lanes[j]) continue;
        out.lanes[j] = apply_binary(s.op, a.type.elem, ir::lane(a, j), ir::lane(b, j));
      }
    }
    values_[id] = std::move(out);
  }

  void marshal(const std::vector<int>& ids) {
    for (int id : ids) {
      const RtMarshal& m = marshals_[id];
      switch (m.kind) {
        case dlc::Marshal::Trigger:
          actions_.push_back({true, m.token, {}});
          break;
        case dlc::Marshal::Push: {
          const Value& src = val(m.source);
          Value slot;
          if (m.lane >= 0) {
            slot = Value::scalar(src.type.elem, src.lanes.at(m.lane));
          } else if (m.pad) {
            slot.type = ir::Type::vector(src.type.elem, m.pad);
            slot.lanes.assign(m.pad, 0);
            slot.lanes[0] = src.bits();
          } else {
            slot = src;
          }
          actions_.push_back({false, 0, std::move(slot)});
          break;
        }
        case dlc::Marshal::Store: {
          const MemAccess& s = m.store;
          const Value& src = val(m.source);
          std::size_t lanes = s.width ? s.width : 1;
          ++counters_.mem_requests_access;
          for (std::size_t j = 0; j < lanes; ++j) {
            if (!live(s, j)) continue;
            s.buf->data[offset(s, j, at_)] = ir::lane(src, j);
            ++counters_.store_stream_writes;
          }
          break;
        }
      }
    }
  }

  void begin(int u, Bits& lb, Bits& ub) {
    lb = val(units_[u].lower).bits();
    ub = val(units_[u].upper).bits();
    marshal(units_[u].marshals[0]);
  }

  void iterate(int u, Bits i, Bits ub) {
    const RtUnit& ru = units_[u];
    if (ru.vlen) {
      Value ind{ir::Type::vector(Elem::Index, ru.vlen), {}};
      Value msk{ir::Type::vector(Elem::I1, ru.vlen), {}};
      for (int j = 0; j < ru.vlen; ++j) {
        ind.lanes.push_back(i + j);
        msk.lanes.push_back(i + j < ub ? 1 : 0);
      }
      ite_[u] = std::move(ind);
      msk_[u] = std::move(msk);
    } else {
      ite_[u] = Value::scalar(Elem::Index, i);
    }
    for (int s : ru.streams) eval_stream(s);
    marshal(ru.marshals[1]);
  }

  struct Frame {
    int unit;  // -1: the program's top level
    Bits i = 0, lb = 0, ub = 0;
    bool started = false;
    std::size_t next_child = 0;
  };

  Engine access() {
    marshal(entry_);
    std::vector<Frame> stack{{-1}};
    stack.back().next_child = 0;
    for (;;) {
      // Queue whatever the previous step marshalled.
      for (auto& a : actions_) {
        if (a.ctrl) {
          co_yield Wait::CtrlSpace;
          ctrl_.push_back(a.token);
          ++counters_.ctrl_pushes;
        } else {
          co_yield Wait::DataSpace;
          counters_.data_elements += a.slot.lanes.size();
          ++counters_.data_pushes;
          data_.push_back(std::move(a.slot));
        }
      }
      actions_.clear();
      if (stack.empty()) break;

      Frame& f = stack.back();
      const std::vector<int>& kids = f.unit < 0 ? roots_ : units_[f.unit].children;
      bool in_body = f.unit < 0 || f.started;
      if (in_body && f.next_child < kids.size()) {
        Frame c{kids[f.next_child++]};
        begin(c.unit, c.lb, c.ub);
        active_.push_back(c.unit);
        stack.push_back(c);
        continue;
      }
      if (f.unit < 0) {
        stack.pop_back();
        continue;
      }
      Bits step = units_[f.unit].step;
      Bits next = f.started ? f.i + step : f.lb;
      bool more = next < f.ub && !(f.started && next < f.i);  // stop on wrap-around
      if (more) {
        f.i = next;
        f.started = true;
        f.next_child = 0;
        iterate(f.unit, f.i, f.ub);
      } else {
        int u = f.unit;
        stack.pop_back();
        active_.pop_back();
        marshal(units_[u].marshals[2]);
      }
    }
    co_yield Wait::CtrlSpace;
    ctrl_.push_back(dlc::kDoneToken);
    ++counters_.ctrl_pushes;
  }

  // ---- execute engine ----

  Engine execute() {
    ir::Env root;
    for (const auto& n : p_.sig.scalars()) root.define(n, Value::scalar(p_.sig.find(n)->elem, mem_.scalar(n)));
    for (const auto& l : p_.execute.locals) root.define(l.name, Value::scalar(Elem::Index, ref(l.init).value.bits()));
    ir::EvalContext ctx;
    ctx.mem = &mem_;
    ctx.mem_requests = &counters_.mem_requests_execute;
    for (;;) {
      co_yield Wait::CtrlItem;
      std::uint8_t tok = ctrl_.front();
      ctrl_.pop_front();
      ++counters_.ctrl_pops;
      if (tok == dlc::kDoneToken) break;
      const dlc::Arm* arm = arms_[tok];
      if (!arm) throw Error("no execute arm for token " + dlc::token_name(p_, tok));
      ++counters_.callback_invocations;
      ++arm_runs_[tok];
      ir::Env local(&root);
      for (const auto& s : arm->body) {
        if (s.kind == ir::StmtKind::Let && s.value->kind == ir::ExprKind::Pop) {
          co_yield Wait::DataItem;
          Value v = take(s.value->type);
          v.type = s.type;
          local.define(s.name, std::move(v));
          continue;
        }
        bool drains = s.kind == ir::StmtKind::Drain && !s.binds.empty() && s.binds[0].source->kind == ir::ExprKind::Pop;
        if (!drains) {
          ir::exec(s, local, ctx);
          continue;
        }
        Bits lb = ir::eval(*s.lb, local, ctx).bits();
        Bits ub = ir::eval(*s.ub, local, ctx).bits();
        ir::Env inner(&local);
        ctx.loops.emplace_back(s.name, lb);
        for (Bits i = lb; i < ub; i += s.width) {
          ctx.loops.back().second = i;
          inner.clear();
          inner.define(s.name, Value::scalar(Elem::Index, i));
          for (const auto& b : s.binds) {
            co_yield Wait::DataItem;
            inner.define(b.name, take(b.source->type));
          }
          ir::exec(s.body, inner, ctx);
          if (i + s.width < i) break;
        }
        ctx.loops.pop_back();
      }
    }
  }

  Value take(const ir::Type& want) {
    Value v = std::move(data_.front());
    data_.pop_front();
    ++counters_.data_pops;
    counters_.data_elements_popped += v.lanes.size();
    if (!(v.type == want)) throw Error("data queue holds " + ir::type_name(v.type) + " where " + ir::type_name(want) + " is popped");
    return v;
  }

  const dlc::Program& p_;
  VmConfig cfg_;
  Memory mem_;
  Counters counters_;
  std::optional<CacheModel> cache_;
  std::deque<std::uint8_t> ctrl_;
  std::deque<Value> data_;

  std::map<std::string, std::uint64_t> region_;
  std::map<std::string, int> stream_index_;
  std::vector<RtUnit> units_;
  std::vector<int> roots_, entry_;
  std::vector<RtStream> streams_;
  std::vector<RtMarshal> marshals_;
  std::array<const dlc::Arm*, 256> arms_{};
  std::array<std::uint64_t, 256> arm_runs_{};

  std::vector<Value> values_, ite_, msk_;
  std::vector<int> active_;
  std::vector<Action> actions_;
  std::vector<std::uint64_t> at_, lines_;
};

}  // namespace

VmResult run(const dlc::Program& p, const Memory& inputs, const VmConfig& cfg) {
  return Machine(p, inputs, cfg).run(nullptr);
}

VmResult run_interleaved(const dlc::Program& p, const Memory& inputs, const VmConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return Machine(p, inputs, cfg).run(&rng);
}

}  // namespace ember::vm
