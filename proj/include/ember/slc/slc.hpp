// Streaming loop IR: loop nests whose bounds and address computations are
// streams, with the remaining compute held in callbacks that convert stream
// elements to values with `to_val`.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ember/common/memory.hpp"
#include "ember/common/signature.hpp"
#include "ember/ir/ir.hpp"

namespace ember::slc {

/// Deep-copying owning pointer, so that copies of a function are independent.
template <typename T>
class Box {
 public:
  Box() = default;
  Box(T v) : p_(std::make_unique<T>(std::move(v))) {}
  Box(const Box& o) : p_(o.p_ ? std::make_unique<T>(*o.p_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& o) {
    p_ = o.p_ ? std::make_unique<T>(*o.p_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;
  explicit operator bool() const { return p_ != nullptr; }
  T& operator*() const { return *p_; }
  T* operator->() const { return p_.get(); }
  T* get() const { return p_.get(); }

 private:
  std::unique_ptr<T> p_;
};

struct Operand {
  enum Kind { Stream, Var, Lit } kind = Lit;
  std::string name;
  Bits value = 0;

  static Operand stream(std::string n) { return {Stream, std::move(n), 0}; }
  static Operand var(std::string n) { return {Var, std::move(n), 0}; }
  static Operand lit(Bits v) { return {Lit, "", v}; }
  bool operator==(const Operand&) const = default;
};

enum class CacheLevel { L1, L2, LLC };
const char* level_name(CacheLevel l);

struct Hint {
  CacheLevel level = CacheLevel::L2;
  bool temporal = true;
  bool operator==(const Hint&) const = default;
};

struct StreamDecl {
  enum Kind {
    Load,    // name = memref[indices] (masked when vector)
    Alu,     // name = lhs op rhs
    Buffer,  // name = empty buffer of `width`-lane `elem` chunks
    Push,    // append stream `source` to buffer `name`
    Store,   // memref[indices] = source (masked when vector)
  } kind = Load;
  std::string name;
  std::string memref;
  std::vector<Operand> indices;
  std::string mask;
  std::optional<Hint> hint;
  int width = 0;  // 0: scalar stream; V: V-lane stream or buffer chunk width
  BinOp op = BinOp::Add;
  Operand lhs, rhs;
  Elem elem = Elem::F32;  // Buffer
  std::string source;     // Push / Store
};

/// `var = to_val(stream)`; `lane` extracts one lane of a vector stream and
/// `pad` widens a scalar stream's transfer to `pad` lanes.
struct ToVal {
  std::string var;
  ir::Type type;
  std::string stream;
  int lane = -1;
  int pad = 0;
  bool operator==(const ToVal&) const = default;
};

struct Callback {
  bool vector = false;  // printed as slcv.callback
  std::vector<ToVal> conversions;
  ir::Block body;
};

/// Loop-carried index variable, initialized when its loop starts and visible
/// to every callback in the loop's subtree.
struct Carried {
  std::string name;
  Operand init;
  bool operator==(const Carried&) const = default;
};

struct Loop;

/// A body entry is either a nested loop or a callback.
struct BodyItem {
  Box<Loop> loop;
  Callback callback;
  bool is_loop() const { return static_cast<bool>(loop); }
};

struct Loop {
  std::string induction;  // stream of induction values
  std::string mask;       // vector loops only
  int vlen = 0;           // 0: scalar slc.for; V: slcv.for<V>
  Operand lower, upper;
  std::uint64_t stride = 1;
  std::vector<Carried> carried;
  std::vector<StreamDecl> decls;
  std::vector<BodyItem> body;

  /// The nested loop, if any.
  Loop* child() const;
};

struct Function {
  Signature sig;
  std::vector<BodyItem> body;
};

BodyItem item(Loop l);
BodyItem item(Callback c);

/// When a callback fires relative to its owner loop's iteration.
enum class Trigger { Entry, Begin, Iteration, End };

struct CallbackSite {
  Loop* owner = nullptr;        // nullptr: function level
  Loop* event_loop = nullptr;   // loop whose event fires it
  Trigger trigger = Trigger::Iteration;
  Callback* callback = nullptr;
  std::string path;
  std::vector<Loop*> ancestors;  // outermost first, including owner
};

/// Every callback in program order with its firing event: before the nested
/// loop it fires on that loop's begin, after it on its end, and with no nested
/// loop on every iteration of the owner.
std::vector<CallbackSite> callback_sites(Function& fn);

std::string print_slc(const Function& fn);
Function parse_slc(std::string_view text);
bool equal(const Function& a, const Function& b);

/// Structural and typing rules; empty result means well formed.
Diagnostics verify_slc(const Function& fn);

/// Type of a stream declared or bound in `fn`, for passes and lowering.
struct StreamInfo {
  ir::Type type;
  const Loop* owner = nullptr;  // loop that declares or induces it
};
std::map<std::string, StreamInfo> stream_types(const Function& fn);

struct SlcRun {
  Memory memory;
  std::map<std::string, std::uint64_t> callback_invocations;  // by site path
  std::uint64_t total_callbacks = 0;
  std::uint64_t store_stream_writes = 0;
};

/// Reference semantics: loops run in order, streams evaluate per iteration
/// and callbacks fire at their trigger.
SlcRun interpret_slc(const Function& fn, const Memory& inputs);

}  // namespace ember::slc
