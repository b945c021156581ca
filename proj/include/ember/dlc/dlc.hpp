// Decoupled lookup-compute IR: an access program of traversal units, streams
// and marshal ops, and an execute program dispatching on control tokens.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ember/common/signature.hpp"
#include "ember/ir/ir.hpp"
#include "ember/slc/slc.hpp"

namespace ember::dlc {

enum class Event : std::uint8_t { Beg = 0, Ite = 1, End = 2 };
const char* event_name(Event e);

inline constexpr std::uint8_t kDoneToken = 255;
inline constexpr std::uint8_t kEntryToken = 254;
inline std::uint8_t token_of(int unit, Event e) { return static_cast<std::uint8_t>(unit * 3 + static_cast<int>(e)); }

/// Stream operands reuse the SLC operand; `u.ite` and `u.msk` name a unit's
/// induction and mask streams.
using Operand = slc::Operand;

/// `loop_tr(lb, ub, stride)`, vector when `vlen` > 0. Units are numbered in
/// nesting order, so the token of an event is `id * 3 + event`.
struct Unit {
  std::string name;
  int parent = -1;
  int vlen = 0;
  Operand lower, upper;
  std::uint64_t stride = 1;
  bool operator==(const Unit&) const = default;
};

/// Evaluated on every iteration of its unit, in declaration order.
struct Stream {
  enum Kind { Mem, Alu } kind = Mem;
  std::string name;
  int unit = 0;
  std::string memref;             // Mem
  std::vector<Operand> indices;   // Mem: one flat index unless a dimension is dynamic
  std::string mask;               // Mem, vector only
  int width = 0;                  // 0 scalar, V lanes
  std::optional<slc::Hint> hint;  // Mem
  BinOp op = BinOp::Add;          // Alu
  Operand lhs, rhs;               // Alu
  bool operator==(const Stream&) const = default;
};

/// Runs on an event of its unit. Pushes following a trigger at the same event
/// carry that callback's operands (the token goes first). Iteration pushes on
/// a unit without an iteration callback are buffered chunks drained by the
/// unit's end callback, whose token is emitted when the unit begins.
struct Marshal {
  enum Kind { Push, Trigger, Store } kind = Push;
  int unit = 0;  // -1: function entry (Trigger only)
  Event event = Event::Ite;
  Operand source;    // Push/Store: stream
  int lane = -1;     // Push: push one lane of a vector stream
  int pad = 0;       // Push: widen a scalar to `pad` lanes (lane 0 holds it)
  Event label = Event::Ite;  // Trigger: event named by the token
  std::string memref;            // Store
  std::vector<Operand> indices;  // Store
  std::string mask;              // Store
  int width = 0;                 // Store
  bool operator==(const Marshal&) const = default;

  std::uint8_t token() const { return unit < 0 ? kEntryToken : token_of(unit, label); }
};

struct Access {
  std::vector<Unit> units;
  std::vector<Stream> streams;
  std::vector<Marshal> marshals;
};

/// Execute-local counter kept across arms (elided induction variables).
struct Local {
  std::string name;
  Operand init;  // literal or scalar parameter
  bool operator==(const Local&) const = default;
};

/// Pops appear only as the whole value of a top-level `let` or as drain
/// sources (one chunk per drain step).
struct Arm {
  std::uint8_t token = 0;
  ir::Block body;
};

struct Execute {
  std::vector<Local> locals;
  std::vector<Arm> arms;
};

struct Program {
  Signature sig;
  Access access;
  Execute execute;
};

/// `b_tr.ite`-style names.
std::string ite_name(const Unit& u);
std::string mask_name(const Unit& u);
/// Readable token name, e.g. `e_tr.end`, `entry`, `done`.
std::string token_name(const Program& p, std::uint8_t token);

/// Lowers a verified SLC function. Throws VerifyError when the input is not
/// lowerable (e.g. carried variables below the outermost loop) or when the
/// result fails verify_dlc (a lowering bug).
Program lower_slc_to_dlc(const slc::Function& fn);

/// Push/pop conformance per token, stream scoping, memref disjointness.
Diagnostics verify_dlc(const Program& p);

/// Resolves literal types in the arms (as parse does); records type errors
/// in `diags`, or throws ParseError when it is null.
void check_arm_types(Program& p, Diagnostics* diags);

std::string print_dlc(const Program& p);
Program parse_dlc(std::string_view text);
bool equal(const Program& a, const Program& b);

/// Slot type pushed by `m` given the program's stream types.
ir::Type push_type(const Program& p, const Marshal& m);
/// Element type and width of a stream or `u.ite` / `u.msk` reference.
std::optional<ir::Type> operand_type(const Program& p, const Operand& o);

}  // namespace ember::dlc
