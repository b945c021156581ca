// Element types and scalar arithmetic shared by every IR level.
#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ember {

/// Element type of a scalar, a vector lane or a memory buffer.
///
/// `I1` only appears in vector masks; the input language never names it.
enum class Elem : std::uint8_t { Index, I32, F32, I1 };

/// Raw lane storage. Index values are stored as uint64, i32 values are
/// sign-extended, f32 values keep their IEEE bit pattern in the low 32 bits
/// and i1 lanes are 0 or 1.
using Bits = std::uint64_t;

enum class BinOp : std::uint8_t { Add, Sub, Mul, Div, Rem };

std::string_view elem_name(Elem e);
std::optional<Elem> parse_elem(std::string_view text);
inline bool is_integer(Elem e) { return e == Elem::Index || e == Elem::I32; }

char bin_op_symbol(BinOp op);
std::optional<BinOp> parse_bin_op(char c);
int bin_op_precedence(BinOp op);

inline Bits from_f32(float f) { return std::bit_cast<std::uint32_t>(f); }
inline float to_f32(Bits b) { return std::bit_cast<float>(static_cast<std::uint32_t>(b)); }
inline Bits from_i32(std::int32_t v) { return static_cast<Bits>(static_cast<std::int64_t>(v)); }
inline std::int32_t to_i32(Bits b) { return static_cast<std::int32_t>(static_cast<std::uint32_t>(b)); }

/// Applies `op` to two lanes of type `e`. Integer division truncates toward
/// zero and the remainder takes the sign of the dividend. Throws
/// ArithmeticError on integer division by zero.
Bits apply_binary(BinOp op, Elem e, Bits lhs, Bits rhs);
Bits apply_abs(Elem e, Bits v);

/// Literal spelling that parses back to the identical bit pattern.
std::string format_scalar(Elem e, Bits v);

}  // namespace ember
