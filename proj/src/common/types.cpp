#include "ember/common/types.hpp"

#include <charconv>
#include <cmath>

#include "ember/common/error.hpp"

namespace ember {

std::string_view elem_name(Elem e) {
  switch (e) {
    case Elem::Index: return "idx";
    case Elem::I32: return "i32";
    case Elem::F32: return "f32";
    case Elem::I1: return "i1";
  }
  return "?";
}

std::optional<Elem> parse_elem(std::string_view text) {
  if (text == "idx" || text == "index") return Elem::Index;
  if (text == "i32") return Elem::I32;
  if (text == "f32") return Elem::F32;
  if (text == "i1") return Elem::I1;
  return std::nullopt;
}

char bin_op_symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return '+';
    case BinOp::Sub: return '-';
    case BinOp::Mul: return '*';
    case BinOp::Div: return '/';
    case BinOp::Rem: return '%';
  }
  return '?';
}

std::optional<BinOp> parse_bin_op(char c) {
  switch (c) {
    case '+': return BinOp::Add;
    case '-': return BinOp::Sub;
    case '*': return BinOp::Mul;
    case '/': return BinOp::Div;
    case '%': return BinOp::Rem;
    default: return std::nullopt;
  }
}

int bin_op_precedence(BinOp op) {
  return (op == BinOp::Add || op == BinOp::Sub) ? 1 : 2;
}

namespace {

template <typename T>
T int_op(BinOp op, T a, T b) {
  switch (op) {
    case BinOp::Add: return static_cast<T>(a + b);
    case BinOp::Sub: return static_cast<T>(a - b);
    case BinOp::Mul: return static_cast<T>(a * b);
    case BinOp::Div:
      if (b == 0) throw ArithmeticError("integer division by zero");
      return static_cast<T>(a / b);
    case BinOp::Rem:
      if (b == 0) throw ArithmeticError("integer remainder by zero");
      return static_cast<T>(a % b);
  }
  return T{};
}

}  // namespace

Bits apply_binary(BinOp op, Elem e, Bits lhs, Bits rhs) {
  switch (e) {
    case Elem::Index:
      return int_op<std::uint64_t>(op, lhs, rhs);
    case Elem::I32: {
      // Wrapping arithmetic in uint32 avoids signed-overflow UB.
      std::int32_t a = to_i32(lhs), b = to_i32(rhs);
      if (op == BinOp::Div || op == BinOp::Rem) {
        if (b == 0) throw ArithmeticError("integer division by zero");
        if (a == INT32_MIN && b == -1) return from_i32(op == BinOp::Div ? INT32_MIN : 0);
        return from_i32(op == BinOp::Div ? a / b : a % b);
      }
      auto r = int_op<std::uint32_t>(op, static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
      return from_i32(static_cast<std::int32_t>(r));
    }
    case Elem::F32: {
      float a = to_f32(lhs), b = to_f32(rhs);
      switch (op) {
        case BinOp::Add: return from_f32(a + b);
        case BinOp::Sub: return from_f32(a - b);
        case BinOp::Mul: return from_f32(a * b);
        case BinOp::Div: return from_f32(a / b);
        case BinOp::Rem: return from_f32(std::fmod(a, b));
      }
      break;
    }
    case Elem::I1:
      switch (op) {
        case BinOp::Mul: return lhs & rhs;
        case BinOp::Add: return (lhs ^ rhs) & 1;
        default: throw ArithmeticError("unsupported mask arithmetic");
      }
  }
  return 0;
}

Bits apply_abs(Elem e, Bits v) {
  switch (e) {
    case Elem::F32: return from_f32(std::fabs(to_f32(v)));
    case Elem::I32: {
      std::int32_t x = to_i32(v);
      return from_i32(x < 0 ? static_cast<std::int32_t>(0u - static_cast<std::uint32_t>(x)) : x);
    }
    default: return v;
  }
}

std::string format_scalar(Elem e, Bits v) {
  switch (e) {
    case Elem::Index: return std::to_string(v);
    case Elem::I32: return std::to_string(to_i32(v));
    case Elem::I1: return v ? "1" : "0";
    case Elem::F32: {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof(buf), to_f32(v));
      std::string s(buf, res.ptr);
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      return s;
    }
  }
  return "?";
}

}  // namespace ember
