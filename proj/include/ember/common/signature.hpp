// Function parameter lists: memrefs with (possibly symbolic) shapes and
// index scalars.
#pragma once

#include <string>
#include <vector>

#include "ember/common/lexer.hpp"
#include "ember/common/types.hpp"

namespace ember {

/// One memref dimension: a literal size, `?` (bound by the input image) or
/// the name of an index scalar parameter.
struct Dim {
  enum Kind { Static, Dynamic, Named } kind = Dynamic;
  std::uint64_t size = 0;
  std::string name;
  bool operator==(const Dim&) const = default;
};

struct Param {
  std::string name;
  bool is_memref = false;
  Elem elem = Elem::Index;
  std::vector<Dim> shape;
  bool operator==(const Param&) const = default;
};

struct Signature {
  std::string name;
  std::vector<Param> params;

  const Param* find(const std::string& n) const;
  std::vector<std::string> memrefs() const;
  std::vector<std::string> scalars() const;
  bool operator==(const Signature&) const = default;
};

std::string print_param(const Param& p);
std::string print_params(const Signature& sig);

/// Parses `(name: mref<D x ... x T>, n: idx, ...)`.
std::vector<Param> parse_params(TokenStream& ts);

}  // namespace ember
