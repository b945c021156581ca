// Memory images: named row-major buffers plus index scalars.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "ember/common/signature.hpp"
#include "ember/common/types.hpp"

namespace ember {

struct Buffer {
  Elem elem = Elem::F32;
  std::vector<std::uint64_t> shape;
  std::vector<Bits> data;

  std::uint64_t size() const { return data.size(); }
  bool operator==(const Buffer&) const = default;
};

struct Memory {
  std::map<std::string, Buffer> buffers;
  std::map<std::string, Bits> scalars;

  bool operator==(const Memory&) const = default;
  Buffer& buffer(const std::string& name);
  const Buffer& buffer(const std::string& name) const;
  Bits scalar(const std::string& name) const;
};

Buffer make_buffer(Elem e, std::vector<std::uint64_t> shape);

/// Row-major offset of `indices` into `b`; throws BoundsError naming the
/// buffer, the indices and `context` (e.g. the active loop variables).
std::uint64_t flat_offset(const Buffer& b, const std::string& name, const std::vector<std::uint64_t>& indices,
                          const std::string& context = "");

/// Checks that `mem` binds every parameter of `sig` with a consistent shape
/// (static and named dimensions must match). Throws ConfigError.
void check_memory(const Signature& sig, const Memory& mem);

/// Human-readable dump of one buffer's values (used by diagnostics).
std::string format_value(Elem e, Bits v);

}  // namespace ember
