#include "ember/common/memory.hpp"

#include "ember/common/error.hpp"

namespace ember {

Buffer& Memory::buffer(const std::string& name) {
  auto it = buffers.find(name);
  if (it == buffers.end()) throw ConfigError("memref '" + name + "' is not bound");
  return it->second;
}

const Buffer& Memory::buffer(const std::string& name) const {
  auto it = buffers.find(name);
  if (it == buffers.end()) throw ConfigError("memref '" + name + "' is not bound");
  return it->second;
}

Bits Memory::scalar(const std::string& name) const {
  auto it = scalars.find(name);
  if (it == scalars.end()) throw ConfigError("scalar '" + name + "' is not bound");
  return it->second;
}

Buffer make_buffer(Elem e, std::vector<std::uint64_t> shape) {
  Buffer b;
  b.elem = e;
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  b.shape = std::move(shape);
  b.data.assign(n, 0);
  return b;
}

namespace {

std::string index_list(const std::vector<std::uint64_t>& idx) {
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(idx[i]);
  }
  return s;
}

}  // namespace

std::uint64_t flat_offset(const Buffer& b, const std::string& name, const std::vector<std::uint64_t>& indices,
                          const std::string& context) {
  bool ok = indices.size() == b.shape.size();
  std::uint64_t off = 0;
  for (std::size_t i = 0; ok && i < indices.size(); ++i) {
    if (indices[i] >= b.shape[i]) ok = false;
    off = off * b.shape[i] + indices[i];
  }
  if (!ok) {
    std::string shape;
    for (std::size_t i = 0; i < b.shape.size(); ++i) shape += (i ? "x" : "") + std::to_string(b.shape[i]);
    std::string msg = "out-of-bounds access " + name + "[" + index_list(indices) + "] (shape " + shape + ")";
    if (!context.empty()) msg += " at " + context;
    throw BoundsError(msg);
  }
  return off;
}

void check_memory(const Signature& sig, const Memory& mem) {
  for (const auto& p : sig.params) {
    if (!p.is_memref) {
      if (!mem.scalars.count(p.name)) throw ConfigError("missing binding for scalar '" + p.name + "'");
      continue;
    }
    auto it = mem.buffers.find(p.name);
    if (it == mem.buffers.end()) throw ConfigError("missing binding for memref '" + p.name + "'");
    const Buffer& b = it->second;
    if (b.elem != p.elem) throw ConfigError("memref '" + p.name + "' has the wrong element type");
    if (b.shape.size() != p.shape.size())
      throw ConfigError("memref '" + p.name + "' expects rank " + std::to_string(p.shape.size()));
    std::uint64_t n = 1;
    for (std::size_t i = 0; i < p.shape.size(); ++i) {
      const Dim& d = p.shape[i];
      std::uint64_t want = 0;
      bool check = false;
      if (d.kind == Dim::Static) {
        want = d.size;
        check = true;
      } else if (d.kind == Dim::Named) {
        want = mem.scalar(d.name);
        check = true;
      }
      if (check && b.shape[i] != want)
        throw ConfigError("memref '" + p.name + "' dimension " + std::to_string(i) + " is " +
                          std::to_string(b.shape[i]) + ", expected " + std::to_string(want));
      n *= b.shape[i];
    }
    if (n != b.data.size()) throw ConfigError("memref '" + p.name + "' data length does not match its shape");
  }
}

std::string format_value(Elem e, Bits v) { return format_scalar(e, v); }

}  // namespace ember
