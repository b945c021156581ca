#include "ember/common/memory_json.hpp"

#include <algorithm>
#include <cmath>

#include "ember/common/error.hpp"

namespace ember {

namespace {

using nlohmann::json;

Bits bits_from_json(Elem e, const json& v, const std::string& name) {
  if (!v.is_number()) throw ConfigError("non-numeric value in '" + name + "'");
  switch (e) {
    case Elem::F32:
      return from_f32(v.get<float>());
    case Elem::I32:
      if (!v.is_number_integer()) throw ConfigError("non-integer value in '" + name + "'");
      return from_i32(v.get<std::int32_t>());
    default:
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError("index values in '" + name + "' must be non-negative integers");
      return v.get<std::uint64_t>();
  }
}

json bits_to_json(Elem e, Bits b) {
  switch (e) {
    case Elem::F32: {
      float f = to_f32(b);
      if (std::isfinite(f) && f == std::trunc(f) && std::fabs(f) < 1e15f) return json(static_cast<std::int64_t>(f));
      return json(static_cast<double>(f));
    }
    case Elem::I32: return json(to_i32(b));
    default: return json(b);
  }
}

}  // namespace

Memory memory_from_json(const Signature& sig, const json& j) {
  if (!j.is_object()) throw ConfigError("memory image must be a JSON object");
  Memory mem;
  for (const auto& p : sig.params) {
    if (!j.contains(p.name)) throw ConfigError("missing binding for '" + p.name + "'");
    const json& v = j.at(p.name);
    if (!p.is_memref) {
      const json* num = &v;
      if (v.is_object()) {
        if (!v.contains("data") || !v["data"].is_array() || v["data"].size() != 1)
          throw ConfigError("scalar '" + p.name + "' must hold exactly one value");
        num = &v["data"][0];
      }
      mem.scalars[p.name] = bits_from_json(p.elem, *num, p.name);
      continue;
    }
    if (!v.is_object() || !v.contains("shape") || !v.contains("data"))
      throw ConfigError("memref '" + p.name + "' needs \"shape\" and \"data\"");
    Buffer b;
    b.elem = p.elem;
    for (const auto& d : v["shape"]) {
      if (!d.is_number_integer() || d.get<std::int64_t>() < 0)
        throw ConfigError("bad shape entry for '" + p.name + "'");
      b.shape.push_back(d.get<std::uint64_t>());
    }
    for (const auto& x : v["data"]) b.data.push_back(bits_from_json(p.elem, x, p.name));
    mem.buffers[p.name] = std::move(b);
  }
  check_memory(sig, mem);
  return mem;
}

json memory_to_json(const Memory& mem, const std::vector<std::string>& names) {
  json out = json::object();
  for (const auto& [name, b] : mem.buffers) {
    if (!names.empty() && std::find(names.begin(), names.end(), name) == names.end()) continue;
    json data = json::array();
    for (auto x : b.data) data.push_back(bits_to_json(b.elem, x));
    out[name] = {{"shape", b.shape}, {"data", data}};
  }
  for (const auto& [name, v] : mem.scalars)
    if (names.empty() || std::find(names.begin(), names.end(), name) != names.end()) out[name] = v;
  return out;
}

}  // namespace ember
