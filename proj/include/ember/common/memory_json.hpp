// JSON form of memory images: {name: {"shape": [...], "data": [...]}}.
// Scalars may be written as a bare number or with an empty shape.
#pragma once

#include "json.hpp"

#include "ember/common/memory.hpp"

namespace ember {

/// Binds every parameter of `sig` from `j`, taking element types from the
/// signature. Throws ConfigError on missing or malformed entries.
Memory memory_from_json(const Signature& sig, const nlohmann::json& j);

/// Serializes the named buffers and scalars (everything when `names` is
/// empty); scalars are bare numbers.
nlohmann::json memory_to_json(const Memory& mem, const std::vector<std::string>& names = {});

}  // namespace ember
