#include "ember/common/error.hpp"

namespace ember {

std::string format_diagnostics(const Diagnostics& diags) {
  std::string out;
  for (const auto& d : diags) {
    if (!out.empty()) out += '\n';
    out += d.path.empty() ? d.message : d.path + ": " + d.message;
  }
  return out;
}

ParseError::ParseError(SourceLoc loc, const std::string& message)
    : Error(std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " + message), loc_(loc) {}

VerifyError::VerifyError(std::string stage, Diagnostics diags)
    : Error(stage + ": " + format_diagnostics(diags)), stage_(std::move(stage)), diags_(std::move(diags)) {}

}  // namespace ember
