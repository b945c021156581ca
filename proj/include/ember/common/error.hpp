// Exception hierarchy and diagnostics.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ember {

struct SourceLoc {
  int line = 0;
  int col = 0;
};

/// One verifier finding. `path` names the offending node, e.g.
/// "for s_b/for s_p/callback(after)/stmt 2".
struct Diagnostic {
  std::string path;
  std::string message;
};

using Diagnostics = std::vector<Diagnostic>;

std::string format_diagnostics(const Diagnostics& diags);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(SourceLoc loc, const std::string& message);
  SourceLoc loc() const { return loc_; }

 private:
  SourceLoc loc_;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class ArithmeticError : public Error {
 public:
  using Error::Error;
};

class DeadlockError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Thrown when a stage receives input its contract rejects; carries every
/// diagnostic the stage produced.
class VerifyError : public Error {
 public:
  VerifyError(std::string stage, Diagnostics diags);
  const Diagnostics& diagnostics() const { return diags_; }
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
  Diagnostics diags_;
};

}  // namespace ember
