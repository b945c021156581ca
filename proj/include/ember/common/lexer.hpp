// Tokenizer shared by the SCF, SLC and DLC text formats.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ember/common/error.hpp"

namespace ember {

enum class TokKind { Ident, Int, Float, Punct, Quoted, End };

/// Identifiers may contain dots (`slc.for`, `b_tr.ite`); the parsers split
/// them where needed.
struct Token {
  TokKind kind = TokKind::End;
  std::string text;
  SourceLoc loc;
};

std::vector<Token> tokenize(std::string_view src);

class TokenStream {
 public:
  explicit TokenStream(std::string_view src) : toks_(tokenize(src)) {}

  const Token& peek(std::size_t k = 0) const;
  Token next();
  bool at_end() const { return peek().kind == TokKind::End; }
  std::size_t mark() const { return pos_; }
  void reset(std::size_t m) { pos_ = m; }

  /// True if the next token is punctuation or identifier `text`.
  bool is(std::string_view text, std::size_t k = 0) const;
  bool accept(std::string_view text);
  void expect(std::string_view text);
  std::string ident();
  std::uint64_t uint_literal();
  [[noreturn]] void fail(const std::string& message) const;
  [[noreturn]] void fail_at(SourceLoc loc, const std::string& message) const;

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

/// Splits "a.b.c" into {"a", "b.c"} at the first dot.
std::pair<std::string, std::string> split_dot(const std::string& s);

}  // namespace ember
