#include "ember/common/lexer.hpp"

#include <cctype>
#include <charconv>

namespace ember {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

constexpr std::string_view kTwoChar[] = {"+=", "++", "--", "-=", "==", "!=", "<-", "<=", ">="};

}  // namespace

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.loc = {line, col};
    std::size_t start = i;
    if (ident_start(c)) {
      while (i < src.size() && ident_char(src[i])) advance(1);
      t.kind = TokKind::Ident;
      t.text = std::string(src.substr(start, i - start));
      // A trailing dot is never part of a name.
      while (!t.text.empty() && t.text.back() == '.') {
        t.text.pop_back();
        --i;
        --col;
      }
    } else if (digit(c)) {
      bool is_float = false;
      while (i < src.size() && digit(src[i])) advance(1);
      if (i + 1 < src.size() && src[i] == '.' && digit(src[i + 1])) {
        is_float = true;
        advance(1);
        while (i < src.size() && digit(src[i])) advance(1);
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && digit(src[j])) {
          is_float = true;
          advance(j - i);
          while (i < src.size() && digit(src[i])) advance(1);
        }
      }
      t.kind = is_float ? TokKind::Float : TokKind::Int;
      t.text = std::string(src.substr(start, i - start));
    } else if (c == '\'') {
      std::size_t close = src.find('\'', i + 1);
      if (close == std::string_view::npos) throw ParseError(t.loc, "unterminated quote");
      t.kind = TokKind::Quoted;
      t.text = std::string(src.substr(i + 1, close - i - 1));
      advance(close - i + 1);
    } else {
      t.kind = TokKind::Punct;
      std::size_t len = 1;
      for (auto two : kTwoChar)
        if (src.substr(i, 2) == two) len = 2;
      t.text = std::string(src.substr(i, len));
      if (std::string_view("(){}[]<>,;:=+-*/%.?&!|$").find(c) == std::string_view::npos)
        throw ParseError(t.loc, std::string("unexpected character '") + c + "'");
      advance(len);
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = TokKind::End;
  end.loc = {line, col};
  out.push_back(end);
  return out;
}

const Token& TokenStream::peek(std::size_t k) const {
  std::size_t p = pos_ + k;
  return p < toks_.size() ? toks_[p] : toks_.back();
}

Token TokenStream::next() {
  Token t = peek();
  if (pos_ < toks_.size() - 1) ++pos_;
  return t;
}

bool TokenStream::is(std::string_view text, std::size_t k) const {
  const Token& t = peek(k);
  return (t.kind == TokKind::Punct || t.kind == TokKind::Ident) && t.text == text;
}

bool TokenStream::accept(std::string_view text) {
  if (!is(text)) return false;
  next();
  return true;
}

void TokenStream::expect(std::string_view text) {
  if (!accept(text)) {
    const Token& t = peek();
    fail("expected '" + std::string(text) + "', found " + (t.kind == TokKind::End ? "end of input" : "'" + t.text + "'"));
  }
}

std::string TokenStream::ident() {
  if (peek().kind != TokKind::Ident) fail("expected identifier, found '" + peek().text + "'");
  return next().text;
}

std::uint64_t TokenStream::uint_literal() {
  const Token& t = peek();
  if (t.kind != TokKind::Int) fail("expected unsigned integer, found '" + t.text + "'");
  std::uint64_t v = 0;
  auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (res.ec != std::errc()) fail("integer literal out of range");
  next();
  return v;
}

void TokenStream::fail(const std::string& message) const { throw ParseError(peek().loc, message); }

void TokenStream::fail_at(SourceLoc loc, const std::string& message) const { throw ParseError(loc, message); }

std::pair<std::string, std::string> split_dot(const std::string& s) {
  auto p = s.find('.');
  if (p == std::string::npos) return {s, ""};
  return {s.substr(0, p), s.substr(p + 1)};
}

}  // namespace ember
