#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "cofact/model.hpp"

namespace cofact {

enum class TokenKind { Identifier, Number, String, CharLiteral, Punct, Directive };

struct Token {
  TokenKind kind;
  std::size_t offset;
  std::size_t length;

  std::size_t end() const { return offset + length; }
  std::string_view text(std::string_view source) const { return source.substr(offset, length); }
  bool is(std::string_view source, std::string_view spelling) const {
    return text(source) == spelling;
  }
};

struct TokenStream {
  std::vector<Token> tokens;
  std::vector<SourceSpan> comments;
};

// Splits C source into tokens. Comments are dropped from the token list but
// their spans are kept; a preprocessor directive (with continuation lines)
// becomes a single Directive token. Throws FrontendError on unterminated
// comments or literals.
TokenStream tokenize(std::string_view source);

// Maps byte offsets to 1-based physical line numbers.
class LineIndex {
 public:
  explicit LineIndex(std::string_view source);

  std::size_t line_of(std::size_t offset) const;
  std::size_t line_start(std::size_t line) const;
  // Offset one past the line's '\n' (or the end of the buffer).
  std::size_t line_end(std::size_t line) const;
  std::size_t line_count() const { return starts_.size(); }

 private:
  std::vector<std::size_t> starts_;
  std::size_t size_;
};

}  // namespace cofact
