#include "cofact/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "cofact/error.hpp"

namespace cofact {
namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

constexpr std::array<std::string_view, 24> kMultiPunct = {
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&",  "||",  "+=",  "-=", "*=", "/=", "%=", "&=", "|=", "^=", "##", "::"};

std::size_t line_number(std::string_view src, std::size_t offset) {
  return static_cast<std::size_t>(std::count(src.begin(), src.begin() + offset, '\n')) + 1;
}

}  // namespace

TokenStream tokenize(std::string_view src) {
  TokenStream out;
  const std::size_t n = src.size();
  std::size_t i = 0;
  bool at_line_start = true;

  while (i < n) {
    const char c = src[i];
    if (c == '\n') {
      at_line_start = true;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      std::size_t j = src.find('\n', i);
      if (j == std::string_view::npos) j = n;
      out.comments.push_back({i, j});
      i = j;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      std::size_t j = src.find("*/", i + 2);
      if (j == std::string_view::npos) {
        throw FrontendError("unterminated block comment at line " +
                            std::to_string(line_number(src, i)));
      }
      out.comments.push_back({i, j + 2});
      i = j + 2;
      continue;
    }
    if (c == '#' && at_line_start) {
      std::size_t j = i;
      while (j < n && src[j] != '\n') {
        if (src[j] == '\\' && j + 1 < n && src[j + 1] == '\n') {
          j += 2;
          continue;
        }
        // A block comment may span lines inside a directive.
        if (src[j] == '/' && j + 1 < n && src[j + 1] == '*') {
          std::size_t k = src.find("*/", j + 2);
          j = k == std::string_view::npos ? n : k + 2;
          continue;
        }
        ++j;
      }
      std::size_t end = j;
      while (end > i && std::isspace(static_cast<unsigned char>(src[end - 1]))) --end;
      out.tokens.push_back({TokenKind::Directive, i, end - i});
      i = j;
      continue;
    }
    at_line_start = false;

    if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < n && ident_char(src[j])) ++j;
      out.tokens.push_back({TokenKind::Identifier, i, j - i});
      i = j;
      continue;
    }
    if (digit(c) || (c == '.' && i + 1 < n && digit(src[i + 1]))) {
      std::size_t j = i + 1;
      while (j < n) {
        char d = src[j];
        if ((d == '+' || d == '-') &&
            (src[j - 1] == 'e' || src[j - 1] == 'E' || src[j - 1] == 'p' || src[j - 1] == 'P')) {
          ++j;
          continue;
        }
        if (ident_char(d) || d == '.') {
          ++j;
          continue;
        }
        break;
      }
      out.tokens.push_back({TokenKind::Number, i, j - i});
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < n && src[j] != c) {
        if (src[j] == '\\') ++j;
        else if (src[j] == '\n') break;
        ++j;
      }
      if (j >= n || src[j] != c) {
        throw FrontendError(std::string("unterminated ") + (c == '"' ? "string" : "character") +
                            " literal at line " + std::to_string(line_number(src, i)));
      }
      out.tokens.push_back({c == '"' ? TokenKind::String : TokenKind::CharLiteral, i, j + 1 - i});
      i = j + 1;
      continue;
    }
    std::size_t len = 1;
    for (auto p : kMultiPunct) {
      if (src.substr(i, p.size()) == p) {
        len = p.size();
        break;
      }
    }
    out.tokens.push_back({TokenKind::Punct, i, len});
    i += len;
  }
  return out;
}

LineIndex::LineIndex(std::string_view source) : size_(source.size()) {
  starts_.push_back(0);
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source[i] == '\n' && i + 1 <= source.size()) starts_.push_back(i + 1);
  }
  // A trailing newline does not open a new (empty) line.
  if (starts_.size() > 1 && starts_.back() == source.size()) starts_.pop_back();
}

std::size_t LineIndex::line_of(std::size_t offset) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
  return static_cast<std::size_t>(it - starts_.begin());
}

std::size_t LineIndex::line_start(std::size_t line) const { return starts_.at(line - 1); }

std::size_t LineIndex::line_end(std::size_t line) const {
  return line < starts_.size() ? starts_[line] : size_;
}

}  // namespace cofact
