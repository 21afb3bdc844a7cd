#include "badx/text.hpp"

#include <cctype>

#include "badx/error.hpp"

namespace badx {

namespace {

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

CharSpan trim_span(std::string_view text, std::size_t begin, std::size_t end) {
  while (begin < end && is_space_byte(static_cast<unsigned char>(text[begin])))
    ++begin;
  while (end > begin &&
         is_space_byte(static_cast<unsigned char>(text[end - 1])))
    --end;
  return {begin, end};
}

}  // namespace

std::vector<WordToken> word_tokens(std::string_view text) {
  std::vector<WordToken> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i])))
      ++i;
    out.push_back({std::string(text.substr(begin, i - begin)), begin, i});
  }
  return out;
}

std::vector<CharSpan> sentence_windows(std::string_view text) {
  std::vector<CharSpan> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_terminator(text[i])) {
      CharSpan span = trim_span(text, start, i + 1);
      if (span.begin < span.end) out.push_back(span);
      start = i + 1;
    }
  }
  CharSpan tail = trim_span(text, start, text.size());
  if (tail.begin < tail.end) out.push_back(tail);
  return out;
}

CharSpan sentence_window_at(std::string_view text, std::size_t pos) {
  if (pos >= text.size())
    throw Error(ErrorKind::SpanOutOfBounds,
                "position " + std::to_string(pos) +
                    " is past the end of a text of " +
                    std::to_string(text.size()) + " bytes");
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_terminator(text[i])) {
      if (pos <= i) return trim_span(text, start, i + 1);
      start = i + 1;
    }
  }
  return trim_span(text, start, text.size());
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool iequals_ascii(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    char x = a[i], y = b[i];
    if (x >= 'A' && x <= 'Z') x = static_cast<char>(x - 'A' + 'a');
    if (y >= 'A' && y <= 'Z') y = static_cast<char>(y - 'A' + 'a');
    if (x != y) return false;
  }
  return true;
}

std::string_view trim_view(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space_byte(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space_byte(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace badx
