#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace badx {

// Half-open byte range into some text.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const CharSpan&) const = default;
  std::size_t size() const noexcept { return end - begin; }
};

struct WordToken {
  std::string text;  // as it appears, original case
  std::size_t begin = 0;
  std::size_t end = 0;
};

// True for bytes that belong to a word: ASCII alphanumerics plus anything
// >= 0x80, so multi-byte UTF-8 sequences stay glued together.
constexpr bool is_word_byte(unsigned char c) noexcept {
  return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') ||
         (c >= 'a' && c <= 'z') || c >= 0x80;
}

// Maximal runs of word bytes, in order of appearance.
std::vector<WordToken> word_tokens(std::string_view text);

// Sentence windows: the text split after '.', '!' or '?', each window
// trimmed of surrounding whitespace. Whitespace-only segments are dropped.
std::vector<CharSpan> sentence_windows(std::string_view text);

// The trimmed window of the sentence containing byte offset pos.
CharSpan sentence_window_at(std::string_view text, std::size_t pos);

std::string to_lower_ascii(std::string_view s);
bool iequals_ascii(std::string_view a, std::string_view b);
std::string_view trim_view(std::string_view s);

}  // namespace badx
