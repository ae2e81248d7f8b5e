#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace refinery {

/// True for code points with the Unicode White_Space property.
bool is_unicode_space(char32_t cp) noexcept;

/// True if `bytes` is well-formed UTF-8 (no overlongs, surrogates or values past U+10FFFF).
bool is_valid_utf8(std::string_view bytes) noexcept;

/// Decodes one code point starting at `pos` and advances `pos`. Input must be valid UTF-8.
char32_t next_code_point(std::string_view text, std::size_t& pos) noexcept;

void append_utf8(std::string& out, char32_t cp);

/// Strips leading and trailing Unicode whitespace.
std::string_view trim(std::string_view text) noexcept;

/// Maximal runs of non-whitespace code points.
std::vector<std::string_view> whitespace_tokens(std::string_view text);

std::size_t count_whitespace_tokens(std::string_view text) noexcept;

/// Unicode default lowercasing of a UTF-8 string.
std::string to_lower(std::string_view text);

/// Token counting policy. The whitespace tokenizer is the default; other
/// tokenizers (subword models) plug in through this interface.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::size_t count_tokens(std::string_view text) const = 0;
};

class WhitespaceTokenizer final : public Tokenizer {
public:
    std::size_t count_tokens(std::string_view text) const override {
        return count_whitespace_tokens(text);
    }
};

/// 64-bit FNV-1a finished with the splitmix64 avalanche step.
std::uint64_t hash_bytes(std::string_view bytes) noexcept;

/// splitmix64 finalizer; a bijection on 64-bit integers.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

}  // namespace refinery
