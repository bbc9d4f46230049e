#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adaptmt {

using Tokens = std::vector<std::string>;

// Splits on ASCII whitespace; runs of whitespace never produce empty tokens.
Tokens tokenize(std::string_view text);

std::string join(const Tokens& tokens, std::string_view sep = " ");

// Byte offset of the first malformed UTF-8 sequence, or nullopt if valid.
std::optional<std::size_t> find_invalid_utf8(std::string_view text);

// Splits a valid UTF-8 string into code points (each as its own string).
std::vector<std::string> utf8_chars(std::string_view text);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 14695981039346656037ULL);

std::string hex64(std::uint64_t value);

}  // namespace adaptmt
