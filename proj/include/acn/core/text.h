#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace acn::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Lowercase, trim, collapse whitespace runs to one space.
std::string normalize(std::string_view s);

/// Lowercased alphanumeric runs (ASCII); non-ASCII bytes are kept inside tokens.
std::vector<std::string> tokenize(std::string_view s);

std::uint64_t fnv1a(std::string_view s);

/// Replaces every `{NAME}` occurrence of each key.
std::string fill_slots(std::string tmpl, const std::vector<std::pair<std::string, std::string>>& slots);

/// Largest prefix boundary <= pos that does not split a UTF-8 sequence.
std::size_t utf8_floor(std::string_view s, std::size_t pos);

/// First sentence: text up to and including the first '.', '!' or '?' that is
/// followed by whitespace or the end, or the first line if that comes sooner.
std::string first_sentence(std::string_view s);

bool contains(std::string_view hay, std::string_view needle);

}  // namespace acn::text
