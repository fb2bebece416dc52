#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace funcda {

// ASCII lowercase; bytes outside [A-Z] pass through untouched.
std::string to_lower(std::string_view s);

// Strip leading/trailing ASCII whitespace.
std::string trim(std::string_view s);

// Lowercased, whitespace-trimmed form used for all case-insensitive
// comparisons (dedup keys, name matching).
std::string fold(std::string_view s);

// Canonical key for label-name matching: strips leading/trailing
// punctuation and whitespace, maps '_' and '-' to spaces, collapses
// internal whitespace runs, lowercases. "  Control_magnitude. " and
// "control magnitude" produce the same key.
std::string label_key(std::string_view s);

// Maximal runs of alphanumeric bytes, lowercased.
std::vector<std::string> tokenize(std::string_view s);

}  // namespace funcda
