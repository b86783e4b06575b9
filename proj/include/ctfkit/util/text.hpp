#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ctfkit::util {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Splits into lines without the trailing '\n'. A trailing newline does not
// produce an extra empty line.
std::vector<std::string> split_lines(std::string_view s);

std::vector<std::string> split_ws(std::string_view s);

// Lowercased runs of [a-z0-9]; everything else is a separator.
std::vector<std::string> tokenize_alnum(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string replace_all(std::string_view s, std::string_view from, std::string_view to);

// Replaces decimal number tokens equal to `from` with `to`, only where the
// digits are not part of a longer digit run (so 1337 never matches 13370).
std::string replace_number_token(std::string_view s, int from, int to);

bool contains_ci(std::string_view haystack, std::string_view needle);

// fnmatch-style glob: '*' any run, '?' one char, '[...]' char class.
bool glob_match(std::string_view pattern, std::string_view text);

// 12-token (or n-token) shingles; used for quote/paraphrase leak detection.
std::vector<std::string> token_shingles(std::string_view text, size_t n);

}  // namespace ctfkit::util
