#include "ctfkit/util/text.hpp"

#include <algorithm>
#include <cctype>

namespace ctfkit::util {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= s.size()) {
        size_t nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < s.size()) out.emplace_back(s.substr(start));
            break;
        }
        std::string line(s.substr(start, nl - start));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(std::move(line));
        start = nl + 1;
    }
    return out;
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string> tokenize_alnum(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string replace_all(std::string_view s, std::string_view from, std::string_view to) {
    if (from.empty()) return std::string(s);
    std::string out;
    size_t pos = 0;
    while (true) {
        size_t hit = s.find(from, pos);
        if (hit == std::string_view::npos) {
            out.append(s.substr(pos));
            return out;
        }
        out.append(s.substr(pos, hit - pos));
        out.append(to);
        pos = hit + from.size();
    }
}

std::string replace_number_token(std::string_view s, int from, int to) {
    std::string needle = std::to_string(from);
    std::string repl = std::to_string(to);
    std::string out;
    size_t pos = 0;
    auto is_digit = [&](size_t i) {
        return i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]));
    };
    while (true) {
        size_t hit = s.find(needle, pos);
        if (hit == std::string_view::npos) {
            out.append(s.substr(pos));
            return out;
        }
        bool left_ok = (hit == 0) || !is_digit(hit - 1);
        bool right_ok = !is_digit(hit + needle.size());
        out.append(s.substr(pos, hit - pos));
        if (left_ok && right_ok) {
            out.append(repl);
        } else {
            out.append(needle);
        }
        pos = hit + needle.size();
    }
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

namespace {

bool glob_match_impl(std::string_view p, std::string_view t) {
    size_t pi = 0, ti = 0;
    size_t star_p = std::string_view::npos, star_t = 0;
    while (ti < t.size()) {
        if (pi < p.size() && (p[pi] == '?' || p[pi] == t[ti])) {
            ++pi;
            ++ti;
        } else if (pi < p.size() && p[pi] == '[') {
            size_t close = p.find(']', pi + 1);
            if (close == std::string_view::npos) {
                // Unterminated class: treat '[' literally.
                if (p[pi] != t[ti]) {
                    if (star_p == std::string_view::npos) return false;
                    pi = star_p + 1;
                    ti = ++star_t;
                    continue;
                }
                ++pi;
                ++ti;
                continue;
            }
            std::string_view cls = p.substr(pi + 1, close - pi - 1);
            bool negate = !cls.empty() && (cls[0] == '!' || cls[0] == '^');
            if (negate) cls.remove_prefix(1);
            bool hit = false;
            for (size_t i = 0; i < cls.size(); ++i) {
                if (i + 2 < cls.size() && cls[i + 1] == '-') {
                    if (t[ti] >= cls[i] && t[ti] <= cls[i + 2]) hit = true;
                    i += 2;
                } else if (cls[i] == t[ti]) {
                    hit = true;
                }
            }
            if (hit != negate) {
                pi = close + 1;
                ++ti;
            } else if (star_p != std::string_view::npos) {
                pi = star_p + 1;
                ti = ++star_t;
            } else {
                return false;
            }
        } else if (pi < p.size() && p[pi] == '*') {
            star_p = pi++;
            star_t = ti;
        } else if (star_p != std::string_view::npos) {
            pi = star_p + 1;
            ti = ++star_t;
        } else {
            return false;
        }
    }
    while (pi < p.size() && p[pi] == '*') ++pi;
    return pi == p.size();
}

}  // namespace

bool glob_match(std::string_view pattern, std::string_view text) {
    return glob_match_impl(pattern, text);
}

std::vector<std::string> token_shingles(std::string_view text, size_t n) {
    std::vector<std::string> tokens = tokenize_alnum(text);
    std::vector<std::string> out;
    if (n == 0 || tokens.size() < n) return out;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string sh = tokens[i];
        for (size_t j = 1; j < n; ++j) {
            sh += ' ';
            sh += tokens[i + j];
        }
        out.push_back(std::move(sh));
    }
    return out;
}

}  // namespace ctfkit::util
