#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "bhcsum/text.hpp"

namespace bhcsum {

// Clinical shorthand that ends in a period without ending the sentence.
// Compared lowercased, internal dots kept ("b.i.d" matches "b.i.d.").
inline const std::unordered_set<std::string>& abbreviation_blocklist() {
    static const std::unordered_set<std::string> kAbbrev = {
        "dr",  "drs",  "mr",    "mrs",   "ms",    "prof", "st",    "vs",
        "etc", "e.g",  "i.e",   "b.i.d", "t.i.d", "q.i.d", "q.d",  "q.h.s",
        "p.r.n", "i.v", "p.o",  "i.m",   "s.c",   "approx", "no",  "pt",
    };
    return kAbbrev;
}

namespace detail {

// The token immediately before a period candidate: maximal run of letters
// and dots ending right before `pos`.
inline std::string word_before(std::string_view text, std::size_t pos) {
    std::size_t b = pos;
    while (b > 0) {
        const unsigned char c = static_cast<unsigned char>(text[b - 1]);
        if (std::isalpha(c) || c == '.') {
            --b;
        } else {
            break;
        }
    }
    return std::string(text.substr(b, pos - b));
}

inline bool splits_sentence(std::string_view text, std::size_t i) {
    const char c = text[i];
    // Look ahead: terminal punctuation must be followed by whitespace and
    // then an uppercase letter, digit, or end of text.
    std::size_t j = i + 1;
    while (j < text.size() && text[j] == c) ++j;  // swallow "..." / "?!"
    if (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) return false;
    std::size_t k = j;
    while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k])) && text[k] != '\n') ++k;
    if (k < text.size() && text[k] != '\n') {
        const unsigned char next = static_cast<unsigned char>(text[k]);
        if (!std::isupper(next) && !std::isdigit(next)) return false;
    }
    if (c != '.') return true;
    const std::string before = to_lower(word_before(text, i));
    if (before.size() == 1) return false;  // initials: "J."
    if (abbreviation_blocklist().count(before)) return false;
    return true;
}

}  // namespace detail

// Rule-based sentence segmentation: terminal punctuation with an
// abbreviation blocklist; newlines are hard boundaries. Never emits a
// whitespace-only sentence; text without terminal punctuation comes back
// as a single sentence.
inline std::vector<std::string> segment(std::string_view text) {
    std::vector<std::string> sentences;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
        std::string s = trim(text.substr(start, end - start));
        if (!s.empty()) sentences.push_back(std::move(s));
        start = end;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\n') {
            flush(i);
            start = i + 1;
            continue;
        }
        if (c == '.' || c == '!' || c == '?') {
            if (detail::splits_sentence(text, i)) {
                std::size_t j = i + 1;
                while (j < text.size() && text[j] == c) ++j;
                flush(j);
                i = j - 1;
            }
        }
    }
    flush(text.size());
    return sentences;
}

}  // namespace bhcsum
