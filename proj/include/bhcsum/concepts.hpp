#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "bhcsum/errors.hpp"
#include "bhcsum/text.hpp"

namespace bhcsum {

enum class ConceptGroup { problem, intervention };

inline std::string to_string(ConceptGroup g) {
    return g == ConceptGroup::problem ? "problem" : "intervention";
}

// Default semantic-type grouping: disorders, findings, abnormalities,
// organisms and physical objects count as problems; drugs, products,
// procedures and substances as interventions.
inline const std::map<std::string, ConceptGroup>& default_type_groups() {
    static const std::map<std::string, ConceptGroup> kGroups = {
        {"T-11", ConceptGroup::problem},      {"T-18", ConceptGroup::problem},
        {"T-29", ConceptGroup::problem},      {"T-35", ConceptGroup::problem},
        {"T-38", ConceptGroup::problem},      {"T-9", ConceptGroup::intervention},
        {"T-26", ConceptGroup::intervention}, {"T-27", ConceptGroup::intervention},
        {"T-39", ConceptGroup::intervention}, {"T-40", ConceptGroup::intervention},
        {"T-55", ConceptGroup::intervention},
    };
    return kGroups;
}

struct DictionaryEntry {
    std::string concept_id;
    std::string type_id;
};

class ConceptDictionary {
public:
    ConceptDictionary() : type_groups_(default_type_groups()) {}
    explicit ConceptDictionary(std::map<std::string, ConceptGroup> type_groups)
        : type_groups_(std::move(type_groups)) {}

    void add(const std::string& surface, const std::string& concept_id, const std::string& type_id) {
        if (!type_groups_.count(type_id)) {
            throw DataError("concept type id has no group mapping: " + type_id);
        }
        const std::vector<TokenSpan> toks = word_tokens(to_lower(surface));
        if (toks.empty()) throw DataError("dictionary surface has no word tokens: " + surface);
        std::vector<std::string> key;
        key.reserve(toks.size());
        for (const auto& t : toks) key.push_back(t.text);
        entries_[key] = DictionaryEntry{concept_id, type_id};
        max_tokens_ = std::max(max_tokens_, key.size());
    }

    // TSV with columns surface, concept_id, type_id. '#' lines are comments.
    static ConceptDictionary load_tsv(const std::string& path,
                                      std::map<std::string, ConceptGroup> type_groups = default_type_groups()) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open dictionary file: " + path);
        ConceptDictionary dict(std::move(type_groups));
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty() || line[0] == '#') continue;
            std::istringstream ss(line);
            std::string surface, concept_id, type_id;
            if (!std::getline(ss, surface, '\t') || !std::getline(ss, concept_id, '\t') ||
                !std::getline(ss, type_id, '\t')) {
                throw DataError("bad dictionary row at " + path + ":" + std::to_string(lineno));
            }
            dict.add(surface, concept_id, trim(type_id));
        }
        if (dict.empty()) throw DataError("dictionary file has no entries: " + path);
        return dict;
    }

    void save_tsv(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write dictionary file: " + path);
        for (const auto& [key, entry] : entries_) {
            std::string surface;
            for (std::size_t i = 0; i < key.size(); ++i) {
                if (i) surface += ' ';
                surface += key[i];
            }
            out << surface << '\t' << entry.concept_id << '\t' << entry.type_id << '\n';
        }
    }

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    std::size_t max_tokens() const { return max_tokens_; }

    const DictionaryEntry* find(const std::vector<std::string>& lowered_tokens) const {
        auto it = entries_.find(lowered_tokens);
        return it == entries_.end() ? nullptr : &it->second;
    }

    ConceptGroup group_of(const std::string& type_id) const {
        auto it = type_groups_.find(type_id);
        if (it == type_groups_.end()) throw DataError("unmapped type id: " + type_id);
        return it->second;
    }

    const std::map<std::vector<std::string>, DictionaryEntry>& entries() const { return entries_; }
    const std::map<std::string, ConceptGroup>& type_groups() const { return type_groups_; }

private:
    std::map<std::vector<std::string>, DictionaryEntry> entries_;
    std::map<std::string, ConceptGroup> type_groups_;
    std::size_t max_tokens_ = 0;
};

struct MentionFlags {
    bool negated = false;
    bool familial = false;
    bool non_diagnosis_use = false;

    bool any() const { return negated || familial || non_diagnosis_use; }
};

struct ConceptMention {
    std::string concept_id;
    std::string surface;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    ConceptGroup group = ConceptGroup::problem;
    MentionFlags flags;
};

// Context cue lists. Window sizes follow the module defaults: negation in a
// 4-token left window, kinship in a 6-token left window, facility cues in a
// 2-token right window.
struct ContextFilterConfig {
    std::vector<std::string> negation_cues = {"no", "denies", "without", "negative for"};
    std::vector<std::string> familial_cues = {"mother", "father", "family history"};
    std::vector<std::string> facility_cues = {"clinic", "ward", "team"};
    std::size_t negation_window = 4;
    std::size_t familial_window = 6;
    std::size_t facility_window = 2;
};

namespace detail {

// Does any cue (possibly multi-word) occur in the given token window?
inline bool window_has_cue(const std::vector<TokenSpan>& tokens, std::size_t window_begin,
                           std::size_t window_end, const std::vector<std::string>& cues) {
    for (const auto& cue : cues) {
        const std::vector<std::string> cue_toks = [&] {
            std::vector<std::string> out;
            for (const auto& t : word_tokens(cue)) out.push_back(to_lower(t.text));
            return out;
        }();
        if (cue_toks.empty()) continue;
        for (std::size_t i = window_begin; i + cue_toks.size() <= window_end; ++i) {
            bool match = true;
            for (std::size_t k = 0; k < cue_toks.size(); ++k) {
                if (to_lower(tokens[i + k].text) != cue_toks[k]) {
                    match = false;
                    break;
                }
            }
            if (match) return true;
        }
    }
    return false;
}

}  // namespace detail

inline MentionFlags apply_context_filters(const std::vector<TokenSpan>& tokens,
                                          std::size_t mention_tok_begin, std::size_t mention_tok_end,
                                          const ContextFilterConfig& cfg = {}) {
    MentionFlags flags;
    const std::size_t left_lo_neg =
        mention_tok_begin >= cfg.negation_window ? mention_tok_begin - cfg.negation_window : 0;
    flags.negated = detail::window_has_cue(tokens, left_lo_neg, mention_tok_begin, cfg.negation_cues);
    const std::size_t left_lo_fam =
        mention_tok_begin >= cfg.familial_window ? mention_tok_begin - cfg.familial_window : 0;
    flags.familial = detail::window_has_cue(tokens, left_lo_fam, mention_tok_begin, cfg.familial_cues);
    const std::size_t right_hi = std::min(tokens.size(), mention_tok_end + cfg.facility_window);
    flags.non_diagnosis_use = detail::window_has_cue(tokens, mention_tok_end, right_hi, cfg.facility_cues);
    return flags;
}

inline MentionFlags apply_context_filters(const std::string& text, const ConceptMention& mention,
                                          const ContextFilterConfig& cfg = {}) {
    const std::vector<TokenSpan> tokens = word_tokens(text);
    std::size_t tb = tokens.size(), te = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const bool intersects = tokens[i].end > mention.char_start && tokens[i].begin < mention.char_end;
        if (intersects) {
            tb = std::min(tb, i);
            te = i + 1;
        }
    }
    if (tb == tokens.size()) throw DataError("mention span does not cover any token");
    return apply_context_filters(tokens, tb, te, cfg);
}

// Case-insensitive longest-match dictionary scan. All candidate matches are
// collected, then resolved longest-first and leftmost; accepted mentions
// never overlap. Flags come from the context filters.
inline std::vector<ConceptMention> extract(const std::string& text, const ConceptDictionary& dict,
                                           const ContextFilterConfig& cfg = {}) {
    std::vector<ConceptMention> out;
    if (dict.empty()) return out;
    const std::vector<TokenSpan> tokens = word_tokens(text);
    if (tokens.empty()) return out;

    struct Candidate {
        std::size_t tok_begin;
        std::size_t tok_len;
        const DictionaryEntry* entry;
    };
    std::vector<Candidate> candidates;
    std::vector<std::string> probe;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        probe.clear();
        const std::size_t max_len = std::min(dict.max_tokens(), tokens.size() - i);
        for (std::size_t len = 1; len <= max_len; ++len) {
            probe.push_back(to_lower(tokens[i + len - 1].text));
            if (const DictionaryEntry* e = dict.find(probe)) {
                candidates.push_back({i, len, e});
            }
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.tok_len != b.tok_len) return a.tok_len > b.tok_len;
        return a.tok_begin < b.tok_begin;
    });

    std::vector<bool> taken(tokens.size(), false);
    std::vector<ConceptMention> accepted;
    for (const auto& c : candidates) {
        bool free = true;
        for (std::size_t k = c.tok_begin; k < c.tok_begin + c.tok_len; ++k) {
            if (taken[k]) {
                free = false;
                break;
            }
        }
        if (!free) continue;
        for (std::size_t k = c.tok_begin; k < c.tok_begin + c.tok_len; ++k) taken[k] = true;
        ConceptMention m;
        m.concept_id = c.entry->concept_id;
        m.char_start = tokens[c.tok_begin].begin;
        m.char_end = tokens[c.tok_begin + c.tok_len - 1].end;
        m.surface = text.substr(m.char_start, m.char_end - m.char_start);
        m.group = dict.group_of(c.entry->type_id);
        m.flags = apply_context_filters(tokens, c.tok_begin, c.tok_begin + c.tok_len, cfg);
        accepted.push_back(std::move(m));
    }
    std::sort(accepted.begin(), accepted.end(),
              [](const ConceptMention& a, const ConceptMention& b) { return a.char_start < b.char_start; });
    return accepted;
}

struct TermStats {
    std::size_t n_terms = 0;
    std::size_t n_unique_terms = 0;
    std::optional<double> term_density;
    std::optional<double> unique_term_density;
};

// Densities are word tokens per term; absent when there are no mentions.
inline TermStats term_stats(const std::string& text, const std::vector<ConceptMention>& mentions) {
    TermStats stats;
    stats.n_terms = mentions.size();
    std::vector<std::string> ids;
    ids.reserve(mentions.size());
    for (const auto& m : mentions) ids.push_back(m.concept_id);
    std::sort(ids.begin(), ids.end());
    stats.n_unique_terms = static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
    const std::size_t words = word_tokens(text).size();
    if (stats.n_terms > 0) {
        stats.term_density = static_cast<double>(words) / static_cast<double>(stats.n_terms);
        stats.unique_term_density = static_cast<double>(words) / static_cast<double>(stats.n_unique_terms);
    }
    return stats;
}

// Mentions that survive the context filters and match the requested signal.
enum class SignalKind { problem_only, problem_and_intervention };

inline std::string to_string(SignalKind k) {
    return k == SignalKind::problem_only ? "problem_only" : "problem_and_intervention";
}

inline SignalKind signal_kind_from_string(const std::string& s) {
    if (s == "problem_only") return SignalKind::problem_only;
    if (s == "problem_and_intervention") return SignalKind::problem_and_intervention;
    throw ConfigError("unknown guidance signal kind: " + s);
}

inline std::vector<ConceptMention> filter_for_guidance(const std::vector<ConceptMention>& mentions,
                                                       SignalKind kind) {
    std::vector<ConceptMention> out;
    for (const auto& m : mentions) {
        if (m.flags.any()) continue;
        if (kind == SignalKind::problem_only && m.group != ConceptGroup::problem) continue;
        out.push_back(m);
    }
    return out;
}

}  // namespace bhcsum
