#pragma once

#include <string>
#include <vector>

#include "bhcsum/concepts.hpp"
#include "bhcsum/errors.hpp"
#include "bhcsum/rng.hpp"
#include "bhcsum/tokenizer.hpp"

namespace bhcsum {

// Token sequence aligned one-to-one with the source token sequence: source
// tokens inside retained mention spans, pad everywhere else. The length
// equality with the source is the convergence-critical invariant and is
// re-checked at model input.
struct GuidanceSequence {
    std::vector<int> tokens;
    SignalKind signal_kind = SignalKind::problem_only;
};

// `mentions` must already be context-filtered (filter_for_guidance). A
// token belongs to a mention when their spans share at least one byte.
// Mention tokens surface as the original source tokens, never normalised
// concept names.
inline GuidanceSequence build_guidance(const std::vector<BpeTokenizer::Token>& source_tokens,
                                       const std::vector<ConceptMention>& mentions, SignalKind kind,
                                       int pad_id = BpeTokenizer::kPadId) {
    GuidanceSequence g;
    g.signal_kind = kind;
    g.tokens.assign(source_tokens.size(), pad_id);
    for (const auto& m : mentions) {
        if (kind == SignalKind::problem_only && m.group != ConceptGroup::problem) continue;
        bool covered = false;
        for (std::size_t t = 0; t < source_tokens.size(); ++t) {
            const auto& tok = source_tokens[t];
            if (tok.end > m.char_start && tok.begin < m.char_end) {
                g.tokens[t] = source_tokens[t].id;
                covered = true;
            }
        }
        if (!covered) {
            throw AlignmentError("mention '" + m.surface + "' at [" + std::to_string(m.char_start) + "," +
                                 std::to_string(m.char_end) + ") maps to zero source tokens");
        }
    }
    return g;
}

// Drops mentions that fall entirely outside the token window that survived
// source truncation; callers use this before build_guidance so truncation
// never triggers AlignmentError.
inline std::vector<ConceptMention> clip_mentions_to_tokens(const std::vector<ConceptMention>& mentions,
                                                           const std::vector<BpeTokenizer::Token>& tokens) {
    std::vector<ConceptMention> kept;
    for (const auto& m : mentions) {
        for (const auto& tok : tokens) {
            if (tok.end > m.char_start && tok.begin < m.char_end) {
                kept.push_back(m);
                break;
            }
        }
    }
    return kept;
}

// Ablation helper: deterministically permutes the non-pad guidance tokens
// across all positions, destroying the positional alignment while keeping
// the token multiset.
inline GuidanceSequence shuffle_guidance(const GuidanceSequence& g, std::uint64_t seed,
                                         int pad_id = BpeTokenizer::kPadId) {
    std::vector<int> non_pad;
    for (int t : g.tokens) {
        if (t != pad_id) non_pad.push_back(t);
    }
    std::vector<std::size_t> positions(g.tokens.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    Splitmix64 rng(seed);
    rng.shuffle(positions);
    GuidanceSequence out;
    out.signal_kind = g.signal_kind;
    out.tokens.assign(g.tokens.size(), pad_id);
    for (std::size_t i = 0; i < non_pad.size() && i < positions.size(); ++i) {
        out.tokens[positions[i]] = non_pad[i];
    }
    return out;
}

}  // namespace bhcsum
