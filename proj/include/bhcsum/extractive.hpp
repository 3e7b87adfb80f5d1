#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bhcsum/embedding.hpp"
#include "bhcsum/errors.hpp"
#include "bhcsum/rng.hpp"
#include "bhcsum/sentencize.hpp"
#include "bhcsum/text.hpp"

namespace bhcsum {

struct RankedSentence {
    SentenceRecord record;
    double score = 0.0;
    int rank = 0;  // 1-based
};

// The extracted subset, re-sorted by original position for readability.
struct ExtractiveSummary {
    std::string admission_id;
    int k = 0;
    std::vector<SentenceRecord> sentences;
};

// ---------------------------------------------------------------------------
// Gestalt pattern matching over whitespace token sequences:
// ratio = 2M / (|a| + |b|) with M the total size of recursively found
// longest contiguous matching blocks. Ties prefer the earliest block in a,
// then in b.

namespace detail {

struct MatchBlock {
    std::size_t a_begin, b_begin, length;
};

// Longest block wins; ties go to the earliest block in a, then in b
// (the scan order guarantees that with a strict ">" update).
inline MatchBlock longest_matching_block(const std::vector<std::string>& a, std::size_t a_lo, std::size_t a_hi,
                                         const std::vector<std::string>& b, std::size_t b_lo, std::size_t b_hi) {
    MatchBlock best{a_lo, b_lo, 0};
    // lengths[j - b_lo + 1] = match run length ending at (i, j); rolled over i.
    std::vector<std::size_t> lengths(b_hi - b_lo + 1, 0);
    for (std::size_t i = a_lo; i < a_hi; ++i) {
        std::vector<std::size_t> next(b_hi - b_lo + 1, 0);
        for (std::size_t j = b_lo; j < b_hi; ++j) {
            if (a[i] == b[j]) {
                const std::size_t len = lengths[j - b_lo] + 1;
                next[j - b_lo + 1] = len;
                if (len > best.length) best = {i + 1 - len, j + 1 - len, len};
            }
        }
        lengths = std::move(next);
    }
    return best;
}

inline std::size_t matched_tokens(const std::vector<std::string>& a, std::size_t a_lo, std::size_t a_hi,
                                  const std::vector<std::string>& b, std::size_t b_lo, std::size_t b_hi) {
    if (a_lo >= a_hi || b_lo >= b_hi) return 0;
    const MatchBlock blk = longest_matching_block(a, a_lo, a_hi, b, b_lo, b_hi);
    if (blk.length == 0) return 0;
    return blk.length + matched_tokens(a, a_lo, blk.a_begin, b, b_lo, blk.b_begin) +
           matched_tokens(a, blk.a_begin + blk.length, a_hi, b, blk.b_begin + blk.length, b_hi);
}

}  // namespace detail

// The recursion's tie choices depend on argument order, so the sequences
// are put into a canonical order first; that makes the ratio exactly
// symmetric without changing the matching rule itself.
inline double gestalt_ratio(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    const std::vector<std::string>* first = &a;
    const std::vector<std::string>* second = &b;
    if (std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end())) std::swap(first, second);
    const std::size_t m = detail::matched_tokens(*first, 0, first->size(), *second, 0, second->size());
    return 2.0 * static_cast<double>(m) / static_cast<double>(a.size() + b.size());
}

// ---------------------------------------------------------------------------
// Ranking plumbing: stable score-descending order with original-position
// tie-breaking, ranks 1..n.

inline std::vector<RankedSentence> rank_by_scores(const std::vector<SentenceRecord>& source,
                                                  const std::vector<double>& scores) {
    if (source.size() != scores.size()) throw DimensionMismatch("rank_by_scores: score count mismatch");
    std::vector<std::size_t> order(source.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (scores[i] != scores[j]) return scores[i] > scores[j];
        return source[i].position < source[j].position;
    });
    std::vector<RankedSentence> ranked;
    ranked.reserve(source.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        ranked.push_back({source[order[r]], scores[order[r]], static_cast<int>(r + 1)});
    }
    return ranked;
}

// Reference-informed ceiling: each source sentence scores the maximum
// Gestalt ratio against any reference sentence.
inline std::vector<RankedSentence> oracle_rank(const std::vector<SentenceRecord>& source,
                                               const std::string& reference) {
    const std::vector<std::string> ref_sentences = segment(reference);
    if (ref_sentences.empty()) throw DataError("oracle_rank: reference has no sentences");
    std::vector<std::vector<std::string>> ref_tokens;
    ref_tokens.reserve(ref_sentences.size());
    for (const auto& s : ref_sentences) ref_tokens.push_back(whitespace_tokens(s));
    std::vector<double> scores;
    scores.reserve(source.size());
    for (const auto& rec : source) {
        const std::vector<std::string> toks = whitespace_tokens(rec.text);
        double best = 0.0;
        for (const auto& ref : ref_tokens) best = std::max(best, gestalt_ratio(toks, ref));
        scores.push_back(best);
    }
    return rank_by_scores(source, scores);
}

// ---------------------------------------------------------------------------
// TextRank over the sentence-similarity graph: cosine similarity with
// negatives clamped to zero, rows normalised, uniform teleport.

struct TextRankResult {
    std::vector<double> scores;
    bool converged = true;
    int iterations = 0;
};

inline double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v) {
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

inline std::vector<std::vector<double>> similarity_matrix(const std::vector<std::vector<double>>& embeddings) {
    const std::size_t n = embeddings.size();
    std::vector<std::vector<double>> sim(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = std::max(0.0, cosine_similarity(embeddings[i], embeddings[j]));
            sim[i][j] = s;
            sim[j][i] = s;
        }
    }
    return sim;
}

// Power iteration on a non-negative similarity matrix (diagonal ignored).
// Rows with zero mass distribute uniformly. Scores form a probability
// distribution; convergence is max component delta < tol.
inline TextRankResult textrank_from_similarity(std::vector<std::vector<double>> sim, double damping = 0.85,
                                               double tol = 1e-6, int max_iter = 200) {
    const std::size_t n = sim.size();
    if (n == 0) throw DataError("textrank: empty similarity matrix");
    if (!(damping > 0.0 && damping < 1.0)) throw DataError("textrank: damping must be in (0,1)");
    TextRankResult result;
    if (n == 1) {
        result.scores = {1.0};
        return result;
    }
    for (std::size_t i = 0; i < n; ++i) {
        sim[i][i] = 0.0;
        for (std::size_t j = 0; j < n; ++j) sim[i][j] = std::max(0.0, sim[i][j]);
    }
    // Row-normalised transition probabilities; dangling rows go uniform.
    std::vector<std::vector<double>> trans(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += sim[i][j];
        if (row > 0.0) {
            for (std::size_t j = 0; j < n; ++j) trans[i][j] = sim[i][j] / row;
        } else {
            for (std::size_t j = 0; j < n; ++j) trans[i][j] = 1.0 / static_cast<double>(n);
        }
    }
    std::vector<double> x(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n, 0.0);
    const double teleport = (1.0 - damping) / static_cast<double>(n);
    result.converged = false;
    for (int it = 1; it <= max_iter; ++it) {
        for (std::size_t j = 0; j < n; ++j) next[j] = teleport;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) next[j] += damping * trans[i][j] * x[i];
        }
        double delta = 0.0;
        for (std::size_t j = 0; j < n; ++j) delta = std::max(delta, std::abs(next[j] - x[j]));
        x = next;
        result.iterations = it;
        if (delta < tol) {
            result.converged = true;
            break;
        }
    }
    result.scores = std::move(x);
    return result;
}

inline TextRankResult textrank_scores(const std::vector<std::vector<double>>& embeddings, double damping = 0.85,
                                      double tol = 1e-6, int max_iter = 200) {
    if (embeddings.empty()) throw DataError("textrank: no embeddings");
    return textrank_from_similarity(similarity_matrix(embeddings), damping, tol, max_iter);
}

inline std::vector<RankedSentence> textrank_rank(const std::vector<SentenceRecord>& source, double damping = 0.85,
                                                 double tol = 1e-6, int max_iter = 200) {
    std::vector<std::vector<double>> embeddings;
    embeddings.reserve(source.size());
    for (const auto& rec : source) {
        if (!rec.embedding) throw DataError("textrank_rank: sentence without embedding");
        embeddings.push_back(*rec.embedding);
    }
    return rank_by_scores(source, textrank_scores(embeddings, damping, tol, max_iter).scores);
}

// Uniform-random ranking used as the sweep floor.
inline std::vector<RankedSentence> random_rank(const std::vector<SentenceRecord>& source, std::uint64_t seed) {
    Splitmix64 rng(seed);
    std::vector<double> scores(source.size());
    for (double& s : scores) s = rng.next_double();
    return rank_by_scores(source, scores);
}

// ---------------------------------------------------------------------------

inline ExtractiveSummary select_top_k(const std::vector<RankedSentence>& ranked, int k) {
    if (k < 1) throw DataError("select_top_k: k must be >= 1");
    ExtractiveSummary summary;
    summary.k = k;
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
    std::vector<const RankedSentence*> picked;
    picked.reserve(take);
    for (std::size_t i = 0; i < take; ++i) picked.push_back(&ranked[i]);
    std::sort(picked.begin(), picked.end(), [](const RankedSentence* a, const RankedSentence* b) {
        return a->record.position < b->record.position;
    });
    for (const auto* p : picked) {
        if (summary.admission_id.empty()) summary.admission_id = p->record.admission_id;
        summary.sentences.push_back(p->record);
    }
    return summary;
}

inline std::string summary_text(const ExtractiveSummary& summary) {
    std::string out;
    for (std::size_t i = 0; i < summary.sentences.size(); ++i) {
        if (i) out += ' ';
        out += summary.sentences[i].text;
    }
    return out;
}

}  // namespace bhcsum
