#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bhcsum/concepts.hpp"
#include "bhcsum/corpus.hpp"
#include "bhcsum/extractive.hpp"
#include "bhcsum/seq2seq.hpp"
#include "bhcsum/training_data.hpp"

namespace bhcsum {

// Ranks assembled source sentences; implementations are the trained ranker,
// TextRank or the oracle.
using RankFn = std::function<std::vector<RankedSentence>(const std::vector<SentenceRecord>&)>;

struct EnsembleOptions {
    int n_extractive_sentences = 3;
    SignalKind signal_kind = SignalKind::problem_only;
    int max_sentences = 1000;
    Seq2SeqModel::DecodeOptions decode;
};

// Extractive-then-abstractive composition: the top-n extractive sentences,
// in original order, are forced as the generation prefix and the abstractive
// model continues from them. n = 0 degenerates to pure abstractive
// generation.
inline std::string ensemble_summarise(const Admission& admission, const RankFn& rank_fn, const Seq2SeqModel& model,
                                      const BpeTokenizer& tokenizer, const ConceptDictionary* dict,
                                      const EnsembleOptions& opts) {
    if (opts.n_extractive_sentences < 0) throw DataError("ensemble: negative prefix size");
    const ModelConfig& cfg = model.config();
    const std::string src = source_text(admission, opts.max_sentences);
    std::vector<BpeTokenizer::Token> tokens = tokenizer.encode_with_offsets(src);
    if (tokens.size() > cfg.max_src_len) tokens.resize(cfg.max_src_len);
    if (tokens.empty()) throw DataError("ensemble: admission has no source tokens");
    std::vector<int> source_ids;
    source_ids.reserve(tokens.size());
    for (const auto& t : tokens) source_ids.push_back(t.id);

    std::vector<int> guidance_ids;
    if (cfg.guided) {
        if (!dict) throw DataError("ensemble: guided model needs a concept dictionary");
        const auto mentions = extract(src, *dict);
        const auto retained = filter_for_guidance(mentions, opts.signal_kind);
        guidance_ids = build_guidance(tokens, clip_mentions_to_tokens(retained, tokens), opts.signal_kind).tokens;
    }

    Seq2SeqModel::DecodeOptions decode = opts.decode;
    decode.forced_prefix.clear();
    std::string prefix_text;
    if (opts.n_extractive_sentences > 0) {
        const std::vector<SentenceRecord> records = assemble_source(admission, opts.max_sentences);
        const ExtractiveSummary picked = select_top_k(rank_fn(records), opts.n_extractive_sentences);
        prefix_text = summary_text(picked);
        std::vector<int> prefix_ids = tokenizer.encode(prefix_text);
        const std::size_t max_len = decode.max_len ? std::min(decode.max_len, cfg.max_tgt_len - 1)
                                                   : cfg.max_tgt_len - 1;
        if (prefix_ids.size() > max_len) prefix_ids.resize(max_len);
        decode.forced_prefix = std::move(prefix_ids);
    }
    const std::vector<int> out = model.generate(source_ids, guidance_ids, decode);
    return tokenizer.decode(out);
}

inline std::string abstractive_summarise(const Admission& admission, const Seq2SeqModel& model,
                                          const BpeTokenizer& tokenizer, const ConceptDictionary* dict,
                                          const EnsembleOptions& opts_in) {
    EnsembleOptions opts = opts_in;
    opts.n_extractive_sentences = 0;
    return ensemble_summarise(
        admission, [](const std::vector<SentenceRecord>&) { return std::vector<RankedSentence>{}; }, model,
        tokenizer, dict, opts);
}

}  // namespace bhcsum
