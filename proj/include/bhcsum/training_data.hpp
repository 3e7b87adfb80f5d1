#pragma once

#include <string>
#include <vector>

#include "bhcsum/concepts.hpp"
#include "bhcsum/corpus.hpp"
#include "bhcsum/extractive.hpp"
#include "bhcsum/guidance.hpp"
#include "bhcsum/seq2seq.hpp"
#include "bhcsum/tokenizer.hpp"

namespace bhcsum {

// The abstractive model's view of an admission: assembled source sentences
// joined by single spaces. Guidance spans are computed against this string.
inline std::string source_text(const Admission& admission, int max_sentences = 1000) {
    const std::vector<SentenceRecord> records = assemble_source(admission, max_sentences);
    std::string text;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i) text += ' ';
        text += records[i].text;
    }
    return text;
}

struct ExampleBuildOptions {
    SignalKind signal_kind = SignalKind::problem_only;
    int max_sentences = 1000;
};

// Tokenises source and reference, truncates to the model's windows, and
// (for guided models) builds the aligned guidance sequence from
// ground-truth concept extractions.
inline TrainingExample build_training_example(const Admission& admission, const BpeTokenizer& tokenizer,
                                              const ModelConfig& cfg, const ConceptDictionary* dict,
                                              const ExampleBuildOptions& opts = {},
                                              const ContextFilterConfig& filter_cfg = {}) {
    TrainingExample ex;
    ex.admission_id = admission.admission_id;
    const std::string src = source_text(admission, opts.max_sentences);
    std::vector<BpeTokenizer::Token> tokens = tokenizer.encode_with_offsets(src);
    if (tokens.size() > cfg.max_src_len) tokens.resize(cfg.max_src_len);
    if (tokens.empty()) throw DataError("admission has no source tokens: " + admission.admission_id);
    ex.source.reserve(tokens.size());
    for (const auto& t : tokens) ex.source.push_back(t.id);

    if (cfg.guided) {
        if (!dict) throw DataError("guided example build needs a concept dictionary");
        const std::vector<ConceptMention> mentions = extract(src, *dict, filter_cfg);
        const std::vector<ConceptMention> retained = filter_for_guidance(mentions, opts.signal_kind);
        const std::vector<ConceptMention> clipped = clip_mentions_to_tokens(retained, tokens);
        ex.guidance = build_guidance(tokens, clipped, opts.signal_kind).tokens;
    }

    std::vector<int> target_content = tokenizer.encode(admission.reference_bhc);
    const std::size_t budget = cfg.max_tgt_len - 1;
    if (target_content.size() > budget) target_content.resize(budget);
    ex.target.reserve(target_content.size() + 2);
    ex.target.push_back(BpeTokenizer::kBosId);
    ex.target.insert(ex.target.end(), target_content.begin(), target_content.end());
    ex.target.push_back(BpeTokenizer::kEosId);
    return ex;
}

inline std::vector<TrainingExample> build_training_examples(const std::vector<Admission>& admissions,
                                                            const BpeTokenizer& tokenizer, const ModelConfig& cfg,
                                                            const ConceptDictionary* dict,
                                                            const ExampleBuildOptions& opts = {}) {
    std::vector<TrainingExample> out;
    out.reserve(admissions.size());
    for (const auto& adm : admissions) {
        out.push_back(build_training_example(adm, tokenizer, cfg, dict, opts));
    }
    return out;
}

// Corpus text used for tokenizer training: every cleaned source plus the
// reference summaries of the training split.
inline std::vector<std::string> tokenizer_training_texts(const std::vector<Admission>& admissions) {
    std::vector<std::string> texts;
    texts.reserve(admissions.size() * 2);
    for (const auto& adm : admissions) {
        texts.push_back(source_text(adm));
        texts.push_back(adm.reference_bhc);
    }
    return texts;
}

}  // namespace bhcsum
