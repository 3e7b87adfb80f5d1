#pragma once

#include <cstddef>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "bhcsum/errors.hpp"
#include "bhcsum/rng.hpp"
#include "bhcsum/text.hpp"

namespace bhcsum {

// A segmented source sentence with provenance. `position` is the global
// chronological index within the admission.
struct SentenceRecord {
    std::string admission_id;
    std::string doc_id;
    int position = 0;
    std::string text;
    std::optional<std::vector<double>> embedding;
    bool embedding_all_oov = false;
};

struct EmbeddingResult {
    std::vector<double> values;
    bool all_oov = false;
};

enum class BackendKind { mean_static_word_vectors, contextual_sentence_encoder };

// Text -> fixed-dimension vector. Implementations must be deterministic:
// identical strings embed to bitwise-identical vectors.
class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual const std::string& name() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual BackendKind kind() const = 0;
    virtual EmbeddingResult embed(const std::string& sentence) const = 0;
};

namespace detail {

// Token normalisation for word-vector lookup: lowercase, strip surrounding
// punctuation from each whitespace field.
inline std::vector<std::string> embedding_tokens(const std::string& sentence) {
    std::vector<std::string> out;
    for (const auto& raw : whitespace_tokens(sentence)) {
        std::size_t b = 0, e = raw.size();
        while (b < e && !is_word_char(static_cast<unsigned char>(raw[b]))) ++b;
        while (e > b && !is_word_char(static_cast<unsigned char>(raw[e - 1]))) --e;
        if (e > b) out.push_back(to_lower(std::string_view(raw).substr(b, e - b)));
    }
    return out;
}

}  // namespace detail

// Averages static word vectors loaded from a text file, one token per line:
// "token v1 v2 ... vd". Out-of-vocabulary tokens are skipped; a sentence
// whose tokens are all OOV embeds to the zero vector with all_oov set.
class MeanStaticBackend final : public EmbeddingBackend {
public:
    MeanStaticBackend(std::unordered_map<std::string, std::vector<double>> vectors,
                      std::size_t dimension, std::string name = "mean_static")
        : vectors_(std::move(vectors)), dimension_(dimension), name_(std::move(name)) {
        if (dimension_ == 0) throw DataError("embedding dimension must be positive");
    }

    static MeanStaticBackend load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open word-vector file: " + path);
        std::unordered_map<std::string, std::vector<double>> vectors;
        std::size_t dim = 0;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            std::istringstream ss(line);
            std::string token;
            ss >> token;
            std::vector<double> v;
            double x;
            while (ss >> x) v.push_back(x);
            if (v.empty()) throw DataError("word-vector line without values at line " + std::to_string(lineno));
            if (dim == 0) dim = v.size();
            if (v.size() != dim) throw DataError("inconsistent vector dimension at line " + std::to_string(lineno));
            vectors[to_lower(token)] = std::move(v);
        }
        if (vectors.empty()) throw DataError("word-vector file is empty: " + path);
        return MeanStaticBackend(std::move(vectors), dim);
    }

    const std::string& name() const override { return name_; }
    std::size_t dimension() const override { return dimension_; }
    BackendKind kind() const override { return BackendKind::mean_static_word_vectors; }

    EmbeddingResult embed(const std::string& sentence) const override {
        EmbeddingResult r;
        r.values.assign(dimension_, 0.0);
        std::size_t hits = 0;
        for (const auto& tok : detail::embedding_tokens(sentence)) {
            auto it = vectors_.find(tok);
            if (it == vectors_.end()) continue;
            for (std::size_t d = 0; d < dimension_; ++d) r.values[d] += it->second[d];
            ++hits;
        }
        if (hits == 0) {
            r.all_oov = true;
            return r;
        }
        for (double& v : r.values) v /= static_cast<double>(hits);
        return r;
    }

    bool contains(const std::string& token) const { return vectors_.count(to_lower(token)) > 0; }

private:
    std::unordered_map<std::string, std::vector<double>> vectors_;
    std::size_t dimension_;
    std::string name_;
};

// Deterministic stand-in for a contextual sentence encoder: the whole
// sentence string hashes to a seeded unit-ish vector. Carries no lexical
// structure, which is exactly what the tests need from a stub.
class HashedSentenceBackend final : public EmbeddingBackend {
public:
    explicit HashedSentenceBackend(std::size_t dimension = 50, std::string name = "hashed_encoder")
        : dimension_(dimension), name_(std::move(name)) {
        if (dimension_ == 0) throw DataError("embedding dimension must be positive");
    }

    const std::string& name() const override { return name_; }
    std::size_t dimension() const override { return dimension_; }
    BackendKind kind() const override { return BackendKind::contextual_sentence_encoder; }

    EmbeddingResult embed(const std::string& sentence) const override {
        EmbeddingResult r;
        r.values.resize(dimension_);
        Splitmix64 rng(fnv1a64(sentence));
        for (double& v : r.values) v = rng.next_gaussian();
        return r;
    }

private:
    std::size_t dimension_;
    std::string name_;
};

inline std::vector<EmbeddingResult> embed_sentences(const std::vector<std::string>& sentences,
                                                    const EmbeddingBackend& backend) {
    std::vector<EmbeddingResult> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) out.push_back(backend.embed(s));
    return out;
}

inline void attach_embeddings(std::vector<SentenceRecord>& records, const EmbeddingBackend& backend) {
    for (auto& rec : records) {
        EmbeddingResult r = backend.embed(rec.text);
        rec.embedding = std::move(r.values);
        rec.embedding_all_oov = r.all_oov;
    }
}

}  // namespace bhcsum
