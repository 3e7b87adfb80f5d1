#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bhcsum/errors.hpp"
#include "bhcsum/text.hpp"

namespace bhcsum {

// Byte-pair tokenizer trained on the corpus. Words are whitespace fields;
// symbols start as single bytes with an end-of-word marker folded into the
// final byte. Encoding tracks byte offsets into the original text so the
// guidance builder can align concept spans to subword positions.
class BpeTokenizer {
public:
    static constexpr int kPadId = 0;
    static constexpr int kBosId = 1;
    static constexpr int kEosId = 2;
    static constexpr int kUnkId = 3;
    static constexpr const char* kEow = "</w>";

    struct Token {
        int id = kUnkId;
        std::size_t begin = 0;  // byte span in the encoded text
        std::size_t end = 0;
    };

    BpeTokenizer() = default;

    static BpeTokenizer train(const std::vector<std::string>& texts, std::size_t vocab_size) {
        BpeTokenizer tok;
        // Word frequency table; each word is a symbol sequence of bytes with
        // the end-of-word marker appended to the last byte.
        std::map<std::vector<std::string>, std::size_t> words;
        for (const auto& text : texts) {
            for (const auto& w : whitespace_tokens(text)) {
                std::vector<std::string> symbols;
                symbols.reserve(w.size());
                for (std::size_t i = 0; i < w.size(); ++i) symbols.emplace_back(1, w[i]);
                symbols.back() += kEow;
                words[symbols] += 1;
            }
        }
        // Base vocabulary: specials + every initial symbol.
        std::map<std::string, int> vocab;
        auto add_symbol = [&](const std::string& s) {
            if (!vocab.count(s)) {
                const int id = static_cast<int>(tok.id_to_symbol_.size());
                vocab[s] = id;
                tok.id_to_symbol_.push_back(s);
            }
        };
        add_symbol("<pad>");
        add_symbol("<s>");
        add_symbol("</s>");
        add_symbol("<unk>");
        for (const auto& [symbols, freq] : words) {
            for (const auto& s : symbols) add_symbol(s);
        }
        // Merge loop: most frequent adjacent pair wins; ties break on the
        // lexicographically smallest pair for determinism.
        while (tok.id_to_symbol_.size() < vocab_size) {
            std::map<std::pair<std::string, std::string>, std::size_t> pair_counts;
            for (const auto& [symbols, freq] : words) {
                for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
                    pair_counts[{symbols[i], symbols[i + 1]}] += freq;
                }
            }
            if (pair_counts.empty()) break;
            std::pair<std::string, std::string> best;
            std::size_t best_count = 0;
            for (const auto& [pair, count] : pair_counts) {
                if (count > best_count) {
                    best = pair;
                    best_count = count;
                }
            }
            if (best_count < 2) break;  // nothing left worth merging
            tok.merges_.push_back(best);
            const std::string merged = best.first + best.second;
            add_symbol(merged);
            std::map<std::vector<std::string>, std::size_t> next;
            for (const auto& [symbols, freq] : words) {
                std::vector<std::string> out;
                out.reserve(symbols.size());
                std::size_t i = 0;
                while (i < symbols.size()) {
                    if (i + 1 < symbols.size() && symbols[i] == best.first && symbols[i + 1] == best.second) {
                        out.push_back(merged);
                        i += 2;
                    } else {
                        out.push_back(symbols[i]);
                        ++i;
                    }
                }
                next[out] += freq;
            }
            words = std::move(next);
        }
        tok.symbol_to_id_ = std::move(vocab);
        for (std::size_t r = 0; r < tok.merges_.size(); ++r) tok.merge_rank_[tok.merges_[r]] = r;
        return tok;
    }

    std::size_t vocab_size() const { return id_to_symbol_.size(); }

    std::vector<Token> encode_with_offsets(const std::string& text) const {
        std::vector<Token> out;
        std::size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            std::size_t j = i;
            while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            if (j > i) encode_word(text, i, j, out);
            i = j;
        }
        return out;
    }

    std::vector<int> encode(const std::string& text) const {
        std::vector<int> ids;
        for (const auto& t : encode_with_offsets(text)) ids.push_back(t.id);
        return ids;
    }

    // Inverse of encode for in-vocabulary text: words come back separated by
    // single spaces. Specials are skipped.
    std::string decode(const std::vector<int>& ids) const {
        std::string out;
        for (int id : ids) {
            if (id == kPadId || id == kBosId || id == kEosId) continue;
            std::string sym = id >= 0 && static_cast<std::size_t>(id) < id_to_symbol_.size()
                                  ? id_to_symbol_[static_cast<std::size_t>(id)]
                                  : "<unk>";
            const std::size_t eow = sym.rfind(kEow);
            const bool word_end = eow != std::string::npos && eow + 4 == sym.size();
            if (word_end) sym.erase(eow);
            out += sym;
            if (word_end) out += ' ';
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json merges = nlohmann::json::array();
        for (const auto& [a, b] : merges_) merges.push_back(nlohmann::json::array({a, b}));
        return nlohmann::json{{"symbols", id_to_symbol_}, {"merges", merges}};
    }

    static BpeTokenizer from_json(const nlohmann::json& j) {
        BpeTokenizer tok;
        tok.id_to_symbol_ = j.at("symbols").get<std::vector<std::string>>();
        for (std::size_t i = 0; i < tok.id_to_symbol_.size(); ++i) {
            tok.symbol_to_id_[tok.id_to_symbol_[i]] = static_cast<int>(i);
        }
        for (const auto& m : j.at("merges")) {
            tok.merges_.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
        }
        for (std::size_t r = 0; r < tok.merges_.size(); ++r) tok.merge_rank_[tok.merges_[r]] = r;
        return tok;
    }

private:
    void encode_word(const std::string& text, std::size_t begin, std::size_t end,
                     std::vector<Token>& out) const {
        struct Piece {
            std::string symbol;
            std::size_t begin, end;
        };
        std::vector<Piece> pieces;
        pieces.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            pieces.push_back({std::string(1, text[i]), i, i + 1});
        }
        pieces.back().symbol += kEow;
        // Apply merges in rank order: repeatedly merge the best-ranked pair
        // present, all occurrences left to right.
        while (pieces.size() > 1) {
            std::size_t best_rank = merges_.size();
            for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
                auto it = merge_rank_.find({pieces[i].symbol, pieces[i + 1].symbol});
                if (it != merge_rank_.end() && it->second < best_rank) best_rank = it->second;
            }
            if (best_rank == merges_.size()) break;
            const auto& [first, second] = merges_[best_rank];
            std::vector<Piece> next;
            next.reserve(pieces.size());
            std::size_t i = 0;
            while (i < pieces.size()) {
                if (i + 1 < pieces.size() && pieces[i].symbol == first && pieces[i + 1].symbol == second) {
                    next.push_back({first + second, pieces[i].begin, pieces[i + 1].end});
                    i += 2;
                } else {
                    next.push_back(std::move(pieces[i]));
                    ++i;
                }
            }
            pieces = std::move(next);
        }
        for (const auto& p : pieces) {
            auto it = symbol_to_id_.find(p.symbol);
            out.push_back({it == symbol_to_id_.end() ? kUnkId : it->second, p.begin, p.end});
        }
    }

    struct PairHash {
        std::size_t operator()(const std::pair<std::string, std::string>& p) const {
            return std::hash<std::string>{}(p.first) * 1000003u ^ std::hash<std::string>{}(p.second);
        }
    };

    std::vector<std::string> id_to_symbol_;
    std::map<std::string, int> symbol_to_id_;
    std::vector<std::pair<std::string, std::string>> merges_;
    std::unordered_map<std::pair<std::string, std::string>, std::size_t, PairHash> merge_rank_;
};

}  // namespace bhcsum
