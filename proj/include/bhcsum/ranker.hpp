#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bhcsum/autograd.hpp"
#include "bhcsum/checkpoint.hpp"
#include "bhcsum/embedding.hpp"
#include "bhcsum/errors.hpp"
#include "bhcsum/extractive.hpp"
#include "bhcsum/rng.hpp"
#include "bhcsum/seq2seq.hpp"

namespace bhcsum {

struct RankerConfig {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 32;
    int label_top_k = 15;  // oracle membership cutoff used for supervision
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        return nlohmann::json{{"input_dim", input_dim},
                              {"hidden_dim", hidden_dim},
                              {"label_top_k", label_top_k},
                              {"seed", seed}};
    }

    static RankerConfig from_json(const nlohmann::json& j) {
        RankerConfig c;
        c.input_dim = j.at("input_dim").get<std::size_t>();
        c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
        c.label_top_k = j.at("label_top_k").get<int>();
        c.seed = j.at("seed").get<std::uint64_t>();
        return c;
    }
};

// One admission's supervision: the sentence-embedding sequence and the
// binary oracle top-k membership labels.
struct RankerExample {
    std::vector<std::vector<double>> embeddings;
    std::vector<double> labels;
};

// Bidirectional LSTM scorer over the sentence-embedding sequence; each
// sentence gets a logit from the concatenated forward and backward hidden
// states.
class RecurrentRanker {
public:
    explicit RecurrentRanker(RankerConfig config) : cfg_(config) {
        if (cfg_.input_dim == 0) throw ConfigError("ranker: input_dim must be set");
        if (cfg_.hidden_dim == 0) throw ConfigError("ranker: hidden_dim must be set");
        const std::size_t d = cfg_.input_dim;
        const std::size_t h = cfg_.hidden_dim;
        for (const char* dir : {"fwd", "bwd"}) {
            for (const char* gate : {"i", "f", "o", "g"}) {
                init_param(std::string(dir) + ".w" + gate, d, h);
                init_param(std::string(dir) + ".u" + gate, h, h);
                // The forget gate starts open, the usual LSTM bias trick.
                init_param(std::string(dir) + ".b" + gate, 1, h, /*zero=*/true,
                           /*fill=*/std::string(gate) == "f" ? 1.0 : 0.0);
            }
        }
        init_param("out.w", 2 * h, 1);
        init_param("out.b", 1, 1, /*zero=*/true);
    }

    const RankerConfig& config() const { return cfg_; }
    const std::map<std::string, Matrix>& parameters() const { return params_; }
    std::map<std::string, Matrix>& parameters() { return params_; }

    std::vector<double> score(const std::vector<std::vector<double>>& embeddings) const {
        if (embeddings.empty()) return {};
        Tape tape;
        std::map<std::string, NodePtr> leaves;
        NodePtr logits = build_logits(tape, leaves, embeddings);
        std::vector<double> out(logits->value.rows);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = logits->value.d[i];
        return out;
    }

    std::vector<RankedSentence> rank(const std::vector<SentenceRecord>& source) const {
        std::vector<std::vector<double>> embeddings;
        embeddings.reserve(source.size());
        for (const auto& rec : source) {
            if (!rec.embedding) throw DataError("ranker: sentence without embedding");
            embeddings.push_back(*rec.embedding);
        }
        return rank_by_scores(source, score(embeddings));
    }

    double example_loss_and_grads(const RankerExample& ex, std::map<std::string, Matrix>& grads) const {
        Tape tape;
        std::map<std::string, NodePtr> leaves;
        NodePtr logits = build_logits(tape, leaves, ex.embeddings);
        NodePtr loss = ops::bce_with_logits(tape, logits, ex.labels);
        tape.backward(loss);
        for (const auto& [name, leaf] : leaves) {
            auto it = grads.find(name);
            if (it == grads.end()) {
                grads.emplace(name, leaf->grad);
            } else {
                for (std::size_t i = 0; i < it->second.size(); ++i) it->second.d[i] += leaf->grad.d[i];
            }
        }
        return loss->value.d[0];
    }

    Checkpoint to_checkpoint(const std::string& backend_name, std::size_t backend_dim) const {
        Checkpoint ckpt;
        ckpt.config = nlohmann::json{{"kind", "ranker"},
                                     {"format_version", 1},
                                     {"ranker", cfg_.to_json()},
                                     {"embedding_backend", backend_name},
                                     {"embedding_dim", backend_dim}};
        ckpt.tensors = params_;
        return ckpt;
    }

    static RecurrentRanker from_checkpoint(const Checkpoint& ckpt) {
        if (ckpt.config.value("kind", "") != "ranker") throw DataError("checkpoint is not a ranker");
        RecurrentRanker ranker(RankerConfig::from_json(ckpt.config.at("ranker")));
        for (auto& [name, tensor] : ranker.params_) {
            auto it = ckpt.tensors.find(name);
            if (it == ckpt.tensors.end()) throw DataError("checkpoint missing tensor: " + name);
            tensor = it->second;
        }
        return ranker;
    }

private:
    void init_param(const std::string& name, std::size_t rows, std::size_t cols, bool zero = false,
                    double fill = 0.0) {
        Matrix m(rows, cols, fill);
        if (!zero) {
            Splitmix64 rng(derive_seed(cfg_.seed, "ranker." + name));
            for (double& v : m.d) v = 0.08 * rng.next_gaussian();
        }
        params_[name] = m;
    }

    NodePtr leaf_for(Tape& tape, std::map<std::string, NodePtr>& leaves, const std::string& name) const {
        auto it = leaves.find(name);
        if (it != leaves.end()) return it->second;
        NodePtr leaf = tape.leaf(params_.at(name));
        leaves.emplace(name, leaf);
        return leaf;
    }

    NodePtr build_logits(Tape& tape, std::map<std::string, NodePtr>& leaves,
                         const std::vector<std::vector<double>>& embeddings) const {
        const std::size_t n = embeddings.size();
        Matrix x(n, cfg_.input_dim);
        for (std::size_t i = 0; i < n; ++i) {
            if (embeddings[i].size() != cfg_.input_dim) {
                throw DimensionMismatch("ranker: embedding dimension " + std::to_string(embeddings[i].size()) +
                                        " does not match model input " + std::to_string(cfg_.input_dim));
            }
            for (std::size_t j = 0; j < cfg_.input_dim; ++j) x.at(i, j) = embeddings[i][j];
        }
        NodePtr xs = tape.leaf(std::move(x));
        auto run_direction = [&](const char* p, bool reverse) {
            auto gate_params = [&](const char* gate) {
                return std::array<NodePtr, 3>{leaf_for(tape, leaves, std::string(p) + ".w" + gate),
                                              leaf_for(tape, leaves, std::string(p) + ".u" + gate),
                                              leaf_for(tape, leaves, std::string(p) + ".b" + gate)};
            };
            const auto pi = gate_params("i");
            const auto pf = gate_params("f");
            const auto po = gate_params("o");
            const auto pg = gate_params("g");
            NodePtr h = tape.leaf(Matrix(1, cfg_.hidden_dim));
            NodePtr c = tape.leaf(Matrix(1, cfg_.hidden_dim));
            auto gate = [&](const std::array<NodePtr, 3>& pr, const NodePtr& xt) {
                return ops::add(tape,
                                ops::add(tape, ops::matmul(tape, xt, pr[0]), ops::matmul(tape, h, pr[1])),
                                pr[2]);
            };
            std::vector<NodePtr> states(n);
            for (std::size_t step = 0; step < n; ++step) {
                const std::size_t t = reverse ? n - 1 - step : step;
                NodePtr xt = ops::slice_rows(tape, xs, t, t + 1);
                NodePtr ig = ops::sigmoid(tape, gate(pi, xt));
                NodePtr fg = ops::sigmoid(tape, gate(pf, xt));
                NodePtr og = ops::sigmoid(tape, gate(po, xt));
                NodePtr gg = ops::tanh_op(tape, gate(pg, xt));
                c = ops::add(tape, ops::mul(tape, fg, c), ops::mul(tape, ig, gg));
                h = ops::mul(tape, og, ops::tanh_op(tape, c));
                states[t] = h;
            }
            return states;
        };
        const std::vector<NodePtr> fwd = run_direction("fwd", false);
        const std::vector<NodePtr> bwd = run_direction("bwd", true);
        std::vector<NodePtr> rows;
        rows.reserve(n);
        for (std::size_t t = 0; t < n; ++t) {
            rows.push_back(ops::concat_cols(tape, {fwd[t], bwd[t]}));
        }
        NodePtr states = ops::concat_rows(tape, rows);
        NodePtr logits = ops::matmul(tape, states, leaf_for(tape, leaves, "out.w"));
        return ops::add_rowvec(tape, logits, leaf_for(tape, leaves, "out.b"));
    }

    RankerConfig cfg_;
    std::map<std::string, Matrix> params_;
};

// Builds supervision targets from the Gestalt oracle ranking: a sentence is
// positive when the oracle places it in the top label_top_k.
inline RankerExample make_ranker_example(const std::vector<SentenceRecord>& source, const std::string& reference,
                                         int label_top_k) {
    RankerExample ex;
    ex.embeddings.reserve(source.size());
    for (const auto& rec : source) {
        if (!rec.embedding) throw DataError("make_ranker_example: sentence without embedding");
        ex.embeddings.push_back(*rec.embedding);
    }
    ex.labels.assign(source.size(), 0.0);
    std::map<int, std::size_t> position_to_index;
    for (std::size_t i = 0; i < source.size(); ++i) position_to_index[source[i].position] = i;
    const std::vector<RankedSentence> ranked = oracle_rank(source, reference);
    for (const auto& rs : ranked) {
        if (rs.rank > label_top_k) break;
        ex.labels[position_to_index.at(rs.record.position)] = 1.0;
    }
    return ex;
}

struct RankerTrainOptions {
    int epochs = 10;
    std::size_t batch_size = 4;
    AdamOptions adam{1e-2, 0.9, 0.999, 1e-8, 20};
    std::uint64_t seed = 0;
};

struct RankerTrainResult {
    std::vector<double> epoch_losses;
};

inline RankerTrainResult train_ranker(RecurrentRanker& ranker, const std::vector<RankerExample>& examples,
                                      const RankerTrainOptions& opts) {
    if (examples.empty()) throw EmptyTraining("train_ranker: no training examples");
    RankerTrainResult result;
    AdamOptimizer optimizer(opts.adam);
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        Splitmix64 rng(derive_seed(opts.seed, "ranker.epoch." + std::to_string(epoch)));
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
            const std::size_t stop = std::min(order.size(), start + opts.batch_size);
            std::map<std::string, Matrix> grads;
            for (std::size_t i = start; i < stop; ++i) {
                epoch_loss += ranker.example_loss_and_grads(examples[order[i]], grads);
            }
            const double scale = 1.0 / static_cast<double>(stop - start);
            for (auto& [name, g] : grads) {
                for (double& v : g.d) v *= scale;
            }
            optimizer.step(ranker.parameters(), grads);
        }
        if (!std::isfinite(epoch_loss)) throw TrainingDiverged("ranker loss non-finite at epoch " + std::to_string(epoch));
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(examples.size()));
    }
    return result;
}

}  // namespace bhcsum
