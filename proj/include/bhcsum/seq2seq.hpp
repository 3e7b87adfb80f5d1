#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bhcsum/autograd.hpp"
#include "bhcsum/checkpoint.hpp"
#include "bhcsum/errors.hpp"
#include "bhcsum/eval.hpp"
#include "bhcsum/rng.hpp"
#include "bhcsum/tokenizer.hpp"

namespace bhcsum {

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t d_model = 32;
    std::size_t n_heads = 2;
    std::size_t n_encoder_blocks = 4;
    std::size_t n_decoder_blocks = 2;
    std::size_t n_shared_encoder_blocks = 3;
    std::size_t d_ff = 0;  // defaults to 4 * d_model
    std::size_t max_src_len = 256;
    std::size_t max_tgt_len = 64;
    bool guided = false;
    std::uint64_t seed = 0;
    // Weight init scale. Desk-scale models need the larger default: at
    // small d_model a 0.02-scale init leaves attention logits so close to
    // uniform that the attention layers never learn to focus.
    double init_scale = 0.1;

    void validate() const {
        if (vocab_size < 5) throw ConfigError("model: vocab_size too small");
        if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
            throw ConfigError("model: d_model must be a positive multiple of n_heads");
        }
        if (n_encoder_blocks == 0 || n_decoder_blocks == 0) throw ConfigError("model: need at least one block");
        if (n_shared_encoder_blocks > n_encoder_blocks) {
            throw ConfigError("model: shared encoder blocks exceed encoder depth");
        }
    }

    std::size_t ff_dim() const { return d_ff ? d_ff : 4 * d_model; }

    nlohmann::json to_json() const {
        return nlohmann::json{{"vocab_size", vocab_size},
                              {"d_model", d_model},
                              {"n_heads", n_heads},
                              {"n_encoder_blocks", n_encoder_blocks},
                              {"n_decoder_blocks", n_decoder_blocks},
                              {"n_shared_encoder_blocks", n_shared_encoder_blocks},
                              {"d_ff", d_ff},
                              {"max_src_len", max_src_len},
                              {"max_tgt_len", max_tgt_len},
                              {"guided", guided},
                              {"seed", seed},
                              {"init_scale", init_scale}};
    }

    static ModelConfig from_json(const nlohmann::json& j) {
        ModelConfig c;
        c.vocab_size = j.at("vocab_size").get<std::size_t>();
        c.d_model = j.at("d_model").get<std::size_t>();
        c.n_heads = j.at("n_heads").get<std::size_t>();
        c.n_encoder_blocks = j.at("n_encoder_blocks").get<std::size_t>();
        c.n_decoder_blocks = j.at("n_decoder_blocks").get<std::size_t>();
        c.n_shared_encoder_blocks = j.at("n_shared_encoder_blocks").get<std::size_t>();
        c.d_ff = j.at("d_ff").get<std::size_t>();
        c.max_src_len = j.at("max_src_len").get<std::size_t>();
        c.max_tgt_len = j.at("max_tgt_len").get<std::size_t>();
        c.guided = j.at("guided").get<bool>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.init_scale = j.value("init_scale", 0.1);
        return c;
    }
};

// Teacher-forced example. `target` starts with BOS and ends with EOS;
// `guidance` is present exactly when the model is guided and has the same
// length as `source`.
struct TrainingExample {
    std::string admission_id;
    std::vector<int> source;
    std::vector<int> guidance;
    std::vector<int> target;
};

// ---------------------------------------------------------------------------
// Encoder-decoder transformer. The guided variant runs a second encoder
// over the guidance sequence: blocks below n_shared_encoder_blocks use the
// text encoder's parameter storage (one set of tensors serves both
// streams), the rest are per-stream. Each decoder block then attends to
// the source encoding and, in the guided variant, to the guidance encoding
// through an extra cross-attention sublayer whose output projection starts
// at zero so an untrained guided model reproduces the plain one.

class Seq2SeqModel {
public:
    explicit Seq2SeqModel(ModelConfig config) : cfg_(config) {
        cfg_.validate();
        for (const auto& spec : parameter_specs()) {
            params_[spec.name] = init_tensor(spec);
        }
    }

    const ModelConfig& config() const { return cfg_; }
    const std::map<std::string, Matrix>& parameters() const { return params_; }
    std::map<std::string, Matrix>& parameters() { return params_; }

    // --- graph building -----------------------------------------------------

    struct GraphParams {
        Tape& tape;
        std::map<std::string, Matrix>& store;
        std::map<std::string, NodePtr> leaves;

        NodePtr operator()(const std::string& name) {
            auto it = leaves.find(name);
            if (it != leaves.end()) return it->second;
            auto sit = store.find(name);
            if (sit == store.end()) throw DataError("unknown parameter: " + name);
            NodePtr leaf = tape.leaf(sit->second);
            leaves.emplace(name, leaf);
            return leaf;
        }
    };

    NodePtr build_encoder(Tape& tape, GraphParams& gp, const std::vector<int>& ids, bool guidance_stream) const {
        if (ids.empty()) throw DataError("encoder: empty input");
        if (ids.size() > cfg_.max_src_len) throw DataError("encoder: input exceeds max_src_len");
        NodePtr x = ops::embedding(tape, gp("tok_emb"), ids);
        x = ops::add(tape, x, ops::slice_rows(tape, gp("enc_pos"), 0, ids.size()));
        for (std::size_t b = 0; b < cfg_.n_encoder_blocks; ++b) {
            const std::string prefix = encoder_block_prefix(b, guidance_stream);
            x = encoder_block(tape, gp, x, prefix);
        }
        const std::string ln = guidance_stream ? "enc_guid.final_ln" : "enc_text.final_ln";
        return ops::layer_norm(tape, x, gp(ln + ".g"), gp(ln + ".b"));
    }

    NodePtr build_decoder(Tape& tape, GraphParams& gp, const NodePtr& enc_text, const NodePtr& enc_guid,
                          const std::vector<int>& target_input) const {
        if (target_input.empty()) throw DataError("decoder: empty input");
        if (target_input.size() > cfg_.max_tgt_len) throw DataError("decoder: input exceeds max_tgt_len");
        NodePtr x = ops::embedding(tape, gp("tok_emb"), target_input);
        x = ops::add(tape, x, ops::slice_rows(tape, gp("dec_pos"), 0, target_input.size()));
        for (std::size_t b = 0; b < cfg_.n_decoder_blocks; ++b) {
            const std::string p = "dec." + std::to_string(b) + ".";
            x = residual_attention(tape, gp, x, x, p + "self", /*causal=*/true);
            x = residual_attention(tape, gp, x, enc_text, p + "xsrc", /*causal=*/false);
            if (cfg_.guided) {
                x = residual_attention(tape, gp, x, enc_guid, p + "xguid", /*causal=*/false);
            }
            x = residual_ffn(tape, gp, x, p + "ffn");
        }
        x = ops::layer_norm(tape, x, gp("dec.final_ln.g"), gp("dec.final_ln.b"));
        // Output projection is tied to the token embedding.
        NodePtr logits = ops::matmul_nt(tape, x, gp("tok_emb"));
        return ops::add_rowvec(tape, logits, gp("out_bias"));
    }

    // Logits for one example: rows = target positions, cols = vocabulary.
    NodePtr build_forward(Tape& tape, GraphParams& gp, const std::vector<int>& source,
                          const std::vector<int>& guidance, const std::vector<int>& target_input) const {
        check_guidance(source, guidance);
        NodePtr enc_text = build_encoder(tape, gp, source, /*guidance_stream=*/false);
        NodePtr enc_guid;
        if (cfg_.guided) enc_guid = build_encoder(tape, gp, guidance, /*guidance_stream=*/true);
        return build_decoder(tape, gp, enc_text, enc_guid, target_input);
    }

    // Forward pass without gradient bookkeeping kept around.
    Matrix forward(const std::vector<int>& source, const std::vector<int>& guidance,
                   const std::vector<int>& target_input) const {
        Tape tape;
        GraphParams gp{tape, const_cast<std::map<std::string, Matrix>&>(params_), {}};
        return build_forward(tape, gp, source, guidance, target_input)->value;
    }

    std::vector<Matrix> forward_batch(const std::vector<TrainingExample>& batch) const {
        std::vector<Matrix> out;
        out.reserve(batch.size());
        for (const auto& ex : batch) {
            out.push_back(forward(ex.source, ex.guidance, decoder_input(ex.target)));
        }
        return out;
    }

    // --- training ------------------------------------------------------------

    // Teacher-forced token cross entropy; target[0] must be BOS.
    double example_loss_and_grads(const TrainingExample& ex, std::map<std::string, Matrix>& grads) const {
        Tape tape;
        GraphParams gp{tape, const_cast<std::map<std::string, Matrix>&>(params_), {}};
        const std::vector<int> dec_in = decoder_input(ex.target);
        const std::vector<int> labels(ex.target.begin() + 1, ex.target.end());
        NodePtr logits = build_forward(tape, gp, ex.source, ex.guidance, dec_in);
        NodePtr loss = ops::cross_entropy(tape, logits, labels, BpeTokenizer::kPadId);
        tape.backward(loss);
        for (const auto& [name, leaf] : gp.leaves) {
            auto it = grads.find(name);
            if (it == grads.end()) {
                grads.emplace(name, leaf->grad);
            } else {
                for (std::size_t i = 0; i < it->second.size(); ++i) it->second.d[i] += leaf->grad.d[i];
            }
        }
        return loss->value.d[0];
    }

    double example_loss(const TrainingExample& ex) const {
        Tape tape;
        GraphParams gp{tape, const_cast<std::map<std::string, Matrix>&>(params_), {}};
        const std::vector<int> dec_in = decoder_input(ex.target);
        const std::vector<int> labels(ex.target.begin() + 1, ex.target.end());
        NodePtr logits = build_forward(tape, gp, ex.source, ex.guidance, dec_in);
        return ops::cross_entropy(tape, logits, labels, BpeTokenizer::kPadId)->value.d[0];
    }

    // --- generation ----------------------------------------------------------

    struct DecodeOptions {
        enum class Strategy { greedy, beam };
        Strategy strategy = Strategy::beam;
        int beam_width = 4;
        std::size_t max_len = 0;  // defaults to max_tgt_len - 1
        std::vector<int> forced_prefix;
    };

    std::vector<int> generate(const std::vector<int>& source, const std::vector<int>& guidance,
                              const DecodeOptions& opts) const {
        check_guidance(source, guidance);
        const std::size_t max_len = opts.max_len ? std::min(opts.max_len, cfg_.max_tgt_len - 1)
                                                 : cfg_.max_tgt_len - 1;
        if (opts.forced_prefix.size() > max_len) {
            throw DataError("generate: forced prefix longer than max length");
        }
        // Encode once; decoding steps feed the frozen encodings back in as
        // leaves of small per-step graphs.
        Matrix enc_text_value, enc_guid_value;
        {
            Tape tape;
            GraphParams gp{tape, const_cast<std::map<std::string, Matrix>&>(params_), {}};
            enc_text_value = build_encoder(tape, gp, source, false)->value;
            if (cfg_.guided) enc_guid_value = build_encoder(tape, gp, guidance, true)->value;
        }
        if (opts.forced_prefix.size() == max_len) return opts.forced_prefix;
        if (opts.strategy == DecodeOptions::Strategy::greedy) {
            return greedy_decode(enc_text_value, enc_guid_value, opts.forced_prefix, max_len);
        }
        return beam_decode(enc_text_value, enc_guid_value, opts.forced_prefix, max_len,
                           std::max(1, opts.beam_width));
    }

    // --- persistence ----------------------------------------------------------

    Checkpoint to_checkpoint(const BpeTokenizer* tokenizer = nullptr) const {
        Checkpoint ckpt;
        ckpt.config = nlohmann::json{{"kind", "seq2seq"}, {"format_version", 1}, {"model", cfg_.to_json()}};
        if (tokenizer) ckpt.config["tokenizer"] = tokenizer->to_json();
        ckpt.tensors = params_;
        return ckpt;
    }

    static Seq2SeqModel from_checkpoint(const Checkpoint& ckpt, BpeTokenizer* tokenizer_out = nullptr) {
        if (ckpt.config.value("kind", "") != "seq2seq") throw DataError("checkpoint is not a seq2seq model");
        Seq2SeqModel model(ModelConfig::from_json(ckpt.config.at("model")));
        for (auto& [name, tensor] : model.params_) {
            auto it = ckpt.tensors.find(name);
            if (it == ckpt.tensors.end()) throw DataError("checkpoint missing tensor: " + name);
            if (it->second.rows != tensor.rows || it->second.cols != tensor.cols) {
                throw DataError("checkpoint tensor shape mismatch: " + name);
            }
            tensor = it->second;
        }
        if (tokenizer_out && ckpt.config.contains("tokenizer")) {
            *tokenizer_out = BpeTokenizer::from_json(ckpt.config.at("tokenizer"));
        }
        return model;
    }

    static std::vector<int> decoder_input(const std::vector<int>& target) {
        if (target.empty() || target.front() != BpeTokenizer::kBosId) {
            throw DataError("target must begin with the start-of-sequence token");
        }
        return std::vector<int>(target.begin(), target.end() - 1);
    }

    // Optional importer for externally converted encoder-decoder weights:
    // tensors from the container are copied onto this model's parameters via
    // a source-name -> local-name map. Tensors absent from the map (or from
    // the container) keep their initialisation; shape mismatches are errors.
    // Returns the number of tensors imported.
    std::size_t import_pretrained(const Checkpoint& external,
                                  const std::map<std::string, std::string>& name_map) {
        std::size_t imported = 0;
        for (const auto& [src_name, local_name] : name_map) {
            auto sit = external.tensors.find(src_name);
            if (sit == external.tensors.end()) continue;
            auto pit = params_.find(local_name);
            if (pit == params_.end()) throw DataError("import: unknown local tensor " + local_name);
            if (!sit->second.same_shape(pit->second)) {
                throw DataError("import: shape mismatch for " + local_name);
            }
            pit->second = sit->second;
            ++imported;
        }
        return imported;
    }

private:
    struct ParamSpec {
        std::string name;
        std::size_t rows, cols;
        enum class Init { gaussian, zeros, ones, identity_gaussian } init;
    };

    std::string encoder_block_prefix(std::size_t b, bool guidance_stream) const {
        if (b < cfg_.n_shared_encoder_blocks) return "enc_shared." + std::to_string(b) + ".";
        return (guidance_stream ? "enc_guid." : "enc_text.") + std::to_string(b) + ".";
    }

    // Value and output projections start near the identity so attended
    // tokens pass through to the residual stream from the first step; with
    // the tied output embedding that makes copy behaviour learnable at desk
    // scale. Query/key stay small-gaussian.
    void attention_specs(std::vector<ParamSpec>& out, const std::string& prefix, bool zero_output) const {
        const std::size_t d = cfg_.d_model;
        using Init = ParamSpec::Init;
        out.push_back({prefix + ".wq", d, d, Init::gaussian});
        out.push_back({prefix + ".wk", d, d, Init::gaussian});
        out.push_back({prefix + ".wv", d, d, Init::identity_gaussian});
        out.push_back({prefix + ".wo", d, d, zero_output ? Init::zeros : Init::identity_gaussian});
        out.push_back({prefix + ".bq", 1, d, Init::zeros});
        out.push_back({prefix + ".bk", 1, d, Init::zeros});
        out.push_back({prefix + ".bv", 1, d, Init::zeros});
        out.push_back({prefix + ".bo", 1, d, Init::zeros});
        out.push_back({prefix + ".ln.g", 1, d, Init::ones});
        out.push_back({prefix + ".ln.b", 1, d, Init::zeros});
    }

    void ffn_specs(std::vector<ParamSpec>& out, const std::string& prefix) const {
        const std::size_t d = cfg_.d_model;
        const std::size_t f = cfg_.ff_dim();
        using Init = ParamSpec::Init;
        out.push_back({prefix + ".w1", d, f, Init::gaussian});
        out.push_back({prefix + ".b1", 1, f, Init::zeros});
        out.push_back({prefix + ".w2", f, d, Init::gaussian});
        out.push_back({prefix + ".b2", 1, d, Init::zeros});
        out.push_back({prefix + ".ln.g", 1, d, Init::ones});
        out.push_back({prefix + ".ln.b", 1, d, Init::zeros});
    }

    std::vector<ParamSpec> parameter_specs() const {
        using Init = ParamSpec::Init;
        std::vector<ParamSpec> specs;
        const std::size_t d = cfg_.d_model;
        specs.push_back({"tok_emb", cfg_.vocab_size, d, Init::gaussian});
        specs.push_back({"enc_pos", cfg_.max_src_len, d, Init::gaussian});
        specs.push_back({"dec_pos", cfg_.max_tgt_len, d, Init::gaussian});
        auto encoder_block_specs = [&](const std::string& prefix) {
            attention_specs(specs, prefix + "attn", false);
            ffn_specs(specs, prefix + "ffn");
        };
        for (std::size_t b = 0; b < cfg_.n_encoder_blocks; ++b) {
            encoder_block_specs(encoder_block_prefix(b, false));
            if (cfg_.guided && b >= cfg_.n_shared_encoder_blocks) {
                encoder_block_specs(encoder_block_prefix(b, true));
            }
        }
        specs.push_back({"enc_text.final_ln.g", 1, d, Init::ones});
        specs.push_back({"enc_text.final_ln.b", 1, d, Init::zeros});
        if (cfg_.guided) {
            specs.push_back({"enc_guid.final_ln.g", 1, d, Init::ones});
            specs.push_back({"enc_guid.final_ln.b", 1, d, Init::zeros});
        }
        for (std::size_t b = 0; b < cfg_.n_decoder_blocks; ++b) {
            const std::string p = "dec." + std::to_string(b) + ".";
            attention_specs(specs, p + "self", false);
            attention_specs(specs, p + "xsrc", false);
            if (cfg_.guided) attention_specs(specs, p + "xguid", true);
            ffn_specs(specs, p + "ffn");
        }
        specs.push_back({"dec.final_ln.g", 1, d, Init::ones});
        specs.push_back({"dec.final_ln.b", 1, d, Init::zeros});
        specs.push_back({"out_bias", 1, cfg_.vocab_size, Init::zeros});
        return specs;
    }

    // Each tensor is seeded by its own name, so the plain and guided models
    // built from the same seed agree on every parameter they have in common.
    Matrix init_tensor(const ParamSpec& spec) const {
        Matrix m(spec.rows, spec.cols);
        switch (spec.init) {
            case ParamSpec::Init::zeros: break;
            case ParamSpec::Init::ones:
                for (double& v : m.d) v = 1.0;
                break;
            case ParamSpec::Init::gaussian: {
                Splitmix64 rng(derive_seed(cfg_.seed, "param." + spec.name));
                for (double& v : m.d) v = cfg_.init_scale * rng.next_gaussian();
                break;
            }
            case ParamSpec::Init::identity_gaussian: {
                Splitmix64 rng(derive_seed(cfg_.seed, "param." + spec.name));
                for (double& v : m.d) v = cfg_.init_scale * rng.next_gaussian();
                for (std::size_t i = 0; i < std::min(spec.rows, spec.cols); ++i) m.at(i, i) += 1.0;
                break;
            }
        }
        return m;
    }

    void check_guidance(const std::vector<int>& source, const std::vector<int>& guidance) const {
        if (!cfg_.guided) {
            if (!guidance.empty()) throw DataError("plain model given a guidance sequence");
            return;
        }
        if (guidance.size() != source.size()) {
            throw MisalignedGuidance("guidance length " + std::to_string(guidance.size()) +
                                     " does not match source length " + std::to_string(source.size()));
        }
    }

    NodePtr multi_head_attention(Tape& tape, GraphParams& gp, const NodePtr& query_in, const NodePtr& memory,
                                 const std::string& prefix, bool causal) const {
        const std::size_t d = cfg_.d_model;
        const std::size_t dh = d / cfg_.n_heads;
        NodePtr q = ops::add_rowvec(tape, ops::matmul(tape, query_in, gp(prefix + ".wq")), gp(prefix + ".bq"));
        NodePtr k = ops::add_rowvec(tape, ops::matmul(tape, memory, gp(prefix + ".wk")), gp(prefix + ".bk"));
        NodePtr v = ops::add_rowvec(tape, ops::matmul(tape, memory, gp(prefix + ".wv")), gp(prefix + ".bv"));
        std::vector<NodePtr> heads;
        heads.reserve(cfg_.n_heads);
        for (std::size_t h = 0; h < cfg_.n_heads; ++h) {
            NodePtr qh = ops::slice_cols(tape, q, h * dh, (h + 1) * dh);
            NodePtr kh = ops::slice_cols(tape, k, h * dh, (h + 1) * dh);
            NodePtr vh = ops::slice_cols(tape, v, h * dh, (h + 1) * dh);
            NodePtr scores = ops::scale(tape, ops::matmul_nt(tape, qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
            NodePtr attn = ops::softmax_rows(tape, scores, causal);
            heads.push_back(ops::matmul(tape, attn, vh));
        }
        NodePtr merged = ops::concat_cols(tape, heads);
        return ops::add_rowvec(tape, ops::matmul(tape, merged, gp(prefix + ".wo")), gp(prefix + ".bo"));
    }

    // Pre-norm residual sublayers.
    NodePtr residual_attention(Tape& tape, GraphParams& gp, const NodePtr& x, const NodePtr& memory,
                               const std::string& prefix, bool causal) const {
        NodePtr normed = ops::layer_norm(tape, x, gp(prefix + ".ln.g"), gp(prefix + ".ln.b"));
        NodePtr mem = memory.get() == x.get() ? normed : memory;
        NodePtr attn = multi_head_attention(tape, gp, normed, mem, prefix, causal);
        return ops::add(tape, x, attn);
    }

    NodePtr residual_ffn(Tape& tape, GraphParams& gp, const NodePtr& x, const std::string& prefix) const {
        NodePtr normed = ops::layer_norm(tape, x, gp(prefix + ".ln.g"), gp(prefix + ".ln.b"));
        NodePtr h = ops::add_rowvec(tape, ops::matmul(tape, normed, gp(prefix + ".w1")), gp(prefix + ".b1"));
        h = ops::gelu(tape, h);
        h = ops::add_rowvec(tape, ops::matmul(tape, h, gp(prefix + ".w2")), gp(prefix + ".b2"));
        return ops::add(tape, x, h);
    }

    NodePtr encoder_block(Tape& tape, GraphParams& gp, const NodePtr& x, const std::string& prefix) const {
        NodePtr y = residual_attention(tape, gp, x, x, prefix + "attn", /*causal=*/false);
        return residual_ffn(tape, gp, y, prefix + "ffn");
    }

    Matrix step_logits(const Matrix& enc_text, const Matrix& enc_guid, const std::vector<int>& dec_in) const {
        Tape tape;
        GraphParams gp{tape, const_cast<std::map<std::string, Matrix>&>(params_), {}};
        NodePtr text_node = tape.leaf(enc_text);
        NodePtr guid_node;
        if (cfg_.guided) guid_node = tape.leaf(enc_guid);
        return build_decoder(tape, gp, text_node, guid_node, dec_in)->value;
    }

    static std::vector<double> log_softmax_row(const Matrix& logits, std::size_t row) {
        std::vector<double> out(logits.cols);
        double mx = -1e300;
        for (std::size_t j = 0; j < logits.cols; ++j) mx = std::max(mx, logits.at(row, j));
        double z = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) z += std::exp(logits.at(row, j) - mx);
        const double logz = std::log(z) + mx;
        for (std::size_t j = 0; j < logits.cols; ++j) out[j] = logits.at(row, j) - logz;
        return out;
    }

    std::vector<int> greedy_decode(const Matrix& enc_text, const Matrix& enc_guid,
                                   const std::vector<int>& prefix, std::size_t max_len) const {
        std::vector<int> dec_in = {BpeTokenizer::kBosId};
        dec_in.insert(dec_in.end(), prefix.begin(), prefix.end());
        std::vector<int> out = prefix;
        while (out.size() < max_len) {
            const Matrix logits = step_logits(enc_text, enc_guid, dec_in);
            const std::size_t last = logits.rows - 1;
            std::size_t best = 0;
            for (std::size_t j = 1; j < logits.cols; ++j) {
                if (logits.at(last, j) > logits.at(last, best)) best = j;
            }
            if (static_cast<int>(best) == BpeTokenizer::kEosId) break;
            out.push_back(static_cast<int>(best));
            dec_in.push_back(static_cast<int>(best));
        }
        return out;
    }

    std::vector<int> beam_decode(const Matrix& enc_text, const Matrix& enc_guid, const std::vector<int>& prefix,
                                 std::size_t max_len, int beam_width) const {
        struct Beam {
            std::vector<int> tokens;  // generated tokens beyond the prefix
            double logp = 0.0;
            bool finished = false;

            double score() const {
                const double len = static_cast<double>(std::max<std::size_t>(tokens.size(), 1));
                return logp / len;  // length-normalised
            }
        };
        std::vector<Beam> beams = {Beam{}};
        std::vector<Beam> finished;
        const std::size_t budget = max_len - prefix.size();
        for (std::size_t step = 0; step < budget && !beams.empty(); ++step) {
            std::vector<Beam> candidates;
            for (const auto& beam : beams) {
                std::vector<int> dec_in = {BpeTokenizer::kBosId};
                dec_in.insert(dec_in.end(), prefix.begin(), prefix.end());
                dec_in.insert(dec_in.end(), beam.tokens.begin(), beam.tokens.end());
                const Matrix logits = step_logits(enc_text, enc_guid, dec_in);
                const std::vector<double> logprobs = log_softmax_row(logits, logits.rows - 1);
                // Top beam_width continuations of this beam.
                std::vector<std::size_t> idx(logprobs.size());
                for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
                std::partial_sort(idx.begin(), idx.begin() + std::min<std::size_t>(beam_width, idx.size()),
                                  idx.end(), [&](std::size_t a, std::size_t b) {
                                      if (logprobs[a] != logprobs[b]) return logprobs[a] > logprobs[b];
                                      return a < b;
                                  });
                for (int c = 0; c < beam_width && c < static_cast<int>(idx.size()); ++c) {
                    Beam next = beam;
                    next.logp += logprobs[idx[c]];
                    if (static_cast<int>(idx[c]) == BpeTokenizer::kEosId) {
                        next.finished = true;
                        finished.push_back(std::move(next));
                    } else {
                        next.tokens.push_back(static_cast<int>(idx[c]));
                        candidates.push_back(std::move(next));
                    }
                }
            }
            std::stable_sort(candidates.begin(), candidates.end(),
                             [](const Beam& a, const Beam& b) { return a.score() > b.score(); });
            if (candidates.size() > static_cast<std::size_t>(beam_width)) {
                candidates.resize(static_cast<std::size_t>(beam_width));
            }
            beams = std::move(candidates);
        }
        for (auto& b : beams) finished.push_back(std::move(b));
        if (finished.empty()) return prefix;
        const Beam* best = &finished[0];
        for (const auto& b : finished) {
            if (b.score() > best->score()) best = &b;
        }
        std::vector<int> out = prefix;
        out.insert(out.end(), best->tokens.begin(), best->tokens.end());
        return out;
    }

    ModelConfig cfg_;
    std::map<std::string, Matrix> params_;
};

// ---------------------------------------------------------------------------
// Adam with linear warmup.

struct AdamOptions {
    double lr = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int warmup_steps = 100;
};

class AdamOptimizer {
public:
    explicit AdamOptimizer(AdamOptions opts = {}) : opts_(opts) {}

    void step(std::map<std::string, Matrix>& params, const std::map<std::string, Matrix>& grads) {
        ++t_;
        const double warm = opts_.warmup_steps > 0
                                ? std::min(1.0, static_cast<double>(t_) / static_cast<double>(opts_.warmup_steps))
                                : 1.0;
        const double lr = opts_.lr * warm;
        const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
        for (auto& [name, grad] : grads) {
            auto pit = params.find(name);
            if (pit == params.end()) throw DataError("adam: unknown parameter " + name);
            Matrix& m = state(m_, name, grad);
            Matrix& v = state(v_, name, grad);
            Matrix& p = pit->second;
            for (std::size_t i = 0; i < grad.size(); ++i) {
                const double g = grad.d[i];
                m.d[i] = opts_.beta1 * m.d[i] + (1.0 - opts_.beta1) * g;
                v.d[i] = opts_.beta2 * v.d[i] + (1.0 - opts_.beta2) * g * g;
                const double mhat = m.d[i] / bc1;
                const double vhat = v.d[i] / bc2;
                p.d[i] -= lr * mhat / (std::sqrt(vhat) + opts_.eps);
            }
        }
    }

    std::int64_t steps() const { return t_; }

private:
    static Matrix& state(std::map<std::string, Matrix>& store, const std::string& name, const Matrix& like) {
        auto it = store.find(name);
        if (it == store.end()) it = store.emplace(name, Matrix(like.rows, like.cols)).first;
        return it->second;
    }

    AdamOptions opts_;
    std::map<std::string, Matrix> m_, v_;
    std::int64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Training loop: teacher forcing, validation after every epoch, best
// checkpoint (by validation loss) retained.

struct TrainOptions {
    int epochs = 20;
    std::size_t batch_size = 8;
    AdamOptions adam;
    std::uint64_t seed = 0;
    const BpeTokenizer* tokenizer = nullptr;  // enables validation ROUGE
    std::map<std::string, std::string> val_references;  // admission_id -> reference text
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_rouge_lsum = 0.0;
};

struct TrainState {
    std::int64_t step = 0;
    int epoch = 0;
    int best_epoch = 0;
    double best_validation_metric = 0.0;
    std::vector<EpochLog> log;
};

inline double validation_loss(const Seq2SeqModel& model, const std::vector<TrainingExample>& val) {
    if (val.empty()) return 0.0;
    double total = 0.0;
    for (const auto& ex : val) total += model.example_loss(ex);
    return total / static_cast<double>(val.size());
}

inline double validation_rouge_lsum(const Seq2SeqModel& model, const std::vector<TrainingExample>& val,
                                    const BpeTokenizer& tokenizer,
                                    const std::map<std::string, std::string>& references) {
    if (val.empty()) return 0.0;
    double total = 0.0;
    std::size_t counted = 0;
    Seq2SeqModel::DecodeOptions opts;
    opts.strategy = Seq2SeqModel::DecodeOptions::Strategy::greedy;
    for (const auto& ex : val) {
        auto rit = references.find(ex.admission_id);
        if (rit == references.end()) continue;
        const std::vector<int> out = model.generate(ex.source, ex.guidance, opts);
        total += rouge_lsum(tokenizer.decode(out), rit->second).f1;
        ++counted;
    }
    return counted ? total / static_cast<double>(counted) : 0.0;
}

inline TrainState train(Seq2SeqModel& model, const std::vector<TrainingExample>& train_set,
                        const std::vector<TrainingExample>& val_set, const TrainOptions& opts) {
    if (train_set.empty()) throw EmptyTraining("train: no training examples");
    for (const auto& ex : train_set) {
        if (model.config().guided != !ex.guidance.empty()) {
            throw DataError("train: guidance presence inconsistent with model config");
        }
    }
    TrainState state;
    AdamOptimizer optimizer(opts.adam);
    std::map<std::string, Matrix> best_params = model.parameters();
    double best_val = 1e300;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        Splitmix64 rng(derive_seed(opts.seed, "train.epoch." + std::to_string(epoch)));
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
            const std::size_t stop = std::min(order.size(), start + opts.batch_size);
            std::map<std::string, Matrix> grads;
            double batch_loss = 0.0;
            for (std::size_t i = start; i < stop; ++i) {
                batch_loss += model.example_loss_and_grads(train_set[order[i]], grads);
            }
            const double scale = 1.0 / static_cast<double>(stop - start);
            for (auto& [name, g] : grads) {
                for (double& v : g.d) v *= scale;
            }
            optimizer.step(model.parameters(), grads);
            ++state.step;
            epoch_loss += batch_loss;
            seen += stop - start;
        }
        EpochLog log;
        log.epoch = epoch;
        log.train_loss = epoch_loss / static_cast<double>(seen);
        log.val_loss = validation_loss(model, val_set);
        if (opts.tokenizer && !opts.val_references.empty()) {
            log.val_rouge_lsum = validation_rouge_lsum(model, val_set, *opts.tokenizer, opts.val_references);
        }
        if (!std::isfinite(log.train_loss) || !std::isfinite(log.val_loss)) {
            throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + " (train " +
                                   std::to_string(log.train_loss) + ", val " + std::to_string(log.val_loss) + ")");
        }
        state.log.push_back(log);
        state.epoch = epoch;
        const double metric = val_set.empty() ? log.train_loss : log.val_loss;
        if (metric < best_val) {
            best_val = metric;
            best_params = model.parameters();
            state.best_epoch = epoch;
            state.best_validation_metric = metric;
        }
    }
    if (opts.epochs > 0) model.parameters() = best_params;
    return state;
}

}  // namespace bhcsum
