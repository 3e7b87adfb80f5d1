#include <doctest.h>

#include <cstdio>
#include <map>
#include <vector>

#include "bhcsum/eval.hpp"
#include "bhcsum/seq2seq.hpp"
#include "oracles/finite_diff.hpp"

using namespace bhcsum;

namespace {

ModelConfig tiny_config(bool guided, std::uint64_t seed = 11) {
    ModelConfig cfg;
    cfg.vocab_size = 50;
    cfg.d_model = 8;
    cfg.n_heads = 2;
    cfg.n_encoder_blocks = 2;
    cfg.n_decoder_blocks = 2;
    cfg.n_shared_encoder_blocks = 1;
    cfg.d_ff = 16;
    cfg.max_src_len = 12;
    cfg.max_tgt_len = 10;
    cfg.guided = guided;
    cfg.seed = seed;
    return cfg;
}

TrainingExample tiny_example(bool guided) {
    TrainingExample ex;
    ex.admission_id = "t0";
    ex.source = {5, 6, 7, 8, 9, 10};
    if (guided) ex.guidance = {0, 0, 7, 8, 0, 0};
    ex.target = {BpeTokenizer::kBosId, 5, 6, 7, BpeTokenizer::kEosId};
    return ex;
}

double model_loss(const Seq2SeqModel& model, const TrainingExample& ex) { return model.example_loss(ex); }

}  // namespace

TEST_CASE("forward produces the contracted logits shape") {
    for (bool guided : {false, true}) {
        Seq2SeqModel model(tiny_config(guided));
        const TrainingExample ex = tiny_example(guided);
        const Matrix logits = model.forward(ex.source, ex.guidance, Seq2SeqModel::decoder_input(ex.target));
        CHECK(logits.rows == ex.target.size() - 1);
        CHECK(logits.cols == 50);
    }
}

TEST_CASE("misaligned guidance is rejected") {
    Seq2SeqModel model(tiny_config(true));
    TrainingExample ex = tiny_example(true);
    ex.guidance.pop_back();  // off by one
    CHECK_THROWS_AS(model.forward(ex.source, ex.guidance, Seq2SeqModel::decoder_input(ex.target)),
                    MisalignedGuidance);
    Seq2SeqModel plain(tiny_config(false));
    CHECK_THROWS_AS(plain.forward(ex.source, {0, 0, 0, 0, 0}, {BpeTokenizer::kBosId}), DataError);
}

TEST_CASE("analytic gradients match central finite differences for plain and guided models") {
    for (bool guided : {false, true}) {
        CAPTURE(guided);
        Seq2SeqModel model(tiny_config(guided));
        const TrainingExample ex = tiny_example(guided);
        std::map<std::string, Matrix> analytic;
        model.example_loss_and_grads(ex, analytic);
        const auto result = oracles::finite_difference_check(
            model.parameters(), analytic, [&]() { return model_loss(model, ex); }, 1e-5);
        CHECK(result.checked > 3000);
        INFO("worst parameter ", result.worst_param, " index ", result.worst_index);
        CHECK(result.max_rel_error < 1e-3);
    }
}

TEST_CASE("zero-initialised guidance path reproduces the plain model exactly") {
    // Same seed: shared parameter names initialise identically, the guidance
    // cross-attention output projection starts at zero.
    Seq2SeqModel plain(tiny_config(false, 77));
    Seq2SeqModel guided(tiny_config(true, 77));
    TrainingExample ex = tiny_example(true);
    const Matrix a = plain.forward(ex.source, {}, Seq2SeqModel::decoder_input(ex.target));
    const Matrix b = guided.forward(ex.source, ex.guidance, Seq2SeqModel::decoder_input(ex.target));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.d[i] == b.d[i]);
}

TEST_CASE("guidance becomes a live path once its output projection is nonzero") {
    Seq2SeqModel guided(tiny_config(true, 3));
    // Give the guidance cross-attention a nonzero projection.
    for (std::size_t b = 0; b < guided.config().n_decoder_blocks; ++b) {
        Matrix& wo = guided.parameters().at("dec." + std::to_string(b) + ".xguid.wo");
        Splitmix64 rng(900 + b);
        for (double& v : wo.d) v = 0.3 * rng.next_gaussian();
    }
    TrainingExample ex = tiny_example(true);
    const Matrix before = guided.forward(ex.source, ex.guidance, Seq2SeqModel::decoder_input(ex.target));
    std::vector<int> permuted = {0, 0, 8, 7, 0, 0};  // swap the two non-pad tokens
    const Matrix after = guided.forward(ex.source, permuted, Seq2SeqModel::decoder_input(ex.target));
    bool changed = false;
    for (std::size_t i = 0; i < before.size(); ++i) changed |= before.d[i] != after.d[i];
    CHECK(changed);
}

TEST_CASE("shared encoder blocks are one storage used by both streams") {
    Seq2SeqModel model(tiny_config(true));
    std::size_t shared = 0, text_only = 0, guid_only = 0;
    for (const auto& [name, tensor] : model.parameters()) {
        if (name.rfind("enc_shared.", 0) == 0) ++shared;
        if (name.rfind("enc_text.", 0) == 0) ++text_only;
        if (name.rfind("enc_guid.", 0) == 0) ++guid_only;
    }
    CHECK(shared > 0);
    // The unshared encoder depth exists separately per stream.
    CHECK(text_only == guid_only);
}

TEST_CASE("training reduces loss on a copy task and is seed-deterministic") {
    ModelConfig cfg = tiny_config(false, 5);
    cfg.vocab_size = 30;
    cfg.max_src_len = 8;
    cfg.max_tgt_len = 8;
    Splitmix64 rng(40);
    std::vector<TrainingExample> data;
    for (int i = 0; i < 12; ++i) {
        TrainingExample ex;
        ex.admission_id = "c" + std::to_string(i);
        for (int t = 0; t < 6; ++t) ex.source.push_back(4 + static_cast<int>(rng.next_below(20)));
        ex.target.push_back(BpeTokenizer::kBosId);
        for (int t = 0; t < 4; ++t) ex.target.push_back(ex.source[t]);
        ex.target.push_back(BpeTokenizer::kEosId);
        data.push_back(ex);
    }
    TrainOptions opts;
    opts.epochs = 5;
    opts.batch_size = 4;
    opts.adam.lr = 5e-3;
    opts.adam.warmup_steps = 5;
    opts.seed = 9;

    Seq2SeqModel model(cfg);
    const TrainState state = train(model, data, {}, opts);
    REQUIRE(state.log.size() == 5);
    CHECK(state.log.back().train_loss < state.log.front().train_loss);

    Seq2SeqModel again(cfg);
    const TrainState state2 = train(again, data, {}, opts);
    CHECK(state.log.back().train_loss == doctest::Approx(state2.log.back().train_loss).epsilon(1e-15));

    SUBCASE("zero epochs leaves the initialisation untouched") {
        Seq2SeqModel fresh(cfg);
        const std::map<std::string, Matrix> before = fresh.parameters();
        TrainOptions none = opts;
        none.epochs = 0;
        train(fresh, data, {}, none);
        for (const auto& [name, tensor] : before) {
            const Matrix& now = fresh.parameters().at(name);
            for (std::size_t i = 0; i < tensor.size(); ++i) CHECK(tensor.d[i] == now.d[i]);
        }
    }
}

TEST_CASE("generation: forced prefix, determinism, eos stop") {
    Seq2SeqModel model(tiny_config(false, 21));
    const std::vector<int> source = {5, 6, 7, 8};

    Seq2SeqModel::DecodeOptions greedy;
    greedy.strategy = Seq2SeqModel::DecodeOptions::Strategy::greedy;
    greedy.max_len = 6;

    const auto a = model.generate(source, {}, greedy);
    const auto b = model.generate(source, {}, greedy);
    CHECK(a == b);
    CHECK(a.size() <= 6);

    Seq2SeqModel::DecodeOptions forced = greedy;
    forced.forced_prefix = {9, 10, 11};
    const auto c = model.generate(source, {}, forced);
    REQUIRE(c.size() >= 3);
    CHECK(c[0] == 9);
    CHECK(c[1] == 10);
    CHECK(c[2] == 11);

    // Full-length prefix comes back unchanged.
    Seq2SeqModel::DecodeOptions full = greedy;
    full.forced_prefix = {9, 10, 11, 12, 13, 14};
    CHECK(model.generate(source, {}, full) == full.forced_prefix);

    Seq2SeqModel::DecodeOptions beam = greedy;
    beam.strategy = Seq2SeqModel::DecodeOptions::Strategy::beam;
    beam.beam_width = 3;
    const auto d = model.generate(source, {}, beam);
    CHECK(d == model.generate(source, {}, beam));
    CHECK(d.size() <= 6);
}

TEST_CASE("checkpoint round trips bit-exactly") {
    Seq2SeqModel model(tiny_config(true, 33));
    const std::string path = "test_model.ckpt";
    model.to_checkpoint().save(path);
    const Checkpoint loaded = Checkpoint::load(path);
    Seq2SeqModel restored = Seq2SeqModel::from_checkpoint(loaded);
    for (const auto& [name, tensor] : model.parameters()) {
        const Matrix& other = restored.parameters().at(name);
        REQUIRE(other.size() == tensor.size());
        for (std::size_t i = 0; i < tensor.size(); ++i) CHECK(other.d[i] == tensor.d[i]);
    }
    std::remove(path.c_str());
}

TEST_CASE("beam search is at least as good as greedy on most trained-copy items") {
    ModelConfig cfg = tiny_config(false, 61);
    cfg.vocab_size = 30;
    cfg.d_model = 16;
    cfg.max_src_len = 8;
    cfg.max_tgt_len = 8;
    Splitmix64 rng(77);
    std::vector<TrainingExample> train_set, val_set;
    auto make_copy_example = [&]() {
        TrainingExample ex;
        for (int t = 0; t < 5; ++t) ex.source.push_back(4 + static_cast<int>(rng.next_below(24)));
        ex.target.push_back(BpeTokenizer::kBosId);
        for (int t = 0; t < 5; ++t) ex.target.push_back(ex.source[t]);
        ex.target.push_back(BpeTokenizer::kEosId);
        return ex;
    };
    for (int i = 0; i < 60; ++i) train_set.push_back(make_copy_example());
    for (int i = 0; i < 10; ++i) val_set.push_back(make_copy_example());
    TrainOptions opts;
    opts.epochs = 8;
    opts.batch_size = 1;
    opts.adam.lr = 5e-3;
    opts.adam.warmup_steps = 30;
    opts.seed = 78;
    Seq2SeqModel model(cfg);
    train(model, train_set, val_set, opts);

    auto tokens_to_text = [](const std::vector<int>& ids) {
        std::string s;
        for (int id : ids) s += "t" + std::to_string(id) + " ";
        return s;
    };
    std::size_t beam_wins_or_ties = 0;
    for (const auto& ex : val_set) {
        Seq2SeqModel::DecodeOptions greedy;
        greedy.strategy = Seq2SeqModel::DecodeOptions::Strategy::greedy;
        greedy.max_len = 6;
        Seq2SeqModel::DecodeOptions beam = greedy;
        beam.strategy = Seq2SeqModel::DecodeOptions::Strategy::beam;
        beam.beam_width = 4;
        const std::string reference = tokens_to_text(std::vector<int>(ex.target.begin() + 1, ex.target.end() - 1));
        const double g = rouge_l(tokens_to_text(model.generate(ex.source, {}, greedy)), reference).f1;
        const double b = rouge_l(tokens_to_text(model.generate(ex.source, {}, beam)), reference).f1;
        if (b >= g) ++beam_wins_or_ties;
    }
    CHECK(beam_wins_or_ties >= 6);  // >= 60% of validation items
}

TEST_CASE("pretrained tensor import maps names and checks shapes") {
    Seq2SeqModel donor(tiny_config(false, 91));
    Checkpoint external;
    external.config = nlohmann::json{{"kind", "external"}};
    external.tensors["encoder.embed_tokens.weight"] = donor.parameters().at("tok_emb");
    external.tensors["lm_head.bias"] = donor.parameters().at("out_bias");

    Seq2SeqModel target(tiny_config(false, 92));
    const std::map<std::string, std::string> name_map = {
        {"encoder.embed_tokens.weight", "tok_emb"},
        {"lm_head.bias", "out_bias"},
        {"missing.tensor", "dec_pos"},  // absent from the container: skipped
    };
    CHECK(target.import_pretrained(external, name_map) == 2);
    CHECK(target.parameters().at("tok_emb").d == donor.parameters().at("tok_emb").d);

    Checkpoint bad;
    bad.tensors["w"] = Matrix(2, 2);
    CHECK_THROWS_AS(target.import_pretrained(bad, {{"w", "tok_emb"}}), DataError);
}

TEST_CASE("training with empty set or inconsistent guidance fails") {
    Seq2SeqModel model(tiny_config(false));
    CHECK_THROWS_AS(train(model, {}, {}, TrainOptions{}), EmptyTraining);
    std::vector<TrainingExample> wrong = {tiny_example(true)};
    CHECK_THROWS_AS(train(model, wrong, {}, TrainOptions{}), DataError);
}
