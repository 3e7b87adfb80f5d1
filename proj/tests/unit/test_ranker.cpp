#include <doctest.h>

#include <map>
#include <vector>

#include "bhcsum/ranker.hpp"
#include "oracles/finite_diff.hpp"

using namespace bhcsum;

namespace {

// Synthetic separable ranking problem: relevance is embedding[0] > 0.
RankerExample separable_example(Splitmix64& rng, std::size_t dim, std::size_t n) {
    RankerExample ex;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(dim);
        for (double& x : v) x = rng.next_gaussian();
        const bool relevant = rng.next_below(2) == 0;
        v[0] = relevant ? 1.0 + rng.next_double() : -1.0 - rng.next_double();
        ex.labels.push_back(relevant ? 1.0 : 0.0);
        ex.embeddings.push_back(std::move(v));
    }
    return ex;
}

}  // namespace

TEST_CASE("ranker gradients match finite differences") {
    RankerConfig cfg;
    cfg.input_dim = 4;
    cfg.hidden_dim = 3;
    cfg.seed = 2;
    RecurrentRanker ranker(cfg);
    Splitmix64 rng(88);
    const RankerExample ex = separable_example(rng, 4, 5);
    std::map<std::string, Matrix> analytic;
    ranker.example_loss_and_grads(ex, analytic);
    const auto result = oracles::finite_difference_check(
        ranker.parameters(), analytic,
        [&]() {
            std::map<std::string, Matrix> unused;
            Tape tape;
            // score path shares the loss path; recompute loss directly
            RecurrentRanker& r = ranker;
            std::map<std::string, Matrix> g;
            return r.example_loss_and_grads(ex, g);
        },
        1e-5);
    CHECK(result.checked > 50);
    CHECK(result.max_rel_error < 1e-3);
}

TEST_CASE("ranker learns a separable relevance signal") {
    RankerConfig cfg;
    cfg.input_dim = 6;
    cfg.hidden_dim = 8;
    cfg.seed = 3;
    RecurrentRanker ranker(cfg);

    Splitmix64 rng(500);
    std::vector<RankerExample> train_set;
    for (int i = 0; i < 30; ++i) train_set.push_back(separable_example(rng, 6, 12));

    RankerTrainOptions opts;
    opts.epochs = 12;
    opts.seed = 4;
    const auto result = train_ranker(ranker, train_set, opts);
    CHECK(result.epoch_losses.back() < result.epoch_losses.front());

    // Held-out ranking accuracy: positives should outscore negatives.
    std::size_t correct = 0, total = 0;
    for (int i = 0; i < 10; ++i) {
        const RankerExample ex = separable_example(rng, 6, 12);
        const std::vector<double> scores = ranker.score(ex.embeddings);
        for (std::size_t p = 0; p < scores.size(); ++p) {
            for (std::size_t q = 0; q < scores.size(); ++q) {
                if (ex.labels[p] == 1.0 && ex.labels[q] == 0.0) {
                    ++total;
                    if (scores[p] > scores[q]) ++correct;
                }
            }
        }
    }
    REQUIRE(total > 0);
    CHECK(static_cast<double>(correct) / static_cast<double>(total) >= 0.95);

    // Post-training: mean score on positives exceeds mean on negatives for
    // a training admission re-presented at inference.
    const auto& ex0 = train_set.front();
    const auto scores = ranker.score(ex0.embeddings);
    double pos = 0.0, neg = 0.0;
    std::size_t np = 0, nn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (ex0.labels[i] == 1.0) {
            pos += scores[i];
            ++np;
        } else {
            neg += scores[i];
            ++nn;
        }
    }
    if (np && nn) CHECK(pos / np > neg / nn);
}

TEST_CASE("untrained ranker scoring is reproducible under a fixed seed") {
    RankerConfig cfg;
    cfg.input_dim = 5;
    cfg.hidden_dim = 4;
    cfg.seed = 12;
    RecurrentRanker a(cfg), b(cfg);
    Splitmix64 rng(7);
    const RankerExample ex = separable_example(rng, 5, 9);
    CHECK(a.score(ex.embeddings) == b.score(ex.embeddings));
}

TEST_CASE("ranker validates dimensions and empty training") {
    RankerConfig cfg;
    cfg.input_dim = 4;
    cfg.hidden_dim = 3;
    RecurrentRanker ranker(cfg);
    CHECK_THROWS_AS(ranker.score({{1.0, 2.0}}), DimensionMismatch);
    CHECK_THROWS_AS(train_ranker(ranker, {}, RankerTrainOptions{}), EmptyTraining);
}

TEST_CASE("oracle labels mark top-k membership") {
    std::vector<SentenceRecord> records;
    const std::vector<std::string> texts = {"alpha beta gamma", "Pt admitted with chest pain.", "delta words"};
    for (std::size_t i = 0; i < texts.size(); ++i) {
        SentenceRecord r;
        r.position = static_cast<int>(i);
        r.text = texts[i];
        r.embedding = std::vector<double>{static_cast<double>(i), 0.0};
        records.push_back(r);
    }
    const RankerExample ex = make_ranker_example(records, "Pt admitted with chest pain.", 1);
    REQUIRE(ex.labels.size() == 3);
    CHECK(ex.labels[1] == 1.0);
    CHECK(ex.labels[0] + ex.labels[2] == 0.0);
}

TEST_CASE("ranker checkpoint round trip") {
    RankerConfig cfg;
    cfg.input_dim = 4;
    cfg.hidden_dim = 3;
    cfg.seed = 6;
    RecurrentRanker ranker(cfg);
    const std::string path = "test_ranker.ckpt";
    ranker.to_checkpoint("mean_static", 4).save(path);
    const Checkpoint ckpt = Checkpoint::load(path);
    CHECK(ckpt.config.at("embedding_backend") == "mean_static");
    RecurrentRanker restored = RecurrentRanker::from_checkpoint(ckpt);
    Splitmix64 rng(1);
    const RankerExample ex = separable_example(rng, 4, 6);
    CHECK(restored.score(ex.embeddings) == ranker.score(ex.embeddings));
    std::remove(path.c_str());
}
