#include <doctest.h>

#include <cmath>

#include "bhcsum/extractive.hpp"
#include "oracles/gestalt_reference.hpp"
#include "oracles/pagerank_reference.hpp"

using namespace bhcsum;

namespace {

std::vector<SentenceRecord> make_records(const std::vector<std::string>& texts) {
    std::vector<SentenceRecord> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        SentenceRecord r;
        r.admission_id = "adm";
        r.doc_id = "d";
        r.position = static_cast<int>(i);
        r.text = texts[i];
        out.push_back(r);
    }
    return out;
}

std::vector<std::string> random_tokens(Splitmix64& rng, std::size_t max_len, int alphabet) {
    std::vector<std::string> out;
    const std::size_t len = rng.next_below(max_len + 1);
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(std::string(1, static_cast<char>('a' + rng.next_below(alphabet))));
    }
    return out;
}

}  // namespace

TEST_CASE("gestalt ratio worked example") {
    CHECK(gestalt_ratio({"a", "b", "c"}, {"a", "b", "d"}) == doctest::Approx(2.0 * 2 / 6));
    CHECK(gestalt_ratio({"x"}, {"x"}) == doctest::Approx(1.0));
    CHECK(gestalt_ratio({"x"}, {"y"}) == doctest::Approx(0.0));
}

TEST_CASE("gestalt ratio equals the recursive reference on random pairs") {
    Splitmix64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const auto a = random_tokens(rng, 12, 4);
        const auto b = random_tokens(rng, 12, 4);
        CHECK(gestalt_ratio(a, b) == oracles::gestalt_ratio_reference(a, b));
    }
}

TEST_CASE("gestalt ratio is symmetric and bounded") {
    Splitmix64 rng(55);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_tokens(rng, 10, 3);
        const auto b = random_tokens(rng, 10, 3);
        const double r = gestalt_ratio(a, b);
        CHECK(r == gestalt_ratio(b, a));
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
        if (!a.empty() && a == b) CHECK(r == 1.0);
        if (r == 1.0) CHECK(a == b);
    }
}

TEST_CASE("oracle_rank scores identity at rank 1 and disjoint at zero") {
    const auto records = make_records({
        "completely unrelated words here",
        "Pt admitted with chest pain.",
        "another far away sentence",
    });
    const std::string reference = "Pt admitted with chest pain. Recovered well.";
    const auto ranked = oracle_rank(records, reference);
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].record.position == 1);
    CHECK(ranked[0].score == doctest::Approx(1.0));
    CHECK(ranked[0].rank == 1);
    CHECK(ranked[2].score == doctest::Approx(0.0));
    // Ranks are a permutation with non-increasing scores.
    for (std::size_t i = 1; i < ranked.size(); ++i) {
        CHECK(ranked[i - 1].score >= ranked[i].score);
        CHECK(ranked[i].rank == static_cast<int>(i + 1));
    }
}

TEST_CASE("oracle_rank requires a segmentable reference") {
    CHECK_THROWS_AS(oracle_rank(make_records({"x"}), "   "), DataError);
}

TEST_CASE("textrank trivial distributions") {
    const auto single = textrank_scores({{1.0, 0.0}});
    REQUIRE(single.scores.size() == 1);
    CHECK(single.scores[0] == doctest::Approx(1.0));

    const auto pair = textrank_scores({{1.0, 0.0}, {1.0, 0.0}});
    REQUIRE(pair.scores.size() == 2);
    CHECK(pair.scores[0] == doctest::Approx(0.5));
    CHECK(pair.scores[1] == doctest::Approx(0.5));
}

TEST_CASE("textrank matches the dense linear-solve oracle on random matrices") {
    Splitmix64 rng(7);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 2 + rng.next_below(11);
        std::vector<std::vector<double>> sim(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                // Mix of positive, zero and negative entries; negatives must clamp.
                const double v = rng.next_double() * 2.0 - 0.5;
                sim[i][j] = v;
                sim[j][i] = v;
            }
        }
        const auto result = textrank_from_similarity(sim, 0.85, 1e-12, 5000);
        const auto expected = oracles::pagerank_reference(sim, 0.85);
        REQUIRE(result.scores.size() == expected.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(result.scores[i] == doctest::Approx(expected[i]).epsilon(1e-6));
            CHECK(result.scores[i] >= 0.0);
            sum += result.scores[i];
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("textrank reports non-convergence but still returns the iterate") {
    // A weighted path graph mixes slowly, so two iterations cannot reach
    // a 1e-15 fixpoint.
    std::vector<std::vector<double>> sim(6, std::vector<double>(6, 0.0));
    for (std::size_t i = 0; i + 1 < 6; ++i) {
        sim[i][i + 1] = 1.0 + static_cast<double>(i);
        sim[i + 1][i] = sim[i][i + 1];
    }
    const auto result = textrank_from_similarity(sim, 0.85, 1e-15, 2);
    CHECK_FALSE(result.converged);
    CHECK(result.iterations == 2);
    CHECK(result.scores.size() == 6);
}

TEST_CASE("textrank input validation") {
    CHECK_THROWS_AS(textrank_scores({}), DataError);
    CHECK_THROWS_AS(textrank_from_similarity({{0.0}}, 1.5), DataError);
}

TEST_CASE("select_top_k clamps, re-sorts by position and breaks ties earlier-first") {
    const auto records = make_records({"s0", "s1", "s2", "s3"});
    std::vector<double> scores = {0.1, 0.9, 0.9, 0.2};
    const auto ranked = rank_by_scores(records, scores);
    // Tie between s1 and s2 resolved by position.
    CHECK(ranked[0].record.position == 1);
    CHECK(ranked[1].record.position == 2);

    const auto top1 = select_top_k(ranked, 1);
    REQUIRE(top1.sentences.size() == 1);
    CHECK(top1.sentences[0].position == 1);

    const auto top15 = select_top_k(ranked, 15);
    CHECK(top15.sentences.size() == 4);

    const auto top2 = select_top_k(ranked, 2);
    REQUIRE(top2.sentences.size() == 2);
    CHECK(top2.sentences[0].position == 1);  // original order restored
    CHECK(top2.sentences[1].position == 2);
    CHECK(summary_text(top2) == "s1 s2");

    CHECK_THROWS_AS(select_top_k(ranked, 0), DataError);
}

TEST_CASE("extractive summaries are subsets of the source") {
    const auto records = make_records({"a", "b", "c", "d", "e"});
    const auto ranked = random_rank(records, 99);
    const auto summary = select_top_k(ranked, 3);
    for (const auto& s : summary.sentences) {
        bool found = false;
        for (const auto& r : records) {
            if (r.position == s.position && r.text == s.text) found = true;
        }
        CHECK(found);
    }
}
