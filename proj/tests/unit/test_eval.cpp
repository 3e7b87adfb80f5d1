#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "bhcsum/eval.hpp"
#include "bhcsum/rng.hpp"
#include "oracles/rouge_reference.hpp"

using namespace bhcsum;

namespace {

std::string random_text(Splitmix64& rng, std::size_t max_tokens, int vocab) {
    std::string out;
    const std::size_t n = 1 + rng.next_below(max_tokens);
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += "w" + std::to_string(rng.next_below(vocab));
        if (rng.next_below(6) == 0) out += '.';
    }
    return out;
}

}  // namespace

TEST_CASE("rouge_n worked examples") {
    const auto identical = rouge_n("the cat sat", "the cat sat", 1);
    CHECK(identical.precision == doctest::Approx(1.0));
    CHECK(identical.recall == doctest::Approx(1.0));
    CHECK(identical.f1 == doctest::Approx(1.0));

    const auto disjoint = rouge_n("alpha beta", "gamma delta", 1);
    CHECK(disjoint.f1 == 0.0);

    const auto bigram = rouge_n("the cat sat", "the cat ran", 2);
    CHECK(bigram.precision == doctest::Approx(0.5));
    CHECK(bigram.recall == doctest::Approx(0.5));
    CHECK(bigram.f1 == doctest::Approx(0.5));

    const auto empty = rouge_n("", "the cat", 1);
    CHECK(empty.precision == 0.0);
    CHECK(empty.recall == 0.0);
}

TEST_CASE("rouge tokenisation lowercases and splits on non-alphanumerics") {
    const auto s = rouge_n("The CAT, sat!", "the cat sat", 1);
    CHECK(s.f1 == doctest::Approx(1.0));
}

TEST_CASE("rouge_l and rouge_lsum basics") {
    const auto same_l = rouge_l("a b c", "a b c");
    CHECK(same_l.f1 == doctest::Approx(1.0));
    const auto same_lsum = rouge_lsum("a b c", "a b c");
    CHECK(same_lsum.f1 == doctest::Approx(1.0));

    // Single-sentence texts: rouge_l equals rouge_lsum exactly.
    const auto l = rouge_l("the dog ran home", "a dog walked home");
    const auto lsum = rouge_lsum("the dog ran home", "a dog walked home");
    CHECK(l.precision == doctest::Approx(lsum.precision));
    CHECK(l.recall == doctest::Approx(lsum.recall));
    CHECK(l.f1 == doctest::Approx(lsum.f1));
}

TEST_CASE("reversed sentence order: lsum forgives, plain L does not") {
    const std::string reference = "The first event happened. Later another followed.";
    const std::string generated = "Later another followed. The first event happened.";
    const auto lsum = rouge_lsum(generated, reference);
    CHECK(lsum.f1 == doctest::Approx(1.0));
    const auto l = rouge_l(generated, reference);
    CHECK(l.f1 < 1.0);
    CHECK(lsum.recall >= l.recall);
}

TEST_CASE("rouge_n symmetry: P(a,b) equals R(b,a)") {
    Splitmix64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const std::string a = random_text(rng, 15, 8);
        const std::string b = random_text(rng, 15, 8);
        for (std::size_t n = 1; n <= 2; ++n) {
            const auto ab = rouge_n(a, b, n);
            const auto ba = rouge_n(b, a, n);
            CHECK(ab.precision == doctest::Approx(ba.recall).epsilon(1e-12));
        }
    }
}

TEST_CASE("rouge implementations match the brute-force reference on random pairs") {
    Splitmix64 rng(12345);
    for (int trial = 0; trial < 150; ++trial) {
        const std::string gen = random_text(rng, 25, 10);
        const std::string ref = random_text(rng, 25, 10);
        const auto gen_toks = rouge_tokens(gen);
        const auto ref_toks = rouge_tokens(ref);

        for (std::size_t n = 1; n <= 2; ++n) {
            const auto mine = rouge_n(gen, ref, n);
            const auto want = oracles::rouge_n_reference(gen_toks, ref_toks, n);
            CHECK(std::abs(mine.precision - want.precision) < 1e-12);
            CHECK(std::abs(mine.recall - want.recall) < 1e-12);
            CHECK(std::abs(mine.f1 - want.f1) < 1e-12);
        }
        const auto mine_l = rouge_l(gen, ref);
        const auto want_l = oracles::rouge_l_reference(gen_toks, ref_toks);
        CHECK(std::abs(mine_l.f1 - want_l.f1) < 1e-12);

        std::vector<std::vector<std::string>> gen_sents, ref_sents;
        for (const auto& s : segment(gen)) gen_sents.push_back(rouge_tokens(s));
        for (const auto& s : segment(ref)) ref_sents.push_back(rouge_tokens(s));
        const auto mine_ls = rouge_lsum(gen, ref);
        const auto want_ls = oracles::rouge_lsum_reference(gen_sents, ref_sents);
        CHECK(std::abs(mine_ls.precision - want_ls.precision) < 1e-12);
        CHECK(std::abs(mine_ls.recall - want_ls.recall) < 1e-12);
        CHECK(std::abs(mine_ls.f1 - want_ls.f1) < 1e-12);
    }
}

TEST_CASE("rouge components stay in bounds") {
    Splitmix64 rng(77);
    for (int trial = 0; trial < 60; ++trial) {
        const std::string gen = random_text(rng, 20, 6);
        const std::string ref = random_text(rng, 20, 6);
        for (RougeMetric m : {RougeMetric::rouge1, RougeMetric::rouge2, RougeMetric::rougeL, RougeMetric::rougeLsum}) {
            const auto s = rouge_score(gen, ref, m);
            CHECK(s.precision >= 0.0);
            CHECK(s.precision <= 1.0);
            CHECK(s.recall >= 0.0);
            CHECK(s.recall <= 1.0);
            CHECK(s.f1 <= std::max(s.precision, s.recall) + 1e-12);
        }
    }
}

TEST_CASE("concept coverage percentages") {
    ConceptDictionary dict;
    dict.add("sepsis", "P1", "T-11");
    dict.add("stroke", "P2", "T-11");
    dict.add("fever", "P3", "T-18");
    dict.add("rash", "P4", "T-18");
    dict.add("warfarin", "I1", "T-9");

    SUBCASE("generated superset covers everything") {
        const auto cov = concept_coverage("sepsis stroke warfarin extra", "sepsis stroke warfarin", dict);
        CHECK(*cov.pct_problem == doctest::Approx(100.0));
        CHECK(*cov.pct_intervention == doctest::Approx(100.0));
        CHECK(*cov.pct_total == doctest::Approx(100.0));
    }
    SUBCASE("partial problems, absent interventions") {
        const auto cov = concept_coverage("sepsis stroke noted", "sepsis stroke fever rash", dict);
        CHECK(*cov.pct_problem == doctest::Approx(50.0));
        CHECK_FALSE(cov.pct_intervention.has_value());
        CHECK(*cov.pct_total == doctest::Approx(50.0));
    }
    SUBCASE("empty generated text scores zero where groups are present") {
        const auto cov = concept_coverage("", "sepsis warfarin", dict);
        CHECK(*cov.pct_problem == doctest::Approx(0.0));
        CHECK(*cov.pct_intervention == doctest::Approx(0.0));
    }
    SUBCASE("duplicate mentions do not change coverage") {
        const auto once = concept_coverage("sepsis", "sepsis stroke", dict);
        const auto thrice = concept_coverage("sepsis sepsis sepsis", "sepsis stroke sepsis stroke", dict);
        CHECK(*once.pct_problem == doctest::Approx(*thrice.pct_problem));
    }
    SUBCASE("filtered mentions are excluded") {
        const auto cov = concept_coverage("no sepsis", "sepsis", dict);
        CHECK(*cov.pct_problem == doctest::Approx(0.0));
    }
}

TEST_CASE("evaluate_run aggregates and validates") {
    ConceptDictionary dict;
    dict.add("sepsis", "P1", "T-11");
    std::map<std::string, std::string> outputs{{"a", "sepsis resolved fully"}, {"b", "all quiet"}};
    std::map<std::string, std::string> refs{{"a", "sepsis resolved fully"}, {"b", "all quiet"}};

    const EvalReport report = evaluate_run(outputs, refs, &dict, "test-run");
    CHECK(report.n_admissions == 2);
    CHECK(report.mean_rouge.at("rouge1").f1 == doctest::Approx(1.0));
    CHECK(report.mean_rouge.at("rougeLsum").f1 == doctest::Approx(1.0));
    CHECK(*report.mean_coverage.pct_problem == doctest::Approx(100.0));

    // Single admission run: means equal that admission's scores.
    std::map<std::string, std::string> one_out{{"a", "sepsis got better"}};
    const EvalReport single = evaluate_run(one_out, refs, &dict, "single");
    CHECK(single.mean_rouge.at("rouge1").f1 ==
          doctest::Approx(rouge_n("sepsis got better", "sepsis resolved fully", 1).f1));

    std::map<std::string, std::string> orphan{{"zz", "text"}};
    CHECK_THROWS_AS(evaluate_run(orphan, refs, &dict), MissingReference);

    const auto j = report_to_json(report);
    CHECK(j.at("run_id") == "test-run");
    CHECK(j.at("metrics").contains("rougeLsum"));
    CHECK(j.at("per_admission").size() == 2);
}
