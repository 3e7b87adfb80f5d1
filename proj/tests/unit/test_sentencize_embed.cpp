#include <doctest.h>

#include <cctype>
#include <string>

#include "bhcsum/embedding.hpp"
#include "bhcsum/rng.hpp"
#include "bhcsum/sentencize.hpp"

using namespace bhcsum;

namespace {

std::string non_whitespace(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    }
    return out;
}

}  // namespace

TEST_CASE("segment splits on terminal punctuation followed by a capital") {
    const auto sents = segment("Pt stable. Discharged home.");
    REQUIRE(sents.size() == 2);
    CHECK(sents[0] == "Pt stable.");
    CHECK(sents[1] == "Discharged home.");
}

TEST_CASE("segment edge cases") {
    CHECK(segment("").empty());
    const auto single = segment("no terminal punctuation");
    REQUIRE(single.size() == 1);
    CHECK(single[0] == "no terminal punctuation");
}

TEST_CASE("segment respects the clinical abbreviation blocklist") {
    const auto sents = segment("Seen by Dr. Smith today. Continue meds b.i.d. and review daily.");
    REQUIRE(sents.size() == 2);
    CHECK(sents[0] == "Seen by Dr. Smith today.");
    CHECK(sents[1] == "Continue meds b.i.d. and review daily.");
}

TEST_CASE("segment treats newlines as boundaries and never emits blanks") {
    const auto sents = segment("First line\nSecond line.\n\nThird");
    REQUIRE(sents.size() == 3);
    for (const auto& s : sents) CHECK_FALSE(trim(s).empty());
}

TEST_CASE("segment preserves non-whitespace characters in order") {
    Splitmix64 rng(99);
    const std::string pieces[] = {"Pt stable.", "BP 120/80!", "Plan?", "seen by team", "Dr. Ady reviewed."};
    for (int trial = 0; trial < 50; ++trial) {
        std::string text;
        const int n = 1 + static_cast<int>(rng.next_below(5));
        for (int i = 0; i < n; ++i) {
            if (i) text += rng.next_below(2) ? " " : "\n";
            text += pieces[rng.next_below(5)];
        }
        std::string joined;
        for (const auto& s : segment(text)) joined += s;
        CHECK(non_whitespace(joined) == non_whitespace(text));
    }
}

TEST_CASE("mean static embedding averages in-vocabulary token vectors") {
    std::unordered_map<std::string, std::vector<double>> vectors{
        {"alpha", {1.0, 2.0}},
        {"beta", {3.0, 6.0}},
    };
    MeanStaticBackend backend(std::move(vectors), 2);

    SUBCASE("identical tokens give the token vector") {
        const auto r = backend.embed("alpha alpha alpha");
        CHECK(r.values[0] == doctest::Approx(1.0));
        CHECK(r.values[1] == doctest::Approx(2.0));
        CHECK_FALSE(r.all_oov);
    }
    SUBCASE("two tokens give the arithmetic mean") {
        const auto r = backend.embed("alpha beta");
        CHECK(r.values[0] == doctest::Approx(2.0));
        CHECK(r.values[1] == doctest::Approx(4.0));
    }
    SUBCASE("all tokens out of vocabulary yields zero vector with flag") {
        const auto r = backend.embed("gamma delta");
        CHECK(r.values[0] == 0.0);
        CHECK(r.values[1] == 0.0);
        CHECK(r.all_oov);
    }
    SUBCASE("out of vocabulary tokens are skipped") {
        const auto r = backend.embed("alpha gamma");
        CHECK(r.values[0] == doctest::Approx(1.0));
    }
}

TEST_CASE("mean static embedding is token-order invariant") {
    std::unordered_map<std::string, std::vector<double>> vectors;
    Splitmix64 rng(17);
    const char* words[] = {"one", "two", "three", "four", "five"};
    for (const char* w : words) {
        std::vector<double> v(4);
        for (double& x : v) x = rng.next_gaussian();
        vectors[w] = v;
    }
    MeanStaticBackend backend(std::move(vectors), 4);
    const auto a = backend.embed("one two three four");
    const auto b = backend.embed("four three two one");
    for (std::size_t i = 0; i < 4; ++i) CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-12));
}

TEST_CASE("embedding backends are deterministic") {
    HashedSentenceBackend backend(16);
    const auto a = backend.embed("the same sentence");
    const auto b = backend.embed("the same sentence");
    CHECK(a.values == b.values);
    const auto c = backend.embed("a different sentence");
    CHECK(a.values != c.values);
    CHECK(backend.dimension() == 16);
}

TEST_CASE("word vector file round trip") {
    const std::string path = "test_vectors.txt";
    {
        std::ofstream out(path);
        out << "alpha 0.5 -1.25\nbeta 2 4\n";
    }
    MeanStaticBackend backend = MeanStaticBackend::load(path);
    CHECK(backend.dimension() == 2);
    const auto r = backend.embed("ALPHA");
    CHECK(r.values[0] == doctest::Approx(0.5));
    CHECK(r.values[1] == doctest::Approx(-1.25));
    std::remove(path.c_str());
}
