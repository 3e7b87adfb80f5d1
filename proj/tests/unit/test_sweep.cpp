#include <doctest.h>

#include <cstdio>

#include "bhcsum/sweep.hpp"
#include "bhcsum/synthetic.hpp"

using namespace bhcsum;

TEST_CASE("sweep rows repeat when sources have a single sentence") {
    Admission adm;
    adm.admission_id = "one";
    Document d;
    d.doc_id = "d0";
    d.timestamp = 1;
    d.text = "Only sentence here.";
    adm.documents.push_back(d);
    adm.reference_bhc = "Only sentence here.";

    const RankFn rank_fn = [](const std::vector<SentenceRecord>& r) { return random_rank(r, 5); };
    const SweepTable table = sweep_sentence_limits(rank_fn, {adm}, {1, 2, 3, 5, 10, 15});
    for (const auto& metric : {"rouge1", "rouge2", "rougeLsum"}) {
        const double first = table.f1_at(1, metric);
        for (int k : {2, 3, 5, 10, 15}) {
            CHECK(table.f1_at(k, metric) == doctest::Approx(first));
            CHECK(table.recall_at(k, metric) == doctest::Approx(table.recall_at(1, metric)));
        }
    }
}

TEST_CASE("oracle recall is non-decreasing in k and sweep csv is well formed") {
    const auto dict = default_concept_dictionary();
    const auto corpus = generate_synthetic_corpus(10, 44, dict);
    std::map<std::string, std::string> refs;
    for (const auto& a : corpus) refs[a.admission_id] = a.reference_bhc;
    const RankFn oracle_fn = [&](const std::vector<SentenceRecord>& r) {
        return oracle_rank(r, refs.at(r.front().admission_id));
    };
    const SweepTable table = sweep_sentence_limits(oracle_fn, corpus);
    double prev = -1.0;
    for (int k : default_sweep_ks()) {
        const double rec = table.recall_at(k, "rougeLsum");
        CHECK(rec >= prev - 1e-12);
        prev = rec;
    }
    const std::string path = "test_sweep.csv";
    write_sweep_csv(path, table);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "k,metric,precision,recall,f1");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == default_sweep_ks().size() * 3);
    in.close();
    std::remove(path.c_str());
}
