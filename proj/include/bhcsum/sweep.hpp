#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "bhcsum/corpus.hpp"
#include "bhcsum/ensemble.hpp"
#include "bhcsum/eval.hpp"
#include "bhcsum/extractive.hpp"

namespace bhcsum {

// One row per (k, metric): corpus-mean precision / recall / F1 of the top-k
// extractive summaries against the reference BHC.
struct SweepRow {
    int k = 0;
    std::string metric;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct SweepTable {
    std::string system;
    std::vector<SweepRow> rows;

    double f1_at(int k, const std::string& metric) const {
        for (const auto& r : rows) {
            if (r.k == k && r.metric == metric) return r.f1;
        }
        throw DataError("sweep table has no row for k=" + std::to_string(k) + " metric=" + metric);
    }

    double recall_at(int k, const std::string& metric) const {
        for (const auto& r : rows) {
            if (r.k == k && r.metric == metric) return r.recall;
        }
        throw DataError("sweep table has no row for k=" + std::to_string(k) + " metric=" + metric);
    }
};

inline std::vector<int> default_sweep_ks() { return {1, 2, 3, 5, 10, 15}; }

// Rankings are computed once per admission and reused across every k.
inline SweepTable sweep_sentence_limits(const RankFn& rank_fn, const std::vector<Admission>& admissions,
                                        const std::vector<int>& ks = default_sweep_ks(),
                                        const std::string& system = "extractive", int max_sentences = 1000) {
    if (admissions.empty()) throw DataError("sweep: no admissions");
    const RougeMetric metrics[] = {RougeMetric::rouge1, RougeMetric::rouge2, RougeMetric::rougeLsum};
    std::map<int, std::map<std::string, RougeScore>> acc;
    for (const auto& adm : admissions) {
        const std::vector<SentenceRecord> records = assemble_source(adm, max_sentences);
        const std::vector<RankedSentence> ranked = rank_fn(records);
        for (int k : ks) {
            const std::string text = summary_text(select_top_k(ranked, k));
            for (RougeMetric m : metrics) {
                const RougeScore s = rouge_score(text, adm.reference_bhc, m);
                auto& slot = acc[k][to_string(m)];
                slot.metric = m;
                slot.precision += s.precision;
                slot.recall += s.recall;
                slot.f1 += s.f1;
            }
        }
    }
    SweepTable table;
    table.system = system;
    const double n = static_cast<double>(admissions.size());
    for (int k : ks) {
        for (RougeMetric m : metrics) {
            const RougeScore& s = acc[k][to_string(m)];
            table.rows.push_back({k, to_string(m), s.precision / n, s.recall / n, s.f1 / n});
        }
    }
    return table;
}

inline void write_sweep_csv(const std::string& path, const SweepTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write sweep csv: " + path);
    out << "k,metric,precision,recall,f1\n";
    for (const auto& r : table.rows) {
        out << r.k << ',' << r.metric << ',' << r.precision << ',' << r.recall << ',' << r.f1 << '\n';
    }
}

}  // namespace bhcsum
