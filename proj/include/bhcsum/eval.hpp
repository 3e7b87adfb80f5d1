#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bhcsum/concepts.hpp"
#include "bhcsum/errors.hpp"
#include "bhcsum/sentencize.hpp"
#include "bhcsum/text.hpp"

namespace bhcsum {

enum class RougeMetric { rouge1, rouge2, rougeL, rougeLsum };

inline std::string to_string(RougeMetric m) {
    switch (m) {
        case RougeMetric::rouge1: return "rouge1";
        case RougeMetric::rouge2: return "rouge2";
        case RougeMetric::rougeL: return "rougeL";
        case RougeMetric::rougeLsum: return "rougeLsum";
    }
    return "rouge1";
}

struct RougeScore {
    RougeMetric metric = RougeMetric::rouge1;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline RougeScore make_rouge_score(RougeMetric metric, double hits, double gen_total, double ref_total) {
    RougeScore s;
    s.metric = metric;
    s.precision = gen_total > 0.0 ? hits / gen_total : 0.0;
    s.recall = ref_total > 0.0 ? hits / ref_total : 0.0;
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

// ROUGE tokenisation: lowercase, split on non-alphanumeric runs. The
// optional stemmer is a light plural/participle stripper, off by default.
inline std::string stem_token(const std::string& token) {
    std::string t = token;
    auto ends_with = [&](const char* suf) {
        const std::size_t n = std::char_traits<char>::length(suf);
        return t.size() > n + 2 && t.compare(t.size() - n, n, suf) == 0;
    };
    if (ends_with("ing")) {
        t.erase(t.size() - 3);
    } else if (ends_with("ed")) {
        t.erase(t.size() - 2);
    } else if (t.size() > 3 && t.back() == 's' && t[t.size() - 2] != 's' && t[t.size() - 2] != 'u') {
        t.pop_back();
    }
    return t;
}

inline std::vector<std::string> rouge_tokens(const std::string& text, bool stem = false) {
    std::vector<std::string> out;
    for (const auto& t : word_tokens(text)) {
        std::string lowered = to_lower(t.text);
        out.push_back(stem ? stem_token(lowered) : std::move(lowered));
    }
    return out;
}

namespace detail {

inline std::map<std::vector<std::string>, std::size_t> ngram_counts(const std::vector<std::string>& tokens,
                                                                    std::size_t n) {
    std::map<std::vector<std::string>, std::size_t> counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)] += 1;
    }
    return counts;
}

inline std::vector<std::vector<std::size_t>> lcs_table(const std::vector<std::string>& a,
                                                       const std::vector<std::string>& b) {
    std::vector<std::vector<std::size_t>> dp(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                dp[i][j] = dp[i - 1][j - 1] + 1;
            } else {
                dp[i][j] = std::max(dp[i - 1][j], dp[i][j - 1]);
            }
        }
    }
    return dp;
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    return lcs_table(a, b)[a.size()][b.size()];
}

// Indices into `a` participating in one canonical LCS against `b`.
inline std::vector<std::size_t> lcs_indices(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> indices;
    if (a.empty() || b.empty()) return indices;
    const auto dp = lcs_table(a, b);
    std::size_t i = a.size(), j = b.size();
    while (i > 0 && j > 0) {
        if (a[i - 1] == b[j - 1]) {
            indices.push_back(i - 1);
            --i;
            --j;
        } else if (dp[i - 1][j] > dp[i][j - 1]) {
            --i;
        } else {
            --j;
        }
    }
    std::reverse(indices.begin(), indices.end());
    return indices;
}

}  // namespace detail

inline RougeScore rouge_n(const std::string& generated, const std::string& reference, std::size_t n,
                          bool stem = false) {
    if (n < 1) throw DataError("rouge_n: n must be >= 1");
    const auto gen = rouge_tokens(generated, stem);
    const auto ref = rouge_tokens(reference, stem);
    const auto gen_counts = detail::ngram_counts(gen, n);
    const auto ref_counts = detail::ngram_counts(ref, n);
    double gen_total = 0.0, ref_total = 0.0, hits = 0.0;
    for (const auto& [g, c] : gen_counts) gen_total += static_cast<double>(c);
    for (const auto& [g, c] : ref_counts) ref_total += static_cast<double>(c);
    for (const auto& [g, c] : ref_counts) {
        auto it = gen_counts.find(g);
        if (it != gen_counts.end()) hits += static_cast<double>(std::min(c, it->second));
    }
    return make_rouge_score(n == 1 ? RougeMetric::rouge1 : RougeMetric::rouge2, hits, gen_total, ref_total);
}

inline RougeScore rouge_l(const std::string& generated, const std::string& reference, bool stem = false) {
    const auto gen = rouge_tokens(generated, stem);
    const auto ref = rouge_tokens(reference, stem);
    const double lcs = static_cast<double>(detail::lcs_length(gen, ref));
    return make_rouge_score(RougeMetric::rougeL, lcs, static_cast<double>(gen.size()),
                            static_cast<double>(ref.size()));
}

// Summary-level ROUGE-L: for each reference sentence take the union of LCS
// hit positions against every generated sentence, then count hits with
// per-token clipping on both sides.
inline RougeScore rouge_lsum(const std::string& generated, const std::string& reference, bool stem = false) {
    std::vector<std::vector<std::string>> gen_sents, ref_sents;
    for (const auto& s : segment(generated)) gen_sents.push_back(rouge_tokens(s, stem));
    for (const auto& s : segment(reference)) ref_sents.push_back(rouge_tokens(s, stem));

    std::size_t gen_total = 0, ref_total = 0;
    std::unordered_map<std::string, std::size_t> gen_budget, ref_budget;
    for (const auto& s : gen_sents) {
        gen_total += s.size();
        for (const auto& t : s) gen_budget[t] += 1;
    }
    for (const auto& s : ref_sents) {
        ref_total += s.size();
        for (const auto& t : s) ref_budget[t] += 1;
    }
    if (gen_total == 0 || ref_total == 0) {
        return make_rouge_score(RougeMetric::rougeLsum, 0.0, static_cast<double>(gen_total),
                                static_cast<double>(ref_total));
    }

    double hits = 0.0;
    for (const auto& ref : ref_sents) {
        std::vector<bool> in_union(ref.size(), false);
        for (const auto& gen : gen_sents) {
            for (std::size_t idx : detail::lcs_indices(ref, gen)) in_union[idx] = true;
        }
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (!in_union[i]) continue;
            auto g = gen_budget.find(ref[i]);
            auto r = ref_budget.find(ref[i]);
            if (g != gen_budget.end() && g->second > 0 && r != ref_budget.end() && r->second > 0) {
                hits += 1.0;
                --g->second;
                --r->second;
            }
        }
    }
    return make_rouge_score(RougeMetric::rougeLsum, hits, static_cast<double>(gen_total),
                            static_cast<double>(ref_total));
}

inline RougeScore rouge_score(const std::string& generated, const std::string& reference, RougeMetric metric,
                              bool stem = false) {
    switch (metric) {
        case RougeMetric::rouge1: return rouge_n(generated, reference, 1, stem);
        case RougeMetric::rouge2: return rouge_n(generated, reference, 2, stem);
        case RougeMetric::rougeL: return rouge_l(generated, reference, stem);
        case RougeMetric::rougeLsum: return rouge_lsum(generated, reference, stem);
    }
    throw DataError("unknown rouge metric");
}

// ---------------------------------------------------------------------------
// Concept coverage: proportion of the reference summary's unique concepts
// (per group) that the generated summary also mentions. Filtered mentions
// (negated / familial / non-diagnosis) do not count on either side.

struct ConceptCoverage {
    std::optional<double> pct_problem;
    std::optional<double> pct_intervention;
    std::optional<double> pct_total;
};

inline ConceptCoverage concept_coverage(const std::string& generated, const std::string& reference,
                                        const ConceptDictionary& dict, const ContextFilterConfig& cfg = {}) {
    auto unique_ids = [&](const std::string& text, std::optional<ConceptGroup> group) {
        std::vector<std::string> ids;
        for (const auto& m : extract(text, dict, cfg)) {
            if (m.flags.any()) continue;
            if (group && m.group != *group) continue;
            ids.push_back(m.concept_id);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        return ids;
    };
    auto pct = [&](std::optional<ConceptGroup> group) -> std::optional<double> {
        const auto ref_ids = unique_ids(reference, group);
        if (ref_ids.empty()) return std::nullopt;
        const auto gen_ids = unique_ids(generated, group);
        std::size_t found = 0;
        for (const auto& id : ref_ids) {
            if (std::binary_search(gen_ids.begin(), gen_ids.end(), id)) ++found;
        }
        return 100.0 * static_cast<double>(found) / static_cast<double>(ref_ids.size());
    };
    ConceptCoverage cov;
    cov.pct_problem = pct(ConceptGroup::problem);
    cov.pct_intervention = pct(ConceptGroup::intervention);
    cov.pct_total = pct(std::nullopt);
    return cov;
}

// ---------------------------------------------------------------------------
// Run evaluation and report emission.

struct AdmissionEval {
    std::string admission_id;
    std::map<std::string, RougeScore> rouge;  // keyed by metric name
    ConceptCoverage coverage;
    TermStats generated_terms;
};

struct EvalReport {
    std::string run_id;
    std::size_t n_admissions = 0;
    std::map<std::string, RougeScore> mean_rouge;
    ConceptCoverage mean_coverage;
    double mean_generated_terms = 0.0;
    std::optional<double> mean_term_density;
    std::optional<double> mean_unique_term_density;
    std::vector<AdmissionEval> per_admission;
};

inline EvalReport evaluate_run(const std::map<std::string, std::string>& outputs,
                               const std::map<std::string, std::string>& references,
                               const ConceptDictionary* dict, const std::string& run_id = "run",
                               const ContextFilterConfig& cfg = {}) {
    EvalReport report;
    report.run_id = run_id;
    const RougeMetric metrics[] = {RougeMetric::rouge1, RougeMetric::rouge2, RougeMetric::rougeL,
                                   RougeMetric::rougeLsum};
    std::map<std::string, RougeScore> sums;
    for (auto m : metrics) sums[to_string(m)] = RougeScore{m, 0.0, 0.0, 0.0};
    double cov_prob_sum = 0.0, cov_int_sum = 0.0, cov_tot_sum = 0.0;
    std::size_t cov_prob_n = 0, cov_int_n = 0, cov_tot_n = 0;
    double terms_sum = 0.0, density_sum = 0.0, unique_density_sum = 0.0;
    std::size_t density_n = 0;

    for (const auto& [admission_id, generated] : outputs) {
        auto ref_it = references.find(admission_id);
        if (ref_it == references.end()) {
            throw MissingReference("no reference summary for admission " + admission_id);
        }
        AdmissionEval ae;
        ae.admission_id = admission_id;
        for (auto m : metrics) {
            RougeScore s = rouge_score(generated, ref_it->second, m);
            ae.rouge[to_string(m)] = s;
            auto& acc = sums[to_string(m)];
            acc.precision += s.precision;
            acc.recall += s.recall;
            acc.f1 += s.f1;
        }
        if (dict) {
            ae.coverage = concept_coverage(generated, ref_it->second, *dict, cfg);
            auto gen_mentions = extract(generated, *dict, cfg);
            ae.generated_terms = term_stats(generated, gen_mentions);
            if (ae.coverage.pct_problem) {
                cov_prob_sum += *ae.coverage.pct_problem;
                ++cov_prob_n;
            }
            if (ae.coverage.pct_intervention) {
                cov_int_sum += *ae.coverage.pct_intervention;
                ++cov_int_n;
            }
            if (ae.coverage.pct_total) {
                cov_tot_sum += *ae.coverage.pct_total;
                ++cov_tot_n;
            }
            terms_sum += static_cast<double>(ae.generated_terms.n_terms);
            if (ae.generated_terms.term_density) {
                density_sum += *ae.generated_terms.term_density;
                unique_density_sum += *ae.generated_terms.unique_term_density;
                ++density_n;
            }
        }
        report.per_admission.push_back(std::move(ae));
    }
    report.n_admissions = report.per_admission.size();
    if (report.n_admissions > 0) {
        const double n = static_cast<double>(report.n_admissions);
        for (auto m : metrics) {
            auto& acc = sums[to_string(m)];
            report.mean_rouge[to_string(m)] =
                RougeScore{m, acc.precision / n, acc.recall / n, acc.f1 / n};
        }
        if (cov_prob_n) report.mean_coverage.pct_problem = cov_prob_sum / static_cast<double>(cov_prob_n);
        if (cov_int_n) report.mean_coverage.pct_intervention = cov_int_sum / static_cast<double>(cov_int_n);
        if (cov_tot_n) report.mean_coverage.pct_total = cov_tot_sum / static_cast<double>(cov_tot_n);
        report.mean_generated_terms = terms_sum / n;
        if (density_n) {
            report.mean_term_density = density_sum / static_cast<double>(density_n);
            report.mean_unique_term_density = unique_density_sum / static_cast<double>(density_n);
        }
    }
    return report;
}

inline nlohmann::json rouge_to_json(const RougeScore& s) {
    return nlohmann::json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

inline nlohmann::json coverage_to_json(const ConceptCoverage& c) {
    nlohmann::json j = nlohmann::json::object();
    if (c.pct_problem) j["pct_problem"] = *c.pct_problem;
    if (c.pct_intervention) j["pct_intervention"] = *c.pct_intervention;
    if (c.pct_total) j["pct_total"] = *c.pct_total;
    return j;
}

inline nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [name, score] : report.mean_rouge) metrics[name] = rouge_to_json(score);
    metrics["concept_coverage"] = coverage_to_json(report.mean_coverage);
    metrics["mean_generated_terms"] = report.mean_generated_terms;
    if (report.mean_term_density) metrics["mean_term_density"] = *report.mean_term_density;
    if (report.mean_unique_term_density) metrics["mean_unique_term_density"] = *report.mean_unique_term_density;
    nlohmann::json per = nlohmann::json::array();
    for (const auto& ae : report.per_admission) {
        nlohmann::json ja{{"admission_id", ae.admission_id}};
        for (const auto& [name, score] : ae.rouge) ja[name] = rouge_to_json(score);
        ja["concept_coverage"] = coverage_to_json(ae.coverage);
        per.push_back(std::move(ja));
    }
    return nlohmann::json{{"run_id", report.run_id},
                          {"n_admissions", report.n_admissions},
                          {"metrics", metrics},
                          {"per_admission", per}};
}

inline void write_report_json(const std::string& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write report: " + path);
    out << report_to_json(report).dump(2) << '\n';
}

inline void write_report_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write report: " + path);
    out << "metric,precision,recall,f1\n";
    for (const auto& [name, score] : report.mean_rouge) {
        out << name << ',' << score.precision << ',' << score.recall << ',' << score.f1 << '\n';
    }
}

}  // namespace bhcsum
