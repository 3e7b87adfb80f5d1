#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "bhcsum/concepts.hpp"
#include "bhcsum/corpus.hpp"
#include "bhcsum/errors.hpp"
#include "bhcsum/rng.hpp"

namespace bhcsum {

// Built-in dictionary used by the synthetic corpus. Surfaces are chosen so
// that no single-word surface appears in the generator's filler or template
// vocabulary; the planted-equals-extracted property depends on that.
inline ConceptDictionary default_concept_dictionary() {
    ConceptDictionary dict;
    const struct {
        const char* surface;
        const char* id;
        const char* type;
    } kEntries[] = {
        {"atrial fibrillation", "P001", "T-11"},
        {"congestive heart failure", "P002", "T-11"},
        {"sepsis", "P003", "T-11"},
        {"pneumonia", "P004", "T-11"},
        {"cerebral infarction", "P005", "T-11"},
        {"acute kidney injury", "P006", "T-11"},
        {"urinary tract infection", "P007", "T-11"},
        {"gastrointestinal bleeding", "P008", "T-11"},
        {"respiratory distress", "P009", "T-18"},
        {"chest pain", "P010", "T-18"},
        {"hypoxia", "P011", "T-18"},
        {"delirium", "P012", "T-11"},
        {"hyponatremia", "P013", "T-11"},
        {"anemia", "P014", "T-11"},
        {"hypertension", "P015", "T-11"},
        {"hyperlipidemia", "P016", "T-11"},
        {"pleural effusion", "P017", "T-29"},
        {"deep vein thrombosis", "P018", "T-11"},
        {"pulmonary embolism", "P019", "T-11"},
        {"cellulitis", "P020", "T-11"},
        {"pancreatitis", "P021", "T-11"},
        {"dysphagia", "P022", "T-18"},
        {"malnutrition", "P023", "T-18"},
        {"staphylococcus aureus", "P024", "T-35"},
        {"tracheostomy tube", "P025", "T-38"},
        {"warfarin", "I001", "T-9"},
        {"apixaban", "I002", "T-9"},
        {"ceftriaxone", "I003", "T-9"},
        {"vancomycin", "I004", "T-9"},
        {"furosemide", "I005", "T-26"},
        {"metoprolol", "I006", "T-26"},
        {"amlodipine", "I007", "T-27"},
        {"insulin", "I008", "T-55"},
        {"heparin", "I009", "T-55"},
        {"hemodialysis", "I010", "T-39"},
        {"thrombolysis", "I011", "T-39"},
        {"intubation", "I012", "T-39"},
        {"physiotherapy", "I013", "T-39"},
        {"anticoagulation", "I014", "T-55"},
    };
    for (const auto& e : kEntries) dict.add(e.surface, e.id, e.type);
    return dict;
}

struct SynthConfig {
    int n_admissions = 100;
    std::uint64_t seed = 7;
    int min_documents = 4;
    int max_documents = 8;  // generator clamps to the 3..30 admission shape
    int min_problems = 2;
    int max_problems = 4;
    int min_interventions = 1;
    int max_interventions = 2;
    int min_verbatim = 1;  // reference sentences copied verbatim from sources
    int max_verbatim = 5;
    int min_filler_per_doc = 2;
    int max_filler_per_doc = 5;
    // Distractor problems planted in contexts the filters exclude (negated,
    // familial, facility); they never reach the reference or the guidance.
    int min_distractors = 0;
    int max_distractors = 1;
};

struct SyntheticAdmission {
    Admission admission;
    RawAdmission raw;          // same encounter in ingest input form
    std::size_t planted_mentions = 0;  // mention count planted in source documents
};

namespace detail {

struct ConceptSurface {
    std::string surface;
    std::string concept_id;
};

inline void collect_surfaces(const ConceptDictionary& dict, std::vector<ConceptSurface>& problems,
                             std::vector<ConceptSurface>& interventions) {
    for (const auto& [tokens, entry] : dict.entries()) {
        std::string surface;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) surface += ' ';
            surface += tokens[i];
        }
        if (dict.group_of(entry.type_id) == ConceptGroup::problem) {
            problems.push_back({surface, entry.concept_id});
        } else {
            interventions.push_back({surface, entry.concept_id});
        }
    }
}

inline const std::vector<std::string>& filler_templates() {
    static const std::vector<std::string> kFillers = {
        "Vitals remained within expected limits overnight.",
        "Routine observations continued through the shift.",
        "Intake and output were recorded hourly.",
        "Mobility exercises were performed at the bedside.",
        "Sleep pattern was undisturbed during the night.",
        "Appetite was fair at breakfast and lunch.",
        "Skin integrity checks were completed twice daily.",
        "Bloods were drawn for the morning panel.",
        "The morning round reviewed current medications.",
        "Exercise session was tolerated well.",
        "Dietary intake was supplemented with snacks.",
        "Bowel chart remained unremarkable.",
        "Pain scores stayed low throughout the day.",
        "Oxygen saturations were satisfactory on room air.",
        "Fluid balance was reviewed in the afternoon.",
        "Night staff documented a settled period.",
        "Transfer checklist was updated by the coordinator.",
        "Relatives were updated by telephone.",
        "Weight was stable compared with admission.",
        "Observation entry was logged by the duty nurse.",
        "Evening handover noted steady progress.",
        "Hydration was encouraged during the day.",
        "Call bell remained within reach at all times.",
        "Mood was bright during the afternoon visit.",
        "Blood sugars were charted before meals.",
        "Dressing changes were completed in the morning.",
        "The patient walked the corridor with supervision.",
        "A repeat blood draw was scheduled for tomorrow.",
        "Compression stockings were worn throughout the day.",
        "The bedside monitor alarmed briefly and self-resolved.",
        "Speech assessment was booked for later in the week.",
        "Handover noted all outstanding tasks complete.",
        "Pharmacy reviewed the medication chart.",
        "The drug round finished on schedule.",
        "Sat out in the chair for an hour after lunch.",
        "Visitors attended during the afternoon.",
        "An interpreter supported the morning consultation.",
        "Equipment checks were signed off by the charge nurse.",
        "The care plan was updated after the round.",
        "Falls precautions remained in place.",
        "Telemetry leads were repositioned once.",
        "A social review was requested for placement planning.",
        "Nutrition supplements were offered between meals.",
        "Mouth care was provided regularly.",
    };
    return kFillers;
}

}  // namespace detail

// Seed-deterministic synthetic encounters: a handful of documents per
// admission with planted concept mentions, a reference BHC that opens with
// sentences copied verbatim from the sources and continues with
// paraphrase-template sentences over the planted problems.
inline std::vector<SyntheticAdmission> generate_synthetic_corpus_full(const SynthConfig& cfg,
                                                                      const ConceptDictionary& dict) {
    if (dict.empty()) throw DataError("synthetic corpus needs a non-empty dictionary");
    std::vector<detail::ConceptSurface> problems, interventions;
    detail::collect_surfaces(dict, problems, interventions);
    if (problems.empty() || interventions.empty()) {
        throw DataError("synthetic corpus needs both problem and intervention dictionary entries");
    }

    std::vector<SyntheticAdmission> out;
    out.reserve(static_cast<std::size_t>(cfg.n_admissions));
    for (int a = 0; a < cfg.n_admissions; ++a) {
        Splitmix64 rng(derive_seed(cfg.seed, "synth.admission." + std::to_string(a)));
        SyntheticAdmission syn;
        char id_buf[32];
        std::snprintf(id_buf, sizeof(id_buf), "synth-%05d", a);
        syn.admission.admission_id = id_buf;

        auto pick_distinct = [&](const std::vector<detail::ConceptSurface>& pool, int lo, int hi) {
            const int want = lo + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(hi - lo + 1)));
            std::vector<std::size_t> idx(pool.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            rng.shuffle(idx);
            std::vector<detail::ConceptSurface> picked;
            for (int i = 0; i < want && i < static_cast<int>(pool.size()); ++i) picked.push_back(pool[idx[i]]);
            return picked;
        };
        const auto adm_problems = pick_distinct(problems, cfg.min_problems, cfg.max_problems);
        const auto adm_interventions = pick_distinct(interventions, cfg.min_interventions, cfg.max_interventions);

        // Salient sentences carry the clinical story; some are later copied
        // verbatim into the reference.
        std::vector<std::string> salient;
        std::size_t planted = 0;
        auto plant = [&](const std::string&) { ++planted; };
        {
            const auto& p0 = adm_problems[0];
            const auto& v0 = adm_interventions[0];
            salient.push_back("Patient admitted with " + p0.surface + ".");
            plant(p0.surface);
            salient.push_back("Initial evaluation confirmed " + p0.surface + " and treatment with " + v0.surface +
                              " was started.");
            plant(p0.surface);
            plant(v0.surface);
            for (std::size_t i = 1; i < adm_problems.size(); ++i) {
                const auto& v = adm_interventions[i % adm_interventions.size()];
                salient.push_back("Course was complicated by " + adm_problems[i].surface + " requiring " +
                                  v.surface + ".");
                plant(adm_problems[i].surface);
                plant(v.surface);
            }
            salient.push_back("Repeat assessment showed " + p0.surface + " improving on " + v0.surface + ".");
            plant(p0.surface);
            plant(v0.surface);
            salient.push_back("Patient discharged home once " + p0.surface + " settled.");
            plant(p0.surface);
        }

        // Restatements placed in middle documents keep the planted problems
        // recurring across the admission.
        std::vector<std::string> restatements;
        for (const auto& p : adm_problems) {
            restatements.push_back("Ongoing review noted " + p.surface + " persisting.");
            plant(p.surface);
        }

        std::vector<std::string> extras;
        {
            const int span_d = cfg.max_distractors - cfg.min_distractors + 1;
            const int want = cfg.min_distractors +
                             static_cast<int>(rng.next_below(static_cast<std::uint64_t>(span_d)));
            std::vector<std::size_t> order(problems.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            rng.shuffle(order);
            int taken = 0;
            for (std::size_t idx : order) {
                if (taken >= want) break;
                const auto& cand = problems[idx];
                bool is_real = false;
                for (const auto& p : adm_problems) is_real |= p.concept_id == cand.concept_id;
                if (is_real) continue;
                extras.push_back("On review there was no " + cand.surface + ".");
                plant(cand.surface);
                switch (taken % 3) {
                    case 0:
                        extras.push_back("Screening was negative for " + cand.surface + ".");
                        break;
                    case 1:
                        extras.push_back("Family history includes " + cand.surface + ".");
                        break;
                    default:
                        extras.push_back("Previously attended the " + cand.surface + " clinic.");
                        break;
                }
                plant(cand.surface);
                ++taken;
            }
        }

        // Distribute sentences over documents.
        const int span = cfg.max_documents - cfg.min_documents + 1;
        int n_docs = cfg.min_documents + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(span)));
        n_docs = std::max(3, std::min(30, n_docs));
        const auto& fillers = detail::filler_templates();
        std::vector<std::size_t> filler_order(fillers.size());
        for (std::size_t i = 0; i < filler_order.size(); ++i) filler_order[i] = i;
        rng.shuffle(filler_order);
        std::size_t filler_cursor = 0;
        // Templates are drawn without replacement until the pool is
        // exhausted, keeping filler sentences lexically diverse within an
        // admission.
        auto next_filler = [&]() {
            const std::string& s = fillers[filler_order[filler_cursor % filler_order.size()]];
            ++filler_cursor;
            if (filler_cursor % filler_order.size() == 0) rng.shuffle(filler_order);
            return s;
        };

        std::vector<std::string> middle_pool = restatements;
        for (const auto& e : extras) middle_pool.push_back(e);
        for (std::size_t i = 2; i + 2 < salient.size(); ++i) middle_pool.push_back(salient[i]);
        rng.shuffle(middle_pool);

        const DocCategory kMiddleCats[] = {DocCategory::nursing, DocCategory::radiology, DocCategory::other,
                                           DocCategory::physician};
        const std::int64_t base_ts = parse_iso8601("2019-03-01T08:00:00");
        std::size_t pool_cursor = 0;
        for (int d = 0; d < n_docs; ++d) {
            Document doc;
            doc.doc_id = syn.admission.admission_id + "-doc-" + std::to_string(d);
            doc.timestamp = base_ts + static_cast<std::int64_t>(d) * 6 * 3600;
            doc.author_id = "author-" + std::to_string(rng.next_below(6));
            std::vector<std::string> sentences;
            if (d == 0) {
                doc.category = DocCategory::physician;
                sentences.push_back(salient[0]);
                sentences.push_back(salient[1]);
            } else if (d == n_docs - 1) {
                doc.category = DocCategory::physician;
                sentences.push_back(salient[salient.size() - 2]);
                sentences.push_back(salient.back());
            } else {
                doc.category = kMiddleCats[rng.next_below(4)];
                for (int take = 0; take < 2 && pool_cursor < middle_pool.size(); ++take) {
                    sentences.push_back(middle_pool[pool_cursor++]);
                }
            }
            const int fill_span = cfg.max_filler_per_doc - cfg.min_filler_per_doc + 1;
            const int n_fill =
                cfg.min_filler_per_doc + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(fill_span)));
            for (int f = 0; f < n_fill; ++f) {
                const std::size_t at = rng.next_below(sentences.size() + 1);
                sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(at), next_filler());
            }
            for (std::size_t s = 0; s < sentences.size(); ++s) {
                if (s) doc.text += ' ';
                doc.text += sentences[s];
            }
            syn.admission.documents.push_back(std::move(doc));
        }
        // Any story sentences that did not fit are appended to the middle doc.
        while (pool_cursor < middle_pool.size() && syn.admission.documents.size() > 2) {
            auto& doc = syn.admission.documents[1 + pool_cursor % (syn.admission.documents.size() - 2)];
            doc.text += ' ';
            doc.text += middle_pool[pool_cursor++];
        }

        // Reference: verbatim opening drawn from the salient pool, then
        // paraphrase-template sentences over the planted problems.
        const int verbatim_span = cfg.max_verbatim - cfg.min_verbatim + 1;
        int n_verbatim =
            cfg.min_verbatim + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(verbatim_span)));
        n_verbatim = std::min<int>(n_verbatim, static_cast<int>(salient.size()));
        std::string reference;
        for (int i = 0; i < n_verbatim; ++i) {
            if (!reference.empty()) reference += ' ';
            reference += salient[static_cast<std::size_t>(i)];
        }
        const char* kParaphrases[] = {
            "%s was managed.",
            "%s required attention.",
            "%s was monitored.",
        };
        for (std::size_t i = 0; i < adm_problems.size(); ++i) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), kParaphrases[i % 3], adm_problems[i].surface.c_str());
            std::string sentence(buf);
            sentence[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sentence[0])));
            if (!reference.empty()) reference += ' ';
            reference += sentence;
        }
        if (!adm_interventions.empty()) {
            if (!reference.empty()) reference += ' ';
            reference += "Treatment with " + adm_interventions[0].surface + " continues.";
        }
        syn.admission.reference_bhc = reference;
        syn.planted_mentions = planted;

        // Raw form for the ingest path: same documents plus a discharge
        // summary carrying the reference under a BHC header.
        syn.raw.admission_id = syn.admission.admission_id;
        syn.raw.documents = syn.admission.documents;
        syn.raw.discharge_summary = "Admission Details:\nRoutine intake information recorded.\n\n"
                                    "Brief Hospital Course:\n" +
                                    reference +
                                    "\n\nMedications on Discharge:\nContinue current plan.";
        Document discharge_doc;
        discharge_doc.doc_id = syn.admission.admission_id + "-discharge";
        discharge_doc.category = DocCategory::discharge;
        discharge_doc.author_id = "author-0";
        discharge_doc.timestamp = base_ts + static_cast<std::int64_t>(n_docs) * 6 * 3600;
        discharge_doc.text = syn.raw.discharge_summary;
        syn.raw.documents.push_back(std::move(discharge_doc));

        out.push_back(std::move(syn));
    }
    return out;
}

inline std::vector<Admission> generate_synthetic_corpus(int n_admissions, std::uint64_t seed,
                                                        const ConceptDictionary& dict) {
    SynthConfig cfg;
    cfg.n_admissions = n_admissions;
    cfg.seed = seed;
    std::vector<Admission> out;
    for (auto& syn : generate_synthetic_corpus_full(cfg, dict)) out.push_back(std::move(syn.admission));
    return out;
}

// Deterministic word-vector file over the corpus vocabulary: each token's
// direction is seeded by the token itself, its norm scaled by inverse
// admission frequency so ubiquitous function words contribute little to
// mean-pooled sentence embeddings. One token per line: "token v1 ... vd".
inline void write_word_vectors(const std::string& path, const std::vector<Admission>& corpus, std::size_t dim,
                               std::uint64_t seed) {
    std::map<std::string, std::size_t> admission_freq;
    for (const auto& adm : corpus) {
        std::set<std::string> seen;
        for (const auto& doc : adm.documents) {
            for (const auto& t : word_tokens(doc.text)) seen.insert(to_lower(t.text));
        }
        for (const auto& t : word_tokens(adm.reference_bhc)) seen.insert(to_lower(t.text));
        for (const auto& token : seen) admission_freq[token] += 1;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write word-vector file: " + path);
    out.precision(8);
    for (const auto& [token, freq] : admission_freq) {
        Splitmix64 rng(derive_seed(seed, "wordvec." + token));
        const double weight = 1.0 / std::sqrt(static_cast<double>(freq));
        out << token;
        for (std::size_t d = 0; d < dim; ++d) out << ' ' << weight * rng.next_gaussian();
        out << '\n';
    }
}

}  // namespace bhcsum
