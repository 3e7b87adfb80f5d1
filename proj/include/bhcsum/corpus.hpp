#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "bhcsum/errors.hpp"
#include "bhcsum/rng.hpp"
#include "bhcsum/sentencize.hpp"
#include "bhcsum/embedding.hpp"
#include "bhcsum/text.hpp"

namespace bhcsum {

enum class DocCategory { nursing, physician, radiology, discharge, other };

inline std::string to_string(DocCategory c) {
    switch (c) {
        case DocCategory::nursing: return "nursing";
        case DocCategory::physician: return "physician";
        case DocCategory::radiology: return "radiology";
        case DocCategory::discharge: return "discharge";
        case DocCategory::other: return "other";
    }
    return "other";
}

inline DocCategory doc_category_from_string(const std::string& s) {
    if (s == "nursing") return DocCategory::nursing;
    if (s == "physician") return DocCategory::physician;
    if (s == "radiology") return DocCategory::radiology;
    if (s == "discharge") return DocCategory::discharge;
    if (s == "other") return DocCategory::other;
    throw DataError("unknown document category: " + s);
}

struct Document {
    std::string doc_id;
    DocCategory category = DocCategory::other;
    std::string author_id;
    std::int64_t timestamp = 0;  // seconds since epoch, UTC
    std::string text;
};

// One inpatient encounter: chronologically ordered source documents plus
// the reference summary pulled out of the discharge summary.
struct Admission {
    std::string admission_id;
    std::vector<Document> documents;
    std::string reference_bhc;
};

struct CorpusSplit {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Timestamps. Strict ISO-8601 "YYYY-MM-DDTHH:MM:SS" with optional "Z";
// parsed with a portable days-from-civil conversion so sorting does not
// depend on the host timezone machinery.

namespace detail {

inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

}  // namespace detail

inline std::int64_t parse_iso8601(const std::string& s) {
    int y, mo, d, h, mi, se;
    char t;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &t, &h, &mi, &se) != 7 ||
        (t != 'T' && t != ' ')) {
        throw DataError("bad ISO-8601 timestamp: " + s);
    }
    return detail::days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se;
}

inline std::string format_iso8601(std::int64_t epoch) {
    std::int64_t days = epoch / 86400;
    std::int64_t rem = epoch % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    // Inverse of days_from_civil.
    days += 719468;
    const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(days - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y + (m <= 2)), m, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem % 3600) / 60),
                  static_cast<long long>(rem % 60));
    return std::string(buf);
}

// ---------------------------------------------------------------------------
// BHC section extraction.

inline std::vector<std::string> default_bhc_header_patterns() {
    return {
        R"(brief\s+hospital\s+course\s*:?)",
        R"(summary\s+of\s+hospital\s+course\s*:?)",
        R"(hospital\s+course\s*:?)",
    };
}

namespace detail {

// Generic "next section" heading: a line of plain words ending in a colon.
inline bool looks_like_section_header(const std::string& line) {
    static const std::regex kHeader(R"(^\s*[A-Za-z][A-Za-z0-9 \-/()]{0,60}:\s*$)");
    return std::regex_match(line, kHeader);
}

}  // namespace detail

// Returns the text between the first matching BHC header and the next
// section header (or end of note). Absence is a value: no header, or an
// empty body, yields nullopt and the admission is later dropped.
inline std::optional<std::string> extract_bhc_section(const std::string& discharge_text,
                                                      const std::vector<std::string>& header_patterns) {
    if (header_patterns.empty()) throw DataError("extract_bhc_section: no header patterns");
    std::vector<std::regex> regs;
    regs.reserve(header_patterns.size());
    for (const auto& p : header_patterns) {
        regs.emplace_back(p, std::regex::icase | std::regex::ECMAScript);
    }
    const std::vector<std::string> lines = split_lines(discharge_text);
    std::size_t header_line = lines.size();
    std::string same_line_rest;
    for (std::size_t i = 0; i < lines.size() && header_line == lines.size(); ++i) {
        for (const auto& re : regs) {
            std::smatch m;
            if (std::regex_search(lines[i], m, re)) {
                header_line = i;
                same_line_rest = trim(m.suffix().str());
                break;
            }
        }
    }
    if (header_line == lines.size()) return std::nullopt;

    std::string body;
    if (!same_line_rest.empty()) body = same_line_rest;
    for (std::size_t i = header_line + 1; i < lines.size(); ++i) {
        if (detail::looks_like_section_header(lines[i])) break;
        if (!body.empty()) body += '\n';
        body += lines[i];
    }
    body = trim(body);
    if (body.empty()) return std::nullopt;
    return body;
}

// ---------------------------------------------------------------------------
// Note cleaning: drop boilerplate matches, collapse whitespace runs to a
// single space but keep paragraph breaks. Idempotent.

inline std::string clean_note(const std::string& text, const std::vector<std::string>& boilerplate_patterns) {
    std::string s = text;
    for (const auto& p : boilerplate_patterns) {
        const std::regex re(p, std::regex::icase | std::regex::ECMAScript);
        s = std::regex_replace(s, re, "");
    }
    // Normalise: split into paragraphs on blank lines, collapse the rest.
    std::vector<std::string> paragraphs;
    std::string current;
    std::size_t i = 0;
    auto flush_paragraph = [&]() {
        std::string t = trim(current);
        if (!t.empty()) paragraphs.push_back(std::move(t));
        current.clear();
    };
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (c == '\n') {
            std::size_t j = i;
            int newlines = 0;
            while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) {
                if (s[j] == '\n') ++newlines;
                ++j;
            }
            if (newlines >= 2) {
                flush_paragraph();
            } else if (!current.empty()) {
                current += ' ';
            }
            i = j;
        } else if (std::isspace(c)) {
            std::size_t j = i;
            while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j])) && s[j] != '\n') ++j;
            if (j < s.size() && s[j] == '\n') {
                i = j;  // let the newline branch decide
            } else {
                if (!current.empty() && j < s.size()) current += ' ';
                i = j;
            }
        } else {
            current.push_back(s[i]);
            ++i;
        }
    }
    flush_paragraph();
    std::string out;
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
        if (p) out += "\n\n";
        out += paragraphs[p];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Source assembly: concatenate documents chronologically, segment, and for
// encounters over the sentence limit keep the top and bottom halves.

inline std::vector<SentenceRecord> assemble_source(const Admission& admission, int max_sentences = 1000) {
    if (max_sentences < 2 || max_sentences % 2 != 0) {
        throw DataError("assemble_source: max_sentences must be even and >= 2");
    }
    std::vector<const Document*> docs;
    docs.reserve(admission.documents.size());
    for (const auto& d : admission.documents) {
        if (!trim(d.text).empty()) docs.push_back(&d);
    }
    if (docs.empty()) throw EmptyAdmission("no non-empty documents in admission " + admission.admission_id);
    std::stable_sort(docs.begin(), docs.end(), [](const Document* a, const Document* b) {
        if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
        return a->doc_id < b->doc_id;
    });

    std::vector<SentenceRecord> records;
    int position = 0;
    for (const Document* d : docs) {
        for (auto& sent : segment(d->text)) {
            SentenceRecord rec;
            rec.admission_id = admission.admission_id;
            rec.doc_id = d->doc_id;
            rec.position = position++;
            rec.text = std::move(sent);
            records.push_back(std::move(rec));
        }
    }
    const std::size_t limit = static_cast<std::size_t>(max_sentences);
    if (records.size() > limit) {
        const std::size_t half = limit / 2;
        std::vector<SentenceRecord> kept;
        kept.reserve(limit);
        for (std::size_t i = 0; i < half; ++i) kept.push_back(std::move(records[i]));
        for (std::size_t i = records.size() - half; i < records.size(); ++i) kept.push_back(std::move(records[i]));
        return kept;
    }
    return records;
}

// ---------------------------------------------------------------------------
// Splits: deterministic shuffle under seed, then 80/10/10 with the train
// bucket absorbing the remainder.

inline CorpusSplit make_splits(std::vector<std::string> admission_ids, std::uint64_t seed) {
    if (admission_ids.size() < 10) {
        throw TooFewAdmissions("make_splits needs at least 10 admissions, got " +
                               std::to_string(admission_ids.size()));
    }
    std::sort(admission_ids.begin(), admission_ids.end());
    Splitmix64 rng(derive_seed(seed, "corpus.splits"));
    rng.shuffle(admission_ids);
    const std::size_t n = admission_ids.size();
    const std::size_t n_val = n / 10;
    const std::size_t n_test = n / 10;
    const std::size_t n_train = n - n_val - n_test;
    CorpusSplit split;
    split.seed = seed;
    split.train.assign(admission_ids.begin(), admission_ids.begin() + n_train);
    split.validation.assign(admission_ids.begin() + n_train, admission_ids.begin() + n_train + n_val);
    split.test.assign(admission_ids.begin() + n_train + n_val, admission_ids.end());
    return split;
}

// ---------------------------------------------------------------------------
// JSONL serialisation. Raw records carry "discharge_summary"; prepared
// records carry "reference_bhc" instead.

using Json = nlohmann::json;

struct RawAdmission {
    std::string admission_id;
    std::vector<Document> documents;
    std::string discharge_summary;
};

inline Json document_to_json(const Document& d) {
    return Json{{"doc_id", d.doc_id},
                {"category", to_string(d.category)},
                {"author_id", d.author_id},
                {"timestamp", format_iso8601(d.timestamp)},
                {"text", d.text}};
}

inline Document document_from_json(const Json& j) {
    Document d;
    d.doc_id = j.at("doc_id").get<std::string>();
    d.category = doc_category_from_string(j.at("category").get<std::string>());
    d.author_id = j.at("author_id").get<std::string>();
    d.timestamp = parse_iso8601(j.at("timestamp").get<std::string>());
    d.text = j.at("text").get<std::string>();
    return d;
}

inline Json admission_to_json(const Admission& a) {
    Json docs = Json::array();
    for (const auto& d : a.documents) docs.push_back(document_to_json(d));
    return Json{{"admission_id", a.admission_id}, {"documents", docs}, {"reference_bhc", a.reference_bhc}};
}

inline Admission admission_from_json(const Json& j) {
    Admission a;
    a.admission_id = j.at("admission_id").get<std::string>();
    for (const auto& dj : j.at("documents")) a.documents.push_back(document_from_json(dj));
    a.reference_bhc = j.at("reference_bhc").get<std::string>();
    return a;
}

inline Json raw_admission_to_json(const RawAdmission& a) {
    Json docs = Json::array();
    for (const auto& d : a.documents) docs.push_back(document_to_json(d));
    return Json{{"admission_id", a.admission_id}, {"documents", docs}, {"discharge_summary", a.discharge_summary}};
}

inline RawAdmission raw_admission_from_json(const Json& j) {
    RawAdmission a;
    a.admission_id = j.at("admission_id").get<std::string>();
    for (const auto& dj : j.at("documents")) a.documents.push_back(document_from_json(dj));
    a.discharge_summary = j.at("discharge_summary").get<std::string>();
    return a;
}

template <typename T, typename FromJson>
std::vector<T> read_jsonl(const std::string& path, FromJson from_json) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open JSONL file: " + path);
    std::vector<T> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw DataError("bad JSONL record at " + path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<Admission> read_corpus_jsonl(const std::string& path) {
    return read_jsonl<Admission>(path, [](const Json& j) { return admission_from_json(j); });
}

inline std::vector<RawAdmission> read_raw_corpus_jsonl(const std::string& path) {
    return read_jsonl<RawAdmission>(path, [](const Json& j) { return raw_admission_from_json(j); });
}

inline void write_corpus_jsonl(const std::string& path, const std::vector<Admission>& admissions) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write JSONL file: " + path);
    for (const auto& a : admissions) out << admission_to_json(a).dump() << '\n';
}

inline void write_raw_corpus_jsonl(const std::string& path, const std::vector<RawAdmission>& admissions) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write JSONL file: " + path);
    for (const auto& a : admissions) out << raw_admission_to_json(a).dump() << '\n';
}

// Ingest one raw admission: extract the BHC reference from the discharge
// summary, clean the remaining notes, drop empties. Returns nullopt when
// the admission has no usable BHC (it is then excluded from splits).
inline std::optional<Admission> ingest_admission(const RawAdmission& raw,
                                                 const std::vector<std::string>& bhc_patterns,
                                                 const std::vector<std::string>& boilerplate_patterns) {
    auto bhc = extract_bhc_section(raw.discharge_summary, bhc_patterns);
    if (!bhc) return std::nullopt;
    Admission adm;
    adm.admission_id = raw.admission_id;
    adm.reference_bhc = *bhc;
    for (const auto& doc : raw.documents) {
        if (doc.category == DocCategory::discharge) continue;  // only its BHC survives
        Document cleaned = doc;
        cleaned.text = clean_note(doc.text, boilerplate_patterns);
        if (cleaned.text.empty()) continue;
        adm.documents.push_back(std::move(cleaned));
    }
    if (adm.documents.empty()) return std::nullopt;
    std::stable_sort(adm.documents.begin(), adm.documents.end(), [](const Document& a, const Document& b) {
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        return a.doc_id < b.doc_id;
    });
    return adm;
}

inline std::vector<Admission> ingest_corpus(const std::vector<RawAdmission>& raw,
                                            const std::vector<std::string>& bhc_patterns,
                                            const std::vector<std::string>& boilerplate_patterns) {
    std::vector<Admission> out;
    for (const auto& r : raw) {
        if (auto a = ingest_admission(r, bhc_patterns, boilerplate_patterns)) out.push_back(std::move(*a));
    }
    std::sort(out.begin(), out.end(),
              [](const Admission& a, const Admission& b) { return a.admission_id < b.admission_id; });
    return out;
}

}  // namespace bhcsum
