#include <doctest.h>

#include <cstdio>
#include <set>

#include "bhcsum/corpus.hpp"

using namespace bhcsum;

namespace {

Document make_doc(const std::string& id, const std::string& text, std::int64_t ts,
                  DocCategory cat = DocCategory::nursing) {
    Document d;
    d.doc_id = id;
    d.category = cat;
    d.author_id = "a1";
    d.timestamp = ts;
    d.text = text;
    return d;
}

}  // namespace

TEST_CASE("extract_bhc_section finds the body between header and next section") {
    const std::string note =
        "Admission Details:\nRoutine info.\n\nBrief Hospital Course:\nPt admitted with chest pain. Improved.\n\n"
        "Medications on Discharge:\naspirin";
    const auto bhc = extract_bhc_section(note, default_bhc_header_patterns());
    REQUIRE(bhc.has_value());
    CHECK(*bhc == "Pt admitted with chest pain. Improved.");
}

TEST_CASE("extract_bhc_section handles same-line content and case") {
    const auto bhc = extract_bhc_section("HOSPITAL COURSE: recovered well", default_bhc_header_patterns());
    REQUIRE(bhc.has_value());
    CHECK(*bhc == "recovered well");
}

TEST_CASE("extract_bhc_section absence cases") {
    CHECK_FALSE(extract_bhc_section("Plan:\nhome", default_bhc_header_patterns()).has_value());
    // A header with an empty body counts as absent.
    CHECK_FALSE(extract_bhc_section("Brief Hospital Course:\n\n", default_bhc_header_patterns()).has_value());
    CHECK_THROWS_AS(extract_bhc_section("x", {}), DataError);
}

TEST_CASE("clean_note strips boilerplate and collapses whitespace") {
    const std::string raw = "*** CONFIDENTIAL ***\nPt  stable.";
    const auto cleaned = clean_note(raw, {R"(\*\*\* CONFIDENTIAL \*\*\*)"});
    CHECK(cleaned == "Pt stable.");
}

TEST_CASE("clean_note keeps paragraph breaks and is idempotent") {
    const std::string raw = "First para line one.\nline two.\n\n\nSecond   para.";
    const auto once = clean_note(raw, {});
    CHECK(once == "First para line one. line two.\n\nSecond para.");
    CHECK(clean_note(once, {}) == once);
}

TEST_CASE("clean_note of pure boilerplate is empty") {
    CHECK(clean_note("FOOTER\n", {"FOOTER"}).empty());
    CHECK(clean_note("no boilerplate here", {"ZZZ"}) == "no boilerplate here");
}

TEST_CASE("assemble_source orders chronologically and truncates top and bottom") {
    Admission adm;
    adm.admission_id = "a";
    // 1200 single-sentence lines across two documents, deliberately added
    // out of timestamp order.
    std::string late_text, early_text;
    for (int i = 0; i < 600; ++i) late_text += "Late sentence number " + std::to_string(i) + ".\n";
    for (int i = 0; i < 600; ++i) early_text += "Early sentence number " + std::to_string(i) + ".\n";
    adm.documents.push_back(make_doc("late", late_text, 2000));
    adm.documents.push_back(make_doc("early", early_text, 1000));

    const auto records = assemble_source(adm, 1000);
    REQUIRE(records.size() == 1000);
    CHECK(records[0].position == 0);
    CHECK(records[0].doc_id == "early");
    CHECK(records[499].position == 499);
    CHECK(records[500].position == 700);
    CHECK(records.back().position == 1199);
    CHECK(records.back().doc_id == "late");
}

TEST_CASE("assemble_source below the limit is unchanged and exact limit is kept") {
    Admission adm;
    adm.admission_id = "a";
    std::string text;
    for (int i = 0; i < 10; ++i) text += "Sentence number " + std::to_string(i) + ".\n";
    adm.documents.push_back(make_doc("d", text, 10));
    CHECK(assemble_source(adm, 1000).size() == 10);
    CHECK(assemble_source(adm, 10).size() == 10);  // ties are not truncated
    CHECK_THROWS_AS(assemble_source(adm, 9), DataError);  // odd limit rejected
}

TEST_CASE("assemble_source breaks timestamp ties by doc_id") {
    Admission adm;
    adm.admission_id = "a";
    adm.documents.push_back(make_doc("zeta", "From zeta.", 100));
    adm.documents.push_back(make_doc("alpha", "From alpha.", 100));
    const auto records = assemble_source(adm);
    REQUIRE(records.size() == 2);
    CHECK(records[0].doc_id == "alpha");
    CHECK(records[1].doc_id == "zeta");
}

TEST_CASE("assemble_source rejects admissions with no usable documents") {
    Admission adm;
    adm.admission_id = "a";
    adm.documents.push_back(make_doc("d", "   ", 1));
    CHECK_THROWS_AS(assemble_source(adm), EmptyAdmission);
}

TEST_CASE("make_splits produces a deterministic 80/10/10 partition") {
    std::vector<std::string> ids;
    for (int i = 0; i < 100; ++i) ids.push_back("adm-" + std::to_string(i));
    const CorpusSplit split = make_splits(ids, 42);
    CHECK(split.train.size() == 80);
    CHECK(split.validation.size() == 10);
    CHECK(split.test.size() == 10);

    const CorpusSplit again = make_splits(ids, 42);
    CHECK(split.train == again.train);
    CHECK(split.validation == again.validation);
    CHECK(split.test == again.test);

    std::set<std::string> all;
    for (const auto& v : {split.train, split.validation, split.test}) all.insert(v.begin(), v.end());
    CHECK(all.size() == 100);
}

TEST_CASE("make_splits minimum case and failure") {
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) ids.push_back(std::to_string(i));
    const CorpusSplit split = make_splits(ids, 1);
    CHECK(split.train.size() == 8);
    CHECK(split.validation.size() == 1);
    CHECK(split.test.size() == 1);
    ids.pop_back();
    CHECK_THROWS_AS(make_splits(ids, 1), TooFewAdmissions);
}

TEST_CASE("iso8601 round trip") {
    const std::int64_t ts = parse_iso8601("2019-03-01T08:30:15Z");
    CHECK(format_iso8601(ts) == "2019-03-01T08:30:15Z");
    CHECK(parse_iso8601("2019-03-01T08:30:15") == ts);
    CHECK_THROWS_AS(parse_iso8601("not-a-date"), DataError);
    // Ordering follows real time.
    CHECK(parse_iso8601("2019-03-01T08:30:16Z") == ts + 1);
    CHECK(parse_iso8601("2019-02-28T23:59:59Z") < ts);
}

TEST_CASE("corpus jsonl round trip and ingest") {
    RawAdmission raw;
    raw.admission_id = "adm-1";
    raw.documents.push_back(make_doc("d1", "Pt stable today.", 100, DocCategory::physician));
    raw.documents.push_back(make_doc("d2", "*** HEADER ***\nImaging unremarkable.", 200, DocCategory::radiology));
    raw.documents.push_back(make_doc("dx", "ignored", 300, DocCategory::discharge));
    raw.discharge_summary = "Brief Hospital Course:\nPt stable, discharged.\n\nFollow Up:\nGP in two weeks";

    const std::string path = "test_corpus_raw.jsonl";
    write_raw_corpus_jsonl(path, {raw});
    const auto loaded = read_raw_corpus_jsonl(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].admission_id == "adm-1");
    CHECK(loaded[0].documents.size() == 3);
    CHECK(loaded[0].discharge_summary == raw.discharge_summary);
    std::remove(path.c_str());

    const auto ingested = ingest_corpus(loaded, default_bhc_header_patterns(), {R"(\*\*\* HEADER \*\*\*)"});
    REQUIRE(ingested.size() == 1);
    const Admission& adm = ingested[0];
    CHECK(adm.reference_bhc == "Pt stable, discharged.");
    REQUIRE(adm.documents.size() == 2);  // discharge summary excluded from sources
    CHECK(adm.documents[0].doc_id == "d1");
    CHECK(adm.documents[1].text == "Imaging unremarkable.");

    const std::string prepared = "test_corpus_prepared.jsonl";
    write_corpus_jsonl(prepared, ingested);
    const auto reread = read_corpus_jsonl(prepared);
    REQUIRE(reread.size() == 1);
    CHECK(reread[0].reference_bhc == adm.reference_bhc);
    CHECK(reread[0].documents.size() == 2);
    std::remove(prepared.c_str());
}

TEST_CASE("ingest drops admissions without a usable BHC") {
    RawAdmission raw;
    raw.admission_id = "adm-2";
    raw.documents.push_back(make_doc("d1", "text", 1));
    raw.discharge_summary = "Plan:\nhome";
    CHECK_FALSE(ingest_admission(raw, default_bhc_header_patterns(), {}).has_value());
}
