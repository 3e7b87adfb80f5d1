// bhcsum: batch CLI over the clinical multi-document summarisation pipeline.
// Subcommands mirror the pipeline stages; every artifact-producing command
// is reproducible byte-for-byte given the same config and seed.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bhcsum/concepts.hpp"
#include "bhcsum/corpus.hpp"
#include "bhcsum/ensemble.hpp"
#include "bhcsum/errors.hpp"
#include "bhcsum/eval.hpp"
#include "bhcsum/extractive.hpp"
#include "bhcsum/guidance.hpp"
#include "bhcsum/ranker.hpp"
#include "bhcsum/seq2seq.hpp"
#include "bhcsum/sweep.hpp"
#include "bhcsum/synthetic.hpp"
#include "bhcsum/training_data.hpp"

namespace fs = std::filesystem;
using namespace bhcsum;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitTraining = 4;

void ensure_out_dir(const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory: " + out_dir);
}

void write_resolved_config(const CLI::App& app, const CLI::App* sub, const std::string& out_dir) {
    std::ofstream out(fs::path(out_dir) / (sub->get_name() + ".resolved.ini"), std::ios::binary);
    out << app.config_to_str(true, false);
}

std::unique_ptr<EmbeddingBackend> make_backend(const std::string& spec, std::size_t dim) {
    if (spec == "hashed") return std::make_unique<HashedSentenceBackend>(dim);
    return std::make_unique<MeanStaticBackend>(MeanStaticBackend::load(spec));
}

// Entries like "T-62=intervention" extend or override the built-in
// semantic-type grouping.
std::map<std::string, ConceptGroup> parse_type_groups(const std::vector<std::string>& overrides) {
    std::map<std::string, ConceptGroup> groups = default_type_groups();
    for (const auto& entry : overrides) {
        const std::size_t eq = entry.find('=');
        if (eq == std::string::npos) throw ConfigError("bad type-group entry (want TYPE=GROUP): " + entry);
        const std::string type_id = trim(entry.substr(0, eq));
        const std::string group = trim(entry.substr(eq + 1));
        if (group == "problem") {
            groups[type_id] = ConceptGroup::problem;
        } else if (group == "intervention") {
            groups[type_id] = ConceptGroup::intervention;
        } else {
            throw ConfigError("unknown concept group: " + group);
        }
    }
    return groups;
}

ConceptDictionary load_dictionary(const std::string& spec, const std::vector<std::string>& type_groups = {}) {
    if (spec == "default") return default_concept_dictionary();
    return ConceptDictionary::load_tsv(spec, parse_type_groups(type_groups));
}

std::vector<Admission> select_split(const std::vector<Admission>& corpus, const std::string& split,
                                    std::uint64_t seed) {
    if (split == "all") return corpus;
    std::vector<std::string> ids;
    for (const auto& a : corpus) ids.push_back(a.admission_id);
    const CorpusSplit splits = make_splits(ids, seed);
    const std::vector<std::string>* wanted = nullptr;
    if (split == "train") {
        wanted = &splits.train;
    } else if (split == "validation") {
        wanted = &splits.validation;
    } else if (split == "test") {
        wanted = &splits.test;
    } else {
        throw ConfigError("unknown split: " + split);
    }
    std::map<std::string, const Admission*> by_id;
    for (const auto& a : corpus) by_id[a.admission_id] = &a;
    std::vector<Admission> out;
    for (const auto& id : *wanted) out.push_back(*by_id.at(id));
    return out;
}

void write_splits_json(const std::string& path, const CorpusSplit& splits) {
    json j{{"train", splits.train},
           {"validation", splits.validation},
           {"test", splits.test},
           {"seed", splits.seed}};
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
}

void write_summaries_jsonl(const std::string& path, const std::vector<std::pair<std::string, std::string>>& rows,
                           const std::string& system) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write summaries: " + path);
    for (const auto& [id, summary] : rows) {
        out << json{{"admission_id", id}, {"summary", summary}, {"system", system}}.dump() << '\n';
    }
}

std::map<std::string, std::string> read_summaries_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open summaries: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const json j = json::parse(line);
            out[j.at("admission_id").get<std::string>()] = j.at("summary").get<std::string>();
        } catch (const json::exception& e) {
            throw DataError("bad summary record at " + path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

// --- command options -------------------------------------------------------

struct SynthOpts {
    std::string out_dir = "out";
    std::uint64_t seed = 7;
    int n = 100;
    int min_documents = 4, max_documents = 8;
    int min_verbatim = 1, max_verbatim = 5;
    std::size_t embedding_dim = 50;
    bool raw = false;
    int min_distractors = 0;
    int max_distractors = 1;
};

struct IngestOpts {
    std::string input;
    std::string out_dir = "out";
    std::vector<std::string> bhc_patterns = default_bhc_header_patterns();
    std::vector<std::string> boilerplate_patterns;
};

struct TrainExtractiveOpts {
    std::string corpus;
    std::string out_dir = "out";
    std::uint64_t seed = 7;
    std::string embedding = "hashed";
    std::size_t embedding_dim = 50;
    std::size_t hidden = 32;
    int epochs = 10;
    std::size_t batch = 4;
    double lr = 1e-2;
    int label_k = 15;
};

struct TrainAbstractiveOpts {
    std::string corpus;
    std::string out_dir = "out";
    std::uint64_t seed = 7;
    bool guided = false;
    std::string guidance_kind = "problem_only";
    std::string dict = "default";
    std::vector<std::string> type_groups;
    std::size_t vocab_size = 800;
    std::size_t d_model = 32;
    std::size_t heads = 2;
    std::size_t encoder_blocks = 4;
    std::size_t decoder_blocks = 2;
    std::size_t shared_blocks = 3;
    std::size_t d_ff = 0;
    std::size_t max_src = 256;
    std::size_t max_tgt = 64;
    int epochs = 20;
    std::size_t batch = 8;
    double lr = 3e-3;
    int warmup = 100;
};

struct SummariseOpts {
    std::string corpus;
    std::string model;
    std::string out_dir = "out";
    std::uint64_t seed = 7;
    std::string system = "abstractive";  // abstractive | ensemble
    std::string ranker;
    std::string embedding = "hashed";
    std::size_t embedding_dim = 50;
    int n_prefix = 3;
    std::string dict = "default";
    std::vector<std::string> type_groups;
    std::string decode = "beam";
    int beam_width = 4;
    std::size_t max_len = 0;
    std::string split = "test";
};

struct OracleOpts {
    std::string corpus;
    std::string out_dir = "out";
    std::uint64_t seed = 7;
    int k = 5;
    std::string split = "all";
};

struct SweepOpts {
    std::string corpus;
    std::string out_dir = "out";
    std::uint64_t seed = 7;
    std::string system = "oracle";  // oracle | textrank | ranker | random
    std::string ranker;
    std::string embedding = "hashed";
    std::size_t embedding_dim = 50;
    std::vector<int> ks = default_sweep_ks();
    std::string split = "all";
};

struct EvaluateOpts {
    std::string outputs;
    std::string corpus;
    std::string dict = "default";
    std::vector<std::string> type_groups;
    std::string out_dir = "out";
    std::string run_id = "run";
};

// --- command bodies ---------------------------------------------------------

void run_synth(const SynthOpts& o) {
    ensure_out_dir(o.out_dir);
    const ConceptDictionary dict = default_concept_dictionary();
    SynthConfig cfg;
    cfg.n_admissions = o.n;
    cfg.seed = o.seed;
    cfg.min_documents = o.min_documents;
    cfg.max_documents = o.max_documents;
    cfg.min_verbatim = o.min_verbatim;
    cfg.max_verbatim = o.max_verbatim;
    cfg.min_distractors = o.min_distractors;
    cfg.max_distractors = o.max_distractors;
    const auto corpus_full = generate_synthetic_corpus_full(cfg, dict);
    std::vector<Admission> corpus;
    std::vector<RawAdmission> raw;
    for (const auto& syn : corpus_full) {
        corpus.push_back(syn.admission);
        raw.push_back(syn.raw);
    }
    write_corpus_jsonl((fs::path(o.out_dir) / "corpus.jsonl").string(), corpus);
    if (o.raw) write_raw_corpus_jsonl((fs::path(o.out_dir) / "raw_corpus.jsonl").string(), raw);
    dict.save_tsv((fs::path(o.out_dir) / "dict.tsv").string());
    write_word_vectors((fs::path(o.out_dir) / "vectors.txt").string(), corpus, o.embedding_dim, o.seed);
    std::cout << "synth: wrote " << corpus.size() << " admissions to " << o.out_dir << "\n";
}

void run_ingest(const IngestOpts& o) {
    ensure_out_dir(o.out_dir);
    const auto raw = read_raw_corpus_jsonl(o.input);
    const auto corpus = ingest_corpus(raw, o.bhc_patterns, o.boilerplate_patterns);
    write_corpus_jsonl((fs::path(o.out_dir) / "corpus.jsonl").string(), corpus);
    std::cout << "ingest: retained " << corpus.size() << " of " << raw.size() << " admissions\n";
}

std::vector<SentenceRecord> embedded_records(const Admission& adm, const EmbeddingBackend& backend) {
    std::vector<SentenceRecord> records = assemble_source(adm);
    attach_embeddings(records, backend);
    return records;
}

void run_train_extractive(const TrainExtractiveOpts& o) {
    ensure_out_dir(o.out_dir);
    const auto corpus = read_corpus_jsonl(o.corpus);
    std::vector<std::string> ids;
    for (const auto& a : corpus) ids.push_back(a.admission_id);
    const CorpusSplit splits = make_splits(ids, o.seed);
    write_splits_json((fs::path(o.out_dir) / "splits.json").string(), splits);

    const auto backend = make_backend(o.embedding, o.embedding_dim);
    std::map<std::string, const Admission*> by_id;
    for (const auto& a : corpus) by_id[a.admission_id] = &a;

    std::vector<RankerExample> examples;
    for (const auto& id : splits.train) {
        const Admission& adm = *by_id.at(id);
        examples.push_back(make_ranker_example(embedded_records(adm, *backend), adm.reference_bhc, o.label_k));
    }
    RankerConfig cfg;
    cfg.input_dim = backend->dimension();
    cfg.hidden_dim = o.hidden;
    cfg.label_top_k = o.label_k;
    cfg.seed = derive_seed(o.seed, "ranker.init");
    RecurrentRanker ranker(cfg);
    RankerTrainOptions topts;
    topts.epochs = o.epochs;
    topts.batch_size = o.batch;
    topts.adam.lr = o.lr;
    topts.seed = derive_seed(o.seed, "ranker.train");
    const RankerTrainResult result = train_ranker(ranker, examples, topts);
    ranker.to_checkpoint(backend->name(), backend->dimension())
        .save((fs::path(o.out_dir) / "ranker.ckpt").string());
    std::ofstream log(fs::path(o.out_dir) / "ranker_log.jsonl", std::ios::binary);
    for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
        log << json{{"epoch", e + 1}, {"train_loss", result.epoch_losses[e]}}.dump() << '\n';
    }
    std::cout << "train-extractive: trained on " << examples.size() << " admissions\n";
}

void run_train_abstractive(const TrainAbstractiveOpts& o) {
    ensure_out_dir(o.out_dir);
    const auto corpus = read_corpus_jsonl(o.corpus);
    std::vector<std::string> ids;
    for (const auto& a : corpus) ids.push_back(a.admission_id);
    const CorpusSplit splits = make_splits(ids, o.seed);
    write_splits_json((fs::path(o.out_dir) / "splits.json").string(), splits);
    std::map<std::string, const Admission*> by_id;
    for (const auto& a : corpus) by_id[a.admission_id] = &a;

    std::vector<Admission> train_adms, val_adms;
    for (const auto& id : splits.train) train_adms.push_back(*by_id.at(id));
    for (const auto& id : splits.validation) val_adms.push_back(*by_id.at(id));

    const BpeTokenizer tokenizer = BpeTokenizer::train(tokenizer_training_texts(train_adms), o.vocab_size);
    ModelConfig cfg;
    cfg.vocab_size = tokenizer.vocab_size();
    cfg.d_model = o.d_model;
    cfg.n_heads = o.heads;
    cfg.n_encoder_blocks = o.encoder_blocks;
    cfg.n_decoder_blocks = o.decoder_blocks;
    cfg.n_shared_encoder_blocks = o.shared_blocks;
    cfg.d_ff = o.d_ff;
    cfg.max_src_len = o.max_src;
    cfg.max_tgt_len = o.max_tgt;
    cfg.guided = o.guided;
    cfg.seed = derive_seed(o.seed, "abstractive.init");

    const ConceptDictionary dict = load_dictionary(o.dict, o.type_groups);
    ExampleBuildOptions build_opts;
    build_opts.signal_kind = signal_kind_from_string(o.guidance_kind);
    const auto train_set = build_training_examples(train_adms, tokenizer, cfg, o.guided ? &dict : nullptr, build_opts);
    const auto val_set = build_training_examples(val_adms, tokenizer, cfg, o.guided ? &dict : nullptr, build_opts);

    Seq2SeqModel model(cfg);
    TrainOptions topts;
    topts.epochs = o.epochs;
    topts.batch_size = o.batch;
    topts.adam.lr = o.lr;
    topts.adam.warmup_steps = o.warmup;
    topts.seed = derive_seed(o.seed, "abstractive.train");
    topts.tokenizer = &tokenizer;
    for (const auto& a : val_adms) topts.val_references[a.admission_id] = a.reference_bhc;

    const TrainState state = train(model, train_set, val_set, topts);
    model.to_checkpoint(&tokenizer).save((fs::path(o.out_dir) / "model.ckpt").string());
    std::ofstream log(fs::path(o.out_dir) / "train_log.jsonl", std::ios::binary);
    for (const auto& e : state.log) {
        log << json{{"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"val_loss", e.val_loss},
                    {"val_rouge_lsum", e.val_rouge_lsum}}
                   .dump()
            << '\n';
    }
    std::cout << "train-abstractive: best epoch " << state.best_epoch << " (val metric "
              << state.best_validation_metric << ")\n";
}

void run_summarise(const SummariseOpts& o) {
    ensure_out_dir(o.out_dir);
    const auto corpus = read_corpus_jsonl(o.corpus);
    const auto subset = select_split(corpus, o.split, o.seed);
    BpeTokenizer tokenizer;
    Seq2SeqModel model = Seq2SeqModel::from_checkpoint(Checkpoint::load(o.model), &tokenizer);
    const ConceptDictionary dict = load_dictionary(o.dict, o.type_groups);

    EnsembleOptions opts;
    opts.n_extractive_sentences = o.system == "ensemble" ? o.n_prefix : 0;
    opts.decode.strategy = o.decode == "greedy" ? Seq2SeqModel::DecodeOptions::Strategy::greedy
                                                : Seq2SeqModel::DecodeOptions::Strategy::beam;
    opts.decode.beam_width = o.beam_width;
    opts.decode.max_len = o.max_len;

    std::unique_ptr<EmbeddingBackend> backend;
    std::optional<RecurrentRanker> ranker;
    if (o.system == "ensemble") {
        if (o.ranker.empty()) throw ConfigError("ensemble summarisation needs --ranker");
        ranker = RecurrentRanker::from_checkpoint(Checkpoint::load(o.ranker));
        backend = make_backend(o.embedding, o.embedding_dim);
    } else if (o.system != "abstractive") {
        throw ConfigError("unknown system: " + o.system);
    }

    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& adm : subset) {
        const RankFn rank_fn = [&](const std::vector<SentenceRecord>& records) {
            std::vector<SentenceRecord> with_emb = records;
            attach_embeddings(with_emb, *backend);
            return ranker->rank(with_emb);
        };
        const std::string summary =
            o.system == "ensemble"
                ? ensemble_summarise(adm, rank_fn, model, tokenizer, &dict, opts)
                : abstractive_summarise(adm, model, tokenizer, &dict, opts);
        rows.emplace_back(adm.admission_id, summary);
    }
    write_summaries_jsonl((fs::path(o.out_dir) / "summaries.jsonl").string(), rows, o.system);
    std::cout << "summarise: wrote " << rows.size() << " summaries (" << o.system << ")\n";
}

void run_oracle(const OracleOpts& o) {
    ensure_out_dir(o.out_dir);
    const auto corpus = read_corpus_jsonl(o.corpus);
    const auto subset = select_split(corpus, o.split, o.seed);
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& adm : subset) {
        const auto records = assemble_source(adm);
        const auto ranked = oracle_rank(records, adm.reference_bhc);
        rows.emplace_back(adm.admission_id, summary_text(select_top_k(ranked, o.k)));
    }
    write_summaries_jsonl((fs::path(o.out_dir) / "summaries.jsonl").string(), rows, "oracle");
    std::cout << "oracle: wrote " << rows.size() << " extractive summaries (k=" << o.k << ")\n";
}

void run_sweep(const SweepOpts& o) {
    ensure_out_dir(o.out_dir);
    const auto corpus = read_corpus_jsonl(o.corpus);
    const auto subset = select_split(corpus, o.split, o.seed);

    std::unique_ptr<EmbeddingBackend> backend;
    std::optional<RecurrentRanker> ranker;
    if (o.system == "ranker") {
        if (o.ranker.empty()) throw ConfigError("sweep over the trained ranker needs --ranker");
        ranker = RecurrentRanker::from_checkpoint(Checkpoint::load(o.ranker));
        backend = make_backend(o.embedding, o.embedding_dim);
    } else if (o.system == "textrank") {
        backend = make_backend(o.embedding, o.embedding_dim);
    }

    // References are looked up by admission id inside the rank function so
    // the oracle stays a drop-in RankFn.
    std::map<std::string, std::string> references;
    for (const auto& adm : subset) references[adm.admission_id] = adm.reference_bhc;

    RankFn rank_fn;
    if (o.system == "oracle") {
        rank_fn = [&](const std::vector<SentenceRecord>& records) {
            return oracle_rank(records, references.at(records.front().admission_id));
        };
    } else if (o.system == "textrank") {
        rank_fn = [&](const std::vector<SentenceRecord>& records) {
            std::vector<SentenceRecord> with_emb = records;
            attach_embeddings(with_emb, *backend);
            return textrank_rank(with_emb);
        };
    } else if (o.system == "ranker") {
        rank_fn = [&](const std::vector<SentenceRecord>& records) {
            std::vector<SentenceRecord> with_emb = records;
            attach_embeddings(with_emb, *backend);
            return ranker->rank(with_emb);
        };
    } else if (o.system == "random") {
        rank_fn = [&](const std::vector<SentenceRecord>& records) {
            return random_rank(records, derive_seed(o.seed, "sweep.random." + records.front().admission_id));
        };
    } else {
        throw ConfigError("unknown sweep system: " + o.system);
    }

    const SweepTable table = sweep_sentence_limits(rank_fn, subset, o.ks, o.system);
    write_sweep_csv((fs::path(o.out_dir) / ("sweep_" + o.system + ".csv")).string(), table);
    std::cout << "sweep-extractive: " << o.system << " over " << subset.size() << " admissions\n";
}

void run_evaluate(const EvaluateOpts& o) {
    ensure_out_dir(o.out_dir);
    const auto outputs = read_summaries_jsonl(o.outputs);
    const auto corpus = read_corpus_jsonl(o.corpus);
    std::map<std::string, std::string> references;
    for (const auto& adm : corpus) references[adm.admission_id] = adm.reference_bhc;
    const ConceptDictionary dict = load_dictionary(o.dict, o.type_groups);
    const EvalReport report = evaluate_run(outputs, references, &dict, o.run_id);
    write_report_json((fs::path(o.out_dir) / "report.json").string(), report);
    write_report_csv((fs::path(o.out_dir) / "report.csv").string(), report);
    std::cout << "evaluate: " << report.n_admissions << " admissions, mean ROUGE-LSum F1 "
              << report.mean_rouge.at("rougeLsum").f1 << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-document clinical summarisation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI config file with one section per command");
    app.allow_config_extras(CLI::config_extras_mode::error);  // unknown keys are rejected

    SynthOpts synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic desk-scale corpus");
    synth_cmd->add_option("--n", synth.n, "Number of admissions");
    synth_cmd->add_option("--seed", synth.seed, "Generation seed");
    synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory");
    synth_cmd->add_option("--min-documents", synth.min_documents);
    synth_cmd->add_option("--max-documents", synth.max_documents);
    synth_cmd->add_option("--min-verbatim", synth.min_verbatim);
    synth_cmd->add_option("--max-verbatim", synth.max_verbatim);
    synth_cmd->add_option("--embedding-dim", synth.embedding_dim);
    synth_cmd->add_flag("--raw", synth.raw, "Also write the raw (pre-ingest) corpus form");
    synth_cmd->add_option("--min-distractors", synth.min_distractors);
    synth_cmd->add_option("--max-distractors", synth.max_distractors);

    IngestOpts ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Prepare a raw note corpus");
    ingest_cmd->add_option("--input", ingest.input, "Raw corpus JSONL")->required();
    ingest_cmd->add_option("--out-dir", ingest.out_dir);
    ingest_cmd->add_option("--bhc-pattern", ingest.bhc_patterns, "BHC header regex (repeatable)");
    ingest_cmd->add_option("--boilerplate-pattern", ingest.boilerplate_patterns, "Boilerplate regex (repeatable)");

    TrainExtractiveOpts trext;
    auto* trext_cmd = app.add_subcommand("train-extractive", "Train the supervised sentence ranker");
    trext_cmd->add_option("--corpus", trext.corpus)->required();
    trext_cmd->add_option("--out-dir", trext.out_dir);
    trext_cmd->add_option("--seed", trext.seed);
    trext_cmd->add_option("--embedding", trext.embedding, "Word-vector file path or 'hashed'");
    trext_cmd->add_option("--embedding-dim", trext.embedding_dim);
    trext_cmd->add_option("--hidden", trext.hidden);
    trext_cmd->add_option("--epochs", trext.epochs);
    trext_cmd->add_option("--batch", trext.batch);
    trext_cmd->add_option("--lr", trext.lr);
    trext_cmd->add_option("--label-k", trext.label_k);

    TrainAbstractiveOpts trabs;
    auto* trabs_cmd = app.add_subcommand("train-abstractive", "Train the encoder-decoder summariser");
    trabs_cmd->add_option("--corpus", trabs.corpus)->required();
    trabs_cmd->add_option("--out-dir", trabs.out_dir);
    trabs_cmd->add_option("--seed", trabs.seed);
    trabs_cmd->add_flag("--guided", trabs.guided, "Enable the guidance encoder");
    trabs_cmd->add_option("--guidance-kind", trabs.guidance_kind);
    trabs_cmd->add_option("--dict", trabs.dict, "Dictionary TSV path or 'default'");
    trabs_cmd->add_option("--type-group", trabs.type_groups, "Semantic type mapping TYPE=GROUP (repeatable)");
    trabs_cmd->add_option("--vocab-size", trabs.vocab_size);
    trabs_cmd->add_option("--d-model", trabs.d_model);
    trabs_cmd->add_option("--heads", trabs.heads);
    trabs_cmd->add_option("--encoder-blocks", trabs.encoder_blocks);
    trabs_cmd->add_option("--decoder-blocks", trabs.decoder_blocks);
    trabs_cmd->add_option("--shared-blocks", trabs.shared_blocks);
    trabs_cmd->add_option("--d-ff", trabs.d_ff);
    trabs_cmd->add_option("--max-src", trabs.max_src);
    trabs_cmd->add_option("--max-tgt", trabs.max_tgt);
    trabs_cmd->add_option("--epochs", trabs.epochs);
    trabs_cmd->add_option("--batch", trabs.batch);
    trabs_cmd->add_option("--lr", trabs.lr);
    trabs_cmd->add_option("--warmup", trabs.warmup);

    SummariseOpts summ;
    auto* summ_cmd = app.add_subcommand("summarise", "Generate summaries with a trained model");
    summ_cmd->add_option("--corpus", summ.corpus)->required();
    summ_cmd->add_option("--model", summ.model)->required();
    summ_cmd->add_option("--out-dir", summ.out_dir);
    summ_cmd->add_option("--seed", summ.seed);
    summ_cmd->add_option("--system", summ.system, "abstractive or ensemble");
    summ_cmd->add_option("--ranker", summ.ranker, "Ranker checkpoint (ensemble)");
    summ_cmd->add_option("--embedding", summ.embedding);
    summ_cmd->add_option("--embedding-dim", summ.embedding_dim);
    summ_cmd->add_option("--n-prefix", summ.n_prefix, "Extractive prefix sentences");
    summ_cmd->add_option("--dict", summ.dict);
    summ_cmd->add_option("--type-group", summ.type_groups, "Semantic type mapping TYPE=GROUP (repeatable)");
    summ_cmd->add_option("--decode", summ.decode, "greedy or beam");
    summ_cmd->add_option("--beam-width", summ.beam_width);
    summ_cmd->add_option("--max-len", summ.max_len);
    summ_cmd->add_option("--split", summ.split, "train, validation, test or all");

    OracleOpts oracle;
    auto* oracle_cmd = app.add_subcommand("oracle", "Reference-informed extractive ceiling");
    oracle_cmd->add_option("--corpus", oracle.corpus)->required();
    oracle_cmd->add_option("--out-dir", oracle.out_dir);
    oracle_cmd->add_option("--seed", oracle.seed);
    oracle_cmd->add_option("--k", oracle.k);
    oracle_cmd->add_option("--split", oracle.split);

    SweepOpts sweep;
    auto* sweep_cmd = app.add_subcommand("sweep-extractive", "Top-k sweep for an extractive system");
    sweep_cmd->add_option("--corpus", sweep.corpus)->required();
    sweep_cmd->add_option("--out-dir", sweep.out_dir);
    sweep_cmd->add_option("--seed", sweep.seed);
    sweep_cmd->add_option("--system", sweep.system, "oracle, textrank, ranker or random");
    sweep_cmd->add_option("--ranker", sweep.ranker);
    sweep_cmd->add_option("--embedding", sweep.embedding);
    sweep_cmd->add_option("--embedding-dim", sweep.embedding_dim);
    sweep_cmd->add_option("--ks", sweep.ks, "Sentence limits to sweep");
    sweep_cmd->add_option("--split", sweep.split);

    EvaluateOpts eval_opts;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score summaries against references");
    eval_cmd->add_option("--outputs", eval_opts.outputs)->required();
    eval_cmd->add_option("--corpus", eval_opts.corpus)->required();
    eval_cmd->add_option("--dict", eval_opts.dict);
    eval_cmd->add_option("--type-group", eval_opts.type_groups, "Semantic type mapping TYPE=GROUP (repeatable)");
    eval_cmd->add_option("--out-dir", eval_opts.out_dir);
    eval_cmd->add_option("--run-id", eval_opts.run_id);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (synth_cmd->parsed()) {
            run_synth(synth);
            write_resolved_config(app, synth_cmd, synth.out_dir);
        } else if (ingest_cmd->parsed()) {
            run_ingest(ingest);
            write_resolved_config(app, ingest_cmd, ingest.out_dir);
        } else if (trext_cmd->parsed()) {
            run_train_extractive(trext);
            write_resolved_config(app, trext_cmd, trext.out_dir);
        } else if (trabs_cmd->parsed()) {
            run_train_abstractive(trabs);
            write_resolved_config(app, trabs_cmd, trabs.out_dir);
        } else if (summ_cmd->parsed()) {
            run_summarise(summ);
            write_resolved_config(app, summ_cmd, summ.out_dir);
        } else if (oracle_cmd->parsed()) {
            run_oracle(oracle);
            write_resolved_config(app, oracle_cmd, oracle.out_dir);
        } else if (sweep_cmd->parsed()) {
            run_sweep(sweep);
            write_resolved_config(app, sweep_cmd, sweep.out_dir);
        } else if (eval_cmd->parsed()) {
            run_evaluate(eval_opts);
            write_resolved_config(app, eval_cmd, eval_opts.out_dir);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TrainingDiverged& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return kExitTraining;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
