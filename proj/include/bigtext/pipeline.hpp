#pragma once
// Pipeline orchestration: ingest -> normalize -> embed -> signature ->
// supervise -> classify -> eval, driven by a key-value config file. Every
// stage is a file-to-file function; the CLI subcommands call the same
// functions, so a full pipeline run and the stage-by-stage route produce
// identical artifacts. A manifest records input/output content hashes and
// the per-stage seeds.

#include "embed.hpp"
#include "evaluate.hpp"
#include "graph.hpp"
#include "ingest.hpp"
#include "normalize.hpp"
#include "signature.hpp"
#include "supervise.hpp"
#include "util.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bigtext {

namespace fs = std::filesystem;

struct StageError : std::runtime_error {
    std::string stage;
    StageError(std::string stage_name, const std::string& message)
        : std::runtime_error("stage " + stage_name + ": " + message),
          stage(std::move(stage_name)) {}
};

// Config ---------------------------------------------------------------------
//
// Text format: one "key = value" per line, '#' starts a comment. Relative
// paths resolve against the config file's directory. CLI flags override keys.

inline std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    size_t line_no = 0;
    auto trim = [](std::string s) {
        size_t b = s.find_first_not_of(" \t");
        size_t e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key = value");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

struct PipelineConfig {
    std::string corpus;
    MergePolicy merge_policy;
    std::vector<std::string> annotator_priority;
    std::string relations;
    std::string gold;
    std::string out_dir = "out";
    uint64_t seed = 1;
    std::string profile = "full";  // "desk" lowers min-counts and epochs

    uint64_t normalize_min_count = 50;
    TrainConfig train;
    ClauseVectorMode classify_mode = ClauseVectorMode::predicate_only;
    size_t classify_k = 1;
    EvalConfig eval;
    SpanMatch align_match = SpanMatch::overlap;

    static PipelineConfig from_file(const std::string& path) {
        auto kv = parse_kv_file(path);
        PipelineConfig cfg;
        fs::path base = fs::path(path).parent_path();
        auto resolve = [&](const std::string& p) {
            fs::path fp(p);
            return fp.is_absolute() ? fp.string() : (base / fp).string();
        };
        auto get = [&](const char* key) -> std::optional<std::string> {
            auto it = kv.find(key);
            if (it == kv.end()) return std::nullopt;
            return it->second;
        };

        if (auto v = get("profile")) cfg.profile = *v;
        if (cfg.profile == "desk") {
            cfg.normalize_min_count = 2;
            cfg.train.dim = 32;
            cfg.train.epochs = 5;
            cfg.train.learning_rate = 0.05;
            cfg.train.negatives = 3;
        } else if (cfg.profile != "full") {
            throw std::runtime_error("unknown profile: " + cfg.profile);
        }

        if (auto v = get("corpus")) cfg.corpus = resolve(*v);
        if (auto v = get("relations")) cfg.relations = resolve(*v);
        if (auto v = get("gold")) cfg.gold = resolve(*v);
        if (auto v = get("out")) cfg.out_dir = resolve(*v);
        if (auto v = get("seed")) cfg.seed = std::stoull(*v);
        if (auto v = get("merge")) cfg.merge_policy.mode = merge_mode_from_string(*v);
        if (auto v = get("span_match"))
            cfg.merge_policy.span_match = span_match_from_string(*v);
        if (auto v = get("annotator_priority"))
            for (auto& a : split(*v, ','))
                if (!a.empty()) cfg.annotator_priority.push_back(a);
        if (auto v = get("normalize.min_count")) cfg.normalize_min_count = std::stoull(*v);
        if (auto v = get("embed.dim"))
            cfg.train.dim = static_cast<uint32_t>(std::stoul(*v));
        if (auto v = get("embed.window"))
            cfg.train.window = static_cast<uint32_t>(std::stoul(*v));
        if (auto v = get("embed.negatives"))
            cfg.train.negatives = static_cast<uint32_t>(std::stoul(*v));
        if (auto v = get("embed.epochs"))
            cfg.train.epochs = static_cast<uint32_t>(std::stoul(*v));
        if (auto v = get("embed.learning_rate")) cfg.train.learning_rate = std::stod(*v);
        if (auto v = get("embed.min_count"))
            cfg.train.min_count = static_cast<uint32_t>(std::stoul(*v));
        if (auto v = get("embed.subsample")) cfg.train.subsample = std::stod(*v);
        if (auto v = get("embed.threads"))
            cfg.train.threads = static_cast<uint32_t>(std::stoul(*v));
        if (auto v = get("classify.mode"))
            cfg.classify_mode = clause_vector_mode_from_string(*v);
        if (auto v = get("classify.k")) cfg.classify_k = std::stoull(*v);
        if (auto v = get("eval.variant")) cfg.eval.variant = eval_variant_from_string(*v);
        if (auto v = get("eval.macro")) cfg.eval.macro = (*v == "true" || *v == "1");
        if (auto v = get("eval.folds"))
            cfg.eval.folds = static_cast<uint32_t>(std::stoul(*v));
        if (auto v = get("eval.splits")) {
            auto parts = split(*v, ':');
            if (parts.size() != 2)
                throw std::runtime_error("eval.splits must be runs:fraction");
            cfg.eval.splits = {static_cast<uint32_t>(std::stoul(parts[0])),
                               std::stod(parts[1])};
        }
        if (auto v = get("align.match")) cfg.align_match = span_match_from_string(*v);

        static const std::set<std::string> known = {
            "profile", "corpus", "relations", "gold", "out", "seed", "merge",
            "span_match", "annotator_priority", "normalize.min_count", "embed.dim",
            "embed.window", "embed.negatives", "embed.epochs", "embed.learning_rate",
            "embed.min_count", "embed.subsample", "embed.threads", "classify.mode",
            "classify.k", "eval.variant", "eval.macro", "eval.folds", "eval.splits",
            "align.match"};
        for (const auto& [k, _] : kv)
            if (!known.count(k)) throw std::runtime_error("unknown config key: " + k);
        return cfg;
    }

    // All referenced input paths must exist before any work starts.
    void validate() const {
        if (eval.folds && eval.splits)
            throw std::runtime_error("configure either eval.folds or eval.splits, not both");
        auto require = [](const std::string& p, const char* what) {
            if (p.empty())
                throw std::runtime_error(std::string(what) + " path not configured");
            if (!fs::exists(p))
                throw std::runtime_error(std::string(what) + " path does not exist: " + p);
        };
        require(corpus, "corpus");
        require(relations, "relations");
        require(gold, "gold");
    }
};

// Manifest ----------------------------------------------------------------------

class Manifest {
public:
    void add_seed(const std::string& stage, uint64_t seed) {
        lines_.push_back("seed\t" + stage + "\t" + std::to_string(seed));
    }
    void add_file(const std::string& stage, const std::string& role,
                  const fs::path& path) {
        char hex[32];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(read_file(path.string()))));
        lines_.push_back(stage + "\t" + role + "\t" + path.filename().string() + "\t" +
                         hex);
    }
    void save(const fs::path& path) const {
        std::string out;
        for (const auto& l : lines_) out += l + "\n";
        write_file(path.string(), out);
    }

private:
    std::vector<std::string> lines_;
};

// Stages ---------------------------------------------------------------------------

inline BuildReport stage_ingest(const std::string& corpus_path, MergePolicy policy,
                                const std::vector<std::string>& priority,
                                const fs::path& graph_dir, bool lenient = false) {
    std::ifstream in(corpus_path, std::ios::binary);
    if (!in) throw StageError("ingest", "cannot open corpus: " + corpus_path);
    try {
        CorpusReader reader(in, lenient);
        PropertyGraph graph;
        TokenStore tokens;
        BuildReport report = build_graph(
            graph, [&] { return reader.next(); }, policy, priority, &tokens);
        report.warnings = reader.warnings();
        graph.freeze();
        graph.save(graph_dir);
        tokens.save((graph_dir / "tokens.tsv").string());
        return report;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("ingest", e.what());
    }
}

inline DistillStats stage_normalize(const fs::path& graph_dir, uint64_t min_count,
                                    const std::string& triples_path,
                                    const std::string& bigrams_path) {
    try {
        PropertyGraph graph = PropertyGraph::load(graph_dir);
        TokenStore tokens = TokenStore::load((graph_dir / "tokens.tsv").string());
        DistillStats stats;
        std::vector<NormalizedTriple> triples = distill_graph(graph, tokens, &stats);
        BigramTable table = promote_bigrams(triples, min_count);
        apply_bigram_encoding(triples, table);
        save_triples(triples, triples_path);
        table.save(bigrams_path);
        return stats;
    } catch (const std::exception& e) {
        throw StageError("normalize", e.what());
    }
}

inline std::vector<double> stage_embed(const std::string& triples_path,
                                       const std::string& bigrams_path,
                                       TrainConfig config,
                                       const std::string& vectors_path) {
    try {
        std::vector<NormalizedTriple> triples = load_triples(triples_path);
        BigramTable table = BigramTable::load(bigrams_path);
        std::vector<std::vector<std::string>> sequences;
        sequences.reserve(triples.size());
        for (const auto& t : triples) sequences.push_back(encode_tokens(t, table));
        std::unordered_set<std::string> promoted;
        for (const auto& tok : table.tokens()) promoted.insert(tok);
        TrainResult result = train(sequences, config, promoted);
        export_vectors(result.model, vectors_path);
        return result.epoch_loss;
    } catch (const std::exception& e) {
        throw StageError("embed", e.what());
    }
}

inline void stage_signature(const std::string& vectors_path,
                            const std::string& relations_path,
                            const std::string& bigrams_path,
                            const std::string& signatures_path) {
    try {
        EmbeddingModel model = import_vectors(vectors_path);
        BigramTable table = BigramTable::load(bigrams_path);
        std::vector<RelationSpec> specs = load_relation_specs(relations_path);
        if (specs.empty()) throw std::runtime_error("no relations in " + relations_path);
        std::vector<RelationSignature> signatures;
        for (const auto& spec : specs)
            signatures.push_back(build_signature_from_synonyms(spec, model, table));
        save_signatures(signatures, signatures_path);
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("signature", e.what());
    }
}

inline size_t stage_supervise(const fs::path& graph_dir, const std::string& gold_path,
                              SpanMatch match, const std::string& labeled_path) {
    try {
        PropertyGraph graph = PropertyGraph::load(graph_dir);
        std::vector<GoldFact> facts = load_gold(gold_path);
        std::vector<LabeledClause> labeled = align(graph, facts, match);
        save_labeled(graph, labeled, labeled_path);
        return labeled.size();
    } catch (const std::exception& e) {
        throw StageError("supervise", e.what());
    }
}

inline size_t stage_classify(const fs::path& graph_dir, const std::string& triples_path,
                             const std::string& vectors_path,
                             const std::string& signatures_path,
                             const std::string& bigrams_path, ClauseVectorMode mode,
                             size_t k, const std::string& predictions_path) {
    try {
        PropertyGraph graph = PropertyGraph::load(graph_dir);
        std::vector<NormalizedTriple> triples = load_triples(triples_path);
        EmbeddingModel model = import_vectors(vectors_path);
        std::vector<RelationSignature> signatures = load_signatures(signatures_path);
        BigramTable table = BigramTable::load(bigrams_path);
        if (k > signatures.size())
            throw std::runtime_error("classify.k exceeds signature count");
        std::string source = std::string("bigtext-w2v-") +
                             (mode == ClauseVectorMode::predicate_only
                                  ? "predicate_only"
                                  : "full_clause_mean");
        std::vector<PredictionRecord> predictions;
        for (const auto& t : triples) {
            ClauseVector cv = vectorize_clause(t, model, table, mode);
            ClassificationResult res =
                classify(cv.vector, signatures, k,
                         graph.clause_key(t.source_clause.ordinal));
            PredictionRecord p;
            p.unit_kind = UnitKind::clause;
            p.unit_id = res.unit_id;
            p.parent_sentence_id = graph.sentence_key(
                graph.clause_sentence_parent(t.source_clause.ordinal));
            p.labels = res.chosen;  // empty when the clause vector is zero
            p.source = source;
            predictions.push_back(std::move(p));
        }
        save_predictions(predictions, predictions_path);
        return predictions.size();
    } catch (const std::exception& e) {
        throw StageError("classify", e.what());
    }
}

inline EvalReport stage_eval(const std::string& gold_path,
                             const std::string& predictions_path, const EvalConfig& config,
                             const std::string& report_txt_path,
                             const std::string& report_tsv_path) {
    try {
        std::vector<GoldFact> facts = load_gold(gold_path);
        auto gold = gold_label_sets(facts);
        std::set<std::string> known;
        for (const auto& [k, _] : gold) known.insert(k);
        std::vector<PredictionRecord> preds = load_predictions(predictions_path, known);

        EvalReport report;
        if (config.folds || config.splits) {
            // Fixed prediction file: fold/split protocols restrict the gold
            // set per fold and score the same predictions against each part.
            ModelRunner fixed = [&](std::span<const GoldFact>,
                                    std::span<const GoldFact>) { return preds; };
            CrossvalResult cv = crossval(facts, fixed, config);
            report = score(gold, preds, config.variant, config.macro);
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "mean over %zu folds/runs: P = %.6f  R = %.6f  F1 = %.6f",
                          cv.per_fold.size(), cv.mean.precision, cv.mean.recall,
                          cv.mean.f1);
            report.warnings.push_back(buf);
            for (const auto& w : cv.warnings) report.warnings.push_back(w);
        } else {
            report = score(gold, preds, config.variant, config.macro);
        }
        write_file(report_txt_path, format_report(report));
        write_file(report_tsv_path, report_to_records(report));
        return report;
    } catch (const std::exception& e) {
        throw StageError("eval", e.what());
    }
}

// Full run ----------------------------------------------------------------------

struct PipelineResult {
    fs::path out_dir;
    GraphStats stats;
    DistillStats distill;
    std::vector<double> epoch_loss;
    size_t labeled_clauses = 0;
    size_t predictions = 0;
    EvalReport report;
};

inline PipelineResult run_pipeline(const PipelineConfig& config) {
    config.validate();
    fs::path out(config.out_dir);
    fs::create_directories(out);
    fs::path graph_dir = out / "graph";
    std::string triples = (out / "triples.txt").string();
    std::string bigrams = (out / "bigrams.txt").string();
    std::string vectors = (out / "vectors.txt").string();
    std::string signatures = (out / "signatures.txt").string();
    std::string labeled = (out / "labeled.txt").string();
    std::string predictions = (out / "predictions.txt").string();
    std::string report_txt = (out / "report.txt").string();
    std::string report_tsv = (out / "report.tsv").string();

    Manifest manifest;
    PipelineResult result;
    result.out_dir = out;

    BuildReport build = stage_ingest(config.corpus, config.merge_policy,
                                     config.annotator_priority, graph_dir);
    result.stats = build.stats;
    manifest.add_file("ingest", "input", config.corpus);
    for (const char* f : {"documents.tsv", "sentences.tsv", "clauses.tsv",
                          "mentions.tsv", "entities.tsv", "edges.tsv", "tokens.tsv"})
        manifest.add_file("ingest", "output", graph_dir / f);

    result.distill = stage_normalize(graph_dir, config.normalize_min_count, triples,
                                     bigrams);
    manifest.add_file("normalize", "output", triples);
    manifest.add_file("normalize", "output", bigrams);

    TrainConfig train_cfg = config.train;
    train_cfg.seed = stage_seed(config.seed, "embed");
    manifest.add_seed("embed", train_cfg.seed);
    result.epoch_loss = stage_embed(triples, bigrams, train_cfg, vectors);
    manifest.add_file("embed", "output", vectors);

    manifest.add_file("signature", "input", config.relations);
    stage_signature(vectors, config.relations, bigrams, signatures);
    manifest.add_file("signature", "output", signatures);

    manifest.add_file("supervise", "input", config.gold);
    result.labeled_clauses =
        stage_supervise(graph_dir, config.gold, config.align_match, labeled);
    manifest.add_file("supervise", "output", labeled);

    result.predictions =
        stage_classify(graph_dir, triples, vectors, signatures, bigrams,
                       config.classify_mode, config.classify_k, predictions);
    manifest.add_file("classify", "output", predictions);

    EvalConfig eval_cfg = config.eval;
    eval_cfg.seed = stage_seed(config.seed, "eval");
    manifest.add_seed("eval", eval_cfg.seed);
    result.report = stage_eval(config.gold, predictions, eval_cfg, report_txt, report_tsv);
    manifest.add_file("eval", "output", report_txt);
    manifest.add_file("eval", "output", report_tsv);

    manifest.save(out / "manifest.tsv");
    return result;
}

}  // namespace bigtext
