// Command-line front end: stage subcommands (ingest, normalize, embed train,
// signature, supervise align, classify, eval, stats) plus a full pipeline
// runner. Stage subcommands call the same functions as run_pipeline, so the
// two routes produce identical artifacts.
//
// Exit codes: 0 success, 1 usage/validation error, 2 stage failure.

#include <bigtext/pipeline.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>

using namespace bigtext;
namespace fs = std::filesystem;

namespace {

void print_stats(const GraphStats& s) {
    std::printf("documents\t%llu\n", static_cast<unsigned long long>(s.documents));
    std::printf("sentences\t%llu\n", static_cast<unsigned long long>(s.sentences));
    std::printf("clauses\t%llu\n", static_cast<unsigned long long>(s.clauses));
    std::printf("mentions\t%llu\n", static_cast<unsigned long long>(s.mentions));
    std::printf("entities\t%llu\n", static_cast<unsigned long long>(s.entities));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BigText corpus-to-relations toolkit"};
    app.require_subcommand(1);

    // ingest ------------------------------------------------------------
    std::string in_corpus, in_merge = "union", in_span = "exact", in_out, in_priority;
    bool in_lenient = false;
    auto* c_ingest = app.add_subcommand("ingest", "Parse a corpus and build the graph");
    c_ingest->add_option("--corpus", in_corpus, "corpus .jsonl file")->required();
    c_ingest->add_option("--merge", in_merge, "union|intersection");
    c_ingest->add_option("--span-match", in_span, "exact|overlap");
    c_ingest->add_option("--priority", in_priority, "comma-separated annotator priority");
    c_ingest->add_flag("--lenient", in_lenient, "skip malformed lines with a warning");
    c_ingest->add_option("--out", in_out, "output graph directory")->required();

    // stats -------------------------------------------------------------
    std::string st_graph;
    auto* c_stats = app.add_subcommand("stats", "Print per-kind vertex counts");
    c_stats->add_option("--graph", st_graph, "graph directory")->required();

    // normalize ----------------------------------------------------------
    std::string no_graph, no_out, no_bigrams;
    uint64_t no_min_count = 50;
    auto* c_norm = app.add_subcommand("normalize", "Distill clauses into triples");
    c_norm->add_option("--graph", no_graph, "graph directory")->required();
    c_norm->add_option("--min-count", no_min_count, "bigram promotion threshold");
    c_norm->add_option("--out", no_out, "triples output file")->required();
    c_norm->add_option("--bigrams", no_bigrams, "bigram table output file");

    // embed train ----------------------------------------------------------
    std::string em_triples, em_bigrams, em_out;
    TrainConfig em_cfg;
    auto* c_embed = app.add_subcommand("embed", "Embedding commands");
    auto* c_train = c_embed->add_subcommand("train", "Train skip-gram vectors");
    c_train->add_option("--triples", em_triples, "triples file")->required();
    c_train->add_option("--bigrams", em_bigrams, "bigram table file")->required();
    c_train->add_option("--dim", em_cfg.dim, "vector dimension");
    c_train->add_option("--window", em_cfg.window, "context window");
    c_train->add_option("--negatives", em_cfg.negatives, "negative samples per pair");
    c_train->add_option("--epochs", em_cfg.epochs, "training epochs");
    c_train->add_option("--lr", em_cfg.learning_rate, "initial learning rate");
    c_train->add_option("--min-count", em_cfg.min_count, "vocabulary threshold");
    c_train->add_option("--subsample", em_cfg.subsample, "frequent-token threshold");
    c_train->add_option("--threads", em_cfg.threads, "worker threads (>1 is nondeterministic)");
    c_train->add_option("--seed", em_cfg.seed, "random seed");
    c_train->add_option("--out", em_out, "vector output file")->required();

    // signature -------------------------------------------------------------
    std::string sg_model, sg_relations, sg_bigrams, sg_out;
    auto* c_sig = app.add_subcommand("signature", "Build relation signatures");
    c_sig->add_option("--model", sg_model, "vector file")->required();
    c_sig->add_option("--relations", sg_relations, "relation specs file")->required();
    c_sig->add_option("--bigrams", sg_bigrams, "bigram table file")->required();
    c_sig->add_option("--out", sg_out, "signature output file")->required();

    // supervise align ----------------------------------------------------------
    std::string su_graph, su_gold, su_match = "overlap", su_out;
    auto* c_sup = app.add_subcommand("supervise", "Distant supervision commands");
    auto* c_align = c_sup->add_subcommand("align", "Transfer gold labels to clauses");
    c_align->add_option("--graph", su_graph, "graph directory")->required();
    c_align->add_option("--gold", su_gold, "gold facts file")->required();
    c_align->add_option("--match", su_match, "overlap|exact");
    c_align->add_option("--out", su_out, "labeled clauses output")->required();

    // classify -------------------------------------------------------------------
    std::string cl_graph, cl_triples, cl_model, cl_signatures, cl_bigrams, cl_out;
    std::string cl_mode = "predicate_only";
    size_t cl_k = 1;
    auto* c_cls = app.add_subcommand("classify", "Classify clauses against signatures");
    c_cls->add_option("--graph", cl_graph, "graph directory")->required();
    c_cls->add_option("--triples", cl_triples, "triples file")->required();
    c_cls->add_option("--model", cl_model, "vector file")->required();
    c_cls->add_option("--signatures", cl_signatures, "signature file")->required();
    c_cls->add_option("--bigrams", cl_bigrams, "bigram table file")->required();
    c_cls->add_option("--mode", cl_mode, "predicate_only|full_clause_mean");
    c_cls->add_option("--k", cl_k, "labels per clause");
    c_cls->add_option("--out", cl_out, "prediction output file")->required();

    // eval -----------------------------------------------------------------------
    std::string ev_gold, ev_pred, ev_variant = "any", ev_splits, ev_out;
    uint32_t ev_folds = 0;
    uint64_t ev_seed = 1;
    bool ev_macro = false;
    auto* c_eval = app.add_subcommand("eval", "Score predictions against gold facts");
    c_eval->add_option("--gold", ev_gold, "gold facts file")->required();
    c_eval->add_option("--pred", ev_pred, "prediction file")->required();
    c_eval->add_option("--variant", ev_variant, "any|all|union|sent-single|sent-multi");
    c_eval->add_option("--folds", ev_folds, "k-fold protocol");
    c_eval->add_option("--splits", ev_splits, "runs:train_fraction protocol");
    c_eval->add_option("--seed", ev_seed, "split seed");
    c_eval->add_flag("--macro", ev_macro, "macro-average over relations");
    c_eval->add_option("--out", ev_out, "report base path (.txt/.tsv appended)");

    // pipeline -----------------------------------------------------------------
    std::string pl_config, pl_out;
    uint64_t pl_seed = 0;
    bool pl_seed_set = false;
    auto* c_pipe = app.add_subcommand("pipeline", "Run all stages from a config file");
    c_pipe->add_option("--config", pl_config, "key-value config file")->required();
    c_pipe->add_option("--out", pl_out, "override output directory");
    c_pipe->add_option("--seed", pl_seed, "override seed")
        ->each([&](const std::string&) { pl_seed_set = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (*c_ingest) {
            MergePolicy policy{merge_mode_from_string(in_merge),
                               span_match_from_string(in_span)};
            std::vector<std::string> priority;
            if (!in_priority.empty())
                for (auto& p : split(in_priority, ','))
                    if (!p.empty()) priority.push_back(p);
            BuildReport report =
                stage_ingest(in_corpus, policy, priority, in_out, in_lenient);
            for (const auto& w : report.warnings)
                std::fprintf(stderr, "warning: line %zu: %s\n", w.line_number,
                             w.message.c_str());
            if (report.skipped_mentions)
                std::fprintf(stderr, "warning: %llu mentions outside any clause\n",
                             static_cast<unsigned long long>(report.skipped_mentions));
            print_stats(report.stats);
        } else if (*c_stats) {
            print_stats(PropertyGraph::load(st_graph).stats());
        } else if (*c_norm) {
            if (no_bigrams.empty())
                no_bigrams = (fs::path(no_out).parent_path() / "bigrams.txt").string();
            DistillStats stats = stage_normalize(no_graph, no_min_count, no_out, no_bigrams);
            std::printf("clauses\t%llu\ntriples\t%llu\nreflexive\t%llu\n",
                        static_cast<unsigned long long>(stats.total_clauses),
                        static_cast<unsigned long long>(stats.emitted),
                        static_cast<unsigned long long>(stats.dropped_reflexive));
        } else if (*c_train) {
            auto losses = stage_embed(em_triples, em_bigrams, em_cfg, em_out);
            for (size_t e = 0; e < losses.size(); ++e)
                std::printf("epoch\t%zu\tloss\t%.6f\n", e, losses[e]);
        } else if (*c_sig) {
            stage_signature(sg_model, sg_relations, sg_bigrams, sg_out);
        } else if (*c_align) {
            size_t n = stage_supervise(su_graph, su_gold,
                                       span_match_from_string(su_match), su_out);
            std::printf("labeled\t%zu\n", n);
        } else if (*c_cls) {
            size_t n = stage_classify(cl_graph, cl_triples, cl_model, cl_signatures,
                                      cl_bigrams, clause_vector_mode_from_string(cl_mode),
                                      cl_k, cl_out);
            std::printf("predictions\t%zu\n", n);
        } else if (*c_eval) {
            EvalConfig cfg;
            cfg.variant = eval_variant_from_string(ev_variant);
            cfg.seed = ev_seed;
            cfg.macro = ev_macro;
            if (ev_folds > 0) cfg.folds = ev_folds;
            if (!ev_splits.empty()) {
                auto parts = split(ev_splits, ':');
                if (parts.size() != 2) throw CLI::ValidationError("--splits must be runs:fraction");
                cfg.splits = {static_cast<uint32_t>(std::stoul(parts[0])),
                              std::stod(parts[1])};
            }
            std::string base = ev_out.empty()
                                   ? (fs::temp_directory_path() / "bigtext-report").string()
                                   : ev_out;
            EvalReport report =
                stage_eval(ev_gold, ev_pred, cfg, base + ".txt", base + ".tsv");
            std::fputs(format_report(report).c_str(), stdout);
        } else if (*c_pipe) {
            PipelineConfig cfg = PipelineConfig::from_file(pl_config);
            if (!pl_out.empty()) cfg.out_dir = pl_out;
            if (pl_seed_set) cfg.seed = pl_seed;
            try {
                cfg.validate();
            } catch (const std::exception& e) {
                std::fprintf(stderr, "config error: %s\n", e.what());
                return 1;
            }
            PipelineResult result = run_pipeline(cfg);
            print_stats(result.stats);
            std::printf("triples\t%llu\n",
                        static_cast<unsigned long long>(result.distill.emitted));
            std::printf("labeled\t%zu\npredictions\t%zu\n", result.labeled_clauses,
                        result.predictions);
            std::fputs(format_report(result.report).c_str(), stdout);
            std::printf("artifacts\t%s\n", result.out_dir.string().c_str());
        }
    } catch (const StageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
