#pragma once
// Evaluation: precision/recall/F1 over sentence-unit and clause-unit
// predictions. Clause-unit variants follow the ANY / ALL / UNION scheme:
//
//   ANY    one TP per gold sentence when any clause label is in the gold
//          set, one FP when none is, one FN when no clause predicted.
//   ALL    one TP when every clause label is in the gold set, FP otherwise,
//          FN when no clause predicted.
//   UNION  set comparison between the union of clause labels and the gold
//          set: TPs = matched labels, FPs = extra labels, FNs = missed ones.
//
// Sentence-unit scoring compares the top-1 prediction (single-label mode) or
// the top-n predictions where n is the gold label count (multi-label mode).
// Aggregation is micro by default; macro sits behind a flag.

#include "supervise.hpp"
#include "util.hpp"

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace bigtext {

enum class UnitKind : uint8_t { sentence, clause };

inline std::string to_string(UnitKind k) {
    return k == UnitKind::sentence ? "sentence" : "clause";
}
inline UnitKind unit_kind_from_string(std::string_view s) {
    if (s == "sentence") return UnitKind::sentence;
    if (s == "clause") return UnitKind::clause;
    throw std::invalid_argument("bad unit kind: " + std::string(s));
}

struct PredictionRecord {
    UnitKind unit_kind = UnitKind::clause;
    std::string unit_id;
    std::string parent_sentence_id;
    std::vector<std::string> labels;  // ranked; empty means abstain
    std::string source;
};

enum class EvalVariant : uint8_t { any, all, union_, sentence_single, sentence_multi };

inline std::string to_string(EvalVariant v) {
    switch (v) {
        case EvalVariant::any: return "any";
        case EvalVariant::all: return "all";
        case EvalVariant::union_: return "union";
        case EvalVariant::sentence_single: return "sent-single";
        case EvalVariant::sentence_multi: return "sent-multi";
    }
    return "?";
}

inline EvalVariant eval_variant_from_string(std::string_view s) {
    if (s == "any") return EvalVariant::any;
    if (s == "all") return EvalVariant::all;
    if (s == "union") return EvalVariant::union_;
    if (s == "sent-single") return EvalVariant::sentence_single;
    if (s == "sent-multi") return EvalVariant::sentence_multi;
    throw std::invalid_argument("bad eval variant: " + std::string(s));
}

struct EvalConfig {
    EvalVariant variant = EvalVariant::any;
    std::optional<uint32_t> folds;
    std::optional<std::pair<uint32_t, double>> splits;  // (runs, train_fraction)
    uint64_t seed = 1;
    bool macro = false;
};

struct RelationCounts {
    uint64_t tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    uint64_t tp = 0, fp = 0, fn = 0;
    std::map<std::string, RelationCounts> per_relation;
    EvalVariant variant = EvalVariant::any;
    std::string aggregation = "micro";
    std::vector<std::string> warnings;
};

// Gold label set per sentence key.
inline std::map<std::string, std::set<std::string>> gold_label_sets(
    std::span<const GoldFact> facts) {
    std::map<std::string, std::set<std::string>> out;
    for (const auto& f : facts) out[f.sentence_key()].insert(f.relation_id);
    return out;
}

namespace detail {

// P = tp/(tp+fp) with P=0 when tp+fp=0; R likewise; F1 = 2PR/(P+R) or 0.
inline void finalize_report(EvalReport& r, bool macro) {
    if (!macro) {
        r.aggregation = "micro";
        r.precision = (r.tp + r.fp) ? static_cast<double>(r.tp) / (r.tp + r.fp) : 0.0;
        r.recall = (r.tp + r.fn) ? static_cast<double>(r.tp) / (r.tp + r.fn) : 0.0;
    } else {
        r.aggregation = "macro";
        double p_sum = 0.0, r_sum = 0.0;
        size_t n = 0;
        for (const auto& [_, c] : r.per_relation) {
            p_sum += (c.tp + c.fp) ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
            r_sum += (c.tp + c.fn) ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
            ++n;
        }
        r.precision = n ? p_sum / n : 0.0;
        r.recall = n ? r_sum / n : 0.0;
    }
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
}

inline std::vector<std::string> top_n_distinct(const std::vector<std::string>& labels,
                                               size_t n) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& l : labels) {
        if (out.size() >= n) break;
        if (seen.insert(l).second) out.push_back(l);
    }
    return out;
}

}  // namespace detail

// Sentence-unit scoring. One prediction record per sentence; a gold sentence
// with no record (or an abstaining one) contributes false negatives. In
// single-label mode the unmatched case attributes one FN to the sentence's
// first gold label; multi-label mode counts one FN per missed gold label.
inline EvalReport score_sentence_unit(
    const std::map<std::string, std::set<std::string>>& gold,
    std::span<const PredictionRecord> predictions, bool multi_label,
    bool macro = false) {
    EvalReport report;
    report.variant = multi_label ? EvalVariant::sentence_multi : EvalVariant::sentence_single;

    std::map<std::string, const PredictionRecord*> by_sentence;
    for (const auto& p : predictions) {
        std::string key = p.unit_kind == UnitKind::sentence ? p.unit_id
                                                            : p.parent_sentence_id;
        if (!gold.count(key)) {
            report.warnings.push_back("prediction for unknown sentence " + key +
                                      " ignored");
            continue;
        }
        if (!by_sentence.emplace(key, &p).second)
            report.warnings.push_back("duplicate prediction for sentence " + key +
                                      " ignored");
    }

    for (const auto& [key, gold_set] : gold) {
        auto it = by_sentence.find(key);
        const PredictionRecord* pred =
            it == by_sentence.end() ? nullptr : it->second;
        if (!multi_label) {
            if (!pred || pred->labels.empty()) {
                ++report.fn;
                ++report.per_relation[*gold_set.begin()].fn;
                continue;
            }
            const std::string& top = pred->labels.front();
            if (gold_set.count(top)) {
                ++report.tp;
                ++report.per_relation[top].tp;
            } else {
                ++report.fp;
                ++report.per_relation[top].fp;
                ++report.fn;
                ++report.per_relation[*gold_set.begin()].fn;
            }
        } else {
            std::vector<std::string> chosen =
                pred ? detail::top_n_distinct(pred->labels, gold_set.size())
                     : std::vector<std::string>{};
            std::set<std::string> chosen_set(chosen.begin(), chosen.end());
            for (const auto& l : chosen_set) {
                if (gold_set.count(l)) {
                    ++report.tp;
                    ++report.per_relation[l].tp;
                } else {
                    ++report.fp;
                    ++report.per_relation[l].fp;
                }
            }
            for (const auto& g : gold_set)
                if (!chosen_set.count(g)) {
                    ++report.fn;
                    ++report.per_relation[g].fn;
                }
        }
    }
    detail::finalize_report(report, macro);
    return report;
}

// Clause-unit scoring under ANY, ALL or UNION. Each clause contributes its
// top-1 label; abstaining clauses contribute nothing. ANY/ALL judgments are
// attributed to the sentence's first gold label in the per-relation
// breakdown.
inline EvalReport score_clause_unit(
    const std::map<std::string, std::set<std::string>>& gold,
    std::span<const PredictionRecord> predictions, EvalVariant variant,
    bool macro = false) {
    if (variant != EvalVariant::any && variant != EvalVariant::all &&
        variant != EvalVariant::union_)
        throw std::invalid_argument("score_clause_unit: variant must be any/all/union");
    EvalReport report;
    report.variant = variant;

    std::map<std::string, std::vector<std::string>> labels_by_sentence;
    for (const auto& p : predictions) {
        if (p.unit_kind != UnitKind::clause)
            throw std::invalid_argument("clause-unit scoring got a sentence record: " +
                                        p.unit_id);
        if (!gold.count(p.parent_sentence_id)) {
            report.warnings.push_back("prediction for unknown sentence " +
                                      p.parent_sentence_id + " ignored");
            continue;
        }
        if (!p.labels.empty())
            labels_by_sentence[p.parent_sentence_id].push_back(p.labels.front());
    }

    bool any_multi_gold = false;
    bool any_single_gold = false;
    for (const auto& [key, gold_set] : gold) {
        (gold_set.size() > 1 ? any_multi_gold : any_single_gold) = true;
        auto it = labels_by_sentence.find(key);
        const std::vector<std::string>* clause_labels =
            it == labels_by_sentence.end() ? nullptr : &it->second;
        const std::string& g0 = *gold_set.begin();

        if (variant == EvalVariant::union_) {
            std::set<std::string> u;
            if (clause_labels) u.insert(clause_labels->begin(), clause_labels->end());
            for (const auto& l : u) {
                if (gold_set.count(l)) {
                    ++report.tp;
                    ++report.per_relation[l].tp;
                } else {
                    ++report.fp;
                    ++report.per_relation[l].fp;
                }
            }
            for (const auto& g : gold_set)
                if (!u.count(g)) {
                    ++report.fn;
                    ++report.per_relation[g].fn;
                }
            continue;
        }

        if (!clause_labels || clause_labels->empty()) {
            ++report.fn;
            ++report.per_relation[g0].fn;
            continue;
        }
        bool hit;
        if (variant == EvalVariant::any) {
            hit = std::any_of(clause_labels->begin(), clause_labels->end(),
                              [&](const std::string& l) { return gold_set.count(l); });
        } else {
            hit = std::all_of(clause_labels->begin(), clause_labels->end(),
                              [&](const std::string& l) { return gold_set.count(l); });
        }
        if (hit) {
            ++report.tp;
            ++report.per_relation[g0].tp;
        } else {
            ++report.fp;
            ++report.per_relation[g0].fp;
        }
    }

    if (variant == EvalVariant::union_ && !any_multi_gold && any_single_gold)
        report.warnings.push_back(
            "UNION requested on a single-label benchmark; ANY/ALL are the usual variants");
    if (variant != EvalVariant::union_ && any_multi_gold)
        report.warnings.push_back(
            "ANY/ALL on multi-labeled sentences generalizes to gold-set membership");

    detail::finalize_report(report, macro);
    return report;
}

inline EvalReport score(const std::map<std::string, std::set<std::string>>& gold,
                        std::span<const PredictionRecord> predictions,
                        EvalVariant variant, bool macro = false) {
    switch (variant) {
        case EvalVariant::sentence_single:
            return score_sentence_unit(gold, predictions, false, macro);
        case EvalVariant::sentence_multi:
            return score_sentence_unit(gold, predictions, true, macro);
        default:
            return score_clause_unit(gold, predictions, variant, macro);
    }
}

// Cross-validation -------------------------------------------------------------

struct ScoreSummary {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct CrossvalResult {
    ScoreSummary mean;  // arithmetic mean of per-fold P, R and F1
    std::vector<EvalReport> per_fold;
    std::vector<std::string> warnings;
};

using ModelRunner = std::function<std::vector<PredictionRecord>(
    std::span<const GoldFact> train, std::span<const GoldFact> test)>;

namespace detail {

inline std::vector<std::string> shuffled_sentence_keys(std::span<const GoldFact> facts,
                                                       uint64_t seed) {
    std::set<std::string> keys;
    for (const auto& f : facts) keys.insert(f.sentence_key());
    std::vector<std::string> out(keys.begin(), keys.end());
    std::mt19937_64 rng(seed);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

inline CrossvalResult run_folds(
    const ModelRunner& runner, const EvalConfig& config,
    const std::vector<std::vector<GoldFact>>& fold_tests) {
    CrossvalResult result;
    double p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
    size_t used = 0;
    for (size_t f = 0; f < fold_tests.size(); ++f) {
        const auto& test = fold_tests[f];
        if (test.empty()) {
            result.warnings.push_back("fold " + std::to_string(f) +
                                      " has no gold facts; excluded");
            continue;
        }
        std::vector<GoldFact> train;
        for (size_t g = 0; g < fold_tests.size(); ++g)
            if (g != f) train.insert(train.end(), fold_tests[g].begin(), fold_tests[g].end());
        std::vector<PredictionRecord> preds = runner(train, test);
        EvalReport rep = score(gold_label_sets(test), preds, config.variant, config.macro);
        p_sum += rep.precision;
        r_sum += rep.recall;
        f_sum += rep.f1;
        ++used;
        result.per_fold.push_back(std::move(rep));
    }
    if (used) {
        result.mean.precision = p_sum / used;
        result.mean.recall = r_sum / used;
        result.mean.f1 = f_sum / used;
    }
    return result;
}

}  // namespace detail

// k-fold cross-validation (fold ids from the gold file when every fact has
// one, otherwise a seeded split over sentences) or repeated random splits
// (runs x train_fraction). Deterministic for a fixed seed.
inline CrossvalResult crossval(std::span<const GoldFact> facts, const ModelRunner& runner,
                               const EvalConfig& config) {
    if (config.splits) {
        auto [runs, fraction] = *config.splits;
        if (runs == 0 || fraction <= 0.0 || fraction >= 1.0)
            throw std::invalid_argument("bad split spec");
        CrossvalResult result;
        double p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
        size_t used = 0;
        for (uint32_t run = 0; run < runs; ++run) {
            auto keys = detail::shuffled_sentence_keys(
                facts, splitmix64(config.seed + run));
            size_t train_n = static_cast<size_t>(keys.size() * fraction);
            std::set<std::string> train_keys(keys.begin(), keys.begin() + train_n);
            std::vector<GoldFact> train, test;
            for (const auto& f : facts)
                (train_keys.count(f.sentence_key()) ? train : test).push_back(f);
            if (test.empty()) {
                result.warnings.push_back("run " + std::to_string(run) +
                                          " has no test facts; excluded");
                continue;
            }
            std::vector<PredictionRecord> preds = runner(train, test);
            EvalReport rep =
                score(gold_label_sets(test), preds, config.variant, config.macro);
            p_sum += rep.precision;
            r_sum += rep.recall;
            f_sum += rep.f1;
            ++used;
            result.per_fold.push_back(std::move(rep));
        }
        if (used) {
            result.mean.precision = p_sum / used;
            result.mean.recall = r_sum / used;
            result.mean.f1 = f_sum / used;
        }
        return result;
    }

    uint32_t k = config.folds.value_or(4);
    if (k == 0) throw std::invalid_argument("fold count must be positive");
    std::vector<std::vector<GoldFact>> fold_tests(k);
    bool all_have_folds = !facts.empty();
    for (const auto& f : facts)
        if (!f.fold) all_have_folds = false;
    if (all_have_folds) {
        for (const auto& f : facts) fold_tests[*f.fold % k].push_back(f);
    } else {
        auto keys = detail::shuffled_sentence_keys(facts, config.seed);
        std::map<std::string, uint32_t> fold_of;
        for (size_t i = 0; i < keys.size(); ++i)
            fold_of[keys[i]] = static_cast<uint32_t>(i % k);
        for (const auto& f : facts) fold_tests[fold_of[f.sentence_key()]].push_back(f);
    }
    return detail::run_folds(runner, config, fold_tests);
}

// Prediction file I/O ------------------------------------------------------------
//
// One record per line: unit_kind  unit_id  parent_sentence_id
// comma-separated ranked labels (empty = abstain)  model name

inline std::vector<PredictionRecord> load_predictions(
    const std::string& path, const std::set<std::string>& known_sentences = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open prediction file: " + path);
    std::vector<PredictionRecord> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto f = split(line, '\t');
        if (f.size() != 5)
            throw std::runtime_error("prediction line " + std::to_string(line_no) +
                                     ": expected 5 fields, got " +
                                     std::to_string(f.size()));
        PredictionRecord p;
        p.unit_kind = unit_kind_from_string(f[0]);
        p.unit_id = unescape_field(f[1]);
        p.parent_sentence_id = unescape_field(f[2]);
        if (!f[3].empty())
            for (auto& l : split(f[3], ','))
                if (!l.empty()) p.labels.push_back(unescape_field(l));
        p.source = unescape_field(f[4]);
        if (!known_sentences.empty() && !known_sentences.count(p.parent_sentence_id))
            throw std::runtime_error("prediction line " + std::to_string(line_no) +
                                     ": unknown sentence id " + p.parent_sentence_id);
        out.push_back(std::move(p));
    }
    return out;
}

inline void save_predictions(std::span<const PredictionRecord> predictions,
                             const std::string& path) {
    std::string out;
    for (const auto& p : predictions) {
        std::vector<std::string> escaped;
        for (const auto& l : p.labels) escaped.push_back(escape_field(l));
        out += to_string(p.unit_kind) + "\t" + escape_field(p.unit_id) + "\t" +
               escape_field(p.parent_sentence_id) + "\t" + join(escaped, ",") + "\t" +
               escape_field(p.source) + "\n";
    }
    write_file(path, out);
}

// Report rendering -----------------------------------------------------------------

inline std::string format_report(const EvalReport& r) {
    char buf[256];
    std::string out;
    out += "variant: " + to_string(r.variant) + "  aggregation: " + r.aggregation + "\n";
    std::snprintf(buf, sizeof(buf),
                  "P = %.6f  R = %.6f  F1 = %.6f  (tp=%llu fp=%llu fn=%llu)\n",
                  r.precision, r.recall, r.f1,
                  static_cast<unsigned long long>(r.tp),
                  static_cast<unsigned long long>(r.fp),
                  static_cast<unsigned long long>(r.fn));
    out += buf;
    if (!r.per_relation.empty()) {
        out += "relation breakdown:\n";
        for (const auto& [rel, c] : r.per_relation) {
            std::snprintf(buf, sizeof(buf), "  %-24s tp=%-6llu fp=%-6llu fn=%-6llu\n",
                          rel.c_str(), static_cast<unsigned long long>(c.tp),
                          static_cast<unsigned long long>(c.fp),
                          static_cast<unsigned long long>(c.fn));
            out += buf;
        }
    }
    for (const auto& w : r.warnings) out += "warning: " + w + "\n";
    return out;
}

// Machine-readable line records: metric\t<name>\t<value> and
// relation\t<id>\ttp\tfp\tfn.
inline std::string report_to_records(const EvalReport& r) {
    char buf[128];
    std::string out;
    out += "metric\tvariant\t" + to_string(r.variant) + "\n";
    out += "metric\taggregation\t" + r.aggregation + "\n";
    std::snprintf(buf, sizeof(buf), "%.12f", r.precision);
    out += std::string("metric\tprecision\t") + buf + "\n";
    std::snprintf(buf, sizeof(buf), "%.12f", r.recall);
    out += std::string("metric\trecall\t") + buf + "\n";
    std::snprintf(buf, sizeof(buf), "%.12f", r.f1);
    out += std::string("metric\tf1\t") + buf + "\n";
    out += "metric\ttp\t" + std::to_string(r.tp) + "\n";
    out += "metric\tfp\t" + std::to_string(r.fp) + "\n";
    out += "metric\tfn\t" + std::to_string(r.fn) + "\n";
    for (const auto& [rel, c] : r.per_relation)
        out += "relation\t" + escape_field(rel) + "\t" + std::to_string(c.tp) + "\t" +
               std::to_string(c.fp) + "\t" + std::to_string(c.fn) + "\n";
    return out;
}

}  // namespace bigtext
