#pragma once
// Distant supervision: transfer sentence-level gold facts to clause-level
// labels when the clause's single entity-linked subject and object mentions
// match the fact's argument spans.

#include "graph.hpp"
#include "ingest.hpp"
#include "util.hpp"

#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace bigtext {

struct GoldFact {
    std::string doc_id;        // document external_id
    uint32_t sentence_index = 0;
    Span subject_span;         // byte offsets into the document text
    Span object_span;
    std::string relation_id;
    std::optional<uint32_t> fold;

    std::string sentence_key() const {
        return doc_id + ":" + std::to_string(sentence_index);
    }
};

// Gold file: doc_id  sentence_index  subj_begin  subj_end  obj_begin  obj_end
// relation_id  [fold]
inline std::vector<GoldFact> load_gold(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open gold file: " + path);
    std::vector<GoldFact> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto f = split(line, '\t');
        if (f.size() != 7 && f.size() != 8)
            throw std::runtime_error("gold line " + std::to_string(line_no) +
                                     ": expected 7 or 8 fields");
        GoldFact g;
        g.doc_id = unescape_field(f[0]);
        g.sentence_index = static_cast<uint32_t>(std::stoul(f[1]));
        g.subject_span = {static_cast<uint32_t>(std::stoul(f[2])),
                          static_cast<uint32_t>(std::stoul(f[3]))};
        g.object_span = {static_cast<uint32_t>(std::stoul(f[4])),
                         static_cast<uint32_t>(std::stoul(f[5]))};
        g.relation_id = unescape_field(f[6]);
        if (f.size() == 8 && !f[7].empty())
            g.fold = static_cast<uint32_t>(std::stoul(f[7]));
        if (!g.subject_span.valid() || !g.object_span.valid())
            throw std::runtime_error("gold line " + std::to_string(line_no) +
                                     ": invalid span");
        out.push_back(std::move(g));
    }
    return out;
}

inline void save_gold(std::span<const GoldFact> facts, const std::string& path) {
    std::string out;
    for (const auto& g : facts) {
        out += escape_field(g.doc_id) + "\t" + std::to_string(g.sentence_index) + "\t" +
               std::to_string(g.subject_span.begin) + "\t" +
               std::to_string(g.subject_span.end) + "\t" +
               std::to_string(g.object_span.begin) + "\t" +
               std::to_string(g.object_span.end) + "\t" + escape_field(g.relation_id);
        if (g.fold) out += "\t" + std::to_string(*g.fold);
        out += "\n";
    }
    write_file(path, out);
}

struct LabeledClause {
    VertexId clause;
    std::string relation_id;
    size_t fact_index = 0;  // into the aligned fact list
};

// A clause participates only when it has exactly one entity-linked subject
// mention and one entity-linked object mention (coreference may supply the
// link). The fact's label transfers iff the subject mention span matches the
// fact's subject span and the object mention span matches the fact's object
// span under the chosen predicate; arguments never swap.
inline std::vector<LabeledClause> align(const PropertyGraph& graph,
                                        std::span<const GoldFact> facts,
                                        SpanMatch match) {
    std::vector<LabeledClause> out;
    for (size_t fi = 0; fi < facts.size(); ++fi) {
        const GoldFact& fact = facts[fi];
        auto sent = graph.find_sentence(fact.doc_id, fact.sentence_index);
        if (!sent) continue;
        for (uint32_t c : graph.sentence_clauses(*sent)) {
            auto subjects = graph.resolved_role_mentions(c, SyntacticRole::subject);
            auto objects = graph.resolved_role_mentions(c, SyntacticRole::object);
            if (subjects.size() != 1 || objects.size() != 1) continue;
            const Span& ssp = graph.mention(subjects.front().first).char_span;
            const Span& osp = graph.mention(objects.front().first).char_span;
            if (spans_match(ssp, fact.subject_span, match) &&
                spans_match(osp, fact.object_span, match))
                out.push_back({{VertexKind::clause, c}, fact.relation_id, fi});
        }
    }
    return out;
}

struct TrainingRecord {
    std::string clause_text;
    std::string relation_id;
    std::string sentence_key;
    VertexId clause;
};

// Renders the clause as subject + predicate + object text and drops any
// clause whose parent sentence is held out (example sentences used for
// signature construction must not leak into evaluation).
inline std::vector<TrainingRecord> emit_training_set(
    const PropertyGraph& graph, std::span<const LabeledClause> labeled,
    const std::set<std::string>& holdout_sentence_keys = {}) {
    std::vector<TrainingRecord> out;
    for (const auto& lc : labeled) {
        uint32_t c = lc.clause.ordinal;
        uint32_t sent = graph.clause_sentence_parent(c);
        std::string key = graph.sentence_key(sent);
        if (holdout_sentence_keys.count(key)) continue;
        uint32_t doc = graph.sentence_document(sent);
        const ClauseProps& cp = graph.clause(c);
        std::string text = graph.text_slice(doc, cp.subject_span) + " " +
                           cp.predicate_text;
        if (cp.object_span) text += " " + graph.text_slice(doc, *cp.object_span);
        out.push_back({std::move(text), lc.relation_id, std::move(key), lc.clause});
    }
    return out;
}

// Reproducible n-per-relation sample (e.g. the 5 example sentences per
// relation used for contextualized signatures).
inline std::vector<TrainingRecord> sample_per_relation(
    std::span<const TrainingRecord> records, size_t n, uint64_t seed) {
    std::map<std::string, std::vector<size_t>> by_relation;
    for (size_t i = 0; i < records.size(); ++i)
        by_relation[records[i].relation_id].push_back(i);
    std::vector<TrainingRecord> out;
    std::mt19937_64 rng(seed);
    for (auto& [rel, indices] : by_relation) {
        std::shuffle(indices.begin(), indices.end(), rng);
        size_t take = std::min(n, indices.size());
        std::vector<size_t> picked(indices.begin(), indices.begin() + take);
        std::sort(picked.begin(), picked.end());
        for (size_t i : picked) out.push_back(records[i]);
    }
    return out;
}

// labeled.tsv: clause_id  sentence_key  relation_id  fact_index
inline void save_labeled(const PropertyGraph& graph,
                         std::span<const LabeledClause> labeled,
                         const std::string& path) {
    std::string out;
    for (const auto& lc : labeled) {
        uint32_t sent = graph.clause_sentence_parent(lc.clause.ordinal);
        out += lc.clause.to_string() + "\t" + graph.sentence_key(sent) + "\t" +
               escape_field(lc.relation_id) + "\t" + std::to_string(lc.fact_index) + "\n";
    }
    write_file(path, out);
}

}  // namespace bigtext
