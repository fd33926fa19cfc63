#pragma once
// Corpus ingestion: parse line-delimited annotated-document records, merge
// multi-annotator mention/clause layers under precision- or recall-oriented
// policies, and populate the property graph.
//
// Record format (one JSON object per line, schema "bigtext-corpus/1"):
//   {"schema":"bigtext-corpus/1","external_id":...,"title":...,
//    "source_url":...,"timestamp":...,"text":...,
//    "sentences":[{"span":[b,e],
//      "tokens":[{"span":[b,e],"pos":"VBD","lemma":"marry"}],
//      "clauses":[{"subject":[b,e],"predicate":[b,e],"object":[b,e],
//                  "adverbials":[[b,e],...],"annotator":"clausie"}],
//      "mentions":[{"span":[b,e],"ner":"PER","kb_id":"Q42",
//                   "annotator":"stanford"}],
//      "coref":[[[b,e],[b,e]],...]}]}
// All spans are byte offsets into "text". "object", "kb_id", "source_url"
// and "timestamp" are optional.

#include "graph.hpp"
#include "util.hpp"

#include <json.hpp>

#include <functional>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bigtext {

struct TokenAnnotation {
    Span span;
    std::string pos;
    std::string lemma;
    friend bool operator==(const TokenAnnotation&, const TokenAnnotation&) = default;
};

struct ClauseAnnotation {
    Span subject_span;
    Span predicate_span;
    std::optional<Span> object_span;
    std::vector<Span> adverbial_spans;
    std::string annotator;
    friend bool operator==(const ClauseAnnotation&, const ClauseAnnotation&) = default;
};

struct MentionAnnotation {
    Span span;
    std::string ner_type;
    std::optional<std::string> kb_id;
    std::string annotator;
    friend bool operator==(const MentionAnnotation&, const MentionAnnotation&) = default;
};

struct SentenceAnnotation {
    Span char_span;
    std::vector<TokenAnnotation> tokens;
    std::vector<ClauseAnnotation> clauses;
    std::vector<MentionAnnotation> mentions;
    std::vector<std::pair<Span, Span>> coref_pairs;
    friend bool operator==(const SentenceAnnotation&, const SentenceAnnotation&) = default;
};

struct AnnotatedDocumentRecord {
    std::string external_id;
    std::string title;
    std::string source_url;
    std::string timestamp;
    std::string text;
    std::vector<SentenceAnnotation> sentences;
    friend bool operator==(const AnnotatedDocumentRecord&,
                           const AnnotatedDocumentRecord&) = default;
};

enum class MergeMode { union_, intersection };
enum class SpanMatch { exact, overlap };
enum class AnnotationLayer { mentions, clauses };

struct MergePolicy {
    MergeMode mode = MergeMode::union_;
    SpanMatch span_match = SpanMatch::exact;
};

inline MergeMode merge_mode_from_string(std::string_view s) {
    if (s == "union") return MergeMode::union_;
    if (s == "intersection") return MergeMode::intersection;
    throw std::invalid_argument("bad merge mode: " + std::string(s));
}

inline SpanMatch span_match_from_string(std::string_view s) {
    if (s == "exact") return SpanMatch::exact;
    if (s == "overlap") return SpanMatch::overlap;
    throw std::invalid_argument("bad span match: " + std::string(s));
}

inline bool spans_match(const Span& a, const Span& b, SpanMatch m) {
    return m == SpanMatch::exact ? a == b : a.overlaps(b);
}

// Record parsing -------------------------------------------------------

inline constexpr const char* kCorpusSchema = "bigtext-corpus/1";

namespace detail {

inline Span parse_span(const nlohmann::json& j, uint32_t text_size, const char* what) {
    if (!j.is_array() || j.size() != 2)
        throw std::runtime_error(std::string(what) + ": span must be [begin,end]");
    Span s{j[0].get<uint32_t>(), j[1].get<uint32_t>()};
    if (!s.valid() || s.end > text_size)
        throw std::runtime_error(std::string(what) + ": span out of bounds");
    return s;
}

}  // namespace detail

inline AnnotatedDocumentRecord parse_record(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    if (j.value("schema", "") != kCorpusSchema)
        throw std::runtime_error("unknown schema (expected " + std::string(kCorpusSchema) +
                                 "): " + j.value("schema", "<missing>"));
    AnnotatedDocumentRecord rec;
    rec.external_id = j.at("external_id").get<std::string>();
    rec.title = j.value("title", "");
    rec.source_url = j.value("source_url", "");
    rec.timestamp = j.value("timestamp", "");
    rec.text = j.at("text").get<std::string>();
    auto n = static_cast<uint32_t>(rec.text.size());
    for (const auto& js : j.value("sentences", nlohmann::json::array())) {
        SentenceAnnotation sent;
        sent.char_span = detail::parse_span(js.at("span"), n, "sentence");
        uint32_t prev_end = 0;
        for (const auto& jt : js.value("tokens", nlohmann::json::array())) {
            TokenAnnotation tok;
            tok.span = detail::parse_span(jt.at("span"), n, "token");
            if (tok.span.begin < prev_end)
                throw std::runtime_error("tokens overlap or are out of order");
            prev_end = tok.span.end;
            tok.pos = jt.value("pos", "");
            tok.lemma = jt.value("lemma", "");
            sent.tokens.push_back(std::move(tok));
        }
        for (const auto& jc : js.value("clauses", nlohmann::json::array())) {
            ClauseAnnotation cl;
            cl.subject_span = detail::parse_span(jc.at("subject"), n, "clause subject");
            cl.predicate_span = detail::parse_span(jc.at("predicate"), n, "clause predicate");
            if (jc.contains("object") && !jc["object"].is_null())
                cl.object_span = detail::parse_span(jc["object"], n, "clause object");
            for (const auto& ja : jc.value("adverbials", nlohmann::json::array()))
                cl.adverbial_spans.push_back(detail::parse_span(ja, n, "clause adverbial"));
            cl.annotator = jc.value("annotator", "unknown");
            sent.clauses.push_back(std::move(cl));
        }
        for (const auto& jm : js.value("mentions", nlohmann::json::array())) {
            MentionAnnotation m;
            m.span = detail::parse_span(jm.at("span"), n, "mention");
            m.ner_type = jm.value("ner", "none");
            if (jm.contains("kb_id") && !jm["kb_id"].is_null())
                m.kb_id = jm["kb_id"].get<std::string>();
            m.annotator = jm.value("annotator", "unknown");
            sent.mentions.push_back(std::move(m));
        }
        for (const auto& jp : js.value("coref", nlohmann::json::array())) {
            if (!jp.is_array() || jp.size() != 2)
                throw std::runtime_error("coref entry must be a span pair");
            sent.coref_pairs.emplace_back(detail::parse_span(jp[0], n, "coref"),
                                          detail::parse_span(jp[1], n, "coref"));
        }
        rec.sentences.push_back(std::move(sent));
    }
    return rec;
}

inline std::string record_to_json_line(const AnnotatedDocumentRecord& rec) {
    nlohmann::json j;
    j["schema"] = kCorpusSchema;
    j["external_id"] = rec.external_id;
    if (!rec.title.empty()) j["title"] = rec.title;
    if (!rec.source_url.empty()) j["source_url"] = rec.source_url;
    if (!rec.timestamp.empty()) j["timestamp"] = rec.timestamp;
    j["text"] = rec.text;
    j["sentences"] = nlohmann::json::array();
    auto span_json = [](const Span& s) {
        return nlohmann::json::array({s.begin, s.end});
    };
    for (const auto& sent : rec.sentences) {
        nlohmann::json js;
        js["span"] = span_json(sent.char_span);
        js["tokens"] = nlohmann::json::array();
        for (const auto& t : sent.tokens)
            js["tokens"].push_back({{"span", span_json(t.span)},
                                    {"pos", t.pos},
                                    {"lemma", t.lemma}});
        js["clauses"] = nlohmann::json::array();
        for (const auto& c : sent.clauses) {
            nlohmann::json jc;
            jc["subject"] = span_json(c.subject_span);
            jc["predicate"] = span_json(c.predicate_span);
            if (c.object_span) jc["object"] = span_json(*c.object_span);
            if (!c.adverbial_spans.empty()) {
                jc["adverbials"] = nlohmann::json::array();
                for (const auto& a : c.adverbial_spans)
                    jc["adverbials"].push_back(span_json(a));
            }
            jc["annotator"] = c.annotator;
            js["clauses"].push_back(std::move(jc));
        }
        js["mentions"] = nlohmann::json::array();
        for (const auto& m : sent.mentions) {
            nlohmann::json jm;
            jm["span"] = span_json(m.span);
            jm["ner"] = m.ner_type;
            if (m.kb_id) jm["kb_id"] = *m.kb_id;
            jm["annotator"] = m.annotator;
            js["mentions"].push_back(std::move(jm));
        }
        if (!sent.coref_pairs.empty()) {
            js["coref"] = nlohmann::json::array();
            for (const auto& [a, b] : sent.coref_pairs)
                js["coref"].push_back({span_json(a), span_json(b)});
        }
        j["sentences"].push_back(std::move(js));
    }
    return j.dump();
}

struct ParseWarning {
    size_t line_number;
    std::string message;
};

// Streaming reader over a corpus file: one record per call, constant memory.
// Malformed lines throw unless lenient, in which case they become warnings.
class CorpusReader {
public:
    CorpusReader(std::istream& in, bool lenient = false)
        : in_(in), lenient_(lenient) {}

    std::optional<AnnotatedDocumentRecord> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_number_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            try {
                return parse_record(line);
            } catch (const std::exception& e) {
                if (!lenient_)
                    throw std::runtime_error("line " + std::to_string(line_number_) +
                                             ": " + e.what());
                warnings_.push_back({line_number_, e.what()});
            }
        }
        return std::nullopt;
    }

    const std::vector<ParseWarning>& warnings() const { return warnings_; }

private:
    std::istream& in_;
    bool lenient_;
    size_t line_number_ = 0;
    std::vector<ParseWarning> warnings_;
};

// Annotation merging ----------------------------------------------------

namespace detail {

// Ranks annotators by the configured priority list; names not listed come
// after all listed ones, ordered lexicographically.
inline std::pair<size_t, std::string> annotator_rank(
    const std::string& name, const std::vector<std::string>& priority) {
    for (size_t i = 0; i < priority.size(); ++i)
        if (priority[i] == name) return {i, name};
    return {priority.size(), name};
}

// Splits a single merged-annotator tag like "a+b" back into contributors.
inline std::vector<std::string> contributors_of(const std::string& annotator) {
    return split(annotator, '+');
}

template <typename T>
std::vector<std::vector<size_t>> group_matching(const std::vector<T>& items,
                                                SpanMatch span_match,
                                                bool (*same)(const T&, const T&, SpanMatch)) {
    std::vector<size_t> parent(items.size());
    for (size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    std::function<size_t(size_t)> find = [&](size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (size_t i = 0; i < items.size(); ++i)
        for (size_t j = i + 1; j < items.size(); ++j)
            if (same(items[i], items[j], span_match)) parent[find(i)] = find(j);
    std::map<size_t, std::vector<size_t>> buckets;
    for (size_t i = 0; i < items.size(); ++i) buckets[find(i)].push_back(i);
    std::vector<std::vector<size_t>> out;
    for (auto& [_, members] : buckets) out.push_back(std::move(members));
    return out;
}

inline bool same_mention(const MentionAnnotation& a, const MentionAnnotation& b,
                         SpanMatch m) {
    return a.ner_type == b.ner_type && spans_match(a.span, b.span, m);
}

inline bool same_clause(const ClauseAnnotation& a, const ClauseAnnotation& b,
                        SpanMatch m) {
    if (!spans_match(a.subject_span, b.subject_span, m)) return false;
    if (!spans_match(a.predicate_span, b.predicate_span, m)) return false;
    if (a.object_span.has_value() != b.object_span.has_value()) return false;
    if (a.object_span && !spans_match(*a.object_span, *b.object_span, m)) return false;
    return true;
}

inline uint32_t clause_extent(const ClauseAnnotation& c) {
    uint32_t n = c.subject_span.length() + c.predicate_span.length();
    if (c.object_span) n += c.object_span->length();
    return n;
}

}  // namespace detail

// Merges one annotation layer of a record. Union keeps one representative per
// group of matching annotations; intersection keeps only groups asserted by
// every annotator present in that layer of the record. The representative is
// the longest annotation, ties broken toward the lexicographically earlier
// annotator; kb_id disagreements resolve to the highest-priority annotator's
// value. Merged annotations carry a combined "a+b" annotator tag, which makes
// the operation idempotent.
inline AnnotatedDocumentRecord merge_annotations(
    const AnnotatedDocumentRecord& record, AnnotationLayer layer, MergePolicy policy,
    const std::vector<std::string>& annotator_priority = {}) {
    AnnotatedDocumentRecord out = record;

    std::set<std::string> present;
    for (const auto& sent : record.sentences) {
        if (layer == AnnotationLayer::mentions)
            for (const auto& m : sent.mentions)
                for (const auto& c : detail::contributors_of(m.annotator))
                    present.insert(c);
        if (layer == AnnotationLayer::clauses)
            for (const auto& c : sent.clauses)
                for (const auto& a : detail::contributors_of(c.annotator))
                    present.insert(a);
    }

    for (auto& sent : out.sentences) {
        if (layer == AnnotationLayer::mentions) {
            auto groups = detail::group_matching<MentionAnnotation>(
                sent.mentions, policy.span_match, detail::same_mention);
            std::vector<MentionAnnotation> merged;
            for (const auto& group : groups) {
                std::set<std::string> contributors;
                for (size_t idx : group)
                    for (const auto& c :
                         detail::contributors_of(sent.mentions[idx].annotator))
                        contributors.insert(c);
                if (policy.mode == MergeMode::intersection &&
                    contributors.size() < present.size())
                    continue;
                size_t rep = group.front();
                for (size_t idx : group) {
                    const auto& a = sent.mentions[idx];
                    const auto& r = sent.mentions[rep];
                    if (a.span.length() > r.span.length() ||
                        (a.span.length() == r.span.length() &&
                         a.annotator < r.annotator))
                        rep = idx;
                }
                MentionAnnotation m = sent.mentions[rep];
                std::optional<std::string> kb;
                std::pair<size_t, std::string> best_rank{SIZE_MAX, ""};
                for (size_t idx : group) {
                    const auto& a = sent.mentions[idx];
                    if (!a.kb_id) continue;
                    auto rank = detail::annotator_rank(a.annotator, annotator_priority);
                    if (!kb || rank < best_rank) {
                        kb = a.kb_id;
                        best_rank = rank;
                    }
                }
                m.kb_id = kb;
                m.annotator = join({contributors.begin(), contributors.end()}, "+");
                merged.push_back(std::move(m));
            }
            std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
                return std::tie(a.span, a.ner_type) < std::tie(b.span, b.ner_type);
            });
            sent.mentions = std::move(merged);
        } else {
            auto groups = detail::group_matching<ClauseAnnotation>(
                sent.clauses, policy.span_match, detail::same_clause);
            std::vector<ClauseAnnotation> merged;
            for (const auto& group : groups) {
                std::set<std::string> contributors;
                for (size_t idx : group)
                    for (const auto& c :
                         detail::contributors_of(sent.clauses[idx].annotator))
                        contributors.insert(c);
                if (policy.mode == MergeMode::intersection &&
                    contributors.size() < present.size())
                    continue;
                size_t rep = group.front();
                for (size_t idx : group) {
                    const auto& a = sent.clauses[idx];
                    const auto& r = sent.clauses[rep];
                    if (detail::clause_extent(a) > detail::clause_extent(r) ||
                        (detail::clause_extent(a) == detail::clause_extent(r) &&
                         a.annotator < r.annotator))
                        rep = idx;
                }
                ClauseAnnotation c = sent.clauses[rep];
                c.annotator = join({contributors.begin(), contributors.end()}, "+");
                merged.push_back(std::move(c));
            }
            std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
                return std::tie(a.subject_span, a.predicate_span, a.object_span) <
                       std::tie(b.subject_span, b.predicate_span, b.object_span);
            });
            sent.clauses = std::move(merged);
        }
    }
    return out;
}

// Graph building --------------------------------------------------------

struct SentenceToken {
    std::string text;
    std::string pos;    // Penn Treebank tag
    std::string lemma;
};

// Per-sentence token annotations, kept outside the graph proper. Clause
// predicate_token_indices index into these lists; the store persists as
// tokens.tsv next to the graph snapshot.
class TokenStore {
public:
    TokenStore() = default;

    void set(uint32_t sentence_ordinal, std::vector<SentenceToken> tokens) {
        if (sentence_ordinal >= tokens_.size()) tokens_.resize(sentence_ordinal + 1);
        tokens_[sentence_ordinal] = std::move(tokens);
    }

    std::span<const SentenceToken> get(uint32_t sentence_ordinal) const {
        if (sentence_ordinal >= tokens_.size()) return {};
        return tokens_[sentence_ordinal];
    }

    // tokens.tsv: sentence  text  pos  lemma
    void save(const std::string& path) const {
        std::string out;
        for (uint32_t s = 0; s < tokens_.size(); ++s)
            for (const auto& t : tokens_[s])
                out += std::to_string(s) + "\t" + escape_field(t.text) + "\t" +
                       escape_field(t.pos) + "\t" + escape_field(t.lemma) + "\n";
        write_file(path, out);
    }

    static TokenStore load(const std::string& path) {
        TokenStore store;
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open token store: " + path);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto f = split(line, '\t');
            if (f.size() != 4) throw std::runtime_error("bad token store row");
            uint32_t s = static_cast<uint32_t>(std::stoul(f[0]));
            if (s >= store.tokens_.size()) store.tokens_.resize(s + 1);
            store.tokens_[s].push_back(
                {unescape_field(f[1]), unescape_field(f[2]), unescape_field(f[3])});
        }
        return store;
    }

private:
    std::vector<std::vector<SentenceToken>> tokens_;
};

struct BuildReport {
    GraphStats stats;
    uint64_t skipped_mentions = 0;   // mentions outside any clause constituent
    uint64_t skipped_coref = 0;      // coref spans with no mention vertex
    std::vector<ParseWarning> warnings;
};

namespace detail {

inline SyntacticRole mention_role(const ClauseAnnotation& clause, const Span& span) {
    if (clause.subject_span.contains(span)) return SyntacticRole::subject;
    if (clause.object_span && clause.object_span->contains(span))
        return SyntacticRole::object;
    return SyntacticRole::other;
}

inline bool mention_in_clause(const ClauseAnnotation& clause, const Span& span) {
    if (clause.subject_span.contains(span)) return true;
    if (clause.object_span && clause.object_span->contains(span)) return true;
    for (const Span& a : clause.adverbial_spans)
        if (a.contains(span)) return true;
    return false;
}

}  // namespace detail

// Populates the graph from one record. Sentences are attached in char-span
// order, clauses and mentions in the deterministic order produced by the
// merge step, so ordinals depend only on record content and input order.
inline void add_record_to_graph(PropertyGraph& graph,
                                const AnnotatedDocumentRecord& record,
                                BuildReport& report, TokenStore* tokens = nullptr) {
    VertexId doc = graph.add_document(
        {record.title, record.source_url, record.timestamp, record.external_id},
        record.text);

    std::vector<size_t> sentence_order(record.sentences.size());
    for (size_t i = 0; i < sentence_order.size(); ++i) sentence_order[i] = i;
    std::sort(sentence_order.begin(), sentence_order.end(), [&](size_t a, size_t b) {
        return record.sentences[a].char_span < record.sentences[b].char_span;
    });

    // All mention vertices created for a document span, keyed by char span;
    // coref pairs may reference spans in earlier sentences.
    std::map<Span, std::vector<VertexId>> span_vertices;
    std::vector<std::pair<Span, Span>> coref_pairs;

    uint32_t sentence_index = 0;
    for (size_t si : sentence_order) {
        const SentenceAnnotation& sent = record.sentences[si];
        SentenceProps sp;
        sp.index_in_doc = sentence_index++;
        sp.char_span = sent.char_span;
        VertexId sv = graph.attach_sentence(doc, std::move(sp));

        if (tokens) {
            std::vector<SentenceToken> toks;
            toks.reserve(sent.tokens.size());
            for (const TokenAnnotation& t : sent.tokens)
                toks.push_back({record.text.substr(t.span.begin, t.span.length()),
                                t.pos, t.lemma});
            tokens->set(sv.ordinal, std::move(toks));
        }

        std::vector<VertexId> clause_ids;
        uint32_t clause_index = 0;
        for (const ClauseAnnotation& ca : sent.clauses) {
            ClauseProps cp;
            cp.subject_span = ca.subject_span;
            cp.object_span = ca.object_span;
            cp.adverbial_spans = ca.adverbial_spans;
            cp.index_in_sentence = clause_index++;
            cp.predicate_text = record.text.substr(ca.predicate_span.begin,
                                                   ca.predicate_span.length());
            for (uint32_t t = 0; t < sent.tokens.size(); ++t)
                if (sent.tokens[t].span.overlaps(ca.predicate_span))
                    cp.predicate_token_indices.push_back(t);
            clause_ids.push_back(graph.attach_clause(sv, std::move(cp)));
        }

        for (const MentionAnnotation& ma : sent.mentions) {
            bool attached = false;
            for (size_t ci = 0; ci < sent.clauses.size(); ++ci) {
                const ClauseAnnotation& ca = sent.clauses[ci];
                if (!detail::mention_in_clause(ca, ma.span)) continue;
                MentionProps mp;
                mp.char_span = ma.span;
                mp.role = detail::mention_role(ca, ma.span);
                mp.ner = ner_from_string(ma.ner_type);
                mp.source_annotator = ma.annotator;
                // POS and lemma of the last covered token, the usual head of
                // an English noun phrase.
                for (const TokenAnnotation& t : sent.tokens)
                    if (ma.span.contains(t.span)) {
                        mp.pos = t.pos;
                        mp.lemma = t.lemma;
                    }
                VertexId mv = graph.attach_mention(clause_ids[ci], std::move(mp));
                if (ma.kb_id)
                    graph.link_entity(mv, *ma.kb_id, graph.mention(mv.ordinal).surface);
                span_vertices[ma.span].push_back(mv);
                attached = true;
            }
            if (!attached) ++report.skipped_mentions;
        }

        for (const auto& pr : sent.coref_pairs) coref_pairs.push_back(pr);
    }

    for (const auto& [a, b] : coref_pairs) {
        auto ia = span_vertices.find(a);
        auto ib = span_vertices.find(b);
        if (ia == span_vertices.end() || ib == span_vertices.end()) {
            ++report.skipped_coref;
            continue;
        }
        for (VertexId ma : ia->second)
            for (VertexId mb : ib->second)
                if (ma != mb) graph.add_coref_link(ma, mb);
    }
}

// Streams records into a fresh graph, merging both annotation layers under
// the given policy first.
template <typename RecordSource>
BuildReport build_graph(PropertyGraph& graph, RecordSource&& next_record,
                        MergePolicy policy,
                        const std::vector<std::string>& annotator_priority = {},
                        TokenStore* tokens = nullptr) {
    BuildReport report;
    while (auto rec = next_record()) {
        AnnotatedDocumentRecord merged =
            merge_annotations(*rec, AnnotationLayer::clauses, policy, annotator_priority);
        merged =
            merge_annotations(merged, AnnotationLayer::mentions, policy, annotator_priority);
        add_record_to_graph(graph, merged, report, tokens);
    }
    report.stats = graph.stats();
    return report;
}

inline BuildReport build_graph_from_records(
    PropertyGraph& graph, const std::vector<AnnotatedDocumentRecord>& records,
    MergePolicy policy, const std::vector<std::string>& annotator_priority = {},
    TokenStore* tokens = nullptr) {
    size_t i = 0;
    return build_graph(
        graph,
        [&]() -> std::optional<AnnotatedDocumentRecord> {
            if (i >= records.size()) return std::nullopt;
            return records[i++];
        },
        policy, annotator_priority, tokens);
}

}  // namespace bigtext
