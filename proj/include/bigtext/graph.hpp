#pragma once
// In-memory property graph over five vertex kinds: documents, sentences,
// clauses, mentions and entities, joined by hierarchy, entity-link and
// coreference edges. Columnar per-kind storage, single writer until freeze(),
// immutable and concurrently readable afterwards.
//
// Snapshot format: one UTF-8 line-record file per vertex kind plus edges.tsv,
// fields tab-separated and escaped (see save()).

#include "util.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace bigtext {

enum class VertexKind : uint8_t { document, sentence, clause, mention, entity };

inline char vertex_kind_tag(VertexKind k) {
    switch (k) {
        case VertexKind::document: return 'd';
        case VertexKind::sentence: return 's';
        case VertexKind::clause: return 'c';
        case VertexKind::mention: return 'm';
        case VertexKind::entity: return 'e';
    }
    return '?';
}

struct VertexId {
    VertexKind kind = VertexKind::document;
    uint32_t ordinal = 0;

    std::string to_string() const {
        return vertex_kind_tag(kind) + std::to_string(ordinal);
    }
    static VertexId parse(std::string_view s) {
        if (s.empty()) throw std::invalid_argument("empty vertex id");
        VertexKind k;
        switch (s[0]) {
            case 'd': k = VertexKind::document; break;
            case 's': k = VertexKind::sentence; break;
            case 'c': k = VertexKind::clause; break;
            case 'm': k = VertexKind::mention; break;
            case 'e': k = VertexKind::entity; break;
            default: throw std::invalid_argument("bad vertex id: " + std::string(s));
        }
        return {k, static_cast<uint32_t>(std::stoul(std::string(s.substr(1))))};
    }
    friend bool operator==(const VertexId&, const VertexId&) = default;
    friend auto operator<=>(const VertexId&, const VertexId&) = default;
};

enum class SyntacticRole : uint8_t { subject, object, other };
enum class NerType : uint8_t { PER, ORG, LOC, MISC, none };

inline std::string to_string(SyntacticRole r) {
    switch (r) {
        case SyntacticRole::subject: return "subject";
        case SyntacticRole::object: return "object";
        case SyntacticRole::other: return "other";
    }
    return "other";
}

inline SyntacticRole role_from_string(std::string_view s) {
    if (s == "subject") return SyntacticRole::subject;
    if (s == "object") return SyntacticRole::object;
    if (s == "other") return SyntacticRole::other;
    throw std::invalid_argument("bad syntactic role: " + std::string(s));
}

inline std::string to_string(NerType t) {
    switch (t) {
        case NerType::PER: return "PER";
        case NerType::ORG: return "ORG";
        case NerType::LOC: return "LOC";
        case NerType::MISC: return "MISC";
        case NerType::none: return "none";
    }
    return "none";
}

inline NerType ner_from_string(std::string_view s) {
    if (s == "PER") return NerType::PER;
    if (s == "ORG") return NerType::ORG;
    if (s == "LOC") return NerType::LOC;
    if (s == "MISC") return NerType::MISC;
    if (s == "none" || s.empty()) return NerType::none;
    throw std::invalid_argument("bad ner type: " + std::string(s));
}

struct DocumentProps {
    std::string title;
    std::string source_url;   // optional, empty when absent
    std::string timestamp;    // optional ISO-8601
    std::string external_id;  // unique across documents
};

struct SentenceProps {
    std::string text;
    uint32_t index_in_doc = 0;
    Span char_span;  // byte offsets into the document text
};

struct ClauseProps {
    Span subject_span;
    std::string predicate_text;
    std::vector<uint32_t> predicate_token_indices;
    std::optional<Span> object_span;
    std::vector<Span> adverbial_spans;
    uint32_t index_in_sentence = 0;
};

struct MentionProps {
    std::string surface;  // must equal the document text slice at char_span
    Span char_span;
    std::string pos;
    std::string lemma;
    SyntacticRole role = SyntacticRole::other;
    NerType ner = NerType::none;
    std::string source_annotator;
};

struct EntityProps {
    std::string kb_id;  // unique across entity vertices
    std::string canonical_name;
};

enum class EdgeKind : uint8_t {
    doc_has_sentence,
    sentence_has_clause,
    clause_has_mention,
    mention_refers_to_entity,
    coref_link
};

inline std::string to_string(EdgeKind k) {
    switch (k) {
        case EdgeKind::doc_has_sentence: return "doc_has_sentence";
        case EdgeKind::sentence_has_clause: return "sentence_has_clause";
        case EdgeKind::clause_has_mention: return "clause_has_mention";
        case EdgeKind::mention_refers_to_entity: return "mention_refers_to_entity";
        case EdgeKind::coref_link: return "coref_link";
    }
    return "?";
}

struct Edge {
    VertexId src;
    VertexId dst;
    EdgeKind kind;
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct GraphStats {
    uint64_t documents = 0;
    uint64_t sentences = 0;
    uint64_t clauses = 0;
    uint64_t mentions = 0;
    uint64_t entities = 0;
    friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

// One row of the dynamically extracted fact subgraph: a clause whose subject
// and object mentions both resolve to canonical entities.
struct FactRecord {
    VertexId subject_mention;
    std::string predicate_text;
    VertexId object_mention;
    VertexId clause;
    std::string subject_kb_id;
    std::string object_kb_id;
};

class PropertyGraph {
public:
    PropertyGraph() = default;

    VertexId add_document(const DocumentProps& props, std::string text) {
        require_mutable();
        if (external_id_index_.count(props.external_id))
            throw std::invalid_argument("duplicate document external_id: " +
                                        props.external_id);
        uint32_t ord = static_cast<uint32_t>(documents_.size());
        documents_.push_back(props);
        document_text_.push_back(std::move(text));
        doc_sentences_.emplace_back();
        external_id_index_.emplace(props.external_id, ord);
        return {VertexKind::document, ord};
    }

    VertexId attach_sentence(VertexId doc, SentenceProps props) {
        require_mutable();
        require_kind(doc, VertexKind::document, "attach_sentence parent");
        const std::string& text = document_text_[doc.ordinal];
        if (!props.char_span.valid() || props.char_span.end > text.size())
            throw std::out_of_range("sentence span out of document bounds");
        for (uint32_t sib : doc_sentences_[doc.ordinal])
            if (sentences_[sib].char_span.overlaps(props.char_span))
                throw std::invalid_argument("overlapping sentence spans in document " +
                                            documents_[doc.ordinal].external_id);
        std::string slice = text.substr(props.char_span.begin, props.char_span.length());
        if (props.text.empty())
            props.text = slice;
        else if (props.text != slice)
            throw std::invalid_argument("sentence text does not match document slice");
        uint32_t ord = static_cast<uint32_t>(sentences_.size());
        sentences_.push_back(std::move(props));
        sentence_doc_.push_back(doc.ordinal);
        sentence_clauses_.emplace_back();
        doc_sentences_[doc.ordinal].push_back(ord);
        return {VertexKind::sentence, ord};
    }

    VertexId attach_clause(VertexId sent, ClauseProps props) {
        require_mutable();
        require_kind(sent, VertexKind::sentence, "attach_clause parent");
        const Span& ss = sentences_[sent.ordinal].char_span;
        auto check = [&](const Span& sp, const char* what) {
            if (!sp.valid() || !ss.contains(sp))
                throw std::out_of_range(std::string(what) + " outside parent sentence span");
        };
        check(props.subject_span, "clause subject span");
        if (props.object_span) check(*props.object_span, "clause object span");
        for (const Span& a : props.adverbial_spans) check(a, "clause adverbial span");
        if (props.predicate_text.empty())
            throw std::invalid_argument("clause predicate_text must be non-empty");
        uint32_t ord = static_cast<uint32_t>(clauses_.size());
        clauses_.push_back(std::move(props));
        clause_sentence_.push_back(sent.ordinal);
        clause_mentions_.emplace_back();
        sentence_clauses_[sent.ordinal].push_back(ord);
        return {VertexKind::clause, ord};
    }

    VertexId attach_mention(VertexId clause, MentionProps props) {
        require_mutable();
        require_kind(clause, VertexKind::clause, "attach_mention parent");
        uint32_t sent = clause_sentence_[clause.ordinal];
        const std::string& text = document_text_[sentence_doc_[sent]];
        if (!props.char_span.valid() || props.char_span.end > text.size())
            throw std::out_of_range("mention span out of document bounds");
        if (!sentences_[sent].char_span.contains(props.char_span))
            throw std::out_of_range("mention span outside parent sentence span");
        std::string slice = text.substr(props.char_span.begin, props.char_span.length());
        if (props.surface.empty())
            props.surface = slice;
        else if (props.surface != slice)
            throw std::invalid_argument("mention surface does not match text slice: '" +
                                        props.surface + "' vs '" + slice + "'");
        uint32_t ord = static_cast<uint32_t>(mentions_.size());
        mentions_.push_back(std::move(props));
        mention_clause_.push_back(clause.ordinal);
        mention_entity_.push_back(kNoEntity);
        mention_coref_.emplace_back();
        clause_mentions_[clause.ordinal].push_back(ord);
        return {VertexKind::mention, ord};
    }

    // Reuses the entity vertex when kb_id is already present. A mention holds
    // at most one entity link; relinking to a different kb_id is an error.
    VertexId link_entity(VertexId mention, const std::string& kb_id,
                         const std::string& canonical_name) {
        require_mutable();
        require_kind(mention, VertexKind::mention, "link_entity mention");
        uint32_t ent;
        auto it = kb_index_.find(kb_id);
        if (it != kb_index_.end()) {
            ent = it->second;
        } else {
            ent = static_cast<uint32_t>(entities_.size());
            entities_.push_back({kb_id, canonical_name});
            kb_index_.emplace(kb_id, ent);
        }
        uint32_t& slot = mention_entity_[mention.ordinal];
        if (slot != kNoEntity && slot != ent)
            throw std::invalid_argument("mention already linked to entity " +
                                        entities_[slot].kb_id);
        slot = ent;
        return {VertexKind::entity, ent};
    }

    // Undirected coreference stored once under canonical (min, max) ordinals.
    Edge add_coref_link(VertexId m1, VertexId m2) {
        require_mutable();
        require_kind(m1, VertexKind::mention, "coref endpoint");
        require_kind(m2, VertexKind::mention, "coref endpoint");
        if (m1.ordinal == m2.ordinal)
            throw std::invalid_argument("coref self-link on " + m1.to_string());
        uint32_t a = std::min(m1.ordinal, m2.ordinal);
        uint32_t b = std::max(m1.ordinal, m2.ordinal);
        if (coref_set_.emplace(a, b).second) {
            mention_coref_[a].push_back(b);
            mention_coref_[b].push_back(a);
        }
        return {{VertexKind::mention, a}, {VertexKind::mention, b}, EdgeKind::coref_link};
    }

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    GraphStats stats() const {
        return {documents_.size(), sentences_.size(), clauses_.size(),
                mentions_.size(), entities_.size()};
    }

    // Entity resolution for a mention: direct link first, otherwise at most
    // one coref hop to a directly linked mention (smallest ordinal wins).
    std::optional<uint32_t> resolve_mention_entity(uint32_t mention_ordinal) const {
        if (mention_entity_[mention_ordinal] != kNoEntity)
            return mention_entity_[mention_ordinal];
        std::optional<uint32_t> found;
        uint32_t best_neighbor = 0;
        for (uint32_t n : mention_coref_[mention_ordinal]) {
            if (mention_entity_[n] == kNoEntity) continue;
            if (!found || n < best_neighbor) {
                found = mention_entity_[n];
                best_neighbor = n;
            }
        }
        return found;
    }

    // Mentions of a clause in the given role that resolve to an entity,
    // ordered by char span. Returns (mention ordinal, entity ordinal) pairs.
    std::vector<std::pair<uint32_t, uint32_t>> resolved_role_mentions(
        uint32_t clause_ordinal, SyntacticRole role) const {
        std::vector<std::pair<uint32_t, uint32_t>> out;
        for (uint32_t m : clause_mentions_[clause_ordinal]) {
            if (mentions_[m].role != role) continue;
            if (auto e = resolve_mention_entity(m)) out.emplace_back(m, *e);
        }
        std::sort(out.begin(), out.end(), [&](auto& l, auto& r) {
            return mentions_[l.first].char_span < mentions_[r.first].char_span;
        });
        return out;
    }

    std::vector<FactRecord> fact_subgraph(
        const std::optional<std::set<std::string>>& entity_filter = std::nullopt) const {
        std::vector<FactRecord> out;
        for (uint32_t c = 0; c < clauses_.size(); ++c) {
            auto subjects = resolved_role_mentions(c, SyntacticRole::subject);
            auto objects = resolved_role_mentions(c, SyntacticRole::object);
            if (subjects.empty() || objects.empty()) continue;
            const auto& [sm, se] = subjects.front();
            const auto& [om, oe] = objects.front();
            const std::string& skb = entities_[se].kb_id;
            const std::string& okb = entities_[oe].kb_id;
            if (entity_filter && !entity_filter->count(skb) && !entity_filter->count(okb))
                continue;
            out.push_back({{VertexKind::mention, sm},
                           clauses_[c].predicate_text,
                           {VertexKind::mention, om},
                           {VertexKind::clause, c},
                           skb,
                           okb});
        }
        return out;
    }

    // Accessors --------------------------------------------------------

    const DocumentProps& document(uint32_t ord) const { return documents_.at(ord); }
    const std::string& document_text(uint32_t ord) const { return document_text_.at(ord); }
    const SentenceProps& sentence(uint32_t ord) const { return sentences_.at(ord); }
    const ClauseProps& clause(uint32_t ord) const { return clauses_.at(ord); }
    const MentionProps& mention(uint32_t ord) const { return mentions_.at(ord); }
    const EntityProps& entity(uint32_t ord) const { return entities_.at(ord); }

    uint32_t sentence_document(uint32_t sent) const { return sentence_doc_.at(sent); }
    uint32_t clause_sentence_parent(uint32_t cl) const { return clause_sentence_.at(cl); }
    uint32_t mention_clause_parent(uint32_t m) const { return mention_clause_.at(m); }

    const std::vector<uint32_t>& document_sentences(uint32_t doc) const {
        return doc_sentences_.at(doc);
    }
    const std::vector<uint32_t>& sentence_clauses(uint32_t sent) const {
        return sentence_clauses_.at(sent);
    }
    const std::vector<uint32_t>& clause_mentions(uint32_t cl) const {
        return clause_mentions_.at(cl);
    }
    std::optional<uint32_t> mention_entity(uint32_t m) const {
        uint32_t e = mention_entity_.at(m);
        if (e == kNoEntity) return std::nullopt;
        return e;
    }
    const std::vector<uint32_t>& mention_coref_neighbors(uint32_t m) const {
        return mention_coref_.at(m);
    }
    std::optional<uint32_t> find_document(const std::string& external_id) const {
        auto it = external_id_index_.find(external_id);
        if (it == external_id_index_.end()) return std::nullopt;
        return it->second;
    }
    std::optional<uint32_t> find_entity(const std::string& kb_id) const {
        auto it = kb_index_.find(kb_id);
        if (it == kb_index_.end()) return std::nullopt;
        return it->second;
    }
    std::optional<uint32_t> find_sentence(const std::string& external_id,
                                          uint32_t index_in_doc) const {
        auto doc = find_document(external_id);
        if (!doc) return std::nullopt;
        for (uint32_t s : doc_sentences_[*doc])
            if (sentences_[s].index_in_doc == index_in_doc) return s;
        return std::nullopt;
    }

    // Stable external key "<doc external id>:<sentence index>"; clause keys
    // append ":<clause index>". These identify units in gold/prediction files.
    std::string sentence_key(uint32_t sent) const {
        return documents_[sentence_doc_[sent]].external_id + ":" +
               std::to_string(sentences_[sent].index_in_doc);
    }
    std::string clause_key(uint32_t cl) const {
        return sentence_key(clause_sentence_[cl]) + ":" +
               std::to_string(clauses_[cl].index_in_sentence);
    }

    std::string text_slice(uint32_t doc, const Span& span) const {
        return document_text_[doc].substr(span.begin, span.length());
    }

    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        for (uint32_t s = 0; s < sentences_.size(); ++s)
            out.push_back({{VertexKind::document, sentence_doc_[s]},
                           {VertexKind::sentence, s},
                           EdgeKind::doc_has_sentence});
        for (uint32_t c = 0; c < clauses_.size(); ++c)
            out.push_back({{VertexKind::sentence, clause_sentence_[c]},
                           {VertexKind::clause, c},
                           EdgeKind::sentence_has_clause});
        for (uint32_t m = 0; m < mentions_.size(); ++m) {
            out.push_back({{VertexKind::clause, mention_clause_[m]},
                           {VertexKind::mention, m},
                           EdgeKind::clause_has_mention});
            if (mention_entity_[m] != kNoEntity)
                out.push_back({{VertexKind::mention, m},
                               {VertexKind::entity, mention_entity_[m]},
                               EdgeKind::mention_refers_to_entity});
        }
        for (const auto& [a, b] : coref_set_)
            out.push_back({{VertexKind::mention, a},
                           {VertexKind::mention, b},
                           EdgeKind::coref_link});
        return out;
    }

    // Snapshot I/O ------------------------------------------------------
    //
    // documents.tsv: external_id  title  source_url  timestamp  text
    // sentences.tsv: doc  index_in_doc  begin  end  text
    // clauses.tsv:   sentence  index_in_sentence  subj_begin  subj_end
    //                predicate_text  predicate_token_indices(comma)
    //                obj_begin  obj_end (both empty when absent)
    //                adverbials(comma "b:e" pairs)
    // mentions.tsv:  clause  begin  end  surface  pos  lemma  role  ner
    //                annotator  entity(ordinal, empty when unlinked)
    // entities.tsv:  kb_id  canonical_name
    // edges.tsv:     kind  src  dst
    //
    // Ordinals are implicit line numbers (0-based) within each file.

    void save(const std::filesystem::path& dir) const {
        namespace fs = std::filesystem;
        fs::create_directories(dir);
        {
            std::ofstream out(dir / "documents.tsv", std::ios::binary);
            for (size_t i = 0; i < documents_.size(); ++i) {
                const auto& d = documents_[i];
                out << escape_field(d.external_id) << '\t' << escape_field(d.title)
                    << '\t' << escape_field(d.source_url) << '\t'
                    << escape_field(d.timestamp) << '\t'
                    << escape_field(document_text_[i]) << '\n';
            }
        }
        {
            std::ofstream out(dir / "sentences.tsv", std::ios::binary);
            for (size_t i = 0; i < sentences_.size(); ++i) {
                const auto& s = sentences_[i];
                out << sentence_doc_[i] << '\t' << s.index_in_doc << '\t'
                    << s.char_span.begin << '\t' << s.char_span.end << '\t'
                    << escape_field(s.text) << '\n';
            }
        }
        {
            std::ofstream out(dir / "clauses.tsv", std::ios::binary);
            for (size_t i = 0; i < clauses_.size(); ++i) {
                const auto& c = clauses_[i];
                out << clause_sentence_[i] << '\t' << c.index_in_sentence << '\t'
                    << c.subject_span.begin << '\t' << c.subject_span.end << '\t'
                    << escape_field(c.predicate_text) << '\t';
                for (size_t k = 0; k < c.predicate_token_indices.size(); ++k)
                    out << (k ? "," : "") << c.predicate_token_indices[k];
                out << '\t';
                if (c.object_span)
                    out << c.object_span->begin << '\t' << c.object_span->end;
                else
                    out << '\t';
                out << '\t';
                for (size_t k = 0; k < c.adverbial_spans.size(); ++k)
                    out << (k ? "," : "") << c.adverbial_spans[k].begin << ':'
                        << c.adverbial_spans[k].end;
                out << '\n';
            }
        }
        {
            std::ofstream out(dir / "mentions.tsv", std::ios::binary);
            for (size_t i = 0; i < mentions_.size(); ++i) {
                const auto& m = mentions_[i];
                out << mention_clause_[i] << '\t' << m.char_span.begin << '\t'
                    << m.char_span.end << '\t' << escape_field(m.surface) << '\t'
                    << escape_field(m.pos) << '\t' << escape_field(m.lemma) << '\t'
                    << to_string(m.role) << '\t' << to_string(m.ner) << '\t'
                    << escape_field(m.source_annotator) << '\t';
                if (mention_entity_[i] != kNoEntity) out << mention_entity_[i];
                out << '\n';
            }
        }
        {
            std::ofstream out(dir / "entities.tsv", std::ios::binary);
            for (const auto& e : entities_)
                out << escape_field(e.kb_id) << '\t' << escape_field(e.canonical_name)
                    << '\n';
        }
        {
            std::ofstream out(dir / "edges.tsv", std::ios::binary);
            for (const Edge& e : edges())
                out << to_string(e.kind) << '\t' << e.src.to_string() << '\t'
                    << e.dst.to_string() << '\n';
        }
    }

    static PropertyGraph load(const std::filesystem::path& dir) {
        namespace fs = std::filesystem;
        PropertyGraph g;
        auto lines = [&](const char* name) {
            std::ifstream in(dir / name, std::ios::binary);
            if (!in) throw std::runtime_error("missing snapshot file: " +
                                              (dir / name).string());
            std::vector<std::vector<std::string>> rows;
            std::string line;
            while (std::getline(in, line)) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                rows.push_back(split(line, '\t'));
            }
            return rows;
        };
        for (auto& f : lines("documents.tsv")) {
            if (f.size() != 5) throw std::runtime_error("bad documents.tsv row");
            g.add_document({unescape_field(f[1]), unescape_field(f[2]),
                            unescape_field(f[3]), unescape_field(f[0])},
                           unescape_field(f[4]));
        }
        for (auto& f : lines("sentences.tsv")) {
            if (f.size() != 5) throw std::runtime_error("bad sentences.tsv row");
            SentenceProps p;
            p.index_in_doc = static_cast<uint32_t>(std::stoul(f[1]));
            p.char_span = {static_cast<uint32_t>(std::stoul(f[2])),
                           static_cast<uint32_t>(std::stoul(f[3]))};
            p.text = unescape_field(f[4]);
            g.attach_sentence({VertexKind::document,
                               static_cast<uint32_t>(std::stoul(f[0]))},
                              std::move(p));
        }
        for (auto& f : lines("clauses.tsv")) {
            if (f.size() != 9) throw std::runtime_error("bad clauses.tsv row");
            ClauseProps p;
            p.index_in_sentence = static_cast<uint32_t>(std::stoul(f[1]));
            p.subject_span = {static_cast<uint32_t>(std::stoul(f[2])),
                              static_cast<uint32_t>(std::stoul(f[3]))};
            p.predicate_text = unescape_field(f[4]);
            if (!f[5].empty())
                for (auto& t : split(f[5], ','))
                    p.predicate_token_indices.push_back(
                        static_cast<uint32_t>(std::stoul(t)));
            if (!f[6].empty())
                p.object_span = Span{static_cast<uint32_t>(std::stoul(f[6])),
                                     static_cast<uint32_t>(std::stoul(f[7]))};
            if (!f[8].empty())
                for (auto& t : split(f[8], ',')) {
                    auto be = split(t, ':');
                    p.adverbial_spans.push_back(
                        {static_cast<uint32_t>(std::stoul(be[0])),
                         static_cast<uint32_t>(std::stoul(be[1]))});
                }
            g.attach_clause({VertexKind::sentence,
                             static_cast<uint32_t>(std::stoul(f[0]))},
                            std::move(p));
        }
        auto entity_rows = lines("entities.tsv");
        std::vector<EntityProps> entity_props;
        for (auto& f : entity_rows) {
            if (f.size() != 2) throw std::runtime_error("bad entities.tsv row");
            entity_props.push_back({unescape_field(f[0]), unescape_field(f[1])});
        }
        for (auto& f : lines("mentions.tsv")) {
            if (f.size() != 10) throw std::runtime_error("bad mentions.tsv row");
            MentionProps p;
            p.char_span = {static_cast<uint32_t>(std::stoul(f[1])),
                           static_cast<uint32_t>(std::stoul(f[2]))};
            p.surface = unescape_field(f[3]);
            p.pos = unescape_field(f[4]);
            p.lemma = unescape_field(f[5]);
            p.role = role_from_string(f[6]);
            p.ner = ner_from_string(f[7]);
            p.source_annotator = unescape_field(f[8]);
            VertexId m = g.attach_mention(
                {VertexKind::clause, static_cast<uint32_t>(std::stoul(f[0]))},
                std::move(p));
            if (!f[9].empty()) {
                const auto& e = entity_props.at(std::stoul(f[9]));
                g.link_entity(m, e.kb_id, e.canonical_name);
            }
        }
        for (auto& f : lines("edges.tsv")) {
            if (f.size() != 3) throw std::runtime_error("bad edges.tsv row");
            if (f[0] != "coref_link") continue;  // others rebuilt from vertex files
            g.add_coref_link(VertexId::parse(f[1]), VertexId::parse(f[2]));
        }
        return g;
    }

private:
    static constexpr uint32_t kNoEntity = UINT32_MAX;

    void require_mutable() const {
        if (frozen_) throw std::logic_error("graph is frozen");
    }
    void require_kind(VertexId v, VertexKind k, const char* what) const {
        uint64_t count = 0;
        switch (k) {
            case VertexKind::document: count = documents_.size(); break;
            case VertexKind::sentence: count = sentences_.size(); break;
            case VertexKind::clause: count = clauses_.size(); break;
            case VertexKind::mention: count = mentions_.size(); break;
            case VertexKind::entity: count = entities_.size(); break;
        }
        if (v.kind != k || v.ordinal >= count)
            throw std::invalid_argument(std::string(what) + ": no such vertex " +
                                        v.to_string());
    }

    bool frozen_ = false;

    std::vector<DocumentProps> documents_;
    std::vector<std::string> document_text_;
    std::vector<SentenceProps> sentences_;
    std::vector<ClauseProps> clauses_;
    std::vector<MentionProps> mentions_;
    std::vector<EntityProps> entities_;

    std::vector<uint32_t> sentence_doc_;
    std::vector<uint32_t> clause_sentence_;
    std::vector<uint32_t> mention_clause_;
    std::vector<uint32_t> mention_entity_;

    std::vector<std::vector<uint32_t>> doc_sentences_;
    std::vector<std::vector<uint32_t>> sentence_clauses_;
    std::vector<std::vector<uint32_t>> clause_mentions_;
    std::vector<std::vector<uint32_t>> mention_coref_;

    std::unordered_map<std::string, uint32_t> external_id_index_;
    std::unordered_map<std::string, uint32_t> kb_index_;
    std::set<std::pair<uint32_t, uint32_t>> coref_set_;
};

}  // namespace bigtext
