#pragma once
// Clause distillation: extract verb | verb+particle predicates with the
// lemma/passive rule, keep only clauses with exactly one entity-linked
// subject and object mention, drop reflexives, promote frequent
// verb+particle bigrams, and emit training token sequences.

#include "graph.hpp"
#include "ingest.hpp"
#include "util.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bigtext {

enum class Voice : uint8_t { active, passive };
enum class PredicateEncoding : uint8_t { composition, bigram };

inline std::string to_string(Voice v) {
    return v == Voice::active ? "active" : "passive";
}
inline Voice voice_from_string(std::string_view s) {
    if (s == "active") return Voice::active;
    if (s == "passive") return Voice::passive;
    throw std::invalid_argument("bad voice: " + std::string(s));
}
inline std::string to_string(PredicateEncoding e) {
    return e == PredicateEncoding::composition ? "composition" : "bigram";
}
inline PredicateEncoding encoding_from_string(std::string_view s) {
    if (s == "composition") return PredicateEncoding::composition;
    if (s == "bigram") return PredicateEncoding::bigram;
    throw std::invalid_argument("bad encoding: " + std::string(s));
}

struct PredicateForm {
    std::string verb;      // lemma for active voice, inflected participle for passive
    std::string particle;  // empty when absent
    Voice voice = Voice::active;
    PredicateEncoding encoding = PredicateEncoding::composition;
    std::string bigram_token;  // set iff encoding == bigram

    bool has_particle() const { return !particle.empty(); }
    std::string bigram_key() const {
        return has_particle() ? verb + "_" + particle : std::string();
    }
    friend bool operator==(const PredicateForm&, const PredicateForm&) = default;
};

struct NormalizedTriple {
    std::string subject_kb_id;
    PredicateForm predicate;
    std::string object_kb_id;
    VertexId source_clause;
    // Mention surfaces, carried so the training encoder and the triples file
    // do not need the graph.
    std::string subject_surface;
    std::string object_surface;
};

// Verb+particle pairs seen at least min_count times in the distilled corpus.
class BigramTable {
public:
    explicit BigramTable(uint64_t min_count = 1) : min_count_(min_count) {}

    uint64_t min_count() const { return min_count_; }
    bool contains(const std::string& token) const { return entries_.count(token) > 0; }
    uint64_t frequency(const std::string& token) const {
        auto it = entries_.find(token);
        return it == entries_.end() ? 0 : it->second;
    }
    size_t size() const { return entries_.size(); }
    const std::map<std::string, uint64_t>& entries() const { return entries_; }

    void insert(const std::string& token, uint64_t count) {
        if (count >= min_count_) entries_[token] = count;
    }

    std::vector<std::string> tokens() const {
        std::vector<std::string> out;
        out.reserve(entries_.size());
        for (const auto& [t, _] : entries_) out.push_back(t);
        return out;
    }

    // token<TAB>count lines, sorted by token.
    void save(const std::string& path) const {
        std::string out;
        for (const auto& [t, c] : entries_)
            out += escape_field(t) + "\t" + std::to_string(c) + "\n";
        write_file(path, out);
    }

    static BigramTable load(const std::string& path, uint64_t min_count = 1) {
        BigramTable table(min_count);
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open bigram table: " + path);
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto fields = split(line, '\t');
            if (fields.size() != 2)
                throw std::runtime_error("bad bigram line " + std::to_string(line_no));
            table.insert(unescape_field(fields[0]), std::stoull(fields[1]));
        }
        return table;
    }

private:
    std::map<std::string, uint64_t> entries_;
    uint64_t min_count_;
};

// Predicate extraction ---------------------------------------------------

namespace detail {

inline bool is_verb_pos(std::string_view pos) {
    return pos.size() >= 2 && pos[0] == 'V' && pos[1] == 'B';
}

inline bool is_particle_pos(std::string_view pos) {
    return pos == "RP" || pos == "IN" || pos == "TO";
}

}  // namespace detail

// Matches the verb | verb+particle pattern over a clause's predicate tokens.
// The verbal head is the last verb-tagged token; the particle is the single
// immediately following preposition/particle token (longer chains keep only
// the first). Active heads are replaced by their lemma; passive heads (a
// "be" auxiliary followed by a past participle) keep the inflected form.
// Returns nothing when the predicate has no verbal token.
inline std::optional<PredicateForm> extract_predicate(
    std::span<const SentenceToken> tokens) {
    size_t head = tokens.size();
    for (size_t i = 0; i < tokens.size(); ++i)
        if (detail::is_verb_pos(tokens[i].pos)) head = i;
    if (head == tokens.size()) return std::nullopt;

    bool has_be_aux = false;
    for (size_t i = 0; i < head; ++i)
        if (to_lower(tokens[i].lemma.empty() ? tokens[i].text : tokens[i].lemma) == "be")
            has_be_aux = true;
    bool passive = has_be_aux && tokens[head].pos == "VBN";

    PredicateForm form;
    form.voice = passive ? Voice::passive : Voice::active;
    if (passive || tokens[head].lemma.empty())
        form.verb = to_lower(tokens[head].text);
    else
        form.verb = to_lower(tokens[head].lemma);
    if (head + 1 < tokens.size() && detail::is_particle_pos(tokens[head + 1].pos))
        form.particle = to_lower(tokens[head + 1].text);
    return form;
}

// Distillation ------------------------------------------------------------

struct DistillStats {
    uint64_t total_clauses = 0;
    uint64_t emitted = 0;
    uint64_t dropped_no_predicate = 0;   // no verbal head
    uint64_t dropped_ambiguous = 0;      // subject/object entity count != 1
    uint64_t dropped_reflexive = 0;      // subject and object share a kb_id

    double reflexive_fraction() const {
        return total_clauses ? static_cast<double>(dropped_reflexive) / total_clauses : 0.0;
    }
};

// Distills one clause into a binary relation, or nothing. Requires exactly
// one entity-linked mention in subject position and one in object position
// (coreference may supply the link), a verbal predicate, and distinct
// entities on both ends.
inline std::optional<NormalizedTriple> distill(
    const PropertyGraph& graph, uint32_t clause_ordinal,
    std::span<const SentenceToken> sentence_tokens, DistillStats* stats = nullptr) {
    if (stats) ++stats->total_clauses;

    auto subjects = graph.resolved_role_mentions(clause_ordinal, SyntacticRole::subject);
    auto objects = graph.resolved_role_mentions(clause_ordinal, SyntacticRole::object);
    if (subjects.size() != 1 || objects.size() != 1) {
        if (stats) ++stats->dropped_ambiguous;
        return std::nullopt;
    }

    const ClauseProps& cl = graph.clause(clause_ordinal);
    std::vector<SentenceToken> predicate_tokens;
    for (uint32_t idx : cl.predicate_token_indices)
        if (idx < sentence_tokens.size()) predicate_tokens.push_back(sentence_tokens[idx]);
    auto predicate = extract_predicate(predicate_tokens);
    if (!predicate) {
        if (stats) ++stats->dropped_no_predicate;
        return std::nullopt;
    }

    const std::string& skb = graph.entity(subjects.front().second).kb_id;
    const std::string& okb = graph.entity(objects.front().second).kb_id;
    if (skb == okb) {
        if (stats) ++stats->dropped_reflexive;
        return std::nullopt;
    }

    NormalizedTriple t;
    t.subject_kb_id = skb;
    t.object_kb_id = okb;
    t.predicate = std::move(*predicate);
    t.source_clause = {VertexKind::clause, clause_ordinal};
    t.subject_surface = graph.mention(subjects.front().first).surface;
    t.object_surface = graph.mention(objects.front().first).surface;
    if (stats) ++stats->emitted;
    return t;
}

inline std::vector<NormalizedTriple> distill_graph(const PropertyGraph& graph,
                                                   const TokenStore& tokens,
                                                   DistillStats* stats = nullptr) {
    std::vector<NormalizedTriple> out;
    for (uint32_t c = 0; c < graph.stats().clauses; ++c) {
        uint32_t sent = graph.clause_sentence_parent(c);
        if (auto t = distill(graph, c, tokens.get(sent), stats)) out.push_back(std::move(*t));
    }
    return out;
}

// Bigram promotion ---------------------------------------------------------

inline BigramTable promote_bigrams(std::span<const NormalizedTriple> triples,
                                   uint64_t min_count) {
    std::map<std::string, uint64_t> counts;
    for (const auto& t : triples)
        if (t.predicate.has_particle()) ++counts[t.predicate.bigram_key()];
    BigramTable table(min_count);
    for (const auto& [tok, c] : counts) table.insert(tok, c);
    return table;
}

// Rewrites predicate encodings: retained verb+particle pairs become single
// bigram tokens, everything else stays compositional.
inline void apply_bigram_encoding(std::span<NormalizedTriple> triples,
                                  const BigramTable& table) {
    for (auto& t : triples) {
        std::string key = t.predicate.bigram_key();
        if (!key.empty() && table.contains(key)) {
            t.predicate.encoding = PredicateEncoding::bigram;
            t.predicate.bigram_token = key;
        } else {
            t.predicate.encoding = PredicateEncoding::composition;
            t.predicate.bigram_token.clear();
        }
    }
}

// Training-sequence encoding ------------------------------------------------

// Emits the embedding-training token sequence for a triple: lowercased
// subject surface tokens, the predicate (one bigram token, or verb then
// particle), then object surface tokens. Adverbials are excluded.
inline std::vector<std::string> encode_tokens(const NormalizedTriple& triple,
                                              const BigramTable& table) {
    std::vector<std::string> out = tokenize_words(triple.subject_surface);
    std::string key = triple.predicate.bigram_key();
    if (!key.empty() && table.contains(key)) {
        out.push_back(key);
    } else {
        out.push_back(triple.predicate.verb);
        if (triple.predicate.has_particle()) out.push_back(triple.predicate.particle);
    }
    for (auto& tok : tokenize_words(triple.object_surface)) out.push_back(std::move(tok));
    return out;
}

// Triples file I/O -----------------------------------------------------------
//
// One triple per line: subject_kb  verb  particle  voice  encoding
// bigram_token  object_kb  clause_id  subject_surface  object_surface

inline void save_triples(std::span<const NormalizedTriple> triples,
                         const std::string& path) {
    std::string out;
    for (const auto& t : triples) {
        out += escape_field(t.subject_kb_id) + "\t" + escape_field(t.predicate.verb) +
               "\t" + escape_field(t.predicate.particle) + "\t" +
               to_string(t.predicate.voice) + "\t" + to_string(t.predicate.encoding) +
               "\t" + escape_field(t.predicate.bigram_token) + "\t" +
               escape_field(t.object_kb_id) + "\t" + t.source_clause.to_string() + "\t" +
               escape_field(t.subject_surface) + "\t" + escape_field(t.object_surface) +
               "\n";
    }
    write_file(path, out);
}

inline std::vector<NormalizedTriple> load_triples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open triples file: " + path);
    std::vector<NormalizedTriple> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split(line, '\t');
        if (f.size() != 10)
            throw std::runtime_error("bad triple line " + std::to_string(line_no));
        NormalizedTriple t;
        t.subject_kb_id = unescape_field(f[0]);
        t.predicate.verb = unescape_field(f[1]);
        t.predicate.particle = unescape_field(f[2]);
        t.predicate.voice = voice_from_string(f[3]);
        t.predicate.encoding = encoding_from_string(f[4]);
        t.predicate.bigram_token = unescape_field(f[5]);
        t.object_kb_id = unescape_field(f[6]);
        t.source_clause = VertexId::parse(f[7]);
        t.subject_surface = unescape_field(f[8]);
        t.object_surface = unescape_field(f[9]);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace bigtext
