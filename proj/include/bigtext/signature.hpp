#pragma once
// Relation signatures: one vector per target relation, built either from KB
// synonym phrases (context-free) or from externally embedded example
// sentences (contextualized), plus cosine-nearest classification of clause
// vectors against them.

#include "embed.hpp"
#include "normalize.hpp"
#include "util.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace bigtext {

struct RelationSpec {
    std::string relation_id;   // e.g. "P571"
    std::string display_name;
    std::vector<std::string> synonyms;
};

// Relation specs file: one relation per line,
// relation_id <TAB> display_name <TAB> synonym <TAB> synonym ...
inline std::vector<RelationSpec> load_relation_specs(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open relation specs: " + path);
    std::vector<RelationSpec> out;
    std::set<std::string> seen;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto f = split(line, '\t');
        if (f.size() < 2)
            throw std::runtime_error("relation specs line " + std::to_string(line_no) +
                                     ": need id and display name");
        RelationSpec spec;
        spec.relation_id = unescape_field(f[0]);
        spec.display_name = unescape_field(f[1]);
        for (size_t i = 2; i < f.size(); ++i)
            if (!f[i].empty()) spec.synonyms.push_back(unescape_field(f[i]));
        if (!seen.insert(spec.relation_id).second)
            throw std::runtime_error("duplicate relation id: " + spec.relation_id);
        out.push_back(std::move(spec));
    }
    return out;
}

inline void save_relation_specs(std::span<const RelationSpec> specs,
                                const std::string& path) {
    std::string out;
    for (const auto& s : specs) {
        out += escape_field(s.relation_id) + "\t" + escape_field(s.display_name);
        for (const auto& syn : s.synonyms) out += "\t" + escape_field(syn);
        out += "\n";
    }
    write_file(path, out);
}

enum class SignatureProvenance : uint8_t { synonyms, example_sentences };

struct SignatureContributor {
    std::string source;    // synonym phrase or example-sentence id
    std::string encoding;  // "bigram", "composition" or "content_mean"
};

struct RelationSignature {
    std::string relation_id;
    std::vector<double> vector;
    SignatureProvenance provenance = SignatureProvenance::synonyms;
    std::vector<SignatureContributor> contributors;
    bool degenerate = false;  // mean collapsed to (near) zero
};

// Phrase normalization -----------------------------------------------------
//
// Synonym phrases arrive as plain text without POS or lemma annotations, so
// the clause pipeline's verb detector is approximated: auxiliaries and
// determiners are stripped; the leading content token counts as a verbal
// head when its bigram with the following particle is a known dictionary
// entry, or when it carries participle/gerund morphology. Verbless phrases
// are vectorized as the mean of their in-vocab content-word vectors.

namespace detail {

inline const std::set<std::string>& phrase_auxiliaries() {
    static const std::set<std::string> words = {
        "a",    "an",   "the",  "was",  "were", "is",    "are",  "am",
        "be",   "been", "being", "has", "have", "had",   "do",   "does",
        "did",  "will", "would", "can", "could", "may",  "might", "shall",
        "should", "must"};
    return words;
}

inline const std::set<std::string>& phrase_particles() {
    static const std::set<std::string> words = {
        "in", "on",  "at",   "by",   "from", "to",   "of",    "with", "for",
        "as", "into", "onto", "over", "off",  "out", "up",    "down", "after",
        "about"};
    return words;
}

inline const std::set<std::string>& irregular_participles() {
    static const std::set<std::string> words = {
        "born", "held",  "won",  "met",   "left", "made", "found", "sold",
        "run",  "grew",  "knew", "known", "wrote", "written", "led", "paid",
        "said", "built", "spent", "sent", "lost", "got",  "given", "gave",
        "took", "taken", "put",  "set",   "died", "wed",  "begun", "become"};
    return words;
}

inline bool verbal_morphology(const std::string& token) {
    if (irregular_participles().count(token)) return true;
    auto ends_with = [&](std::string_view suffix) {
        return token.size() > suffix.size() &&
               token.compare(token.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    return ends_with("ed") || ends_with("en") || ends_with("ing");
}

}  // namespace detail

struct PhraseVector {
    std::vector<double> vector;
    std::string encoding;  // "bigram", "composition" or "content_mean"
    bool ok = false;
};

inline PhraseVector vectorize_phrase(const std::string& phrase,
                                     const EmbeddingModel& model,
                                     const BigramTable& table) {
    PhraseVector out;
    std::vector<std::string> content;
    for (auto& tok : tokenize_words(phrase))
        if (!detail::phrase_auxiliaries().count(tok)) content.push_back(tok);
    if (content.empty()) return out;

    const std::string& head = content.front();
    std::string particle;
    if (content.size() > 1 && detail::phrase_particles().count(content[1]))
        particle = content[1];
    std::string bigram = particle.empty() ? std::string() : head + "_" + particle;

    bool verbal = (!bigram.empty() &&
                   (model.token_index(bigram) || table.contains(bigram))) ||
                  detail::verbal_morphology(head);

    if (verbal) {
        if (!bigram.empty()) {
            if (auto v = model.lookup(bigram)) {
                out.vector.assign(v->begin(), v->end());
                out.encoding = "bigram";
                out.ok = true;
                return out;
            }
        }
        // compositional fallback: verb vector plus particle vector
        auto hv = model.lookup(head);
        if (!hv) return out;
        out.vector.assign(hv->begin(), hv->end());
        if (!particle.empty()) {
            if (auto pv = model.lookup(particle))
                for (size_t d = 0; d < out.vector.size(); ++d)
                    out.vector[d] += (*pv)[d];
        }
        out.encoding = "composition";
        out.ok = true;
        return out;
    }

    // verbless phrase: mean of in-vocab content-word vectors
    std::vector<double> sum;
    size_t hits = 0;
    for (const auto& tok : content) {
        auto v = model.lookup(tok);
        if (!v) continue;
        if (sum.empty()) sum.assign(v->size(), 0.0);
        for (size_t d = 0; d < sum.size(); ++d) sum[d] += (*v)[d];
        ++hits;
    }
    if (hits == 0) return out;
    for (double& d : sum) d /= hits;
    out.vector = std::move(sum);
    out.encoding = "content_mean";
    out.ok = true;
    return out;
}

// Signature construction ------------------------------------------------------

inline RelationSignature build_signature_from_synonyms(const RelationSpec& spec,
                                                       const EmbeddingModel& model,
                                                       const BigramTable& table) {
    RelationSignature sig;
    sig.relation_id = spec.relation_id;
    sig.provenance = SignatureProvenance::synonyms;
    std::vector<double> sum(model.dim(), 0.0);
    size_t used = 0;
    for (const auto& phrase : spec.synonyms) {
        PhraseVector pv = vectorize_phrase(phrase, model, table);
        if (!pv.ok) continue;
        for (size_t d = 0; d < sum.size(); ++d) sum[d] += pv.vector[d];
        sig.contributors.push_back({phrase, pv.encoding});
        ++used;
    }
    if (used == 0)
        throw std::runtime_error("relation " + spec.relation_id +
                                 ": no synonym is representable in the vocabulary");
    for (double& d : sum) d /= used;
    sig.vector = std::move(sum);
    double norm = 0.0;
    for (double d : sig.vector) norm += d * d;
    sig.degenerate = norm < 1e-24;
    return sig;
}

inline RelationSignature build_signature_from_examples(
    const std::string& relation_id, std::span<const std::vector<double>> sentence_vectors,
    std::span<const std::string> sentence_ids = {}) {
    if (sentence_vectors.empty())
        throw std::invalid_argument("relation " + relation_id +
                                    ": no example-sentence vectors");
    size_t dim = sentence_vectors.front().size();
    RelationSignature sig;
    sig.relation_id = relation_id;
    sig.provenance = SignatureProvenance::example_sentences;
    sig.vector.assign(dim, 0.0);
    for (size_t i = 0; i < sentence_vectors.size(); ++i) {
        if (sentence_vectors[i].size() != dim)
            throw std::invalid_argument("relation " + relation_id +
                                        ": example vector dimension mismatch");
        for (size_t d = 0; d < dim; ++d) sig.vector[d] += sentence_vectors[i][d];
        sig.contributors.push_back(
            {i < sentence_ids.size() ? sentence_ids[i] : "sentence_" + std::to_string(i),
             "example"});
    }
    for (double& d : sig.vector) d /= sentence_vectors.size();
    double norm = 0.0;
    for (double d : sig.vector) norm += d * d;
    sig.degenerate = norm < 1e-24;
    return sig;
}

// Clause vectorization ----------------------------------------------------------

enum class ClauseVectorMode : uint8_t { predicate_only, full_clause_mean };

inline ClauseVectorMode clause_vector_mode_from_string(std::string_view s) {
    if (s == "predicate_only") return ClauseVectorMode::predicate_only;
    if (s == "full_clause_mean") return ClauseVectorMode::full_clause_mean;
    throw std::invalid_argument("bad clause vector mode: " + std::string(s));
}

struct ClauseVector {
    std::vector<double> vector;
    bool zero = false;  // no in-vocab token contributed
};

// predicate_only: the bigram vector when the pair is a dictionary entry,
// otherwise the compositional verb + particle sum. full_clause_mean: the
// mean over all in-vocab tokens of the encoded clause sequence.
inline ClauseVector vectorize_clause(const NormalizedTriple& triple,
                                     const EmbeddingModel& model,
                                     const BigramTable& table, ClauseVectorMode mode) {
    ClauseVector out;
    out.vector.assign(model.dim(), 0.0);
    if (mode == ClauseVectorMode::predicate_only) {
        std::string key = triple.predicate.bigram_key();
        if (!key.empty() && table.contains(key)) {
            if (auto v = model.lookup(key)) {
                out.vector.assign(v->begin(), v->end());
                return out;
            }
        }
        bool any = false;
        if (auto v = model.lookup(triple.predicate.verb)) {
            for (size_t d = 0; d < out.vector.size(); ++d) out.vector[d] += (*v)[d];
            any = true;
        }
        if (triple.predicate.has_particle()) {
            if (auto v = model.lookup(triple.predicate.particle)) {
                for (size_t d = 0; d < out.vector.size(); ++d) out.vector[d] += (*v)[d];
                any = true;
            }
        }
        out.zero = !any;
        return out;
    }
    size_t hits = 0;
    for (const auto& tok : encode_tokens(triple, table)) {
        if (auto v = model.lookup(tok)) {
            for (size_t d = 0; d < out.vector.size(); ++d) out.vector[d] += (*v)[d];
            ++hits;
        }
    }
    if (hits == 0) {
        out.zero = true;
        return out;
    }
    for (double& d : out.vector) d /= hits;
    return out;
}

// Mean over in-vocab tokens of an arbitrary token sequence (sentence units).
inline ClauseVector vectorize_tokens(std::span<const std::string> tokens,
                                     const EmbeddingModel& model) {
    ClauseVector out;
    out.vector.assign(model.dim(), 0.0);
    size_t hits = 0;
    for (const auto& tok : tokens) {
        if (auto v = model.lookup(tok)) {
            for (size_t d = 0; d < out.vector.size(); ++d) out.vector[d] += (*v)[d];
            ++hits;
        }
    }
    if (hits == 0) {
        out.zero = true;
        return out;
    }
    for (double& d : out.vector) d /= hits;
    return out;
}

// Classification -------------------------------------------------------------------

struct ClassificationResult {
    std::string unit_id;
    std::vector<std::pair<std::string, double>> ranked;  // descending cosine
    std::vector<std::string> chosen;                     // top-k relation ids
    bool zero_unit = false;
};

// Cosine against every signature; descending score, ties broken by
// relation_id. A zero unit vector yields an empty chosen set and the flag.
inline ClassificationResult classify(std::span<const double> unit_vector,
                                     std::span<const RelationSignature> signatures,
                                     size_t k, const std::string& unit_id = "") {
    if (k > signatures.size())
        throw std::invalid_argument("classify: k exceeds signature count");
    ClassificationResult res;
    res.unit_id = unit_id;
    bool zero_unit = true;
    for (double v : unit_vector)
        if (v != 0.0) zero_unit = false;
    for (const auto& sig : signatures) {
        double score = zero_unit ? 0.0 : cosine(unit_vector, sig.vector);
        res.ranked.emplace_back(sig.relation_id, score);
    }
    std::sort(res.ranked.begin(), res.ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (zero_unit) {
        res.zero_unit = true;
        return res;
    }
    for (size_t i = 0; i < k; ++i) res.chosen.push_back(res.ranked[i].first);
    return res;
}

// Signature cache and I/O -------------------------------------------------------------

// Signatures keyed by (relation_id, model fingerprint) so rebuilt models
// never serve stale vectors.
class SignatureCache {
public:
    const RelationSignature* find(const std::string& relation_id,
                                  uint64_t model_fingerprint) const {
        auto it = cache_.find({relation_id, model_fingerprint});
        return it == cache_.end() ? nullptr : &it->second;
    }
    void put(RelationSignature sig, uint64_t model_fingerprint) {
        cache_.insert_or_assign({sig.relation_id, model_fingerprint}, std::move(sig));
    }
    size_t size() const { return cache_.size(); }

private:
    std::map<std::pair<std::string, uint64_t>, RelationSignature> cache_;
};

// Same text format as embed vector files; tokens are relation ids.
inline void save_signatures(std::span<const RelationSignature> signatures,
                            const std::string& path) {
    if (signatures.empty()) throw std::invalid_argument("no signatures to save");
    size_t dim = signatures.front().vector.size();
    std::string out = std::to_string(signatures.size()) + " " + std::to_string(dim) + "\n";
    for (const auto& sig : signatures) {
        out += sig.relation_id;
        for (double v : sig.vector) {
            out += ' ';
            out += format_real(v);
        }
        out += '\n';
    }
    write_file(path, out);
}

inline std::vector<RelationSignature> load_signatures(const std::string& path) {
    EmbeddingModel m = import_vectors(path);
    std::vector<RelationSignature> out;
    for (size_t i = 0; i < m.vocab_size(); ++i) {
        RelationSignature sig;
        sig.relation_id = m.vocab()[i];
        auto v = m.input_vector(i);
        sig.vector.assign(v.begin(), v.end());
        sig.contributors.push_back({"imported", "file"});
        out.push_back(std::move(sig));
    }
    return out;
}

}  // namespace bigtext
