#include <bigtext/supervise.hpp>

#include "support/doc_builder.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>
#include <set>
#include <tuple>

using namespace bigtext;
using testsupport::ClauseSpec;
using testsupport::DocBuilder;
using testsupport::MentionSpec;
using testsupport::Tok;
using P = std::pair<int, int>;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    PropertyGraph graph;
    AnnotatedDocumentRecord record;

    explicit Fixture(AnnotatedDocumentRecord rec) : record(std::move(rec)) {
        BuildReport report;
        add_record_to_graph(graph, record, report);
    }
};

AnnotatedDocumentRecord obama_record() {
    DocBuilder b("kn-obama");
    b.sentence({{Tok{"Barack", "NNP"}, Tok{"Obama", "NNP"}, Tok{"was", "VBD", "be"},
                 Tok{"born", "VBN", "bear"}, Tok{"in", "IN"}, Tok{"Honolulu", "NNP"},
                 Tok{".", "."}},
                {ClauseSpec{P{0, 2}, P{2, 5}, P{5, 6}}},
                {MentionSpec{P{0, 2}, "PER", "Q76"},
                 MentionSpec{P{5, 6}, "LOC", "Q18094"}}});
    return b.build();
}

}  // namespace

TEST_CASE("gold fact transfers to a matching clause") {
    Fixture fx(obama_record());
    const auto& mentions = fx.record.sentences[0].mentions;

    GoldFact fact{"kn-obama", 0, mentions[0].span, mentions[1].span, "PLACE_OF_BIRTH",
                  std::nullopt};
    auto labeled = align(fx.graph, std::vector<GoldFact>{fact}, SpanMatch::exact);
    REQUIRE(labeled.size() == 1);
    CHECK(labeled[0].relation_id == "PLACE_OF_BIRTH");
    CHECK(labeled[0].clause.kind == VertexKind::clause);
    CHECK(labeled[0].fact_index == 0);
}

TEST_CASE("disjoint object span leaves the clause unlabeled") {
    Fixture fx(obama_record());
    const auto& mentions = fx.record.sentences[0].mentions;

    GoldFact fact{"kn-obama", 0, mentions[0].span, {0, 3}, "PLACE_OF_BIRTH",
                  std::nullopt};
    CHECK(align(fx.graph, std::vector<GoldFact>{fact}, SpanMatch::overlap).empty());
}

TEST_CASE("no swapped-argument credit") {
    Fixture fx(obama_record());
    const auto& mentions = fx.record.sentences[0].mentions;

    GoldFact swapped{"kn-obama", 0, mentions[1].span, mentions[0].span,
                     "PLACE_OF_BIRTH", std::nullopt};
    CHECK(align(fx.graph, std::vector<GoldFact>{swapped}, SpanMatch::overlap).empty());
}

TEST_CASE("ambiguous clauses never participate") {
    DocBuilder b("amb");
    b.sentence({{Tok{"Alice", "NNP"}, Tok{"and", "CC"}, Tok{"Bob", "NNP"},
                 Tok{"visited", "VBD", "visit"}, Tok{"Paris", "NNP"}, Tok{".", "."}},
                {ClauseSpec{P{0, 3}, P{3, 4}, P{4, 5}}},
                {MentionSpec{P{0, 1}, "PER", "Q1"}, MentionSpec{P{2, 3}, "PER", "Q2"},
                 MentionSpec{P{4, 5}, "LOC", "Q90"}}});
    Fixture fx(b.build());
    const auto& sent = fx.record.sentences[0];

    GoldFact fact{"amb", 0, sent.clauses[0].subject_span, sent.mentions[2].span,
                  "VISITED", std::nullopt};
    CHECK(align(fx.graph, std::vector<GoldFact>{fact}, SpanMatch::overlap).empty());
}

TEST_CASE("facts for unknown sentences are skipped") {
    Fixture fx(obama_record());
    GoldFact fact{"no-such-doc", 0, {0, 5}, {10, 15}, "X", std::nullopt};
    CHECK(align(fx.graph, std::vector<GoldFact>{fact}, SpanMatch::overlap).empty());
    GoldFact fact2{"kn-obama", 9, {0, 5}, {10, 15}, "X", std::nullopt};
    CHECK(align(fx.graph, std::vector<GoldFact>{fact2}, SpanMatch::overlap).empty());
}

TEST_CASE("a clause matching two facts keeps both labels") {
    Fixture fx(obama_record());
    const auto& mentions = fx.record.sentences[0].mentions;

    std::vector<GoldFact> facts = {
        {"kn-obama", 0, mentions[0].span, mentions[1].span, "PLACE_OF_BIRTH"},
        {"kn-obama", 0, mentions[0].span, mentions[1].span, "RESIDENCE"}};
    auto labeled = align(fx.graph, facts, SpanMatch::exact);
    REQUIRE(labeled.size() == 2);
    std::set<std::string> rels = {labeled[0].relation_id, labeled[1].relation_id};
    CHECK(rels == std::set<std::string>{"PLACE_OF_BIRTH", "RESIDENCE"});
}

namespace {

// Random eligible-clause fixtures: every clause carries exactly one linked
// subject and object mention, so the brute-force oracle is a pure span
// predicate over all (fact, clause) pairs.
struct RandomAlignCase {
    PropertyGraph graph;
    std::vector<GoldFact> facts;
    std::vector<std::pair<Span, Span>> clause_arg_spans;  // by clause ordinal
};

RandomAlignCase make_random_case(std::mt19937_64& rng) {
    RandomAlignCase out;
    std::string text(100, 'x');
    VertexId doc = out.graph.add_document({.external_id = "d"}, text);
    VertexId sent =
        out.graph.attach_sentence(doc, {.index_in_doc = 0, .char_span = {0, 100}});

    size_t n_clauses = 1 + rng() % 5;
    for (size_t c = 0; c < n_clauses; ++c) {
        uint32_t sb = static_cast<uint32_t>(rng() % 30);
        uint32_t se = sb + 2 + static_cast<uint32_t>(rng() % 15);
        uint32_t ob = 50 + static_cast<uint32_t>(rng() % 30);
        uint32_t oe = ob + 2 + static_cast<uint32_t>(rng() % 15);
        ClauseProps cp;
        cp.subject_span = {sb, se};
        cp.object_span = Span{ob, oe};
        cp.predicate_text = "p";
        cp.index_in_sentence = static_cast<uint32_t>(c);
        VertexId clause = out.graph.attach_clause(sent, cp);
        MentionProps ms;
        ms.char_span = {sb, se};
        ms.role = SyntacticRole::subject;
        VertexId m1 = out.graph.attach_mention(clause, ms);
        out.graph.link_entity(m1, "QS" + std::to_string(c), "s");
        MentionProps mo;
        mo.char_span = {ob, oe};
        mo.role = SyntacticRole::object;
        VertexId m2 = out.graph.attach_mention(clause, mo);
        out.graph.link_entity(m2, "QO" + std::to_string(c), "o");
        out.clause_arg_spans.emplace_back(Span{sb, se}, Span{ob, oe});
    }

    size_t n_facts = 1 + rng() % 5;
    for (size_t f = 0; f < n_facts; ++f) {
        Span ssp, osp;
        if (rng() % 2) {
            // derive from a clause so exact matches actually occur
            const auto& [cs, co] = out.clause_arg_spans[rng() % out.clause_arg_spans.size()];
            ssp = cs;
            osp = co;
            if (rng() % 3 == 0) ssp.begin += 1;
        } else {
            ssp.begin = static_cast<uint32_t>(rng() % 30);
            ssp.end = ssp.begin + 2 + static_cast<uint32_t>(rng() % 15);
            osp.begin = 50 + static_cast<uint32_t>(rng() % 30);
            osp.end = osp.begin + 2 + static_cast<uint32_t>(rng() % 15);
        }
        out.facts.push_back({"d", 0, ssp, osp, "R" + std::to_string(f), std::nullopt});
    }
    return out;
}

using LabelKey = std::tuple<uint32_t, std::string, size_t>;

std::set<LabelKey> label_set(std::span<const LabeledClause> labeled) {
    std::set<LabelKey> out;
    for (const auto& lc : labeled)
        out.insert({lc.clause.ordinal, lc.relation_id, lc.fact_index});
    return out;
}

}  // namespace

TEST_CASE("align equals exhaustive pair enumeration on random fixtures") {
    std::mt19937_64 rng(2024);
    for (int iter = 0; iter < 150; ++iter) {
        RandomAlignCase c = make_random_case(rng);

        for (SpanMatch match : {SpanMatch::exact, SpanMatch::overlap}) {
            auto got = label_set(align(c.graph, c.facts, match));

            std::set<LabelKey> oracle;
            for (size_t fi = 0; fi < c.facts.size(); ++fi)
                for (uint32_t cl = 0; cl < c.clause_arg_spans.size(); ++cl) {
                    const auto& [ssp, osp] = c.clause_arg_spans[cl];
                    if (spans_match(ssp, c.facts[fi].subject_span, match) &&
                        spans_match(osp, c.facts[fi].object_span, match))
                        oracle.insert({cl, c.facts[fi].relation_id, fi});
                }
            REQUIRE(got == oracle);
        }

        // exact labeling is a subset of overlap labeling
        auto exact = label_set(align(c.graph, c.facts, SpanMatch::exact));
        auto overlap = label_set(align(c.graph, c.facts, SpanMatch::overlap));
        for (const auto& k : exact) REQUIRE(overlap.count(k) == 1);
    }
}

TEST_CASE("align is independent of fact enumeration order") {
    std::mt19937_64 rng(55);
    RandomAlignCase c = make_random_case(rng);
    auto base = label_set(align(c.graph, c.facts, SpanMatch::overlap));
    for (int i = 0; i < 5; ++i) {
        auto shuffled = c.facts;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        auto got = align(c.graph, shuffled, SpanMatch::overlap);
        std::set<std::pair<uint32_t, std::string>> lhs, rhs;
        for (const auto& k : base) lhs.insert({std::get<0>(k), std::get<1>(k)});
        for (const auto& lc : got) rhs.insert({lc.clause.ordinal, lc.relation_id});
        REQUIRE(lhs == rhs);
    }
}

TEST_CASE("training set emission honors holdout") {
    Fixture fx(obama_record());
    const auto& mentions = fx.record.sentences[0].mentions;
    std::vector<GoldFact> facts = {
        {"kn-obama", 0, mentions[0].span, mentions[1].span, "PLACE_OF_BIRTH"}};
    auto labeled = align(fx.graph, facts, SpanMatch::exact);
    REQUIRE(labeled.size() == 1);

    SECTION("empty holdout keeps every labeled clause") {
        auto records = emit_training_set(fx.graph, labeled);
        REQUIRE(records.size() == 1);
        CHECK(records[0].clause_text == "Barack Obama was born in Honolulu");
        CHECK(records[0].relation_id == "PLACE_OF_BIRTH");
        CHECK(records[0].sentence_key == "kn-obama:0");
    }
    SECTION("holding out every sentence empties the set") {
        auto records = emit_training_set(fx.graph, labeled, {"kn-obama:0"});
        CHECK(records.empty());
    }
}

TEST_CASE("per-relation sampling is seed-reproducible") {
    std::vector<TrainingRecord> records;
    for (int r = 0; r < 3; ++r)
        for (int i = 0; i < 20; ++i)
            records.push_back({"text" + std::to_string(i), "R" + std::to_string(r),
                               "s" + std::to_string(i),
                               {VertexKind::clause, static_cast<uint32_t>(i)}});

    auto a = sample_per_relation(records, 5, 42);
    auto b = sample_per_relation(records, 5, 42);
    REQUIRE(a.size() == 15);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].clause_text == b[i].clause_text);
        CHECK(a[i].relation_id == b[i].relation_id);
    }

    auto c = sample_per_relation(records, 5, 43);
    bool identical = true;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].clause_text != c[i].clause_text) identical = false;
    CHECK_FALSE(identical);  // different seed draws a different sample
}

TEST_CASE("gold file round-trips") {
    std::vector<GoldFact> facts = {
        {"doc1", 0, {0, 12}, {25, 33}, "PLACE_OF_BIRTH", 2},
        {"doc2", 3, {5, 9}, {14, 20}, "SPOUSE", std::nullopt}};
    auto path = (fs::temp_directory_path() / "bigtext-gold.tsv").string();
    save_gold(facts, path);
    auto loaded = load_gold(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].doc_id == "doc1");
    CHECK(loaded[0].subject_span == Span{0, 12});
    CHECK(loaded[0].fold == 2u);
    CHECK(loaded[1].relation_id == "SPOUSE");
    CHECK_FALSE(loaded[1].fold.has_value());
    fs::remove(path);
}

TEST_CASE("gold file validation") {
    auto path = (fs::temp_directory_path() / "bigtext-badgold.tsv").string();
    write_file(path, "doc1\t0\t5\t2\t10\t20\tR\n");  // inverted subject span
    CHECK_THROWS_WITH(load_gold(path), Catch::Matchers::ContainsSubstring("line 1"));
    write_file(path, "doc1\t0\t5\n");
    CHECK_THROWS_WITH(load_gold(path), Catch::Matchers::ContainsSubstring("7 or 8"));
    fs::remove(path);
}
