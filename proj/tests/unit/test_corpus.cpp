#include "oracles.hpp"

#include "pacrr/corpus.hpp"
#include "pacrr/error.hpp"
#include "pacrr/stemmer.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

using namespace pacrr;

namespace {

using Tokens = std::vector<std::string>;

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

// Corpus of 9 documents where term frequencies are controlled.
CorpusStats stats_with(const std::map<std::string, std::size_t>& df, std::size_t n_docs) {
    std::vector<Document> docs(n_docs);
    for (std::size_t d = 0; d < n_docs; ++d) {
        docs[d].id = "d" + std::to_string(d);
        for (const auto& [term, count] : df) {
            if (d < count) docs[d].tokens.push_back(term);
        }
        docs[d].tokens.push_back("pad");
    }
    return CorpusStats::from_documents(docs);
}

}  // namespace

TEST_CASE("tokenize") {
    CHECK(tokenize("Railway ACCIDENTS!") == Tokens{"railway", "accidents"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("least 114 people were killed") == Tokens{"least", "114", "people", "were", "killed"});
    CHECK(tokenize("  --a__b  c-") == Tokens{"a", "b", "c"});
}

TEST_CASE("idf values") {
    const auto all = stats_with({{"every", 9}, {"four", 4}}, 9);
    CHECK(idf("every", all) == 0.0);
    CHECK(std::abs(idf("unseen", all) - 2.302585) < 1e-6);
    CHECK(std::abs(idf("unseen", all) - std::log(10.0)) < 1e-12);
    CHECK(std::abs(idf("four", all) - std::log(2.0)) < 1e-12);
    CHECK(all.doc_freq("four") == 4);
    CHECK(all.doc_count() == 9);
}

TEST_CASE("idf is non-increasing in document frequency") {
    std::map<std::string, std::size_t> df;
    for (std::size_t k = 0; k <= 20; ++k) df["t" + std::to_string(k)] = k;
    const auto stats = stats_with(df, 20);
    for (std::size_t k = 0; k < 20; ++k) {
        CHECK(idf("t" + std::to_string(k), stats) >= idf("t" + std::to_string(k + 1), stats));
    }
}

TEST_CASE("select_query_terms keeps every distinct term when under l_q") {
    Query q{"301", tokenize("railway accidents"),
            tokenize("what are the causes of railway accidents throughout the world"), {}};
    const auto stats = stats_with({{"railway", 2}}, 9);
    CHECK(select_query_terms(q, stats, 16) ==
          Tokens{"railway", "accidents", "what", "are", "the", "causes", "of", "throughout", "world"});
}

TEST_CASE("select_query_terms drops lowest idf, keeping order") {
    // df chosen so idf order is d > b > c > e > a.
    const auto stats = stats_with({{"a", 8}, {"b", 2}, {"c", 4}, {"d", 0}, {"e", 6}}, 9);
    Query q{"1", {"a", "b"}, {"c", "d", "e"}, {}};
    CHECK(select_query_terms(q, stats, 3) == Tokens{"b", "c", "d"});
    CHECK(select_query_terms(q, stats, 1) == Tokens{"d"});
    CHECK(select_query_terms(q, stats, 5).size() == 5);
}

TEST_CASE("drop_lowest follows a brute-force simulation") {
    const std::map<std::string, double> score{{"a", 0.1}, {"b", 2}, {"c", 1}, {"d", 3}, {"e", 0.5}};
    const auto fn = [&](const std::string& t) { return score.at(t); };
    CHECK(drop_lowest({"a", "b", "c", "d", "e"}, fn, 3) == Tokens{"b", "c", "d"});

    // Brute force: remove the minimum, scanning from the back so the later
    // of equal scores goes first, until max_terms remain.
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(10);
        Tokens terms;
        std::map<std::string, double> s;
        for (std::size_t k = 0; k < n; ++k) {
            terms.push_back("t" + std::to_string(k));
            s[terms.back()] = static_cast<double>(rng.below(4));
        }
        const std::size_t keep = 1 + rng.below(n);
        Tokens expect = terms;
        while (expect.size() > keep) {
            std::size_t worst = expect.size() - 1;
            for (std::size_t k = expect.size(); k-- > 0;) {
                if (s[expect[k]] < s[expect[worst]]) worst = k;
            }
            expect.erase(expect.begin() + static_cast<long>(worst));
        }
        CHECK(drop_lowest(terms, [&](const std::string& t) { return s.at(t); }, keep) == expect);
    }
}

TEST_CASE("select_query_terms: equal idf drops the later term") {
    const auto stats = stats_with({}, 3);
    Query q{"1", {"x", "y"}, {"z"}, {}};
    CHECK(select_query_terms(q, stats, 2) == Tokens{"x", "y"});
}

TEST_CASE("select_query_terms: output length and subset") {
    Rng rng(3);
    const auto stats = stats_with({{"w1", 1}, {"w2", 2}, {"w3", 3}, {"w4", 4}}, 9);
    for (int trial = 0; trial < 100; ++trial) {
        Query q{"1", {}, {}, {}};
        for (std::size_t k = 0, n = 1 + rng.below(6); k < n; ++k) q.title_tokens.push_back("w" + std::to_string(rng.below(8)));
        for (std::size_t k = 0, n = rng.below(12); k < n; ++k) q.description_tokens.push_back("w" + std::to_string(rng.below(8)));
        std::set<std::string> distinct(q.title_tokens.begin(), q.title_tokens.end());
        distinct.insert(q.description_tokens.begin(), q.description_tokens.end());
        const std::size_t l_q = 1 + rng.below(8);
        const auto sel = select_query_terms(q, stats, l_q);
        CHECK(sel.size() == std::min(l_q, distinct.size()));
        for (const auto& t : sel) CHECK(distinct.count(t) == 1);
        CHECK(std::set<std::string>(sel.begin(), sel.end()).size() == sel.size());
    }
}

TEST_CASE("select_query_terms rejects an empty query") {
    CHECK(error_of([] { select_query_terms(Query{"1", {}, {}, {}}, stats_with({}, 1), 4); }) == "query has no terms");
}

TEST_CASE("qrels parsing") {
    std::istringstream in("301 0 APW19980613.0242 1\n");
    const auto q = parse_qrels(in);
    CHECK(q.size() == 1);
    CHECK(q.label("301", "APW19980613.0242") == 1);
    CHECK_FALSE(q.label("301", "other").has_value());

    std::istringstream empty("");
    CHECK(parse_qrels(empty).empty());

    std::istringstream bad("301 0 A 1\n301 0 B\n");
    CHECK(error_of([&] { parse_qrels(bad); }).find("line 2") != std::string::npos);
    std::istringstream bad_label("301 0 A x\n");
    CHECK(error_of([&] { parse_qrels(bad_label); }).find("line 1") != std::string::npos);
}

TEST_CASE("qrels round-trip") {
    Rng rng(100);
    Qrels q;
    for (int k = 0; k < 100; ++k) q.set(std::to_string(300 + k % 7), "DOC" + std::to_string(k), static_cast<int>(rng.below(3)));
    std::ostringstream out;
    write_qrels(out, q);
    std::istringstream in(out.str());
    CHECK(parse_qrels(in) == q);
    std::size_t lines = 0;
    for (char c : out.str()) lines += c == '\n';
    CHECK(lines == 100);
}

TEST_CASE("topics parsing and round-trip") {
    std::istringstream in("301\tRailway Accidents\twhat are the causes of railway accidents\n\n302\tX\t\n");
    const auto qs = parse_trec_topics(in);
    REQUIRE(qs.size() == 2);
    CHECK(qs[0].id == "301");
    CHECK(qs[0].title_tokens == Tokens{"railway", "accidents"});
    CHECK(qs[0].description_tokens.size() == 7);
    CHECK(qs[1].description_tokens.empty());

    std::ostringstream out;
    write_trec_topics(out, qs);
    std::istringstream again(out.str());
    const auto back = parse_trec_topics(again);
    REQUIRE(back.size() == 2);
    CHECK(back[0].title_tokens == qs[0].title_tokens);
    CHECK(back[0].description_tokens == qs[0].description_tokens);

    std::istringstream bad("301 no tabs here\n");
    CHECK(error_of([&] { parse_trec_topics(bad); }).find("line 1") != std::string::npos);
}

TEST_CASE("docs jsonl parsing") {
    std::istringstream in("{\"id\": \"d1\", \"text\": \"Least 114 people\"}\n{\"id\":\"d2\",\"text\":\"\"}\n");
    const auto docs = parse_docs_jsonl(in);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].tokens == Tokens{"least", "114", "people"});
    CHECK(docs[1].tokens.empty());

    std::istringstream not_json("{\"id\": \"d1\", \"text\": \"a\"}\n{oops\n");
    CHECK(error_of([&] { parse_docs_jsonl(not_json); }).find("line 2") != std::string::npos);
    std::istringstream no_text("{\"id\": \"d1\"}\n");
    CHECK(error_of([&] { parse_docs_jsonl(no_text); }).find("line 1") != std::string::npos);
    std::istringstream dup("{\"id\": \"d1\", \"text\": \"a\"}\n{\"id\": \"d1\", \"text\": \"b\"}\n");
    CHECK(error_of([&] { parse_docs_jsonl(dup); }).find("line 2") != std::string::npos);
}

TEST_CASE("make_triples pairs higher labels with lower ones") {
    std::vector<Query> qs{{"q1", {"a"}, {}, {"a"}}, {"q2", {"b"}, {}, {"b"}}};
    std::vector<Document> docs{{"x", {"a"}}, {"y", {"b"}}, {"z", {"c"}}};
    Qrels qr;
    qr.set("q1", "x", 2);
    qr.set("q1", "y", 1);
    qr.set("q1", "z", 0);
    qr.set("q1", "missing", 0);
    qr.set("q2", "x", 1);
    qr.set("q2", "y", 1);
    const auto t = make_triples(qs, docs, qr);
    REQUIRE(t.size() == 3);
    for (const auto& tr : t) {
        CHECK(tr.query.id == "q1");
        CHECK(*qr.label(tr.query.id, tr.positive.id) > *qr.label(tr.query.id, tr.negative.id));
        CHECK(tr.positive.id != tr.negative.id);
    }
}

TEST_CASE("synthetic corpus structure") {
    SyntheticParams p;
    const auto c = generate_synthetic_corpus(7, p);
    CHECK(c.queries.size() == p.n_queries);
    CHECK(c.documents.size() == p.n_queries * p.docs_per_query);
    CHECK(c.qrels.size() == p.n_queries * p.docs_per_query);
    CHECK(c.embeddings.size() == p.vocab_size);

    std::set<std::string> stems;
    for (const auto& t : c.embeddings.terms()) {
        stems.insert(porter_stem(t));
        CHECK(std::abs(c.embeddings.norm(t) - 1.0) < 1e-12);
    }
    CHECK(stems.size() == p.vocab_size);

    std::map<std::string, const Document*> by_id;
    for (const auto& d : c.documents) {
        CHECK(d.tokens.size() == p.doc_len);
        by_id[d.id] = &d;
    }
    for (const auto& q : c.queries) {
        CHECK(q.title_tokens.size() == 2);
        CHECK(q.description_tokens.size() == p.terms_per_query);
        std::size_t min_pos = SIZE_MAX;
        std::size_t max_neg = 0;
        std::size_t relevant = 0;
        for (const auto& [doc_id, label] : c.qrels.judged(q.id)) {
            const auto& toks = by_id.at(doc_id)->tokens;
            const auto bigrams = oracle::bigram_windows(toks, q.description_tokens);
            const auto unigrams = oracle::unigram_hits(toks, q.description_tokens);
            if (label > 0) {
                ++relevant;
                CHECK(bigrams >= 2);
                CHECK(unigrams >= 3);
                min_pos = std::min(min_pos, bigrams);
            } else {
                CHECK(bigrams == 0);
                CHECK(unigrams <= 1);
                max_neg = std::max(max_neg, bigrams);
            }
        }
        CHECK(relevant == (p.docs_per_query + 1) / 2);
        CHECK(min_pos > max_neg);
    }
}

TEST_CASE("synthetic corpus: every triple's positive has more bigram windows") {
    const auto c = generate_synthetic_corpus(7, SyntheticParams{});
    const auto triples = make_triples(c.queries, c.documents, c.qrels);
    CHECK(triples.size() == 20 * 25);
    for (const auto& t : triples) {
        CHECK(oracle::bigram_windows(t.positive.tokens, t.query.description_tokens) >
              oracle::bigram_windows(t.negative.tokens, t.query.description_tokens));
    }
}

TEST_CASE("synthetic corpus is deterministic in the seed") {
    const auto write_all = [](const SyntheticCorpus& c) {
        std::ostringstream out;
        write_docs_jsonl(out, c.documents);
        write_trec_topics(out, c.queries);
        write_qrels(out, c.qrels);
        write_embeddings(out, c.embeddings);
        return out.str();
    };
    SyntheticParams p;
    p.n_queries = 4;
    CHECK(write_all(generate_synthetic_corpus(7, p)) == write_all(generate_synthetic_corpus(7, p)));
    CHECK(write_all(generate_synthetic_corpus(7, p)) != write_all(generate_synthetic_corpus(8, p)));
}

TEST_CASE("synthetic corpus rejects parameters it cannot satisfy") {
    SyntheticParams p;
    p.doc_len = 3;
    CHECK_THROWS_AS(generate_synthetic_corpus(1, p), Error);
    p = {};
    p.docs_per_query = 1;
    CHECK_THROWS_AS(generate_synthetic_corpus(1, p), Error);
    p = {};
    p.vocab_size = 5;
    CHECK_THROWS_AS(generate_synthetic_corpus(1, p), Error);
    p = {};
    p.n_queries = 0;
    CHECK_THROWS_AS(generate_synthetic_corpus(1, p), Error);
}

TEST_CASE("synthetic documents survive a docs.jsonl round-trip") {
    SyntheticParams p;
    p.n_queries = 2;
    const auto c = generate_synthetic_corpus(3, p);
    std::ostringstream out;
    write_docs_jsonl(out, c.documents);
    std::istringstream in(out.str());
    const auto back = parse_docs_jsonl(in);
    REQUIRE(back.size() == c.documents.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        CHECK(back[k].id == c.documents[k].id);
        CHECK(back[k].tokens == c.documents[k].tokens);
    }
}
