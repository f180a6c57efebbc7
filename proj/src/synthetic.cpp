#include "pacrr/corpus.hpp"
#include "pacrr/error.hpp"
#include "pacrr/rng.hpp"
#include "pacrr/stemmer.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <unordered_set>

namespace pacrr {

namespace {

constexpr std::string_view kOnsets = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";
constexpr std::string_view kCodas = "klmnrt";

std::string random_word(Rng& rng) {
    const std::size_t syllables = 2 + rng.below(2);
    std::string w;
    for (std::size_t s = 0; s < syllables; ++s) {
        w.push_back(kOnsets[rng.below(kOnsets.size())]);
        w.push_back(kVowels[rng.below(kVowels.size())]);
    }
    w.push_back(kCodas[rng.below(kCodas.size())]);
    return w;
}

std::vector<std::string> make_vocabulary(Rng& rng, std::size_t size) {
    std::vector<std::string> words;
    std::unordered_set<std::string> stems;
    std::size_t attempts = 0;
    while (words.size() < size) {
        if (++attempts > 1000 * size + 10000) throw Error("could not build a vocabulary of distinct stems");
        std::string w = random_word(rng);
        if (stems.insert(porter_stem(w)).second) words.push_back(std::move(w));
    }
    return words;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, const SyntheticParams& p) {
    if (p.vocab_size == 0 || p.n_queries == 0 || p.docs_per_query == 0 || p.doc_len == 0 ||
        p.terms_per_query == 0 || p.embedding_dim == 0) {
        throw Error("synthetic corpus parameters must all be >= 1");
    }
    if (p.terms_per_query < 3) throw Error("terms_per_query must be >= 3 to place two distinct query bigrams");
    if (p.vocab_size < p.terms_per_query + 2) throw Error("vocab_size must exceed terms_per_query + 1");
    if (p.docs_per_query < 2) throw Error("docs_per_query must be >= 2 (one relevant, one non-relevant)");
    if (p.doc_len < 5) throw Error("doc_len must be >= 5 to hold two separated bigrams");

    Rng rng(seed);
    const auto vocab = make_vocabulary(rng, p.vocab_size);

    SyntheticCorpus corpus;
    corpus.embeddings = EmbeddingTable(p.embedding_dim);
    for (const auto& w : vocab) {
        std::vector<double> v(p.embedding_dim);
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (auto& x : v) {
                x = rng.normal();
                norm2 += x * x;
            }
        } while (norm2 == 0.0);
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& x : v) x *= inv;
        corpus.embeddings.add(w, std::move(v));
    }

    const std::size_t n_relevant = (p.docs_per_query + 1) / 2;
    for (std::size_t qi = 0; qi < p.n_queries; ++qi) {
        // Query terms: distinct vocabulary indices.
        std::vector<std::size_t> order(vocab.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        rng.shuffle(std::span(order));
        std::vector<std::string> terms;
        std::unordered_set<std::size_t> in_query;
        for (std::size_t k = 0; k < p.terms_per_query; ++k) {
            terms.push_back(vocab[order[k]]);
            in_query.insert(order[k]);
        }
        std::vector<std::size_t> background;
        for (std::size_t k = 0; k < vocab.size(); ++k) {
            if (!in_query.contains(k)) background.push_back(k);
        }

        Query q;
        q.id = std::to_string(301 + qi);
        q.title_tokens = {terms[0], terms[1]};
        q.description_tokens = terms;
        corpus.queries.push_back(q);

        std::vector<int> labels(p.docs_per_query, 0);
        for (std::size_t k = 0; k < n_relevant; ++k) labels[k] = 1;
        rng.shuffle(std::span(labels));

        for (std::size_t di = 0; di < p.docs_per_query; ++di) {
            Document doc;
            char id[64];
            std::snprintf(id, sizeof id, "SYN%s.%04zu", q.id.c_str(), di);
            doc.id = id;
            doc.tokens.resize(p.doc_len);
            for (auto& t : doc.tokens) t = vocab[background[rng.below(background.size())]];

            if (labels[di] == 1) {
                const std::size_t pairs = p.terms_per_query - 1;
                const std::size_t first = rng.below(pairs);
                std::size_t second = rng.below(pairs - 1);
                if (second >= first) ++second;
                std::size_t pos1 = 0;
                std::size_t pos2 = 0;
                do {
                    pos1 = rng.below(p.doc_len - 1);
                    pos2 = rng.below(p.doc_len - 1);
                } while ((pos1 > pos2 ? pos1 - pos2 : pos2 - pos1) < 3);
                doc.tokens[pos1] = terms[first];
                doc.tokens[pos1 + 1] = terms[first + 1];
                doc.tokens[pos2] = terms[second];
                doc.tokens[pos2 + 1] = terms[second + 1];
            } else if (rng.below(2) == 1) {
                doc.tokens[rng.below(p.doc_len)] = terms[rng.below(terms.size())];
            }
            corpus.qrels.set(q.id, doc.id, labels[di]);
            corpus.documents.push_back(std::move(doc));
        }
    }
    return corpus;
}

}  // namespace pacrr
