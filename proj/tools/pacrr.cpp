// pacrr: synthesize corpora, train, score, and inspect the model.
//
// Exit codes: 0 success, 1 runtime/domain error, 2 usage error.

#include "pacrr/checkpoint.hpp"
#include "pacrr/corpus.hpp"
#include "pacrr/embedding.hpp"
#include "pacrr/error.hpp"
#include "pacrr/introspection.hpp"
#include "pacrr/kernels.hpp"
#include "pacrr/model.hpp"
#include "pacrr/simmatrix.hpp"
#include "pacrr/training.hpp"

#include <CLI11.hpp>

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace fs = std::filesystem;
using namespace pacrr;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr const char* kDocsFile = "docs.jsonl";
constexpr const char* kTopicsFile = "topics.tsv";
constexpr const char* kQrelsFile = "qrels.txt";
constexpr const char* kEmbeddingsFile = "embeddings.txt";

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error("write failed for " + path.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("cannot rename into " + path.string());
    }
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return in;
}

template <typename Fn>
auto parse_file(const std::string& path, Fn&& parse) {
    auto in = open_input(path);
    try {
        return parse(in);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

// Input locations: either a corpus directory as written by `synth`, or
// individual files (which override the directory).
struct DataPaths {
    std::string corpus;
    std::string embeddings;
    std::string docs;
    std::string topics;
    std::string qrels;

    void add_options(CLI::App& app, bool with_qrels) {
        app.add_option("--corpus", corpus, "Directory holding docs.jsonl, topics.tsv, qrels.txt, embeddings.txt");
        app.add_option("--embeddings", embeddings, "Embeddings in word2vec text format");
        app.add_option("--docs", docs, "Documents as JSON lines");
        app.add_option("--topics", topics, "Topics, id<TAB>title<TAB>description");
        if (with_qrels) app.add_option("--qrels", qrels, "Relevance judgments");
    }

    void resolve(bool with_qrels) {
        const auto fill = [&](std::string& p, const char* name, const char* flag) {
            if (p.empty() && !corpus.empty()) p = (fs::path(corpus) / name).string();
            if (p.empty()) throw UsageError(std::string("missing ") + flag + " (or --corpus)");
            if (!fs::is_regular_file(p)) throw UsageError("input file not found: " + p);
        };
        fill(embeddings, kEmbeddingsFile, "--embeddings");
        fill(docs, kDocsFile, "--docs");
        fill(topics, kTopicsFile, "--topics");
        if (with_qrels) fill(qrels, kQrelsFile, "--qrels");
    }
};

struct Collection {
    EmbeddingTable embeddings;
    std::vector<Document> docs;
    std::vector<Query> queries;
    Qrels qrels;
    std::unordered_map<std::string, std::size_t> doc_index;

    const Document& doc(const std::string& id) const {
        const auto it = doc_index.find(id);
        if (it == doc_index.end()) throw Error("unknown document id '" + id + "'");
        return docs[it->second];
    }

    const Query& query(const std::string& id) const {
        for (const auto& q : queries) {
            if (q.id == id) return q;
        }
        throw Error("unknown query id '" + id + "'");
    }
};

Collection load_collection(const DataPaths& paths, bool with_qrels, std::size_t l_q) {
    Collection c;
    c.embeddings = parse_file(paths.embeddings, [](std::istream& in) { return load_embeddings(in); });
    c.docs = parse_file(paths.docs, [](std::istream& in) { return parse_docs_jsonl(in); });
    c.queries = parse_file(paths.topics, [](std::istream& in) { return parse_trec_topics(in); });
    if (with_qrels) c.qrels = parse_file(paths.qrels, [](std::istream& in) { return parse_qrels(in); });
    for (std::size_t i = 0; i < c.docs.size(); ++i) c.doc_index.emplace(c.docs[i].id, i);
    assign_query_terms(c.queries, CorpusStats::from_documents(c.docs), l_q);
    return c;
}

ModelParams load_checkpoint(const std::string& path) {
    if (!fs::is_regular_file(path)) throw UsageError("checkpoint not found: " + path);
    return parse_file(path, [](std::istream& in) { return read_checkpoint(in); });
}

ForwardTrace trace_for(const Collection& c, const Query& q, const Document& d, const ModelParams& params) {
    const auto& cfg = params.config();
    return forward(build_sim_matrix(q.selected_terms, d.tokens, c.embeddings, cfg.l_q, cfg.l_d), params);
}

std::string sanitize(std::string_view s) {
    std::string out(s);
    for (char& ch : out) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                        ch == '.' || ch == '-' || ch == '_';
        if (!ok) ch = '_';
    }
    return out;
}

std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void check_kernels(const std::vector<std::size_t>& kernels, const ModelConfig& cfg) {
    for (const std::size_t l : kernels) {
        if (l < 1 || l > cfg.l_g) {
            throw Error("kernel size " + std::to_string(l) + " outside 1.." + std::to_string(cfg.l_g));
        }
    }
}

// ---- synth ----

struct SynthArgs {
    std::uint64_t seed = 0;
    std::string out = ".";
    SyntheticParams params;
};

int run_synth(const SynthArgs& a) {
    const auto corpus = generate_synthetic_corpus(a.seed, a.params);
    const fs::path dir(a.out);
    std::ostringstream docs, topics, qrels, emb;
    write_docs_jsonl(docs, corpus.documents);
    write_trec_topics(topics, corpus.queries);
    write_qrels(qrels, corpus.qrels);
    write_embeddings(emb, corpus.embeddings);
    write_atomic(dir / kDocsFile, docs.str());
    write_atomic(dir / kTopicsFile, topics.str());
    write_atomic(dir / kQrelsFile, qrels.str());
    write_atomic(dir / kEmbeddingsFile, emb.str());
    std::cerr << "wrote " << corpus.queries.size() << " queries, " << corpus.documents.size() << " documents, "
              << corpus.qrels.size() << " judgments to " << dir.string() << '\n';
    return 0;
}

// ---- train ----

struct TrainArgs {
    DataPaths paths;
    ModelConfig model;
    TrainConfig train;
    std::string checkpoint;
    std::string history;
    bool quiet = false;
};

int run_train(TrainArgs& a) {
    a.paths.resolve(true);
    a.model.validate();
    a.train.validate();
    const auto c = load_collection(a.paths, true, a.model.l_q);
    const auto triples = make_triples(c.queries, c.docs, c.qrels);
    if (triples.empty()) throw Error("no training pairs: qrels hold no (relevant, less relevant) pairs");

    const auto progress = [&](const HistoryRow& row) {
        if (a.quiet) return;
        std::fprintf(stderr, "iteration %zu/%zu  loss %.6f  val_accuracy %.4f\n", row.iteration, a.train.iterations,
                     row.mean_loss, row.val_accuracy);
    };
    const auto result = train(triples, c.embeddings, a.model, a.train, progress);

    std::ostringstream ckpt;
    write_checkpoint(ckpt, result.params);
    write_atomic(a.checkpoint, ckpt.str());
    std::string history_path = a.history.empty() ? a.checkpoint + ".history.csv" : a.history;
    std::ostringstream hist;
    write_history_csv(hist, result.history);
    write_atomic(history_path, hist.str());

    const auto& last = result.history.back();
    std::printf("train_pairs\t%zu\nvalidation_pairs\t%zu\nfinal_loss\t%.17g\nval_accuracy\t%.17g\n",
                result.train_pairs, result.validation_pairs, last.mean_loss, last.val_accuracy);
    return 0;
}

// ---- score ----

struct ScoreArgs {
    DataPaths paths;
    std::string checkpoint;
    std::string query;
    std::vector<std::string> docs;
};

int run_score(ScoreArgs& a) {
    a.paths.resolve(false);
    const auto params = load_checkpoint(a.checkpoint);
    const auto c = load_collection(a.paths, false, params.config().l_q);
    const auto& q = c.query(a.query);
    struct Scored {
        std::string id;
        double value;
    };
    std::vector<Scored> scored;
    for (const auto& id : a.docs) {
        const auto& d = c.doc(id);
        const auto& cfg = params.config();
        scored.push_back({id, score(build_sim_matrix(q.selected_terms, d.tokens, c.embeddings, cfg.l_q, cfg.l_d), params)});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const Scored& x, const Scored& y) { return x.value > y.value; });
    for (const auto& s : scored) std::printf("%s\t%s\n", s.id.c_str(), exact(s.value).c_str());
    return 0;
}

// ---- inspect ----

struct InspectArgs {
    DataPaths paths;
    std::string checkpoint;
    std::string query;
    std::vector<std::string> docs;
    std::string stage = "filter_pool";
    std::vector<std::size_t> kernels;
    std::string out_dir = ".";
};

int run_inspect(InspectArgs& a) {
    a.paths.resolve(false);
    const auto stage = parse_stage(a.stage);
    const auto params = load_checkpoint(a.checkpoint);
    const auto& cfg = params.config();
    if (a.kernels.empty()) {
        for (std::size_t l = 1; l <= cfg.l_g; ++l) a.kernels.push_back(l);
    }
    check_kernels(a.kernels, cfg);
    const auto c = load_collection(a.paths, false, cfg.l_q);
    const auto& q = c.query(a.query);

    std::vector<MarkupReport> reports;
    for (const auto& id : a.docs) {
        const auto trace = trace_for(c, q, c.doc(id), params);
        for (const std::size_t l : a.kernels) reports.push_back(markup(trace, id, l, stage));
    }
    normalize_reports(reports);

    const fs::path dir(a.out_dir);
    for (const auto& r : reports) {
        const auto name = "markup_" + sanitize(r.doc_id) + "_" + std::string(stage_name(stage)) + "_k" +
                          std::to_string(r.kernel_size) + ".html";
        write_atomic(dir / name, render_html(std::span(&r, 1)));
        std::printf("%s\n", (dir / name).string().c_str());
    }
    return 0;
}

// ---- curves ----

struct CurvesArgs {
    DataPaths paths;
    std::string checkpoint;
    std::vector<std::string> queries;
    std::vector<std::size_t> positions{1, 2, 5, 10};
    std::string out;
};

int run_curves(CurvesArgs& a) {
    a.paths.resolve(true);
    const auto params = load_checkpoint(a.checkpoint);
    const auto c = load_collection(a.paths, true, params.config().l_q);
    if (a.queries.empty()) {
        for (const auto& q : c.queries) a.queries.push_back(q.id);
    }
    // Every judged document of every selected query.
    std::vector<ForwardTrace> traces;
    for (const auto& qid : a.queries) {
        const auto& q = c.query(qid);
        for (const auto& [doc_id, label] : c.qrels.judged(qid)) {
            (void)label;
            if (!c.doc_index.contains(doc_id)) continue;
            traces.push_back(trace_for(c, q, c.doc(doc_id), params));
        }
    }
    if (traces.empty()) throw Error("insufficient samples");
    const auto csv = render_curves_csv(binned_curves(traces, a.positions));
    if (a.out.empty() || a.out == "-") {
        std::fwrite(csv.data(), 1, csv.size(), stdout);
    } else {
        write_atomic(a.out, csv);
    }
    return 0;
}

// ---- grid ----

struct GridArgs {
    DataPaths paths;
    std::string checkpoint;
    std::string query;
    std::string doc;
    std::string out;
};

int run_grid(GridArgs& a) {
    a.paths.resolve(false);
    const auto params = load_checkpoint(a.checkpoint);
    const auto c = load_collection(a.paths, false, params.config().l_q);
    const auto trace = trace_for(c, c.query(a.query), c.doc(a.doc), params);
    const auto svg = render_grid_svg(signal_grid(trace));
    if (a.out.empty() || a.out == "-") {
        std::fwrite(svg.data(), 1, svg.size(), stdout);
    } else {
        write_atomic(a.out, svg);
    }
    return 0;
}

// ---- gradcheck ----

struct GradcheckArgs {
    std::uint64_t seed = 1;
    double tolerance = 1e-4;
    GradCheckOptions options;
};

int run_gradcheck(const GradcheckArgs& a) {
    const auto report = gradient_check(a.seed, gradcheck_config(), a.options);
    std::printf("tensor\tworst_rel_error\tindex\tanalytic\tnumeric\n");
    for (const auto& t : report.tensors) {
        std::printf("%s\t%.3e\t%zu\t%s\t%s\n", t.name.c_str(), t.worst_rel_error, t.worst_index,
                    exact(t.analytic).c_str(), exact(t.numeric).c_str());
    }
    std::printf("max_rel_error\t%.3e\nresampled\t%zu\n", report.max_rel_error, report.resampled);
    const bool ok = report.max_rel_error < a.tolerance;
    std::fprintf(stderr, "gradient check %s (tolerance %.1e)\n", ok ? "passed" : "FAILED", a.tolerance);
    return ok ? 0 : 1;
}

void add_model_options(CLI::App& app, ModelConfig& m) {
    app.add_option("--l-q", m.l_q, "Query terms kept")->capture_default_str();
    app.add_option("--l-d", m.l_d, "Document tokens kept")->capture_default_str();
    app.add_option("--l-g", m.l_g, "Largest kernel size")->capture_default_str();
    app.add_option("--l-f", m.l_f, "Filters per kernel")->capture_default_str();
    app.add_option("--n-s", m.n_s, "Signals kept per query term and kernel")->capture_default_str();
    app.add_option("--lstm-hidden", m.lstm_hidden, "LSTM hidden size")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PACRR relevance model: training and signal introspection"};
    app.set_config("--config", "", "TOML/INI file with option defaults (flags take precedence)");
    app.require_subcommand(1);
    std::string simd;
    app.add_option("--simd", simd, "Kernel backend: auto, scalar, avx2, neon")
        ->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}));

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus");
    synth_cmd->add_option("--seed", synth.seed, "Random seed")->required();
    synth_cmd->add_option("--out", synth.out, "Output directory")->capture_default_str();
    synth_cmd->add_option("--queries", synth.params.n_queries)->capture_default_str();
    synth_cmd->add_option("--docs-per-query", synth.params.docs_per_query)->capture_default_str();
    synth_cmd->add_option("--vocab", synth.params.vocab_size)->capture_default_str();
    synth_cmd->add_option("--doc-len", synth.params.doc_len)->capture_default_str();
    synth_cmd->add_option("--terms-per-query", synth.params.terms_per_query)->capture_default_str();
    synth_cmd->add_option("--dim", synth.params.embedding_dim, "Embedding dimension")->capture_default_str();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train and write a checkpoint");
    tr.paths.add_options(*train_cmd, true);
    add_model_options(*train_cmd, tr.model);
    train_cmd->add_option("--iterations", tr.train.iterations)->capture_default_str();
    train_cmd->add_option("--lr", tr.train.learning_rate, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--beta1", tr.train.adam_beta1)->capture_default_str();
    train_cmd->add_option("--beta2", tr.train.adam_beta2)->capture_default_str();
    train_cmd->add_option("--adam-epsilon", tr.train.adam_epsilon)->capture_default_str();
    train_cmd->add_option("--seed", tr.train.seed)->capture_default_str();
    train_cmd->add_option("--val-fraction", tr.train.validation_fraction, "Fraction of queries held out")
        ->capture_default_str();
    train_cmd->add_option("--checkpoint", tr.checkpoint, "Checkpoint to write")->required();
    train_cmd->add_option("--history", tr.history, "History CSV (default <checkpoint>.history.csv)");
    train_cmd->add_flag("--quiet", tr.quiet, "No per-iteration progress");

    ScoreArgs sc;
    auto* score_cmd = app.add_subcommand("score", "Score documents for a query");
    sc.paths.add_options(*score_cmd, false);
    score_cmd->add_option("--checkpoint", sc.checkpoint)->required();
    score_cmd->add_option("--query", sc.query)->required();
    score_cmd->add_option("--doc", sc.docs, "Document id (repeatable)")->required();

    InspectArgs in;
    auto* inspect_cmd = app.add_subcommand("inspect", "Write HTML text markup per kernel size");
    in.paths.add_options(*inspect_cmd, false);
    inspect_cmd->add_option("--checkpoint", in.checkpoint)->required();
    inspect_cmd->add_option("--query", in.query)->required();
    inspect_cmd->add_option("--doc", in.docs, "Document id (repeatable; normalized together)")->required();
    inspect_cmd->add_option("--stage", in.stage, "filter_pool or kmax")
        ->check(CLI::IsMember({"filter_pool", "kmax"}))
        ->capture_default_str();
    inspect_cmd->add_option("--kernels", in.kernels, "Kernel sizes (default 1..l_g)")->delimiter(',');
    inspect_cmd->add_option("--out-dir", in.out_dir)->capture_default_str();

    CurvesArgs cu;
    auto* curves_cmd = app.add_subcommand("curves", "Binned signal/score curves as CSV");
    cu.paths.add_options(*curves_cmd, true);
    curves_cmd->add_option("--checkpoint", cu.checkpoint)->required();
    curves_cmd->add_option("--query", cu.queries, "Query id (repeatable; default all)");
    curves_cmd->add_option("--positions", cu.positions, "1-based top-k positions")
        ->delimiter(',')
        ->capture_default_str();
    curves_cmd->add_option("--out", cu.out, "CSV path (default standard output)");

    GridArgs gr;
    auto* grid_cmd = app.add_subcommand("grid", "Signal grid of one document as SVG");
    gr.paths.add_options(*grid_cmd, false);
    grid_cmd->add_option("--checkpoint", gr.checkpoint)->required();
    grid_cmd->add_option("--query", gr.query)->required();
    grid_cmd->add_option("--doc", gr.doc)->required();
    grid_cmd->add_option("--out", gr.out, "SVG path (default standard output)");

    GradcheckArgs gc;
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the backward pass");
    gradcheck_cmd->add_option("--seed", gc.seed)->capture_default_str();
    gradcheck_cmd->add_option("--epsilon", gc.options.epsilon)->capture_default_str();
    gradcheck_cmd->add_option("--tolerance", gc.tolerance)->capture_default_str();
    gradcheck_cmd->add_flag("--corrupt-backward", gc.options.corrupt_backward)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!simd.empty() && simd != "auto") {
            const auto backend = simd == "scalar" ? kernels::Backend::Scalar
                                 : simd == "avx2" ? kernels::Backend::Avx2
                                                  : kernels::Backend::Neon;
            if (!kernels::select(backend)) throw Error("kernel backend '" + simd + "' unavailable on this machine");
        }
        if (*synth_cmd) return run_synth(synth);
        if (*train_cmd) return run_train(tr);
        if (*score_cmd) return run_score(sc);
        if (*inspect_cmd) return run_inspect(in);
        if (*curves_cmd) return run_curves(cu);
        if (*grid_cmd) return run_grid(gr);
        if (*gradcheck_cmd) return run_gradcheck(gc);
    } catch (const UsageError& e) {
        std::cerr << "pacrr: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "pacrr: error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
