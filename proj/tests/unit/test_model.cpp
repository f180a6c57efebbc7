#include "oracles.hpp"

#include "pacrr/error.hpp"
#include "pacrr/model.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace pacrr;

namespace {

ModelConfig small_config() {
    ModelConfig c;
    c.l_q = 3;
    c.l_d = 6;
    c.l_g = 3;
    c.l_f = 2;
    c.n_s = 2;
    c.lstm_hidden = 3;
    return c;
}

SimMatrix make_sim(const Matrix& values, std::size_t query_len, std::size_t doc_len) {
    SimMatrix s;
    s.values = values;
    s.query_len = query_len;
    s.doc_len = doc_len;
    for (std::size_t i = 0; i < query_len; ++i) s.query_terms.push_back("q" + std::to_string(i));
    for (std::size_t j = 0; j < std::min(doc_len, values.cols()); ++j) s.doc_tokens.push_back("d" + std::to_string(j));
    return s;
}

// Random similarity values inside the real region, zero elsewhere.
SimMatrix random_sim(Rng& rng, const ModelConfig& cfg, std::size_t query_len, std::size_t doc_len) {
    Matrix m(cfg.l_q, cfg.l_d);
    for (std::size_t i = 0; i < query_len; ++i) {
        for (std::size_t j = 0; j < std::min(doc_len, cfg.l_d); ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    }
    return make_sim(m, query_len, doc_len);
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

}  // namespace

TEST_CASE("config validation") {
    ModelConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.lstm_input() == 50);
    c.l_g = 1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.n_s = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.n_s = c.l_d + 1;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("parameter layout") {
    const ModelConfig c;
    const ModelParams p(c);
    const auto& t = p.tensors();
    REQUIRE(t.size() == 2 * 4 + 8 + 2);
    CHECK(t[0].name == "conv2.weight");
    CHECK(t[0].shape == std::vector<std::size_t>{2, 2, 16});
    CHECK(t[7].name == "conv5.bias");
    CHECK(t[8].name == "lstm.i.weight");
    CHECK(t[8].shape == std::vector<std::size_t>{8, 58});
    CHECK(t.back().name == "out.bias");
    CHECK(p.parameter_count() == 16 * (4 + 9 + 16 + 25) + 4 * 16 + 4 * (8 * 58 + 8) + 8 + 1);
}

TEST_CASE("uniform init is seeded and in range") {
    const ModelConfig c;
    const auto a = ModelParams::uniform(c, 17);
    CHECK(a == ModelParams::uniform(c, 17));
    CHECK_FALSE(a == ModelParams::uniform(c, 18));
    for (const auto& t : a.tensors()) {
        for (double v : t.data) {
            CHECK(v >= -0.1);
            CHECK(v < 0.1);
        }
    }
}

TEST_CASE("conv_same: zero input and identity kernel") {
    Rng rng(1);
    const Matrix zero(4, 5);
    const std::vector<double> w3(9 * 2, 0.3);
    const auto out = conv_same(zero, 3, w3, std::vector<double>{0.0, 0.0}, 2);
    CHECK(std::all_of(out.data().begin(), out.data().end(), [](double v) { return v == 0.0; }));

    const auto in = oracle::random_matrix(rng, 4, 5, -1.0, 1.0);
    std::vector<double> id(9, 0.0);
    id[4] = 1.0;
    const auto o = conv_same(in, 3, id, std::vector<double>{0.0}, 1);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 5; ++j) CHECK(o(i, j, 0) == std::max(in(i, j), 0.0));
    }
}

TEST_CASE("conv_same: even kernels pad bottom/right") {
    // 2x2 kernel with weight only at (1,1) reads input (i+1, j+1).
    Matrix in(3, 3);
    for (std::size_t k = 0; k < 9; ++k) in.data()[k] = static_cast<double>(k + 1);
    const std::vector<double> w{0, 0, 0, 1};
    const auto o = conv_same(in, 2, w, std::vector<double>{0.0}, 1);
    CHECK(o(0, 0, 0) == in(1, 1));
    CHECK(o(1, 1, 0) == in(2, 2));
    CHECK(o(2, 2, 0) == 0.0);
    CHECK(window_before(2) == 0);
    CHECK(window_after(2) == 1);
    CHECK(window_before(5) == 2);
    CHECK(window_after(4) == 2);
}

TEST_CASE("conv_same matches the quadruple-loop oracle") {
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t rows = 1 + rng.below(7);
        const std::size_t cols = 1 + rng.below(9);
        const std::size_t l = 2 + rng.below(4);
        const std::size_t f = 1 + rng.below(5);
        const auto in = oracle::random_matrix(rng, rows, cols, -1.0, 1.0);
        const auto w = random_vec(rng, l * l * f);
        const auto b = random_vec(rng, f, -0.3, 0.3);
        const auto got = conv_same(in, l, w, b, f);
        const auto want = oracle::conv(in, l, w, b, f);
        REQUIRE(got.data().size() == want.size());
        for (std::size_t k = 0; k < want.size(); ++k) CHECK(std::abs(got.data()[k] - want[k]) < 1e-10);
    }
}

TEST_CASE("conv_same with an active region equals the full computation") {
    Rng rng(6);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t rows = 2 + rng.below(6);
        const std::size_t cols = 2 + rng.below(12);
        const std::size_t ar = 1 + rng.below(rows);
        const std::size_t ac = rng.below(cols + 1);
        Matrix in(rows, cols);
        for (std::size_t i = 0; i < ar; ++i) {
            for (std::size_t j = 0; j < ac; ++j) in(i, j) = rng.uniform(-1.0, 1.0);
        }
        const std::size_t l = 2 + rng.below(4);
        const std::size_t f = 1 + rng.below(4);
        const auto w = random_vec(rng, l * l * f);
        const auto b = random_vec(rng, f, -0.3, 0.3);
        const auto full = conv_same(in, l, w, b, f);
        const auto fast = conv_same(in, l, w, b, f, ActiveRegion{ar, ac});
        for (std::size_t k = 0; k < full.data().size(); ++k) CHECK(std::abs(full.data()[k] - fast.data()[k]) < 1e-12);
    }
}

TEST_CASE("conv_same shape errors") {
    const Matrix in(3, 3);
    CHECK_THROWS_AS(conv_same(in, 2, std::vector<double>(3), std::vector<double>{0}, 1), Error);
    CHECK_THROWS_AS(conv_same(in, 2, std::vector<double>(4), std::vector<double>{0, 0}, 1), Error);
}

TEST_CASE("filter_pool examples") {
    Tensor3 t(1, 1, 3);
    t(0, 0, 0) = 0.2;
    t(0, 0, 1) = 0.9;
    t(0, 0, 2) = 0.9;
    const auto p = filter_pool(t);
    CHECK(p.values(0, 0) == 0.9);
    CHECK(p.argmax[0] == 1);

    Rng rng(5);
    Tensor3 one(2, 3, 1);
    for (double& v : one.data()) v = rng.unit();
    const auto q = filter_pool(one);
    for (std::size_t k = 0; k < 6; ++k) CHECK(q.values.data()[k] == one.data()[k]);
}

TEST_CASE("filter_pool matches the per-cell max oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor3 t(4, 5, 3);
        for (double& v : t.data()) v = trial % 2 ? rng.uniform(0.0, 1.0) : static_cast<double>(rng.below(3));
        const auto got = filter_pool(t);
        const auto want = oracle::filter_pool(t.data(), 4, 5, 3);
        CHECK(got.values == want.values);
        CHECK(got.argmax == want.argmax);
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 5; ++j) {
                for (std::size_t f = 0; f < 3; ++f) CHECK(got.values(i, j) >= t(i, j, f));
            }
        }
    }
}

TEST_CASE("kmax_pool examples") {
    Matrix row(1, 4);
    row.data() = {0.2, 0.9, 0.5, 0.1};
    auto k = kmax_pool(row, 2);
    CHECK(k.values.data() == std::vector<double>{0.9, 0.5});
    CHECK(k.columns == std::vector<std::size_t>{1, 2});

    Matrix flat(1, 3, 0.3);
    k = kmax_pool(flat, 2);
    CHECK(k.values.data() == std::vector<double>{0.3, 0.3});
    CHECK(k.columns == std::vector<std::size_t>{0, 1});

    Matrix narrow(1, 2);
    narrow.data() = {0.4, 0.7};
    k = kmax_pool(narrow, 3);
    CHECK(k.values.data() == std::vector<double>{0.7, 0.4, 0.0});
    CHECK(k.columns[2] == kNoColumn);
}

TEST_CASE("kmax_pool with n_s equal to the width is a full sort") {
    Rng rng(8);
    const auto m = oracle::random_matrix(rng, 5, 9, -1.0, 1.0);
    const auto k = kmax_pool(m, 9);
    for (std::size_t i = 0; i < 5; ++i) {
        std::vector<double> row(m.row(i).begin(), m.row(i).end());
        std::sort(row.begin(), row.end(), std::greater<>());
        CHECK(std::equal(row.begin(), row.end(), k.values.row(i).begin()));
    }
}

TEST_CASE("kmax_pool properties: oracle, sortedness, sources, permutation, monotonicity") {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t rows = 1 + rng.below(4);
        const std::size_t cols = 1 + rng.below(10);
        const std::size_t n_s = 1 + rng.below(cols);
        const auto m = oracle::tie_matrix(rng, rows, cols);
        const auto k = kmax_pool(m, n_s);
        const auto want = oracle::kmax(m, n_s);
        CHECK(k.values == want.values);
        CHECK(k.columns == want.columns);
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t s = 0; s < n_s; ++s) {
                if (s + 1 < n_s) CHECK(k.values(i, s) >= k.values(i, s + 1));
                CHECK(m(i, k.columns[i * n_s + s]) == k.values(i, s));
            }
        }
        // Column permutation leaves the kept values unchanged.
        std::vector<std::size_t> perm(cols);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(std::span(perm));
        Matrix pm(rows, cols);
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) pm(i, j) = m(i, perm[j]);
        }
        CHECK(kmax_pool(pm, n_s).values == k.values);
        // Raising one cell never lowers any kept value.
        Matrix up = m;
        up(rng.below(rows), rng.below(cols)) += rng.uniform(0.0, 1.0);
        const auto ku = kmax_pool(up, n_s);
        for (std::size_t q = 0; q < k.values.data().size(); ++q) CHECK(ku.values.data()[q] >= k.values.data()[q]);
    }
}

TEST_CASE("assemble concatenates in kernel order") {
    Matrix a(1, 1, 0.5), b(1, 1, 0.3);
    const std::vector<Matrix> ps{a, b};
    const auto m = assemble(ps);
    CHECK(m.data() == std::vector<double>{0.5, 0.3});
    const std::vector<Matrix> zeros(5, Matrix(16, 10));
    const auto z = assemble(zeros);
    CHECK(z.cols() == 50);
    CHECK(z == Matrix(16, 50));
    const std::vector<Matrix> bad{Matrix(1, 2), Matrix(2, 2)};
    CHECK_THROWS_AS(assemble(bad), Error);
}

TEST_CASE("lstm_combine: zero network scores 0") {
    const ModelConfig c = small_config();
    const ModelParams p(c);
    Rng rng(1);
    const auto r = lstm_combine(oracle::random_matrix(rng, c.l_q, c.lstm_input(), 0, 1), p, 2);
    CHECK(r.score == 0.0);
    CHECK(r.steps.size() == 2);
}

TEST_CASE("lstm_combine: one hand-computed step") {
    ModelConfig c = small_config();
    c.l_g = 2;
    c.n_s = 1;
    c.lstm_hidden = 1;
    ModelParams p(c);
    // Input x = [0.5, -0.25], h0 = 0; weights act on [x; h].
    const double wi[] = {0.2, 0.4, 0.9}, wf[] = {-0.3, 0.1, 0.5}, wo[] = {0.7, -0.6, 0.2}, wg[] = {1.1, 0.3, -0.4};
    for (std::size_t k = 0; k < 3; ++k) {
        p.lstm_weights(Gate::Input)[k] = wi[k];
        p.lstm_weights(Gate::Forget)[k] = wf[k];
        p.lstm_weights(Gate::Output)[k] = wo[k];
        p.lstm_weights(Gate::Candidate)[k] = wg[k];
    }
    p.lstm_bias(Gate::Input)[0] = 0.1;
    p.lstm_bias(Gate::Forget)[0] = -0.2;
    p.lstm_bias(Gate::Output)[0] = 0.05;
    p.lstm_bias(Gate::Candidate)[0] = 0.3;
    p.out_weights()[0] = 1.5;
    p.out_bias() = -0.25;

    Matrix x(c.l_q, 2);
    x(0, 0) = 0.5;
    x(0, 1) = -0.25;
    const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    const double i = sig(0.1 + 0.2 * 0.5 + 0.4 * -0.25);
    const double o = sig(0.05 + 0.7 * 0.5 - 0.6 * -0.25);
    const double g = std::tanh(0.3 + 1.1 * 0.5 + 0.3 * -0.25);
    const double cell = i * g;
    const double h = o * std::tanh(cell);
    const auto r = lstm_combine(x, p, 1);
    CHECK(std::abs(r.score - (1.5 * h - 0.25)) < 1e-12);
    CHECK(std::abs(r.steps[0].cell[0] - cell) < 1e-12);
    CHECK(std::abs(r.steps[0].forget_gate[0] - sig(-0.2 - 0.3 * 0.5 + 0.1 * -0.25)) < 1e-12);
}

TEST_CASE("lstm_combine ignores padding rows and rejects bad input") {
    const ModelConfig c = small_config();
    const auto p = ModelParams::uniform(c, 4, -0.5, 0.5);
    Rng rng(2);
    auto x = oracle::random_matrix(rng, c.l_q, c.lstm_input(), 0, 1);
    const double before = lstm_combine(x, p, 2).score;
    for (std::size_t k = 0; k < x.cols(); ++k) x(2, k) = 50.0;
    CHECK(lstm_combine(x, p, 2).score == before);
    CHECK_THROWS_AS(lstm_combine(x, p, 0), Error);
    x(0, 0) = std::nan("");
    CHECK_THROWS_WITH_AS(lstm_combine(x, p, 2), doctest::Contains("step 0"), Error);
}

TEST_CASE("forward: zero params give score 0") {
    const ModelConfig c = small_config();
    Rng rng(3);
    CHECK(forward(random_sim(rng, c, 3, 6), ModelParams(c)).score == 0.0);
}

TEST_CASE("forward: exact copy of the query puts 1 at the head of every P1 row") {
    const ModelConfig c = small_config();
    Matrix m(c.l_q, c.l_d);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) m(i, j) = i == j ? 1.0 : 0.2;
    }
    const auto t = forward(make_sim(m, 3, 3), ModelParams::uniform(c, 1));
    for (std::size_t i = 0; i < 3; ++i) CHECK(t.kernel(1).topk.values(i, 0) == 1.0);
}

TEST_CASE("forward matches the straight-line pipeline oracle") {
    const ModelConfig c = small_config();
    Rng rng(10);
    for (int trial = 0; trial < 25; ++trial) {
        const auto params = ModelParams::uniform(c, rng.next(), -0.6, 0.6);
        const std::size_t ql = 1 + rng.below(3);
        const std::size_t dl = 1 + rng.below(8);
        const auto sim = random_sim(rng, c, ql, dl);
        const auto t = forward(sim, params);
        const auto o = oracle::forward(sim.values, ql, params);
        REQUIRE(t.kernels.size() == 3);
        CHECK(t.kernel(1).pooled.values == sim.values);
        for (std::size_t l = 1; l <= 3; ++l) {
            const auto& kt = t.kernel(l);
            CHECK(kt.size == l);
            for (std::size_t q = 0; q < o.c[l - 1].data().size(); ++q) {
                CHECK(std::abs(kt.pooled.values.data()[q] - o.c[l - 1].data()[q]) < 1e-12);
            }
            for (std::size_t q = 0; q < o.p[l - 1].values.data().size(); ++q) {
                CHECK(std::abs(kt.topk.values.data()[q] - o.p[l - 1].values.data()[q]) < 1e-12);
            }
            if (l >= 2) {
                // Invariants tying the stages together.
                for (std::size_t i = 0; i < c.l_q; ++i) {
                    for (std::size_t j = 0; j < c.l_d; ++j) {
                        const auto cell = kt.conv_out.cell(i, j);
                        CHECK(kt.pooled.values(i, j) == *std::max_element(cell.begin(), cell.end()));
                        CHECK(cell[kt.pooled.argmax[i * c.l_d + j]] == kt.pooled.values(i, j));
                    }
                }
            }
            for (std::size_t i = 0; i < c.l_q; ++i) {
                for (std::size_t s = 0; s < c.n_s; ++s) {
                    const auto col = kt.topk.columns[i * c.n_s + s];
                    CHECK(kt.pooled.values(i, col) == kt.topk.values(i, s));
                }
            }
        }
        CHECK(t.lstm_states.size() == ql);
        CHECK(std::abs(t.score - o.score) < 1e-12);
        CHECK(score(sim, params) == t.score);
    }
}

TEST_CASE("forward is bit-deterministic") {
    const ModelConfig c;
    Rng rng(12);
    const auto params = ModelParams::uniform(c, 2);
    const auto sim = random_sim(rng, c, 5, 100);
    const auto a = forward(sim, params);
    const auto b = forward(sim, params);
    CHECK(a.score == b.score);
    CHECK(a.assembled == b.assembled);
    for (std::size_t l = 1; l <= c.l_g; ++l) {
        CHECK(a.kernel(l).conv_out == b.kernel(l).conv_out);
        CHECK(a.kernel(l).topk.columns == b.kernel(l).topk.columns);
    }
}

TEST_CASE("score unaffected by appended zero padding when signals are strong") {
    // Columns just past the document still see its last tokens through the
    // convolution windows, so both widths keep that spill-over region
    // (window_after(l_g) columns); everything appended beyond it must be
    // inert. Negative conv biases make all-padding windows pool to exactly
    // zero, so with n_s positive signals per row they never enter the top-k.
    ModelConfig c = small_config();
    c.l_d = 20;
    Rng rng(13);
    int checked = 0;
    for (int trial = 0; trial < 200 && checked < 20; ++trial) {
        auto params = ModelParams::uniform(c, rng.next(), -0.5, 0.5);
        for (std::size_t l = 2; l <= c.l_g; ++l) {
            for (double& b : params.conv_bias(l)) b = -std::abs(b) - 0.01;
        }
        const std::size_t dl = 6;
        ModelConfig narrow_cfg = c;
        narrow_cfg.l_d = dl + window_after(c.l_g);
        Matrix m(c.l_q, c.l_d);
        Matrix narrow(c.l_q, narrow_cfg.l_d);
        for (std::size_t i = 0; i < c.l_q; ++i) {
            for (std::size_t j = 0; j < dl; ++j) narrow(i, j) = m(i, j) = rng.uniform(0.2, 1.0);
        }
        const auto narrow_params = ModelParams::from_tensors(narrow_cfg, params.tensors());
        const auto small = forward(make_sim(narrow, c.l_q, dl), narrow_params);
        bool strong = true;
        for (const auto& kt : small.kernels) {
            for (std::size_t i = 0; i < c.l_q; ++i) {
                std::size_t pos = 0;
                for (std::size_t j = 0; j < narrow_cfg.l_d; ++j) pos += kt.pooled.values(i, j) > 0.0;
                strong = strong && pos >= c.n_s;
            }
        }
        if (!strong) continue;
        ++checked;
        CHECK(forward(make_sim(m, c.l_q, dl), params).score == small.score);
    }
    CHECK(checked >= 5);
}

TEST_CASE("params from_tensors checks shapes") {
    const ModelConfig c = small_config();
    auto tensors = ModelParams::uniform(c, 1).tensors();
    CHECK_NOTHROW(ModelParams::from_tensors(c, tensors));
    tensors[0].data.pop_back();
    CHECK_THROWS_AS(ModelParams::from_tensors(c, tensors), Error);
}
