#include "pacrr/model.hpp"

#include "pacrr/error.hpp"
#include "pacrr/kernels.hpp"
#include "pacrr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pacrr {

namespace {

constexpr const char* kGateNames[kGateCount] = {"i", "f", "o", "g"};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_finite(std::span<const double> values, std::size_t step) {
    for (double v : values) {
        if (!std::isfinite(v)) throw Error("non-finite value in LSTM step " + std::to_string(step));
    }
}

}  // namespace

void ModelConfig::validate() const {
    if (l_q == 0 || l_d == 0 || l_f == 0 || lstm_hidden == 0) {
        throw Error("l_q, l_d, l_f and lstm_hidden must be positive");
    }
    if (l_g < 2) throw Error("l_g must be >= 2");
    if (n_s == 0) throw Error("n_s must be >= 1");
    if (n_s > l_d) throw Error("n_s must not exceed l_d");
}

TensorBundle::TensorBundle(const ModelConfig& config) : config_(config) {
    config.validate();
    const std::size_t h = config.lstm_hidden;
    const std::size_t in = config.lstm_input() + h;
    for (std::size_t l = 2; l <= config.l_g; ++l) {
        const std::string prefix = "conv" + std::to_string(l);
        tensors_.push_back({prefix + ".weight", {l, l, config.l_f}, std::vector<double>(l * l * config.l_f, 0.0)});
        tensors_.push_back({prefix + ".bias", {config.l_f}, std::vector<double>(config.l_f, 0.0)});
    }
    for (const char* g : kGateNames) {
        tensors_.push_back({std::string("lstm.") + g + ".weight", {h, in}, std::vector<double>(h * in, 0.0)});
    }
    for (const char* g : kGateNames) {
        tensors_.push_back({std::string("lstm.") + g + ".bias", {h}, std::vector<double>(h, 0.0)});
    }
    tensors_.push_back({"out.weight", {h}, std::vector<double>(h, 0.0)});
    tensors_.push_back({"out.bias", {1}, std::vector<double>(1, 0.0)});
}

std::size_t TensorBundle::conv_index(std::size_t size) const {
    if (size < 2 || size > config_.l_g) {
        throw Error("no convolution kernel of size " + std::to_string(size));
    }
    return 2 * (size - 2);
}

bool TensorBundle::all_finite() const {
    for (const auto& t : tensors_) {
        for (double v : t.data) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

std::size_t TensorBundle::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.data.size();
    return n;
}

ModelParams ModelParams::uniform(const ModelConfig& config, std::uint64_t seed, double lo, double hi) {
    ModelParams params(config);
    Rng rng(seed);
    for (auto& t : params.tensors_) {
        for (auto& v : t.data) v = rng.uniform(lo, hi);
    }
    return params;
}

ModelParams ModelParams::from_tensors(const ModelConfig& config, std::vector<Tensor> tensors) {
    ModelParams params(config);
    if (tensors.size() != params.tensors_.size()) {
        throw Error("expected " + std::to_string(params.tensors_.size()) + " tensors, got " +
                    std::to_string(tensors.size()));
    }
    for (std::size_t k = 0; k < tensors.size(); ++k) {
        const auto& want = params.tensors_[k];
        auto& got = tensors[k];
        if (got.name != want.name) throw Error("tensor " + std::to_string(k) + " should be " + want.name);
        if (got.shape != want.shape || got.data.size() != want.data.size()) {
            throw Error("shape mismatch for tensor " + want.name);
        }
        params.tensors_[k].data = std::move(got.data);
    }
    if (!params.all_finite()) throw Error("parameters contain non-finite values");
    return params;
}

void GradientSet::add_scaled(const GradientSet& other, double scale) {
    if (!(other.config_ == config_)) throw Error("gradient shapes differ");
    for (std::size_t k = 0; k < tensors_.size(); ++k) {
        auto& dst = tensors_[k].data;
        kernels::active().axpy(scale, other.tensors_[k].data.data(), dst.data(), dst.size());
    }
}

bool GradientSet::is_zero() const {
    for (const auto& t : tensors_) {
        for (double v : t.data) {
            if (v != 0.0) return false;
        }
    }
    return true;
}

Tensor3 conv_same(const Matrix& input, std::size_t size, std::span<const double> weights,
                  std::span<const double> bias, std::size_t filters) {
    return conv_same(input, size, weights, bias, filters, ActiveRegion{input.rows(), input.cols()});
}

Tensor3 conv_same(const Matrix& input, std::size_t size, std::span<const double> weights,
                  std::span<const double> bias, std::size_t filters, ActiveRegion active) {
    if (size == 0) throw Error("kernel size must be positive");
    if (filters == 0) throw Error("filter count must be positive");
    if (weights.size() != size * size * filters) throw Error("convolution weights have the wrong shape");
    if (bias.size() != filters) throw Error("convolution bias has the wrong shape");
    if (active.rows > input.rows() || active.cols > input.cols()) throw Error("active region exceeds input");

    const std::size_t rows = input.rows();
    const std::size_t cols = input.cols();
    const std::size_t before = window_before(size);

    // Zero-padded copy so every window is a plain strided block.
    const std::size_t stride = cols + size - 1;
    std::vector<double> padded((rows + size - 1) * stride, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        std::copy_n(input.row(i).data(), cols, padded.data() + (i + before) * stride + before);
    }

    std::vector<double> bias_only(bias.begin(), bias.end());
    kernels::active().relu(bias_only.data(), filters);

    const auto& k = kernels::active();
    Tensor3 out(rows, cols, filters);
    for (std::size_t i = 0; i < rows; ++i) {
        // Window rows [i - before, i + after] reach into [0, active.rows)?
        const bool row_live = active.rows > 0 && i < active.rows + before;
        for (std::size_t j = 0; j < cols; ++j) {
            auto cell = out.cell(i, j);
            const bool col_live = active.cols > 0 && j < active.cols + before;
            if (!row_live || !col_live) {
                std::copy(bias_only.begin(), bias_only.end(), cell.begin());
                continue;
            }
            k.conv_window(padded.data() + i * stride + j, stride, weights.data(), bias.data(), size, filters,
                          cell.data());
            k.relu(cell.data(), filters);
        }
    }
    return out;
}

FilterPooled filter_pool(const Tensor3& conv_out) {
    if (conv_out.depth() == 0) throw Error("filter pooling needs at least one filter");
    FilterPooled result{Matrix(conv_out.rows(), conv_out.cols()),
                        std::vector<std::size_t>(conv_out.rows() * conv_out.cols(), 0)};
    for (std::size_t i = 0; i < conv_out.rows(); ++i) {
        for (std::size_t j = 0; j < conv_out.cols(); ++j) {
            const auto cell = conv_out.cell(i, j);
            std::size_t best = 0;
            for (std::size_t f = 1; f < cell.size(); ++f) {
                if (cell[f] > cell[best]) best = f;
            }
            result.values(i, j) = cell[best];
            result.argmax[i * conv_out.cols() + j] = best;
        }
    }
    return result;
}

KMaxPooled kmax_pool(const Matrix& pooled, std::size_t n_s) {
    if (n_s == 0) throw Error("k-max pooling needs n_s >= 1");
    const std::size_t rows = pooled.rows();
    const std::size_t cols = pooled.cols();
    KMaxPooled result{Matrix(rows, n_s), std::vector<std::size_t>(rows * n_s, kNoColumn)};
    const std::size_t keep = std::min(n_s, cols);
    std::vector<std::size_t> order(cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto row = pooled.row(i);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                          [&](std::size_t a, std::size_t b) { return row[a] > row[b] || (row[a] == row[b] && a < b); });
        for (std::size_t k = 0; k < keep; ++k) {
            result.values(i, k) = row[order[k]];
            result.columns[i * n_s + k] = order[k];
        }
    }
    return result;
}

Matrix assemble(std::span<const Matrix> topk) {
    if (topk.empty()) throw Error("nothing to assemble");
    const std::size_t rows = topk[0].rows();
    const std::size_t width = topk[0].cols();
    for (const auto& p : topk) {
        if (p.rows() != rows || p.cols() != width) throw Error("k-max outputs have inconsistent shapes");
    }
    Matrix out(rows, width * topk.size());
    for (std::size_t i = 0; i < rows; ++i) {
        auto dst = out.row(i);
        for (std::size_t l = 0; l < topk.size(); ++l) {
            const auto src = topk[l].row(i);
            std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(l * width));
        }
    }
    return out;
}

LstmResult lstm_combine(const Matrix& assembled, const TensorBundle& params, std::size_t query_len) {
    const auto& cfg = params.config();
    const std::size_t h = cfg.lstm_hidden;
    const std::size_t in = cfg.lstm_input();
    if (query_len == 0) throw Error("LSTM needs query_len >= 1");
    if (assembled.cols() != in || query_len > assembled.rows()) throw Error("assembled signals have the wrong shape");

    const auto& k = kernels::active();
    LstmResult result;
    std::vector<double> z(in + h, 0.0);
    std::vector<double> cell(h, 0.0);
    std::vector<double> hidden(h, 0.0);
    for (std::size_t t = 0; t < query_len; ++t) {
        const auto x = assembled.row(t);
        std::copy(x.begin(), x.end(), z.begin());
        std::copy(hidden.begin(), hidden.end(), z.begin() + static_cast<std::ptrdiff_t>(in));

        LstmStep step;
        std::vector<double>* outputs[kGateCount] = {&step.input_gate, &step.forget_gate, &step.output_gate,
                                                    &step.candidate};
        for (std::size_t g = 0; g < kGateCount; ++g) {
            const auto w = params.lstm_weights(static_cast<Gate>(g));
            const auto b = params.lstm_bias(static_cast<Gate>(g));
            auto& a = *outputs[g];
            a.resize(h);
            for (std::size_t r = 0; r < h; ++r) {
                const double pre = k.dot(w.data() + r * (in + h), z.data(), in + h) + b[r];
                a[r] = static_cast<Gate>(g) == Gate::Candidate ? std::tanh(pre) : sigmoid(pre);
            }
        }
        for (std::size_t r = 0; r < h; ++r) {
            cell[r] = step.forget_gate[r] * cell[r] + step.input_gate[r] * step.candidate[r];
            hidden[r] = step.output_gate[r] * std::tanh(cell[r]);
        }
        step.cell = cell;
        step.hidden = hidden;
        check_finite(step.cell, t);
        check_finite(step.hidden, t);
        result.steps.push_back(std::move(step));
    }
    const auto w_out = params.out_weights();
    result.score = k.dot(w_out.data(), hidden.data(), h) + params.out_bias();
    if (!std::isfinite(result.score)) throw Error("non-finite relevance score");
    return result;
}

ForwardTrace forward(const SimMatrix& sim, const ModelParams& params) {
    const auto& cfg = params.config();
    if (sim.values.rows() != cfg.l_q || sim.values.cols() != cfg.l_d) {
        throw Error("similarity matrix is " + std::to_string(sim.values.rows()) + "x" +
                    std::to_string(sim.values.cols()) + " but the model expects " + std::to_string(cfg.l_q) + "x" +
                    std::to_string(cfg.l_d));
    }
    if (sim.query_len == 0 || sim.query_len > cfg.l_q) throw Error("invalid query length");

    ForwardTrace trace;
    trace.sim = sim;
    trace.kernels.resize(cfg.l_g);
    const ActiveRegion active{sim.query_len, std::min(sim.retained_len(), cfg.l_d)};

    auto& unigram = trace.kernels[0];
    unigram.size = 1;
    unigram.pooled.values = sim.values;
    unigram.pooled.argmax.assign(cfg.l_q * cfg.l_d, 0);
    unigram.topk = kmax_pool(unigram.pooled.values, cfg.n_s);

    for (std::size_t l = 2; l <= cfg.l_g; ++l) {
        auto& kt = trace.kernels[l - 1];
        kt.size = l;
        kt.conv_out = conv_same(sim.values, l, params.conv_weights(l), params.conv_bias(l), cfg.l_f, active);
        kt.pooled = filter_pool(kt.conv_out);
        kt.topk = kmax_pool(kt.pooled.values, cfg.n_s);
    }

    std::vector<Matrix> topk;
    topk.reserve(cfg.l_g);
    for (const auto& kt : trace.kernels) topk.push_back(kt.topk.values);
    trace.assembled = assemble(topk);

    auto lstm = lstm_combine(trace.assembled, params, sim.query_len);
    trace.lstm_states = std::move(lstm.steps);
    trace.score = lstm.score;
    return trace;
}

double score(const SimMatrix& sim, const ModelParams& params) { return forward(sim, params).score; }

}  // namespace pacrr
