#include "pacrr/training.hpp"

#include "pacrr/error.hpp"
#include "pacrr/kernels.hpp"
#include "pacrr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_set>

namespace pacrr {

namespace {

void check_trace(const ForwardTrace& trace, const ModelConfig& cfg) {
    if (trace.sim.values.rows() != cfg.l_q || trace.sim.values.cols() != cfg.l_d ||
        trace.kernels.size() != cfg.l_g || trace.assembled.rows() != cfg.l_q ||
        trace.assembled.cols() != cfg.lstm_input() || trace.lstm_states.size() != trace.sim.query_len) {
        throw Error("forward trace does not match the model configuration");
    }
    for (std::size_t l = 2; l <= cfg.l_g; ++l) {
        const auto& kt = trace.kernels[l - 1];
        if (kt.size != l || kt.conv_out.depth() != cfg.l_f || kt.topk.values.cols() != cfg.n_s) {
            throw Error("forward trace does not match the model configuration");
        }
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (iterations == 0) throw Error("iterations must be positive");
    if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
        throw Error("Adam betas must lie in (0, 1)");
    }
    if (!(adam_epsilon > 0.0)) throw Error("Adam epsilon must be positive");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw Error("validation fraction must lie in [0, 1)");
    }
}

// Margin first: exact 1 for equal scores and exact 0 once the margin reaches 1.
double hinge_loss(double rel_pos, double rel_neg) { return std::max(0.0, 1.0 - (rel_pos - rel_neg)); }

void backward_score(const ForwardTrace& trace, const ModelParams& params, double d_score, GradientSet& grads) {
    const auto& cfg = params.config();
    check_trace(trace, cfg);
    if (!(grads.config() == cfg)) throw Error("gradient set does not match the model configuration");
    if (d_score == 0.0) return;

    const auto& k = kernels::active();
    const std::size_t h = cfg.lstm_hidden;
    const std::size_t in = cfg.lstm_input();
    const std::size_t width = in + h;
    const std::size_t steps = trace.lstm_states.size();

    // Output projection.
    const auto& last = trace.lstm_states.back();
    k.axpy(d_score, last.hidden.data(), grads.out_weights().data(), h);
    grads.out_bias() += d_score;

    std::vector<double> dh(h);
    for (std::size_t r = 0; r < h; ++r) dh[r] = d_score * params.out_weights()[r];
    std::vector<double> dc(h, 0.0);
    std::vector<double> dz(width);
    std::vector<double> z(width);
    std::vector<double> dpre[kGateCount];
    for (auto& v : dpre) v.assign(h, 0.0);
    Matrix d_assembled(cfg.l_q, in);

    for (std::size_t t = steps; t-- > 0;) {
        const auto& s = trace.lstm_states[t];
        const std::vector<double> zeros(h, 0.0);
        const auto& c_prev = t > 0 ? trace.lstm_states[t - 1].cell : zeros;
        const auto& h_prev = t > 0 ? trace.lstm_states[t - 1].hidden : zeros;

        for (std::size_t r = 0; r < h; ++r) {
            const double tanh_c = std::tanh(s.cell[r]);
            const double d_out = dh[r] * tanh_c;
            const double d_cell = dc[r] + dh[r] * s.output_gate[r] * (1.0 - tanh_c * tanh_c);
            const double d_in = d_cell * s.candidate[r];
            const double d_cand = d_cell * s.input_gate[r];
            const double d_forget = d_cell * c_prev[r];
            dc[r] = d_cell * s.forget_gate[r];
            dpre[0][r] = d_in * s.input_gate[r] * (1.0 - s.input_gate[r]);
            dpre[1][r] = d_forget * s.forget_gate[r] * (1.0 - s.forget_gate[r]);
            dpre[2][r] = d_out * s.output_gate[r] * (1.0 - s.output_gate[r]);
            dpre[3][r] = d_cand * (1.0 - s.candidate[r] * s.candidate[r]);
        }

        const auto x = trace.assembled.row(t);
        std::copy(x.begin(), x.end(), z.begin());
        std::copy(h_prev.begin(), h_prev.end(), z.begin() + static_cast<std::ptrdiff_t>(in));
        std::fill(dz.begin(), dz.end(), 0.0);
        for (std::size_t g = 0; g < kGateCount; ++g) {
            const auto gate = static_cast<Gate>(g);
            const auto w = params.lstm_weights(gate);
            auto dw = grads.lstm_weights(gate);
            auto db = grads.lstm_bias(gate);
            for (std::size_t r = 0; r < h; ++r) {
                const double d = dpre[g][r];
                if (d == 0.0) continue;
                k.axpy(d, z.data(), dw.data() + r * width, width);
                db[r] += d;
                k.axpy(d, w.data() + r * width, dz.data(), width);
            }
        }
        std::copy(dz.begin(), dz.begin() + static_cast<std::ptrdiff_t>(in), d_assembled.row(t).begin());
        std::copy(dz.begin() + static_cast<std::ptrdiff_t>(in), dz.end(), dh.begin());
    }

    // k-max -> filter max -> ReLU -> convolution. Size 1 has no parameters.
    const auto& sim = trace.sim.values;
    for (std::size_t l = 2; l <= cfg.l_g; ++l) {
        const auto& kt = trace.kernels[l - 1];
        auto dw = grads.conv_weights(l);
        auto db = grads.conv_bias(l);
        const auto before = static_cast<std::ptrdiff_t>(window_before(l));
        for (std::size_t i = 0; i < steps; ++i) {
            for (std::size_t slot = 0; slot < cfg.n_s; ++slot) {
                const std::size_t col = kt.topk.columns[i * cfg.n_s + slot];
                if (col == kNoColumn) continue;
                const double g = d_assembled(i, (l - 1) * cfg.n_s + slot);
                if (g == 0.0) continue;
                const std::size_t f = kt.pooled.argmax[i * cfg.l_d + col];
                if (!(kt.conv_out(i, col, f) > 0.0)) continue;
                db[f] += g;
                for (std::size_t dy = 0; dy < l; ++dy) {
                    const auto row = static_cast<std::ptrdiff_t>(i) - before + static_cast<std::ptrdiff_t>(dy);
                    if (row < 0 || row >= static_cast<std::ptrdiff_t>(cfg.l_q)) continue;
                    for (std::size_t dx = 0; dx < l; ++dx) {
                        const auto c = static_cast<std::ptrdiff_t>(col) - before + static_cast<std::ptrdiff_t>(dx);
                        if (c < 0 || c >= static_cast<std::ptrdiff_t>(cfg.l_d)) continue;
                        dw[(dy * l + dx) * cfg.l_f + f] +=
                            g * sim(static_cast<std::size_t>(row), static_cast<std::size_t>(c));
                    }
                }
            }
        }
    }
}

GradientSet backward(const ForwardTrace& pos, const ForwardTrace& neg, const ModelParams& params) {
    const auto& cfg = params.config();
    check_trace(pos, cfg);
    check_trace(neg, cfg);
    GradientSet grads(cfg);
    if (hinge_loss(pos.score, neg.score) > 0.0) {
        backward_score(pos, params, -1.0, grads);
        backward_score(neg, params, 1.0, grads);
    }
    return grads;
}

void adam_step(ModelParams& params, const GradientSet& grads, AdamState& state, const TrainConfig& config,
               std::size_t step) {
    if (step == 0) throw Error("Adam step index counts from 1");
    const auto& cfg = params.config();
    if (!(grads.config() == cfg) || !(state.first.config() == cfg) || !(state.second.config() == cfg)) {
        throw Error("Adam operands have mismatched shapes");
    }
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step));
    auto& theta = params.tensors();
    for (std::size_t t = 0; t < theta.size(); ++t) {
        auto& p = theta[t].data;
        const auto& g = grads.tensors()[t].data;
        auto& m = state.first.tensors()[t].data;
        auto& v = state.second.tensors()[t].data;
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            const double m_hat = m[k] / correction1;
            const double v_hat = v[k] / correction2;
            p[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
        }
    }
}

SimPair prepare_pair(const TrainingTriple& triple, const EmbeddingTable& table, const ModelConfig& config) {
    const auto& terms = triple.query.selected_terms;
    if (terms.empty()) throw Error("query " + triple.query.id + " has no selected terms");
    return SimPair{triple.query.id, build_sim_matrix(terms, triple.positive.tokens, table, config.l_q, config.l_d),
                   build_sim_matrix(terms, triple.negative.tokens, table, config.l_q, config.l_d)};
}

double pairwise_accuracy(const ModelParams& params, std::span<const SimPair> pairs) {
    if (pairs.empty()) {
        std::cerr << "warning: pairwise accuracy over an empty set is reported as 0\n";
        return 0.0;
    }
    double correct = 0.0;
    for (const auto& p : pairs) {
        const double sp = score(p.positive, params);
        const double sn = score(p.negative, params);
        if (sp > sn) {
            correct += 1.0;
        } else if (sp == sn) {
            correct += 0.5;
        }
    }
    return correct / static_cast<double>(pairs.size());
}

double pairwise_accuracy(const ModelParams& params, std::span<const TrainingTriple> triples,
                         const EmbeddingTable& table) {
    std::vector<SimPair> pairs;
    pairs.reserve(triples.size());
    for (const auto& t : triples) pairs.push_back(prepare_pair(t, table, params.config()));
    return pairwise_accuracy(params, pairs);
}

std::vector<std::size_t> visit_order(std::uint64_t seed, std::size_t iteration, std::size_t count) {
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(seed, iteration));
    rng.shuffle(std::span(order));
    return order;
}

std::vector<std::string> validation_queries(std::span<const TrainingTriple> triples, const TrainConfig& config) {
    std::vector<std::string> ids;
    std::unordered_set<std::string> seen;
    for (const auto& t : triples) {
        if (seen.insert(t.query.id).second) ids.push_back(t.query.id);
    }
    auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(ids.size())));
    if (n_val >= ids.size()) n_val = ids.size() - 1;
    Rng rng(mix_seed(config.seed, 0x76616c6964ull));
    rng.shuffle(std::span(ids));
    ids.resize(n_val);
    std::sort(ids.begin(), ids.end());
    return ids;
}

TrainResult train(std::span<const TrainingTriple> triples, const EmbeddingTable& table,
                  const ModelConfig& model_config, const TrainConfig& train_config, const ProgressFn& progress) {
    model_config.validate();
    train_config.validate();
    if (triples.empty()) throw Error("no training triples");

    const auto held_out = validation_queries(triples, train_config);
    const std::unordered_set<std::string> held(held_out.begin(), held_out.end());
    std::vector<SimPair> train_pairs;
    std::vector<SimPair> val_pairs;
    for (const auto& t : triples) {
        auto pair = prepare_pair(t, table, model_config);
        (held.contains(t.query.id) ? val_pairs : train_pairs).push_back(std::move(pair));
    }

    TrainResult result;
    result.params = ModelParams::uniform(model_config, train_config.seed);
    result.train_pairs = train_pairs.size();
    result.validation_pairs = val_pairs.size();
    AdamState adam(model_config);
    std::size_t step = 0;

    for (std::size_t it = 1; it <= train_config.iterations; ++it) {
        double total = 0.0;
        for (const std::size_t idx : visit_order(train_config.seed, it, train_pairs.size())) {
            const auto& pair = train_pairs[idx];
            const auto pos = forward(pair.positive, result.params);
            const auto neg = forward(pair.negative, result.params);
            const double loss = hinge_loss(pos.score, neg.score);
            if (!std::isfinite(loss)) throw Error("non-finite loss at iteration " + std::to_string(it));
            total += loss;
            const auto grads = backward(pos, neg, result.params);
            adam_step(result.params, grads, adam, train_config, ++step);
        }
        HistoryRow row{it, total / static_cast<double>(train_pairs.size()),
                       val_pairs.empty() ? 0.0 : pairwise_accuracy(result.params, val_pairs)};
        result.history.push_back(row);
        if (progress) progress(row);
    }
    return result;
}

void write_history_csv(std::ostream& out, std::span<const HistoryRow> history) {
    out << "iteration,mean_loss,val_accuracy\n";
    char buf[96];
    for (const auto& row : history) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", row.iteration, row.mean_loss, row.val_accuracy);
        out << buf;
    }
}

}  // namespace pacrr
