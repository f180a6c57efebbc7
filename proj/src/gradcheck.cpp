#include "pacrr/error.hpp"
#include "pacrr/rng.hpp"
#include "pacrr/training.hpp"

#include <algorithm>
#include <cmath>

namespace pacrr {

namespace {

// Discrete choices made by a forward pass. Central differences are only
// meaningful when both perturbed evaluations make the same choices.
std::vector<std::size_t> routing_signature(const ForwardTrace& trace) {
    std::vector<std::size_t> sig;
    for (const auto& kt : trace.kernels) {
        if (kt.size < 2) continue;
        sig.insert(sig.end(), kt.pooled.argmax.begin(), kt.pooled.argmax.end());
        sig.insert(sig.end(), kt.topk.columns.begin(), kt.topk.columns.end());
        for (double v : kt.conv_out.data()) sig.push_back(v > 0.0 ? 1 : 0);
    }
    return sig;
}

struct Evaluation {
    double loss;
    std::vector<std::size_t> signature;
};

Evaluation evaluate(const SimPair& pair, const ModelParams& params) {
    const auto pos = forward(pair.positive, params);
    const auto neg = forward(pair.negative, params);
    Evaluation e{hinge_loss(pos.score, neg.score), routing_signature(pos)};
    const auto neg_sig = routing_signature(neg);
    e.signature.insert(e.signature.end(), neg_sig.begin(), neg_sig.end());
    e.signature.push_back(hinge_loss(pos.score, neg.score) > 0.0 ? 1 : 0);
    return e;
}

SimMatrix random_sim(Rng& rng, const ModelConfig& cfg, std::size_t query_len) {
    SimMatrix sim;
    sim.values = Matrix(cfg.l_q, cfg.l_d);
    sim.query_len = query_len;
    // Between n_s tokens and the full width, so padding is sometimes present.
    const std::size_t doc_len = cfg.n_s + rng.below(cfg.l_d - cfg.n_s + 1);
    sim.doc_len = doc_len;
    for (std::size_t i = 0; i < query_len; ++i) sim.query_terms.push_back("q" + std::to_string(i));
    for (std::size_t j = 0; j < doc_len; ++j) sim.doc_tokens.push_back("d" + std::to_string(j));
    for (std::size_t i = 0; i < query_len; ++i) {
        for (std::size_t j = 0; j < doc_len; ++j) {
            sim.values(i, j) = rng.below(10) == 0 ? 1.0 : rng.uniform(-1.0, 1.0);
        }
    }
    return sim;
}

}  // namespace

ModelConfig gradcheck_config() {
    ModelConfig c;
    c.l_q = 4;
    c.l_d = 12;
    c.l_g = 3;
    c.l_f = 2;
    c.n_s = 3;
    c.lstm_hidden = 4;
    return c;
}

GradCheckReport gradient_check(std::uint64_t seed, const ModelConfig& config, const GradCheckOptions& options) {
    config.validate();
    Rng rng(seed);
    GradCheckReport report;
    constexpr std::size_t kMaxAttempts = 64;

    for (std::size_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const std::size_t query_len = config.l_q >= 2 ? 2 + rng.below(config.l_q - 1) : 1;
        SimPair pair{"gradcheck", random_sim(rng, config, query_len), random_sim(rng, config, query_len)};
        ModelParams params = ModelParams::uniform(config, rng.next(), -0.5, 0.5);

        const auto pos = forward(pair.positive, params);
        const auto neg = forward(pair.negative, params);
        if (hinge_loss(pos.score, neg.score) < 1e-3) {
            ++report.resampled;
            continue;
        }
        auto analytic = backward(pos, neg, params);
        if (options.corrupt_backward) {
            for (auto& t : analytic.tensors()) {
                for (auto& v : t.data) v = v * 1.01 + 1e-3;
            }
        }
        const auto base = evaluate(pair, params);

        bool kink = false;
        report.tensors.clear();
        report.max_rel_error = 0.0;
        for (std::size_t ti = 0; ti < params.tensors().size() && !kink; ++ti) {
            TensorCheck check;
            check.name = params.tensors()[ti].name;
            auto& data = params.tensors()[ti].data;
            for (std::size_t k = 0; k < data.size(); ++k) {
                const double original = data[k];
                data[k] = original + options.epsilon;
                const auto plus = evaluate(pair, params);
                data[k] = original - options.epsilon;
                const auto minus = evaluate(pair, params);
                data[k] = original;
                if (plus.signature != base.signature || minus.signature != base.signature) {
                    kink = true;
                    break;
                }
                const double numeric = (plus.loss - minus.loss) / (2.0 * options.epsilon);
                const double a = analytic.tensors()[ti].data[k];
                const double denom = std::max({std::abs(a), std::abs(numeric), options.rel_floor});
                const double rel = std::abs(a - numeric) / denom;
                if (rel > check.worst_rel_error || k == 0) {
                    check.worst_rel_error = rel;
                    check.worst_index = k;
                    check.analytic = a;
                    check.numeric = numeric;
                }
            }
            report.max_rel_error = std::max(report.max_rel_error, check.worst_rel_error);
            report.tensors.push_back(std::move(check));
        }
        if (!kink) return report;
        ++report.resampled;
    }
    throw Error("gradient check could not find a kink-free instance in " + std::to_string(kMaxAttempts) +
                " attempts");
}

}  // namespace pacrr
