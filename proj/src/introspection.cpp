#include "pacrr/introspection.hpp"

#include "pacrr/error.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <utility>

namespace pacrr {

std::string_view stage_name(MarkupStage stage) {
    return stage == MarkupStage::FilterPool ? "filter_pool" : "kmax";
}

MarkupStage parse_stage(std::string_view name) {
    if (name == "filter_pool") return MarkupStage::FilterPool;
    if (name == "kmax") return MarkupStage::KMax;
    throw Error("unknown markup stage '" + std::string(name) + "' (expected filter_pool or kmax)");
}

std::vector<double> term_opacity(const Matrix& pooled, std::size_t kernel_size, std::size_t query_len,
                                 std::size_t doc_len) {
    if (kernel_size == 0) throw Error("kernel size must be positive");
    query_len = std::min(query_len, pooled.rows());
    doc_len = std::min(doc_len, pooled.cols());
    const std::size_t before = window_before(kernel_size);
    const std::size_t after = window_after(kernel_size);
    std::vector<double> strength(doc_len, 0.0);
    for (std::size_t j = 0; j < doc_len; ++j) {
        // Centres c with c - before <= j <= c + after.
        const std::size_t first = j >= after ? j - after : 0;
        const std::size_t last = std::min(j + before, doc_len - 1);
        double best = 0.0;
        for (std::size_t i = 0; i < query_len; ++i) {
            for (std::size_t c = first; c <= last; ++c) best = std::max(best, pooled(i, c));
        }
        strength[j] = best;
    }
    return strength;
}

MarkupReport filter_pool_markup(const ForwardTrace& trace, std::string doc_id, std::size_t kernel_size) {
    const auto& kt = trace.kernel(kernel_size);
    MarkupReport r;
    r.doc_id = std::move(doc_id);
    r.kernel_size = kernel_size;
    r.stage = MarkupStage::FilterPool;
    r.tokens = trace.sim.doc_tokens;
    r.opacities = term_opacity(kt.pooled.values, kernel_size, trace.sim.query_len, trace.sim.retained_len());
    return r;
}

MarkupReport kmax_markup(const ForwardTrace& trace, std::string doc_id, std::size_t kernel_size) {
    const auto& kt = trace.kernel(kernel_size);
    const std::size_t doc_len = trace.sim.retained_len();
    const std::size_t n_s = kt.topk.values.cols();
    // Surviving cells only.
    Matrix kept(kt.pooled.values.rows(), kt.pooled.values.cols());
    for (std::size_t i = 0; i < trace.sim.query_len; ++i) {
        for (std::size_t s = 0; s < n_s; ++s) {
            const std::size_t c = kt.topk.columns[i * n_s + s];
            if (c != kNoColumn) kept(i, c) = kt.pooled.values(i, c);
        }
    }
    MarkupReport r;
    r.doc_id = std::move(doc_id);
    r.kernel_size = kernel_size;
    r.stage = MarkupStage::KMax;
    r.tokens = trace.sim.doc_tokens;
    r.opacities = term_opacity(kept, kernel_size, trace.sim.query_len, doc_len);
    return r;
}

MarkupReport markup(const ForwardTrace& trace, std::string doc_id, std::size_t kernel_size, MarkupStage stage) {
    return stage == MarkupStage::FilterPool ? filter_pool_markup(trace, std::move(doc_id), kernel_size)
                                            : kmax_markup(trace, std::move(doc_id), kernel_size);
}

void normalize_reports(std::span<MarkupReport> reports) {
    std::map<std::pair<std::size_t, MarkupStage>, double> maxima;
    for (const auto& r : reports) {
        double& m = maxima[{r.kernel_size, r.stage}];
        for (double v : r.opacities) m = std::max(m, v);
    }
    for (auto& r : reports) {
        const double m = maxima[{r.kernel_size, r.stage}];
        r.normalizer = m;
        for (double& v : r.opacities) v = m > 0.0 ? v / m : 0.0;
    }
}

SignalGrid signal_grid(const ForwardTrace& trace) {
    SignalGrid grid;
    grid.query_terms = trace.sim.query_terms;
    grid.kernel_count = trace.kernels.size();
    grid.n_s = trace.kernels.empty() ? 0 : trace.kernels[0].topk.values.cols();
    const std::size_t terms = trace.sim.query_len;
    grid.values.assign(terms * grid.kernel_count * grid.n_s, 0.0);
    for (std::size_t i = 0; i < terms; ++i) {
        for (std::size_t l = 1; l <= grid.kernel_count; ++l) {
            const auto row = trace.kernel(l).topk.values.row(i);
            for (std::size_t s = 0; s < grid.n_s; ++s) {
                const double v = std::max(row[s], 0.0);
                grid.values[(i * grid.kernel_count + (l - 1)) * grid.n_s + s] = v;
                grid.normalizer = std::max(grid.normalizer, v);
            }
        }
    }
    if (grid.normalizer > 0.0) {
        for (double& v : grid.values) v /= grid.normalizer;
    } else {
        std::fill(grid.values.begin(), grid.values.end(), 0.0);
    }
    return grid;
}

std::vector<SignalSample> collect_samples(std::span<const ForwardTrace> traces, std::size_t kernel_size,
                                          std::size_t position) {
    if (position == 0) throw Error("top-k positions are 1-based");
    std::vector<SignalSample> samples;
    for (const auto& trace : traces) {
        const auto& topk = trace.kernel(kernel_size).topk.values;
        if (position > topk.cols()) {
            throw Error("position " + std::to_string(position) + " exceeds n_s = " + std::to_string(topk.cols()));
        }
        for (std::size_t i = 0; i < trace.sim.query_len; ++i) samples.push_back({topk(i, position - 1), trace.score});
    }
    return samples;
}

BinnedCurve binned_response(std::span<const SignalSample> samples, std::size_t kernel_size, std::size_t position) {
    if (samples.size() < kBinCount) throw Error("insufficient samples");
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (samples[a].strength != samples[b].strength) return samples[a].strength < samples[b].strength;
        return samples[a].score < samples[b].score;
    });

    BinnedCurve curve{kernel_size, position, {}};
    const std::size_t base = samples.size() / kBinCount;
    const std::size_t extra = samples.size() % kBinCount;
    std::size_t start = 0;
    for (std::size_t b = 0; b < kBinCount; ++b) {
        const std::size_t count = base + (b < extra ? 1 : 0);
        std::vector<double> scores;
        scores.reserve(count);
        for (std::size_t k = start; k < start + count; ++k) scores.push_back(samples[order[k]].score);
        std::sort(scores.begin(), scores.end());
        const double median =
            count % 2 == 1 ? scores[count / 2] : (scores[count / 2 - 1] + scores[count / 2]) / 2.0;
        curve.bins.push_back({samples[order[start]].strength, samples[order[start + count - 1]].strength, median, count});
        start += count;
    }
    return curve;
}

std::vector<BinnedCurve> binned_curves(std::span<const ForwardTrace> traces, std::span<const std::size_t> positions) {
    if (traces.empty()) throw Error("insufficient samples");
    const std::size_t kernels = traces.front().kernels.size();
    std::vector<BinnedCurve> curves;
    for (const std::size_t p : positions) {
        for (std::size_t l = 1; l <= kernels; ++l) {
            const auto samples = collect_samples(traces, l, p);
            curves.push_back(binned_response(samples, l, p));
        }
    }
    return curves;
}

}  // namespace pacrr
