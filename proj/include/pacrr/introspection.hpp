#pragma once

#include "pacrr/matrix.hpp"
#include "pacrr/model.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pacrr {

enum class MarkupStage { FilterPool, KMax };

std::string_view stage_name(MarkupStage stage);
/// Parses "filter_pool" or "kmax"; throws pacrr::Error otherwise.
MarkupStage parse_stage(std::string_view name);

/// Per-token signal strengths of one document for one kernel size.
/// Before normalize_reports `opacities` hold raw strengths and `normalizer`
/// is 0; afterwards opacities lie in [0, 1].
struct MarkupReport {
    std::string doc_id;
    std::size_t kernel_size = 0;
    MarkupStage stage = MarkupStage::FilterPool;
    std::vector<std::string> tokens;
    std::vector<double> opacities;
    double normalizer = 0.0;
};

/// strength(j) = max of pooled(i, c) over query rows i < query_len and over
/// window centres c < doc_len whose kernel_size-wide window covers token j
/// (the model's same-padding alignment), floored at 0 since similarities
/// can be negative. Returns doc_len strengths.
std::vector<double> term_opacity(const Matrix& pooled, std::size_t kernel_size, std::size_t query_len,
                                 std::size_t doc_len);

/// Filter-pool stage markup for kernel size l (1 = raw similarity).
MarkupReport filter_pool_markup(const ForwardTrace& trace, std::string doc_id, std::size_t kernel_size);

/// As filter_pool_markup, but only windows that survived k-max pooling count.
MarkupReport kmax_markup(const ForwardTrace& trace, std::string doc_id, std::size_t kernel_size);

MarkupReport markup(const ForwardTrace& trace, std::string doc_id, std::size_t kernel_size, MarkupStage stage);

/// Divides every strength by the maximum strength among reports sharing its
/// (kernel size, stage) across the whole set; a zero maximum gives all-zero
/// opacities.
void normalize_reports(std::span<MarkupReport> reports);

/// k-max output of one trace: for each query term and kernel size, the n_s
/// kept values (negative similarities floored at 0) divided by the grid's
/// global maximum (0-guarded).
struct SignalGrid {
    std::vector<std::string> query_terms;
    std::size_t kernel_count = 0;
    std::size_t n_s = 0;
    double normalizer = 0.0;
    /// [term][kernel - 1][slot]
    std::vector<double> values;

    double at(std::size_t term, std::size_t kernel_size, std::size_t slot) const {
        return values[(term * kernel_count + (kernel_size - 1)) * n_s + slot];
    }
};

SignalGrid signal_grid(const ForwardTrace& trace);

struct SignalSample {
    double strength = 0.0;
    double score = 0.0;
};

struct Bin {
    double signal_low = 0.0;
    double signal_high = 0.0;
    double median_score = 0.0;
    std::size_t count = 0;
};

struct BinnedCurve {
    std::size_t kernel_size = 0;
    /// 1-based top-k position.
    std::size_t position = 0;
    std::vector<Bin> bins;
};

inline constexpr std::size_t kBinCount = 10;

/// One (P[l][i][p-1], score) sample per trace and query row i < query_len.
std::vector<SignalSample> collect_samples(std::span<const ForwardTrace> traces, std::size_t kernel_size,
                                          std::size_t position);

/// Sorts by strength (then score, then input order) and cuts ten contiguous
/// equal-count bins, the first (n mod 10) bins taking one extra sample.
/// Throws pacrr::Error("insufficient samples") below ten samples.
BinnedCurve binned_response(std::span<const SignalSample> samples, std::size_t kernel_size, std::size_t position);

/// Curves for every requested position and every kernel size 1..l_g,
/// position-major.
std::vector<BinnedCurve> binned_curves(std::span<const ForwardTrace> traces, std::span<const std::size_t> positions);

/// Self-contained HTML; each token is a span with style="opacity:X.XX".
std::string render_html(std::span<const MarkupReport> reports);

/// kernel,position,bin_index,signal_low,signal_high,median_score,count
std::string render_curves_csv(std::span<const BinnedCurve> curves);

/// Columns are query terms, rows are kernel sizes; one <g> per cell holding
/// n_s bars.
std::string render_grid_svg(const SignalGrid& grid);

}  // namespace pacrr
