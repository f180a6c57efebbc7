#pragma once

#include "pacrr/matrix.hpp"
#include "pacrr/simmatrix.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace pacrr {

struct ModelConfig {
    std::size_t l_q = 16;
    std::size_t l_d = 256;
    /// Largest kernel size; kernels 2..l_g are convolutions, size 1 is the raw similarity.
    std::size_t l_g = 5;
    /// Filters per convolution kernel.
    std::size_t l_f = 16;
    /// Signals kept per query term and kernel size.
    std::size_t n_s = 10;
    std::size_t lstm_hidden = 8;

    /// Throws pacrr::Error describing the first violated constraint.
    void validate() const;

    std::size_t lstm_input() const { return l_g * n_s; }

    bool operator==(const ModelConfig&) const = default;
};

struct Tensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;

    bool operator==(const Tensor&) const = default;
};

enum class Gate : std::size_t { Input = 0, Forget = 1, Output = 2, Candidate = 3 };
inline constexpr std::size_t kGateCount = 4;

/// Named tensors laid out for a ModelConfig:
///   conv{l}.weight [l, l, l_f] and conv{l}.bias [l_f] for l = 2..l_g,
///   lstm.{i,f,o,g}.weight [hidden, l_g*n_s + hidden], lstm.{i,f,o,g}.bias [hidden],
///   out.weight [hidden], out.bias [1].
/// Convolution weights are indexed [dy][dx][filter]; LSTM weights act on
/// the concatenation [x_t; h_{t-1}].
class TensorBundle {
public:
    const ModelConfig& config() const { return config_; }

    std::span<double> conv_weights(std::size_t size) { return tensors_[conv_index(size)].data; }
    std::span<const double> conv_weights(std::size_t size) const { return tensors_[conv_index(size)].data; }
    std::span<double> conv_bias(std::size_t size) { return tensors_[conv_index(size) + 1].data; }
    std::span<const double> conv_bias(std::size_t size) const { return tensors_[conv_index(size) + 1].data; }

    std::span<double> lstm_weights(Gate g) { return tensors_[lstm_index() + static_cast<std::size_t>(g)].data; }
    std::span<const double> lstm_weights(Gate g) const {
        return tensors_[lstm_index() + static_cast<std::size_t>(g)].data;
    }
    std::span<double> lstm_bias(Gate g) {
        return tensors_[lstm_index() + kGateCount + static_cast<std::size_t>(g)].data;
    }
    std::span<const double> lstm_bias(Gate g) const {
        return tensors_[lstm_index() + kGateCount + static_cast<std::size_t>(g)].data;
    }

    std::span<double> out_weights() { return tensors_[lstm_index() + 2 * kGateCount].data; }
    std::span<const double> out_weights() const { return tensors_[lstm_index() + 2 * kGateCount].data; }
    double& out_bias() { return tensors_[lstm_index() + 2 * kGateCount + 1].data[0]; }
    double out_bias() const { return tensors_[lstm_index() + 2 * kGateCount + 1].data[0]; }

    std::vector<Tensor>& tensors() { return tensors_; }
    const std::vector<Tensor>& tensors() const { return tensors_; }

    bool all_finite() const;
    std::size_t parameter_count() const;

protected:
    TensorBundle() = default;
    explicit TensorBundle(const ModelConfig& config);

    std::size_t conv_index(std::size_t size) const;
    std::size_t lstm_index() const { return 2 * (config_.l_g - 1); }

    ModelConfig config_;
    std::vector<Tensor> tensors_;
};

class ModelParams : public TensorBundle {
public:
    ModelParams() = default;
    /// All-zero parameters.
    explicit ModelParams(const ModelConfig& config) : TensorBundle(config) {}

    /// Every entry drawn from uniform(lo, hi), tensors in layout order.
    static ModelParams uniform(const ModelConfig& config, std::uint64_t seed, double lo = -0.1, double hi = 0.1);

    /// Rebuilds from tensors, checking names and shapes against `config`.
    static ModelParams from_tensors(const ModelConfig& config, std::vector<Tensor> tensors);

    bool operator==(const ModelParams& other) const {
        return config_ == other.config_ && tensors_ == other.tensors_;
    }
};

/// d(loss)/d(parameter), shaped like ModelParams.
class GradientSet : public TensorBundle {
public:
    GradientSet() = default;
    explicit GradientSet(const ModelConfig& config) : TensorBundle(config) {}

    void add_scaled(const GradientSet& other, double scale);
    bool is_zero() const;
};

inline constexpr std::size_t kNoColumn = std::numeric_limits<std::size_t>::max();

struct FilterPooled {
    Matrix values;
    /// Winning filter per cell, row-major; lowest index on ties.
    std::vector<std::size_t> argmax;
};

struct KMaxPooled {
    /// rows x n_s, each row non-increasing.
    Matrix values;
    /// Source column of each kept value, row-major; kNoColumn for right padding.
    std::vector<std::size_t> columns;
};

/// Part of the input known to be non-zero; cells outside it are zero.
struct ActiveRegion {
    std::size_t rows;
    std::size_t cols;
};

/// Same-padded 2-D cross-correlation plus bias, then ReLU. Output keeps the
/// input shape; even sizes put the extra padding after (bottom/right), so
/// output (i, j) reads input rows i - (size-1)/2 .. i + size/2.
Tensor3 conv_same(const Matrix& input, std::size_t size, std::span<const double> weights,
                  std::span<const double> bias, std::size_t filters);
Tensor3 conv_same(const Matrix& input, std::size_t size, std::span<const double> weights,
                  std::span<const double> bias, std::size_t filters, ActiveRegion active);

/// First input offset covered by a window of `size` centred on an output cell.
inline constexpr std::size_t window_before(std::size_t size) { return (size - 1) / 2; }
inline constexpr std::size_t window_after(std::size_t size) { return size / 2; }

FilterPooled filter_pool(const Tensor3& conv_out);

/// Per row, the n_s largest values in non-increasing order; ties go to the
/// smaller column. Rows shorter than n_s are zero-padded on the right.
KMaxPooled kmax_pool(const Matrix& pooled, std::size_t n_s);

/// Row i is P[0][i] ++ P[1][i] ++ ... in kernel-size order.
Matrix assemble(std::span<const Matrix> topk);

struct LstmStep {
    std::vector<double> input_gate;
    std::vector<double> forget_gate;
    std::vector<double> output_gate;
    std::vector<double> candidate;
    std::vector<double> cell;
    std::vector<double> hidden;
};

struct LstmResult {
    double score = 0.0;
    std::vector<LstmStep> steps;
};

/// Runs the LSTM over rows [0, query_len) from a zero state and projects
/// the final hidden state to a scalar.
LstmResult lstm_combine(const Matrix& assembled, const TensorBundle& params, std::size_t query_len);

struct KernelTrace {
    std::size_t size = 0;
    /// l_q x l_d x l_f after ReLU; empty for size 1.
    Tensor3 conv_out;
    /// C: filter-pooled signal (the similarity matrix itself for size 1).
    FilterPooled pooled;
    /// P: k-max pooled signals.
    KMaxPooled topk;
};

struct ForwardTrace {
    SimMatrix sim;
    /// kernels[l - 1] holds kernel size l, l = 1..l_g.
    std::vector<KernelTrace> kernels;
    Matrix assembled;
    std::vector<LstmStep> lstm_states;
    double score = 0.0;

    const KernelTrace& kernel(std::size_t size) const { return kernels.at(size - 1); }
};

ForwardTrace forward(const SimMatrix& sim, const ModelParams& params);

/// Score only; same value as forward(sim, params).score.
double score(const SimMatrix& sim, const ModelParams& params);

}  // namespace pacrr
